#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sublinear/error.hpp"
#include "sublinear/grid.hpp"

namespace sublinear {

class Weight;

namespace weight_form {

/// Named member of the closed-form catalog, see `Weight::catalog_names`.
struct ClosedForm {
    std::string id;
    std::vector<double> params;
};

/// Samples (x_k, a_k) with strictly increasing x, linearly interpolated and
/// held constant beyond the end samples.
struct Tabulated {
    std::vector<double> x;
    std::vector<double> a;
};

/// a(x) = r^(1-2/r) (1 - r cos^2 x) with r = 2/(1-q), on (0, pi).
struct Pex {
    double q = 0.5;
};

/// a = aplus - mu * aminus, both parts nonnegative.
struct ScaledCombination {
    std::shared_ptr<const Weight> aplus;
    std::shared_ptr<const Weight> aminus;
    double mu = 0.0;
};

}  // namespace weight_form

inline double pex_exponent_r(double q) { return 2.0 / (1.0 - q); }

inline double pex_weight_value(double q, double x) {
    const double r = pex_exponent_r(q);
    const double c = std::cos(x);
    return std::pow(r, 1.0 - 2.0 / r) * (1.0 - r * c * c);
}

/// Sign-changing coefficient a(x).
class Weight {
public:
    using Form = std::variant<weight_form::ClosedForm, weight_form::Tabulated, weight_form::Pex,
                              weight_form::ScaledCombination>;

    Weight(Form form, std::string description, double scale = 1.0)
        : form_(std::move(form)), description_(std::move(description)), scale_(scale) {}

    static Weight constant(double c) {
        return Weight(weight_form::ClosedForm{"constant", {c}}, "constant " + fmt(c));
    }

    static Weight pex(double q) {
        if (!(q > 0.0 && q < 1.0)) throw Error(ErrorKind::InvalidArgument, "pex weight needs q in (0,1)");
        return Weight(weight_form::Pex{q}, "pex q=" + fmt(q));
    }

    static Weight closed_form(const std::string& id, std::vector<double> params) {
        const auto& names = catalog_names();
        if (std::find(names.begin(), names.end(), id) == names.end()) {
            throw Error(ErrorKind::InvalidArgument, "unknown weight '" + id + "'");
        }
        auto [lo, hi] = param_count(id);
        if (params.size() < lo || params.size() > hi) {
            throw Error(ErrorKind::InvalidArgument, "weight '" + id + "' takes " + std::to_string(lo) +
                                                        ".." + std::to_string(hi) + " parameters");
        }
        if ((id == "pex_plus" || id == "pex_minus" || id == "pex_extended") &&
            !(params[0] > 0.0 && params[0] < 1.0)) {
            throw Error(ErrorKind::InvalidArgument, id + " needs q in (0,1)");
        }
        std::string desc = id;
        for (double p : params) desc += " " + fmt(p);
        return Weight(weight_form::ClosedForm{id, std::move(params)}, desc);
    }

    static Weight tabulated(std::vector<double> x, std::vector<double> a, std::string description) {
        if (x.size() != a.size() || x.size() < 2) {
            throw Error(ErrorKind::InvalidArgument, "tabulated weight needs >= 2 (x, a) pairs");
        }
        for (std::size_t i = 1; i < x.size(); ++i) {
            if (!(x[i] > x[i - 1])) throw Error(ErrorKind::InvalidArgument, "tabulated x must increase");
        }
        for (double v : a) {
            if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "tabulated a not finite");
        }
        return Weight(weight_form::Tabulated{std::move(x), std::move(a)}, std::move(description));
    }

    static Weight combination(const Weight& aplus, const Weight& aminus, double mu) {
        if (!(mu >= 0.0)) throw Error(ErrorKind::InvalidArgument, "combination needs mu >= 0");
        return Weight(weight_form::ScaledCombination{std::make_shared<const Weight>(aplus),
                                                     std::make_shared<const Weight>(aminus), mu},
                      "(" + aplus.description() + ") - " + fmt(mu) + "*(" + aminus.description() + ")");
    }

    /// c * a.
    Weight scaled(double c) const {
        Weight w = *this;
        w.scale_ *= c;
        w.description_ = fmt(c) + "*(" + description_ + ")";
        return w;
    }

    double operator()(double x) const { return scale_ * eval_unscaled(x); }

    GridFunction on(const Mesh& mesh) const {
        if (const auto* comb = std::get_if<weight_form::ScaledCombination>(&form_)) {
            for (std::size_t i = 0; i < mesh.size(); ++i) {
                if ((*comb->aplus)(mesh.node(i)) < 0.0 || (*comb->aminus)(mesh.node(i)) < 0.0) {
                    throw Error(ErrorKind::InvalidArgument, "combination parts must be nonnegative");
                }
            }
        }
        return GridFunction::sample(mesh, [this](double x) { return (*this)(x); });
    }

    const Form& form() const { return form_; }
    const std::string& description() const { return description_; }
    double scale() const { return scale_; }

    static const std::vector<std::string>& catalog_names() {
        static const std::vector<std::string> names = {
            "constant", "sine", "cosine", "linear", "pex_plus", "pex_minus", "pex_extended"};
        return names;
    }

private:
    static std::string fmt(double v) {
        std::ostringstream os;
        os.precision(6);
        os << v;
        return os.str();
    }

    static std::pair<std::size_t, std::size_t> param_count(const std::string& id) {
        if (id == "constant") return {1, 1};
        if (id == "sine" || id == "cosine") return {1, 3};
        if (id == "linear") return {2, 2};
        if (id == "pex_extended") return {1, 2};
        return {1, 1};
    }

    double eval_unscaled(double x) const {
        using namespace weight_form;
        if (const auto* cf = std::get_if<ClosedForm>(&form_)) return eval_closed(*cf, x);
        if (const auto* pex = std::get_if<Pex>(&form_)) return pex_weight_value(pex->q, x);
        if (const auto* tab = std::get_if<Tabulated>(&form_)) return eval_tabulated(*tab, x);
        const auto& comb = std::get<ScaledCombination>(form_);
        return (*comb.aplus)(x) - comb.mu * (*comb.aminus)(x);
    }

    static double eval_closed(const weight_form::ClosedForm& cf, double x) {
        const auto& p = cf.params;
        auto opt = [&](std::size_t i, double dflt) { return i < p.size() ? p[i] : dflt; };
        if (cf.id == "constant") return p[0];
        if (cf.id == "sine") return opt(2, 1.0) * std::sin(p[0] * x) + opt(1, 0.0);
        if (cf.id == "cosine") return opt(2, 1.0) * std::cos(p[0] * x) + opt(1, 0.0);
        if (cf.id == "linear") return p[0] * x + p[1];
        if (cf.id == "pex_plus") return std::max(pex_weight_value(p[0], x), 0.0);
        if (cf.id == "pex_minus") return std::max(-pex_weight_value(p[0], x), 0.0);
        if (cf.id == "pex_extended") {
            if (x >= 0.0 && x <= kPi) return pex_weight_value(p[0], x);
            return opt(1, -1.0);
        }
        throw Error(ErrorKind::InvalidArgument, "unknown weight '" + cf.id + "'");
    }

    static double eval_tabulated(const weight_form::Tabulated& t, double x) {
        if (x <= t.x.front()) return t.a.front();
        if (x >= t.x.back()) return t.a.back();
        auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
        std::size_t k = static_cast<std::size_t>(it - t.x.begin());
        double s = (x - t.x[k - 1]) / (t.x[k] - t.x[k - 1]);
        return (1.0 - s) * t.a[k - 1] + s * t.a[k];
    }

    Form form_;
    std::string description_;
    double scale_ = 1.0;
};

/// Reads a two-column (x, a) text file; blank lines and '#' comments are skipped.
inline Weight load_tabulated_weight(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open weight table '" + path + "'");
    std::vector<double> xs, as;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double x = 0.0, a = 0.0;
        if (!(ls >> x)) continue;
        std::string extra;
        if (!(ls >> a) || (ls >> extra)) {
            throw Error(ErrorKind::InvalidArgument,
                        path + ":" + std::to_string(lineno) + ": expected two numbers");
        }
        xs.push_back(x);
        as.push_back(a);
    }
    return Weight::tabulated(std::move(xs), std::move(as), "table " + path);
}

struct WeightSplit {
    GridFunction aplus;
    GridFunction aminus;
    std::vector<Subinterval> omega_plus;
    bool changes_sign = false;
};

/// Nodal positive and negative parts and the components of {a > 0}.
/// Component endpoints are linear zero crossings of a between the last
/// nonpositive node and the first positive one (or the domain boundary).
inline WeightSplit split(const Weight& a, const Mesh& mesh) {
    GridFunction values = a.on(mesh);
    const std::size_t size = mesh.size();
    const double tol = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, values.max_abs());

    WeightSplit out{GridFunction(mesh), GridFunction(mesh), {}, false};
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < size; ++i) {
        out.aplus[i] = std::max(values[i], 0.0);
        out.aminus[i] = std::max(-values[i], 0.0);
        has_pos = has_pos || values[i] > tol;
        has_neg = has_neg || values[i] < -tol;
    }
    out.changes_sign = has_pos && has_neg;

    auto crossing = [&](std::size_t outside, std::size_t inside) {
        double a0 = values[outside], a1 = values[inside];
        double t = a1 - a0 > 0.0 ? std::clamp(-a0 / (a1 - a0), 0.0, 1.0) : 0.0;
        double x0 = mesh.node(outside), x1 = mesh.node(inside);
        return x0 + t * (x1 - x0);
    };

    std::size_t i = 0;
    while (i < size) {
        if (values[i] <= tol) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < size && values[j + 1] > tol) ++j;
        double lo = i == 0 ? mesh.left() : crossing(i - 1, i);
        double hi = j + 1 == size ? mesh.right() : crossing(j + 1, j);
        out.omega_plus.push_back({lo, hi});
        i = j + 1;
    }
    return out;
}

namespace nonlinearity_form {

/// f(s) = s^q.
struct Power {
    double q = 0.5;
};

/// User-supplied f with optional derivative.
struct Custom {
    std::string name;
    std::function<double(double)> f;
    std::function<double(double)> df;
};

/// Right-hand side lambda a(x) s^q + s^p.
struct ConcaveConvex {
    double lambda = 1.0;
    double q = 0.5;
    double p = 3.0;
};

}  // namespace nonlinearity_form

/// The nonlinearity enters the equation as a(x) * weighted(s) + unweighted(s);
/// only the concave-convex form has a nonzero unweighted part.
class Nonlinearity {
public:
    using Form = std::variant<nonlinearity_form::Power, nonlinearity_form::Custom,
                              nonlinearity_form::ConcaveConvex>;

    explicit Nonlinearity(Form form, std::optional<double> k_meta = std::nullopt)
        : form_(std::move(form)), k_meta_(k_meta) {}

    static Nonlinearity power(double q) {
        if (!(q >= 0.0 && q < 1.0)) throw Error(ErrorKind::InvalidArgument, "power needs q in [0,1)");
        return Nonlinearity(nonlinearity_form::Power{q}, 0.0);
    }

    static Nonlinearity custom(std::string name, std::function<double(double)> f,
                               std::function<double(double)> df = {},
                               std::optional<double> k_meta = std::nullopt) {
        return Nonlinearity(nonlinearity_form::Custom{std::move(name), std::move(f), std::move(df)}, k_meta);
    }

    static Nonlinearity concave_convex(double lambda, double q, double p) {
        if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidArgument, "concave-convex needs lambda > 0");
        if (!(q > 0.0 && q < 1.0)) throw Error(ErrorKind::InvalidArgument, "concave-convex needs q in (0,1)");
        if (!(p > 1.0)) throw Error(ErrorKind::InvalidArgument, "concave-convex needs p > 1");
        return Nonlinearity(nonlinearity_form::ConcaveConvex{lambda, q, p}, 0.0);
    }

    const Form& form() const { return form_; }
    std::optional<double> k_meta() const { return k_meta_; }

    bool is_power() const { return std::holds_alternative<nonlinearity_form::Power>(form_); }

    /// Exponent of the sublinear term when it is a pure power, otherwise empty.
    std::optional<double> power_exponent() const {
        if (const auto* p = std::get_if<nonlinearity_form::Power>(&form_)) return p->q;
        if (const auto* c = std::get_if<nonlinearity_form::ConcaveConvex>(&form_)) return c->q;
        return std::nullopt;
    }

    /// Multiplier of a(x).
    double weighted(double s) const {
        using namespace nonlinearity_form;
        if (const auto* p = std::get_if<Power>(&form_)) return std::pow(s, p->q);
        if (const auto* c = std::get_if<ConcaveConvex>(&form_)) return c->lambda * std::pow(s, c->q);
        return std::get<Custom>(form_).f(s);
    }

    double weighted_deriv(double s) const {
        using namespace nonlinearity_form;
        if (const auto* p = std::get_if<Power>(&form_)) {
            return p->q == 0.0 ? 0.0 : p->q * std::pow(s, p->q - 1.0);
        }
        if (const auto* c = std::get_if<ConcaveConvex>(&form_)) {
            return c->lambda * c->q * std::pow(s, c->q - 1.0);
        }
        const auto& cu = std::get<Custom>(form_);
        if (cu.df) return cu.df(s);
        const double step = 1e-7 * std::max(1.0, std::abs(s));
        double lo = std::max(0.0, s - step);
        return (cu.f(s + step) - cu.f(lo)) / (s + step - lo);
    }

    double unweighted(double s) const {
        if (const auto* c = std::get_if<nonlinearity_form::ConcaveConvex>(&form_)) return std::pow(s, c->p);
        return 0.0;
    }

    double unweighted_deriv(double s) const {
        if (const auto* c = std::get_if<nonlinearity_form::ConcaveConvex>(&form_)) {
            return c->p * std::pow(s, c->p - 1.0);
        }
        return 0.0;
    }

    double rhs(double a, double s) const { return a * weighted(s) + unweighted(s); }
    double rhs_deriv(double a, double s) const { return a * weighted_deriv(s) + unweighted_deriv(s); }

    /// f(s) as a single function of s (weighted plus unweighted part).
    double operator()(double s) const { return weighted(s) + unweighted(s); }

    std::string description() const {
        using namespace nonlinearity_form;
        std::ostringstream os;
        os.precision(6);
        if (const auto* p = std::get_if<Power>(&form_)) {
            os << "s^" << p->q;
        } else if (const auto* c = std::get_if<ConcaveConvex>(&form_)) {
            os << c->lambda << "*a*s^" << c->q << " + s^" << c->p;
        } else {
            os << std::get<Custom>(form_).name;
        }
        return os.str();
    }

private:
    Form form_;
    std::optional<double> k_meta_;
};

/// Infimum of (f(s)-f(t))/(s-t) over the triangular sample grid
/// 0 <= t < s <= s0 with `samples` points per axis.
inline double k_constant(const Nonlinearity& f, double s0, int samples = 400) {
    if (!(s0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "k_constant needs s0 > 0");
    if (samples < 100) throw Error(ErrorKind::InvalidArgument, "k_constant needs >= 100 samples");
    std::vector<double> s(static_cast<std::size_t>(samples) + 1), fs(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = s0 * static_cast<double>(i) / samples;
        fs[i] = f(s[i]);
    }
    double inf = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = i + 1; j < s.size(); ++j) {
            inf = std::min(inf, (fs[j] - fs[i]) / (s[j] - s[i]));
        }
    }
    return inf;
}

struct SublinearityReport {
    double near_zero_ratio = 0.0;
    double near_infinity_ratio = 0.0;

    bool plausible(double zero_threshold = 100.0, double infinity_threshold = 0.01) const {
        return near_zero_ratio > zero_threshold && near_infinity_ratio < infinity_threshold;
    }
};

inline SublinearityReport sublinearity_report(const Nonlinearity& f) {
    constexpr double small = 1e-6, large = 1e6;
    return {f(small) / small, f(large) / large};
}

struct PexPair {
    Weight weight;
    std::function<double(double)> exact_u;
    double r = 0.0;
};

/// The explicit pair on (0, pi): u = sin^r(x) / r solves -u'' = a u^q with
/// u = u' = 0 at both ends.
inline PexPair pex_pair(double q) {
    if (!(q > 0.0 && q < 1.0)) throw Error(ErrorKind::InvalidArgument, "pex_pair needs q in (0,1)");
    const double r = pex_exponent_r(q);
    return {Weight::pex(q), [r](double x) { return std::pow(std::abs(std::sin(x)), r) / r; }, r};
}

}  // namespace sublinear
