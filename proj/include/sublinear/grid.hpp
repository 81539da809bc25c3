#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sublinear/error.hpp"

namespace sublinear {

inline constexpr double kPi = 3.14159265358979323846;

enum class GeometryKind { Interval, Radial };

/// An interval (left, right), or a ball of radius `right` in `dimension`
/// space dimensions described by its radial coordinate (left is then 0).
struct Geometry {
    GeometryKind kind = GeometryKind::Interval;
    int dimension = 1;
    double left = 0.0;
    double right = kPi;

    static Geometry interval(double left, double right) {
        if (!(right - left > 0.0) || !std::isfinite(left) || !std::isfinite(right)) {
            throw Error(ErrorKind::InvalidArgument, "interval requires right > left");
        }
        return Geometry{GeometryKind::Interval, 1, left, right};
    }

    static Geometry radial(int dimension, double radius) {
        if (dimension < 1) throw Error(ErrorKind::InvalidArgument, "radial dimension must be >= 1");
        if (!(radius > 0.0) || !std::isfinite(radius)) {
            throw Error(ErrorKind::InvalidArgument, "radial radius must be positive");
        }
        return Geometry{GeometryKind::Radial, dimension, 0.0, radius};
    }

    bool is_radial() const { return kind == GeometryKind::Radial; }
    double length() const { return right - left; }
};

enum class BoundaryKind { Dirichlet, Neumann };

/// For radial geometries the kind applies at the outer radius; the center
/// always carries the symmetry condition.
struct BoundaryCondition {
    BoundaryKind kind = BoundaryKind::Dirichlet;

    static BoundaryCondition dirichlet() { return {BoundaryKind::Dirichlet}; }
    static BoundaryCondition neumann() { return {BoundaryKind::Neumann}; }
    bool is_dirichlet() const { return kind == BoundaryKind::Dirichlet; }
    bool operator==(const BoundaryCondition&) const = default;
};

inline std::string to_string(BoundaryKind kind) {
    return kind == BoundaryKind::Dirichlet ? "dirichlet" : "neumann";
}

/// Open subinterval (lo, hi) of the domain.
struct Subinterval {
    double lo = 0.0;
    double hi = 0.0;

    double length() const { return hi - lo; }
    bool contains(double x) const { return x > lo && x < hi; }
    bool operator==(const Subinterval&) const = default;
};

class Mesh {
public:
    static constexpr int kMinIntervals = 8;

    Mesh() = default;

    Mesh(Geometry geometry, int n) : geometry_(geometry), n_(n) {
        if (n < kMinIntervals) {
            throw Error(ErrorKind::InvalidArgument,
                        "mesh needs n >= " + std::to_string(kMinIntervals) + " subintervals, got " +
                            std::to_string(n));
        }
        h_ = geometry_.length() / static_cast<double>(n_);
    }

    const Geometry& geometry() const { return geometry_; }
    int n() const { return n_; }
    std::size_t size() const { return static_cast<std::size_t>(n_) + 1; }
    double h() const { return h_; }
    double left() const { return geometry_.left; }
    double right() const { return geometry_.right; }

    double node(std::size_t i) const {
        if (i == static_cast<std::size_t>(n_)) return geometry_.right;
        return geometry_.left + static_cast<double>(i) * h_;
    }

    std::vector<double> nodes() const {
        std::vector<double> x(size());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = node(i);
        return x;
    }

    /// Nearest node index at or above x.
    std::size_t ceil_index(double x) const {
        double t = (x - geometry_.left) / h_;
        auto i = static_cast<long>(std::ceil(t - 1e-9));
        return static_cast<std::size_t>(std::clamp<long>(i, 0, n_));
    }

    /// Nearest node index at or below x.
    std::size_t floor_index(double x) const {
        double t = (x - geometry_.left) / h_;
        auto i = static_cast<long>(std::floor(t + 1e-9));
        return static_cast<std::size_t>(std::clamp<long>(i, 0, n_));
    }

    bool operator==(const Mesh& other) const {
        return geometry_.kind == other.geometry_.kind &&
               geometry_.dimension == other.geometry_.dimension &&
               geometry_.left == other.geometry_.left && geometry_.right == other.geometry_.right &&
               n_ == other.n_;
    }

private:
    Geometry geometry_{};
    int n_ = kMinIntervals;
    double h_ = kPi / kMinIntervals;
};

inline Mesh build_mesh(const Geometry& geometry, int n) { return Mesh(geometry, n); }

/// Nodal values on a mesh. Values must stay finite.
class GridFunction {
public:
    GridFunction() = default;

    explicit GridFunction(const Mesh& mesh, double fill = 0.0)
        : mesh_(mesh), values_(mesh.size(), fill) {}

    GridFunction(const Mesh& mesh, std::vector<double> values) : mesh_(mesh), values_(std::move(values)) {
        if (values_.size() != mesh_.size()) {
            throw Error(ErrorKind::InvalidArgument, "grid function length must equal n+1");
        }
        for (double v : values_) {
            if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "grid function value not finite");
        }
    }

    template <typename F>
    static GridFunction sample(const Mesh& mesh, F&& fn) {
        std::vector<double> v(mesh.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(mesh.node(i));
        return GridFunction(mesh, std::move(v));
    }

    const Mesh& mesh() const { return mesh_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    const std::vector<double>& vec() const { return values_; }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }
    double min() const { return *std::min_element(values_.begin(), values_.end()); }
    double max() const { return *std::max_element(values_.begin(), values_.end()); }

    GridFunction& operator*=(double c) {
        for (double& v : values_) v *= c;
        return *this;
    }
    friend GridFunction operator*(double c, GridFunction u) { return u *= c; }

    friend GridFunction operator-(const GridFunction& a, const GridFunction& b) {
        GridFunction out = a;
        for (std::size_t i = 0; i < out.size(); ++i) out.values_[i] -= b.values_[i];
        return out;
    }
    friend GridFunction operator+(const GridFunction& a, const GridFunction& b) {
        GridFunction out = a;
        for (std::size_t i = 0; i < out.size(); ++i) out.values_[i] += b.values_[i];
        return out;
    }

private:
    Mesh mesh_{};
    std::vector<double> values_{};
};

inline double sup_distance(const GridFunction& a, const GridFunction& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

/// Second-order one-sided derivative estimates at the two endpoints,
/// d/dx (not outward normal).
inline std::pair<double, double> boundary_derivatives(const GridFunction& u) {
    const Mesh& m = u.mesh();
    const std::size_t n = static_cast<std::size_t>(m.n());
    const double h = m.h();
    double left = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
    double right = (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) / (2.0 * h);
    return {left, right};
}

namespace detail {

// Composite Simpson for even n, trapezoid otherwise.
inline double quadrature(std::span<const double> f, double h) {
    const std::size_t n = f.size() - 1;
    if (n % 2 == 0) {
        double odd = 0.0, even = 0.0;
        for (std::size_t i = 1; i < n; i += 2) odd += f[i];
        for (std::size_t i = 2; i < n; i += 2) even += f[i];
        return h / 3.0 * (f[0] + f[n] + 4.0 * odd + 2.0 * even);
    }
    double s = 0.5 * (f[0] + f[n]);
    for (std::size_t i = 1; i < n; ++i) s += f[i];
    return h * s;
}

}  // namespace detail

inline double integrate(const GridFunction& u) { return detail::quadrature(u.values(), u.mesh().h()); }

/// Integral with respect to the domain measure: plain dx on an interval,
/// rho^(N-1) d rho on a radial mesh (the sphere-area constant is dropped).
inline double integrate_measure(const GridFunction& u) {
    const Mesh& m = u.mesh();
    if (!m.geometry().is_radial() || m.geometry().dimension == 1) return integrate(u);
    std::vector<double> w(u.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = u[i] * std::pow(m.node(i), m.geometry().dimension - 1);
    }
    return detail::quadrature(w, m.h());
}

/// Discrete L^r norm (r >= 1) using the mesh quadrature.
inline double lr_norm(const GridFunction& u, double r) {
    if (!(r >= 1.0)) throw Error(ErrorKind::InvalidArgument, "L^r norm needs r >= 1");
    std::vector<double> w(u.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::pow(std::abs(u[i]), r);
    return std::pow(integrate_measure(GridFunction(u.mesh(), std::move(w))), 1.0 / r);
}

/// Discrete H^1 seminorm sqrt(sum (u_{i+1}-u_i)^2 / h).
inline double h1_seminorm(const GridFunction& u) {
    const double h = u.mesh().h();
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < u.size(); ++i) {
        double d = u[i + 1] - u[i];
        s += d * d / h;
    }
    return std::sqrt(s);
}

}  // namespace sublinear
