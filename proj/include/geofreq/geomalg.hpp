#pragma once

// Vector operations of the Euclidean Clifford algebra (scalars, vectors and
// bivectors only) and the geometric frequency of a velocity sample.

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "geofreq/errors.hpp"

namespace geofreq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& v, const char* what) {
    if (!v.allFinite()) {
        throw InvalidParameter(std::string(what) + ": non-finite component");
    }
}

template <typename A, typename B>
void require_same_dim(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y,
                      const char* what) {
    if (x.size() != y.size()) {
        throw DimensionError(std::string(what) + ": dimension mismatch (" +
                             std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
    }
    if (x.size() < 1) {
        throw DimensionError(std::string(what) + ": empty vector");
    }
}

}  // namespace detail

/// Antisymmetric grade-2 element of Cl(n). Only the strict upper triangle is
/// stored, row-major over (i, j) with i < j.
class Bivector {
public:
    Bivector() = default;
    explicit Bivector(std::size_t dim)
        : dim_(dim), coeffs_(dim > 1 ? dim * (dim - 1) / 2 : 0, 0.0) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return coeffs_.size(); }

    /// Signed coefficient on e_i ^ e_j for any i, j (antisymmetric, zero diagonal).
    double operator()(std::size_t i, std::size_t j) const {
        if (i == j) return 0.0;
        return i < j ? coeffs_[index(i, j)] : -coeffs_[index(j, i)];
    }

    /// Mutable coefficient for i < j.
    double& at(std::size_t i, std::size_t j) { return coeffs_[index(i, j)]; }

    const std::vector<double>& coefficients() const noexcept { return coeffs_; }

    double norm() const noexcept {
        double s = 0.0;
        for (double c : coeffs_) s += c * c;
        return std::sqrt(s);
    }

    /// Coefficient on e1 ^ e2; positive for counter-clockwise rotation.
    double e12() const {
        if (dim_ < 2) throw DimensionError("Bivector::e12: dimension < 2");
        return coeffs_[0];
    }

    Bivector& operator*=(double s) noexcept {
        for (double& c : coeffs_) c *= s;
        return *this;
    }

private:
    std::size_t index(std::size_t i, std::size_t j) const {
        if (i >= j || j >= dim_) throw DimensionError("Bivector: index out of range");
        // rows 0..i-1 hold (dim-1) + (dim-2) + ... + (dim-i) entries
        return i * dim_ - i * (i + 1) / 2 + (j - i - 1);
    }

    std::size_t dim_ = 0;
    std::vector<double> coeffs_;
};

/// Scalar plus e1^e2 bivector; isomorphic to scalar + bivector * j.
struct Multivector2 {
    double scalar = 0.0;
    double bivector = 0.0;

    std::complex<double> as_complex() const { return {scalar, bivector}; }
    bool is_finite() const { return std::isfinite(scalar) && std::isfinite(bivector); }
};

struct GeomFreqSample {
    double rho = std::numeric_limits<double>::quiet_NaN();
    Bivector omega;
    double omega_norm = std::numeric_limits<double>::quiet_NaN();
    bool valid = false;
};

/// |u| below this is treated as an equilibrium sample.
inline double degeneracy_threshold(double du_norm) noexcept { return 1e-12 * (1.0 + du_norm); }

template <typename A, typename B>
double inner(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
    detail::require_same_dim(x, y, "inner");
    return x.dot(y);
}

/// x ^ y = x (x) y - y (x) x, stored as its strict upper triangle.
template <typename A, typename B>
Bivector wedge(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
    detail::require_same_dim(x, y, "wedge");
    const auto n = static_cast<std::size_t>(x.size());
    if (n < 2) throw DimensionError("wedge: undefined for dimension < 2");
    Bivector b(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            b.at(i, j) = x(i) * y(j) - x(j) * y(i);
        }
    }
    return b;
}

template <typename A, typename B>
Multivector2 geometric_product_2d(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
    detail::require_same_dim(x, y, "geometric_product_2d");
    if (x.size() != 2) throw DimensionError("geometric_product_2d: vectors must be 2D");
    detail::require_finite(x, "geometric_product_2d");
    detail::require_finite(y, "geometric_product_2d");
    return {x.dot(y), x(0) * y(1) - x(1) * y(0)};
}

/// Symmetric (rho) and antisymmetric (omega) parts of u u' / |u|^2.
/// Samples with |u| under the degeneracy threshold come back with valid=false.
template <typename A, typename B>
GeomFreqSample geometric_frequency(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& du) {
    detail::require_same_dim(u, du, "geometric_frequency");
    detail::require_finite(u, "geometric_frequency");
    detail::require_finite(du, "geometric_frequency");

    const auto n = static_cast<std::size_t>(u.size());
    GeomFreqSample s;
    const double unorm = u.norm();
    if (unorm < degeneracy_threshold(du.norm())) {
        s.omega = Bivector(n);
        s.omega *= std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    const double inv = 1.0 / (unorm * unorm);
    s.rho = u.dot(du) * inv;
    if (n >= 2) {
        s.omega = wedge(u, du);
        s.omega *= inv;
        s.omega_norm = s.omega.norm();
    } else {
        s.omega = Bivector(n);
        s.omega_norm = 0.0;
    }
    s.valid = true;
    return s;
}

/// Complex frequency |u|'/|u| + theta' j of a planar velocity.
template <typename A, typename B>
Multivector2 complex_frequency(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& du) {
    detail::require_same_dim(u, du, "complex_frequency");
    if (u.size() != 2) throw DimensionError("complex_frequency: vectors must be 2D");
    detail::require_finite(u, "complex_frequency");
    detail::require_finite(du, "complex_frequency");

    const double n2 = u(0) * u(0) + u(1) * u(1);
    if (std::sqrt(n2) < degeneracy_threshold(du.norm())) {
        constexpr double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan};
    }
    return {(u(0) * du(0) + u(1) * du(1)) / n2, (u(0) * du(1) - u(1) * du(0)) / n2};
}

}  // namespace geofreq
