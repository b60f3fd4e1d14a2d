#pragma once

// The example circuits as state-space models:
//   RC              state (v)
//   series RLC      state (i, v)
//   RLC || RC       state (v_C1, i_L, v_C2)
//   tunnel diode    state (v_C, i_L)

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "geofreq/dynsys.hpp"
#include "geofreq/errors.hpp"

namespace geofreq {

struct RcParams {
    double R = 1.0;
    double C = 1.0;
    double V_dc = 1.0;
    bool operator==(const RcParams&) const = default;
};

struct RlcParams {
    double R = 1.0;
    double L = 1.0;
    double C = 1.0;
    double V_dc = 1.0;
    bool operator==(const RlcParams&) const = default;

    bool underdamped() const { return R * R < 4.0 * L / C; }
};

struct ThirdOrderParams {
    double R1 = 1.0;
    double R2 = 1.0;
    double L = 1.0;
    double C1 = 0.5;
    double C2 = 1.0;
    double V_dc = 1.0;
    bool operator==(const ThirdOrderParams&) const = default;
};

/// Quintic characteristic i_R(v) = c1 v + c2 v^2 + ... + c5 v^5 (no constant
/// term, so i_R(0) = 0). Calibrated so that the shipped scenarios show the
/// monotonic, oscillatory, isotropic, limit-cycle and bistable regimes.
inline constexpr std::array<double, 5> kDefaultDiodePoly{2.774, -10.527, -16.571, 48.325, 85.305};

struct TunnelDiodeParams {
    double L = 1.0;
    double C = 0.5;
    double R = 0.2;
    double V_dc = 0.5;
    std::vector<double> diode_poly{kDefaultDiodePoly.begin(), kDefaultDiodePoly.end()};
    // interval on which the N shape is validated
    double v_min = 0.0;
    double v_max = 1.0;
    bool operator==(const TunnelDiodeParams&) const = default;
};

/// i_R(v) and di_R/dv for a polynomial without constant term.
class DiodeCharacteristic {
public:
    explicit DiodeCharacteristic(std::vector<double> coeffs) : c_(std::move(coeffs)) {}

    double current(double v) const {
        double acc = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = (acc + *it) * v;
        return acc;
    }

    double slope(double v) const {
        double acc = 0.0;
        for (std::size_t m = c_.size(); m >= 1; --m) acc = acc * v + static_cast<double>(m) * c_[m - 1];
        return acc;
    }

    const std::vector<double>& coefficients() const noexcept { return c_; }

    /// Number of sign changes of the slope on [a, b] (dense scan).
    int slope_sign_changes(double a, double b, int samples = 4000) const {
        int changes = 0;
        int prev = 0;
        for (int k = 0; k <= samples; ++k) {
            const double v = a + (b - a) * static_cast<double>(k) / samples;
            const double s = slope(v);
            const int sign = s > 0 ? 1 : (s < 0 ? -1 : 0);
            if (sign != 0) {
                if (prev != 0 && sign != prev) ++changes;
                prev = sign;
            }
        }
        return changes;
    }

private:
    std::vector<double> c_;
};

namespace detail {
inline void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw InvalidParameter(std::string(name) + " must be positive and finite");
    }
}
}  // namespace detail

inline SystemModel build_rc(const RcParams& p) {
    detail::require_positive(p.R, "R");
    detail::require_positive(p.C, "C");
    detail::require_positive(p.V_dc, "V_dc");
    const double tau = p.R * p.C;
    Mat A(1, 1);
    A << -1.0 / tau;
    Vec b(1);
    b << p.V_dc / tau;
    return SystemModel::affine(A, b);
}

inline SystemModel build_rlc(const RlcParams& p) {
    detail::require_positive(p.R, "R");
    detail::require_positive(p.L, "L");
    detail::require_positive(p.C, "C");
    detail::require_positive(p.V_dc, "V_dc");
    Mat A(2, 2);
    A << -p.R / p.L, -1.0 / p.L,
         1.0 / p.C, 0.0;
    Vec b(2);
    b << p.V_dc / p.L, 0.0;
    return SystemModel::affine(A, b);
}

inline SystemModel build_third_order(const ThirdOrderParams& p) {
    detail::require_positive(p.R1, "R1");
    detail::require_positive(p.R2, "R2");
    detail::require_positive(p.L, "L");
    detail::require_positive(p.C1, "C1");
    detail::require_positive(p.C2, "C2");
    detail::require_positive(p.V_dc, "V_dc");
    const double tau2 = p.R2 * p.C2;
    Mat A(3, 3);
    A << 0.0, 1.0 / p.C1, 0.0,
         -1.0 / p.L, -p.R1 / p.L, 0.0,
         0.0, 0.0, -1.0 / tau2;
    Vec b(3);
    b << 0.0, p.V_dc / p.L, p.V_dc / tau2;
    return SystemModel::affine(A, b);
}

/// Throws InvalidParameter unless the characteristic is N-shaped (slope
/// sign + / - / +) on [v_min, v_max].
inline void validate_diode(const TunnelDiodeParams& p) {
    if (p.diode_poly.empty()) throw InvalidParameter("diode_poly: no coefficients");
    for (double c : p.diode_poly) {
        if (!std::isfinite(c)) throw InvalidParameter("diode_poly: non-finite coefficient");
    }
    if (!(p.v_max > p.v_min)) throw InvalidParameter("diode interval: v_max must exceed v_min");
    const DiodeCharacteristic d(p.diode_poly);
    if (!(d.slope(p.v_min) > 0.0) || !(d.slope(p.v_max) > 0.0) ||
        d.slope_sign_changes(p.v_min, p.v_max) != 2) {
        throw InvalidParameter("diode_poly: characteristic is not N-shaped on the operating interval");
    }
}

inline SystemModel build_tunnel_diode(const TunnelDiodeParams& p) {
    detail::require_positive(p.L, "L");
    detail::require_positive(p.C, "C");
    detail::require_positive(p.R, "R");
    detail::require_positive(p.V_dc, "V_dc");
    validate_diode(p);
    const DiodeCharacteristic d(p.diode_poly);
    const double L = p.L, C = p.C, R = p.R, V = p.V_dc;
    auto flow = [d, L, C, R, V](const Vec& x) -> Vec {
        Vec dx(2);
        dx << (-d.current(x(0)) + x(1)) / C, (V - R * x(1) - x(0)) / L;
        return dx;
    };
    auto jac = [d, L, C, R](const Vec& x) -> Mat {
        Mat J(2, 2);
        J << -d.slope(x(0)) / C, 1.0 / C,
             -1.0 / L, -R / L;
        return J;
    };
    return SystemModel(2, flow, JacobianFn(jac));
}

}  // namespace geofreq
