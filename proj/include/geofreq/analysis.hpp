#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "geofreq/dynsys.hpp"
#include "geofreq/errors.hpp"
#include "geofreq/geomalg.hpp"
#include "geofreq/modal.hpp"

namespace geofreq {

/// Geometric frequency of one modal block along a trajectory.
struct BlockSeries {
    BlockDesc block;
    std::vector<double> rho;
    std::vector<double> omega;  // signed e1^e2 coefficient; 0 for real blocks
};

/// Per-sample analytics, aligned with the source trajectory.
struct AnalysisSeries {
    std::vector<double> times;
    std::vector<double> rho;
    std::vector<double> omega_norm;
    std::vector<char> valid;
    // eig_re[j][k]: real part of Jacobian eigenvalue trace j at sample k
    std::vector<std::vector<double>> eig_re;
    std::vector<std::vector<double>> eig_im;
    std::vector<int> real_count;
    // sample k where the number of real Jacobian eigenvalues differs from sample k-1
    std::vector<char> switch_flag;
    std::vector<BlockSeries> blocks;
    std::optional<RealModalForm> modal;

    std::size_t size() const noexcept { return times.size(); }
    std::size_t dim() const noexcept { return eig_re.size(); }
};

struct AnalysisOptions {
    bool modal = false;  // affine models only
};

namespace detail {

/// Greedy nearest-neighbour assignment of `next` onto the previous traces.
inline CVec match_traces(const CVec& prev, const CVec& next) {
    const Eigen::Index n = prev.size();
    CVec out(n);
    std::vector<bool> used_prev(static_cast<std::size_t>(n), false);
    std::vector<bool> used_next(static_cast<std::size_t>(n), false);
    for (Eigen::Index round = 0; round < n; ++round) {
        double best = std::numeric_limits<double>::infinity();
        Eigen::Index bj = -1, bi = -1;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (used_prev[static_cast<std::size_t>(j)]) continue;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (used_next[static_cast<std::size_t>(i)]) continue;
                const double d = std::abs(prev(j) - next(i));
                if (d < best) {
                    best = d;
                    bj = j;
                    bi = i;
                }
            }
        }
        used_prev[static_cast<std::size_t>(bj)] = true;
        used_next[static_cast<std::size_t>(bi)] = true;
        out(bj) = next(bi);
    }
    return out;
}

inline int count_real(const CVec& lambda) {
    int r = 0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda(i).imag() == 0.0) ++r;
    }
    return r;
}

}  // namespace detail

inline AnalysisSeries analyze_trajectory(const Trajectory& traj, const SystemModel& model,
                                         AnalysisOptions opts = {}) {
    if (traj.empty()) throw InvalidParameter("analyze_trajectory: empty trajectory");
    const std::size_t n = model.dim();
    const std::size_t K = traj.size();
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();

    AnalysisSeries s;
    s.times = traj.times;
    s.rho.reserve(K);
    s.omega_norm.reserve(K);
    s.valid.reserve(K);
    s.eig_re.assign(n, std::vector<double>(K));
    s.eig_im.assign(n, std::vector<double>(K));
    s.real_count.resize(K);
    s.switch_flag.assign(K, 0);

    if (opts.modal && model.is_affine()) {
        s.modal = real_modal_form(model.A());
        for (const auto& b : s.modal->blocks) s.blocks.push_back({b, {}, {}});
    }

    CVec prev;
    for (std::size_t k = 0; k < K; ++k) {
        const Vec& u = traj.velocities[k];
        const Vec& du = traj.accelerations[k];
        const GeomFreqSample g = geometric_frequency(u, du);
        s.rho.push_back(g.rho);
        s.omega_norm.push_back(g.omega_norm);
        s.valid.push_back(g.valid ? 1 : 0);

        const CVec ordered =
            model.is_affine() && k > 0 ? prev : ordered_eigenvalues(model.jacobian(traj.states[k]));
        s.real_count[k] = detail::count_real(ordered);
        const CVec traces = k == 0 ? ordered : detail::match_traces(prev, ordered);
        for (std::size_t j = 0; j < n; ++j) {
            s.eig_re[j][k] = traces(static_cast<Eigen::Index>(j)).real();
            s.eig_im[j][k] = traces(static_cast<Eigen::Index>(j)).imag();
        }
        if (k > 0 && s.real_count[k] != s.real_count[k - 1]) s.switch_flag[k] = 1;
        prev = traces;

        for (auto& bs : s.blocks) {
            const auto off = static_cast<Eigen::Index>(bs.block.offset);
            const auto sz = static_cast<Eigen::Index>(bs.block.size);
            const Vec zeta = s.modal->W.middleRows(off, sz) * u;
            const Vec dzeta = s.modal->W.middleRows(off, sz) * du;
            const Multivector2 cf = block_complex_frequency(bs.block, zeta, dzeta);
            bs.rho.push_back(cf.scalar);
            bs.omega.push_back(bs.block.size == 2 ? cf.bivector : (cf.is_finite() ? 0.0 : nan));
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// Modal participation and asymptotic forecast
// ---------------------------------------------------------------------------

struct ModalProjection {
    CVec coefficients;          // c_j = l_j u(0), in spectrum order
    std::size_t dominant = 0;   // index into the spectrum's eigenvalue list
    bool dominant_is_pair = false;
    // Semi-axes of the dominant pair's velocity ellipse, c1 >= c2, and
    // their ratios. Only set when the dominant mode is a pair.
    std::optional<double> c1, c2, c12, c21;
};

namespace detail {

inline std::vector<std::size_t> excited_modes(const Spectrum& sp, const CVec& c) {
    const double cmax = c.size() > 0 ? c.cwiseAbs().maxCoeff() : 0.0;
    std::vector<std::size_t> modes;
    for (std::size_t j = 0; j < sp.dim(); ++j) {
        const bool conj_member = j >= sp.real_count() && (j - sp.real_count()) % 2 == 1;
        if (conj_member) continue;
        if (cmax == 0.0 || std::abs(c(static_cast<Eigen::Index>(j))) > 1e-12 * cmax) modes.push_back(j);
    }
    return modes;
}

}  // namespace detail

inline ModalProjection modal_projection(const Spectrum& sp, const Vec& u0) {
    if (static_cast<std::size_t>(u0.size()) != sp.dim()) {
        throw DimensionError("modal_projection: u0 dimension does not match the spectrum");
    }
    ModalProjection p;
    p.coefficients = sp.left * u0.cast<cplx>();
    const auto modes = detail::excited_modes(sp, p.coefficients);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j : modes) {
        const double re = sp.eigenvalues(static_cast<Eigen::Index>(j)).real();
        if (re > best) {
            best = re;
            p.dominant = j;
        }
    }
    p.dominant_is_pair = p.dominant >= sp.real_count();
    if (p.dominant_is_pair) {
        const auto j = static_cast<Eigen::Index>(p.dominant);
        Eigen::Matrix<double, Eigen::Dynamic, 2> axes(sp.right.rows(), 2);
        axes.col(0) = sp.right.col(j).real();
        axes.col(1) = sp.right.col(j).imag();
        Eigen::JacobiSVD<Eigen::Matrix<double, Eigen::Dynamic, 2>> svd(axes);
        const double amp = 2.0 * std::abs(p.coefficients(j));
        const double s1 = svd.singularValues()(0);
        const double s2 = svd.singularValues()(1);
        p.c1 = amp * s1;
        p.c2 = amp * s2;
        p.c12 = s2 > 0.0 ? s1 / s2 : std::numeric_limits<double>::infinity();
        p.c21 = s2 / s1;
    }
    return p;
}

/// u(t) = sum_j c_j exp(lambda_j t) r_j for the linear system u' = A u.
inline Vec reconstruct_velocity(const Spectrum& sp, const ModalProjection& proj, double t) {
    CVec acc = CVec::Zero(static_cast<Eigen::Index>(sp.dim()));
    for (Eigen::Index j = 0; j < acc.size(); ++j) {
        acc += proj.coefficients(j) * std::exp(sp.eigenvalues(j) * t) * sp.right.col(j);
    }
    return acc.real();
}

struct AsymptoteForecast {
    enum class Kind { RealDominant, PairDominant };

    Kind kind = Kind::RealDominant;
    double rho_target = 0.0;    // mu_1 or alpha
    double omega_target = 0.0;  // 0 or beta
    double rho_min = 0.0, rho_max = 0.0;
    double omega_min = 0.0, omega_max = 0.0;
    double c12 = 1.0, c21 = 1.0;
    bool isotropic = false;

    /// Oscillation period of the dominant pair, 0 for a real mode.
    double period() const {
        return kind == Kind::PairDominant && omega_target > 0.0 ? 2.0 * std::numbers::pi / omega_target : 0.0;
    }
};

/// Limits of rho and |omega| as the trajectory settles onto the dominant mode.
/// For a pair the velocity traces an ellipse with semi-axis ratio c12, and
/// rho = alpha + beta (c21 - c12) eta sigma / (eta^2 + sigma^2),
/// |omega| = beta (c21 eta^2 + c12 sigma^2) / (eta^2 + sigma^2).
inline AsymptoteForecast predict_asymptote(const Spectrum& sp, const ModalProjection& proj) {
    const auto modes = detail::excited_modes(sp, proj.coefficients);
    const double dom = sp.eigenvalues(static_cast<Eigen::Index>(proj.dominant)).real();
    for (std::size_t j : modes) {
        if (j == proj.dominant) continue;
        const double re = sp.eigenvalues(static_cast<Eigen::Index>(j)).real();
        if (dom - re <= 1e-9) {
            std::ostringstream os;
            os << "no strictly dominant mode: real parts " << dom << " and " << re;
            throw AmbiguousDominance(os.str());
        }
    }

    AsymptoteForecast f;
    const double beta = sp.eigenvalues(static_cast<Eigen::Index>(proj.dominant)).imag();
    if (!proj.dominant_is_pair || beta == 0.0) {
        f.kind = AsymptoteForecast::Kind::RealDominant;
        f.rho_target = f.rho_min = f.rho_max = dom;
        f.isotropic = true;
        return f;
    }
    f.kind = AsymptoteForecast::Kind::PairDominant;
    f.rho_target = dom;
    f.omega_target = beta;
    f.c12 = proj.c12.value_or(1.0);
    f.c21 = proj.c21.value_or(1.0);
    // max |eta sigma / (eta^2 + sigma^2)| = 1/2
    const double rho_amp = std::abs(beta * (f.c12 - f.c21)) * 0.5;
    f.rho_min = dom - rho_amp;
    f.rho_max = dom + rho_amp;
    f.omega_min = beta * std::min(f.c12, f.c21);
    f.omega_max = beta * std::max(f.c12, f.c21);
    f.isotropic = std::abs(f.c12 - f.c21) <= 1e-9 * std::max(f.c12, 1.0);
    return f;
}

// ---------------------------------------------------------------------------
// Tail comparison
// ---------------------------------------------------------------------------

struct TailOptions {
    double window = 0.2;            // fraction of the horizon
    double rho_rel_tol = 0.01;
    double omega_tol = 1e-3;        // absolute when the target is 0, relative otherwise
    int min_sign_changes = 0;       // about the target, for rho and |omega|
};

struct TailReport {
    double t_start = 0.0, t_end = 0.0;
    std::size_t samples = 0;
    double rho_mean = 0.0, rho_std = 0.0;
    double omega_mean = 0.0, omega_std = 0.0, omega_max = 0.0;
    double rho_target = 0.0, omega_target = 0.0;
    double rho_error = 0.0;    // relative
    double omega_error = 0.0;  // relative, or tail max when the target is 0
    int rho_sign_changes = 0, omega_sign_changes = 0;
    bool rho_ok = false, omega_ok = false, oscillation_ok = false;
    bool pass = false;
    std::string note;
};

namespace detail {

inline int sign_changes(const std::vector<double>& v, double target) {
    int changes = 0, prev = 0;
    for (double x : v) {
        const int s = x > target ? 1 : (x < target ? -1 : 0);
        if (s != 0) {
            if (prev != 0 && s != prev) ++changes;
            prev = s;
        }
    }
    return changes;
}

/// Time average by the trapezoid rule over consecutive samples.
inline double time_average(const std::vector<double>& t, const std::vector<double>& v) {
    if (t.size() < 2) return v.empty() ? std::numeric_limits<double>::quiet_NaN() : v.front();
    double acc = 0.0;
    for (std::size_t k = 1; k < t.size(); ++k) acc += 0.5 * (v[k] + v[k - 1]) * (t[k] - t[k - 1]);
    return acc / (t.back() - t.front());
}

inline double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace detail

/// Compares the last `window` of the series with a forecast. For oscillatory
/// forecasts the window is shortened to a whole number of half periods pi/beta
/// so that time averages are not biased by a partial oscillation.
inline TailReport compare_tail(const AnalysisSeries& s, const AsymptoteForecast& f, const TailOptions& opts) {
    if (!(opts.window > 0.0 && opts.window <= 1.0)) {
        throw InvalidParameter("compare_tail: window must lie in (0, 1]");
    }
    if (s.size() < 2) throw InsufficientTail("compare_tail: series too short");
    TailReport r;
    r.rho_target = f.rho_target;
    r.omega_target = f.omega_target;
    r.t_end = s.times.back();
    const double horizon = s.times.back() - s.times.front();
    r.t_start = r.t_end - opts.window * horizon;
    if (f.kind == AsymptoteForecast::Kind::PairDominant && f.omega_target > 0.0) {
        const double half = std::numbers::pi / f.omega_target;
        const double halves = std::floor((r.t_end - r.t_start) / half);
        if (halves >= 1.0) {
            r.t_start = r.t_end - halves * half;
        } else {
            r.note += "tail window shorter than half an oscillation; ";
        }
    }

    std::vector<double> t, rho, om;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s.times[k] + 1e-12 < r.t_start || !s.valid[k]) continue;
        t.push_back(s.times[k]);
        rho.push_back(s.rho[k]);
        om.push_back(s.omega_norm[k]);
    }
    if (t.size() < 2) throw InsufficientTail("compare_tail: fewer than two valid samples in the tail");
    r.samples = t.size();
    r.rho_mean = detail::time_average(t, rho);
    r.omega_mean = detail::time_average(t, om);
    r.rho_std = detail::stddev(rho);
    r.omega_std = detail::stddev(om);
    r.omega_max = *std::max_element(om.begin(), om.end());

    r.rho_error = std::abs(r.rho_mean - f.rho_target) / std::max(std::abs(f.rho_target), 1e-300);
    r.rho_ok = r.rho_error < opts.rho_rel_tol;
    if (f.omega_target == 0.0) {
        r.omega_error = r.omega_max;
        r.omega_ok = r.omega_max < opts.omega_tol;
    } else {
        r.omega_error = std::abs(r.omega_mean - f.omega_target) / f.omega_target;
        r.omega_ok = r.omega_error < opts.omega_tol;
    }
    r.rho_sign_changes = detail::sign_changes(rho, f.rho_target);
    r.omega_sign_changes = detail::sign_changes(om, f.omega_target);
    r.oscillation_ok = r.rho_sign_changes >= opts.min_sign_changes &&
                       (f.omega_target == 0.0 || r.omega_sign_changes >= opts.min_sign_changes);
    r.pass = r.rho_ok && r.omega_ok && r.oscillation_ok;
    if (f.kind == AsymptoteForecast::Kind::PairDominant) {
        r.note += "oscillatory forecast uses the principal axes of the dominant mode's velocity ellipse; "
                  "ranges are exact for linear dynamics and asymptotic otherwise";
    }
    return r;
}

// ---------------------------------------------------------------------------
// Limit cycles
// ---------------------------------------------------------------------------

struct LimitCycleOptions {
    double transient_fraction = 0.5;
    int min_periods = 3;
    double spread_tol = 0.01;
};

struct LimitCycleReport {
    std::vector<double> crossings;  // positive-going section crossings
    double section_level = 0.0;
    double period = 0.0;            // mean of successive crossing intervals
    double spread = 0.0;            // (max - min) / mean interval
    int periods = 0;
    double rho_loop_integral = 0.0; // integral of rho over the last full period
    double log_radius_change = 0.0; // ln(|u(t0 + T)| / |u(t0)|) over the same period
    double rho_periodicity = 0.0;   // max |rho(t + T) - rho(t)| / range(rho)
    double omega_periodicity = 0.0;
    bool detected = false;
};

namespace detail {

inline double interp(const std::vector<double>& t, const std::vector<double>& v, double x) {
    auto it = std::lower_bound(t.begin(), t.end(), x);
    if (it == t.begin()) return v.front();
    if (it == t.end()) return v.back();
    const auto k = static_cast<std::size_t>(it - t.begin());
    const double w = (x - t[k - 1]) / (t[k] - t[k - 1]);
    return v[k - 1] + w * (v[k] - v[k - 1]);
}

/// Trapezoid integral of sampled v over [a, b], with linear interpolation at the ends.
inline double integrate_between(const std::vector<double>& t, const std::vector<double>& v, double a,
                                double b) {
    double acc = 0.0;
    double tp = a, vp = interp(t, v, a);
    auto k = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), a) - t.begin());
    for (; k < t.size() && t[k] < b; ++k) {
        acc += 0.5 * (v[k] + vp) * (t[k] - tp);
        tp = t[k];
        vp = v[k];
    }
    acc += 0.5 * (interp(t, v, b) + vp) * (b - tp);
    return acc;
}

}  // namespace detail

/// Detects a periodic orbit from positive-going crossings of the section
/// u_1 = mean(u_1), after discarding the transient.
inline LimitCycleReport detect_limit_cycle(const Trajectory& traj, const AnalysisSeries& s,
                                           LimitCycleOptions opts = {}) {
    if (traj.size() != s.size() || traj.size() < 4) {
        throw InvalidParameter("detect_limit_cycle: trajectory and series must be aligned and non-trivial");
    }
    const std::size_t K = traj.size();
    const double t0 = traj.times.front() + opts.transient_fraction * (traj.times.back() - traj.times.front());
    std::size_t first = 0;
    while (first < K && traj.times[first] < t0) ++first;

    LimitCycleReport r;
    double mean = 0.0;
    for (std::size_t k = first; k < K; ++k) mean += traj.velocities[k](0);
    mean /= static_cast<double>(K - first);
    r.section_level = mean;

    for (std::size_t k = first + 1; k < K; ++k) {
        const double a = traj.velocities[k - 1](0) - mean;
        const double b = traj.velocities[k](0) - mean;
        if (a < 0.0 && b >= 0.0) {
            const double w = -a / (b - a);
            r.crossings.push_back(traj.times[k - 1] + w * (traj.times[k] - traj.times[k - 1]));
        }
    }
    if (static_cast<int>(r.crossings.size()) < opts.min_periods + 1) {
        std::ostringstream os;
        os << "detect_limit_cycle: only " << r.crossings.size() << " section crossings after the transient";
        throw NoLimitCycle(os.str());
    }
    std::vector<double> periods;
    for (std::size_t i = 1; i < r.crossings.size(); ++i) periods.push_back(r.crossings[i] - r.crossings[i - 1]);
    r.periods = static_cast<int>(periods.size());
    double sum = 0.0;
    for (double p : periods) sum += p;
    r.period = sum / static_cast<double>(periods.size());
    const auto [pmin, pmax] = std::minmax_element(periods.begin(), periods.end());
    r.spread = (*pmax - *pmin) / r.period;

    const double a = r.crossings[r.crossings.size() - 2];
    const double b = r.crossings.back();
    r.rho_loop_integral = detail::integrate_between(s.times, s.rho, a, b);
    std::vector<double> unorm(K);
    for (std::size_t k = 0; k < K; ++k) unorm[k] = traj.velocities[k].norm();
    r.log_radius_change = std::log(detail::interp(traj.times, unorm, b) / detail::interp(traj.times, unorm, a));

    // compare the second-to-last period with the last one
    const double T = b - a;
    double rlo = std::numeric_limits<double>::infinity(), rhi = -rlo, olo = rlo, ohi = -rlo;
    double rdiff = 0.0, odiff = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double t = s.times[k];
        if (t < a - T || t > a) continue;
        rlo = std::min(rlo, s.rho[k]);
        rhi = std::max(rhi, s.rho[k]);
        olo = std::min(olo, s.omega_norm[k]);
        ohi = std::max(ohi, s.omega_norm[k]);
        rdiff = std::max(rdiff, std::abs(detail::interp(s.times, s.rho, t + T) - s.rho[k]));
        odiff = std::max(odiff, std::abs(detail::interp(s.times, s.omega_norm, t + T) - s.omega_norm[k]));
    }
    r.rho_periodicity = rhi > rlo ? rdiff / (rhi - rlo) : 0.0;
    r.omega_periodicity = ohi > olo ? odiff / (ohi - olo) : 0.0;
    r.detected = r.periods >= opts.min_periods && r.spread < opts.spread_tol;
    return r;
}

}  // namespace geofreq
