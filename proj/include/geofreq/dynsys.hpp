#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "geofreq/errors.hpp"
#include "geofreq/geomalg.hpp"

namespace geofreq {

using Flow = std::function<Vec(const Vec&)>;
using JacobianFn = std::function<Mat(const Vec&)>;

/// Default central-difference step for component j: eps^(1/3) * (1 + |x_j|).
inline double default_fd_step(double xj) {
    return std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + std::abs(xj));
}

/// Central-difference Jacobian. A non-positive `h_fd` selects the default
/// per-component step. Truncation error is O(h_fd^2).
inline Mat jacobian_fd(const Flow& f, const Vec& x, double h_fd = 0.0) {
    const Eigen::Index n = x.size();
    Mat J(n, n);
    Vec xp = x;
    Vec xm = x;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double h = h_fd > 0.0 ? h_fd : default_fd_step(x(j));
        xp(j) = x(j) + h;
        xm(j) = x(j) - h;
        // use the actually representable spacing
        const double span = xp(j) - xm(j);
        J.col(j) = (f(xp) - f(xm)) / span;
        xp(j) = x(j);
        xm(j) = x(j);
    }
    return J;
}

/// x' = f(x) with its Jacobian. Affine models carry (A, b) with f(x) = A x + b.
class SystemModel {
public:
    SystemModel(std::size_t dim, Flow flow, std::optional<JacobianFn> jacobian = std::nullopt)
        : dim_(dim), flow_(std::move(flow)), jacobian_(std::move(jacobian)) {
        if (dim_ < 1) throw DimensionError("SystemModel: dimension must be >= 1");
    }

    static SystemModel affine(Mat A, Vec b) {
        if (A.rows() != A.cols() || A.rows() != b.size() || A.rows() < 1) {
            throw DimensionError("SystemModel::affine: A must be n x n and b length n");
        }
        const auto n = static_cast<std::size_t>(A.rows());
        SystemModel m(
            n, [A, b](const Vec& x) -> Vec { return A * x + b; },
            JacobianFn([A](const Vec&) -> Mat { return A; }));
        m.affine_ = std::make_pair(std::move(A), std::move(b));
        return m;
    }

    static SystemModel linear(Mat A) {
        const auto n = A.rows();
        return affine(std::move(A), Vec::Zero(n));
    }

    std::size_t dim() const noexcept { return dim_; }

    Vec flow(const Vec& x) const {
        check_dim(x);
        return flow_(x);
    }

    Mat jacobian(const Vec& x) const {
        check_dim(x);
        if (jacobian_) return (*jacobian_)(x);
        return jacobian_fd(flow_, x);
    }

    bool has_analytic_jacobian() const noexcept { return jacobian_.has_value(); }
    bool is_affine() const noexcept { return affine_.has_value(); }
    const Mat& A() const { return affine_.value().first; }
    const Vec& b() const { return affine_.value().second; }

    const Flow& flow_fn() const noexcept { return flow_; }

private:
    void check_dim(const Vec& x) const {
        if (static_cast<std::size_t>(x.size()) != dim_) {
            throw DimensionError("SystemModel: state has dimension " + std::to_string(x.size()) +
                                 ", expected " + std::to_string(dim_));
        }
    }

    std::size_t dim_;
    Flow flow_;
    std::optional<JacobianFn> jacobian_;
    std::optional<std::pair<Mat, Vec>> affine_;
};

/// Uniformly sampled trajectory. Velocities come from the flow and
/// accelerations from J(x) u; neither is obtained by differencing.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<Vec> velocities;
    std::vector<Vec> accelerations;

    std::size_t size() const noexcept { return times.size(); }
    bool empty() const noexcept { return times.empty(); }
    std::size_t dim() const { return states.empty() ? 0 : static_cast<std::size_t>(states.front().size()); }
};

/// Classical fixed-step RK4 from t = 0. The last sample lies in [t_end, t_end + h).
inline Trajectory integrate(const SystemModel& model, const Vec& x0, double t_end, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidParameter("integrate: step must be > 0");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvalidParameter("integrate: t_end must be > 0");
    if (static_cast<std::size_t>(x0.size()) != model.dim()) {
        throw DimensionError("integrate: x0 dimension does not match the model");
    }
    if (!x0.allFinite()) throw InvalidParameter("integrate: x0 has non-finite components");

    const auto steps = static_cast<std::size_t>(std::ceil(t_end / h - 1e-9));
    Trajectory tr;
    tr.times.reserve(steps + 1);
    tr.states.reserve(steps + 1);
    tr.velocities.reserve(steps + 1);
    tr.accelerations.reserve(steps + 1);

    auto record = [&](double t, const Vec& x, const Vec& u) {
        Vec du = model.jacobian(x) * u;
        if (!u.allFinite() || !du.allFinite()) {
            std::ostringstream os;
            os << "integration diverged at t = " << t;
            throw DivergedError(os.str(), t);
        }
        tr.times.push_back(t);
        tr.states.push_back(x);
        tr.velocities.push_back(u);
        tr.accelerations.push_back(std::move(du));
    };

    Vec x = x0;
    Vec k1 = model.flow(x);
    record(0.0, x, k1);
    for (std::size_t k = 1; k <= steps; ++k) {
        const Vec k2 = model.flow(x + 0.5 * h * k1);
        const Vec k3 = model.flow(x + 0.5 * h * k2);
        const Vec k4 = model.flow(x + h * k3);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double t = static_cast<double>(k) * h;
        if (!x.allFinite()) {
            std::ostringstream os;
            os << "integration diverged at t = " << t;
            throw DivergedError(os.str(), t);
        }
        k1 = model.flow(x);
        record(t, x, k1);
    }
    return tr;
}

struct NewtonOptions {
    double tolerance = 1e-10;  // on ||f(x)||_inf
    int max_iterations = 100;
};

/// Damped Newton iteration on f(x) = 0 with step halving on ||f||.
inline Vec equilibrium_find(const SystemModel& model, const Vec& x_guess, NewtonOptions opts = {}) {
    Vec x = x_guess;
    Vec fx = model.flow(x);
    for (int it = 0; it < opts.max_iterations; ++it) {
        const double res = fx.lpNorm<Eigen::Infinity>();
        if (res < opts.tolerance) return x;
        const Mat J = model.jacobian(x);
        Eigen::FullPivLU<Mat> lu(J);
        if (!lu.isInvertible()) throw NoEquilibrium("equilibrium_find: singular Jacobian");
        const Vec dx = lu.solve(-fx);

        double lambda = 1.0;
        Vec trial = x + dx;
        Vec ftrial = model.flow(trial);
        while (!(ftrial.lpNorm<Eigen::Infinity>() < res) && lambda > 1.0 / 1024.0) {
            lambda *= 0.5;
            trial = x + lambda * dx;
            ftrial = model.flow(trial);
        }
        if (!trial.allFinite()) break;
        x = std::move(trial);
        fx = std::move(ftrial);
    }
    if (fx.lpNorm<Eigen::Infinity>() < opts.tolerance) return x;
    std::ostringstream os;
    os << "equilibrium_find: no convergence in " << opts.max_iterations
       << " iterations (residual " << fx.lpNorm<Eigen::Infinity>() << ")";
    throw NoEquilibrium(os.str());
}

}  // namespace geofreq
