#pragma once

// Shared generators and reference computations for the test suites.

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "geofreq/geomalg.hpp"

namespace testsupport {

using geofreq::Mat;
using geofreq::Vec;

inline Vec random_vec(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

inline Mat random_mat(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = g(rng);
    return m;
}

/// Haar-ish random orthogonal matrix from the QR of a Gaussian matrix,
/// with the R diagonal signs folded in. Reflections are kept.
inline Mat random_orthogonal(std::mt19937_64& rng, Eigen::Index n) {
    const Mat g = random_mat(rng, n);
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ();
    const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (r(i, i) < 0) q.col(i) = -q.col(i);
    }
    return q;
}

/// A matrix with a prescribed spectrum: A = V B V^-1 where B is block
/// diagonal with [mu] and [[a, -b], [b, a]] blocks.
struct KnownSpectrum {
    Mat A;
    std::vector<std::complex<double>> eigenvalues;  // all n, conjugates included
};

inline KnownSpectrum random_diagonalizable(std::mt19937_64& rng, Eigen::Index n) {
    std::uniform_real_distribution<double> re(-3.0, 3.0);
    std::uniform_real_distribution<double> im(0.2, 3.0);
    std::uniform_int_distribution<int> coin(0, 1);
    KnownSpectrum ks;
    Mat B = Mat::Zero(n, n);
    // keep eigenvalues separated so the matrix stays comfortably diagonalizable
    auto far_enough = [&](std::complex<double> z) {
        for (auto w : ks.eigenvalues)
            if (std::abs(z - w) < 0.1) return false;
        return true;
    };
    Eigen::Index i = 0;
    while (i < n) {
        if (i + 1 < n && coin(rng)) {
            std::complex<double> z(re(rng), im(rng));
            if (!far_enough(z) || !far_enough(std::conj(z))) continue;
            B(i, i) = B(i + 1, i + 1) = z.real();
            B(i, i + 1) = -z.imag();
            B(i + 1, i) = z.imag();
            ks.eigenvalues.push_back(z);
            ks.eigenvalues.push_back(std::conj(z));
            i += 2;
        } else {
            std::complex<double> z(re(rng), 0.0);
            if (!far_enough(z)) continue;
            B(i, i) = z.real();
            ks.eigenvalues.push_back(z);
            i += 1;
        }
    }
    Mat V;
    do {
        V = random_mat(rng, n);
    } while (Eigen::JacobiSVD<Mat>(V).singularValues().minCoeff() < 0.1);
    ks.A = V * B * V.inverse();
    return ks;
}

/// Greedy multiset match; returns the worst distance.
inline double multiset_distance(std::vector<std::complex<double>> a, std::vector<std::complex<double>> b) {
    if (a.size() != b.size()) return INFINITY;
    double worst = 0.0;
    for (auto z : a) {
        auto it = std::min_element(b.begin(), b.end(),
                                   [&](auto x, auto y) { return std::abs(x - z) < std::abs(y - z); });
        worst = std::max(worst, std::abs(*it - z));
        b.erase(it);
    }
    return worst;
}

/// Reference geometric frequency from the full outer-product matrix
/// (u du^T - du u^T) / |u|^2, independent of the packed bivector code.
struct RefFreq {
    double rho;
    Mat omega;  // antisymmetric n x n
    double omega_norm;
};

inline RefFreq reference_frequency(const Vec& u, const Vec& du) {
    const double n2 = u.squaredNorm();
    RefFreq r;
    r.rho = u.dot(du) / n2;
    r.omega = (u * du.transpose() - du * u.transpose()) / n2;
    // each unordered pair counted once
    r.omega_norm = r.omega.norm() / std::sqrt(2.0);
    return r;
}

}  // namespace testsupport
