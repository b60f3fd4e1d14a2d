#pragma once

// Eigenstructure classification and the real block-modal similarity
// A = W^-1 G W, with G made of 1x1 blocks [mu] and 2x2 blocks
// [[alpha, -beta], [beta, alpha]].

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "geofreq/errors.hpp"
#include "geofreq/geomalg.hpp"

namespace geofreq {

using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// C <-> M2(R)
// ---------------------------------------------------------------------------

/// a + b j represented as [[a, -b], [b, a]].
struct CMatrix2 {
    double a = 0.0;
    double b = 0.0;

    Eigen::Matrix2d matrix() const {
        Eigen::Matrix2d m;
        m << a, -b, b, a;
        return m;
    }
    double det() const { return a * a + b * b; }
};

inline CMatrix2 phi(double a, double b) { return {a, b}; }

// ---------------------------------------------------------------------------
// Spectrum
// ---------------------------------------------------------------------------

struct ConjugatePair {
    double alpha = 0.0;
    double beta = 0.0;  // > 0; the conjugate alpha - beta j is implicit
};

/// Classified eigenstructure of a real matrix.
///
/// `eigenvalues` lists all n eigenvalues: the real ones first (descending),
/// then alpha + beta j, alpha - beta j for each pair (pairs sorted by alpha,
/// then beta, both descending). Columns of `right` and rows of `left` follow
/// the same order and satisfy left * right = I.
struct Spectrum {
    std::vector<double> real_eigs;
    std::vector<ConjugatePair> pairs;
    CVec eigenvalues;
    CMat right;
    CMat left;
    double eigvec_condition = 1.0;

    std::size_t dim() const { return static_cast<std::size_t>(eigenvalues.size()); }
    std::size_t real_count() const { return real_eigs.size(); }
    std::size_t pair_count() const { return pairs.size(); }

    /// Index into `eigenvalues` of the alpha + beta j member of pair k.
    std::size_t pair_index(std::size_t k) const { return real_eigs.size() + 2 * k; }
};

namespace tolerances {
inline double real_classification(double a_norm) { return 1e-9 * (1.0 + a_norm); }
inline constexpr double pairing = 1e-8;
inline double defect_condition() { return 1.0 / std::sqrt(std::numeric_limits<double>::epsilon()); }
inline constexpr double ill_conditioned_w = 1e12;
}  // namespace tolerances

namespace detail {

inline void require_square_finite(const Mat& A, const char* what) {
    if (A.rows() != A.cols() || A.rows() < 1) {
        throw DimensionError(std::string(what) + ": matrix must be square and non-empty");
    }
    if (!A.allFinite()) throw InvalidParameter(std::string(what) + ": non-finite entry");
}

struct RawEigen {
    std::vector<double> reals;
    std::vector<cplx> complex_upper;  // imag > 0
    std::vector<CVec> real_vecs;
    std::vector<CVec> complex_vecs;
};

/// Unit 2-norm, then rotate so the largest-magnitude component is real positive.
inline CVec normalize_eigvec(CVec v) {
    v /= v.norm();
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double m = std::abs(v(i));
        // first index wins unless another is larger beyond roundoff
        if (m > best * (1.0 + 1e-12)) {
            best = m;
            arg = i;
        }
    }
    const cplx phase = std::conj(v(arg)) / std::abs(v(arg));
    v *= phase;
    v(arg) = cplx(std::abs(v(arg)), 0.0);
    return v;
}

inline double condition_number(const CMat& M) {
    Eigen::JacobiSVD<CMat> svd(M);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / smin;
}

inline double condition_number(const Mat& M) {
    Eigen::JacobiSVD<Mat> svd(M);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / smin;
}

/// Splits eigenvalues into reals and beta > 0 pair members, sorted canonically.
template <typename Values>
void classify_values(const Values& lambda, double a_norm, std::vector<std::size_t>& real_idx,
                     std::vector<std::size_t>& pair_idx) {
    const double tol = tolerances::real_classification(a_norm);
    const auto n = static_cast<std::size_t>(lambda.size());
    std::vector<std::size_t> upper, lower;
    for (std::size_t i = 0; i < n; ++i) {
        const double im = lambda(i).imag();
        if (std::abs(im) <= tol) {
            real_idx.push_back(i);
        } else if (im > 0) {
            upper.push_back(i);
        } else {
            lower.push_back(i);
        }
    }
    std::vector<bool> used(lower.size(), false);
    for (std::size_t i : upper) {
        bool matched = false;
        for (std::size_t k = 0; k < lower.size(); ++k) {
            if (!used[k] && std::abs(lambda(i) - std::conj(lambda(lower[k]))) <= tolerances::pairing) {
                used[k] = true;
                matched = true;
                break;
            }
        }
        if (!matched) {
            std::ostringstream os;
            os << "eigenvalue " << lambda(i) << " has no conjugate partner";
            throw Error(os.str());
        }
        pair_idx.push_back(i);
    }
    std::stable_sort(real_idx.begin(), real_idx.end(),
                     [&](std::size_t a, std::size_t b) { return lambda(a).real() > lambda(b).real(); });
    std::stable_sort(pair_idx.begin(), pair_idx.end(), [&](std::size_t a, std::size_t b) {
        if (lambda(a).real() != lambda(b).real()) return lambda(a).real() > lambda(b).real();
        return lambda(a).imag() > lambda(b).imag();
    });
}

/// Geometric multiplicity check for clusters of (numerically) repeated
/// eigenvalues. Returns the index of a defective eigenvalue, if any.
inline std::optional<std::size_t> find_defective_cluster(const Mat& A, const CVec& lambda) {
    const double scale = 1.0 + A.norm();
    const double cluster_tol = 1e-6 * scale;
    const double rank_tol = 1e-7 * scale;
    const auto n = static_cast<std::size_t>(lambda.size());
    std::vector<bool> seen(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (seen[i]) continue;
        std::vector<std::size_t> cluster{i};
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!seen[j] && std::abs(lambda(i) - lambda(j)) <= cluster_tol) cluster.push_back(j);
        }
        for (auto k : cluster) seen[k] = true;
        if (cluster.size() < 2) continue;
        cplx mean = 0.0;
        for (auto k : cluster) mean += lambda(k);
        mean /= static_cast<double>(cluster.size());
        CMat shifted = A.cast<cplx>();
        shifted.diagonal().array() -= mean;
        Eigen::JacobiSVD<CMat> svd(shifted);
        const auto& s = svd.singularValues();
        std::size_t rank = 0;
        for (Eigen::Index k = 0; k < s.size(); ++k) {
            if (s(k) > rank_tol) ++rank;
        }
        const std::size_t geometric = n - rank;
        if (geometric < cluster.size()) return i;
    }
    return std::nullopt;
}

}  // namespace detail

/// Eigen-decomposes A, splits the spectrum into real eigenvalues and
/// conjugate pairs, and builds biorthonormal right/left eigenvectors.
/// Throws NonDiagonalizable for defective matrices.
inline Spectrum classify_spectrum(const Mat& A) {
    detail::require_square_finite(A, "classify_spectrum");
    const auto n = static_cast<std::size_t>(A.rows());
    const double a_norm = A.norm();

    Eigen::EigenSolver<Mat> es(A, true);
    if (es.info() != Eigen::Success) throw Error("classify_spectrum: eigen-solver did not converge");
    const CVec lambda = es.eigenvalues();
    const CMat vecs = es.eigenvectors();

    std::vector<std::size_t> real_idx, pair_idx;
    detail::classify_values(lambda, a_norm, real_idx, pair_idx);

    Spectrum sp;
    sp.eigenvalues.resize(static_cast<Eigen::Index>(n));
    sp.right.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::Index col = 0;
    for (std::size_t i : real_idx) {
        const double mu = lambda(i).real();
        sp.real_eigs.push_back(mu);
        sp.eigenvalues(col) = cplx(mu, 0.0);
        CVec v = detail::normalize_eigvec(vecs.col(static_cast<Eigen::Index>(i)));
        sp.right.col(col) = v.real().cast<cplx>();
        ++col;
    }
    for (std::size_t i : pair_idx) {
        const cplx l = lambda(i);
        sp.pairs.push_back({l.real(), l.imag()});
        const CVec v = detail::normalize_eigvec(vecs.col(static_cast<Eigen::Index>(i)));
        sp.eigenvalues(col) = l;
        sp.eigenvalues(col + 1) = std::conj(l);
        sp.right.col(col) = v;
        sp.right.col(col + 1) = v.conjugate();
        col += 2;
    }

    sp.eigvec_condition = detail::condition_number(sp.right);
    std::optional<std::size_t> defective;
    if (sp.eigvec_condition > tolerances::defect_condition()) {
        // name the eigenvalue whose eigenvector is most nearly parallel to another
        double worst = -1.0;
        for (Eigen::Index i = 0; i < sp.right.cols(); ++i) {
            for (Eigen::Index j = i + 1; j < sp.right.cols(); ++j) {
                const double c = std::abs(sp.right.col(i).dot(sp.right.col(j)));
                if (c > worst) {
                    worst = c;
                    defective = static_cast<std::size_t>(i);
                }
            }
        }
    } else {
        defective = detail::find_defective_cluster(A, sp.eigenvalues);
    }
    if (defective) {
        const cplx l = sp.eigenvalues(static_cast<Eigen::Index>(*defective));
        std::ostringstream os;
        os.precision(17);
        os << "matrix is not diagonalizable: eigenvalue " << l.real();
        if (l.imag() != 0.0) os << (l.imag() > 0 ? " + " : " - ") << std::abs(l.imag()) << "j";
        os << " is defective (eigenvector condition " << sp.eigvec_condition << ")";
        throw NonDiagonalizable(os.str(), l.real(), l.imag());
    }

    sp.left = sp.right.partialPivLu().inverse();
    // rows belonging to real eigenvalues are real up to roundoff
    for (std::size_t i = 0; i < sp.real_count(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        sp.left.row(r) = sp.left.row(r).real().cast<cplx>();
    }
    return sp;
}

/// Eigenvalues of A in canonical order, without eigenvectors or the
/// diagonalizability check. Used along trajectories, where the Jacobian
/// legitimately passes through defective points.
inline CVec ordered_eigenvalues(const Mat& A) {
    detail::require_square_finite(A, "ordered_eigenvalues");
    Eigen::EigenSolver<Mat> es(A, false);
    if (es.info() != Eigen::Success) throw Error("ordered_eigenvalues: eigen-solver did not converge");
    const CVec lambda = es.eigenvalues();
    std::vector<std::size_t> real_idx, pair_idx;
    detail::classify_values(lambda, A.norm(), real_idx, pair_idx);
    CVec out(lambda.size());
    Eigen::Index k = 0;
    for (auto i : real_idx) out(k++) = cplx(lambda(i).real(), 0.0);
    for (auto i : pair_idx) {
        out(k++) = lambda(i);
        out(k++) = std::conj(lambda(i));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Real modal form
// ---------------------------------------------------------------------------

struct BlockDesc {
    enum class Kind { Real, Pair };

    Kind kind = Kind::Real;
    double mu_or_alpha = 0.0;
    double beta = 0.0;
    std::size_t offset = 0;
    std::size_t size = 1;

    static BlockDesc real(double mu, std::size_t offset) { return {Kind::Real, mu, 0.0, offset, 1}; }
    static BlockDesc pair(double alpha, double beta, std::size_t offset) {
        return {Kind::Pair, alpha, beta, offset, 2};
    }

    Mat matrix() const {
        if (kind == Kind::Real) return Mat::Constant(1, 1, mu_or_alpha);
        return phi(mu_or_alpha, beta).matrix();
    }
};

struct RealModalForm {
    Mat W;
    Mat G;
    std::vector<BlockDesc> blocks;
    Spectrum spectrum;
    double residual = 0.0;          // ||W A - G W||_F
    double relative_residual = 0.0; // residual / ||A||_F
    double w_condition = 1.0;
    std::optional<std::string> warning;
};

/// Builds W from the left eigenvectors (real rows, then Re/Im rows of each
/// pair's alpha + beta j eigenvector) and the matching block-diagonal G.
inline RealModalForm real_modal_form(const Mat& A) {
    RealModalForm f;
    f.spectrum = classify_spectrum(A);
    const auto& sp = f.spectrum;
    const Eigen::Index n = A.rows();
    f.W.resize(n, n);
    f.G = Mat::Zero(n, n);

    Eigen::Index row = 0;
    for (std::size_t i = 0; i < sp.real_count(); ++i) {
        f.W.row(row) = sp.left.row(static_cast<Eigen::Index>(i)).real();
        f.G(row, row) = sp.real_eigs[i];
        f.blocks.push_back(BlockDesc::real(sp.real_eigs[i], static_cast<std::size_t>(row)));
        ++row;
    }
    for (std::size_t k = 0; k < sp.pair_count(); ++k) {
        const auto idx = static_cast<Eigen::Index>(sp.pair_index(k));
        const auto [alpha, beta] = sp.pairs[k];
        f.W.row(row) = sp.left.row(idx).real();
        f.W.row(row + 1) = sp.left.row(idx).imag();
        f.G.block(row, row, 2, 2) = phi(alpha, beta).matrix();
        f.blocks.push_back(BlockDesc::pair(alpha, beta, static_cast<std::size_t>(row)));
        row += 2;
    }

    f.residual = (f.W * A - f.G * f.W).norm();
    const double a_norm = A.norm();
    f.relative_residual = a_norm > 0.0 ? f.residual / a_norm : f.residual;
    f.w_condition = detail::condition_number(f.W);
    if (f.w_condition > tolerances::ill_conditioned_w) {
        std::ostringstream os;
        os << "transformation matrix W is ill-conditioned (cond " << f.w_condition << ")";
        f.warning = os.str();
    }
    return f;
}

struct DQSplit {
    Eigen::Matrix2d D;
    Eigen::Matrix2d Q;
};

/// Symmetric / antisymmetric parts of a [[alpha, -beta], [beta, alpha]] block.
inline DQSplit dq_split(const Eigen::Matrix2d& g) {
    if (!g.allFinite()) throw InvalidParameter("dq_split: non-finite entry");
    const double tol = 1e-9 * (1.0 + g.norm());
    if (std::abs(g(0, 0) - g(1, 1)) > tol || std::abs(g(0, 1) + g(1, 0)) > tol) {
        throw InvalidBlock("dq_split: block is not of the form [[a, -b], [b, a]]");
    }
    return {(g + g.transpose()) / 2.0, (g - g.transpose()) / 2.0};
}

/// Complex frequency of one decoupled modal coordinate block. For
/// dzeta = G_block * zeta this returns (mu, 0) or (alpha, beta).
template <typename A, typename B>
Multivector2 block_complex_frequency(const BlockDesc& block, const Eigen::MatrixBase<A>& zeta,
                                     const Eigen::MatrixBase<B>& dzeta) {
    if (static_cast<std::size_t>(zeta.size()) != block.size ||
        static_cast<std::size_t>(dzeta.size()) != block.size) {
        throw DimensionError("block_complex_frequency: coordinate size does not match block");
    }
    if (block.size == 2) return complex_frequency(zeta, dzeta);

    detail::require_finite(zeta, "block_complex_frequency");
    detail::require_finite(dzeta, "block_complex_frequency");
    if (std::abs(zeta(0)) < degeneracy_threshold(std::abs(dzeta(0)))) {
        constexpr double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan};
    }
    return {dzeta(0) / zeta(0), 0.0};
}

/// Max relative residual of xi' = Lambda xi along sampled velocities, with
/// xi = L u and xi' = L u' (L the left-eigenvector matrix).
inline double verify_xi_dynamics(const Mat& A, std::span<const Vec> u, std::span<const Vec> du) {
    if (u.size() != du.size()) throw DimensionError("verify_xi_dynamics: u and du lengths differ");
    const Spectrum sp = classify_spectrum(A);
    double worst = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        if (u[k].size() != A.rows() || du[k].size() != A.rows()) {
            throw DimensionError("verify_xi_dynamics: sample dimension does not match A");
        }
        if (u[k].norm() < degeneracy_threshold(du[k].norm())) continue;
        const CVec xi = sp.left * u[k].cast<cplx>();
        const CVec dxi = sp.left * du[k].cast<cplx>();
        const CVec predicted = sp.eigenvalues.cwiseProduct(xi);
        const double scale = std::max(dxi.norm(), predicted.norm());
        const double err = (dxi - predicted).norm();
        worst = std::max(worst, scale > 0.0 ? err / scale : err);
    }
    return worst;
}

}  // namespace geofreq
