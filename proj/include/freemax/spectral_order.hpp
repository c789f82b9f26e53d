#ifndef FREEMAX_SPECTRAL_ORDER_HPP
#define FREEMAX_SPECTRAL_ORDER_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "cdf.hpp"
#include "detail/extended_precision.hpp"
#include "numerics.hpp"
#include "random.hpp"

namespace freemax {

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kRankTolerance = 1e-9;
inline constexpr double kAngleTolerance = 1e-9;
inline constexpr double kEigenTieTolerance = 1e-9;

enum class Resolution { full, values_only };

template <typename Scalar>
class HermitianMatrix {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    static constexpr bool is_complex = !std::is_same_v<Scalar, double>;

    /// Rejects ||A - A*||_max above 1e-12 * max(1, ||A||_max), then stores the
    /// Hermitian part and its spectral resolution.
    explicit HermitianMatrix(const Matrix& m, Resolution r = Resolution::full) {
        require(m.rows() == m.cols(), ErrorCode::invalid_argument, "HermitianMatrix: matrix must be square");
        require(m.rows() > 0, ErrorCode::invalid_argument, "HermitianMatrix: empty matrix");
        require(m.allFinite(), ErrorCode::invalid_argument, "HermitianMatrix: non-finite entry");
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        const double skew = (m - m.adjoint()).cwiseAbs().maxCoeff();
        require(skew <= kSymmetryTolerance * scale, ErrorCode::invalid_argument,
                "HermitianMatrix: matrix is not self-adjoint (asymmetry " + std::to_string(skew) + ")");
        matrix_ = (m + m.adjoint()) / 2.0;
        Eigen::SelfAdjointEigenSolver<Matrix> es(
            matrix_, r == Resolution::full ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
        require(es.info() == Eigen::Success, ErrorCode::numerical, "HermitianMatrix: eigensolver failed");
        values_ = es.eigenvalues();
        if (r == Resolution::full) vectors_ = es.eigenvectors();
    }

    /// U diag(values) U*, keeping the given resolution as the cached one.
    static HermitianMatrix from_spectrum(const Eigen::VectorXd& values, const Matrix& vectors) {
        const auto n = values.size();
        require(n > 0 && vectors.rows() == n && vectors.cols() == n, ErrorCode::invalid_argument,
                "from_spectrum: shape mismatch");
        require(values.allFinite(), ErrorCode::invalid_argument, "from_spectrum: non-finite eigenvalue");
        const double defect = (vectors.adjoint() * vectors - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
        require(defect <= 1e-10, ErrorCode::invalid_argument, "from_spectrum: eigenvectors are not orthonormal");
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return values(i) < values(j); });
        HermitianMatrix out;
        out.values_.resize(n);
        out.vectors_.resize(n, n);
        for (Eigen::Index k = 0; k < n; ++k) {
            out.values_(k) = values(order[static_cast<std::size_t>(k)]);
            out.vectors_.col(k) = vectors.col(order[static_cast<std::size_t>(k)]);
        }
        const Matrix m = out.vectors_ * out.values_.asDiagonal() * out.vectors_.adjoint();
        out.matrix_ = (m + m.adjoint()) / 2.0;
        return out;
    }

    static HermitianMatrix diagonal(const Eigen::VectorXd& d) {
        return from_spectrum(d, Matrix::Identity(d.size(), d.size()));
    }

    Eigen::Index dimension() const { return matrix_.rows(); }
    const Matrix& matrix() const { return matrix_; }
    /// ascending
    const Eigen::VectorXd& eigenvalues() const { return values_; }
    bool has_vectors() const { return vectors_.size() > 0; }
    const Matrix& eigenvectors() const {
        require(has_vectors(), ErrorCode::invalid_argument, "HermitianMatrix: eigenvectors were not computed");
        return vectors_;
    }
    double min_eigenvalue() const { return values_(0); }
    double max_eigenvalue() const { return values_(values_.size() - 1); }
    /// normalized trace Tr/N
    double trace() const { return values_.sum() / static_cast<double>(dimension()); }

    HermitianMatrix operator-() const {
        if (!has_vectors()) return HermitianMatrix(Matrix(-matrix_), Resolution::values_only);
        return from_spectrum(-values_, vectors_);
    }

    /// a + c I
    HermitianMatrix shifted(double c) const {
        if (!has_vectors())
            return HermitianMatrix(Matrix(matrix_ + c * Matrix::Identity(dimension(), dimension())),
                                   Resolution::values_only);
        return from_spectrum(values_.array() + c, vectors_);
    }

    /// functional calculus f(a)
    template <typename F>
    HermitianMatrix apply(F&& f) const {
        Eigen::VectorXd mapped = values_;
        for (auto& v : mapped) v = f(v);
        return from_spectrum(mapped, eigenvectors());
    }

private:
    HermitianMatrix() = default;

    Matrix matrix_;
    Eigen::VectorXd values_;
    Matrix vectors_;
};

using RealHermitian = HermitianMatrix<double>;
using ComplexHermitian = HermitianMatrix<std::complex<double>>;

template <typename Scalar>
class Projection {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    static Projection zero(Eigen::Index n) { return Projection(Matrix(n, 0)); }
    static Projection identity(Eigen::Index n) { return Projection(Matrix::Identity(n, n)); }

    /// Columns must be orthonormal to 1e-12.
    static Projection from_isometry(Matrix basis) {
        require(basis.cols() <= basis.rows(), ErrorCode::invalid_argument, "Projection: more columns than rows");
        if (basis.cols() > 0) {
            const auto r = basis.cols();
            const double defect = (basis.adjoint() * basis - Matrix::Identity(r, r)).cwiseAbs().maxCoeff();
            require(defect <= 1e-12, ErrorCode::invalid_argument, "Projection: basis is not orthonormal");
        }
        return Projection(std::move(basis));
    }

    Eigen::Index dimension() const { return basis_.rows(); }
    Eigen::Index rank() const { return basis_.cols(); }
    double trace() const { return static_cast<double>(rank()) / static_cast<double>(dimension()); }
    const Matrix& basis() const { return basis_; }
    Matrix matrix() const { return basis_ * basis_.adjoint(); }

private:
    template <typename S>
    friend Projection<S> detail_projection(Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> basis);

    explicit Projection(Matrix basis) : basis_(std::move(basis)) {}

    Matrix basis_;
};

template <typename S>
Projection<S> detail_projection(Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> basis) {
    return Projection<S>(std::move(basis));
}

enum class Interval { closed_up, open_up, closed_down, open_down };

/// E(a; I). Eigenvalues within 1e-9 of t count as lying on the closed side.
template <typename Scalar>
Projection<Scalar> spectral_projection(const HermitianMatrix<Scalar>& a, double t, Interval kind) {
    const auto& vals = a.eigenvalues();
    const auto& vecs = a.eigenvectors();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < vals.size(); ++k) {
        const double v = vals(k);
        bool in = false;
        switch (kind) {
        case Interval::closed_up: in = v >= t - kEigenTieTolerance; break;
        case Interval::open_up: in = v > t + kEigenTieTolerance; break;
        case Interval::closed_down: in = v <= t + kEigenTieTolerance; break;
        case Interval::open_down: in = v < t - kEigenTieTolerance; break;
        }
        if (in) keep.push_back(k);
    }
    typename Projection<Scalar>::Matrix basis(a.dimension(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) basis.col(static_cast<Eigen::Index>(j)) = vecs.col(keep[j]);
    return detail_projection<Scalar>(std::move(basis));
}

namespace detail {

template <typename Scalar>
void require_same_dimension(const Projection<Scalar>& p, const Projection<Scalar>& q, const char* op) {
    require(p.dimension() == q.dimension(), ErrorCode::invalid_argument, std::string(op) + ": dimension mismatch");
}

template <typename Scalar>
void require_same_dimension(const HermitianMatrix<Scalar>& a, const HermitianMatrix<Scalar>& b, const char* op) {
    require(a.dimension() == b.dimension(), ErrorCode::invalid_argument, std::string(op) + ": dimension mismatch");
}

// singular values of P_basis* Q_basis, descending
template <typename Scalar>
Eigen::VectorXd cosines(const Projection<Scalar>& p, const Projection<Scalar>& q) {
    if (p.rank() == 0 || q.rank() == 0) return {};
    Eigen::JacobiSVD<typename Projection<Scalar>::Matrix> svd(p.basis().adjoint() * q.basis());
    return svd.singularValues();
}

}  // namespace detail

/// closed span of both ranges; singular values above 1e-9 * max count
template <typename Scalar>
Projection<Scalar> proj_join(const Projection<Scalar>& p, const Projection<Scalar>& q) {
    detail::require_same_dimension(p, q, "proj_join");
    if (q.rank() == 0) return p;
    if (p.rank() == 0) return q;
    using Matrix = typename Projection<Scalar>::Matrix;
    Matrix both(p.dimension(), p.rank() + q.rank());
    both << p.basis(), q.basis();
    Eigen::BDCSVD<Matrix> svd(both, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > kRankTolerance * s(0)) ++r;
    r = std::min(r, p.dimension());
    return detail_projection<Scalar>(Matrix(svd.matrixU().leftCols(r)));
}

/// range intersection via principal angles: cosines >= 1 - 1e-9
template <typename Scalar>
Projection<Scalar> proj_meet(const Projection<Scalar>& p, const Projection<Scalar>& q) {
    detail::require_same_dimension(p, q, "proj_meet");
    using Matrix = typename Projection<Scalar>::Matrix;
    if (p.rank() == 0 || q.rank() == 0) return Projection<Scalar>::zero(p.dimension());
    Eigen::JacobiSVD<Matrix> svd(p.basis().adjoint() * q.basis(), Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    Eigen::Index r = 0;
    while (r < s.size() && s(r) >= 1.0 - kAngleTolerance) ++r;
    return detail_projection<Scalar>(Matrix(p.basis() * svd.matrixU().leftCols(r)));
}

/// range(P) contained in range(Q), within the angle tolerance
template <typename Scalar>
bool proj_leq(const Projection<Scalar>& p, const Projection<Scalar>& q) {
    detail::require_same_dimension(p, q, "proj_leq");
    if (p.rank() == 0) return true;
    if (p.rank() > q.rank()) return false;
    const Eigen::VectorXd c = detail::cosines(q, p);
    return c.size() == p.rank() && c(c.size() - 1) >= 1.0 - kAngleTolerance;
}

/// Sine of the largest principal angle between equal-rank ranges, read off
/// the residual ||(I - P) B_Q||, which stays accurate for tiny angles. Ranges
/// of different rank are a full quarter turn apart (returns 1).
template <typename Scalar>
double max_principal_angle(const Projection<Scalar>& p, const Projection<Scalar>& q) {
    detail::require_same_dimension(p, q, "max_principal_angle");
    if (p.rank() != q.rank()) return 1.0;
    if (p.rank() == 0) return 0.0;
    const typename Projection<Scalar>::Matrix residual = q.basis() - p.basis() * (p.basis().adjoint() * q.basis());
    // largest singular value through the r x r Gram matrix; only its top
    // eigenvalue is needed, which the squaring leaves accurate
    const typename Projection<Scalar>::Matrix gram = residual.adjoint() * residual;
    Eigen::SelfAdjointEigenSolver<typename Projection<Scalar>::Matrix> eig(gram, Eigen::EigenvaluesOnly);
    return std::min(1.0, std::sqrt(std::max(0.0, eig.eigenvalues()(eig.eigenvalues().size() - 1))));
}

namespace detail {

// sorted union of both spectra, ascending, ties within 1e-9 merged
template <typename Scalar>
std::vector<double> spectral_union(const HermitianMatrix<Scalar>& a, const HermitianMatrix<Scalar>& b) {
    std::vector<double> all(a.eigenvalues().data(), a.eigenvalues().data() + a.dimension());
    all.insert(all.end(), b.eigenvalues().data(), b.eigenvalues().data() + b.dimension());
    std::sort(all.begin(), all.end());
    std::vector<double> out;
    for (double v : all)
        if (out.empty() || v - out.back() > kEigenTieTolerance) out.push_back(v);
    return out;
}

}  // namespace detail

/// a ∨ b in the spectral order. Walking the merged spectra downward, the
/// eigenvectors of either input at the current level are orthogonalized
/// (classical Gram-Schmidt, two passes) against the span collected so far;
/// each new direction is an eigenvector of the result at that level. The span
/// after a level is the join E(a;[t,∞)) ∨ E(b;[t,∞)).
template <typename Scalar>
HermitianMatrix<Scalar> spectral_max(const HermitianMatrix<Scalar>& a, const HermitianMatrix<Scalar>& b) {
    detail::require_same_dimension(a, b, "spectral_max");
    using Matrix = typename HermitianMatrix<Scalar>::Matrix;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    const auto n = a.dimension();
    struct Candidate {
        double value;
        const HermitianMatrix<Scalar>* source;
        Eigen::Index column;
    };
    std::vector<Candidate> cands;
    cands.reserve(static_cast<std::size_t>(2 * n));
    for (Eigen::Index k = n - 1; k >= 0; --k) cands.push_back({a.eigenvalues()(k), &a, k});
    for (Eigen::Index k = n - 1; k >= 0; --k) cands.push_back({b.eigenvalues()(k), &b, k});
    std::stable_sort(cands.begin(), cands.end(), [](const auto& x, const auto& y) { return x.value > y.value; });

    Matrix basis(n, n);
    Eigen::VectorXd values(n);
    Eigen::Index filled = 0;
    std::size_t i = 0;
    while (i < cands.size() && filled < n) {
        const double level = cands[i].value;
        std::size_t j = i;
        while (j < cands.size() && level - cands[j].value <= kEigenTieTolerance) ++j;
        for (; i < j && filled < n; ++i) {
            Vector v = cands[i].source->eigenvectors().col(cands[i].column);
            for (int pass = 0; pass < 2 && filled > 0; ++pass)
                v -= basis.leftCols(filled) * (basis.leftCols(filled).adjoint() * v);
            const double r = v.norm();
            if (r <= kRankTolerance) continue;
            basis.col(filled) = v / r;
            values(filled) = level;
            ++filled;
        }
        i = j;
    }
    require(filled == n, ErrorCode::numerical, "spectral_max: eigenvectors did not span the space");
    return HermitianMatrix<Scalar>::from_spectrum(values, basis);
}

/// a ∧ b = -((-a) ∨ (-b))
template <typename Scalar>
HermitianMatrix<Scalar> spectral_min(const HermitianMatrix<Scalar>& a, const HermitianMatrix<Scalar>& b) {
    detail::require_same_dimension(a, b, "spectral_min");
    return -spectral_max(-a, -b);
}

/// a ≺ b: E(a;[t,∞)) ≤ E(b;[t,∞)) for every t. Both families only move at the
/// union of the spectra, so closed and open upper projections there suffice.
template <typename Scalar>
bool spectral_leq(const HermitianMatrix<Scalar>& a, const HermitianMatrix<Scalar>& b) {
    detail::require_same_dimension(a, b, "spectral_leq");
    for (double t : detail::spectral_union(a, b))
        for (Interval kind : {Interval::closed_up, Interval::open_up})
            if (!proj_leq(spectral_projection(a, t, kind), spectral_projection(b, t, kind))) return false;
    return true;
}

namespace detail {

inline Eigen::MatrixXd realify(const Eigen::MatrixXd& m) { return m; }

inline Eigen::MatrixXd realify(const Eigen::MatrixXcd& m) {
    const auto n = m.rows();
    Eigen::MatrixXd out(2 * n, 2 * n);
    out << m.real(), -m.imag(), m.imag(), m.real();
    return out;
}

inline Eigen::MatrixXd realify_vectors(const Eigen::MatrixXd& u) { return u; }

inline Eigen::MatrixXd realify_vectors(const Eigen::MatrixXcd& u) {
    const auto n = u.rows();
    Eigen::MatrixXd out(2 * n, 2 * n);
    out << u.real(), -u.imag(), u.imag(), u.real();
    return out;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> derealify(const Eigen::MatrixXd& r) {
    if constexpr (std::is_same_v<Scalar, double>) {
        return r;
    } else {
        const auto n = r.rows() / 2;
        Eigen::MatrixXcd out(n, n);
        out.real() = r.topLeftCorner(n, n);
        out.imag() = r.bottomLeftCorner(n, n);
        return out;
    }
}

template <typename Scalar, typename Pre, typename Post>
HermitianMatrix<Scalar> extended_combine(const HermitianMatrix<Scalar>& a, const HermitianMatrix<Scalar>& b,
                                         unsigned bits, Pre&& pre, Post&& post) {
    const Eigen::MatrixXd r = mp_combine(realify(a.matrix()), realify_vectors(a.eigenvectors()),
                                         realify(b.matrix()), realify_vectors(b.eigenvectors()), bits,
                                         std::forward<Pre>(pre), std::forward<Post>(post));
    using Matrix = typename HermitianMatrix<Scalar>::Matrix;
    const Matrix m = derealify<Scalar>(r);
    return HermitianMatrix<Scalar>(Matrix((m + m.adjoint()) / 2.0));
}

inline unsigned bits_for(double binary_orders) {
    const double bits = std::ceil(binary_orders) + 64.0;
    require(std::isfinite(bits) && bits <= kMaxMpBits, ErrorCode::numerical,
            "extended precision: the requested exponent needs " + std::to_string(bits) + " bits, cap is " +
                std::to_string(kMaxMpBits) + "; reduce p or the spectral spread");
    return static_cast<unsigned>(std::max(bits, 128.0));
}

}  // namespace detail

/// (½(a^p + b^p))^{1/p} for positive semidefinite a, b. With `shift`, both are
/// moved by c I first, c = max(0, -λ_min) + 1, and the result moved back.
/// Evaluated in MPFR arithmetic sized to p·log2(λ_max/λ_min⁺).
template <typename Scalar>
HermitianMatrix<Scalar> pnorm_approx(const HermitianMatrix<Scalar>& a, const HermitianMatrix<Scalar>& b, double p,
                                     bool shift = false) {
    detail::require_same_dimension(a, b, "pnorm_approx");
    require(std::isfinite(p) && p >= 1.0, ErrorCode::invalid_argument, "pnorm_approx: p must be >= 1");
    const double lo = std::min(a.min_eigenvalue(), b.min_eigenvalue());
    const double hi = std::max(a.max_eigenvalue(), b.max_eigenvalue());
    if (shift) {
        const double c = std::max(0.0, -lo) + 1.0;
        return pnorm_approx(a.shifted(c), b.shifted(c), p, false).shifted(-c);
    }
    require(lo >= -kSymmetryTolerance * std::max(1.0, hi), ErrorCode::domain,
            "pnorm_approx: negative spectrum; pass shift = true");
    if (hi <= 0.0) return HermitianMatrix<Scalar>::diagonal(Eigen::VectorXd::Zero(a.dimension()));
    double smallest = hi;
    for (const auto* m : {&a, &b})
        for (double v : m->eigenvalues())
            if (v > kEigenTieTolerance * hi) smallest = std::min(smallest, v);
    const unsigned bits = detail::bits_for(p * std::log2(hi / smallest));
    using detail::MpReal;
    const MpReal mp_p(p), inv_p = MpReal(1) / mp_p;
    // eigenvalues of the sum below this are rounding noise from exact zeros
    const MpReal noise = pow(MpReal(2), -static_cast<int>(bits) + 24);
    return detail::extended_combine(
        a, b, bits,
        [&](const MpReal& l) { return l > 0 ? MpReal(pow(l, mp_p)) : MpReal(0); },
        [&](const MpReal& mu, const MpReal& top) {
            return mu > noise * top ? MpReal(pow(mu / 2, inv_p)) : MpReal(0);
        });
}

/// p^{-1} log(e^{pa} + e^{pb}), stabilized by the largest eigenvalue m.
template <typename Scalar>
HermitianMatrix<Scalar> logexp_approx(const HermitianMatrix<Scalar>& a, const HermitianMatrix<Scalar>& b,
                                      double p) {
    detail::require_same_dimension(a, b, "logexp_approx");
    require(std::isfinite(p) && p >= 1.0, ErrorCode::invalid_argument, "logexp_approx: p must be >= 1");
    const double m = std::max(a.max_eigenvalue(), b.max_eigenvalue());
    const double spread = m - std::min(a.min_eigenvalue(), b.min_eigenvalue());
    const unsigned bits = detail::bits_for(p * spread / std::log(2.0));
    using detail::MpReal;
    const MpReal mp_p(p), mp_m(m);
    return detail::extended_combine(
        a, b, bits, [&](const MpReal& l) { return MpReal(exp(mp_p * (l - mp_m))); },
        [&](const MpReal& mu, const MpReal&) {
            require(mu > 0, ErrorCode::numerical, "logexp_approx: exponential sum lost positivity");
            return MpReal(mp_m + log(mu) / mp_p);
        });
}

namespace detail {

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gaussian_matrix(Eigen::Index rows, Eigen::Index cols,
                                                                      RngSeed seed, double variance = 1.0) {
    auto eng = seed.engine();
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> g(rows, cols);
    if constexpr (std::is_same_v<Scalar, double>) {
        std::normal_distribution<double> nd(0.0, std::sqrt(variance));
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = nd(eng);
    } else {
        std::normal_distribution<double> nd(0.0, std::sqrt(variance / 2.0));
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) {
                const double re = nd(eng);
                g(i, j) = Scalar(re, nd(eng));
            }
    }
    return g;
}

}  // namespace detail

/// Haar unitary (orthogonal for real Scalar): QR of a Gaussian matrix with the
/// phases of R's diagonal moved into Q.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> haar_unitary(Eigen::Index n, RngSeed seed) {
    require(n >= 1, ErrorCode::invalid_argument, "haar_unitary: n must be >= 1");
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Matrix g = detail::gaussian_matrix<Scalar>(n, n, seed);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    const Matrix& r = qr.matrixQR();
    for (Eigen::Index k = 0; k < n; ++k) {
        const Scalar d = r(k, k);
        const double mag = std::abs(d);
        if (mag > 0.0) q.col(k) *= d / mag;
    }
    return q;
}

template <typename Scalar = double>
Projection<Scalar> haar_projection(Eigen::Index n, Eigen::Index r, RngSeed seed) {
    require(n >= 1 && r >= 0 && r <= n, ErrorCode::invalid_argument, "haar_projection: rank out of range");
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (r == 0) return Projection<Scalar>::zero(n);
    if (r == n) return Projection<Scalar>::identity(n);
    const Matrix g = detail::gaussian_matrix<Scalar>(n, r, seed);
    Eigen::HouseholderQR<Matrix> qr(g);
    return detail_projection<Scalar>(Matrix(qr.householderQ() * Matrix::Identity(n, r)));
}

/// U a U* with U Haar; the spectrum is carried over unchanged.
template <typename Scalar>
HermitianMatrix<Scalar> haar_conjugate(const HermitianMatrix<Scalar>& a, RngSeed seed) {
    const auto u = haar_unitary<Scalar>(a.dimension(), seed);
    return HermitianMatrix<Scalar>::from_spectrum(a.eigenvalues(), u * a.eigenvectors());
}

/// τ(P ∨ Q) = min(τP + τQ, 1) and τ(P ∧ Q) = max(0, τP + τQ - 1), both within tol
template <typename Scalar>
bool general_position_check(const Projection<Scalar>& p, const Projection<Scalar>& q, double tol = 1e-12) {
    detail::require_same_dimension(p, q, "general_position_check");
    const double sum = p.trace() + q.trace();
    return std::abs(proj_join(p, q).trace() - std::min(sum, 1.0)) <= tol &&
           std::abs(proj_meet(p, q).trace() - std::max(0.0, sum - 1.0)) <= tol;
}

/// jump 1/N at each eigenvalue, with multiplicity
template <typename Scalar>
Cdf empirical_spectral_cdf(const HermitianMatrix<Scalar>& a) {
    const auto& v = a.eigenvalues();
    return empirical_cdf(std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace freemax

#endif  // FREEMAX_SPECTRAL_ORDER_HPP
