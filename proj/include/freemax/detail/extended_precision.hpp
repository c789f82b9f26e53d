#ifndef FREEMAX_DETAIL_EXTENDED_PRECISION_HPP
#define FREEMAX_DETAIL_EXTENDED_PRECISION_HPP

// Symmetric eigen-problems in MPFR arithmetic, for matrix functions whose
// spectra span more binary orders of magnitude than a double can hold.

#include <cmath>
#include <cstddef>
#include <mutex>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/mpfr.hpp>

#include "../numerics.hpp"

namespace freemax::detail {

using MpReal = boost::multiprecision::mpfr_float;

inline constexpr unsigned kMaxMpBits = 200000;

/// Sets the MPFR working precision for the lifetime of the scope. Boost keeps
/// the default precision in a process-wide variable, so scopes serialize.
class MpPrecision {
public:
    explicit MpPrecision(unsigned bits) : lock_(mutex()), saved_(MpReal::default_precision()) {
        require(bits <= kMaxMpBits, ErrorCode::numerical,
                "extended precision: " + std::to_string(bits) + " bits requested, cap is " +
                    std::to_string(kMaxMpBits));
        MpReal::default_precision(static_cast<unsigned>(std::ceil(bits * 0.30103)) + 2);
    }
    ~MpPrecision() { MpReal::default_precision(saved_); }
    MpPrecision(const MpPrecision&) = delete;
    MpPrecision& operator=(const MpPrecision&) = delete;

private:
    static std::mutex& mutex() {
        static std::mutex m;
        return m;
    }
    std::unique_lock<std::mutex> lock_;
    unsigned saved_;
};

struct MpMatrix {
    std::ptrdiff_t n = 0;
    std::vector<MpReal> data;

    explicit MpMatrix(std::ptrdiff_t size) : n(size), data(static_cast<std::size_t>(size * size), MpReal(0)) {}

    static MpMatrix from(const Eigen::MatrixXd& m) {
        MpMatrix out(m.rows());
        for (std::ptrdiff_t i = 0; i < out.n; ++i)
            for (std::ptrdiff_t j = 0; j < out.n; ++j) out(i, j) = m(i, j);
        return out;
    }

    MpReal& operator()(std::ptrdiff_t i, std::ptrdiff_t j) { return data[static_cast<std::size_t>(i * n + j)]; }
    const MpReal& operator()(std::ptrdiff_t i, std::ptrdiff_t j) const {
        return data[static_cast<std::size_t>(i * n + j)];
    }

    Eigen::MatrixXd to_double() const {
        Eigen::MatrixXd out(n, n);
        for (std::ptrdiff_t i = 0; i < n; ++i)
            for (std::ptrdiff_t j = 0; j < n; ++j) out(i, j) = static_cast<double>((*this)(i, j));
        return out;
    }
};

// Modified Gram-Schmidt on the columns, twice, so the result is orthogonal to
// working precision.
inline MpMatrix mp_orthonormalize(const Eigen::MatrixXd& guess) {
    MpMatrix q = MpMatrix::from(guess);
    const auto n = q.n;
    MpReal dot, norm;
    for (int pass = 0; pass < 2; ++pass)
        for (std::ptrdiff_t j = 0; j < n; ++j) {
            for (std::ptrdiff_t k = 0; k < j; ++k) {
                dot = 0;
                for (std::ptrdiff_t i = 0; i < n; ++i) dot += q(i, k) * q(i, j);
                for (std::ptrdiff_t i = 0; i < n; ++i) q(i, j) -= dot * q(i, k);
            }
            norm = 0;
            for (std::ptrdiff_t i = 0; i < n; ++i) norm += q(i, j) * q(i, j);
            norm = sqrt(norm);
            require(norm > 0, ErrorCode::numerical, "extended precision: singular starting basis");
            for (std::ptrdiff_t i = 0; i < n; ++i) q(i, j) /= norm;
        }
    return q;
}

// a <- w^T a w
inline MpMatrix mp_congruence(const MpMatrix& a, const MpMatrix& w) {
    const auto n = a.n;
    MpMatrix aw(n), out(n);
    MpReal acc;
    for (std::ptrdiff_t i = 0; i < n; ++i)
        for (std::ptrdiff_t j = 0; j < n; ++j) {
            acc = 0;
            for (std::ptrdiff_t k = 0; k < n; ++k) acc += a(i, k) * w(k, j);
            aw(i, j) = acc;
        }
    for (std::ptrdiff_t i = 0; i < n; ++i)
        for (std::ptrdiff_t j = i; j < n; ++j) {
            acc = 0;
            for (std::ptrdiff_t k = 0; k < n; ++k) acc += w(k, i) * aw(k, j);
            out(i, j) = acc;
            out(j, i) = acc;
        }
    return out;
}

struct MpEigen {
    std::vector<MpReal> values;
    MpMatrix vectors;
};

/// Cyclic Jacobi. The rotation threshold is relative to the diagonal, which
/// keeps small eigenvalues of graded matrices accurate. `guess` holds
/// approximate eigenvectors (columns); they are orthonormalized first.
inline MpEigen mp_symmetric_eigen(const MpMatrix& input, const Eigen::MatrixXd& guess) {
    const auto n = input.n;
    MpMatrix v = mp_orthonormalize(guess);
    MpMatrix a = mp_congruence(input, v);
    const MpReal eps = std::numeric_limits<MpReal>::epsilon();
    MpReal theta, t, c, s, x, y, app, aqq, apq;
    for (int sweep = 0; sweep < 80; ++sweep) {
        bool rotated = false;
        for (std::ptrdiff_t p = 0; p < n; ++p)
            for (std::ptrdiff_t q = p + 1; q < n; ++q) {
                apq = a(p, q);
                if (apq == 0) continue;
                app = a(p, p);
                aqq = a(q, q);
                if (abs(apq) <= eps * sqrt(abs(app * aqq))) {
                    a(p, q) = 0;
                    a(q, p) = 0;
                    continue;
                }
                rotated = true;
                theta = (aqq - app) / (2 * apq);
                t = 1 / (abs(theta) + sqrt(theta * theta + 1));
                if (theta < 0) t = -t;
                c = 1 / sqrt(t * t + 1);
                s = t * c;
                for (std::ptrdiff_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    x = a(k, p);
                    y = a(k, q);
                    a(k, p) = c * x - s * y;
                    a(k, q) = s * x + c * y;
                    a(p, k) = a(k, p);
                    a(q, k) = a(k, q);
                }
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = 0;
                a(q, p) = 0;
                for (std::ptrdiff_t k = 0; k < n; ++k) {
                    x = v(k, p);
                    y = v(k, q);
                    v(k, p) = c * x - s * y;
                    v(k, q) = s * x + c * y;
                }
            }
        if (!rotated) break;
    }
    MpEigen out{std::vector<MpReal>(static_cast<std::size_t>(n)), std::move(v)};
    for (std::ptrdiff_t i = 0; i < n; ++i) out.values[static_cast<std::size_t>(i)] = a(i, i);
    return out;
}

// sum_k f(lambda_k) v_k v_k^T, accumulated into `out`
template <typename F>
void mp_accumulate_function(const MpEigen& e, F&& f, MpMatrix& out) {
    const auto n = out.n;
    MpReal w, wv;
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        w = f(e.values[static_cast<std::size_t>(k)]);
        if (w == 0) continue;
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            wv = w * e.vectors(i, k);
            for (std::ptrdiff_t j = i; j < n; ++j) out(i, j) += wv * e.vectors(j, k);
        }
    }
    for (std::ptrdiff_t i = 0; i < n; ++i)
        for (std::ptrdiff_t j = 0; j < i; ++j) out(i, j) = out(j, i);
}

/// post( pre(a) + pre(b) ) for real symmetric a, b with approximate
/// eigenvectors ua, ub, evaluated with `bits` of working precision.
/// `post` receives each eigenvalue of the sum together with the largest one.
template <typename Pre, typename Post>
Eigen::MatrixXd mp_combine(const Eigen::MatrixXd& a, const Eigen::MatrixXd& ua, const Eigen::MatrixXd& b,
                           const Eigen::MatrixXd& ub, unsigned bits, Pre&& pre, Post&& post) {
    MpPrecision scope(bits);
    const auto n = a.rows();
    const MpEigen ea = mp_symmetric_eigen(MpMatrix::from(a), ua);
    const MpEigen eb = mp_symmetric_eigen(MpMatrix::from(b), ub);
    MpMatrix sum(n);
    mp_accumulate_function(ea, pre, sum);
    mp_accumulate_function(eb, pre, sum);
    // a double image of the sum gives a usable starting basis
    MpReal top = 0;
    for (const auto& x : sum.data) top = abs(x) > top ? MpReal(abs(x)) : top;
    MpMatrix scaled = sum;
    if (top > 0)
        for (auto& x : scaled.data) x /= top;
    const Eigen::MatrixXd approx = scaled.to_double();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> start(approx);
    const MpEigen es = mp_symmetric_eigen(sum, start.eigenvectors());
    MpReal largest = es.values.front();
    for (const auto& l : es.values) largest = l > largest ? l : largest;
    MpMatrix result(n);
    mp_accumulate_function(es, [&](const MpReal& l) { return post(l, largest); }, result);
    return result.to_double();
}

}  // namespace freemax::detail

#endif  // FREEMAX_DETAIL_EXTENDED_PRECISION_HPP
