#ifndef FREEMAX_NUMERICS_HPP
#define FREEMAX_NUMERICS_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace freemax {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ErrorCode {
    invalid_argument,  // precondition violated by the caller
    invalid_law,       // bad law parameters (shape <= 0, scale <= 0, ...)
    domain,            // argument outside the support where the operation is defined
    io,                // unreadable / unwritable file
    parse,             // malformed CSV / JSON input
    numerical,         // precision or overflow failure
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::invalid_law: return "invalid_law";
    case ErrorCode::domain: return "domain";
    case ErrorCode::io: return "io";
    case ErrorCode::parse: return "parse";
    case ErrorCode::numerical: return "numerical";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool ok, ErrorCode code, const std::string& what) {
    if (!ok) throw Error(code, what);
}

namespace detail {

// Order-preserving bijection between doubles (no NaN) and signed 64-bit keys.
inline std::int64_t order_key(double x) {
    if (x == 0.0) x = 0.0;  // fold -0 onto +0
    const auto bits = std::bit_cast<std::int64_t>(x);
    return bits >= 0 ? bits : std::numeric_limits<std::int64_t>::min() - bits;
}

inline double from_order_key(std::int64_t key) {
    const std::int64_t bits = key >= 0 ? key : std::numeric_limits<std::int64_t>::min() - key;
    return std::bit_cast<double>(bits);
}

}  // namespace detail

/// Smallest double x in [lo, hi] with pred(x) true, for a predicate that is
/// monotone (false ... false true ... true) on that interval. Endpoints may be
/// infinite. Returns +inf when pred(hi) is false. Terminates in at most 64
/// evaluations because the search runs over the ordered bit patterns.
template <typename Pred>
double first_true(Pred&& pred, double lo, double hi) {
    if (pred(lo)) return lo;
    if (!pred(hi)) return kInf;
    std::int64_t a = detail::order_key(lo);  // pred false
    std::int64_t b = detail::order_key(hi);  // pred true
    // the key range can exceed the int64 range, so measure it unsigned
    const auto span = [&] { return static_cast<std::uint64_t>(b) - static_cast<std::uint64_t>(a); };
    while (span() > 1) {
        const auto mid = static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + span() / 2);
        if (pred(detail::from_order_key(mid)))
            b = mid;
        else
            a = mid;
    }
    return detail::from_order_key(b);
}

/// Adaptive Gauss-Kronrod (21-point) integration on a finite interval. The
/// tolerance is relative to the L1 norm of the integrand.
template <typename F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-13) {
    if (!(b > a)) return 0.0;
    double error = 0.0;
    double l1 = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 21>::integrate(std::forward<F>(f), a, b,
                                                                        18, rel_tol, &error, &l1);
}

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
    std::vector<double> out;
    if (count == 0) return out;
    if (count == 1) return {lo};
    out.reserve(count);
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out.push_back(lo + step * static_cast<double>(i));
    out.back() = hi;
    return out;
}

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
/// handled exactly once; callers write results by index so the outcome does
/// not depend on scheduling.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < count; i += threads) body(i);
            } catch (...) {
                failures[t] = std::current_exception();
            }
        });
    }
    for (auto& worker : pool) worker.join();
    for (auto& failure : failures)
        if (failure) std::rethrow_exception(failure);
}

}  // namespace freemax

#endif  // FREEMAX_NUMERICS_HPP
