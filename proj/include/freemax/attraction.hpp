#ifndef FREEMAX_ATTRACTION_HPP
#define FREEMAX_ATTRACTION_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "freemax/cdf.hpp"
#include "freemax/cdf_algebra.hpp"
#include "freemax/extreme_laws.hpp"
#include "freemax/numerics.hpp"

namespace freemax {

/// g(t) = E[X - t | X > t] = (integral of 1 - F over (t, omega)) / (1 - F(t)).
/// The integral stops where the tail falls below 1e-15 times min(1, 1 - F(t)).
inline double mean_excess(const Cdf& f, double t) {
    require(std::isfinite(t), ErrorCode::invalid_argument, "mean_excess: t must be finite");
    require(t < f.upper(), ErrorCode::domain, "mean_excess: t at or beyond the upper endpoint");
    const double tail_t = f.tail(t);
    require(tail_t > 0.0, ErrorCode::domain, "mean_excess: empty tail beyond t");
    const double cutoff = 1e-15 * std::min(1.0, tail_t);
    double end = std::min(f.upper(), tail_crossing(f, cutoff));
    require(std::isfinite(end), ErrorCode::numerical, "mean_excess: tail does not decay");
    // geometric panels keep each quadrature call on a range where the tail
    // changes by a bounded factor
    double width = tail_crossing(f, 0.5 * tail_t) - t;
    if (!(width > 0.0) || !std::isfinite(width)) width = (end - t) / 64.0;
    const auto tail = [&](double s) { return f.tail(s); };
    double total = 0.0;
    double a = t;
    while (a < end) {
        const double b = std::min(end, a + width);
        total += integrate(tail, a, b, 1e-12);
        a = b;
        width *= 2.0;
    }
    // heavy tails: add the Karamata remainder end * F(end) / (alpha - 1),
    // with the local index read off the tail at end and 2 end
    if (!std::isfinite(f.upper()) && end > 0.0) {
        const double here = f.tail(end), there = f.tail(2.0 * end);
        if (here > 0.0 && there > 0.0) {
            const double alpha = std::log(here / there) / std::log(2.0);
            if (alpha > 1.0) total += end * here / (alpha - 1.0);
        }
    }
    return total / tail_t;
}

enum class NormingRecipe { TypeI_mean_excess, TypeII_un, TypeIII_endpoint, custom };

inline std::string_view to_string(NormingRecipe r) {
    switch (r) {
    case NormingRecipe::TypeI_mean_excess: return "TypeI_mean_excess";
    case NormingRecipe::TypeII_un: return "TypeII_un";
    case NormingRecipe::TypeIII_endpoint: return "TypeIII_endpoint";
    case NormingRecipe::custom: return "custom";
    }
    return "custom";
}

struct NormingConstants {
    long long n = 1;
    double a_n = 1.0;
    double b_n = 0.0;
    NormingRecipe recipe = NormingRecipe::custom;
};

/// Type II: (u_n, 0). Type III: (omega - u_n, omega). Type I: (g(u_n), u_n).
inline NormingConstants norming_constants(const Cdf& f, long long n, FreeType type) {
    require(n >= 2, ErrorCode::invalid_argument, "norming_constants: n must be >= 2");
    switch (type) {
    case FreeType::II: {
        require(!std::isfinite(f.upper()), ErrorCode::domain,
                "norming_constants: type II needs an unbounded upper tail");
        const double u = threshold_un(f, n);
        require(u > 0.0, ErrorCode::domain, "norming_constants: type II needs u_n > 0");
        return {n, u, 0.0, NormingRecipe::TypeII_un};
    }
    case FreeType::III: {
        require(std::isfinite(f.upper()), ErrorCode::domain,
                "norming_constants: type III needs a finite upper endpoint");
        const double a = upper_gap(f, 1.0 / static_cast<double>(n));
        require(a > 0.0, ErrorCode::domain, "norming_constants: atom at the upper endpoint");
        return {n, a, f.upper(), NormingRecipe::TypeIII_endpoint};
    }
    case FreeType::I: {
        const double u = threshold_un(f, n);
        return {n, mean_excess(f, u), u, NormingRecipe::TypeI_mean_excess};
    }
    }
    throw Error(ErrorCode::invalid_argument, "norming_constants: unknown type");
}

struct ConvergenceRow {
    long long n = 1;
    double a_n = 1.0;
    double b_n = 0.0;
    double sup_distance = 0.0;
};

/// One row per constant set: grid sup distance between F^{free n}(a_n x + b_n)
/// and G. Rows come back sorted by n whatever the thread count.
inline std::vector<ConvergenceRow> convergence_report(const Cdf& f, const Cdf& g,
                                                      std::vector<NormingConstants> constants,
                                                      const GridSpec& spec = {}, unsigned threads = 1) {
    for (const auto& c : constants)
        require(std::isfinite(c.a_n) && c.a_n > 0.0 && c.n >= 1, ErrorCode::invalid_argument,
                "convergence_report: need a_n > 0 and n >= 1");
    std::stable_sort(constants.begin(), constants.end(),
                     [](const NormingConstants& x, const NormingConstants& y) { return x.n < y.n; });
    std::vector<ConvergenceRow> rows(constants.size());
    parallel_for(constants.size(), threads, [&](std::size_t i) {
        const auto& c = constants[i];
        const Cdf h = rescale(free_max_iterate(f, c.n), c.a_n, c.b_n);
        const auto grid = comparison_grid(h, g, spec);
        rows[i] = {c.n, c.a_n, c.b_n, sup_distance(h, g, grid)};
    });
    return rows;
}

enum class RvMode { at_infinity, at_endpoint };

/// Max over the lattice of |tail(t x)/tail(t) - x^{-alpha}| (at infinity) or
/// |tail(omega - x h)/tail(omega - h) - x^{alpha}| (at the endpoint).
inline double rv_check(const Cdf& f, double alpha, RvMode mode, std::span<const double> xs,
                       std::span<const double> scales) {
    require(std::isfinite(alpha) && alpha > 0.0, ErrorCode::invalid_argument, "rv_check: alpha must be > 0");
    double worst = 0.0;
    if (mode == RvMode::at_infinity) {
        for (double t : scales) {
            const double base = f.tail(t);
            require(base > 0.0, ErrorCode::domain, "rv_check: t beyond the effective support");
            for (double x : xs)
                worst = std::max(worst, std::abs(f.tail(t * x) / base - std::pow(x, -alpha)));
        }
        return worst;
    }
    const double omega = f.upper();
    require(std::isfinite(omega), ErrorCode::domain, "rv_check: endpoint mode needs a finite upper endpoint");
    for (double h : scales) {
        // F(omega - h x) with the gap formed inside the law
        const Affine near_end{-h, omega};
        const double base = f.probe(1.0, near_end).tail;
        require(base > 0.0, ErrorCode::domain, "rv_check: h below the effective support");
        for (double x : xs)
            worst = std::max(worst, std::abs(f.probe(x, near_end).tail / base - std::pow(x, alpha)));
    }
    return worst;
}

struct GpdFit {
    double gamma_hat = 0.0;
    double sigma_hat = 1.0;
    long long n_exceedances = 0;
    double log_likelihood = 0.0;
};

namespace detail {

inline double gpd_log_likelihood(std::span<const double> xs, double gamma, double sigma) {
    const double n = static_cast<double>(xs.size());
    double acc = 0.0;
    if (std::abs(gamma) < 1e-12) {
        for (double x : xs) acc += x;
        return -n * std::log(sigma) - acc / sigma;
    }
    for (double x : xs) {
        const double z = gamma * x / sigma;
        if (!(z > -1.0)) return -kInf;
        acc += std::log1p(z);
    }
    return -n * std::log(sigma) - (1.0 + 1.0 / gamma) * acc;
}

struct ProfilePoint {
    double gamma;
    double sigma;
    double loglik;
};

inline ProfilePoint gpd_profile(std::span<const double> xs, double gamma, double x_max, double sigma_guess) {
    double lo = std::log(sigma_guess) - 12.0;
    const double hi = std::log(sigma_guess) + 12.0;
    if (gamma < 0.0) lo = std::max(lo, std::log(-gamma * x_max) + 1e-12);
    const auto neg = [&](double log_sigma) { return -gpd_log_likelihood(xs, gamma, std::exp(log_sigma)); };
    std::uintmax_t iters = 200;
    auto [best, value] = boost::math::tools::brent_find_minima(neg, lo, hi, 40, iters);
    // Brent never evaluates the bracket ends; the likelihood can peak there
    if (neg(lo) < value) {
        best = lo;
        value = neg(lo);
    }
    return {gamma, std::exp(best), -value};
}

}  // namespace detail

/// Maximum-likelihood fit of G_gamma(x / sigma) to positive exceedances with
/// sigma profiled out. The profile is scanned over gamma in [-1, 5] from a
/// probability-weighted-moments start and refined by Brent's method.
inline GpdFit fit_gpd(std::vector<double> xs) {
    require(xs.size() >= 20, ErrorCode::invalid_argument, "fit_gpd: need at least 20 exceedances");
    for (double x : xs)
        require(std::isfinite(x) && x > 0.0, ErrorCode::invalid_argument, "fit_gpd: exceedances must be positive");
    std::sort(xs.begin(), xs.end());
    require(xs.front() < xs.back(), ErrorCode::invalid_argument, "fit_gpd: degenerate sample");
    const double n = static_cast<double>(xs.size());
    const double x_max = xs.back();

    // probability weighted moments
    double a0 = 0.0, a1 = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double p = (static_cast<double>(i) + 0.65) / n;
        a0 += xs[i];
        a1 += (1.0 - p) * xs[i];
    }
    a0 /= n;
    a1 /= n;
    double gamma0 = 0.0, sigma0 = a0;
    if (a0 - 2.0 * a1 > 0.0) {
        gamma0 = std::clamp(2.0 - a0 / (a0 - 2.0 * a1), -1.0, 5.0);
        sigma0 = std::max(2.0 * a0 * a1 / (a0 - 2.0 * a1), 1e-300);
    }

    constexpr double lo = -1.0, hi = 5.0;
    const auto profile = [&](double gamma) { return detail::gpd_profile(xs, gamma, x_max, sigma0); };
    const auto better = [](const detail::ProfilePoint& a, const detail::ProfilePoint& b) {
        const double scale = std::max(1.0, std::abs(b.loglik));
        if (a.loglik > b.loglik + 1e-12 * scale) return true;
        if (b.loglik > a.loglik + 1e-12 * scale) return false;
        return std::abs(a.gamma) < std::abs(b.gamma);
    };
    detail::ProfilePoint best = profile(gamma0);
    for (double g = lo; g <= hi + 1e-12; g += 0.25) {
        const auto p = profile(g);
        if (better(p, best)) best = p;
    }
    const double left = std::max(lo, best.gamma - 0.25), right = std::min(hi, best.gamma + 0.25);
    std::uintmax_t iters = 100;
    const auto neg = [&](double g) { return -profile(g).loglik; };
    const auto [g_star, v_star] = boost::math::tools::brent_find_minima(neg, left, right, 30, iters);
    (void)v_star;
    for (double g : {g_star, left, right}) {
        const auto p = profile(g);
        if (better(p, best)) best = p;
    }
    return {best.gamma, best.sigma, static_cast<long long>(xs.size()), best.loglik};
}

struct BdhRow {
    double u = 0.0;
    double sigma_u = 1.0;
    double sup_distance = 0.0;
};

/// Median of G_gamma: (2^gamma - 1)/gamma, or ln 2 at gamma = 0.
inline double gpd_median(double gamma) {
    if (std::abs(gamma) < 1e-12) return std::numbers::ln2;
    return std::expm1(gamma * std::numbers::ln2) / gamma;
}

/// For each threshold u: scale sigma_u matching the median of the exceedance
/// law to that of G_gamma(x / sigma), and the grid sup distance between them.
inline std::vector<BdhRow> balkema_de_haan_check(const Cdf& f, double gamma, std::span<const double> us,
                                                 const GridSpec& spec = {}) {
    std::vector<BdhRow> rows;
    for (double u : us) {
        require(u < f.upper(), ErrorCode::domain, "balkema_de_haan_check: threshold at or beyond the endpoint");
        const Cdf e = exceedance_cdf(f, u);
        const double sigma = tail_inverse(e, 0.5) / gpd_median(gamma);
        require(std::isfinite(sigma) && sigma > 0.0, ErrorCode::numerical,
                "balkema_de_haan_check: could not match the median");
        const Cdf g = gpd_cdf(gamma, 0.0, sigma);
        const auto grid = comparison_grid(e, g, spec);
        rows.push_back({u, sigma, sup_distance(e, g, grid)});
    }
    return rows;
}

}  // namespace freemax

#endif  // FREEMAX_ATTRACTION_HPP
