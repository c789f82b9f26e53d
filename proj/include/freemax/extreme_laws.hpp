#ifndef FREEMAX_EXTREME_LAWS_HPP
#define FREEMAX_EXTREME_LAWS_HPP

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include <boost/math/tools/minima.hpp>

#include "freemax/cdf.hpp"
#include "freemax/cdf_algebra.hpp"
#include "freemax/free_poisson_laws.hpp"
#include "freemax/laws.hpp"
#include "freemax/numerics.hpp"

namespace freemax {

enum class LawKind {
    FreeTypeI,
    FreeTypeII,
    FreeTypeIII,
    GeneralizedPareto,
    ClassicalGumbel,
    ClassicalFrechet,
    ClassicalWeibull,
    Uniform,
    StdNormal,
    MarchenkoPastur,
    Triangular,
    PerturbedPareto,
};

inline constexpr std::array<std::pair<LawKind, std::string_view>, 12> kLawKindNames{{
    {LawKind::FreeTypeI, "FreeTypeI"},
    {LawKind::FreeTypeII, "FreeTypeII"},
    {LawKind::FreeTypeIII, "FreeTypeIII"},
    {LawKind::GeneralizedPareto, "GeneralizedPareto"},
    {LawKind::ClassicalGumbel, "ClassicalGumbel"},
    {LawKind::ClassicalFrechet, "ClassicalFrechet"},
    {LawKind::ClassicalWeibull, "ClassicalWeibull"},
    {LawKind::Uniform, "Uniform"},
    {LawKind::StdNormal, "StdNormal"},
    {LawKind::MarchenkoPastur, "MarchenkoPastur"},
    {LawKind::Triangular, "Triangular"},
    {LawKind::PerturbedPareto, "PerturbedPareto"},
}};

inline std::string_view to_string(LawKind kind) {
    for (const auto& [k, name] : kLawKindNames)
        if (k == kind) return name;
    return "unknown";
}

inline LawKind parse_law_kind(std::string_view name) {
    for (const auto& [k, n] : kLawKindNames)
        if (n == name) return k;
    throw Error(ErrorCode::invalid_law, "unknown law kind: " + std::string(name));
}

/// Free max-stable types, numbered as in the classification.
enum class FreeType { I = 1, II = 2, III = 3 };

inline FreeType parse_free_type(std::string_view name) {
    if (name == "I" || name == "1") return FreeType::I;
    if (name == "II" || name == "2") return FreeType::II;
    if (name == "III" || name == "3") return FreeType::III;
    throw Error(ErrorCode::invalid_argument, "unknown free type: " + std::string(name));
}

inline std::string_view to_string(FreeType t) {
    switch (t) {
    case FreeType::I: return "I";
    case FreeType::II: return "II";
    case FreeType::III: return "III";
    }
    return "?";
}

inline LawKind law_kind_of(FreeType t) {
    switch (t) {
    case FreeType::I: return LawKind::FreeTypeI;
    case FreeType::II: return LawKind::FreeTypeII;
    case FreeType::III: return LawKind::FreeTypeIII;
    }
    return LawKind::FreeTypeI;
}

/// Parametric law F((x - location) / scale). Unset shape means the kind's
/// default: 1 for alpha-shaped kinds and the MP / triangular parameters, 0 for
/// the generalized Pareto.
struct LawSpec {
    LawKind kind = LawKind::Uniform;
    std::optional<double> shape;
    double location = 0.0;
    double scale = 1.0;

    double resolved_shape() const {
        if (shape) return *shape;
        return kind == LawKind::GeneralizedPareto ? 0.0 : 1.0;
    }
    bool uses_shape() const {
        switch (kind) {
        case LawKind::FreeTypeI:
        case LawKind::ClassicalGumbel:
        case LawKind::Uniform:
        case LawKind::StdNormal: return false;
        default: return true;
        }
    }
};

inline Cdf make_law(const LawSpec& spec) {
    const double s = spec.resolved_shape();
    const double b = spec.location;
    const double a = spec.scale;
    require(std::isfinite(a) && a > 0.0, ErrorCode::invalid_law, "law scale must be > 0");
    require(std::isfinite(b), ErrorCode::invalid_law, "law location must be finite");
    switch (spec.kind) {
    case LawKind::FreeTypeI: return exponential_cdf(b, a);
    case LawKind::FreeTypeII: return pareto_cdf(s, b, a);
    case LawKind::FreeTypeIII: return beta_cdf(s, b, a);
    case LawKind::GeneralizedPareto: return gpd_cdf(s, b, a);
    case LawKind::ClassicalGumbel: return gumbel_cdf(b, a);
    case LawKind::ClassicalFrechet: return frechet_cdf(s, b, a);
    case LawKind::ClassicalWeibull: return weibull_cdf(s, b, a);
    case LawKind::Uniform: return uniform_cdf(b, b + a);
    case LawKind::StdNormal: return normal_cdf(b, a);
    case LawKind::MarchenkoPastur: return mp_cdf(s, b, a);
    case LawKind::Triangular: return triangular_law_cdf(s, b, a);
    case LawKind::PerturbedPareto: {
        require(std::isfinite(s) && s > 0.0, ErrorCode::invalid_law, "PerturbedPareto: alpha must be > 0");
        // tail x^-alpha / (1 + ln x) on [1, inf), slowly varying correction
        const Cdf base = custom_cdf([s](double x) { return std::pow(x, -s) / (1.0 + std::log(x)); }, 1.0, kInf);
        return rescale(base, 1.0 / a, -b / a);
    }
    }
    throw Error(ErrorCode::invalid_law, "unsupported law kind");
}

/// Standard member of a free type.
inline Cdf free_type_law(FreeType type, double alpha = 1.0) {
    return make_law({law_kind_of(type), alpha, 0.0, 1.0});
}

/// x -> (1 + c ln F(x))_+, with value 0 where F vanishes.
inline Cdf f_c_map(const Cdf& f, double c) {
    require(std::isfinite(c) && c > 0.0, ErrorCode::invalid_argument, "f_c_map: c must be > 0");
    return make_cdf<detail::FcNode>(f, c);
}

struct StabilityConstants {
    double s = 1.0;
    double a_of_s = 1.0;
    double b_of_s = 0.0;
    double theta = 0.0;
    double c = 0.0;
};

/// Constants with free_max_power(G, s)(a(s) x + b(s)) = G(x) for the standard
/// member G of each free type.
inline StabilityConstants stability_constants(FreeType type, double alpha, double s) {
    require(std::isfinite(s) && s >= 1.0, ErrorCode::invalid_argument, "stability_constants: s must be >= 1");
    if (type != FreeType::I)
        require(std::isfinite(alpha) && alpha > 0.0, ErrorCode::invalid_law,
                "stability_constants: alpha must be > 0");
    switch (type) {
    case FreeType::I: return {s, 1.0, std::log(s), 0.0, 1.0};
    case FreeType::II: return {s, std::pow(s, 1.0 / alpha), 0.0, 1.0 / alpha, 0.0};
    case FreeType::III: return {s, std::pow(s, -1.0 / alpha), 0.0, -1.0 / alpha, 0.0};
    }
    throw Error(ErrorCode::invalid_argument, "stability_constants: unknown type");
}

struct StabilityCheck {
    bool stable = false;
    double a = std::numeric_limits<double>::quiet_NaN();
    double b = std::numeric_limits<double>::quiet_NaN();
    double sup_distance = std::numeric_limits<double>::quiet_NaN();
    bool bounded_below = true;
};

inline void require_nondegenerate(const Cdf& g, const char* who) {
    require(quantile(g, 0.25) < quantile(g, 0.75), ErrorCode::invalid_argument,
            std::string(who) + ": degenerate law");
}

/// Sup distance over the grid between G^{free k}(a x + b) and G.
inline double stability_distance(const Cdf& g, long long k, double a, double b, std::span<const double> grid) {
    return sup_distance(rescale(free_max_iterate(g, k), a, b), g, grid);
}

/// Fits (a_k, b_k) from the quartiles of G^{free k} and G, then checks the
/// grid sup distance against tol. Laws unbounded below are rejected without
/// the grid comparison deciding, though the fit is still reported.
inline StabilityCheck verify_max_stable(const Cdf& g, long long k, double tol, const GridSpec& spec = {}) {
    require(k >= 2, ErrorCode::invalid_argument, "verify_max_stable: k must be >= 2");
    require_nondegenerate(g, "verify_max_stable");
    const Cdf h = free_max_iterate(g, k);
    const double g1 = quantile(g, 0.25), g3 = quantile(g, 0.75);
    const double h1 = quantile(h, 0.25), h3 = quantile(h, 0.75);
    StabilityCheck out;
    out.a = (h3 - h1) / (g3 - g1);
    out.b = h1 - out.a * g1;
    out.bounded_below = std::isfinite(g.lower());
    const auto grid = comparison_grid(std::span<const Cdf>(&g, 1), spec);
    out.sup_distance = stability_distance(g, k, out.a, out.b, grid);
    out.stable = out.bounded_below && out.sup_distance <= tol;
    return out;
}

struct MinimizedStability {
    double a = 1.0;
    double b = 0.0;
    double sup_distance = 1.0;
};

/// Minimizes the grid sup distance between G^{free k}(a x + b) and G over
/// (a, b), starting from the quartile fit. A strictly positive minimum shows
/// G is not free max-stable.
inline MinimizedStability minimized_stability_distance(const Cdf& g, long long k, const GridSpec& spec = {}) {
    const StabilityCheck fit = verify_max_stable(g, k, 0.0, spec);
    const auto grid = comparison_grid(std::span<const Cdf>(&g, 1), spec);
    const double spread = quantile(g, 0.75) - quantile(g, 0.25);
    const double log_a0 = std::log(fit.a);
    const int bits = 30;
    std::uintmax_t iters = 0;
    const auto best_b = [&](double log_a) {
        const double a = std::exp(log_a);
        const auto f = [&](double b) { return stability_distance(g, k, a, b, grid); };
        iters = 200;
        return boost::math::tools::brent_find_minima(f, fit.b - 2.0 * spread * a, fit.b + 2.0 * spread * a,
                                                     bits, iters);
    };
    const auto outer = [&](double log_a) { return best_b(log_a).second; };
    std::uintmax_t outer_iters = 200;
    const auto [log_a, dist] =
        boost::math::tools::brent_find_minima(outer, log_a0 - 2.0, log_a0 + 2.0, bits, outer_iters);
    const auto [b, d] = best_b(log_a);
    MinimizedStability out{std::exp(log_a), b, d};
    // never report worse than the starting fit
    if (fit.sup_distance < out.sup_distance) out = {fit.a, fit.b, fit.sup_distance};
    (void)dist;
    return out;
}

struct GpdCorrespondence {
    FreeType type = FreeType::I;
    double alpha = 0.0;  // unused for type I
    double a = 1.0;
    double b = 0.0;
};

/// G_gamma = rescale(standard law of the matching free type, a, b).
inline GpdCorrespondence gpd_correspondence(double gamma) {
    require(std::isfinite(gamma), ErrorCode::invalid_argument, "gpd_correspondence: gamma must be finite");
    if (gamma > 0.0) return {FreeType::II, 1.0 / gamma, gamma, 1.0};
    if (gamma < 0.0) return {FreeType::III, -1.0 / gamma, -gamma, -1.0};
    return {FreeType::I, 0.0, 1.0, 0.0};
}

}  // namespace freemax

#endif  // FREEMAX_EXTREME_LAWS_HPP
