#ifndef FREEMAX_CDF_HPP
#define FREEMAX_CDF_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "freemax/numerics.hpp"
#include "freemax/random.hpp"

namespace freemax {

/// Inner affine map x -> scale * x + shift applied before evaluating a CDF.
/// Nodes push it down to the parametric leaves so that laws with a finite
/// upper endpoint can form (endpoint - shift) - scale * x without cancellation.
struct Affine {
    double scale = 1.0;
    double shift = 0.0;

    double operator()(double x) const { return scale * x + shift; }

    /// The map x -> a * (*this)(x) + b.
    Affine then(double a, double b) const { return {a * scale, a * shift + b}; }
};

/// F and its tail 1 - F evaluated together. Tails are computed directly
/// wherever they can be small so that n * tail stays accurate for large n.
struct Probe {
    double value = 0.0;
    double tail = 1.0;

    static Probe from_tail(double tail) {
        tail = std::clamp(tail, 0.0, 1.0);
        return {1.0 - tail, tail};
    }
    static Probe from_value(double value) {
        value = std::clamp(value, 0.0, 1.0);
        return {value, 1.0 - value};
    }
    Probe swapped() const { return {tail, value}; }
};

enum class CdfTag { parametric, stepped, derived };

class CdfNode {
public:
    virtual ~CdfNode() = default;

    /// F(m(x)) together with its tail.
    virtual Probe at(const Affine& m, double x) const = 0;
    /// Left limit F(y-) at y = m(x). Continuous nodes reuse at().
    virtual Probe before(const Affine& m, double x) const { return at(m, x); }

    /// Support endpoints alpha(F), omega(F); may be infinite.
    virtual double lower() const = 0;
    virtual double upper() const = 0;
    virtual CdfTag tag() const = 0;

    /// Locations where F may jump. Empty for continuous laws.
    virtual std::vector<double> jumps() const { return {}; }

    /// Closed forms when available; callers fall back to bisection.
    virtual std::optional<double> quantile_hint(double /*p*/) const { return std::nullopt; }
    /// inf{x : 1 - F(x) <= q}
    virtual std::optional<double> tail_inverse_hint(double /*q*/) const { return std::nullopt; }
    /// omega(F) - inf{x : 1 - F(x) < q}, for laws with a finite upper endpoint.
    virtual std::optional<double> upper_gap_hint(double /*q*/) const { return std::nullopt; }
};

/// Immutable, cheaply copyable distribution function.
class Cdf {
public:
    explicit Cdf(std::shared_ptr<const CdfNode> node) : node_(std::move(node)) {
        require(node_ != nullptr, ErrorCode::invalid_argument, "Cdf: null node");
    }

    double operator()(double x) const { return node_->at({}, x).value; }
    double tail(double x) const { return node_->at({}, x).tail; }
    double left_limit(double x) const { return node_->before({}, x).value; }
    Probe probe(double x, const Affine& m = {}) const { return node_->at(m, x); }

    double lower() const { return node_->lower(); }
    double upper() const { return node_->upper(); }
    CdfTag tag() const { return node_->tag(); }
    std::vector<double> jumps() const { return node_->jumps(); }
    bool continuous() const { return node_->jumps().empty(); }

    const CdfNode& node() const { return *node_; }
    const std::shared_ptr<const CdfNode>& shared() const { return node_; }

private:
    std::shared_ptr<const CdfNode> node_;
};

template <typename Node, typename... Args>
Cdf make_cdf(Args&&... args) {
    return Cdf(std::make_shared<const Node>(std::forward<Args>(args)...));
}

// ---------------------------------------------------------------------------
// Stepped distribution functions (empirical, tabulated, convolution carriers).

enum class Interpolation { piecewise_constant, piecewise_linear };

class SteppedCdf final : public CdfNode {
public:
    /// Breakpoints strictly increasing; values in [0,1] and nondecreasing.
    /// Violations up to 1e-12 are clamped, larger ones rejected.
    SteppedCdf(std::vector<double> breakpoints, std::vector<double> values, Interpolation mode)
        : xs_(std::move(breakpoints)), vs_(std::move(values)), mode_(mode) {
        constexpr double slack = 1e-12;
        require(!xs_.empty(), ErrorCode::invalid_argument, "SteppedCdf: no breakpoints");
        require(xs_.size() == vs_.size(), ErrorCode::invalid_argument,
                "SteppedCdf: breakpoint/value count mismatch");
        double running = 0.0;
        for (std::size_t i = 0; i < xs_.size(); ++i) {
            require(std::isfinite(xs_[i]) && std::isfinite(vs_[i]), ErrorCode::invalid_argument,
                    "SteppedCdf: non-finite entry");
            if (i > 0)
                require(xs_[i] > xs_[i - 1], ErrorCode::invalid_argument,
                        "SteppedCdf: breakpoints must be strictly increasing");
            double v = vs_[i];
            require(v >= -slack && v <= 1.0 + slack, ErrorCode::invalid_argument,
                    "SteppedCdf: value outside [0,1]");
            require(v >= running - slack, ErrorCode::invalid_argument,
                    "SteppedCdf: values must be nondecreasing");
            v = std::clamp(std::max(v, running), 0.0, 1.0);
            vs_[i] = v;
            running = v;
        }
        require(vs_.back() > 0.0, ErrorCode::invalid_argument, "SteppedCdf: all values are zero");
        if (std::abs(vs_.back() - 1.0) <= slack) vs_.back() = 1.0;
        compute_endpoints();
    }

    const std::vector<double>& breakpoints() const { return xs_; }
    const std::vector<double>& values() const { return vs_; }
    Interpolation mode() const { return mode_; }

    Probe at(const Affine& m, double x) const override { return Probe::from_value(eval(m(x), false)); }
    Probe before(const Affine& m, double x) const override { return Probe::from_value(eval(m(x), true)); }

    double lower() const override { return lower_; }
    double upper() const override { return upper_; }
    CdfTag tag() const override { return CdfTag::stepped; }

    std::vector<double> jumps() const override {
        std::vector<double> out;
        if (mode_ == Interpolation::piecewise_linear) {
            if (vs_.front() > 0.0) out.push_back(xs_.front());
            return out;
        }
        double prev = 0.0;
        for (std::size_t i = 0; i < xs_.size(); ++i) {
            if (vs_[i] > prev) out.push_back(xs_[i]);
            prev = vs_[i];
        }
        return out;
    }

    std::optional<double> quantile_hint(double p) const override {
        if (p <= 0.0) return lower_;
        const auto it = std::lower_bound(vs_.begin(), vs_.end(), p);
        if (it == vs_.end()) return kInf;
        const auto i = static_cast<std::size_t>(it - vs_.begin());
        if (mode_ == Interpolation::piecewise_constant || i == 0) return xs_[i];
        const double frac = (p - vs_[i - 1]) / (vs_[i] - vs_[i - 1]);
        return xs_[i - 1] + frac * (xs_[i] - xs_[i - 1]);
    }

private:
    double eval(double y, bool left) const {
        // index of the last breakpoint <= y (or < y for the left limit)
        const auto it = left ? std::lower_bound(xs_.begin(), xs_.end(), y)
                             : std::upper_bound(xs_.begin(), xs_.end(), y);
        if (it == xs_.begin()) return 0.0;
        const auto i = static_cast<std::size_t>(it - xs_.begin()) - 1;
        if (mode_ == Interpolation::piecewise_constant || i + 1 == xs_.size()) return vs_[i];
        if (left && y == xs_[i + 1]) return vs_[i + 1];
        const double frac = (y - xs_[i]) / (xs_[i + 1] - xs_[i]);
        return vs_[i] + frac * (vs_[i + 1] - vs_[i]);
    }

    void compute_endpoints() {
        if (mode_ == Interpolation::piecewise_constant || vs_.front() > 0.0) {
            const auto it = std::find_if(vs_.begin(), vs_.end(), [](double v) { return v > 0.0; });
            lower_ = xs_[static_cast<std::size_t>(it - vs_.begin())];
        } else {
            std::size_t j = 0;
            while (j + 1 < vs_.size() && vs_[j + 1] == 0.0) ++j;
            lower_ = xs_[j];
        }
        const auto top = std::find_if(vs_.begin(), vs_.end(), [](double v) { return v >= 1.0; });
        upper_ = top == vs_.end() ? kInf : xs_[static_cast<std::size_t>(top - vs_.begin())];
    }

    std::vector<double> xs_;
    std::vector<double> vs_;
    Interpolation mode_;
    double lower_ = -kInf;
    double upper_ = kInf;
};

inline Cdf stepped_cdf(std::vector<double> breakpoints, std::vector<double> values, Interpolation mode) {
    return make_cdf<SteppedCdf>(std::move(breakpoints), std::move(values), mode);
}

/// Piecewise-linear CDF through tabulated (x, F) pairs. A last value below 1
/// leaves the remaining mass beyond the table.
inline Cdf tabulated_cdf(std::vector<double> xs, std::vector<double> fs) {
    return stepped_cdf(std::move(xs), std::move(fs), Interpolation::piecewise_linear);
}

/// Right-continuous empirical CDF with a jump of 1/n at every sample.
inline Cdf empirical_cdf(std::vector<double> samples) {
    require(!samples.empty(), ErrorCode::invalid_argument, "empirical_cdf: empty sample");
    for (double s : samples)
        require(std::isfinite(s), ErrorCode::invalid_argument, "empirical_cdf: non-finite sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    std::vector<double> xs;
    std::vector<double> vs;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double v = static_cast<double>(i + 1) / n;
        if (!xs.empty() && xs.back() == samples[i])
            vs.back() = v;
        else {
            xs.push_back(samples[i]);
            vs.push_back(v);
        }
    }
    vs.back() = 1.0;
    return stepped_cdf(std::move(xs), std::move(vs), Interpolation::piecewise_constant);
}

inline Cdf point_mass(double at) { return stepped_cdf({at}, {1.0}, Interpolation::piecewise_constant); }

// ---------------------------------------------------------------------------
// Generalized inverses.

namespace detail {

/// Moves a closed-form guess onto the first double where the monotone
/// predicate holds, so inverses agree exactly with the evaluated CDF.
template <typename Pred>
double snap_first_true(Pred&& pred, double guess, double lo, double hi) {
    if (!std::isfinite(guess)) return guess;
    double x = guess;
    for (int step = 0; step < 16 && !pred(x); ++step) x = std::nextafter(x, kInf);
    if (!pred(x)) return first_true(pred, lo, hi);
    for (int step = 0; step < 16; ++step) {
        const double below = std::nextafter(x, -kInf);
        if (below < lo || !pred(below)) return x;
        x = below;
    }
    return first_true(pred, lo, x);
}

}  // namespace detail

/// inf{x : F(x) >= p}; -inf at p = 0.
inline double quantile(const Cdf& f, double p) {
    require(p >= 0.0 && p <= 1.0, ErrorCode::invalid_argument, "quantile: p outside [0,1]");
    if (p == 0.0) return -kInf;
    const auto pred = [&](double x) { return f(x) >= p; };
    if (auto hint = f.node().quantile_hint(p)) return detail::snap_first_true(pred, *hint, f.lower(), f.upper());
    return first_true(pred, f.lower(), f.upper());
}

/// inf{x : 1 - F(x) <= q}. Accurate in the upper tail where quantile(1 - q)
/// would lose the digits of q.
inline double tail_inverse(const Cdf& f, double q) {
    require(q >= 0.0 && q <= 1.0, ErrorCode::invalid_argument, "tail_inverse: q outside [0,1]");
    if (q == 1.0) return -kInf;
    const auto pred = [&](double x) { return f.tail(x) <= q; };
    if (auto hint = f.node().tail_inverse_hint(q))
        return detail::snap_first_true(pred, *hint, f.lower(), f.upper());
    return first_true(pred, f.lower(), f.upper());
}

/// inf{t : 1 - F(t) < p} for p in (0, 1].
inline double tail_crossing(const Cdf& f, double p) {
    require(p > 0.0 && p <= 1.0, ErrorCode::invalid_argument, "tail_crossing: p outside (0,1]");
    if (f.continuous() && p < 1.0) {
        if (auto hint = f.node().tail_inverse_hint(p)) return *hint;
    }
    const double lo = std::isfinite(f.lower()) ? f.lower() : -kInf;
    return first_true([&](double t) { return f.tail(t) < p; }, lo, f.upper());
}

/// omega(F) - tail_crossing(F, p), computed without cancellation when the law
/// provides a closed form.
inline double upper_gap(const Cdf& f, double p) {
    require(std::isfinite(f.upper()), ErrorCode::domain, "upper_gap: infinite upper endpoint");
    if (f.continuous() && p < 1.0) {
        if (auto hint = f.node().upper_gap_hint(p)) return *hint;
    }
    return f.upper() - tail_crossing(f, p);
}

// ---------------------------------------------------------------------------
// Comparison grids and distances.

struct GridSpec {
    std::size_t points = 2001;
    double tail_prob = 1e-4;
    /// Also place `points` nodes at evenly spaced probability levels of each
    /// law, which resolves heavy tails that a linear grid undersamples.
    bool quantile_points = true;
};

/// Grid spanning [min quantile(p), max quantile(1 - p)] over the given laws,
/// widened to every finite support endpoint, with jump locations inserted.
inline std::vector<double> comparison_grid(std::span<const Cdf> cdfs, const GridSpec& spec = {}) {
    require(!cdfs.empty(), ErrorCode::invalid_argument, "comparison_grid: no laws");
    require(spec.points >= 2, ErrorCode::invalid_argument, "comparison_grid: need >= 2 points");
    require(spec.tail_prob > 0.0 && spec.tail_prob < 0.5, ErrorCode::invalid_argument,
            "comparison_grid: tail_prob outside (0, 0.5)");
    double lo = kInf;
    double hi = -kInf;
    for (const Cdf& f : cdfs) {
        const double q_lo = quantile(f, spec.tail_prob);
        const double q_hi = tail_inverse(f, spec.tail_prob);
        if (std::isfinite(q_lo)) lo = std::min(lo, q_lo);
        if (std::isfinite(q_hi)) hi = std::max(hi, q_hi);
        for (double e : {f.lower(), f.upper()}) {
            if (std::isfinite(e)) {
                lo = std::min(lo, e);
                hi = std::max(hi, e);
            }
        }
    }
    require(std::isfinite(lo) && std::isfinite(hi), ErrorCode::numerical,
            "comparison_grid: could not bracket the laws");
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    std::vector<double> grid = linspace(lo, hi, spec.points);
    for (const Cdf& f : cdfs) {
        if (spec.quantile_points) {
            for (double p : linspace(spec.tail_prob, 1.0 - spec.tail_prob, spec.points)) {
                const double x = p <= 0.5 ? quantile(f, p) : tail_inverse(f, 1.0 - p);
                if (std::isfinite(x) && x >= lo && x <= hi) grid.push_back(x);
            }
        }
        for (double j : f.jumps())
            if (j >= lo && j <= hi) grid.push_back(j);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

inline std::vector<double> comparison_grid(const Cdf& f, const Cdf& g, const GridSpec& spec = {}) {
    const Cdf both[] = {f, g};
    return comparison_grid(both, spec);
}

/// max over the grid of |F(x) - G(x)|, evaluated through the tails where
/// both are close to one.
inline double sup_distance(const Cdf& f, const Cdf& g, std::span<const double> grid) {
    double worst = 0.0;
    for (double x : grid) {
        const Probe a = f.probe(x);
        const Probe b = g.probe(x);
        const double d = a.value < 0.5 && b.value < 0.5 ? std::abs(a.value - b.value)
                                                        : std::abs(a.tail - b.tail);
        worst = std::max(worst, d);
    }
    return worst;
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and F.
inline double ks_distance(std::vector<double> samples, const Cdf& f) {
    require(!samples.empty(), ErrorCode::invalid_argument, "ks_distance: empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double x = samples[i];
        // empirical value just before and at x, accounting for ties
        std::size_t j = i;
        while (j + 1 < samples.size() && samples[j + 1] == x) ++j;
        const double below = static_cast<double>(i) / n;
        const double at = static_cast<double>(j + 1) / n;
        worst = std::max({worst, std::abs(f.left_limit(x) - below), std::abs(f(x) - at)});
        i = j;
    }
    return worst;
}

/// Draws `count` variates by inverting the tail: X = tail_inverse(F, V) with V
/// uniform on (0, 1).
inline std::vector<double> sample_inverse_cdf(const Cdf& f, std::size_t count, RngSeed seed) {
    auto engine = seed.engine();
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<double> out;
    out.reserve(count);
    while (out.size() < count) {
        const double v = uniform(engine);
        if (v <= 0.0) continue;
        out.push_back(tail_inverse(f, v));
    }
    return out;
}

}  // namespace freemax

#endif  // FREEMAX_CDF_HPP
