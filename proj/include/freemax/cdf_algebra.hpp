#ifndef FREEMAX_CDF_ALGEBRA_HPP
#define FREEMAX_CDF_ALGEBRA_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "freemax/cdf.hpp"
#include "freemax/numerics.hpp"

namespace freemax {

namespace detail {

inline std::vector<double> merged_jumps(const Cdf& f, const Cdf& g) {
    std::vector<double> out = f.jumps();
    const std::vector<double> more = g.jumps();
    out.insert(out.end(), more.begin(), more.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// inf{x : F(x) > 0} for a node whose lower endpoint has no closed form.
inline double support_lower(const CdfNode& node, double lo, double hi) {
    const auto positive = [&](double x) { return node.at({}, x).value > 0.0; };
    const double x = first_true(positive, lo, hi);
    if (!std::isfinite(x)) return x;
    // continuous rise: the endpoint is the last point where F vanishes
    if (node.before({}, x).value > 0.0 && x > lo) return std::nextafter(x, -kInf);
    return x;
}

/// inf{x : F(x) = 1}
inline double support_upper(const CdfNode& node, double lo, double hi) {
    return first_true([&](double x) { return node.at({}, x).tail <= 0.0; }, lo, hi);
}

class FreeMaxNode final : public CdfNode {
public:
    FreeMaxNode(Cdf f, Cdf g) : f_(std::move(f)), g_(std::move(g)) {
        upper_ = std::max(f_.upper(), g_.upper());
        lower_ = support_lower(*this, std::max(f_.lower(), g_.lower()), upper_);
    }
    Probe at(const Affine& m, double x) const override {
        return combine(f_.node().at(m, x), g_.node().at(m, x));
    }
    Probe before(const Affine& m, double x) const override {
        return combine(f_.node().before(m, x), g_.node().before(m, x));
    }
    double lower() const override { return lower_; }
    double upper() const override { return upper_; }
    CdfTag tag() const override { return CdfTag::derived; }
    std::vector<double> jumps() const override {
        std::vector<double> out;
        for (double j : merged_jumps(f_, g_))
            if (j >= lower_) out.push_back(j);
        return out;
    }

private:
    static Probe combine(Probe a, Probe b) {
        return {std::max(0.0, a.value + b.value - 1.0), std::min(a.tail + b.tail, 1.0)};
    }
    Cdf f_, g_;
    double lower_ = -kInf, upper_ = kInf;
};

class FreeMinNode final : public CdfNode {
public:
    FreeMinNode(Cdf f, Cdf g) : f_(std::move(f)), g_(std::move(g)) {
        lower_ = std::min(f_.lower(), g_.lower());
        upper_ = support_upper(*this, lower_, std::min(f_.upper(), g_.upper()));
    }
    Probe at(const Affine& m, double x) const override {
        return combine(f_.node().at(m, x), g_.node().at(m, x));
    }
    Probe before(const Affine& m, double x) const override {
        return combine(f_.node().before(m, x), g_.node().before(m, x));
    }
    double lower() const override { return lower_; }
    double upper() const override { return upper_; }
    CdfTag tag() const override { return CdfTag::derived; }
    std::vector<double> jumps() const override {
        std::vector<double> out;
        for (double j : merged_jumps(f_, g_))
            if (j <= upper_) out.push_back(j);
        return out;
    }

private:
    static Probe combine(Probe a, Probe b) {
        return {std::min(a.value + b.value, 1.0), std::max(0.0, a.tail + b.tail - 1.0)};
    }
    Cdf f_, g_;
    double lower_ = -kInf, upper_ = kInf;
};

class ClassicalMaxNode final : public CdfNode {
public:
    ClassicalMaxNode(Cdf f, Cdf g) : f_(std::move(f)), g_(std::move(g)) {}
    Probe at(const Affine& m, double x) const override {
        return combine(f_.node().at(m, x), g_.node().at(m, x));
    }
    Probe before(const Affine& m, double x) const override {
        return combine(f_.node().before(m, x), g_.node().before(m, x));
    }
    double lower() const override { return std::max(f_.lower(), g_.lower()); }
    double upper() const override { return std::max(f_.upper(), g_.upper()); }
    CdfTag tag() const override { return CdfTag::derived; }
    std::vector<double> jumps() const override { return merged_jumps(f_, g_); }

private:
    static Probe combine(Probe a, Probe b) {
        return {a.value * b.value, a.tail + b.tail - a.tail * b.tail};
    }
    Cdf f_, g_;
};

/// Tail min(s * (1 - F), 1): the free max-iterate for integral s.
class PowerNode final : public CdfNode {
public:
    PowerNode(Cdf f, double s) : f_(std::move(f)), s_(s) {
        lower_ = support_lower(*this, f_.lower(), f_.upper());
    }
    Probe at(const Affine& m, double x) const override { return apply(f_.node().at(m, x)); }
    Probe before(const Affine& m, double x) const override { return apply(f_.node().before(m, x)); }
    double lower() const override { return lower_; }
    double upper() const override { return f_.upper(); }
    CdfTag tag() const override { return CdfTag::derived; }
    std::vector<double> jumps() const override {
        std::vector<double> out;
        for (double j : f_.jumps())
            if (j >= lower_) out.push_back(j);
        return out;
    }
    std::optional<double> quantile_hint(double p) const override {
        if (p <= 0.0) return lower_;
        return tail_inverse_hint(1.0 - p);
    }
    std::optional<double> tail_inverse_hint(double q) const override {
        if (!f_.continuous() || q >= 1.0) return std::nullopt;
        return tail_inverse(f_, q / s_);
    }
    std::optional<double> upper_gap_hint(double q) const override {
        if (!f_.continuous() || !std::isfinite(f_.upper())) return std::nullopt;
        return upper_gap(f_, q / s_);
    }

private:
    Probe apply(Probe p) const {
        const double tail = std::min(s_ * p.tail, 1.0);
        return {std::max(0.0, 1.0 - tail), tail};
    }
    Cdf f_;
    double s_;
    double lower_ = -kInf;
};

/// x -> F(a x + b)
class RescaleNode final : public CdfNode {
public:
    RescaleNode(Cdf f, double a, double b) : f_(std::move(f)), a_(a), b_(b) {}
    Probe at(const Affine& m, double x) const override { return f_.node().at(m.then(a_, b_), x); }
    Probe before(const Affine& m, double x) const override {
        return f_.node().before(m.then(a_, b_), x);
    }
    double lower() const override { return back(f_.lower()); }
    double upper() const override { return back(f_.upper()); }
    CdfTag tag() const override { return CdfTag::derived; }
    std::vector<double> jumps() const override {
        std::vector<double> out;
        for (double j : f_.jumps()) out.push_back(back(j));
        return out;
    }
    std::optional<double> quantile_hint(double p) const override { return back(quantile(f_, p)); }
    std::optional<double> tail_inverse_hint(double q) const override {
        return back(tail_inverse(f_, q));
    }
    std::optional<double> upper_gap_hint(double q) const override {
        if (!f_.continuous() || !std::isfinite(f_.upper())) return std::nullopt;
        return upper_gap(f_, q) / a_;
    }

private:
    double back(double y) const { return std::isfinite(y) ? (y - b_) / a_ : y; }
    Cdf f_;
    double a_, b_;
};

/// Law of -X: x -> 1 - F((-x)-)
class ReflectNode final : public CdfNode {
public:
    explicit ReflectNode(Cdf f) : f_(std::move(f)) {}
    Probe at(const Affine& m, double x) const override {
        return f_.node().before(m.then(-1.0, 0.0), x).swapped();
    }
    Probe before(const Affine& m, double x) const override {
        return f_.node().at(m.then(-1.0, 0.0), x).swapped();
    }
    double lower() const override { return -f_.upper(); }
    double upper() const override { return -f_.lower(); }
    CdfTag tag() const override { return CdfTag::derived; }
    std::vector<double> jumps() const override {
        std::vector<double> out;
        for (double j : f_.jumps()) out.push_back(-j);
        std::reverse(out.begin(), out.end());
        return out;
    }

private:
    Cdf f_;
};

/// x -> P(X <= u + x | X > u)
class ExceedanceNode final : public CdfNode {
public:
    ExceedanceNode(Cdf f, double u) : f_(std::move(f)), u_(u) {
        const Probe at_u = f_.probe(u_);
        fu_ = at_u.value;
        tail_u_ = at_u.tail;
        lower_ = support_lower(*this, 0.0, upper());
    }
    Probe at(const Affine& m, double x) const override {
        if (m(x) < 0.0) return {0.0, 1.0};
        return apply(f_.node().at(m.then(1.0, u_), x));
    }
    Probe before(const Affine& m, double x) const override {
        if (m(x) <= 0.0) return {0.0, 1.0};
        return apply(f_.node().before(m.then(1.0, u_), x));
    }
    double lower() const override { return lower_; }
    double upper() const override { return f_.upper() - u_; }
    CdfTag tag() const override { return CdfTag::derived; }
    std::vector<double> jumps() const override {
        std::vector<double> out;
        for (double j : f_.jumps())
            if (j > u_) out.push_back(j - u_);
        return out;
    }
    std::optional<double> tail_inverse_hint(double q) const override {
        if (!f_.continuous() || q >= 1.0) return std::nullopt;
        return std::max(0.0, tail_inverse(f_, q * tail_u_) - u_);
    }
    std::optional<double> quantile_hint(double p) const override {
        if (p <= 0.0) return lower_;
        return tail_inverse_hint(1.0 - p);
    }

private:
    Probe apply(Probe p) const {
        const double tail = std::clamp(p.tail / tail_u_, 0.0, 1.0);
        if (tail < 0.5) return {1.0 - tail, tail};
        const double value = std::clamp((p.value - fu_) / tail_u_, 0.0, 1.0);
        return {value, tail};
    }
    Cdf f_;
    double u_;
    double fu_ = 0.0, tail_u_ = 1.0;
    double lower_ = 0.0;
};

/// x -> (1 + c ln F(x))_+
class FcNode final : public CdfNode {
public:
    FcNode(Cdf f, double c) : f_(std::move(f)), c_(c) {
        lower_ = support_lower(*this, f_.lower(), f_.upper());
    }
    Probe at(const Affine& m, double x) const override { return apply(f_.node().at(m, x)); }
    Probe before(const Affine& m, double x) const override { return apply(f_.node().before(m, x)); }
    double lower() const override { return lower_; }
    double upper() const override { return f_.upper(); }
    CdfTag tag() const override { return CdfTag::derived; }
    std::vector<double> jumps() const override {
        std::vector<double> out;
        for (double j : f_.jumps())
            if (j >= lower_) out.push_back(j);
        return out;
    }

private:
    Probe apply(Probe p) const {
        if (p.value <= 0.0) return {0.0, 1.0};
        const double log_f = p.tail < 0.5 ? std::log1p(-p.tail) : std::log(p.value);
        const double tail = std::min(1.0, -c_ * log_f);
        return {std::max(0.0, 1.0 - tail), tail};
    }
    Cdf f_;
    double c_;
    double lower_ = -kInf;
};

/// Normalized restriction of mu + nu to (t, inf), given total mass r > 0 there.
class RestrictionNode final : public CdfNode {
public:
    RestrictionNode(Cdf f, Cdf g, double t, double mass)
        : f_(std::move(f)), g_(std::move(g)), t_(t), mass_(mass) {
        ft_ = f_(t_);
        gt_ = g_(t_);
        lower_ = t_;
    }
    Probe at(const Affine& m, double x) const override {
        if (m(x) <= t_) return {0.0, 1.0};
        return apply(f_.node().at(m, x), g_.node().at(m, x));
    }
    Probe before(const Affine& m, double x) const override {
        if (m(x) <= t_) return {0.0, 1.0};
        return apply(f_.node().before(m, x), g_.node().before(m, x));
    }
    double lower() const override { return lower_; }
    double upper() const override { return std::max(f_.upper(), g_.upper()); }
    CdfTag tag() const override { return CdfTag::derived; }
    std::vector<double> jumps() const override {
        std::vector<double> out;
        for (double j : merged_jumps(f_, g_))
            if (j > t_) out.push_back(j);
        return out;
    }

private:
    Probe apply(Probe a, Probe b) const {
        const double tail = std::clamp((a.tail + b.tail) / mass_, 0.0, 1.0);
        if (tail < 0.5) return {1.0 - tail, tail};
        return {std::clamp(((a.value - ft_) + (b.value - gt_)) / mass_, 0.0, 1.0), tail};
    }
    Cdf f_, g_;
    double t_, mass_;
    double ft_ = 0.0, gt_ = 0.0;
    double lower_ = -kInf;
};

/// Convex combination of laws.
class MixtureNode final : public CdfNode {
public:
    explicit MixtureNode(std::vector<std::pair<double, Cdf>> parts) : parts_(std::move(parts)) {
        double total = 0.0;
        for (const auto& [w, f] : parts_) {
            require(w >= 0.0, ErrorCode::invalid_argument, "mixture: negative weight");
            total += w;
        }
        require(std::abs(total - 1.0) <= 1e-12, ErrorCode::invalid_argument,
                "mixture: weights must sum to 1");
    }
    Probe at(const Affine& m, double x) const override {
        return sum([&](const Cdf& f) { return f.node().at(m, x); });
    }
    Probe before(const Affine& m, double x) const override {
        return sum([&](const Cdf& f) { return f.node().before(m, x); });
    }
    double lower() const override {
        double lo = kInf;
        for (const auto& [w, f] : parts_)
            if (w > 0.0) lo = std::min(lo, f.lower());
        return lo;
    }
    double upper() const override {
        double hi = -kInf;
        for (const auto& [w, f] : parts_)
            if (w > 0.0) hi = std::max(hi, f.upper());
        return hi;
    }
    CdfTag tag() const override { return CdfTag::derived; }
    std::vector<double> jumps() const override {
        std::vector<double> out;
        for (const auto& [w, f] : parts_) {
            if (w <= 0.0) continue;
            const auto js = f.jumps();
            out.insert(out.end(), js.begin(), js.end());
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

private:
    template <typename Eval>
    Probe sum(Eval&& eval) const {
        double value = 0.0;
        double tail = 0.0;
        for (const auto& [w, f] : parts_) {
            if (w <= 0.0) continue;
            const Probe p = eval(f);
            value += w * p.value;
            tail += w * p.tail;
        }
        return {std::clamp(value, 0.0, 1.0), std::clamp(tail, 0.0, 1.0)};
    }
    std::vector<std::pair<double, Cdf>> parts_;
};

/// Continuous law given by its tail on [lo, hi].
class TailFunctionNode final : public CdfNode {
public:
    TailFunctionNode(std::function<double(double)> tail, double lo, double hi)
        : tail_(std::move(tail)), lo_(lo), hi_(hi) {}
    Probe at(const Affine& m, double x) const override {
        const double y = m(x);
        if (y <= lo_) return {0.0, 1.0};
        if (y >= hi_) return {1.0, 0.0};
        return Probe::from_tail(tail_(y));
    }
    double lower() const override { return lo_; }
    double upper() const override { return hi_; }
    CdfTag tag() const override { return CdfTag::parametric; }

private:
    std::function<double(double)> tail_;
    double lo_, hi_;
};

}  // namespace detail

struct MeasureDecomposition {
    double t = 0.0;
    double atom_mass = 0.0;
    Cdf restricted_tail_measure;
    /// Total mass of the restriction before normalization, 1 - atom_mass.
    double restricted_mass = 0.0;
};

inline Cdf free_max_conv(const Cdf& f, const Cdf& g) { return make_cdf<detail::FreeMaxNode>(f, g); }
inline Cdf free_min_conv(const Cdf& f, const Cdf& g) { return make_cdf<detail::FreeMinNode>(f, g); }
inline Cdf classical_max_conv(const Cdf& f, const Cdf& g) {
    return make_cdf<detail::ClassicalMaxNode>(f, g);
}

/// Real powers s >= 1 of the free max-convolution; tail min(s(1 - F), 1).
inline Cdf free_max_power(const Cdf& f, double s) {
    require(std::isfinite(s) && s >= 1.0, ErrorCode::invalid_argument, "free_max_power: s must be >= 1");
    if (s == 1.0) return f;
    return make_cdf<detail::PowerNode>(f, s);
}

inline Cdf free_max_iterate(const Cdf& f, long long n) {
    require(n >= 1, ErrorCode::invalid_argument, "free_max_iterate: n must be >= 1");
    return free_max_power(f, static_cast<double>(n));
}

/// x -> F(a x + b)
inline Cdf rescale(const Cdf& f, double a, double b) {
    require(std::isfinite(a) && a > 0.0, ErrorCode::invalid_argument, "rescale: a must be > 0");
    require(std::isfinite(b), ErrorCode::invalid_argument, "rescale: b must be finite");
    if (a == 1.0 && b == 0.0) return f;
    return make_cdf<detail::RescaleNode>(f, a, b);
}

inline Cdf reflect(const Cdf& f) { return make_cdf<detail::ReflectNode>(f); }

inline Cdf exceedance_cdf(const Cdf& f, double u) {
    require(u < f.upper(), ErrorCode::domain, "exceedance_cdf: threshold at or beyond the upper endpoint");
    require(f.tail(u) > 0.0, ErrorCode::domain, "exceedance_cdf: empty conditioning event");
    return make_cdf<detail::ExceedanceNode>(f, u);
}

/// Continuous law with the given tail on (lo, hi); the caller guarantees
/// monotonicity.
inline Cdf custom_cdf(std::function<double(double)> tail, double lo, double hi) {
    require(lo < hi, ErrorCode::invalid_argument, "custom_cdf: empty support");
    return make_cdf<detail::TailFunctionNode>(std::move(tail), lo, hi);
}

inline Cdf mixture(std::vector<std::pair<double, Cdf>> parts) {
    require(!parts.empty(), ErrorCode::invalid_argument, "mixture: no components");
    return make_cdf<detail::MixtureNode>(std::move(parts));
}

/// sup{x : F(x) <= 1 - 1/n}, the lower endpoint of the n-th free max-iterate.
inline double lower_endpoint_iterate(const Cdf& f, long long n) {
    require(n >= 2, ErrorCode::invalid_argument, "lower_endpoint_iterate: n must be >= 2");
    const double p = 1.0 / static_cast<double>(n);
    if (f.continuous()) {
        if (auto hint = f.node().tail_inverse_hint(p)) return *hint;
    }
    const double x = tail_crossing(f, p);
    return std::isfinite(x) ? std::nextafter(x, -kInf) : x;
}

/// u_n = inf{t : 1 - F(t) < 1/n}
inline double threshold_un(const Cdf& f, long long n) {
    require(n >= 1, ErrorCode::invalid_argument, "threshold_un: n must be >= 1");
    return tail_crossing(f, 1.0 / static_cast<double>(n));
}

/// Splits the free max-convolution of the laws of F and G into the atom at
/// t = inf{x : (mu + nu)((x, inf)) <= 1} and the normalized restriction of
/// mu + nu to (t, inf).
inline MeasureDecomposition atom_decomposition_max(const Cdf& f, const Cdf& g) {
    const auto fits = [&](double x) { return f.tail(x) + g.tail(x) <= 1.0; };
    const double hi = std::max(f.upper(), g.upper());
    const double t = first_true(fits, std::max(f.lower(), g.lower()), hi);
    require(std::isfinite(t), ErrorCode::numerical, "atom_decomposition_max: threshold not found");
    const double mass = std::min(1.0, f.tail(t) + g.tail(t));
    const double atom = 1.0 - mass;
    if (mass <= 0.0) return {t, 1.0, point_mass(t), 0.0};
    return {t, atom, make_cdf<detail::RestrictionNode>(f, g, t, mass), mass};
}

/// atom * delta_t + (1 - atom) * restriction
inline Cdf reassemble(const MeasureDecomposition& d) {
    if (d.atom_mass >= 1.0) return point_mass(d.t);
    if (d.atom_mass <= 0.0) return d.restricted_tail_measure;
    return mixture({{d.atom_mass, point_mass(d.t)}, {1.0 - d.atom_mass, d.restricted_tail_measure}});
}

}  // namespace freemax

#endif  // FREEMAX_CDF_ALGEBRA_HPP
