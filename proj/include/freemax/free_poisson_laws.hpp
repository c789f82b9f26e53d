#ifndef FREEMAX_FREE_POISSON_LAWS_HPP
#define FREEMAX_FREE_POISSON_LAWS_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "freemax/laws.hpp"

namespace freemax {

namespace detail {

/// Free Poisson law with rate a and jump size 1: atom (1 - a)_+ at 0 and density
/// sqrt((l+ - x)(x - l-)) / (2 pi x) on [l-, l+], l+- = (1 +- sqrt a)^2.
/// With `conditional` set, only the continuous part, renormalized.
class MarchenkoPasturLaw final : public ParametricNode {
public:
    MarchenkoPasturLaw(double a, bool conditional, double location, double scale)
        : ParametricNode(location, scale), conditional_(conditional) {
        require(std::isfinite(a) && a > 0.0, ErrorCode::invalid_law, "Marchenko-Pastur: a must be > 0");
        r_ = std::sqrt(a);
        lo_ = (1.0 - r_) * (1.0 - r_);
        hi_ = (1.0 + r_) * (1.0 + r_);
        m_ = 1.0 + a;
        g_ = std::abs(1.0 - a);
        atom_ = conditional_ ? 0.0 : std::max(0.0, 1.0 - a);
        // the bulk integrates to min(a, 1)
        scale_ = conditional_ ? 1.0 / std::min(1.0, a) : 1.0;
    }

    double atom() const { return atom_; }
    double bulk_lower() const { return lo_; }
    double bulk_upper() const { return hi_; }

    std::vector<double> jumps() const override {
        if (atom_ > 0.0) return {out(0.0)};
        return {};
    }

protected:
    Probe standard_at(const Affine& c, double x) const override { return eval(c(x), false); }
    Probe standard_before(const Affine& c, double x) const override { return eval(c(x), true); }
    double standard_lower() const override { return atom_ > 0.0 ? 0.0 : lo_; }
    double standard_upper() const override { return hi_; }

private:
    // Antiderivative of sqrt((l+ - x)(x - l-)) / x in closed form. With
    // u = (x - m) / 2r and v = (m x - g^2) / (2 r x), the bulk mass below x is
    // [ sqrt(R) + m acos(-u) - g acos(-v) ] / 2 pi, and above x the same with
    // the signs flipped, so each side is evaluated without cancellation.
    Probe eval(double y, bool left) const {
        if (y < 0.0 || (left && y == 0.0)) return {0.0, 1.0};
        if (y <= lo_) return {atom_, 1.0 - atom_};
        if (y >= hi_) return {1.0, 0.0};
        const double root = std::sqrt((hi_ - y) * (y - lo_));
        const double u = std::clamp((y - m_) / (2.0 * r_), -1.0, 1.0);
        const double v = g_ == 0.0 ? 0.0 : std::clamp((m_ * y - g_ * g_) / (2.0 * r_ * y), -1.0, 1.0);
        const double k = scale_ / (2.0 * std::numbers::pi);
        if (y <= m_) {
            const double below = k * (root + m_ * std::acos(-u) - g_ * std::acos(-v));
            return {atom_ + below, std::max(0.0, 1.0 - atom_ - below)};
        }
        const double above = k * (-root + m_ * std::acos(u) - g_ * std::acos(v));
        return {std::max(0.0, 1.0 - above), std::max(0.0, above)};
    }

    bool conditional_;
    double r_ = 0.0, lo_ = 0.0, hi_ = 0.0, m_ = 0.0, g_ = 0.0;
    double atom_ = 0.0, scale_ = 1.0;
};

/// Tail min(m (1 - t), 1) on [0, 1): an atom 1 - m at 0 when m < 1.
class TriangularLaw final : public ParametricNode {
public:
    TriangularLaw(double m, double location, double scale) : ParametricNode(location, scale), m_(m) {
        require(std::isfinite(m) && m > 0.0, ErrorCode::invalid_law, "triangular law: m must be > 0");
        lower_ = m_ <= 1.0 ? 0.0 : 1.0 - 1.0 / m_;
    }

    std::vector<double> jumps() const override {
        if (m_ < 1.0) return {out(0.0)};
        return {};
    }

protected:
    Probe standard_at(const Affine& c, double x) const override {
        if (c(x) < 0.0) return {0.0, 1.0};
        return Probe::from_tail(std::min(1.0, m_ * std::max(0.0, gap(c, 1.0, x))));
    }
    Probe standard_before(const Affine& c, double x) const override {
        if (c(x) <= 0.0) return {0.0, 1.0};
        return standard_at(c, x);
    }
    double standard_lower() const override { return lower_; }
    double standard_upper() const override { return 1.0; }
    std::optional<double> standard_quantile(double p) const override {
        if (p <= 0.0) return lower_;
        return standard_tail_inverse(1.0 - p);
    }
    std::optional<double> standard_tail_inverse(double q) const override {
        if (q >= 1.0) return -kInf;
        return std::max(lower_, 1.0 - q / m_);
    }
    std::optional<double> standard_upper_gap(double q) const override {
        return std::min(q / m_, 1.0 - lower_);
    }

private:
    double m_;
    double lower_ = 0.0;
};

}  // namespace detail

inline Cdf mp_cdf(double a, double location = 0.0, double scale = 1.0) {
    return make_cdf<detail::MarchenkoPasturLaw>(a, false, location, scale);
}

/// The continuous part of mp_cdf(a), renormalized to a probability law.
inline Cdf mp_continuous_cdf(double a) { return make_cdf<detail::MarchenkoPasturLaw>(a, true, 0.0, 1.0); }

inline Cdf triangular_law_cdf(double m, double location = 0.0, double scale = 1.0) {
    return make_cdf<detail::TriangularLaw>(m, location, scale);
}

}  // namespace freemax

#endif  // FREEMAX_FREE_POISSON_LAWS_HPP
