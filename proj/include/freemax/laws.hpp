#ifndef FREEMAX_LAWS_HPP
#define FREEMAX_LAWS_HPP

#include <cmath>
#include <memory>
#include <numbers>
#include <optional>

#include <boost/math/special_functions/erf.hpp>

#include "freemax/cdf.hpp"
#include "freemax/numerics.hpp"

namespace freemax {

namespace detail {

/// Law of location + scale * Y for a standard law Y. Subclasses evaluate the
/// standard law at c(x) for a composed affine map c, which lets laws with a
/// finite upper endpoint w form the gap (w - c.shift) - c.scale * x directly.
class ParametricNode : public CdfNode {
public:
    ParametricNode(double location, double scale) : location_(location), scale_(scale) {
        require(std::isfinite(location), ErrorCode::invalid_law, "law location must be finite");
        require(std::isfinite(scale) && scale > 0.0, ErrorCode::invalid_law, "law scale must be > 0");
    }

    Probe at(const Affine& m, double x) const override { return standard_at(compose(m), x); }
    Probe before(const Affine& m, double x) const override { return standard_before(compose(m), x); }
    double lower() const override { return out(standard_lower()); }
    double upper() const override { return out(standard_upper()); }
    CdfTag tag() const override { return CdfTag::parametric; }

    std::optional<double> quantile_hint(double p) const override {
        if (auto y = standard_quantile(p)) return out(*y);
        return std::nullopt;
    }
    std::optional<double> tail_inverse_hint(double q) const override {
        if (auto y = standard_tail_inverse(q)) return out(*y);
        return std::nullopt;
    }
    std::optional<double> upper_gap_hint(double q) const override {
        if (auto g = standard_upper_gap(q)) return scale_ * *g;
        return std::nullopt;
    }

protected:
    virtual Probe standard_at(const Affine& c, double x) const = 0;
    virtual Probe standard_before(const Affine& c, double x) const { return standard_at(c, x); }
    virtual double standard_lower() const = 0;
    virtual double standard_upper() const = 0;
    virtual std::optional<double> standard_quantile(double /*p*/) const { return std::nullopt; }
    virtual std::optional<double> standard_tail_inverse(double /*q*/) const { return std::nullopt; }
    virtual std::optional<double> standard_upper_gap(double /*q*/) const { return std::nullopt; }

    double out(double y) const { return std::isfinite(y) ? location_ + scale_ * y : y; }

private:
    Affine compose(const Affine& m) const { return m.then(1.0 / scale_, -location_ / scale_); }
    double location_;
    double scale_;
};

/// w - c(x) for an endpoint w, without forming c(x) first.
inline double gap(const Affine& c, double w, double x) { return (w - c.shift) - c.scale * x; }

inline Probe tail_power(double base, double exponent) {
    // base^exponent and its complement, accurate when base is near 1
    const double log_base = std::abs(base - 1.0) < 0.5 ? std::log1p(base - 1.0) : std::log(base);
    return {-std::expm1(exponent * log_base), std::exp(exponent * log_base)};
}

/// Uniform on [0, 1].
class UniformLaw final : public ParametricNode {
public:
    using ParametricNode::ParametricNode;

protected:
    Probe standard_at(const Affine& c, double x) const override {
        const double y = c(x);
        if (y <= 0.0) return {0.0, 1.0};
        const double g = gap(c, 1.0, x);
        if (g <= 0.0) return {1.0, 0.0};
        return y < 0.5 ? Probe{y, 1.0 - y} : Probe{1.0 - g, g};
    }
    double standard_lower() const override { return 0.0; }
    double standard_upper() const override { return 1.0; }
    std::optional<double> standard_quantile(double p) const override { return p; }
    std::optional<double> standard_tail_inverse(double q) const override { return 1.0 - q; }
    std::optional<double> standard_upper_gap(double q) const override { return q; }
};

/// (1 - e^{-y})_+
class ExponentialLaw final : public ParametricNode {
public:
    using ParametricNode::ParametricNode;

protected:
    Probe standard_at(const Affine& c, double x) const override {
        const double y = c(x);
        if (y <= 0.0) return {0.0, 1.0};
        return {-std::expm1(-y), std::exp(-y)};
    }
    double standard_lower() const override { return 0.0; }
    double standard_upper() const override { return kInf; }
    std::optional<double> standard_quantile(double p) const override {
        return p >= 1.0 ? kInf : -std::log1p(-p);
    }
    std::optional<double> standard_tail_inverse(double q) const override {
        return q <= 0.0 ? kInf : -std::log(q);
    }
};

/// (1 - y^{-alpha})_+
class ParetoLaw final : public ParametricNode {
public:
    ParetoLaw(double alpha, double location, double scale) : ParametricNode(location, scale), alpha_(alpha) {
        require(std::isfinite(alpha) && alpha > 0.0, ErrorCode::invalid_law, "Pareto: alpha must be > 0");
    }

protected:
    Probe standard_at(const Affine& c, double x) const override {
        const double y = c(x);
        if (y <= 1.0) return {0.0, 1.0};
        return tail_power(y, -alpha_);
    }
    double standard_lower() const override { return 1.0; }
    double standard_upper() const override { return kInf; }
    std::optional<double> standard_quantile(double p) const override {
        return p >= 1.0 ? kInf : std::exp(-std::log1p(-p) / alpha_);
    }
    std::optional<double> standard_tail_inverse(double q) const override {
        return q <= 0.0 ? kInf : std::pow(q, -1.0 / alpha_);
    }

private:
    double alpha_;
};

/// 1 - |y|^alpha on [-1, 0]
class BetaLaw final : public ParametricNode {
public:
    BetaLaw(double alpha, double location, double scale) : ParametricNode(location, scale), alpha_(alpha) {
        require(std::isfinite(alpha) && alpha > 0.0, ErrorCode::invalid_law, "Beta: alpha must be > 0");
    }

protected:
    Probe standard_at(const Affine& c, double x) const override {
        const double g = gap(c, 0.0, x);
        if (g <= 0.0) return {1.0, 0.0};
        if (g >= 1.0) return {0.0, 1.0};
        return tail_power(g, alpha_);
    }
    double standard_lower() const override { return -1.0; }
    double standard_upper() const override { return 0.0; }
    std::optional<double> standard_quantile(double p) const override {
        return -std::exp(std::log1p(-p) / alpha_);
    }
    std::optional<double> standard_tail_inverse(double q) const override {
        return -std::pow(q, 1.0 / alpha_);
    }
    std::optional<double> standard_upper_gap(double q) const override { return std::pow(q, 1.0 / alpha_); }

private:
    double alpha_;
};

/// G_gamma(y) = 1 - (1 + gamma y)^{-1/gamma}, exponential at gamma = 0.
class GeneralizedParetoLaw final : public ParametricNode {
public:
    GeneralizedParetoLaw(double gamma, double location, double scale)
        : ParametricNode(location, scale), gamma_(gamma) {
        require(std::isfinite(gamma), ErrorCode::invalid_law, "GPD: gamma must be finite");
    }

protected:
    Probe standard_at(const Affine& c, double x) const override {
        const double y = c(x);
        if (y <= 0.0) return {0.0, 1.0};
        if (gamma_ == 0.0) return {-std::expm1(-y), std::exp(-y)};
        double log_base = 0.0;
        if (gamma_ < 0.0) {
            const double g = gap(c, -1.0 / gamma_, x);
            if (g <= 0.0) return {1.0, 0.0};
            const double z = -gamma_ * y;
            log_base = z < 0.5 ? std::log1p(-z) : std::log(-gamma_ * g);
        } else {
            log_base = std::log1p(gamma_ * y);
        }
        const double log_tail = -log_base / gamma_;
        return {-std::expm1(log_tail), std::exp(log_tail)};
    }
    double standard_lower() const override { return 0.0; }
    double standard_upper() const override { return gamma_ < 0.0 ? -1.0 / gamma_ : kInf; }
    std::optional<double> standard_quantile(double p) const override {
        if (p >= 1.0) return standard_upper();
        return from_log_tail(std::log1p(-p));
    }
    std::optional<double> standard_tail_inverse(double q) const override {
        if (q <= 0.0) return standard_upper();
        return from_log_tail(std::log(q));
    }
    std::optional<double> standard_upper_gap(double q) const override {
        if (gamma_ >= 0.0) return std::nullopt;
        return std::pow(q, -gamma_) / -gamma_;
    }

private:
    // solves log tail(y) = lt
    double from_log_tail(double lt) const {
        if (gamma_ == 0.0) return -lt;
        return std::expm1(-gamma_ * lt) / gamma_;
    }
    double gamma_;
};

/// exp(-e^{-y})
class GumbelLaw final : public ParametricNode {
public:
    using ParametricNode::ParametricNode;

protected:
    Probe standard_at(const Affine& c, double x) const override {
        const double t = std::exp(-c(x));
        return {std::exp(-t), -std::expm1(-t)};
    }
    double standard_lower() const override { return -kInf; }
    double standard_upper() const override { return kInf; }
    std::optional<double> standard_quantile(double p) const override {
        if (p <= 0.0) return -kInf;
        return p >= 1.0 ? kInf : -std::log(-std::log(p));
    }
    std::optional<double> standard_tail_inverse(double q) const override {
        if (q <= 0.0) return kInf;
        return -std::log(-std::log1p(-q));
    }
};

/// exp(-y^{-alpha}) for y > 0
class FrechetLaw final : public ParametricNode {
public:
    FrechetLaw(double alpha, double location, double scale) : ParametricNode(location, scale), alpha_(alpha) {
        require(std::isfinite(alpha) && alpha > 0.0, ErrorCode::invalid_law, "Frechet: alpha must be > 0");
    }

protected:
    Probe standard_at(const Affine& c, double x) const override {
        const double y = c(x);
        if (y <= 0.0) return {0.0, 1.0};
        const double t = std::pow(y, -alpha_);
        return {std::exp(-t), -std::expm1(-t)};
    }
    double standard_lower() const override { return 0.0; }
    double standard_upper() const override { return kInf; }
    std::optional<double> standard_quantile(double p) const override {
        if (p >= 1.0) return kInf;
        return std::pow(-std::log(p), -1.0 / alpha_);
    }
    std::optional<double> standard_tail_inverse(double q) const override {
        if (q <= 0.0) return kInf;
        return std::pow(-std::log1p(-q), -1.0 / alpha_);
    }

private:
    double alpha_;
};

/// exp(-(-y)^alpha) for y < 0, 1 for y >= 0
class WeibullLaw final : public ParametricNode {
public:
    WeibullLaw(double alpha, double location, double scale) : ParametricNode(location, scale), alpha_(alpha) {
        require(std::isfinite(alpha) && alpha > 0.0, ErrorCode::invalid_law, "Weibull: alpha must be > 0");
    }

protected:
    Probe standard_at(const Affine& c, double x) const override {
        const double g = gap(c, 0.0, x);
        if (g <= 0.0) return {1.0, 0.0};
        const double t = std::pow(g, alpha_);
        return {std::exp(-t), -std::expm1(-t)};
    }
    double standard_lower() const override { return -kInf; }
    double standard_upper() const override { return 0.0; }
    std::optional<double> standard_quantile(double p) const override {
        if (p <= 0.0) return -kInf;
        return -std::pow(-std::log(p), 1.0 / alpha_);
    }
    std::optional<double> standard_tail_inverse(double q) const override {
        return -std::pow(-std::log1p(-q), 1.0 / alpha_);
    }
    std::optional<double> standard_upper_gap(double q) const override {
        return std::pow(-std::log1p(-q), 1.0 / alpha_);
    }

private:
    double alpha_;
};

class NormalLaw final : public ParametricNode {
public:
    using ParametricNode::ParametricNode;

protected:
    Probe standard_at(const Affine& c, double x) const override {
        const double y = c(x) / std::numbers::sqrt2;
        return {0.5 * std::erfc(-y), 0.5 * std::erfc(y)};
    }
    double standard_lower() const override { return -kInf; }
    double standard_upper() const override { return kInf; }
    std::optional<double> standard_quantile(double p) const override {
        if (p <= 0.0) return -kInf;
        if (p >= 1.0) return kInf;
        return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
    }
    std::optional<double> standard_tail_inverse(double q) const override {
        if (q <= 0.0) return kInf;
        if (q >= 1.0) return -kInf;
        return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
    }
};

}  // namespace detail

inline Cdf uniform_cdf(double lo = 0.0, double hi = 1.0) {
    require(lo < hi, ErrorCode::invalid_law, "uniform: need lo < hi");
    return make_cdf<detail::UniformLaw>(lo, hi - lo);
}
inline Cdf exponential_cdf(double location = 0.0, double scale = 1.0) {
    return make_cdf<detail::ExponentialLaw>(location, scale);
}
inline Cdf pareto_cdf(double alpha, double location = 0.0, double scale = 1.0) {
    return make_cdf<detail::ParetoLaw>(alpha, location, scale);
}
inline Cdf beta_cdf(double alpha, double location = 0.0, double scale = 1.0) {
    return make_cdf<detail::BetaLaw>(alpha, location, scale);
}
inline Cdf gpd_cdf(double gamma, double location = 0.0, double scale = 1.0) {
    return make_cdf<detail::GeneralizedParetoLaw>(gamma, location, scale);
}
inline Cdf gumbel_cdf(double location = 0.0, double scale = 1.0) {
    return make_cdf<detail::GumbelLaw>(location, scale);
}
inline Cdf frechet_cdf(double alpha, double location = 0.0, double scale = 1.0) {
    return make_cdf<detail::FrechetLaw>(alpha, location, scale);
}
inline Cdf weibull_cdf(double alpha, double location = 0.0, double scale = 1.0) {
    return make_cdf<detail::WeibullLaw>(alpha, location, scale);
}
inline Cdf normal_cdf(double location = 0.0, double scale = 1.0) {
    return make_cdf<detail::NormalLaw>(location, scale);
}

}  // namespace freemax

#endif  // FREEMAX_LAWS_HPP
