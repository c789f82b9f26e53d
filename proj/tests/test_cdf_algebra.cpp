#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "freemax/cdf_algebra.hpp"
#include "freemax/extreme_laws.hpp"
#include "oracles.hpp"

using namespace freemax;

namespace {

const Cdf U = uniform_cdf();
const Cdf Ex = exponential_cdf();

std::vector<Cdf> catalog() {
    return {uniform_cdf(),      exponential_cdf(),        pareto_cdf(2.0),       beta_cdf(0.5),
            normal_cdf(),       gumbel_cdf(),             frechet_cdf(1.5),      weibull_cdf(3.0),
            gpd_cdf(-0.4),      empirical_cdf({0.1, 0.4, 0.4, 0.9}), point_mass(0.3),
            tabulated_cdf({0.0, 0.5, 2.0}, {0.0, 0.6, 1.0})};
}

std::vector<double> test_grid() { return oracle::grid(-4.0, 6.0, 1001); }

}  // namespace

TEST(FreeMaxConv, UniformPairGivesUniformOnUpperHalf) {
    const Cdf h = free_max_conv(U, U);
    for (double x : oracle::grid(-1.0, 2.0, 301)) EXPECT_NEAR(h(x), std::max(0.0, std::min(1.0, 2 * x - 1)), 1e-15);
    EXPECT_DOUBLE_EQ(h.lower(), 0.5);
    EXPECT_DOUBLE_EQ(h.upper(), 1.0);
}

TEST(FreeMaxConv, PointMassesGiveMax) {
    const Cdf h = free_max_conv(point_mass(-1.0), point_mass(2.0));
    EXPECT_EQ(h(1.999), 0.0);
    EXPECT_EQ(h(2.0), 1.0);
    EXPECT_DOUBLE_EQ(h.lower(), 2.0);
    EXPECT_EQ(quantile(h, 0.5), 2.0);
}

TEST(FreeMaxConv, TailIdentityAndFormula) {
    const auto laws = catalog();
    for (std::size_t i = 0; i < laws.size(); ++i)
        for (std::size_t j = 0; j < laws.size(); ++j) {
            const Cdf h = free_max_conv(laws[i], laws[j]);
            for (double x : test_grid()) {
                const double f = laws[i](x), g = laws[j](x);
                EXPECT_NEAR(h(x), std::max(0.0, f + g - 1.0), 1e-15);
                EXPECT_NEAR(1.0 - h(x), std::min(laws[i].tail(x) + laws[j].tail(x), 1.0), 1e-12);
            }
        }
}

TEST(FreeMaxConv, CommutativeAndAssociative) {
    oracle::Gen gen(11);
    const auto laws = catalog();
    for (int trial = 0; trial < 40; ++trial) {
        const Cdf& a = laws[gen.integer(0, laws.size() - 1)];
        const Cdf& b = laws[gen.integer(0, laws.size() - 1)];
        const Cdf& c = laws[gen.integer(0, laws.size() - 1)];
        const Cdf l = free_max_conv(free_max_conv(a, b), c), r = free_max_conv(a, free_max_conv(b, c));
        const Cdf ml = free_min_conv(free_min_conv(a, b), c), mr = free_min_conv(a, free_min_conv(b, c));
        for (double x : test_grid()) {
            EXPECT_NEAR(free_max_conv(a, b)(x), free_max_conv(b, a)(x), 1e-12);
            EXPECT_NEAR(free_min_conv(a, b)(x), free_min_conv(b, a)(x), 1e-12);
            EXPECT_NEAR(l(x), r(x), 1e-12);
            EXPECT_NEAR(ml(x), mr(x), 1e-12);
        }
    }
}

TEST(FreeMinConv, UniformPairAndPointMasses) {
    const Cdf k = free_min_conv(U, U);
    for (double x : oracle::grid(-1.0, 2.0, 301)) EXPECT_NEAR(k(x), std::clamp(2 * x, 0.0, 1.0), 1e-15);
    EXPECT_DOUBLE_EQ(k.upper(), 0.5);
    const Cdf d = free_min_conv(point_mass(-1.0), point_mass(2.0));
    EXPECT_EQ(d(-1.0), 1.0);
    EXPECT_EQ(d(-1.0001), 0.0);
}

TEST(FreeMinConv, ReflectionDuality) {
    const auto laws = catalog();
    for (const Cdf& f : laws)
        for (const Cdf& g : laws) {
            const Cdf lhs = free_min_conv(f, g);
            const Cdf rhs = reflect(free_max_conv(reflect(f), reflect(g)));
            const Cdf lhs2 = free_max_conv(f, g);
            const Cdf rhs2 = reflect(free_min_conv(reflect(f), reflect(g)));
            for (double x : test_grid()) {
                EXPECT_NEAR(lhs(x), rhs(x), 1e-12) << x;
                EXPECT_NEAR(lhs2(x), rhs2(x), 1e-12) << x;
            }
        }
}

TEST(ClassicalMaxConv, ProductOfCdfs) {
    const Cdf sq = classical_max_conv(U, U);
    for (double x : oracle::grid(0.0, 1.0, 101)) EXPECT_NEAR(sq(x), x * x, 1e-15);
    const Cdf same = classical_max_conv(Ex, point_mass(-1.0));
    for (double x : oracle::grid(-1.0, 5.0, 101)) EXPECT_NEAR(same(x), Ex(x), 1e-15);
}

TEST(FreeMaxIterate, Examples) {
    const Cdf u2 = free_max_iterate(U, 2);
    for (double x : oracle::grid(-1.0, 2.0, 301)) EXPECT_NEAR(u2(x), std::clamp(2 * x - 1, 0.0, 1.0), 1e-15);
    const Cdf e5 = free_max_iterate(Ex, 5);
    for (double x : oracle::grid(-3.0, 10.0, 301)) EXPECT_NEAR(e5(x + std::log(5.0)), Ex(x), 1e-14);
    const Cdf e1 = free_max_iterate(Ex, 1);
    for (double x : oracle::grid(-3.0, 10.0, 31)) EXPECT_EQ(e1(x), Ex(x));
    EXPECT_THROW(free_max_iterate(U, 0), Error);
}

TEST(FreeMaxIterate, TailAndSupportIdentities) {
    for (const Cdf& f : catalog()) {
        double previous = -kInf;
        for (long long n : {2LL, 3LL, 10LL, 100LL, 10000LL}) {
            const Cdf fn = free_max_iterate(f, n);
            for (double x : test_grid())
                EXPECT_NEAR(fn.tail(x), std::min(static_cast<double>(n) * f.tail(x), 1.0), 1e-12);
            EXPECT_EQ(fn.upper(), f.upper());
            const double alpha = lower_endpoint_iterate(f, n);
            EXPECT_TRUE(std::isfinite(alpha));
            EXPECT_GE(alpha, previous);
            EXPECT_NEAR(fn.lower(), alpha, 1e-9 * std::max(1.0, std::abs(alpha)));
            previous = alpha;
        }
        if (std::isfinite(f.upper())) EXPECT_NEAR(lower_endpoint_iterate(f, 1000000000000LL), f.upper(), 1e-3);
    }
}

TEST(FreeMaxIterate, ConditioningIdentity) {
    for (const Cdf& f : {U, Ex, normal_cdf(), pareto_cdf(1.5), gumbel_cdf()}) {
        for (long long n : {2LL, 7LL, 50LL}) {
            const double un = threshold_un(f, n);
            const Cdf cond = rescale(exceedance_cdf(f, un), 1.0, -un);
            const Cdf it = free_max_iterate(f, n);
            for (double x : test_grid()) EXPECT_NEAR(it(x), cond(x), 1e-12) << n << " " << x;
        }
    }
}

TEST(FreeMaxPower, ExamplesAndSemigroup) {
    const Cdf p1 = free_max_power(Ex, 1.0);
    EXPECT_EQ(p1(1.3), Ex(1.3));
    EXPECT_NEAR(free_max_power(Ex, 2.5).tail(std::log(5.0)), 0.5, 1e-15);
    const Cdf p3 = free_max_power(U, 3.0), i3 = free_max_iterate(U, 3);
    for (double x : oracle::grid(-1.0, 2.0, 301)) EXPECT_EQ(p3(x), i3(x));
    EXPECT_THROW(free_max_power(U, 0.5), Error);
    oracle::Gen gen(5);
    for (const Cdf& f : catalog())
        for (int t = 0; t < 5; ++t) {
            const double s = gen.uniform(1.0, 4.0), r = gen.uniform(1.0, 4.0);
            const Cdf lhs = free_max_power(f, s * r), rhs = free_max_power(free_max_power(f, s), r);
            for (double x : test_grid()) EXPECT_NEAR(lhs(x), rhs(x), 1e-12);
        }
}

TEST(Rescale, ExamplesAndEndpoints) {
    const Cdf id = rescale(U, 1.0, 0.0);
    EXPECT_EQ(id(0.3), 0.3);
    const Cdf r = rescale(U, 0.25, 1.0);
    for (double x : oracle::grid(-6.0, 2.0, 161)) EXPECT_NEAR(r(x), std::clamp(x / 4 + 1, 0.0, 1.0), 1e-15);
    EXPECT_DOUBLE_EQ(r.lower(), -4.0);
    EXPECT_DOUBLE_EQ(r.upper(), 0.0);
    EXPECT_THROW(rescale(U, 0.0, 1.0), Error);
    EXPECT_THROW(rescale(U, -1.0, 1.0), Error);
}

TEST(Rescale, ParetoFixedPoint) {
    const Cdf p = pareto_cdf(2.0);
    for (long long n : {2LL, 10LL, 1000000LL}) {
        const Cdf back = free_max_iterate(rescale(p, std::sqrt(static_cast<double>(n)), 0.0), n);
        for (double x : oracle::grid(0.5, 50.0, 500)) EXPECT_NEAR(back(x), p(x), 1e-12);
    }
}

TEST(LowerEndpointIterate, Examples) {
    EXPECT_DOUBLE_EQ(lower_endpoint_iterate(U, 2), 0.5);
    EXPECT_DOUBLE_EQ(lower_endpoint_iterate(pareto_cdf(1.0), 10), 10.0);
    EXPECT_NEAR(lower_endpoint_iterate(Ex, 20), std::log(20.0), 1e-14);
    EXPECT_THROW(lower_endpoint_iterate(U, 1), Error);
    // no closed form: bisection path
    const Cdf table = tabulated_cdf({0.0, 1.0}, {0.0, 1.0});
    EXPECT_NEAR(lower_endpoint_iterate(table, 4), 0.75, 1e-15);
    EXPECT_NEAR(lower_endpoint_iterate(point_mass(0.0), 2), 0.0, 1e-300);
}

TEST(ThresholdUn, Examples) {
    EXPECT_DOUBLE_EQ(threshold_un(pareto_cdf(2.0), 100), 10.0);
    EXPECT_DOUBLE_EQ(threshold_un(U, 4), 0.75);
    EXPECT_NEAR(threshold_un(Ex, 10), std::log(10.0), 1e-14);
    EXPECT_THROW(threshold_un(U, 0), Error);
    for (const Cdf& f : {normal_cdf(), gumbel_cdf(), frechet_cdf(2.0)})
        for (long long n : {2LL, 10LL, 1000LL}) EXPECT_NEAR(f(threshold_un(f, n)), 1.0 - 1.0 / n, 1e-12);
    const Cdf e = empirical_cdf({1.0, 2.0, 3.0, 4.0});
    EXPECT_EQ(threshold_un(e, 2), 3.0);  // tail on [2, 3) is exactly 1/2
    EXPECT_EQ(threshold_un(e, 5), 4.0);
}

TEST(ExceedanceCdf, Examples) {
    for (double u : {0.0, 0.7, 5.0}) {
        const Cdf e = exceedance_cdf(Ex, u);
        for (double x : oracle::grid(-1.0, 20.0, 211)) EXPECT_NEAR(e(x), Ex(x), 1e-13);
    }
    const Cdf eu = exceedance_cdf(U, 0.5);
    for (double x : oracle::grid(-1.0, 1.0, 201)) EXPECT_NEAR(eu(x), std::clamp(2 * x, 0.0, 1.0), 1e-15);
    EXPECT_DOUBLE_EQ(eu.upper(), 0.5);
    for (double gamma : {0.3, 1.0, 2.0})
        for (double u : {0.5, 3.0, 40.0}) {
            const Cdf e = exceedance_cdf(gpd_cdf(gamma), u);
            const Cdf expect = gpd_cdf(gamma, 0.0, 1.0 + gamma * u);
            for (double x : oracle::grid(0.0, 100.0, 201)) EXPECT_NEAR(e(x), expect(x), 1e-12);
        }
    EXPECT_THROW(exceedance_cdf(U, 1.0), Error);
    EXPECT_THROW(exceedance_cdf(U, 1.5), Error);
}

TEST(AtomDecomposition, Examples) {
    const auto d = atom_decomposition_max(U, U);
    EXPECT_DOUBLE_EQ(d.t, 0.5);
    EXPECT_DOUBLE_EQ(d.atom_mass, 0.0);
    for (double x : oracle::grid(0.5, 1.0, 101))
        EXPECT_NEAR(d.restricted_tail_measure(x), 2.0 * (x - 0.5), 1e-14);
    const auto z = atom_decomposition_max(point_mass(0.0), point_mass(0.0));
    EXPECT_EQ(z.t, 0.0);
    EXPECT_EQ(z.atom_mass, 1.0);
    const Cdf g = point_mass(0.9);
    const auto m = atom_decomposition_max(U, g);
    EXPECT_DOUBLE_EQ(m.t, 0.9);
    EXPECT_NEAR(m.atom_mass, 0.9, 1e-15);
    const Cdf whole = reassemble(m), direct = free_max_conv(U, g);
    for (double x : oracle::grid(-0.5, 1.5, 1000)) EXPECT_NEAR(whole(x), direct(x), 1e-12);
}

TEST(AtomDecomposition, ReassemblyProperty) {
    const auto laws = catalog();
    for (const Cdf& f : laws)
        for (const Cdf& g : laws) {
            const auto d = atom_decomposition_max(f, g);
            EXPECT_GE(d.atom_mass, 0.0);
            EXPECT_LE(d.atom_mass, 1.0);
            EXPECT_NEAR(d.atom_mass + d.restricted_mass, 1.0, 1e-15);
            const Cdf whole = reassemble(d), direct = free_max_conv(f, g);
            for (double x : test_grid()) EXPECT_NEAR(whole(x), direct(x), 1e-12);
        }
}

TEST(Reflect, Examples) {
    const Cdf r = reflect(Ex);
    for (double x : oracle::grid(-5.0, 0.0, 51)) EXPECT_NEAR(r(x), std::exp(x), 1e-15);
    EXPECT_EQ(r(0.0), 1.0);
    EXPECT_EQ(r(0.1), 1.0);
    const Cdf d = reflect(point_mass(2.0));
    EXPECT_EQ(d(-2.0), 1.0);
    EXPECT_EQ(d(-2.0000001), 0.0);
    EXPECT_EQ(d.lower(), -2.0);
    for (const Cdf& f : catalog()) {
        const Cdf rr = reflect(reflect(f));
        for (double x : test_grid()) EXPECT_NEAR(rr(x), f(x), 1e-15);
    }
}

TEST(Quantile, Examples) {
    EXPECT_EQ(quantile(U, 0.5), 0.5);
    EXPECT_DOUBLE_EQ(quantile(pareto_cdf(2.0), 0.75), 2.0);
    EXPECT_EQ(quantile(empirical_cdf({1.0, 2.0, 3.0}), 0.5), 2.0);
    EXPECT_THROW(quantile(U, -0.1), Error);
    EXPECT_THROW(quantile(U, 1.1), Error);
}

TEST(Quantile, GeneralizedInverseProperties) {
    oracle::Gen gen(3);
    for (const Cdf& f : catalog()) {
        double previous = -kInf;
        for (double p : oracle::grid(0.0, 1.0, 101)) {
            const double q = quantile(f, p);
            EXPECT_GE(q, previous);
            previous = q;
            if (std::isfinite(q) && p > 0) EXPECT_GE(f(q), p - 1e-12);
        }
        for (int t = 0; t < 100; ++t) {
            const double x = gen.uniform(-4.0, 6.0);
            EXPECT_LE(quantile(f, f(x)), x);
        }
    }
}

TEST(EmpiricalCdf, Examples) {
    const Cdf z = empirical_cdf({0.0});
    EXPECT_EQ(z(-1e-300), 0.0);
    EXPECT_EQ(z(0.0), 1.0);
    const Cdf two = empirical_cdf({2.0, 1.0});
    EXPECT_EQ(two(1.0), 0.5);
    EXPECT_EQ(two(1.5), 0.5);
    EXPECT_EQ(two(2.0), 1.0);
    EXPECT_EQ(two.left_limit(2.0), 0.5);
    const Cdf three = empirical_cdf({1.0, 2.0, 3.0});
    EXPECT_DOUBLE_EQ(three(1.0), 1.0 / 3);
    EXPECT_DOUBLE_EQ(three(2.0), 2.0 / 3);
    EXPECT_EQ(three(3.0), 1.0);
    EXPECT_THROW(empirical_cdf({}), Error);
}

TEST(CdfInvariants, MonotoneRightContinuousAndLimits) {
    for (const Cdf& f : catalog()) {
        const auto g = test_grid();
        for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LE(f(g[i - 1]), f(g[i]));
        EXPECT_EQ(f(-kInf), 0.0);
        EXPECT_EQ(f(kInf), 1.0);
        if (std::isfinite(f.upper())) EXPECT_EQ(f(f.upper()), 1.0);
        if (std::isfinite(f.lower())) EXPECT_EQ(f(std::nextafter(f.lower(), -kInf)), 0.0);
        for (double j : f.jumps()) {
            EXPECT_EQ(f(j), f(j));
            EXPECT_LT(f.left_limit(j), f(j));
        }
        for (double x : g) {
            bool near_jump = false;
            for (double j : f.jumps()) near_jump |= std::abs(j - x) < 1e-9;
            if (!near_jump) EXPECT_NEAR(f(x), f(x + 1e-12), 1e-9);
        }
    }
}

TEST(SteppedCdf, Validation) {
    EXPECT_THROW(stepped_cdf({1.0, 0.0}, {0.5, 1.0}, Interpolation::piecewise_constant), Error);
    EXPECT_THROW(stepped_cdf({0.0, 1.0}, {0.6, 0.5}, Interpolation::piecewise_constant), Error);
    EXPECT_THROW(stepped_cdf({0.0, 1.0}, {0.5, 1.5}, Interpolation::piecewise_constant), Error);
    const Cdf clamped = stepped_cdf({0.0, 1.0}, {0.5, 0.5 - 1e-13}, Interpolation::piecewise_linear);
    EXPECT_EQ(clamped(1.0), 0.5);
    const Cdf lin = tabulated_cdf({0.0, 2.0}, {0.0, 1.0});
    EXPECT_DOUBLE_EQ(lin(0.5), 0.25);
    EXPECT_EQ(lin.lower(), 0.0);
    EXPECT_EQ(lin.upper(), 2.0);
    EXPECT_TRUE(lin.continuous());
}

TEST(Distances, SupAndKs) {
    const auto g = comparison_grid(U, U);
    EXPECT_EQ(sup_distance(U, U, g), 0.0);
    EXPECT_NEAR(sup_distance(U, uniform_cdf(0.0, 2.0), g), 0.5, 1e-15);
    EXPECT_NEAR(ks_distance({0.5}, U), 0.5, 1e-15);
    std::vector<double> xs;
    for (int i = 0; i < 100; ++i) xs.push_back((i + 0.5) / 100);
    EXPECT_NEAR(ks_distance(xs, U), 0.005, 1e-12);
}

TEST(ComparisonGrid, CoversSupportsAndJumps) {
    const Cdf a = point_mass(3.0);
    const auto g = comparison_grid(U, a);
    EXPECT_LE(g.front(), 0.0);
    EXPECT_GE(g.back(), 3.0);
    EXPECT_TRUE(std::binary_search(g.begin(), g.end(), 3.0));
    const auto single = comparison_grid(point_mass(1.0), point_mass(1.0));
    EXPECT_EQ(single.front(), 0.0);
    EXPECT_EQ(single.back(), 2.0);
}

TEST(SampleInverseCdf, MatchesLaw) {
    const auto xs = sample_inverse_cdf(Ex, 20000, RngSeed{17});
    EXPECT_LT(ks_distance(xs, Ex), 0.015);
    EXPECT_EQ(xs, sample_inverse_cdf(Ex, 20000, RngSeed{17}));
}
