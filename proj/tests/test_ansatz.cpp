#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ngf/ansatz.hpp"
#include "oracles.hpp"

using namespace ngf;
using oracle::mp;

namespace {

ParamVector one_unit(double c, double w, double b) {
    ParamVector th(NetworkConfig(1, 1));
    th.set_unit(0, c, w, b);
    return th;
}

ParamVector random_theta(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uc(-2.0, 2.0), uw(0.3, 2.0), ub(-3.0, 3.0);
    ParamVector th(NetworkConfig(n, 1));
    for (int i = 0; i < n; ++i) th.set_unit(i, uc(rng), uw(rng), ub(rng));
    return th;
}

std::vector<double> flat(const ParamVector& th) { return {th.data().data(), th.data().data() + th.size()}; }

}  // namespace

TEST(Ansatz, LayoutAndCount) {
    NetworkConfig cfg(12, 1);
    EXPECT_EQ(cfg.param_count(), 36);
    ParamVector th(cfg);
    EXPECT_EQ(th.index_c(2), 6);
    EXPECT_EQ(th.index_w(2), 7);
    EXPECT_EQ(th.index_b(2), 8);
}

TEST(Ansatz, EvalExamples) {
    const auto th = one_unit(1, 1, 0);
    EXPECT_EQ(eval(th, 0.0), 1.0);
    EXPECT_NEAR(eval(th, 1.0), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(eval(th, 2.0), std::exp(-4.0), 1e-16);

    ParamVector two(NetworkConfig(2, 1));
    two.set_unit(0, 2, 1, 0);
    two.set_unit(1, -1, 2, 1);
    EXPECT_NEAR(eval(two, 1.0), 2.0 * std::exp(-1.0) - 1.0, 1e-15);

    EXPECT_EQ(eval(one_unit(0, 5, 3), 3.0), 0.0);
}

TEST(Ansatz, ZeroWidthIsConstant) {
    const auto th = one_unit(1.5, 0.0, 0.0);
    for (double x : {-1e3, 0.0, 7.0}) EXPECT_EQ(eval(th, x), 1.5);
}

TEST(Ansatz, DecaysFarAway) { EXPECT_LT(std::abs(eval(one_unit(1, 1, 0), 1e6)), 1e-300); }

TEST(Ansatz, GradientExamples) {
    const auto g = grad_theta(one_unit(1, 1, 0), 0.0);
    EXPECT_EQ(g[0], 1.0);
    EXPECT_EQ(g[1], 0.0);
    EXPECT_EQ(g[2], 0.0);

    const auto h = grad_theta(one_unit(2, 1, 1), 0.0);
    const double e = std::exp(-1.0);
    EXPECT_NEAR(h[0], e, 1e-15);
    EXPECT_NEAR(h[1], -4.0 * e, 1e-15);
    EXPECT_NEAR(h[2], -4.0 * e, 1e-15);
}

TEST(Ansatz, JetExamples) {
    const auto j0 = spatial_jet(one_unit(1, 1, 0), 0.0);
    EXPECT_EQ(j0.value, 1.0);
    EXPECT_EQ(j0.dx(1), 0.0);
    EXPECT_EQ(j0.dx(2), -2.0);
    EXPECT_EQ(j0.dx(3), 0.0);

    const auto j1 = spatial_jet(one_unit(1, 1, 0), 1.0);
    const double e = std::exp(-1.0);
    EXPECT_NEAR(j1.dx(1), -2.0 * e, 1e-15);
    EXPECT_NEAR(j1.dx(2), 2.0 * e, 1e-15);
    EXPECT_NEAR(j1.dx(3), 4.0 * e, 1e-15);

    const auto z = spatial_jet(ParamVector(NetworkConfig(4, 1)), 0.3);
    EXPECT_EQ(z.value, 0.0);
    for (int k = 1; k <= 3; ++k) EXPECT_EQ(z.dx(k), 0.0);
}

TEST(Ansatz, JetOrderContract) {
    const auto th = one_unit(1, 1, 0);
    EXPECT_THROW(spatial_jet(th, 0.0, 4), UnsupportedOrderError);
    EXPECT_THROW(spatial_jet(th, 0.0, 1).dx(3), ContractError);
    EXPECT_NO_THROW(spatial_jet(th, 0.0, 1).dx(1));
}

TEST(Ansatz, NonFiniteInputsRejected) {
    const auto th = one_unit(1, 1, 0);
    EXPECT_THROW(eval(th, std::numeric_limits<double>::quiet_NaN()), DomainError);
    EXPECT_THROW(eval(one_unit(std::numeric_limits<double>::infinity(), 1, 0), 0.0), DomainError);
    EXPECT_THROW(grad_theta(one_unit(1, std::numeric_limits<double>::quiet_NaN(), 0), 0.0), DomainError);
    EXPECT_THROW(spatial_jet(th, std::numeric_limits<double>::infinity()), DomainError);
}

TEST(Ansatz, WrongLengthRejected) {
    EXPECT_THROW(ParamVector(NetworkConfig(2, 1), Eigen::VectorXd::Zero(5)), DomainError);
}

// Central differences with h = 1e-6 max(1, |theta_j|) on a 50-digit copy of U.
TEST(AnsatzProperty, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ux(-4.0, 4.0);
    for (int draw = 0; draw < 120; ++draw) {
        const auto th = random_theta(3, rng);
        const double x = ux(rng);
        const auto g = grad_theta(th, x);
        const auto base = flat(th);
        for (int j = 0; j < th.size(); ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(base[j]));
            auto plus = base, minus = base;
            plus[j] += h;
            minus[j] -= h;
            const mp fd = (oracle::network(plus, x) - oracle::network(minus, x)) / (2 * mp(h));
            const double rel = std::abs(fd.convert_to<double>() - g[j]) / std::max(std::abs(g[j]), 1e-5);
            EXPECT_LT(rel, 1e-5) << "draw " << draw << " component " << j;
        }
    }
}

TEST(AnsatzProperty, JetMatchesFivePointStencil) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> ux(-4.0, 4.0);
    for (int draw = 0; draw < 100; ++draw) {
        const auto th = random_theta(3, rng);
        const double x = ux(rng);
        const auto jet = spatial_jet(th, x);
        const auto base = flat(th);
        const std::function<mp(const mp&)> u = [&](const mp& s) { return oracle::network(base, s); };
        for (int k = 1; k <= 3; ++k) {
            const double ref = oracle::five_point<mp>(u, mp(x), mp(1e-8), k).convert_to<double>();
            if (std::abs(ref) <= 1e-8) continue;
            EXPECT_LT(std::abs(jet.dx(k) - ref) / std::abs(ref), 1e-6) << "draw " << draw << " order " << k;
        }
    }
}

TEST(AnsatzProperty, UnitPermutationInvariance) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> ux(-4.0, 4.0);
    for (int draw = 0; draw < 50; ++draw) {
        const auto th = random_theta(5, rng);
        std::vector<int> perm{0, 1, 2, 3, 4};
        std::shuffle(perm.begin(), perm.end(), rng);
        ParamVector pt(th.config());
        for (int i = 0; i < 5; ++i) pt.set_unit(i, th.c(perm[i]), th.w(perm[i]), th.b(perm[i]));
        const double x = ux(rng);
        EXPECT_NEAR(eval(pt, x), eval(th, x), 1e-14);
        const auto a = spatial_jet(pt, x), b = spatial_jet(th, x);
        for (int k = 1; k <= 3; ++k) EXPECT_NEAR(a.dx(k), b.dx(k), 1e-12 * (1.0 + std::abs(b.dx(k))));
    }
}

TEST(AnsatzProperty, WidthSignSymmetry) {
    std::mt19937_64 rng(14);
    auto th = random_theta(4, rng);
    auto neg = th;
    for (int i = 0; i < 4; ++i) neg.w(i) = -neg.w(i);
    for (double x : {-2.0, 0.1, 3.3}) EXPECT_EQ(eval(th, x), eval(neg, x));
}

TEST(Ansatz, CheckpointRoundTrip) {
    std::mt19937_64 rng(15);
    const auto th = random_theta(12, rng);
    std::stringstream ss;
    write_csv(ss, th);
    const auto back = read_csv(ss, th.config());
    for (int j = 0; j < th.size(); ++j) EXPECT_EQ(back.data()[j], th.data()[j]);
}
