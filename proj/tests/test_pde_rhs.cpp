#include <gtest/gtest.h>

#include <random>

#include "ngf/pde_rhs.hpp"
#include "oracles.hpp"

using namespace ngf;
using oracle::mp;

namespace {

FieldJet jet3(double u, double ux, double uxx, double uxxx) {
    FieldJet j;
    j.value = u;
    j.derivs = {ux, uxx, uxxx};
    j.max_order = 3;
    return j;
}

}  // namespace

TEST(KdvRhs, Examples) {
    EXPECT_EQ(kdv_rhs(0, 0, jet3(1, 2, 0, 3), 6), -15.0);
    EXPECT_EQ(kdv_rhs(0, 0, jet3(0, 0, 0, 0), 6), 0.0);
    EXPECT_EQ(kdv_rhs(0, 0, jet3(1, 1, 0, 0), 0), 0.0);
    EXPECT_EQ(kdv_rhs(0, 0, jet3(2, 1, 0, -1), 1), -1.0);
}

TEST(KdvRhs, NeedsThirdOrder) {
    FieldJet j;
    j.max_order = 1;
    EXPECT_THROW(kdv_rhs(0, 0, j, 6), ContractError);
    EXPECT_EQ(KdvRhs{}.max_spatial_order(), 3);
}

TEST(KdvRhs, AffineInXi) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int draw = 0; draw < 100; ++draw) {
        const auto j = jet3(g(rng), g(rng), g(rng), g(rng));
        const double a = 10.0 * g(rng), b = 10.0 * g(rng);
        const double fa = kdv_rhs(0, 0, j, a), fb = kdv_rhs(0, 0, j, b), f0 = kdv_rhs(0, 0, j, 0.0);
        EXPECT_NEAR(fa - fb, (a - b) * (fa - f0) / (a == 0.0 ? 1.0 : a), 1e-9 * (1.0 + std::abs(fa) + std::abs(fb)));
        EXPECT_EQ(kdv_rhs(0, 0, j, 0.0), -j.derivs[2]);
    }
}

TEST(KdvRhs, Autonomous) {
    const auto j = jet3(0.5, -1.0, 2.0, 0.25);
    EXPECT_EQ(kdv_rhs(0.0, 0.0, j, 6.0), kdv_rhs(3.0, -7.0, j, 6.0));
}

TEST(KdvRhs, FactoryByName) {
    EXPECT_EQ(make_rhs("kdv")->name(), "kdv");
    EXPECT_THROW(make_rhs("burgers"), DomainError);
}

TEST(Soliton, ArgumentChecks) {
    EXPECT_THROW(soliton_field(0.0, 0.0, 6.0, 0.0, 0.0), DomainError);
    EXPECT_THROW(soliton_field(0.0, 0.0, -1.0, 0.0, 6.0), DomainError);
    EXPECT_DOUBLE_EQ(soliton_field(0.0, 0.0, 6.0, 0.0, 6.0), 3.0);
    EXPECT_EQ(soliton_field(1e4, 0.0, 6.0, 0.0, 6.0), 0.0);
}

// u_t - f(u) with both sides from 50-digit finite differences of soliton_field.
TEST(SolitonProperty, SolvesKdv) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ux(-8.0, 8.0), ut(0.0, 2.0), uc(1.0, 8.0), uxi(1.0, 8.0);
    for (int draw = 0; draw < 100; ++draw) {
        const mp c = uc(rng), xi = uxi(rng), a = 0.5, x = ux(rng), t = ut(rng);
        const mp h = mp(1e-10);
        const std::function<mp(const mp&)> in_x = [&](const mp& s) { return soliton_field<mp>(s, t, c, a, xi); };
        const std::function<mp(const mp&)> in_t = [&](const mp& s) { return soliton_field<mp>(x, s, c, a, xi); };
        FieldJet j;
        j.max_order = 3;
        j.value = in_x(x).convert_to<double>();
        for (int k = 1; k <= 3; ++k) j.derivs[k - 1] = oracle::five_point<mp>(in_x, x, h, k).convert_to<double>();
        const double dudt = oracle::five_point<mp>(in_t, t, h, 1).convert_to<double>();
        EXPECT_LT(std::abs(dudt - kdv_rhs(0.0, 0.0, j, xi.convert_to<double>())), 1e-6) << "draw " << draw;
    }
}
