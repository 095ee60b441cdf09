#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <numeric>
#include <random>

#include "ngf/assembly.hpp"
#include "ngf/fit.hpp"

using namespace ngf;

namespace {

ParamVector random_theta(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uc(-2.0, 2.0), uw(0.3, 1.5), ub(-8.0, 18.0);
    ParamVector th(NetworkConfig(n, 1));
    for (int i = 0; i < n; ++i) th.set_unit(i, uc(rng), uw(rng), ub(rng));
    return th;
}

// Triple loop straight from the definition.
void naive_system(const ParamVector& th, double xi, const std::vector<double>& xs, SymMatrix& m, Eigen::VectorXd& f) {
    const int p = th.size();
    m = SymMatrix::Zero(p, p);
    f = Eigen::VectorXd::Zero(p);
    for (double x : xs) {
        const auto g = grad_theta(th, x);
        const double r = kdv_rhs(0.0, x, spatial_jet(th, x), xi);
        for (int a = 0; a < p; ++a) {
            for (int b = 0; b < p; ++b) m(a, b) += g[a] * g[b];
            f[a] += g[a] * r;
        }
    }
    m /= static_cast<double>(xs.size());
    f /= static_cast<double>(xs.size());
}

}  // namespace

TEST(Samples, DeterministicAndUniform) {
    const SpatialDomain dom;
    QuadratureConfig q;
    q.J = 100000;
    q.seed = 7;
    const auto a = draw_samples(dom, q, 3, 0);
    const auto b = draw_samples(dom, q, 3, 0);
    EXPECT_EQ(a, b);
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
    EXPECT_NEAR(mean, 5.0, 0.1);
    for (double x : a) {
        EXPECT_GE(x, dom.lo);
        EXPECT_LE(x, dom.hi);
    }
    q.seed = 8;
    EXPECT_NE(draw_samples(dom, q, 3, 0), a);
}

TEST(Samples, ResamplePolicies) {
    const SpatialDomain dom;
    QuadratureConfig q;
    q.J = 50;
    q.policy = ResamplePolicy::per_step;
    EXPECT_EQ(draw_samples(dom, q, 4, 0), draw_samples(dom, q, 4, 3));
    EXPECT_NE(draw_samples(dom, q, 4, 0), draw_samples(dom, q, 5, 0));
    q.policy = ResamplePolicy::per_stage;
    EXPECT_NE(draw_samples(dom, q, 4, 0), draw_samples(dom, q, 4, 1));
    q.policy = ResamplePolicy::frozen;
    EXPECT_EQ(draw_samples(dom, q, 0, 0), draw_samples(dom, q, 9, 2));
    EXPECT_EQ(parse_resample_policy("per_stage"), ResamplePolicy::per_stage);
    EXPECT_THROW(parse_resample_policy("sometimes"), DomainError);
    q.J = 0;
    EXPECT_THROW(draw_samples(dom, q, 0, 0), DomainError);
}

TEST(Assemble, ZeroAmplitudeGivesZeroForce) {
    ParamVector th(NetworkConfig(3, 1));
    for (int i = 0; i < 3; ++i) th.set_unit(i, 0.0, 1.0, i);
    std::vector<double> xs{-1.0, 0.5, 2.0};
    const auto sys = assemble(th, 0.0, 6.0, KdvRhs{}, xs);
    EXPECT_EQ(sys.F.norm(), 0.0);
    EXPECT_GT(sys.M.norm(), 0.0);
    EXPECT_EQ(velocity(th, 0.0, 6.0, KdvRhs{}, xs, 1e-3).norm(), 0.0);
}

TEST(Assemble, SingleSampleAtCenter) {
    ParamVector th(NetworkConfig(1, 1));
    th.set_unit(0, 1.0, 1.0, 0.0);
    const std::vector<double> xs{0.0};
    const auto sys = assemble(th, 0.0, 6.0, KdvRhs{}, xs);
    SymMatrix e11 = SymMatrix::Zero(3, 3);
    e11(0, 0) = 1.0;
    EXPECT_EQ(sys.M, e11);
    EXPECT_EQ(sys.sample_count, 1);
}

TEST(Assemble, EmptySamplesRejected) {
    ParamVector th(NetworkConfig(1, 1));
    EXPECT_THROW(assemble(th, 0.0, 6.0, KdvRhs{}, std::vector<double>{}), DomainError);
}

TEST(AssembleProperty, MatchesNaiveTripleLoop) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> ux(-10.0, 20.0);
    for (int draw = 0; draw < 10; ++draw) {
        const auto th = random_theta(6, rng);
        std::vector<double> xs(64);
        for (auto& x : xs) x = ux(rng);
        const auto sys = assemble(th, 0.0, 6.0, KdvRhs{}, xs);
        SymMatrix m;
        Eigen::VectorXd f;
        naive_system(th, 6.0, xs, m, f);
        EXPECT_LE((sys.M - m).norm(), 1e-12 * m.norm());
        EXPECT_LE((sys.F - f).norm(), 1e-12 * std::max(f.norm(), 1e-300));
        EXPECT_TRUE(sys.M.isApprox(sys.M.transpose(), 0.0));
    }
}

TEST(AssembleProperty, PositiveSemidefinite) {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> ux(-10.0, 20.0);
    for (int draw = 0; draw < 10; ++draw) {
        const auto th = random_theta(8, rng);
        std::vector<double> xs(200);
        for (auto& x : xs) x = ux(rng);
        const auto sys = assemble(th, 0.0, 6.0, KdvRhs{}, xs);
        const auto lam = sym_eigenvalues(sys.M);
        EXPECT_GE(lam[lam.size() - 1], -1e-10 * sys.M.norm());
    }
}

TEST(AssembleProperty, SamplePermutationInvariance) {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> ux(-10.0, 20.0);
    const auto th = random_theta(6, rng);
    std::vector<double> xs(300);
    for (auto& x : xs) x = ux(rng);
    auto ys = xs;
    std::shuffle(ys.begin(), ys.end(), rng);
    const auto a = assemble(th, 0.0, 6.0, KdvRhs{}, xs), b = assemble(th, 0.0, 6.0, KdvRhs{}, ys);
    EXPECT_LE((a.M - b.M).norm(), 1e-12 * a.M.norm());
    EXPECT_LE((a.F - b.F).norm(), 1e-12 * a.F.norm());
}

TEST(AssembleProperty, WorkerCountDoesNotMatter) {
    std::mt19937_64 rng(34);
    const auto th = random_theta(12, rng);
    const auto xs = uniform_points(SpatialDomain{}, 1000, 1, kQuadratureStream, 0, 0);
    const auto a = assemble(th, 0.0, 6.0, KdvRhs{}, xs, 1), b = assemble(th, 0.0, 6.0, KdvRhs{}, xs, 3);
    EXPECT_LE((a.M - b.M).norm(), 1e-12 * a.M.norm());
    EXPECT_LE((a.F - b.F).norm(), 1e-12 * a.F.norm());
    const auto c = assemble(th, 0.0, 6.0, KdvRhs{}, xs, 3);
    EXPECT_EQ(b.M, c.M);
}

// Monte-Carlo error of one entry shrinks like J^{-1/2}.
TEST(AssembleProperty, StandardErrorScaling) {
    std::mt19937_64 rng(35);
    const auto th = random_theta(4, rng);
    const SpatialDomain dom;
    auto spread = [&](int j) {
        std::vector<double> vals;
        for (std::uint64_t s = 0; s < 32; ++s) {
            const auto xs = uniform_points(dom, j, s, kQuadratureStream, 0, 0);
            vals.push_back(assemble(th, 0.0, 6.0, KdvRhs{}, xs).M(0, 0));
        }
        const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        return std::sqrt(var / (vals.size() - 1));
    };
    const double ratio = spread(2000) / spread(1000);
    EXPECT_NEAR(ratio, 1.0 / std::sqrt(2.0), 0.3 / std::sqrt(2.0));
}

TEST(Velocity, IdentityMassScales) {
    const Eigen::Vector3d f(1.0, -2.0, 0.5);
    const auto eta = regularized_solve(SymMatrix::Identity(3, 3), f, 1e-3);
    EXPECT_LE((eta - f / 1.001).norm(), 1e-15);
}

// Residual on fresh samples of the regularized velocity against the
// unregularized least-squares velocity, both built from the same samples.
TEST(Velocity, NearLeastSquaresOptimum) {
    const SpatialDomain dom;
    const auto fit_x = uniform_points(dom, 1000, 0, kFitStream, 0, 0);
    FitProblem prob;
    prob.targets = sample_targets(fit_x, [](double x) { return soliton_field(x, 0.0, 6.0, 0.0, 6.0); });
    prob.domain = dom;
    const auto res = fit(prob);
    ASSERT_LT(res.rmse, 1e-3);
    const auto& th = res.theta;
    const int p = th.size();

    auto rows = [&](const std::vector<double>& xs, Eigen::MatrixXd& a, Eigen::VectorXd& f) {
        a.resize(static_cast<Eigen::Index>(xs.size()), p);
        f.resize(static_cast<Eigen::Index>(xs.size()));
        for (std::size_t j = 0; j < xs.size(); ++j) {
            a.row(j) = grad_theta(th, xs[j]).transpose();
            f[j] = kdv_rhs(0.0, xs[j], spatial_jet(th, xs[j]), 6.0);
        }
    };
    const auto train = uniform_points(dom, 1000, 0, kQuadratureStream, 0, 0);
    Eigen::MatrixXd at, a;
    Eigen::VectorXd ft, f;
    rows(train, at, ft);
    rows(uniform_points(dom, 4000, 99, kQuadratureStream, 0, 0), a, f);

    const auto eta = velocity(th, 0.0, 6.0, KdvRhs{}, train, 1e-3);
    const Eigen::VectorXd best = at.completeOrthogonalDecomposition().solve(ft);
    const double got = (a * eta - f).norm(), opt = (a * best - f).norm();
    EXPECT_LE(got, 2.0 * opt) << "regularized " << got << " vs least squares " << opt;
}

TEST(GalerkinVelocity, RejectsBadContext) {
    AssemblyContext ctx;
    ctx.epsilon = 0.0;
    EXPECT_THROW(GalerkinVelocity(ctx, 6.0), DomainError);
    ctx.epsilon = 1e-3;
    ctx.rhs.reset();
    EXPECT_THROW(GalerkinVelocity(ctx, 6.0), ContractError);
}

TEST(GalerkinVelocity, ReportsSystems) {
    AssemblyContext ctx;
    ctx.quadrature.J = 20;
    int calls = 0;
    ctx.on_system = [&](std::int64_t step, int stage, const GalerkinSystem& sys) {
        ++calls;
        EXPECT_EQ(step, 2);
        EXPECT_EQ(stage, 1);
        EXPECT_EQ(sys.sample_count, 20);
    };
    std::mt19937_64 rng(36);
    const GalerkinVelocity v(ctx, 6.0);
    v(random_theta(3, rng), 0.5, 2, 1);
    EXPECT_EQ(calls, 1);
}
