#pragma once

// Monte-Carlo assembly of the Galerkin system
//   M(theta)   = 1/J sum_j g_j g_j^T,           g_j = grad_theta U(x_j, theta)
//   F(t,theta) = 1/J sum_j g_j f(t, x_j, U(x_j, theta), xi)
// and the regularized velocity solve (M + eps I) eta = F.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ngf/ansatz.hpp"
#include "ngf/error.hpp"
#include "ngf/linalg.hpp"
#include "ngf/parallel.hpp"
#include "ngf/pde_rhs.hpp"

namespace ngf {

struct SpatialDomain {
    double lo = -10.0;
    double hi = 20.0;

    SpatialDomain() = default;
    SpatialDomain(double l, double h) : lo(l), hi(h) {
        if (!(lo < hi)) throw DomainError("SpatialDomain: lo must be < hi");
    }
    double length() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

enum class ResamplePolicy { per_step, per_stage, frozen };

inline std::string_view to_string(ResamplePolicy p) {
    switch (p) {
        case ResamplePolicy::per_step: return "per_step";
        case ResamplePolicy::per_stage: return "per_stage";
        case ResamplePolicy::frozen: return "frozen";
    }
    return "?";
}

inline ResamplePolicy parse_resample_policy(std::string_view s) {
    if (s == "per_step") return ResamplePolicy::per_step;
    if (s == "per_stage") return ResamplePolicy::per_stage;
    if (s == "frozen") return ResamplePolicy::frozen;
    throw DomainError("unknown resample policy '" + std::string(s) + "'");
}

struct QuadratureConfig {
    int J = 1000;
    std::uint64_t seed = 0;
    ResamplePolicy policy = ResamplePolicy::per_step;
};

/// Deterministic stream of `count` uniform points on the domain, keyed by
/// (seed, stream, step, stage).
inline std::vector<double> uniform_points(const SpatialDomain& domain, int count, std::uint64_t seed,
                                          std::uint64_t stream, std::int64_t step, std::int64_t stage) {
    const auto ustep = static_cast<std::uint64_t>(step);
    const auto ustage = static_cast<std::uint64_t>(stage);
    std::seed_seq seq{static_cast<std::uint32_t>(seed),         static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),       static_cast<std::uint32_t>(ustep),
                      static_cast<std::uint32_t>(ustep >> 32),  static_cast<std::uint32_t>(ustage)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> dist(domain.lo, domain.hi);
    std::vector<double> xs(static_cast<std::size_t>(count));
    for (auto& x : xs) x = dist(rng);
    return xs;
}

inline constexpr std::uint64_t kQuadratureStream = 0x51;
inline constexpr std::uint64_t kFitStream = 0xF17;

inline std::vector<double> draw_samples(const SpatialDomain& domain, const QuadratureConfig& cfg, std::int64_t step_index,
                                        std::int64_t stage_index) {
    if (cfg.J < 1) throw DomainError("QuadratureConfig: J must be >= 1");
    switch (cfg.policy) {
        case ResamplePolicy::frozen:
            step_index = 0;
            stage_index = 0;
            break;
        case ResamplePolicy::per_step:
            stage_index = 0;
            break;
        case ResamplePolicy::per_stage:
            break;
    }
    return uniform_points(domain, cfg.J, cfg.seed, kQuadratureStream, step_index, stage_index);
}

struct GalerkinSystem {
    SymMatrix M;
    Eigen::VectorXd F;
    double t = 0.0;
    int sample_count = 0;
};

namespace detail {

struct PartialSystem {
    SymMatrix M;
    Eigen::VectorXd F;
};

}  // namespace detail

inline GalerkinSystem assemble(const ParamVector& theta, double t, double xi, const RhsSpec& rhs,
                               std::span<const double> samples, int workers = 1) {
    if (samples.empty()) throw DomainError("assemble: empty sample list");
    const int p = theta.size();
    const int order = rhs.max_spatial_order();

    auto map = [&](std::size_t lo, std::size_t hi) {
        const auto cols = static_cast<Eigen::Index>(hi - lo);
        Eigen::MatrixXd V(p, cols);
        Eigen::VectorXd fvals(cols);
        for (std::size_t j = lo; j < hi; ++j) {
            const double x = samples[j];
            const auto col = static_cast<Eigen::Index>(j - lo);
            grad_theta(theta, std::span<const double>(&x, 1),
                       std::span<double>(V.col(col).data(), static_cast<std::size_t>(p)));
            const FieldJet jet = spatial_jet(theta, x, order);
            const double f = rhs.evaluate(t, x, jet, xi);
            if (!std::isfinite(f) || !V.col(col).allFinite()) {
                throw AssemblyError("assemble: non-finite value at sample x=" + std::to_string(x), x);
            }
            fvals[col] = f;
        }
        detail::PartialSystem part{SymMatrix::Zero(p, p), V * fvals};
        part.M.selfadjointView<Eigen::Lower>().rankUpdate(V);
        return part;
    };
    auto combine = [](detail::PartialSystem& acc, detail::PartialSystem part) {
        acc.M += part.M;
        acc.F += part.F;
    };

    detail::PartialSystem total{SymMatrix::Zero(p, p), Eigen::VectorXd::Zero(p)};
    total = chunked_reduce(samples.size(), workers, std::move(total), map, combine);

    GalerkinSystem sys;
    const double inv_j = 1.0 / static_cast<double>(samples.size());
    sys.M = total.M.triangularView<Eigen::Lower>();
    sys.M.triangularView<Eigen::StrictlyUpper>() = sys.M.transpose();
    sys.M *= inv_j;
    sys.F = total.F * inv_j;
    sys.t = t;
    sys.sample_count = static_cast<int>(samples.size());
    if (!sys.M.allFinite() || !sys.F.allFinite()) throw AssemblyError("assemble: non-finite reduction", samples[0]);
    return sys;
}

inline Eigen::VectorXd velocity(const ParamVector& theta, double t, double xi, const RhsSpec& rhs,
                                std::span<const double> samples, double eps, int workers = 1) {
    const GalerkinSystem sys = assemble(theta, t, xi, rhs, samples, workers);
    return regularized_solve(sys.M, sys.F, eps);
}

/// Everything the time stepper needs to turn theta into theta-dot, apart from xi.
struct AssemblyContext {
    SpatialDomain domain{};
    QuadratureConfig quadrature{};
    double epsilon = 1e-3;
    std::shared_ptr<const RhsSpec> rhs = std::make_shared<KdvRhs>();
    int workers = 1;
    /// Called with every assembled system (step, stage, system).
    std::function<void(std::int64_t, int, const GalerkinSystem&)> on_system{};
};

/// Velocity field theta -> (M + eps I)^{-1} F at a fixed xi, drawing samples
/// according to the quadrature policy.
class GalerkinVelocity {
public:
    GalerkinVelocity(const AssemblyContext& ctx, double xi) : ctx_(ctx), xi_(xi) {
        if (!ctx_.rhs) throw ContractError("AssemblyContext: rhs not set");
        if (!(ctx_.epsilon > 0.0)) throw DomainError("AssemblyContext: epsilon must be positive");
    }

    Eigen::VectorXd operator()(const ParamVector& theta, double t, std::int64_t step, int stage) const {
        const auto samples = draw_samples(ctx_.domain, ctx_.quadrature, step, stage);
        const GalerkinSystem sys = assemble(theta, t, xi_, *ctx_.rhs, samples, ctx_.workers);
        if (ctx_.on_system) ctx_.on_system(step, stage, sys);
        return regularized_solve(sys.M, sys.F, ctx_.epsilon);
    }

    double xi() const { return xi_; }

private:
    AssemblyContext ctx_;
    double xi_;
};

}  // namespace ngf
