#pragma once

// Least-squares fit of the network to pointwise targets:
//   min_theta sum_j |y_j - U(x_j, theta)|^2
// Levenberg-Marquardt with the analytic Jacobian and jittered restarts.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "ngf/ansatz.hpp"
#include "ngf/assembly.hpp"
#include "ngf/csv.hpp"
#include "ngf/error.hpp"

namespace ngf {

struct FitTarget {
    double x;
    double y;
};

struct FitOptions {
    int max_iters = 500;
    double tolerance = 1e-10;     // on the infinity norm of J^T r / N
    double initial_damping = 1e-3;
    double damping_up = 4.0;
    double damping_down = 3.0;
    int restarts = 4;
    double jitter = 0.1;
    std::uint64_t seed = 0;
};

struct FitProblem {
    std::vector<FitTarget> targets;
    NetworkConfig config{};
    FitOptions options{};
    std::optional<SpatialDomain> domain{};  // fallback support when targets vanish
};

struct RestartReport {
    int restart = 0;
    int iterations = 0;
    double rmse = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;  // gradient tolerance met
    bool diverged = false;
    std::vector<double> loss_history;  // one entry per accepted iteration, plus the start
};

struct FitResult {
    ParamVector theta;
    double rmse = 0.0;
    int best_restart = 0;
    std::vector<RestartReport> restarts;
};

inline double fit_loss(const ParamVector& theta, const std::vector<FitTarget>& targets) {
    double s = 0.0;
    for (const auto& t : targets) {
        const double r = eval(theta, t.x) - t.y;
        s += r * r;
    }
    return 0.5 * s;
}

inline double fit_rmse(const ParamVector& theta, const std::vector<FitTarget>& targets) {
    if (targets.empty()) return 0.0;
    return std::sqrt(2.0 * fit_loss(theta, targets) / static_cast<double>(targets.size()));
}

/// Gradient of fit_loss: J^T r.
inline Eigen::VectorXd fit_loss_gradient(const ParamVector& theta, const std::vector<FitTarget>& targets) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
    for (const auto& t : targets) g += (eval(theta, t.x) - t.y) * grad_theta(theta, t.x);
    return g;
}

namespace detail {

inline void validate(const FitProblem& p) {
    if (p.targets.empty()) throw DomainError("FitProblem: at least one target required");
    for (const auto& t : p.targets)
        if (!std::isfinite(t.x) || !std::isfinite(t.y)) throw DomainError("FitProblem: non-finite target");
    if (p.config.d != 1) throw DomainError("FitProblem: only d = 1 is supported");
}

/// Amplitudes by linear least squares with widths and centers frozen.
inline void solve_amplitudes(ParamVector& theta, const std::vector<FitTarget>& targets) {
    const int n = theta.units();
    Eigen::MatrixXd A(static_cast<Eigen::Index>(targets.size()), n);
    Eigen::VectorXd y(static_cast<Eigen::Index>(targets.size()));
    for (std::size_t j = 0; j < targets.size(); ++j) {
        const auto row = static_cast<Eigen::Index>(j);
        y[row] = targets[j].y;
        for (int i = 0; i < n; ++i) {
            const double s = targets[j].x - theta.b(i);
            A(row, i) = std::exp(-theta.w(i) * theta.w(i) * s * s);
        }
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    if (y.cwiseAbs().maxCoeff() > 0.0) c = A.colPivHouseholderQr().solve(y);
    for (int i = 0; i < n; ++i) theta.c(i) = std::isfinite(c[i]) ? c[i] : 0.0;
}

inline std::pair<double, double> support_interval(const std::vector<FitTarget>& targets,
                                                  const std::optional<SpatialDomain>& domain) {
    double ymax = 0.0;
    for (const auto& t : targets) ymax = std::max(ymax, std::abs(t.y));
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    if (ymax > 0.0) {
        for (const auto& t : targets) {
            if (std::abs(t.y) > 0.01 * ymax) {
                lo = std::min(lo, t.x);
                hi = std::max(hi, t.x);
            }
        }
    }
    if (!(lo < hi)) {
        if (domain) return {domain->lo, domain->hi};
        lo = hi = targets.front().x;
        for (const auto& t : targets) {
            lo = std::min(lo, t.x);
            hi = std::max(hi, t.x);
        }
        if (!(lo < hi)) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
    return {lo, hi};
}

}  // namespace detail

/// Centers spread uniformly over the target support {x : |y| > 1% max|y|},
/// widths n / |support|, amplitudes from a linear solve.
inline ParamVector default_init(const NetworkConfig& cfg, const std::optional<SpatialDomain>& domain,
                                const std::vector<FitTarget>& targets) {
    if (targets.empty()) throw DomainError("default_init: no targets");
    const auto [lo, hi] = detail::support_interval(targets, domain);
    ParamVector theta(cfg);
    const double len = hi - lo;
    for (int i = 0; i < cfg.n; ++i) {
        theta.w(i) = cfg.n / len;
        theta.b(i) = lo + len * (i + 0.5) / cfg.n;
    }
    detail::solve_amplitudes(theta, targets);
    return theta;
}

/// One Levenberg-Marquardt descent from `start`.
inline RestartReport levenberg_marquardt(ParamVector& theta, const std::vector<FitTarget>& targets,
                                         const FitOptions& opt) {
    RestartReport rep;
    const int p = theta.size();
    const auto m = static_cast<Eigen::Index>(targets.size());
    const double inv_m = 1.0 / static_cast<double>(m);

    Eigen::MatrixXd J(m, p);
    Eigen::VectorXd r(m);
    auto linearize = [&](const ParamVector& th) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double x = targets[static_cast<std::size_t>(j)].x;
            Eigen::VectorXd g = grad_theta(th, x);
            J.row(j) = g.transpose();
            r[j] = eval(th, x) - targets[static_cast<std::size_t>(j)].y;
        }
    };
    auto loss_of = [&](const ParamVector& th) {
        try {
            return fit_loss(th, targets);
        } catch (const DomainError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    double loss = loss_of(theta);
    if (!std::isfinite(loss)) {
        rep.diverged = true;
        return rep;
    }
    rep.loss_history.push_back(loss);
    double lambda = opt.initial_damping;
    linearize(theta);

    for (int it = 0; it < opt.max_iters; ++it) {
        rep.iterations = it;
        const Eigen::VectorXd grad = J.transpose() * r;
        if (grad.cwiseAbs().maxCoeff() * inv_m <= opt.tolerance) {
            rep.converged = true;
            break;
        }
        const Eigen::MatrixXd JtJ = J.transpose() * J;
        const double diag_floor = 1e-12 * std::max(1.0, JtJ.diagonal().maxCoeff());
        bool accepted = false;
        while (lambda < 1e16) {
            Eigen::MatrixXd A = JtJ;
            A.diagonal() += lambda * (JtJ.diagonal().array() + diag_floor).matrix();
            const Eigen::VectorXd delta = A.ldlt().solve(-grad);
            if (!delta.allFinite()) {
                lambda *= opt.damping_up;
                continue;
            }
            ParamVector trial(theta.config(), theta.data() + delta);
            const double trial_loss = trial.all_finite() ? loss_of(trial) : std::numeric_limits<double>::infinity();
            if (trial_loss < loss) {
                theta = std::move(trial);
                loss = trial_loss;
                lambda = std::max(lambda / opt.damping_down, 1e-12);
                accepted = true;
                break;
            }
            lambda *= opt.damping_up;
        }
        if (!accepted) break;  // no descent direction left at machine precision
        rep.loss_history.push_back(loss);
        linearize(theta);
        rep.iterations = it + 1;
    }
    rep.rmse = std::sqrt(2.0 * loss * inv_m);
    if (!std::isfinite(rep.rmse)) rep.diverged = true;
    return rep;
}

inline FitResult fit(const FitProblem& problem) {
    detail::validate(problem);
    const auto& opt = problem.options;
    const ParamVector base = default_init(problem.config, problem.domain, problem.targets);
    const auto [lo, hi] = detail::support_interval(problem.targets, problem.domain);
    const double spacing = (hi - lo) / problem.config.n;

    std::mt19937_64 rng(opt.seed ^ 0x9E3779B97F4A7C15ULL);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    FitResult result;
    std::optional<ParamVector> best;
    const int restarts = std::max(opt.restarts, 1);
    for (int r = 0; r < restarts; ++r) {
        ParamVector theta = base;
        if (r > 0) {
            for (int i = 0; i < theta.units(); ++i) {
                theta.w(i) *= 1.0 + opt.jitter * unit(rng);
                theta.b(i) += opt.jitter * spacing * unit(rng);
            }
            detail::solve_amplitudes(theta, problem.targets);
        }
        RestartReport rep = levenberg_marquardt(theta, problem.targets, opt);
        rep.restart = r;
        if (!rep.diverged && (!best || rep.rmse < result.rmse)) {
            best = theta;
            result.rmse = rep.rmse;
            result.best_restart = r;
        }
        result.restarts.push_back(std::move(rep));
    }
    if (!best) {
        std::string msg = "fit: all restarts diverged";
        for (const auto& rep : result.restarts)
            msg += "; restart " + std::to_string(rep.restart) + " after " + std::to_string(rep.iterations) + " iters";
        throw FitError(msg);
    }
    result.theta = std::move(*best);
    return result;
}

inline void write_fit_report_csv(std::ostream& os, const FitResult& res) {
    csv::Writer w(os);
    w.row("restart", "iterations", "final_rmse", "converged", "selected");
    for (const auto& rep : res.restarts) {
        w.row(rep.restart, rep.iterations, rep.rmse, rep.converged ? 1 : 0, rep.restart == res.best_restart ? 1 : 0);
    }
}

/// Targets y_j = u(x_j) on the given points.
template <typename Fn>
std::vector<FitTarget> sample_targets(const std::vector<double>& xs, Fn&& u) {
    std::vector<FitTarget> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back({x, u(x)});
    return out;
}

}  // namespace ngf
