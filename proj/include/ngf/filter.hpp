#pragma once

// Two-stage filter: alternate a state step (one Galerkin time step at the
// current parameter estimate) with a parameter step (grid search of xi so that
// the PDE residual at the sensors matches the observed velocities).

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ngf/ansatz.hpp"
#include "ngf/assembly.hpp"
#include "ngf/csv.hpp"
#include "ngf/error.hpp"
#include "ngf/fit.hpp"
#include "ngf/integrator.hpp"
#include "ngf/linalg.hpp"
#include "ngf/observer.hpp"
#include "ngf/pde_rhs.hpp"

namespace ngf {

/// Uniform grid over a parameter interval, endpoints included.
struct ParamGrid {
    ParamDomain domain{0.0, 10.0};
    int count = 101;

    void validate() const {
        if (count < 2) throw DomainError("ParamGrid: count must be >= 2");
        if (!(domain.lo < domain.hi)) throw DomainError("ParamGrid: empty interval");
    }
    double value(int i) const {
        return i == count - 1 ? domain.hi : domain.lo + (domain.hi - domain.lo) * i / (count - 1);
    }
    std::vector<double> values() const {
        std::vector<double> v(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = value(i);
        return v;
    }
};

struct PStepResult {
    double xi = 0.0;
    double loss = 0.0;
};

/// Grid search on precomputed jets: argmin_xi sum_i |f(t, x_i, jet_i, xi) - zdot_i|^2,
/// ties going to the smallest xi.
inline PStepResult p_step(const std::vector<FieldJet>& jets, const std::vector<double>& xs,
                          const std::vector<double>& zdot, double t_eval, const ParamGrid& grid, const RhsSpec& rhs) {
    grid.validate();
    if (jets.empty() || jets.size() != xs.size() || xs.size() != zdot.size()) {
        throw DomainError("p_step: need m >= 1 sensors with matching jets and velocities");
    }
    PStepResult best{grid.value(0), std::numeric_limits<double>::infinity()};
    for (int g = 0; g < grid.count; ++g) {
        const double xi = grid.value(g);
        double loss = 0.0;
        for (std::size_t i = 0; i < jets.size(); ++i) {
            const double r = rhs.evaluate(t_eval, xs[i], jets[i], xi) - zdot[i];
            loss += r * r;
        }
        if (loss < best.loss) best = {xi, loss};
    }
    return best;
}

inline std::vector<FieldJet> sensor_jets(const ParamVector& theta, const std::vector<double>& xs, int order) {
    std::vector<FieldJet> jets;
    jets.reserve(xs.size());
    for (double x : xs) jets.push_back(spatial_jet(theta, x, order));
    return jets;
}

inline PStepResult p_step(const ParamVector& theta, const ObservationFrame& frame, double t_eval,
                          const ParamGrid& grid, const RhsSpec& rhs) {
    return p_step(sensor_jets(theta, frame.positions, rhs.max_spatial_order()), frame.positions, frame.zdot, t_eval,
                  grid, rhs);
}

/// Continuous minimizer for right-hand sides affine in xi, f = f0 + xi f1,
/// clamped to the parameter interval. Used to cross-check the grid search.
inline PStepResult p_step_closed_form(const ParamVector& theta, const ObservationFrame& frame, double t_eval,
                                      const ParamDomain& domain, const RhsSpec& rhs) {
    const auto jets = sensor_jets(theta, frame.positions, rhs.max_spatial_order());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < jets.size(); ++i) {
        const double f0 = rhs.evaluate(t_eval, frame.positions[i], jets[i], 0.0);
        const double f1 = rhs.evaluate(t_eval, frame.positions[i], jets[i], 1.0) - f0;
        num += f1 * (frame.zdot[i] - f0);
        den += f1 * f1;
    }
    double xi = den > 0.0 ? num / den : domain.lo;
    xi = std::clamp(xi, domain.lo, domain.hi);
    double loss = 0.0;
    for (std::size_t i = 0; i < jets.size(); ++i) {
        const double r = rhs.evaluate(t_eval, frame.positions[i], jets[i], xi) - frame.zdot[i];
        loss += r * r;
    }
    return {xi, loss};
}

/// One Galerkin step with xi frozen at xi_k for every stage.
inline ParamVector s_step(const ParamVector& theta, double xi, double t, double dt, Scheme scheme,
                          const AssemblyContext& ctx, std::int64_t step_index) {
    const GalerkinVelocity field(ctx, xi);
    return step(scheme, theta, t, dt, field, step_index);
}

enum class Pairing {
    paper,       // f(t_{k+1}, theta_{k+1}) against zdot(t_k)
    consistent,  // f(t_{k+1}, theta_{k+1}) against zdot(t_{k+1})
};

inline std::string_view to_string(Pairing p) { return p == Pairing::paper ? "paper" : "consistent"; }

inline Pairing parse_pairing(std::string_view s) {
    if (s == "paper") return Pairing::paper;
    if (s == "consistent") return Pairing::consistent;
    throw DomainError("unknown pairing '" + std::string(s) + "'");
}

enum class PStepMethod { grid, closed_form };

struct InitialState {
    enum class Kind { known_u0, observations, given };
    Kind kind = Kind::known_u0;
    std::function<double(double)> u0{};  // known_u0
    int fit_points = 1000;                // known_u0: uniform random fit points
    FitOptions fit_options{};
    std::optional<ParamVector> theta0{};  // given
};

struct FilterConfig {
    NetworkConfig network{12, 1};
    AssemblyContext assembly{};
    TimeGrid time{0.0, 4.0, 1000};
    Scheme scheme = Scheme::rk4;
    ParamGrid param_grid{};
    std::shared_ptr<const FrameSource> frames{};
    InitialState init{};
    std::optional<double> xi_true{};
    Pairing pairing = Pairing::paper;
    PStepMethod pstep_method = PStepMethod::grid;
    double eig_threshold = 1e-6;
    /// Receives every observation frame once, in order k = 0..K.
    std::function<void(int, const ObservationFrame&)> on_frame{};
};

struct FilterRecord {
    int k = 0;
    double t = 0.0;
    ParamVector theta;
    double xi = 0.0;
    std::optional<double> err{};
    double pstep_loss = 0.0;
    double eig_fraction = 0.0;
    Eigen::VectorXd eigenvalues;
};

struct FilterTrajectory {
    std::vector<FilterRecord> records;
    std::optional<FitResult> fit{};
    bool completed = false;
    std::string error;
    std::map<std::string, std::string> config_echo;
};

namespace detail {

inline double relative_error(double xi_true, double xi) { return std::abs(xi_true - xi) / std::abs(xi_true); }

}  // namespace detail

inline FilterTrajectory run_filter(const FilterConfig& cfg) {
    if (!(cfg.time.T > cfg.time.t0) || cfg.time.K < 0) throw DomainError("run_filter: bad time grid");
    cfg.param_grid.validate();
    if (!cfg.frames) throw ContractError("run_filter: no observation source");
    if (!cfg.assembly.rhs) throw ContractError("run_filter: no rhs");
    const RhsSpec& rhs = *cfg.assembly.rhs;
    const TimeGrid& grid = cfg.time;
    const double dt = grid.dt();

    FilterTrajectory out;
    out.config_echo = {{"scheme", std::string(to_string(cfg.scheme))},
                       {"pairing", std::string(to_string(cfg.pairing))},
                       {"pstep", cfg.pstep_method == PStepMethod::grid ? "grid" : "closed_form"}};

    // Frames are produced lazily, each exactly once.
    std::vector<ObservationFrame> frames;
    auto frame = [&](int k) -> const ObservationFrame& {
        while (static_cast<int>(frames.size()) <= k) {
            const int j = static_cast<int>(frames.size());
            frames.push_back(cfg.frames->frame(j, grid.time(j)));
            if (frames.back().size() == 0) throw DomainError("run_filter: frame without sensors");
            if (cfg.on_frame) cfg.on_frame(j, frames.back());
        }
        return frames[static_cast<std::size_t>(k)];
    };

    auto solve_p = [&](const ParamVector& theta, const ObservationFrame& f, double t_eval) {
        if (cfg.pstep_method == PStepMethod::closed_form) {
            return p_step_closed_form(theta, f, t_eval, cfg.param_grid.domain, rhs);
        }
        return p_step(theta, f, t_eval, cfg.param_grid, rhs);
    };

    // Spectrum of M(theta_k) on the step-k quadrature cloud.
    auto spectrum = [&](const ParamVector& theta, int k) {
        const auto samples = draw_samples(cfg.assembly.domain, cfg.assembly.quadrature, k, 0);
        const GalerkinSystem sys = assemble(theta, grid.time(k), 0.0, rhs, samples, cfg.assembly.workers);
        return sym_eigenvalues(sys.M);
    };

    auto push_record = [&](int k, ParamVector theta, const PStepResult& p, Eigen::VectorXd lam) {
        FilterRecord rec;
        rec.k = k;
        rec.t = grid.time(k);
        rec.theta = std::move(theta);
        rec.xi = p.xi;
        rec.pstep_loss = p.loss;
        rec.eig_fraction = eigen_fraction_above(lam, cfg.eig_threshold);
        rec.eigenvalues = std::move(lam);
        if (cfg.xi_true) rec.err = detail::relative_error(*cfg.xi_true, p.xi);
        out.records.push_back(std::move(rec));
    };

    // Initial time: fit theta_0, then xi_0 against f(t_1, .) (or f(t_0, .) when consistent).
    ParamVector theta0;
    switch (cfg.init.kind) {
        case InitialState::Kind::given:
            if (!cfg.init.theta0) throw ContractError("run_filter: initial state kind 'given' without theta0");
            theta0 = *cfg.init.theta0;
            break;
        case InitialState::Kind::known_u0: {
            if (!cfg.init.u0) throw ContractError("run_filter: known_u0 without u0");
            FitProblem prob;
            const auto xs = uniform_points(cfg.assembly.domain, cfg.init.fit_points, cfg.assembly.quadrature.seed,
                                           kFitStream, 0, 0);
            prob.targets = sample_targets(xs, cfg.init.u0);
            prob.config = cfg.network;
            prob.options = cfg.init.fit_options;
            prob.domain = cfg.assembly.domain;
            out.fit = fit(prob);
            theta0 = out.fit->theta;
            break;
        }
        case InitialState::Kind::observations: {
            const auto& f0 = frame(0);
            FitProblem prob;
            for (std::size_t i = 0; i < f0.size(); ++i) prob.targets.push_back({f0.positions[i], f0.z[i]});
            prob.config = cfg.network;
            prob.options = cfg.init.fit_options;
            prob.domain = cfg.assembly.domain;
            out.fit = fit(prob);
            theta0 = out.fit->theta;
            break;
        }
    }
    if (theta0.config() != cfg.network) throw ContractError("run_filter: initial state has wrong network shape");

    const double t_eval0 = cfg.pairing == Pairing::paper ? grid.time(std::min(1, grid.K)) : grid.time(0);
    PStepResult p = solve_p(theta0, frame(0), t_eval0);
    push_record(0, theta0, p, spectrum(theta0, 0));

    ParamVector theta = theta0;
    double xi = p.xi;
    for (int k = 0; k < grid.K; ++k) {
        ParamVector next;
        try {
            next = s_step(theta, xi, grid.time(k), dt, cfg.scheme, cfg.assembly, k);
        } catch (const std::exception& e) {
            out.error = "S-step " + std::to_string(k + 1) + ": " + e.what();
            return out;
        }
        if (!next.all_finite()) {
            out.error = "non-finite state at step " + std::to_string(k + 1);
            return out;
        }
        const auto& f = frame(cfg.pairing == Pairing::paper ? k : k + 1);
        p = solve_p(next, f, grid.time(k + 1));
        push_record(k + 1, next, p, spectrum(next, k + 1));
        theta = std::move(next);
        xi = p.xi;
    }
    if (cfg.on_frame) frame(grid.K);  // complete the log for replay in either pairing
    out.completed = true;
    return out;
}

// ---------------------------------------------------------------------------
// Output

inline void write_filter_csv(std::ostream& os, const FilterTrajectory& traj) {
    csv::Writer w(os);
    std::vector<std::string> header{"k", "t_k", "xi_k", "err_k", "pstep_loss", "eig_fraction"};
    const int p = traj.records.empty() ? 0 : traj.records.front().theta.size();
    for (int j = 0; j < p; ++j) header.push_back("theta_" + std::to_string(j));
    w.row(header);
    for (const auto& r : traj.records) {
        std::vector<std::string> row{csv::format(r.k), csv::format(r.t), csv::format(r.xi),
                                     r.err ? csv::format(*r.err) : std::string{}, csv::format(r.pstep_loss),
                                     csv::format(r.eig_fraction)};
        for (int j = 0; j < p; ++j) row.push_back(csv::format(r.theta.data()[j]));
        w.row(row);
    }
}

/// step, t, lambda_1..lambda_dim (descending).
inline void write_spectrum_csv(std::ostream& os, const FilterTrajectory& traj) {
    csv::Writer w(os);
    std::vector<std::string> header{"step", "t"};
    const auto dim = traj.records.empty() ? 0 : traj.records.front().eigenvalues.size();
    for (Eigen::Index j = 0; j < dim; ++j) header.push_back("lambda_" + std::to_string(j + 1));
    w.row(header);
    for (const auto& r : traj.records) {
        std::vector<std::string> row{csv::format(r.k), csv::format(r.t)};
        for (Eigen::Index j = 0; j < r.eigenvalues.size(); ++j) row.push_back(csv::format(r.eigenvalues[j]));
        w.row(row);
    }
}

/// Reconstruction snapshots: for each requested time the nearest record is
/// evaluated on the x-grid. Columns t,x,u_hat[,u_true].
inline void write_snapshots_csv(std::ostream& os, const std::vector<double>& ts, const std::vector<ParamVector>& states,
                                const std::vector<double>& times, const std::vector<double>& xs,
                                const TruthSource* truth = nullptr) {
    csv::Writer w(os);
    if (truth) {
        w.row("t", "x", "u_hat", "u_true");
    } else {
        w.row("t", "x", "u_hat");
    }
    for (double t : times) {
        if (ts.empty()) break;
        const auto it = std::min_element(ts.begin(), ts.end(),
                                         [&](double a, double b) { return std::abs(a - t) < std::abs(b - t); });
        const auto idx = static_cast<std::size_t>(it - ts.begin());
        for (double x : xs) {
            const double uh = eval(states[idx], x);
            if (truth) {
                w.row(ts[idx], x, uh, truth->sample(std::min(ts[idx], truth->horizon()), x));
            } else {
                w.row(ts[idx], x, uh);
            }
        }
    }
}

}  // namespace ngf
