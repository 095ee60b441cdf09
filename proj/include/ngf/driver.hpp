#pragma once

// Executes a RunConfig and writes its artifacts into cfg.output_dir:
//   manifest.txt       resolved configuration (itself a valid config)
//   fit_report.csv     restart,iterations,final_rmse,converged,selected
//   theta0.csv         fitted initial parameters
//   trajectory.csv     forward: k,t,theta_*; filter: k,t_k,xi_k,err_k,pstep_loss,eig_fraction,theta_*
//   snapshots.csv      t,x,u_hat[,u_true]
//   eigenfractions.csv k,t,eig_fraction
//   spectrum.csv       step,t,lambda_1..lambda_P
//   observations.csv   k,t,i,x_i,z_i,zdot_i (filter mode)

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ngf/config.hpp"
#include "ngf/filter.hpp"
#include "ngf/fit.hpp"
#include "ngf/integrator.hpp"
#include "ngf/observer.hpp"
#include "ngf/oracle.hpp"

namespace ngf {

struct RunResult {
    std::vector<std::filesystem::path> files;
    std::optional<FitResult> fit;
    std::optional<ForwardTrajectory> forward;
    std::optional<FilterTrajectory> filter;
};

inline std::function<double(double)> make_u0(const RunConfig& c) {
    if (c.u0 == InitialCondition::two_soliton) {
        TwoSoliton p{c.u0_c1, c.u0_a1, c.u0_c2, c.u0_a2, c.u0_xi_ref};
        p.validate();
        return p;
    }
    const double c1 = c.u0_c1, a1 = c.u0_a1, xr = c.u0_xi_ref;
    return [c1, a1, xr](double x) { return soliton_field(x, 0.0, c1, a1, xr); };
}

inline AssemblyContext make_assembly(const RunConfig& c) {
    AssemblyContext ctx;
    ctx.domain = c.domain();
    ctx.quadrature = c.quadrature();
    ctx.epsilon = c.epsilon;
    ctx.rhs = make_rhs(c.rhs);
    ctx.workers = c.workers;
    return ctx;
}

inline FitResult fit_initial(const RunConfig& c) {
    FitProblem prob;
    const auto xs = uniform_points(c.domain(), c.fit_points, c.seed, kFitStream, 0, 0);
    prob.targets = sample_targets(xs, make_u0(c));
    prob.config = NetworkConfig(c.n, 1);
    prob.options.max_iters = c.fit_max_iters;
    prob.options.tolerance = c.fit_tolerance;
    prob.options.restarts = c.fit_restarts;
    prob.options.jitter = c.fit_jitter;
    prob.options.seed = c.seed;
    prob.domain = c.domain();
    return fit(prob);
}

inline ForwardTrajectory run_forward(const RunConfig& c, const ParamVector& theta0, double xi,
                                     std::function<void(std::int64_t, int, const GalerkinSystem&)> hook = {}) {
    AssemblyContext ctx = make_assembly(c);
    ctx.on_system = std::move(hook);
    const GalerkinVelocity field(ctx, xi);
    return integrate(theta0, c.time_grid(), field, c.scheme, c.seed);
}

inline std::shared_ptr<const TruthSource> make_truth(const RunConfig& c, const ParamVector& theta0) {
    switch (c.truth) {
        case TruthKind::oracle: {
            ReferenceOptions opt;
            opt.grid = {c.oracle_N, c.oracle_box_lo, c.oracle_box_hi};
            opt.dt = c.oracle_dt;
            opt.output_dt = c.oracle_output_dt;
            return solve_reference(make_u0(c), c.xi_true, c.T, opt);
        }
        case TruthKind::soliton:
            return std::make_shared<SolitonTruth>(c.u0_c1, c.u0_a1, c.xi_true, c.T);
        case TruthKind::ngs: {
            auto traj = run_forward(c, theta0, c.xi_true);
            if (!traj.completed) throw SolverError("ngs truth: forward run failed: " + traj.error);
            return std::make_shared<NgsTruth>(std::move(traj), make_rhs(c.rhs), c.xi_true);
        }
    }
    throw ContractError("make_truth: unknown truth kind");
}

namespace detail {

class OutputDir {
public:
    explicit OutputDir(const std::string& dir, RunResult& res) : dir_(dir), res_(res) {
        std::filesystem::create_directories(dir_);
    }
    std::ofstream open(const std::string& name) {
        auto p = dir_ / name;
        std::ofstream os(p);
        if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
        res_.files.push_back(p);
        return os;
    }

private:
    std::filesystem::path dir_;
    RunResult& res_;
};

inline std::vector<double> snapshot_grid(const RunConfig& c) {
    std::vector<double> xs(static_cast<std::size_t>(c.snapshot_points));
    for (int i = 0; i < c.snapshot_points; ++i)
        xs[static_cast<std::size_t>(i)] =
            i == c.snapshot_points - 1 ? c.domain_hi
                                       : c.domain_lo + (c.domain_hi - c.domain_lo) * i / (c.snapshot_points - 1);
    return xs;
}

inline void write_eigenfractions(std::ostream& os, const std::vector<double>& ts, const std::vector<double>& fr) {
    csv::Writer w(os);
    w.row("k", "t", "eig_fraction");
    for (std::size_t k = 0; k < ts.size(); ++k) w.row(k, ts[k], fr[k]);
}

}  // namespace detail

inline std::string manifest_text(const RunConfig& c) {
    return "# ngf " + std::string(kVersion) + " run manifest\n# reproduce with: ngf run manifest.txt --output <dir>\n" +
           emit_config(c);
}

inline RunResult run(const RunConfig& c) {
    if (auto problems = validate(c); !problems.empty()) throw ConfigErrors(problems);
    RunResult res;
    detail::OutputDir out(c.output_dir, res);
    out.open("manifest.txt") << manifest_text(c);

    const bool needs_fit = c.mode != RunMode::filter || c.init == InitialState::Kind::known_u0 ||
                           (c.truth == TruthKind::ngs && c.observations.empty());
    if (needs_fit) {
        res.fit = fit_initial(c);
        auto os = out.open("fit_report.csv");
        write_fit_report_csv(os, *res.fit);
        auto th = out.open("theta0.csv");
        write_csv(th, res.fit->theta);
    }
    if (c.mode == RunMode::fit_only) return res;

    const auto xs = detail::snapshot_grid(c);

    if (c.mode == RunMode::forward || c.mode == RunMode::diagnose) {
        std::vector<double> fractions, times;
        std::vector<Eigen::VectorXd> spectra;
        std::function<void(std::int64_t, int, const GalerkinSystem&)> hook;
        if (c.mode == RunMode::diagnose) {
            hook = [&](std::int64_t /*step*/, int stage, const GalerkinSystem& sys) {
                if (stage != 0) return;
                spectra.push_back(sym_eigenvalues(sys.M));
                fractions.push_back(eigen_fraction_above(spectra.back(), c.eig_threshold));
                times.push_back(sys.t);
            };
        }
        res.forward = run_forward(c, res.fit->theta, c.xi_true, hook);
        {
            auto os = out.open("trajectory.csv");
            write_trajectory_csv(os, *res.forward);
        }
        {
            std::shared_ptr<const TruthSource> truth;
            if (c.truth != TruthKind::ngs) truth = make_truth(c, res.fit->theta);
            auto os = out.open("snapshots.csv");
            write_snapshots_csv(os, res.forward->times, res.forward->states, c.snapshot_times, xs, truth.get());
        }
        if (c.mode == RunMode::diagnose) {
            auto ef = out.open("eigenfractions.csv");
            detail::write_eigenfractions(ef, times, fractions);
            auto sp = out.open("spectrum.csv");
            csv::Writer w(sp);
            std::vector<std::string> header{"step", "t"};
            for (int j = 0; j < res.fit->theta.size(); ++j) header.push_back("lambda_" + std::to_string(j + 1));
            w.row(header);
            for (std::size_t k = 0; k < spectra.size(); ++k) {
                std::vector<std::string> row{csv::format(k), csv::format(times[k])};
                for (Eigen::Index j = 0; j < spectra[k].size(); ++j) row.push_back(csv::format(spectra[k][j]));
                w.row(row);
            }
        }
        if (!res.forward->completed) throw SolverError("forward run aborted: " + res.forward->error);
        return res;
    }

    // filter
    FilterConfig fc;
    fc.network = NetworkConfig(c.n, 1);
    fc.assembly = make_assembly(c);
    fc.time = c.time_grid();
    fc.scheme = c.scheme;
    fc.param_grid = c.param_grid();
    fc.pairing = c.pairing;
    fc.pstep_method = c.pstep;
    fc.eig_threshold = c.eig_threshold;
    fc.init.fit_options.max_iters = c.fit_max_iters;
    fc.init.fit_options.tolerance = c.fit_tolerance;
    fc.init.fit_options.restarts = c.fit_restarts;
    fc.init.fit_options.jitter = c.fit_jitter;
    fc.init.fit_options.seed = c.seed;
    if (c.init == InitialState::Kind::known_u0) {
        fc.init.kind = InitialState::Kind::given;
        fc.init.theta0 = res.fit->theta;
    } else {
        fc.init.kind = InitialState::Kind::observations;
    }

    std::shared_ptr<const TruthSource> truth;
    if (c.observations.empty()) {
        truth = make_truth(c, res.fit ? res.fit->theta : ParamVector(fc.network));
        fc.frames = std::make_shared<LiveFrames>(truth, c.schedule(), c.domain(), c.dt_obs, c.velocity_estimate,
                                                 ObservationNoise{c.noise_sigma, c.noise_seed});
        fc.xi_true = c.xi_true;
    } else {
        std::ifstream in(c.observations);
        if (!in) throw ConfigErrors({"observations: cannot open '" + c.observations + "'"});
        fc.frames = std::make_shared<ReplayFrames>(read_observation_log(in));
    }

    auto obs = out.open("observations.csv");
    write_observation_header(obs);
    fc.on_frame = [&obs](int k, const ObservationFrame& f) { write_observation_rows(obs, k, f); };

    res.filter = run_filter(fc);
    if (res.filter->fit) res.fit = res.filter->fit;
    obs.flush();
    const auto& recs = res.filter->records;
    {
        auto os = out.open("trajectory.csv");
        write_filter_csv(os, *res.filter);
    }
    {
        std::vector<double> ts, fr;
        std::vector<ParamVector> states;
        for (const auto& r : recs) {
            ts.push_back(r.t);
            fr.push_back(r.eig_fraction);
            states.push_back(r.theta);
        }
        auto sn = out.open("snapshots.csv");
        write_snapshots_csv(sn, ts, states, c.snapshot_times, xs, truth.get());
        auto ef = out.open("eigenfractions.csv");
        detail::write_eigenfractions(ef, ts, fr);
        auto sp = out.open("spectrum.csv");
        write_spectrum_csv(sp, *res.filter);
    }
    if (!res.filter->completed) throw SolverError("filter aborted: " + res.filter->error);
    return res;
}

}  // namespace ngf

namespace ngf {

/// Summary statistics of a trajectory CSV written by run(): err_k
/// quantiles when present, and eigenvalue-fraction coverage.
inline std::vector<std::pair<std::string, double>> diagnose_trajectory(const csv::Table& t,
                                                                       double frac_lo = 0.10, double frac_hi = 0.40) {
    std::vector<std::pair<std::string, double>> out;
    out.emplace_back("records", static_cast<double>(t.rows.size()));
    auto has = [&](std::string_view name) { return std::find(t.header.begin(), t.header.end(), name) != t.header.end(); };
    auto column = [&](std::string_view name) {
        std::vector<double> v;
        const auto c = t.column(name);
        for (const auto& row : t.rows)
            if (!row[c].empty()) v.push_back(csv::parse_double(row[c]));
        return v;
    };
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const auto n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    if (has("err_k")) {
        const auto err = column("err_k");
        if (!err.empty()) {
            double sum = 0.0, mx = 0.0;
            for (double e : err) {
                sum += e;
                mx = std::max(mx, e);
            }
            out.emplace_back("err_median", median(err));
            out.emplace_back("err_mean", sum / static_cast<double>(err.size()));
            out.emplace_back("err_max", mx);
            out.emplace_back("err_final", err.back());
        }
    }
    if (has("xi_k")) {
        const auto xi = column("xi_k");
        if (!xi.empty()) {
            out.emplace_back("xi_median", median(xi));
            out.emplace_back("xi_final", xi.back());
        }
    }
    if (has("eig_fraction")) {
        const auto fr = column("eig_fraction");
        if (!fr.empty()) {
            const auto inside = std::count_if(fr.begin(), fr.end(), [&](double f) { return f >= frac_lo && f <= frac_hi; });
            out.emplace_back("eig_fraction_median", median(fr));
            out.emplace_back("eig_fraction_in_band", static_cast<double>(inside) / static_cast<double>(fr.size()));
        }
    }
    return out;
}

}  // namespace ngf
