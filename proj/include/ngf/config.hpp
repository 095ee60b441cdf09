#pragma once

// Run configuration: flat `key = value` text, '#' starts a comment.
// Unknown keys and malformed values are collected and reported together.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ngf/assembly.hpp"
#include "ngf/csv.hpp"
#include "ngf/error.hpp"
#include "ngf/filter.hpp"
#include "ngf/integrator.hpp"
#include "ngf/observer.hpp"

namespace ngf {

inline constexpr std::string_view kVersion = "0.1.0";

enum class RunMode { forward, filter, fit_only, diagnose };
enum class TruthKind { oracle, ngs, soliton };
enum class InitialCondition { two_soliton, soliton };

class ConfigErrors : public ConfigError {
public:
    explicit ConfigErrors(std::vector<std::string> problems)
        : ConfigError(join(problems)), problems_(std::move(problems)) {}
    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& p) {
        std::string s = "invalid configuration";
        for (const auto& e : p) s += "; " + e;
        return s;
    }
    std::vector<std::string> problems_;
};

struct RunConfig {
    RunMode mode = RunMode::filter;

    int n = 12;
    double domain_lo = -10.0;
    double domain_hi = 20.0;
    double T = 4.0;
    int K = 1000;
    int J = 1000;
    std::uint64_t seed = 0;
    ResamplePolicy resample = ResamplePolicy::per_step;
    double epsilon = 1e-3;
    Scheme scheme = Scheme::rk4;
    std::string rhs = "kdv";

    SensorKind sensor_kind = SensorKind::uniform_fixed;
    int sensor_m = 100;
    double sensor_lo0 = -10.0;
    double sensor_lo1 = 0.0;
    double sensor_hi0 = 20.0;
    double sensor_hi1 = 0.0;

    TruthKind truth = TruthKind::oracle;
    double xi_true = 6.0;
    InitialCondition u0 = InitialCondition::two_soliton;
    double u0_c1 = 6.0;
    double u0_a1 = -5.0;
    double u0_c2 = 4.0;
    double u0_a2 = 1.0;
    double u0_xi_ref = 6.0;

    int oracle_N = 1024;
    double oracle_box_lo = -30.0;
    double oracle_box_hi = 40.0;
    double oracle_dt = 1e-4;
    double oracle_output_dt = 1e-3;

    double param_lo = 0.0;
    double param_hi = 10.0;
    int param_count = 101;

    double dt_obs = 1e-3;
    VelocityEstimate velocity_estimate = VelocityEstimate::difference;
    Pairing pairing = Pairing::paper;
    PStepMethod pstep = PStepMethod::grid;
    InitialState::Kind init = InitialState::Kind::known_u0;
    int fit_points = 1000;
    int fit_max_iters = 500;
    double fit_tolerance = 1e-10;
    int fit_restarts = 4;
    double fit_jitter = 0.1;

    double noise_sigma = 0.0;
    std::uint64_t noise_seed = 0;
    double eig_threshold = 1e-6;
    std::vector<double> snapshot_times{0.0, 1.0, 2.0, 3.0, 4.0};
    int snapshot_points = 301;
    std::string observations;  // replay log; empty = live truth
    std::string output_dir = "ngf_out";
    int workers = 1;

    SpatialDomain domain() const { return {domain_lo, domain_hi}; }
    TimeGrid time_grid() const {
        TimeGrid g;  // K = 0 is legal for the filter, so no validating constructor
        g.T = T;
        g.K = K;
        return g;
    }
    SensorSchedule schedule() const {
        return {sensor_kind, sensor_m, sensor_lo0, sensor_lo1, sensor_hi0, sensor_hi1};
    }
    ParamGrid param_grid() const { return {ParamDomain(param_lo, param_hi), param_count}; }
    QuadratureConfig quadrature() const { return {J, seed, resample}; }
};

// ---------------------------------------------------------------------------
// Enum text

inline std::string_view to_string(RunMode m) {
    switch (m) {
        case RunMode::forward: return "forward";
        case RunMode::filter: return "filter";
        case RunMode::fit_only: return "fit_only";
        case RunMode::diagnose: return "diagnose";
    }
    return "?";
}
inline std::string_view to_string(TruthKind k) {
    switch (k) {
        case TruthKind::oracle: return "oracle";
        case TruthKind::ngs: return "ngs";
        case TruthKind::soliton: return "soliton";
    }
    return "?";
}
inline std::string_view to_string(InitialCondition c) { return c == InitialCondition::two_soliton ? "two_soliton" : "soliton"; }
inline std::string_view to_string(InitialState::Kind k) {
    switch (k) {
        case InitialState::Kind::known_u0: return "known_u0";
        case InitialState::Kind::observations: return "observations";
        case InitialState::Kind::given: return "given";
    }
    return "?";
}
inline std::string_view to_string(PStepMethod m) { return m == PStepMethod::grid ? "grid" : "closed_form"; }

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string join_doubles(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += csv::format(v[i]);
    }
    return s;
}

/// Binds each config key to its field: a parser and a printer.
struct Field {
    std::function<void(RunConfig&, const std::string&)> parse;
    std::function<std::string(const RunConfig&)> print;
};

template <typename T>
Field int_field(T RunConfig::*member) {
    return {[member](RunConfig& c, const std::string& v) { c.*member = static_cast<T>(csv::parse_int(v)); },
            [member](const RunConfig& c) { return std::to_string(c.*member); }};
}

inline Field seed_field(std::uint64_t RunConfig::*member) {
    return {[member](RunConfig& c, const std::string& v) {
                const auto x = csv::parse_int(v);
                if (x < 0) throw DomainError("seed must be non-negative");
                c.*member = static_cast<std::uint64_t>(x);
            },
            [member](const RunConfig& c) { return std::to_string(c.*member); }};
}

inline Field double_field(double RunConfig::*member) {
    return {[member](RunConfig& c, const std::string& v) { c.*member = csv::parse_double(v); },
            [member](const RunConfig& c) { return csv::format(c.*member); }};
}

inline Field string_field(std::string RunConfig::*member) {
    return {[member](RunConfig& c, const std::string& v) { c.*member = v; },
            [member](const RunConfig& c) { return c.*member; }};
}

template <typename E>
Field enum_field(E RunConfig::*member, std::initializer_list<E> all) {
    std::vector<E> values(all);
    return {[member, values](RunConfig& c, const std::string& v) {
                for (E e : values)
                    if (to_string(e) == v) {
                        c.*member = e;
                        return;
                    }
                std::string allowed;
                for (E e : values) allowed += (allowed.empty() ? "" : "|") + std::string(to_string(e));
                throw DomainError("unknown value '" + v + "' (expected " + allowed + ")");
            },
            [member](const RunConfig& c) { return std::string(to_string(c.*member)); }};
}

inline const std::vector<std::pair<std::string, Field>>& fields() {
    static const std::vector<std::pair<std::string, Field>> table = {
        {"mode", enum_field(&RunConfig::mode, {RunMode::forward, RunMode::filter, RunMode::fit_only, RunMode::diagnose})},
        {"n", int_field(&RunConfig::n)},
        {"domain_lo", double_field(&RunConfig::domain_lo)},
        {"domain_hi", double_field(&RunConfig::domain_hi)},
        {"T", double_field(&RunConfig::T)},
        {"K", int_field(&RunConfig::K)},
        {"J", int_field(&RunConfig::J)},
        {"seed", seed_field(&RunConfig::seed)},
        {"resample_policy",
         enum_field(&RunConfig::resample, {ResamplePolicy::per_step, ResamplePolicy::per_stage, ResamplePolicy::frozen})},
        {"epsilon", double_field(&RunConfig::epsilon)},
        {"scheme", enum_field(&RunConfig::scheme, {Scheme::euler, Scheme::rk4})},
        {"rhs", string_field(&RunConfig::rhs)},
        {"sensor_kind", enum_field(&RunConfig::sensor_kind, {SensorKind::uniform_fixed, SensorKind::interval_fixed,
                                                             SensorKind::moving_interval})},
        {"sensor_m", int_field(&RunConfig::sensor_m)},
        {"sensor_lo0", double_field(&RunConfig::sensor_lo0)},
        {"sensor_lo1", double_field(&RunConfig::sensor_lo1)},
        {"sensor_hi0", double_field(&RunConfig::sensor_hi0)},
        {"sensor_hi1", double_field(&RunConfig::sensor_hi1)},
        {"truth", enum_field(&RunConfig::truth, {TruthKind::oracle, TruthKind::ngs, TruthKind::soliton})},
        {"xi_true", double_field(&RunConfig::xi_true)},
        {"u0", enum_field(&RunConfig::u0, {InitialCondition::two_soliton, InitialCondition::soliton})},
        {"u0_c1", double_field(&RunConfig::u0_c1)},
        {"u0_a1", double_field(&RunConfig::u0_a1)},
        {"u0_c2", double_field(&RunConfig::u0_c2)},
        {"u0_a2", double_field(&RunConfig::u0_a2)},
        {"u0_xi_ref", double_field(&RunConfig::u0_xi_ref)},
        {"oracle_N", int_field(&RunConfig::oracle_N)},
        {"oracle_box_lo", double_field(&RunConfig::oracle_box_lo)},
        {"oracle_box_hi", double_field(&RunConfig::oracle_box_hi)},
        {"oracle_dt", double_field(&RunConfig::oracle_dt)},
        {"oracle_output_dt", double_field(&RunConfig::oracle_output_dt)},
        {"param_lo", double_field(&RunConfig::param_lo)},
        {"param_hi", double_field(&RunConfig::param_hi)},
        {"param_count", int_field(&RunConfig::param_count)},
        {"dt_obs", double_field(&RunConfig::dt_obs)},
        {"velocity_estimate",
         enum_field(&RunConfig::velocity_estimate, {VelocityEstimate::difference, VelocityEstimate::model})},
        {"pairing", enum_field(&RunConfig::pairing, {Pairing::paper, Pairing::consistent})},
        {"pstep", enum_field(&RunConfig::pstep, {PStepMethod::grid, PStepMethod::closed_form})},
        {"init", enum_field(&RunConfig::init, {InitialState::Kind::known_u0, InitialState::Kind::observations})},
        {"fit_points", int_field(&RunConfig::fit_points)},
        {"fit_max_iters", int_field(&RunConfig::fit_max_iters)},
        {"fit_tolerance", double_field(&RunConfig::fit_tolerance)},
        {"fit_restarts", int_field(&RunConfig::fit_restarts)},
        {"fit_jitter", double_field(&RunConfig::fit_jitter)},
        {"noise_sigma", double_field(&RunConfig::noise_sigma)},
        {"noise_seed", seed_field(&RunConfig::noise_seed)},
        {"eig_threshold", double_field(&RunConfig::eig_threshold)},
        {"snapshot_times",
         {[](RunConfig& c, const std::string& v) {
              c.snapshot_times.clear();
              if (trim(v).empty()) return;
              for (const auto& item : csv::split(v)) c.snapshot_times.push_back(csv::parse_double(item));
          },
          [](const RunConfig& c) { return join_doubles(c.snapshot_times); }}},
        {"snapshot_points", int_field(&RunConfig::snapshot_points)},
        {"observations", string_field(&RunConfig::observations)},
        {"output_dir", string_field(&RunConfig::output_dir)},
        {"workers", int_field(&RunConfig::workers)},
    };
    return table;
}

}  // namespace detail

/// Semantic checks; every violation is reported.
inline std::vector<std::string> validate(const RunConfig& c) {
    std::vector<std::string> e;
    auto need = [&](bool ok, const std::string& msg) {
        if (!ok) e.push_back(msg);
    };
    need(c.n >= 1, "n: must be >= 1");
    need(c.domain_lo < c.domain_hi, "domain_lo/domain_hi: need domain_lo < domain_hi");
    need(c.T > 0.0, "T: must be positive");
    need(c.K >= 1 || (c.K == 0 && c.mode == RunMode::filter), "K: must be >= 1 (0 allowed in filter mode)");
    need(c.J >= 1, "J: must be >= 1");
    need(c.epsilon > 0.0, "epsilon: must be positive");
    need(c.rhs == "kdv", "rhs: unknown right-hand side '" + c.rhs + "'");
    need(c.sensor_m >= 1, "sensor_m: must be >= 1");
    const double lo_T = c.sensor_lo0 + c.sensor_lo1 * c.T, hi_T = c.sensor_hi0 + c.sensor_hi1 * c.T;
    need(c.sensor_lo0 < c.sensor_hi0 && lo_T < hi_T, "sensor interval: lo(t) < hi(t) must hold on [0,T]");
    need(c.sensor_kind == SensorKind::moving_interval || (c.sensor_lo1 == 0.0 && c.sensor_hi1 == 0.0),
         "sensor_lo1/sensor_hi1: only moving_interval schedules may move");
    need(c.xi_true != 0.0, "xi_true: must be nonzero");
    need(c.u0_c1 > 0.0 && c.u0_c2 > 0.0, "u0_c1/u0_c2: soliton speeds must be positive");
    need(c.u0_xi_ref != 0.0, "u0_xi_ref: must be nonzero");
    need(c.oracle_N >= 64 && (c.oracle_N & (c.oracle_N - 1)) == 0, "oracle_N: must be a power of two >= 64");
    need(c.oracle_box_lo <= c.domain_lo - 10.0 && c.oracle_box_hi >= c.domain_hi + 10.0,
         "oracle_box_lo/oracle_box_hi: box must contain the domain with margin >= 10");
    need(c.oracle_dt > 0.0 && c.oracle_output_dt > 0.0, "oracle_dt/oracle_output_dt: must be positive");
    need(c.param_lo < c.param_hi, "param_lo/param_hi: need param_lo < param_hi");
    need(c.param_count >= 2, "param_count: must be >= 2");
    need(c.dt_obs > 0.0, "dt_obs: must be positive");
    need(c.fit_points >= 1, "fit_points: must be >= 1");
    need(c.fit_max_iters >= 0, "fit_max_iters: must be >= 0");
    need(c.fit_tolerance >= 0.0, "fit_tolerance: must be >= 0");
    need(c.fit_restarts >= 1, "fit_restarts: must be >= 1");
    need(c.fit_jitter >= 0.0, "fit_jitter: must be >= 0");
    need(c.noise_sigma >= 0.0, "noise_sigma: must be >= 0");
    need(c.eig_threshold > 0.0, "eig_threshold: must be positive");
    need(c.snapshot_points >= 2, "snapshot_points: must be >= 2");
    need(!c.output_dir.empty(), "output_dir: must not be empty");
    need(c.workers >= 1, "workers: must be >= 1");
    return e;
}

inline RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::vector<std::string> problems;
    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string body = detail::trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            problems.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
            continue;
        }
        const std::string key = detail::trim(body.substr(0, eq));
        const std::string value = detail::trim(body.substr(eq + 1));
        const auto& table = detail::fields();
        auto it = std::find_if(table.begin(), table.end(), [&](const auto& f) { return f.first == key; });
        if (it == table.end()) {
            problems.push_back("unknown key '" + key + "' (line " + std::to_string(lineno) + ")");
            continue;
        }
        if (!seen.insert(key).second) {
            problems.push_back("duplicate key '" + key + "' (line " + std::to_string(lineno) + ")");
            continue;
        }
        try {
            it->second.parse(cfg, value);
        } catch (const std::exception& ex) {
            problems.push_back(key + ": " + ex.what());
        }
    }
    for (auto& p : validate(cfg)) problems.push_back(std::move(p));
    if (!problems.empty()) throw ConfigErrors(std::move(problems));
    return cfg;
}

inline RunConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigErrors({"cannot open config '" + path + "'"});
    return parse_config(in);
}

/// Every key, fully resolved; parse_config(emit_config(c)) reproduces c.
inline std::string emit_config(const RunConfig& c) {
    std::ostringstream os;
    for (const auto& [key, field] : detail::fields()) os << key << " = " << field.print(c) << '\n';
    return os.str();
}

/// Applies NGF_SEED from the environment when present.
inline void apply_environment(RunConfig& c) {
    if (const char* s = std::getenv("NGF_SEED"); s && *s) {
        try {
            const auto v = csv::parse_int(s);
            if (v < 0) throw DomainError("negative");
            c.seed = static_cast<std::uint64_t>(v);
        } catch (const std::exception&) {
            throw ConfigErrors({"NGF_SEED: not a non-negative integer: '" + std::string(s) + "'"});
        }
    }
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"paper-m100", "paper-m10-uniform", "paper-m10-support",
                                                "paper-m10-moving"};
    return names;
}

/// The four sensor scenarios of the KdV study. Everything else is the
/// RunConfig default (domain [-10,20], T=4, K=1000, J=1000, n=12, eps=1e-3,
/// 101-point parameter grid on [0,10], dt_obs=1e-3, xi_true=6).
inline RunConfig preset(std::string_view name) {
    RunConfig c;
    c.mode = RunMode::filter;
    if (name == "paper-m100") {
        c.sensor_kind = SensorKind::uniform_fixed;
        c.sensor_m = 100;
        c.sensor_lo0 = c.domain_lo;
        c.sensor_hi0 = c.domain_hi;
    } else if (name == "paper-m10-uniform") {
        c.sensor_kind = SensorKind::uniform_fixed;
        c.sensor_m = 10;
        c.sensor_lo0 = c.domain_lo;
        c.sensor_hi0 = c.domain_hi;
    } else if (name == "paper-m10-support") {
        c.sensor_kind = SensorKind::interval_fixed;
        c.sensor_m = 10;
        c.sensor_lo0 = -5.0;
        c.sensor_hi0 = 0.0;
    } else if (name == "paper-m10-moving") {
        c.sensor_kind = SensorKind::moving_interval;
        c.sensor_m = 10;
        c.sensor_lo0 = -5.0;
        c.sensor_lo1 = 4.0;
        c.sensor_hi0 = 0.0;
        c.sensor_hi1 = 6.0;
    } else {
        throw ConfigErrors({"unknown preset '" + std::string(name) + "'"});
    }
    c.output_dir = "ngf_out/" + std::string(name);
    return c;
}

}  // namespace ngf
