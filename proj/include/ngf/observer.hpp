#pragma once

// Sensor schedules, ground-truth sources and the observation stream (z, zdot).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ngf/ansatz.hpp"
#include "ngf/assembly.hpp"
#include "ngf/csv.hpp"
#include "ngf/error.hpp"
#include "ngf/integrator.hpp"
#include "ngf/pde_rhs.hpp"

namespace ngf {

enum class SensorKind { uniform_fixed, interval_fixed, moving_interval };

inline std::string_view to_string(SensorKind k) {
    switch (k) {
        case SensorKind::uniform_fixed: return "uniform_fixed";
        case SensorKind::interval_fixed: return "interval_fixed";
        case SensorKind::moving_interval: return "moving_interval";
    }
    return "?";
}

inline SensorKind parse_sensor_kind(std::string_view s) {
    if (s == "uniform_fixed") return SensorKind::uniform_fixed;
    if (s == "interval_fixed") return SensorKind::interval_fixed;
    if (s == "moving_interval") return SensorKind::moving_interval;
    throw DomainError("unknown sensor kind '" + std::string(s) + "'");
}

/// m equidistant sensors on [lo0 + lo1 t, hi0 + hi1 t], endpoints included.
struct SensorSchedule {
    SensorKind kind = SensorKind::uniform_fixed;
    int m = 100;
    double lo0 = -10.0;
    double lo1 = 0.0;
    double hi0 = 20.0;
    double hi1 = 0.0;

    static SensorSchedule uniform(const SpatialDomain& domain, int m) {
        return {SensorKind::uniform_fixed, m, domain.lo, 0.0, domain.hi, 0.0};
    }
    static SensorSchedule interval(double lo, double hi, int m) {
        return {SensorKind::interval_fixed, m, lo, 0.0, hi, 0.0};
    }
    static SensorSchedule moving(double lo0, double lo1, double hi0, double hi1, int m) {
        return {SensorKind::moving_interval, m, lo0, lo1, hi0, hi1};
    }

    double lo(double t) const { return lo0 + lo1 * t; }
    double hi(double t) const { return hi0 + hi1 * t; }

    /// Checks m >= 1 and lo(t) < hi(t) on [0, T] (affine, so endpoints suffice).
    void validate(double T) const {
        if (m < 1) throw DomainError("SensorSchedule: m must be >= 1");
        if (!(lo(0.0) < hi(0.0)) || !(lo(T) < hi(T))) throw DomainError("SensorSchedule: empty interval on [0,T]");
        if (kind != SensorKind::moving_interval && (lo1 != 0.0 || hi1 != 0.0)) {
            throw DomainError("SensorSchedule: fixed schedules cannot move");
        }
    }
};

/// Sink for non-fatal warnings (sensor clamping etc.).
using WarningSink = std::function<void(const std::string&)>;

inline WarningSink stderr_warnings() {
    return [](const std::string& msg) { std::cerr << "[warn] " << msg << '\n'; };
}

inline std::vector<double> positions(const SensorSchedule& s, double t) {
    std::vector<double> xs(static_cast<std::size_t>(std::max(s.m, 0)));
    const double lo = s.lo(t);
    const double hi = s.hi(t);
    if (s.m == 1) {
        xs[0] = 0.5 * (lo + hi);
        return xs;
    }
    for (int i = 0; i < s.m; ++i) {
        xs[static_cast<std::size_t>(i)] = i == s.m - 1 ? hi : lo + (hi - lo) * i / (s.m - 1);
    }
    return xs;
}

/// Positions clamped into the domain. Returns true through `clamped` when any
/// sensor left it.
inline std::vector<double> positions(const SensorSchedule& s, double t, const SpatialDomain& domain, bool* clamped) {
    auto xs = positions(s, t);
    bool any = false;
    for (auto& x : xs) {
        if (x < domain.lo || x > domain.hi) {
            any = true;
            x = std::clamp(x, domain.lo, domain.hi);
        }
    }
    if (clamped) *clamped = any;
    return xs;
}

// ---------------------------------------------------------------------------
// Ground truth

class TruthSource {
public:
    virtual ~TruthSource() = default;
    virtual double sample(double t, double x) const = 0;
    /// Last time at which sample() is defined.
    virtual double horizon() const = 0;
    /// u_t as dictated by the governing equation at the truth state, when the
    /// source can supply it without differencing.
    virtual std::optional<double> model_velocity(double /*t*/, double /*x*/) const { return std::nullopt; }
};

class FunctionTruth final : public TruthSource {
public:
    using Fn = std::function<double(double, double)>;

    FunctionTruth(Fn u, double horizon, Fn ut = {}) : u_(std::move(u)), ut_(std::move(ut)), horizon_(horizon) {}

    double sample(double t, double x) const override { return u_(t, x); }
    double horizon() const override { return horizon_; }
    std::optional<double> model_velocity(double t, double x) const override {
        if (!ut_) return std::nullopt;
        return ut_(t, x);
    }

private:
    Fn u_;
    Fn ut_;
    double horizon_;
};

/// Single KdV soliton; exposes the exact time derivative.
class SolitonTruth final : public TruthSource {
public:
    SolitonTruth(double speed, double shift, double xi, double horizon)
        : speed_(speed), shift_(shift), xi_(xi), horizon_(horizon) {
        soliton_field(0.0, 0.0, speed, shift, xi);  // validates arguments
    }

    double sample(double t, double x) const override { return soliton_field(x, t, speed_, shift_, xi_); }
    double horizon() const override { return horizon_; }

    /// u_t = -c u_x for a traveling wave.
    std::optional<double> model_velocity(double t, double x) const override {
        const double s = 0.5 * std::sqrt(speed_) * (x - speed_ * t - shift_);
        const double amp = 3.0 * speed_ / xi_;
        const double th = std::tanh(s);
        const double sech2 = 1.0 - th * th;
        const double ux = amp * sech2 * (-2.0 * th) * 0.5 * std::sqrt(speed_);
        return -speed_ * ux;
    }

private:
    double speed_, shift_, xi_, horizon_;
};

/// Truth given by a stored network trajectory: theta(t) is taken from the
/// checkpoints (cubic Lagrange interpolation between them).
class NgsTruth final : public TruthSource {
public:
    NgsTruth(ForwardTrajectory traj, std::shared_ptr<const RhsSpec> rhs, double xi)
        : traj_(std::move(traj)), rhs_(std::move(rhs)), xi_(xi) {
        if (traj_.size() < 2) throw DomainError("NgsTruth: trajectory needs at least two checkpoints");
    }

    double sample(double t, double x) const override { return eval(state_at(t), x); }
    double horizon() const override { return traj_.times.back(); }

    std::optional<double> model_velocity(double t, double x) const override {
        const ParamVector th = state_at(t);
        return rhs_->evaluate(t, x, spatial_jet(th, x, rhs_->max_spatial_order()), xi_);
    }

    ParamVector state_at(double t) const {
        const auto& ts = traj_.times;
        const std::size_t n = ts.size();
        const double tol = 1e-12 * std::max(1.0, std::abs(ts.back()));
        auto it = std::lower_bound(ts.begin(), ts.end(), t - tol);
        if (it != ts.end() && std::abs(*it - t) <= tol) return traj_.states[static_cast<std::size_t>(it - ts.begin())];
        if (t < ts.front() - tol || t > ts.back() + tol) throw DomainError("NgsTruth: time outside trajectory");
        std::size_t hi = static_cast<std::size_t>(it - ts.begin());
        std::size_t first = hi >= 2 ? hi - 2 : 0;
        if (n >= 4) first = std::min(first, n - 4);
        const std::size_t count = std::min<std::size_t>(4, n);
        Eigen::VectorXd v = Eigen::VectorXd::Zero(traj_.states.front().size());
        for (std::size_t a = first; a < first + count; ++a) {
            double wgt = 1.0;
            for (std::size_t b = first; b < first + count; ++b)
                if (b != a) wgt *= (t - ts[b]) / (ts[a] - ts[b]);
            v += wgt * traj_.states[a].data();
        }
        return ParamVector(traj_.states.front().config(), std::move(v));
    }

    const ForwardTrajectory& trajectory() const { return traj_; }

private:
    ForwardTrajectory traj_;
    std::shared_ptr<const RhsSpec> rhs_;
    double xi_;
};

// ---------------------------------------------------------------------------
// Observations

struct ObservationFrame {
    double t = 0.0;
    std::vector<double> positions;
    std::vector<double> z;
    std::vector<double> zdot;

    std::size_t size() const { return positions.size(); }
};

enum class VelocityEstimate {
    difference,  // (u(t + dt_obs, x) - u(t, x)) / dt_obs
    model,       // truth.model_velocity(t, x)
};

inline std::string_view to_string(VelocityEstimate v) { return v == VelocityEstimate::difference ? "difference" : "model"; }

inline VelocityEstimate parse_velocity_estimate(std::string_view s) {
    if (s == "difference") return VelocityEstimate::difference;
    if (s == "model") return VelocityEstimate::model;
    throw DomainError("unknown velocity estimate '" + std::string(s) + "'");
}

struct ObservationNoise {
    double sigma = 0.0;  // additive Gaussian on z and zdot; 0 disables
    std::uint64_t seed = 0;
};

/// Sensors are frozen at time t for the difference quotient. Past the truth
/// horizon the quotient falls back to a backward difference.
inline ObservationFrame observe(const TruthSource& truth, const std::vector<double>& xs, double t, double dt_obs,
                                VelocityEstimate mode = VelocityEstimate::difference,
                                const ObservationNoise& noise = {}, std::int64_t frame_index = 0) {
    if (!(dt_obs > 0.0)) throw DomainError("observe: dt_obs must be positive");
    ObservationFrame f;
    f.t = t;
    f.positions = xs;
    f.z.resize(xs.size());
    f.zdot.resize(xs.size());
    const double tol = 1e-12 * std::max(1.0, std::abs(truth.horizon()));
    const bool backward = t + dt_obs > truth.horizon() + tol;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        const double z = truth.sample(t, x);
        f.z[i] = z;
        if (mode == VelocityEstimate::model) {
            auto v = truth.model_velocity(t, x);
            if (!v) throw ContractError("observe: truth source has no model velocity");
            f.zdot[i] = *v;
        } else if (backward) {
            f.zdot[i] = (z - truth.sample(t - dt_obs, x)) / dt_obs;
        } else {
            f.zdot[i] = (truth.sample(t + dt_obs, x) - z) / dt_obs;
        }
    }
    if (noise.sigma > 0.0) {
        std::seed_seq seq{static_cast<std::uint32_t>(noise.seed), static_cast<std::uint32_t>(noise.seed >> 32),
                          static_cast<std::uint32_t>(frame_index)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> g(0.0, noise.sigma);
        for (auto& v : f.z) v += g(rng);
        for (auto& v : f.zdot) v += g(rng);
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(f.z[i]) || !std::isfinite(f.zdot[i])) throw DomainError("observe: non-finite observation");
    }
    return f;
}

inline ObservationFrame observe(const TruthSource& truth, const SensorSchedule& schedule, double t, double dt_obs,
                                VelocityEstimate mode = VelocityEstimate::difference) {
    return observe(truth, positions(schedule, t), t, dt_obs, mode);
}

/// Produces the frame for time index k.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual ObservationFrame frame(int k, double t) const = 0;
};

class LiveFrames final : public FrameSource {
public:
    LiveFrames(std::shared_ptr<const TruthSource> truth, SensorSchedule schedule, SpatialDomain domain, double dt_obs,
               VelocityEstimate mode = VelocityEstimate::difference, ObservationNoise noise = {},
               WarningSink warn = stderr_warnings())
        : truth_(std::move(truth)),
          schedule_(schedule),
          domain_(domain),
          dt_obs_(dt_obs),
          mode_(mode),
          noise_(noise),
          warn_(std::move(warn)) {}

    ObservationFrame frame(int k, double t) const override {
        bool clamped = false;
        auto xs = positions(schedule_, t, domain_, &clamped);
        if (clamped && !warned_ && warn_) {
            warn_("sensors left the spatial domain at t=" + csv::format(t) + "; clamping to [" +
                  csv::format(domain_.lo) + "," + csv::format(domain_.hi) + "]");
            warned_ = true;
        }
        return observe(*truth_, xs, t, dt_obs_, mode_, noise_, k);
    }

private:
    std::shared_ptr<const TruthSource> truth_;
    SensorSchedule schedule_;
    SpatialDomain domain_;
    double dt_obs_;
    VelocityEstimate mode_;
    ObservationNoise noise_;
    WarningSink warn_;
    mutable bool warned_ = false;
};

/// Frames replayed from a recorded log, indexed by k.
class ReplayFrames final : public FrameSource {
public:
    explicit ReplayFrames(std::vector<ObservationFrame> frames) : frames_(std::move(frames)) {}

    ObservationFrame frame(int k, double /*t*/) const override {
        if (k < 0 || static_cast<std::size_t>(k) >= frames_.size()) {
            throw DomainError("replay: no frame for step " + std::to_string(k));
        }
        return frames_[static_cast<std::size_t>(k)];
    }

    std::size_t size() const { return frames_.size(); }

private:
    std::vector<ObservationFrame> frames_;
};

/// Observation log: header k,t,i,x_i,z_i,zdot_i, one row per sensor.
inline void write_observation_header(std::ostream& os) { csv::Writer(os).row("k", "t", "i", "x_i", "z_i", "zdot_i"); }

inline void write_observation_rows(std::ostream& os, int k, const ObservationFrame& f) {
    csv::Writer w(os);
    for (std::size_t i = 0; i < f.size(); ++i) w.row(k, f.t, i, f.positions[i], f.z[i], f.zdot[i]);
}

inline std::vector<ObservationFrame> read_observation_log(std::istream& is) {
    auto table = csv::read(is);
    const auto ck = table.column("k"), ct = table.column("t"), cx = table.column("x_i"), cz = table.column("z_i"),
               cd = table.column("zdot_i");
    std::vector<ObservationFrame> frames;
    for (const auto& row : table.rows) {
        const auto k = csv::parse_int(row[ck]);
        if (k < 0) throw DomainError("observation log: negative k");
        if (static_cast<std::size_t>(k) >= frames.size()) {
            if (static_cast<std::size_t>(k) != frames.size()) throw DomainError("observation log: frames out of order");
            frames.emplace_back();
            frames.back().t = csv::parse_double(row[ct]);
        }
        auto& f = frames[static_cast<std::size_t>(k)];
        f.positions.push_back(csv::parse_double(row[cx]));
        f.z.push_back(csv::parse_double(row[cz]));
        f.zdot.push_back(csv::parse_double(row[cd]));
    }
    return frames;
}

}  // namespace ngf
