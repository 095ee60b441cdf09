#pragma once

// Explicit time stepping of theta' = eta(theta, t) on a uniform grid.
//
// A velocity field is any callable
//   Eigen::VectorXd(const ParamVector& theta, double t, std::int64_t step, int stage)
// The (step, stage) pair lets the field pick its quadrature samples.

#include <Eigen/Core>

#include <concepts>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "ngf/ansatz.hpp"
#include "ngf/csv.hpp"
#include "ngf/error.hpp"

namespace ngf {

template <typename F>
concept VelocityField = requires(const F& f, const ParamVector& theta, double t, std::int64_t step, int stage) {
    { f(theta, t, step, stage) } -> std::convertible_to<Eigen::VectorXd>;
};

enum class Scheme { euler, rk4 };

inline std::string_view to_string(Scheme s) { return s == Scheme::euler ? "euler" : "rk4"; }

inline Scheme parse_scheme(std::string_view s) {
    if (s == "euler") return Scheme::euler;
    if (s == "rk4") return Scheme::rk4;
    throw DomainError("unknown scheme '" + std::string(s) + "'");
}

struct TimeGrid {
    double t0 = 0.0;
    double T = 4.0;
    int K = 1000;

    TimeGrid() = default;
    TimeGrid(double start, double end, int steps) : t0(start), T(end), K(steps) { validate(); }

    void validate() const {
        if (!(T > t0)) throw DomainError("TimeGrid: T must exceed t0");
        if (K < 1) throw DomainError("TimeGrid: K must be >= 1");
    }
    double dt() const { return (T - t0) / K; }
    double time(int k) const {
        if (k == 0) return t0;
        return k == K ? T : t0 + (T - t0) * k / K;
    }
};

/// F is evaluated at t_{k+1}, following M theta_{k+1} = M theta_k + dt F(t_{k+1}, theta_k).
template <VelocityField Field>
ParamVector euler_step(const ParamVector& theta, double t, double dt, const Field& field, std::int64_t step = 0) {
    if (!(dt > 0.0)) throw DomainError("euler_step: dt must be positive");
    Eigen::VectorXd eta = field(theta, t + dt, step, 0);
    return ParamVector(theta.config(), theta.data() + dt * eta);
}

template <VelocityField Field>
ParamVector rk4_step(const ParamVector& theta, double t, double dt, const Field& field, std::int64_t step = 0) {
    if (!(dt > 0.0)) throw DomainError("rk4_step: dt must be positive");
    const NetworkConfig cfg = theta.config();
    const double half = 0.5 * dt;
    const Eigen::VectorXd k1 = field(theta, t, step, 0);
    const Eigen::VectorXd k2 = field(ParamVector(cfg, theta.data() + half * k1), t + half, step, 1);
    const Eigen::VectorXd k3 = field(ParamVector(cfg, theta.data() + half * k2), t + half, step, 2);
    const Eigen::VectorXd k4 = field(ParamVector(cfg, theta.data() + dt * k3), t + dt, step, 3);
    return ParamVector(cfg, theta.data() + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

template <VelocityField Field>
ParamVector step(Scheme scheme, const ParamVector& theta, double t, double dt, const Field& field,
                 std::int64_t step_index) {
    return scheme == Scheme::euler ? euler_step(theta, t, dt, field, step_index)
                                   : rk4_step(theta, t, dt, field, step_index);
}

struct ForwardTrajectory {
    std::vector<double> times;
    std::vector<ParamVector> states;
    Scheme scheme = Scheme::rk4;
    std::uint64_t seed = 0;
    bool completed = false;
    std::string error;  // set when the run aborted early

    std::size_t size() const { return states.size(); }
    const ParamVector& back() const { return states.back(); }
};

/// K steps of the chosen scheme. A non-finite state or a failed solve stops
/// the run; the trajectory then ends at the last finite checkpoint.
template <VelocityField Field>
ForwardTrajectory integrate(const ParamVector& theta0, const TimeGrid& grid, const Field& field, Scheme scheme,
                            std::uint64_t seed = 0) {
    grid.validate();
    if (!theta0.all_finite()) throw DomainError("integrate: non-finite initial state");
    ForwardTrajectory traj;
    traj.scheme = scheme;
    traj.seed = seed;
    traj.times.reserve(static_cast<std::size_t>(grid.K) + 1);
    traj.states.reserve(static_cast<std::size_t>(grid.K) + 1);
    traj.times.push_back(grid.time(0));
    traj.states.push_back(theta0);
    const double dt = grid.dt();
    for (int k = 0; k < grid.K; ++k) {
        try {
            ParamVector next = step(scheme, traj.states.back(), grid.time(k), dt, field, k);
            if (!next.all_finite()) {
                traj.error = "non-finite state at step " + std::to_string(k + 1);
                return traj;
            }
            traj.times.push_back(grid.time(k + 1));
            traj.states.push_back(std::move(next));
        } catch (const std::runtime_error& e) {
            traj.error = "step " + std::to_string(k + 1) + ": " + e.what();
            return traj;
        } catch (const DomainError& e) {
            traj.error = "step " + std::to_string(k + 1) + ": " + e.what();
            return traj;
        }
    }
    traj.completed = true;
    return traj;
}

inline void write_trajectory_csv(std::ostream& os, const ForwardTrajectory& traj) {
    csv::Writer w(os);
    std::vector<std::string> header{"k", "t"};
    const int p = traj.states.empty() ? 0 : traj.states.front().size();
    for (int j = 0; j < p; ++j) header.push_back("theta_" + std::to_string(j));
    w.row(header);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        std::vector<std::string> row{csv::format(k), csv::format(traj.times[k])};
        for (int j = 0; j < p; ++j) row.push_back(csv::format(traj.states[k].data()[j]));
        w.row(row);
    }
}

}  // namespace ngf
