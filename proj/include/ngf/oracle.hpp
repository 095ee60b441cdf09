#pragma once

// Reference KdV solver, u_t = -u_xxx - xi u u_x, on a periodic box.
// Fourier pseudo-spectral in space, integrating-factor RK4 in time: the
// dispersive term is integrated exactly, the nonlinearity -xi/2 (u^2)_x is
// evaluated in physical space.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ngf/csv.hpp"
#include "ngf/error.hpp"
#include "ngf/observer.hpp"
#include "ngf/pde_rhs.hpp"

namespace ngf {

struct SpectralGrid {
    int N = 1024;
    double lo = -30.0;
    double hi = 40.0;

    void validate() const {
        if (N < 64 || (N & (N - 1)) != 0) throw DomainError("SpectralGrid: N must be a power of two >= 64");
        if (!(hi > lo)) throw DomainError("SpectralGrid: empty box");
    }
    double length() const { return hi - lo; }
    double dx() const { return length() / N; }
    double point(int j) const { return lo + length() * j / N; }
    /// Box contains [a, b] with at least `margin` on each side.
    bool covers(double a, double b, double margin) const { return lo <= a - margin && hi >= b + margin; }
};

/// Superposition of two KdV solitons,
///   u0(x) = sum_k (3 c_k / xi_ref) sech^2(sqrt(c_k)/2 (x - a_k)).
struct TwoSoliton {
    double c1 = 6.0;
    double a1 = -5.0;
    double c2 = 4.0;
    double a2 = 1.0;
    double xi_ref = 6.0;

    void validate() const {
        if (!(c1 > 0.0) || !(c2 > 0.0)) throw DomainError("TwoSoliton: speeds must be positive");
        if (xi_ref == 0.0) throw DomainError("TwoSoliton: xi_ref must be nonzero");
    }
    double operator()(double x) const {
        return soliton_field(x, 0.0, c1, a1, xi_ref) + soliton_field(x, 0.0, c2, a2, xi_ref);
    }
};

inline double two_soliton_u0(double x, const TwoSoliton& p = {}) { return p(x); }

struct ReferenceOptions {
    SpectralGrid grid{};
    double dt = 1e-4;
    double output_dt = 1e-3;
    double blowup = 1e3;
};

namespace detail {

struct FftwPlanDeleter {
    void operator()(fftw_plan_s* p) const {
        if (p) fftw_destroy_plan(p);
    }
};
using FftwPlan = std::unique_ptr<fftw_plan_s, FftwPlanDeleter>;

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

/// Real <-> half-complex transforms of fixed size N. Not thread-safe to construct.
class RealFft {
public:
    explicit RealFft(int n)
        : n_(n),
          real_(static_cast<double*>(fftw_malloc(sizeof(double) * static_cast<std::size_t>(n)))),
          spec_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n / 2 + 1)))) {
        forward_.reset(fftw_plan_dft_r2c_1d(n, real_.get(), spec_.get(), FFTW_ESTIMATE));
        backward_.reset(fftw_plan_dft_c2r_1d(n, spec_.get(), real_.get(), FFTW_ESTIMATE));
        if (!forward_ || !backward_) throw SolverError("fftw: plan creation failed");
    }

    void forward(const std::vector<double>& in, std::vector<std::complex<double>>& out) {
        std::copy(in.begin(), in.end(), real_.get());
        fftw_execute(forward_.get());
        out.resize(static_cast<std::size_t>(n_ / 2 + 1));
        for (int k = 0; k <= n_ / 2; ++k) out[static_cast<std::size_t>(k)] = {spec_.get()[k][0], spec_.get()[k][1]};
    }

    /// Unnormalized inverse (FFTW convention); caller divides by N.
    void backward(const std::vector<std::complex<double>>& in, std::vector<double>& out) {
        for (int k = 0; k <= n_ / 2; ++k) {
            spec_.get()[k][0] = in[static_cast<std::size_t>(k)].real();
            spec_.get()[k][1] = in[static_cast<std::size_t>(k)].imag();
        }
        fftw_execute(backward_.get());
        out.assign(real_.get(), real_.get() + n_);
    }

private:
    int n_;
    std::unique_ptr<double, FftwFree> real_;
    std::unique_ptr<fftw_complex, FftwFree> spec_;
    FftwPlan forward_;
    FftwPlan backward_;
};

}  // namespace detail

/// Stored spectral snapshots at uniform output times; samples anywhere in
/// [0, T] x R by trigonometric interpolation in x and cubic Lagrange in t.
class SpectralTruth final : public TruthSource {
public:
    using Spectrum = std::vector<std::complex<double>>;

    SpectralTruth(SpectralGrid grid, double xi, double output_dt, std::vector<Spectrum> snapshots)
        : grid_(grid), xi_(xi), output_dt_(output_dt), snaps_(std::move(snapshots)) {}

    double horizon() const override { return output_dt_ * static_cast<double>(snaps_.size() - 1); }
    std::size_t snapshot_count() const { return snaps_.size(); }
    double snapshot_time(std::size_t i) const { return output_dt_ * static_cast<double>(i); }
    const SpectralGrid& grid() const { return grid_; }
    double xi() const { return xi_; }

    double sample(double t, double x) const override { return evaluate_series(interpolate(t), x, 0); }

    std::optional<double> model_velocity(double t, double x) const override {
        const Spectrum s = interpolate(t);
        const double u = evaluate_series(s, x, 0);
        const double ux = evaluate_series(s, x, 1);
        const double uxxx = evaluate_series(s, x, 3);
        return -uxxx - xi_ * u * ux;
    }

    /// Physical values on the collocation grid at snapshot i.
    std::vector<double> snapshot_values(std::size_t i) const {
        detail::RealFft fft(grid_.N);
        std::vector<double> u;
        fft.backward(snaps_.at(i), u);
        for (auto& v : u) v /= grid_.N;
        return u;
    }

    /// Integral of u over the box.
    double mass(std::size_t i) const { return snaps_.at(i)[0].real() * grid_.dx(); }

    /// Integral of u^2 over the box (exact for the trigonometric interpolant).
    double momentum(std::size_t i) const {
        const auto& s = snaps_.at(i);
        const int n = grid_.N;
        double acc = std::norm(s[0]) + std::norm(s[static_cast<std::size_t>(n / 2)]);
        for (int k = 1; k < n / 2; ++k) acc += 2.0 * std::norm(s[static_cast<std::size_t>(k)]);
        return acc * grid_.length() / (static_cast<double>(n) * n);
    }

private:
    Spectrum interpolate(double t) const {
        const double tol = 1e-9 * output_dt_;
        if (t < -tol || t > horizon() + tol) throw DomainError("SpectralTruth: time outside [0, T]");
        const double pos = t / output_dt_;
        const double nearest = std::round(pos);
        if (std::abs(pos - nearest) * output_dt_ <= tol) return snaps_[static_cast<std::size_t>(nearest)];
        const std::size_t count = snaps_.size();
        const auto left = static_cast<std::size_t>(std::floor(pos));
        std::size_t first = left >= 1 ? left - 1 : 0;
        if (count >= 4) first = std::min(first, count - 4);
        const std::size_t used = std::min<std::size_t>(4, count);
        Spectrum out(snaps_.front().size(), {0.0, 0.0});
        for (std::size_t a = first; a < first + used; ++a) {
            double w = 1.0;
            for (std::size_t b = first; b < first + used; ++b)
                if (b != a) w *= (pos - static_cast<double>(b)) / (static_cast<double>(a) - static_cast<double>(b));
            for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * snaps_[a][k];
        }
        return out;
    }

    /// d^order/dx^order of the trigonometric interpolant (Nyquist mode dropped).
    double evaluate_series(const Spectrum& s, double x, int order) const {
        const int n = grid_.N;
        const double k1 = 2.0 * std::numbers::pi / grid_.length();
        const double phase = k1 * (x - grid_.lo);
        const std::complex<double> step(std::cos(phase), std::sin(phase));
        std::complex<double> rot = step;
        std::complex<double> ik_pow;
        double acc = order == 0 ? s[0].real() : 0.0;
        for (int k = 1; k < n / 2; ++k) {
            const double kk = k1 * k;
            switch (order) {
                case 0: ik_pow = 1.0; break;
                case 1: ik_pow = {0.0, kk}; break;
                case 2: ik_pow = -kk * kk; break;
                default: ik_pow = {0.0, -kk * kk * kk}; break;
            }
            acc += 2.0 * (ik_pow * s[static_cast<std::size_t>(k)] * rot).real();
            if (k % 64 == 0) {
                rot = std::polar(1.0, phase * (k + 1));
            } else {
                rot *= step;
            }
        }
        return acc / n;
    }

    SpectralGrid grid_;
    double xi_;
    double output_dt_;
    std::vector<Spectrum> snaps_;
};

/// Integrates from u0 to T and stores snapshots every opt.output_dt.
inline std::shared_ptr<SpectralTruth> solve_reference(const std::function<double(double)>& u0, double xi, double T,
                                                      const ReferenceOptions& opt = {}) {
    const auto& grid = opt.grid;
    grid.validate();
    if (!(T > 0.0) || !(opt.dt > 0.0) || !(opt.output_dt > 0.0)) throw DomainError("solve_reference: bad time settings");
    const long long out_steps = std::llround(T / opt.output_dt);
    const long long per_out = std::llround(opt.output_dt / opt.dt);
    if (std::abs(out_steps * opt.output_dt - T) > 1e-9 * T || std::abs(per_out * opt.dt - opt.output_dt) > 1e-9 * opt.output_dt) {
        throw DomainError("solve_reference: T must be a multiple of output_dt, output_dt a multiple of dt");
    }
    if (std::abs(u0(grid.lo)) >= 1e-8 || std::abs(u0(grid.hi)) >= 1e-8) {
        throw DomainError("solve_reference: initial condition does not decay at the box boundary");
    }

    const int n = grid.N;
    const int half = n / 2;
    const double dt = opt.dt;
    const double k1 = 2.0 * std::numbers::pi / grid.length();

    std::vector<std::complex<double>> E(static_cast<std::size_t>(half + 1)), E2(E.size()), g(E.size());
    for (int k = 0; k <= half; ++k) {
        const double kk = k == half ? 0.0 : k1 * k;
        // linear part: +i k^3 (from -u_xxx)
        E[static_cast<std::size_t>(k)] = std::polar(1.0, kk * kk * kk * dt / 2.0);
        E2[static_cast<std::size_t>(k)] = E[static_cast<std::size_t>(k)] * E[static_cast<std::size_t>(k)];
        g[static_cast<std::size_t>(k)] = {0.0, -0.5 * xi * dt * kk};
    }

    detail::RealFft fft(n);
    std::vector<double> phys(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) phys[static_cast<std::size_t>(j)] = u0(grid.point(j));
    std::vector<std::complex<double>> v;
    fft.forward(phys, v);
    v[static_cast<std::size_t>(half)] = 0.0;

    // N(w) = g .* fft(ifft(w)^2)
    std::vector<std::complex<double>> tmp(v.size()), a, b, c, d;
    auto nonlinear = [&](const std::vector<std::complex<double>>& w, std::vector<std::complex<double>>& out) {
        fft.backward(w, phys);
        const double inv = 1.0 / n;
        for (auto& p : phys) {
            p *= inv;
            p *= p;
        }
        fft.forward(phys, out);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] *= g[k];
    };

    std::vector<SpectralTruth::Spectrum> snaps;
    snaps.reserve(static_cast<std::size_t>(out_steps + 1));
    snaps.push_back(v);
    for (long long o = 0; o < out_steps; ++o) {
        for (long long s = 0; s < per_out; ++s) {
            nonlinear(v, a);
            for (std::size_t k = 0; k < v.size(); ++k) tmp[k] = E[k] * (v[k] + 0.5 * a[k]);
            nonlinear(tmp, b);
            for (std::size_t k = 0; k < v.size(); ++k) tmp[k] = E[k] * v[k] + 0.5 * b[k];
            nonlinear(tmp, c);
            for (std::size_t k = 0; k < v.size(); ++k) tmp[k] = E2[k] * v[k] + E[k] * c[k];
            nonlinear(tmp, d);
            for (std::size_t k = 0; k < v.size(); ++k)
                v[k] = E2[k] * v[k] + (E2[k] * a[k] + 2.0 * E[k] * (b[k] + c[k]) + d[k]) / 6.0;
        }
        fft.backward(v, phys);
        double umax = 0.0;
        for (double p : phys) umax = std::max(umax, std::abs(p / n));
        if (!(umax <= opt.blowup)) {
            throw SolverError("solve_reference: blow-up at t=" + csv::format(static_cast<double>(o + 1) * opt.output_dt));
        }
        snaps.push_back(v);
    }
    return std::make_shared<SpectralTruth>(grid, xi, opt.output_dt, std::move(snaps));
}

/// Truth dump: t,x,u on the given x-grid at each requested time.
inline void write_truth_csv(std::ostream& os, const TruthSource& truth, const std::vector<double>& times,
                            const std::vector<double>& xs) {
    csv::Writer w(os);
    w.row("t", "x", "u");
    for (double t : times)
        for (double x : xs) w.row(t, x, truth.sample(t, x));
}

}  // namespace ngf
