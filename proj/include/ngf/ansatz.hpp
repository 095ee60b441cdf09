#pragma once

// Shallow Gaussian network U(x, theta) = sum_i c_i exp(-w_i^2 |x - b_i|^2)
// with closed-form derivatives in the parameters and (for d = 1) in space.

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>

#include "ngf/csv.hpp"
#include "ngf/error.hpp"

namespace ngf {

struct NetworkConfig {
    int n = 12;  // units
    int d = 1;   // spatial dimension

    NetworkConfig() = default;
    NetworkConfig(int units, int dim) : n(units), d(dim) {
        if (n < 1 || d < 1) throw DomainError("NetworkConfig: n and d must be >= 1");
    }

    int block_size() const { return d + 2; }
    int param_count() const { return n * (d + 2); }

    friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Flat parameter vector. Unit i occupies the contiguous block
/// [i*(d+2), (i+1)*(d+2)) laid out as (c_i, w_i, b_i[0..d)).
class ParamVector {
public:
    ParamVector() = default;

    explicit ParamVector(NetworkConfig cfg)
        : cfg_(cfg), data_(Eigen::VectorXd::Zero(cfg.param_count())) {}

    ParamVector(NetworkConfig cfg, Eigen::VectorXd data) : cfg_(cfg), data_(std::move(data)) {
        if (data_.size() != cfg_.param_count()) {
            throw DomainError("ParamVector: expected " + std::to_string(cfg_.param_count()) +
                              " entries, got " + std::to_string(data_.size()));
        }
    }

    const NetworkConfig& config() const { return cfg_; }
    int size() const { return cfg_.param_count(); }
    int units() const { return cfg_.n; }

    const Eigen::VectorXd& data() const { return data_; }
    Eigen::VectorXd& data() { return data_; }

    static constexpr int c_offset = 0;
    static constexpr int w_offset = 1;
    static constexpr int b_offset = 2;

    int index_c(int i) const { return i * cfg_.block_size() + c_offset; }
    int index_w(int i) const { return i * cfg_.block_size() + w_offset; }
    int index_b(int i, int k = 0) const { return i * cfg_.block_size() + b_offset + k; }

    double c(int i) const { return data_[index_c(i)]; }
    double w(int i) const { return data_[index_w(i)]; }
    double b(int i, int k = 0) const { return data_[index_b(i, k)]; }
    double& c(int i) { return data_[index_c(i)]; }
    double& w(int i) { return data_[index_w(i)]; }
    double& b(int i, int k = 0) { return data_[index_b(i, k)]; }

    bool all_finite() const { return data_.allFinite(); }

    /// Builder for a d = 1 unit.
    void set_unit(int i, double ci, double wi, double bi) {
        c(i) = ci;
        w(i) = wi;
        b(i) = bi;
    }

private:
    NetworkConfig cfg_{};
    Eigen::VectorXd data_{};
};

/// Value and spatial derivatives d^k U / dx^k for k = 1..max_order.
struct FieldJet {
    double value = 0.0;
    std::array<double, 3> derivs{0.0, 0.0, 0.0};
    int max_order = 0;

    /// k-th spatial derivative, 1-based. Order 0 returns the value.
    double dx(int k) const {
        if (k == 0) return value;
        if (k < 0 || k > max_order) {
            throw ContractError("FieldJet: order " + std::to_string(k) + " not available (max " +
                                std::to_string(max_order) + ")");
        }
        return derivs[static_cast<std::size_t>(k - 1)];
    }
};

inline constexpr int kMaxSpatialOrder = 3;

namespace detail {

inline void require_finite(const ParamVector& theta) {
    if (!theta.all_finite()) throw DomainError("ansatz: non-finite parameter vector");
}

inline void require_finite(std::span<const double> x) {
    for (double v : x)
        if (!std::isfinite(v)) throw DomainError("ansatz: non-finite evaluation point");
}

inline void require_dim(const ParamVector& theta, std::span<const double> x) {
    if (static_cast<int>(x.size()) != theta.config().d) {
        throw DomainError("ansatz: point has dimension " + std::to_string(x.size()) + ", network expects " +
                          std::to_string(theta.config().d));
    }
}

inline double sq_dist(const ParamVector& theta, int i, std::span<const double> x) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double r = x[k] - theta.b(i, static_cast<int>(k));
        s += r * r;
    }
    return s;
}

}  // namespace detail

inline double eval(const ParamVector& theta, std::span<const double> x) {
    detail::require_finite(theta);
    detail::require_finite(x);
    detail::require_dim(theta, x);
    double u = 0.0;
    for (int i = 0; i < theta.units(); ++i) {
        const double w = theta.w(i);
        u += theta.c(i) * std::exp(-w * w * detail::sq_dist(theta, i, x));
    }
    return u;
}

inline double eval(const ParamVector& theta, double x) { return eval(theta, std::span<const double>(&x, 1)); }

/// Writes dU/dtheta into `out` (length n(d+2)), same block layout as ParamVector.
inline void grad_theta(const ParamVector& theta, std::span<const double> x, std::span<double> out) {
    detail::require_finite(theta);
    detail::require_finite(x);
    detail::require_dim(theta, x);
    if (static_cast<int>(out.size()) != theta.size()) throw ContractError("grad_theta: output size mismatch");
    const int d = theta.config().d;
    for (int i = 0; i < theta.units(); ++i) {
        const double c = theta.c(i);
        const double w = theta.w(i);
        const double r2 = detail::sq_dist(theta, i, x);
        const double phi = std::exp(-w * w * r2);
        out[static_cast<std::size_t>(theta.index_c(i))] = phi;
        out[static_cast<std::size_t>(theta.index_w(i))] = -2.0 * c * w * r2 * phi;
        for (int k = 0; k < d; ++k) {
            out[static_cast<std::size_t>(theta.index_b(i, k))] =
                2.0 * c * w * w * (x[static_cast<std::size_t>(k)] - theta.b(i, k)) * phi;
        }
    }
}

inline Eigen::VectorXd grad_theta(const ParamVector& theta, std::span<const double> x) {
    Eigen::VectorXd g(theta.size());
    grad_theta(theta, x, std::span<double>(g.data(), static_cast<std::size_t>(g.size())));
    return g;
}

inline Eigen::VectorXd grad_theta(const ParamVector& theta, double x) {
    return grad_theta(theta, std::span<const double>(&x, 1));
}

/// U and its spatial derivatives up to max_order (d = 1 only). With s = x - b
/// and g = exp(-w^2 s^2):
///   g'   = -2 w^2 s g
///   g''  = (4 w^4 s^2 - 2 w^2) g
///   g''' = (12 w^4 s - 8 w^6 s^3) g
inline FieldJet spatial_jet(const ParamVector& theta, double x, int max_order = kMaxSpatialOrder) {
    if (max_order < 0 || max_order > kMaxSpatialOrder) {
        throw UnsupportedOrderError("spatial_jet: order " + std::to_string(max_order) + " unsupported (max 3)");
    }
    if (theta.config().d != 1) throw DomainError("spatial_jet: only d = 1 is supported");
    detail::require_finite(theta);
    if (!std::isfinite(x)) throw DomainError("spatial_jet: non-finite evaluation point");

    FieldJet jet;
    jet.max_order = max_order;
    for (int i = 0; i < theta.units(); ++i) {
        const double c = theta.c(i);
        const double w2 = theta.w(i) * theta.w(i);
        const double s = x - theta.b(i);
        const double g = c * std::exp(-w2 * s * s);
        jet.value += g;
        if (max_order >= 1) jet.derivs[0] += -2.0 * w2 * s * g;
        if (max_order >= 2) jet.derivs[1] += (4.0 * w2 * w2 * s * s - 2.0 * w2) * g;
        if (max_order >= 3) jet.derivs[2] += (12.0 * w2 * w2 * s - 8.0 * w2 * w2 * w2 * s * s * s) * g;
    }
    return jet;
}

// ---------------------------------------------------------------------------
// Checkpoint I/O: one header row theta_0..theta_{P-1} and one data row.

inline void write_csv(std::ostream& os, const ParamVector& theta) {
    csv::Writer w(os);
    std::vector<std::string> header, row;
    for (int j = 0; j < theta.size(); ++j) {
        header.push_back("theta_" + std::to_string(j));
        row.push_back(csv::format(theta.data()[j]));
    }
    w.row(header);
    w.row(row);
}

inline ParamVector read_csv(std::istream& is, NetworkConfig cfg) {
    auto table = csv::read(is);
    if (table.rows.size() != 1) throw DomainError("ParamVector csv: expected exactly one data row");
    if (static_cast<int>(table.header.size()) != cfg.param_count()) {
        throw DomainError("ParamVector csv: expected " + std::to_string(cfg.param_count()) + " columns");
    }
    Eigen::VectorXd v(cfg.param_count());
    for (int j = 0; j < cfg.param_count(); ++j) {
        if (table.header[static_cast<std::size_t>(j)] != "theta_" + std::to_string(j)) {
            throw DomainError("ParamVector csv: bad header '" + table.header[static_cast<std::size_t>(j)] + "'");
        }
        v[j] = csv::parse_double(table.rows[0][static_cast<std::size_t>(j)]);
    }
    return ParamVector(cfg, std::move(v));
}

}  // namespace ngf
