#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <string_view>

#include "ngf/ansatz.hpp"
#include "ngf/error.hpp"

namespace ngf {

/// Compact scalar parameter interval.
struct ParamDomain {
    double lo = 0.0;
    double hi = 10.0;

    ParamDomain() = default;
    ParamDomain(double l, double h) : lo(l), hi(h) {
        if (!(lo <= hi)) throw DomainError("ParamDomain: lo must not exceed hi");
    }
    bool contains(double xi) const { return xi >= lo && xi <= hi; }
};

/// Right-hand side f(t, x, u, xi) of du/dt = f, consuming the local jet of u.
/// Implementations are immutable after construction.
class RhsSpec {
public:
    virtual ~RhsSpec() = default;
    virtual int max_spatial_order() const = 0;
    virtual double evaluate(double t, double x, const FieldJet& jet, double xi) const = 0;
    virtual std::string name() const = 0;
};

/// KdV: u_t = -u_xxx - xi u u_x. Autonomous; t is ignored.
class KdvRhs final : public RhsSpec {
public:
    int max_spatial_order() const override { return 3; }

    double evaluate(double /*t*/, double /*x*/, const FieldJet& jet, double xi) const override {
        if (jet.max_order < 3) throw ContractError("kdv_rhs: jet must carry orders 1 and 3");
        return -jet.derivs[2] - xi * jet.value * jet.derivs[0];
    }

    std::string name() const override { return "kdv"; }
};

inline double kdv_rhs(double t, double x, const FieldJet& jet, double xi) { return KdvRhs{}.evaluate(t, x, jet, xi); }

inline std::shared_ptr<const RhsSpec> make_rhs(std::string_view name) {
    if (name == "kdv") return std::make_shared<KdvRhs>();
    throw DomainError("unknown rhs '" + std::string(name) + "'");
}

/// Exact traveling wave of u_t = -u_xxx - xi u u_x:
///   (3c/xi) sech^2(sqrt(c)/2 (x - c t - a)).
/// Generic in the scalar type so tests can differentiate it in extended precision.
template <typename Real>
Real soliton_field(Real x, Real t, Real speed, Real shift, Real xi) {
    using std::abs;
    using std::exp;
    using std::sqrt;
    if (xi == 0) throw DomainError("soliton_field: xi must be nonzero");
    if (!(speed > 0)) throw DomainError("soliton_field: speed must be positive");
    const Real arg = sqrt(speed) * (x - speed * t - shift) / 2;
    // sech^2 through exp(-2|arg|) stays finite for large |arg|
    const Real e = exp(-2 * abs(arg));
    const Real sech2 = 4 * e / ((1 + e) * (1 + e));
    return 3 * speed / xi * sech2;
}

}  // namespace ngf
