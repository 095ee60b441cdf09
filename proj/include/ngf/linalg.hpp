#pragma once

// Small dense symmetric linear algebra on top of Eigen.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "ngf/error.hpp"

namespace ngf {

using SymMatrix = Eigen::MatrixXd;

inline bool is_symmetric(const SymMatrix& a, double rel_tol = 1e-12) {
    if (a.rows() != a.cols()) return false;
    const double scale = a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
    return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/// Solves (M + eps I) eta = F by Cholesky. M must be PSD up to roundoff.
inline Eigen::VectorXd regularized_solve(const SymMatrix& m, const Eigen::VectorXd& f, double eps) {
    if (!(eps > 0.0)) throw DomainError("regularized_solve: eps must be positive");
    if (m.rows() != m.cols() || m.rows() != f.size()) throw DomainError("regularized_solve: dimension mismatch");
    if (!m.allFinite() || !f.allFinite()) throw DomainError("regularized_solve: non-finite input");
    if (!is_symmetric(m)) throw DomainError("regularized_solve: matrix not symmetric");

    SymMatrix a = m;
    a.diagonal().array() += eps;
    Eigen::LLT<SymMatrix> llt(a);
    if (llt.info() != Eigen::Success) {
        Eigen::SelfAdjointEigenSolver<SymMatrix> es(a, Eigen::EigenvaluesOnly);
        std::ostringstream msg;
        msg << "regularized_solve: Cholesky failed (eps=" << eps << ", lambda_min=" << es.eigenvalues().minCoeff()
            << ", lambda_max=" << es.eigenvalues().maxCoeff() << ")";
        throw LinalgError(msg.str());
    }
    Eigen::VectorXd eta = llt.solve(f);
    const double res = (a * eta - f).norm();
    if (!(res <= 1e-8 * (f.norm() + 1.0))) {
        std::ostringstream msg;
        msg << "regularized_solve: residual " << res << " exceeds bound";
        throw LinalgError(msg.str());
    }
    return eta;
}

/// All eigenvalues, sorted descending.
inline Eigen::VectorXd sym_eigenvalues(const SymMatrix& m) {
    if (m.rows() != m.cols()) throw DomainError("sym_eigenvalues: matrix not square");
    if (!m.allFinite()) throw DomainError("sym_eigenvalues: non-finite input");
    if (m.rows() == 0) return {};
    Eigen::SelfAdjointEigenSolver<SymMatrix> es(m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw LinalgError("sym_eigenvalues: no convergence");
    Eigen::VectorXd lam = es.eigenvalues();
    std::sort(lam.data(), lam.data() + lam.size(), std::greater<>());
    return lam;
}

/// Fraction of eigenvalues with |lambda| > threshold.
inline double eigen_fraction_above(const Eigen::VectorXd& lambda, double threshold = 1e-6) {
    if (lambda.size() == 0) return 0.0;
    const auto count = (lambda.array().abs() > threshold).count();
    return static_cast<double>(count) / static_cast<double>(lambda.size());
}

}  // namespace ngf
