// Copyright (c) sipm contributors
// Licensed under Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include "sipm/cones.hpp"
#include "sipm/errors.hpp"

namespace sipm {

/// Below this dual-local-norm of the residual the iterate is treated as
/// stationary for the current gradient estimate.
inline constexpr double kStationarityFloor = 1e-14;

/// Condition-estimate limit for A H A^T before it is declared singular.
inline constexpr double kConditionLimit = 1e14;

/// Equality constraints A x = b with A of full row rank. m = 0 (no
/// constraints) is allowed.
class AffineConstraints {
public:
    /// No constraints on an n-dimensional variable.
    static AffineConstraints none(Index n) {
        AffineConstraints c;
        c.A_.resize(0, n);
        c.b_.resize(0);
        return c;
    }

    AffineConstraints(MatrixXd A, VectorXd b) : A_(std::move(A)), b_(std::move(b)) {
        if (A_.rows() != b_.size())
            throw DimensionError("AffineConstraints: A has " + std::to_string(A_.rows()) +
                                 " rows but b has " + std::to_string(b_.size()) + " entries");
        if (A_.rows() == 0) return;
        Eigen::ColPivHouseholderQR<MatrixXd> qr(A_.transpose());
        qr.setThreshold(1e-10);
        if (qr.rank() < A_.rows())
            throw ConfigError("AffineConstraints: A is rank deficient (rank " +
                              std::to_string(qr.rank()) + " of " + std::to_string(A_.rows()) +
                              " rows)");
    }

    Index rows() const { return A_.rows(); }
    Index cols() const { return A_.cols(); }
    const MatrixXd& matrix() const { return A_; }
    const VectorXd& rhs() const { return b_; }

private:
    AffineConstraints() = default;
    MatrixXd A_;
    VectorXd b_;
};

/// Result of the dual update: the multiplier, the shifted residual
/// m + A^T lambda, and the residual's dual local norm at x.
struct DualSolveResult {
    VectorXd lambda;
    VectorXd residual;
    double residual_dual_norm = 0.0;
};

namespace detail {

// Cholesky with a condition estimate from the factor diagonal; one jitter
// retry before giving up.
inline Eigen::LLT<MatrixXd> robust_llt(MatrixXd s) {
    const Index m = s.rows();
    auto cond_ok = [&](const Eigen::LLT<MatrixXd>& llt) {
        const VectorXd diag = llt.matrixLLT().diagonal();
        const double lo = diag.minCoeff();
        const double hi = diag.maxCoeff();
        if (lo <= 0.0) return false;
        const double ratio = hi / lo;
        return ratio * ratio <= kConditionLimit;
    };
    Eigen::LLT<MatrixXd> llt(s);
    if (llt.info() == Eigen::Success && cond_ok(llt)) return llt;
    const double jitter = 1e-12 * s.trace() / static_cast<double>(m);
    s.diagonal().array() += jitter;
    llt.compute(s);
    if (llt.info() == Eigen::Success && cond_ok(llt)) return llt;
    throw IllPosedConstraintsError(
        "A H A^T is numerically singular (condition estimate beyond 1e14)");
}

} // namespace detail

/// Computes lambda = -(A H A^T)^{-1} A H m with H the inverse barrier
/// Hessian at x, plus the residual m + A^T lambda and its dual local norm.
inline DualSolveResult solve_dual(const AffineConstraints& constraints, const Cone& cone,
                                  const InteriorPoint& x, const VectorXd& m) {
    if (m.size() != cone.dim())
        throw DimensionError("solve_dual: gradient estimate has dimension " +
                             std::to_string(m.size()) + ", expected " +
                             std::to_string(cone.dim()));
    const MatrixXd& a = constraints.matrix();
    DualSolveResult out;
    if (a.rows() == 0) {
        out.lambda.resize(0);
        out.residual = m;
        out.residual_dual_norm = dual_local_norm(cone, x, m);
        return out;
    }
    // W = H A^T, assembled one constraint row at a time.
    const MatrixXd w = cone.inverse_hessian_apply_columns(x.vec(), a.transpose());
    MatrixXd s = a * w;
    s = 0.5 * (s + s.transpose()).eval();
    const VectorXd hm = inverse_hessian_apply(cone, x, m);
    const auto llt = detail::robust_llt(s);
    out.lambda = -llt.solve(a * hm);
    out.residual = m + a.transpose() * out.lambda;
    out.residual_dual_norm = dual_local_norm(cone, x, out.residual);
    return out;
}

/// Unit-local-norm feasible direction d = -H r / ||r||_x^* with r the dual
/// residual. Returns nullopt when the residual norm is at or below the
/// stationarity floor ("estimated stationary": convergence of the inner
/// measure, not a failure).
inline std::optional<VectorXd> search_direction(const Cone& cone, const InteriorPoint& x,
                                                const DualSolveResult& dual) {
    if (dual.residual_dual_norm <= kStationarityFloor) return std::nullopt;
    VectorXd d = inverse_hessian_apply(cone, x, dual.residual);
    d *= -1.0 / dual.residual_dual_norm;
    return d;
}

} // namespace sipm
