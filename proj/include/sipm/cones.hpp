// Copyright (c) sipm contributors
// Licensed under Apache-2.0

#pragma once

#include <cmath>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "sipm/errors.hpp"

namespace sipm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Scaled symmetric vectorization. Off-diagonal entries carry a factor of
/// sqrt(2) so that the flat Euclidean inner product of two svecs equals the
/// trace inner product of the matrices they represent.
inline Index svec_size(Index d) { return d * (d + 1) / 2; }

inline VectorXd svec(const MatrixXd& x) {
    const Index d = x.rows();
    if (x.cols() != d) throw DimensionError("svec: matrix is not square");
    static const double rt2 = std::sqrt(2.0);
    VectorXd s(svec_size(d));
    Index idx = 0;
    for (Index j = 0; j < d; ++j) {
        s[idx++] = x(j, j);
        for (Index i = j + 1; i < d; ++i) s[idx++] = rt2 * 0.5 * (x(i, j) + x(j, i));
    }
    return s;
}

inline MatrixXd smat(const VectorXd& s, Index d) {
    if (s.size() != svec_size(d)) throw DimensionError("smat: vector length does not match d");
    static const double inv_rt2 = 1.0 / std::sqrt(2.0);
    MatrixXd x(d, d);
    Index idx = 0;
    for (Index j = 0; j < d; ++j) {
        x(j, j) = s[idx++];
        for (Index i = j + 1; i < d; ++i) {
            x(i, j) = inv_rt2 * s[idx];
            x(j, i) = x(i, j);
            ++idx;
        }
    }
    return x;
}

enum class ConeKind { Orthant, SecondOrder, Psd, Free };

/// One block of a (product) cone. `size` is the defining parameter:
/// Orthant/Free dimension n, SecondOrder vector part dimension d (ambient
/// d+1, layout [u; t] with t last), Psd matrix order d (ambient d(d+1)/2,
/// stored as svec).
struct ConeBlock {
    ConeKind kind;
    Index size;

    Index dim() const {
        switch (kind) {
            case ConeKind::Orthant:
            case ConeKind::Free: return size;
            case ConeKind::SecondOrder: return size + 1;
            case ConeKind::Psd: return svec_size(size);
        }
        return 0;
    }

    /// Barrier complexity contribution: n for the orthant, 2 for a
    /// second-order block, d for a PSD block, 0 for a free block.
    double complexity() const {
        switch (kind) {
            case ConeKind::Orthant: return static_cast<double>(size);
            case ConeKind::SecondOrder: return 2.0;
            case ConeKind::Psd: return static_cast<double>(size);
            case ConeKind::Free: return 0.0;
        }
        return 0.0;
    }

    std::string describe() const {
        switch (kind) {
            case ConeKind::Orthant: return "orthant(" + std::to_string(size) + ")";
            case ConeKind::SecondOrder: return "second_order(" + std::to_string(size) + ")";
            case ConeKind::Psd: return "psd(" + std::to_string(size) + ")";
            case ConeKind::Free: return "free(" + std::to_string(size) + ")";
        }
        return "?";
    }
};

namespace detail {

inline bool orthant_interior(const Eigen::Ref<const VectorXd>& x) {
    return (x.array() > 0.0).all();
}

inline bool soc_interior(const Eigen::Ref<const VectorXd>& x) {
    const Index d = x.size() - 1;
    const double t = x[d];
    return t > 0.0 && t * t - x.head(d).squaredNorm() > 0.0;
}

inline bool psd_interior(const Eigen::Ref<const VectorXd>& x, Index d) {
    const MatrixXd m = smat(x, d);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) return false;
    return es.eigenvalues().minCoeff() > 0.0;
}

} // namespace detail

/// A convex cone equipped with its logarithmically homogeneous
/// self-concordant barrier. Product cones are stored as a flat block list;
/// all points live in a single real vector with blocks laid out in order.
class Cone {
public:
    Cone() = default;

    static Cone orthant(Index n) { return Cone({{ConeKind::Orthant, n}}); }
    static Cone second_order(Index d) { return Cone({{ConeKind::SecondOrder, d}}); }
    static Cone psd(Index d) { return Cone({{ConeKind::Psd, d}}); }
    static Cone free(Index n) { return Cone({{ConeKind::Free, n}}); }

    static Cone product(std::initializer_list<Cone> parts) {
        std::vector<ConeBlock> blocks;
        for (const auto& p : parts) blocks.insert(blocks.end(), p.blocks_.begin(), p.blocks_.end());
        return Cone(std::move(blocks));
    }

    const std::vector<ConeBlock>& blocks() const { return blocks_; }
    Index dim() const { return dim_; }

    /// The barrier parameter (sum over blocks).
    double complexity_parameter() const { return theta_; }

    bool contains_interior(const VectorXd& x) const {
        check_dim(x, "contains_interior");
        Index off = 0;
        for (const auto& b : blocks_) {
            const auto seg = x.segment(off, b.dim());
            switch (b.kind) {
                case ConeKind::Orthant:
                    if (!detail::orthant_interior(seg)) return false;
                    break;
                case ConeKind::SecondOrder:
                    if (!detail::soc_interior(seg)) return false;
                    break;
                case ConeKind::Psd:
                    if (!detail::psd_interior(seg, b.size)) return false;
                    break;
                case ConeKind::Free: break;
            }
            off += b.dim();
        }
        return true;
    }

    /// Index of the first block whose strict interior test fails, or -1.
    int first_violated_block(const VectorXd& x) const {
        check_dim(x, "first_violated_block");
        Index off = 0;
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            const auto& b = blocks_[i];
            const auto seg = x.segment(off, b.dim());
            bool ok = true;
            switch (b.kind) {
                case ConeKind::Orthant: ok = detail::orthant_interior(seg); break;
                case ConeKind::SecondOrder: ok = detail::soc_interior(seg); break;
                case ConeKind::Psd: ok = detail::psd_interior(seg, b.size); break;
                case ConeKind::Free: break;
            }
            if (!ok) return static_cast<int>(i);
            off += b.dim();
        }
        return -1;
    }

    double barrier_value(const VectorXd& x) const {
        check_dim(x, "barrier_value");
        double val = 0.0;
        Index off = 0;
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            const auto& b = blocks_[i];
            const auto seg = x.segment(off, b.dim());
            switch (b.kind) {
                case ConeKind::Orthant: {
                    require_block(detail::orthant_interior(seg), i);
                    val -= seg.array().log().sum();
                    break;
                }
                case ConeKind::SecondOrder: {
                    require_block(detail::soc_interior(seg), i);
                    const Index d = b.size;
                    val -= std::log(seg[d] * seg[d] - seg.head(d).squaredNorm());
                    break;
                }
                case ConeKind::Psd: {
                    const MatrixXd m = smat(seg, b.size);
                    Eigen::LLT<MatrixXd> llt(m);
                    require_block(llt.info() == Eigen::Success, i);
                    // log det X = 2 sum log L_ii
                    val -= 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
                    break;
                }
                case ConeKind::Free: break;
            }
            off += b.dim();
        }
        return val;
    }

    VectorXd barrier_gradient(const VectorXd& x) const {
        check_dim(x, "barrier_gradient");
        VectorXd g = VectorXd::Zero(dim_);
        Index off = 0;
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            const auto& b = blocks_[i];
            const auto seg = x.segment(off, b.dim());
            switch (b.kind) {
                case ConeKind::Orthant:
                    require_block(detail::orthant_interior(seg), i);
                    g.segment(off, b.dim()) = -seg.cwiseInverse();
                    break;
                case ConeKind::SecondOrder: {
                    require_block(detail::soc_interior(seg), i);
                    const Index d = b.size;
                    const double r = seg[d] * seg[d] - seg.head(d).squaredNorm();
                    g.segment(off, d) = (2.0 / r) * seg.head(d);
                    g[off + d] = -(2.0 / r) * seg[d];
                    break;
                }
                case ConeKind::Psd: {
                    const MatrixXd m = smat(seg, b.size);
                    Eigen::LLT<MatrixXd> llt(m);
                    require_block(llt.info() == Eigen::Success, i);
                    const MatrixXd inv = llt.solve(MatrixXd::Identity(b.size, b.size));
                    g.segment(off, b.dim()) = svec(-inv);
                    break;
                }
                case ConeKind::Free: break;
            }
            off += b.dim();
        }
        return g;
    }

    /// Applies the barrier Hessian at x to v.
    VectorXd hessian_apply(const VectorXd& x, const VectorXd& v) const {
        check_dim(x, "hessian_apply");
        check_dim(v, "hessian_apply (direction)");
        VectorXd out = VectorXd::Zero(dim_);
        Index off = 0;
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            const auto& b = blocks_[i];
            const auto xs = x.segment(off, b.dim());
            const auto vs = v.segment(off, b.dim());
            switch (b.kind) {
                case ConeKind::Orthant:
                    require_block(detail::orthant_interior(xs), i);
                    out.segment(off, b.dim()) = vs.cwiseQuotient(xs.cwiseAbs2());
                    break;
                case ConeKind::SecondOrder: {
                    require_block(detail::soc_interior(xs), i);
                    // H = (2/r) J + (4/r^2) z z^T with J = diag(I, -1), z = (u; -t).
                    const Index d = b.size;
                    const double t = xs[d];
                    const double r = t * t - xs.head(d).squaredNorm();
                    const double s = xs.head(d).dot(vs.head(d)) - t * vs[d];
                    out.segment(off, d) = (4.0 * s / (r * r)) * xs.head(d) + (2.0 / r) * vs.head(d);
                    out[off + d] = (4.0 * s / (r * r)) * (-t) - (2.0 / r) * vs[d];
                    break;
                }
                case ConeKind::Psd: {
                    const MatrixXd m = smat(xs, b.size);
                    Eigen::LLT<MatrixXd> llt(m);
                    require_block(llt.info() == Eigen::Success, i);
                    const MatrixXd vm = smat(vs, b.size);
                    // X^{-1} V X^{-1}
                    const MatrixXd tmp = llt.solve(vm);
                    const MatrixXd res = llt.solve(tmp.transpose()).transpose();
                    out.segment(off, b.dim()) = svec(0.5 * (res + res.transpose()));
                    break;
                }
                case ConeKind::Free:
                    out.segment(off, b.dim()) = vs;
                    break;
            }
            off += b.dim();
        }
        return out;
    }

    /// Applies the inverse barrier Hessian at x to v. Closed forms
    /// throughout: no factorization of the full Hessian is ever built.
    VectorXd inverse_hessian_apply(const VectorXd& x, const VectorXd& v) const {
        check_dim(x, "inverse_hessian_apply");
        check_dim(v, "inverse_hessian_apply (direction)");
        VectorXd out = VectorXd::Zero(dim_);
        Index off = 0;
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            const auto& b = blocks_[i];
            const auto xs = x.segment(off, b.dim());
            const auto vs = v.segment(off, b.dim());
            switch (b.kind) {
                case ConeKind::Orthant:
                    require_block(detail::orthant_interior(xs), i);
                    out.segment(off, b.dim()) = vs.cwiseProduct(xs.cwiseAbs2());
                    break;
                case ConeKind::SecondOrder: {
                    require_block(detail::soc_interior(xs), i);
                    // H^{-1} = (r/2) J + x x^T by Sherman-Morrison on the
                    // rank-one structure of H.
                    const Index d = b.size;
                    const double t = xs[d];
                    const double r = t * t - xs.head(d).squaredNorm();
                    const double xv = xs.dot(vs);
                    out.segment(off, d) = (r / 2.0) * vs.head(d) + xv * xs.head(d);
                    out[off + d] = -(r / 2.0) * vs[d] + xv * t;
                    break;
                }
                case ConeKind::Psd: {
                    const MatrixXd m = smat(xs, b.size);
                    require_block(Eigen::LLT<MatrixXd>(m).info() == Eigen::Success, i);
                    const MatrixXd vm = smat(vs, b.size);
                    const MatrixXd res = m * vm * m;
                    out.segment(off, b.dim()) = svec(0.5 * (res + res.transpose()));
                    break;
                }
                case ConeKind::Free:
                    out.segment(off, b.dim()) = vs;
                    break;
            }
            off += b.dim();
        }
        return out;
    }

    /// Column-wise inverse_hessian_apply. Interior guards run once per
    /// block, not once per column.
    MatrixXd inverse_hessian_apply_columns(const VectorXd& x, const MatrixXd& vcols) const {
        check_dim(x, "inverse_hessian_apply_columns");
        if (vcols.rows() != dim_)
            throw DimensionError("inverse_hessian_apply_columns: expected " +
                                 std::to_string(dim_) + " rows, got " +
                                 std::to_string(vcols.rows()));
        MatrixXd out(dim_, vcols.cols());
        Index off = 0;
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            const auto& b = blocks_[i];
            const auto xs = x.segment(off, b.dim());
            const auto vs = vcols.middleRows(off, b.dim());
            switch (b.kind) {
                case ConeKind::Orthant:
                    require_block(detail::orthant_interior(xs), i);
                    out.middleRows(off, b.dim()) = xs.cwiseAbs2().asDiagonal() * vs;
                    break;
                case ConeKind::SecondOrder: {
                    require_block(detail::soc_interior(xs), i);
                    const Index d = b.size;
                    const double t = xs[d];
                    const double r = t * t - xs.head(d).squaredNorm();
                    for (Index c = 0; c < vs.cols(); ++c) {
                        const double xv = xs.dot(vs.col(c));
                        out.col(c).segment(off, d) =
                            (r / 2.0) * vs.col(c).head(d) + xv * xs.head(d);
                        out(off + d, c) = -(r / 2.0) * vs(d, c) + xv * t;
                    }
                    break;
                }
                case ConeKind::Psd: {
                    const MatrixXd m = smat(xs, b.size);
                    require_block(Eigen::LLT<MatrixXd>(m).info() == Eigen::Success, i);
                    for (Index c = 0; c < vs.cols(); ++c) {
                        const MatrixXd vm = smat(vs.col(c), b.size);
                        const MatrixXd res = m * vm * m;
                        out.col(c).segment(off, b.dim()) = svec(0.5 * (res + res.transpose()));
                    }
                    break;
                }
                case ConeKind::Free:
                    out.middleRows(off, b.dim()) = vs;
                    break;
            }
            off += b.dim();
        }
        return out;
    }

    /// ||v||_x = sqrt(v^T H v).
    double local_norm(const VectorXd& x, const VectorXd& v) const {
        return guarded_sqrt(v.dot(hessian_apply(x, v)), v, "local_norm");
    }

    /// ||v||_x^* = sqrt(v^T H^{-1} v).
    double dual_local_norm(const VectorXd& x, const VectorXd& v) const {
        return guarded_sqrt(v.dot(inverse_hessian_apply(x, v)), v, "dual_local_norm");
    }

private:
    explicit Cone(std::vector<ConeBlock> blocks) : blocks_(std::move(blocks)) {
        for (const auto& b : blocks_) {
            dim_ += b.dim();
            theta_ += b.complexity();
        }
    }

    void check_dim(const VectorXd& x, const char* op) const {
        if (x.size() != dim_)
            throw DimensionError(std::string(op) + ": expected dimension " + std::to_string(dim_) +
                                 ", got " + std::to_string(x.size()));
    }

    void require_block(bool ok, std::size_t block_index) const {
        if (!ok)
            throw ConeDomainError("point is on the boundary or outside cone block " +
                                  std::to_string(block_index) + " (" +
                                  blocks_[block_index].describe() + ")");
    }

    double guarded_sqrt(double q, const VectorXd& v, const char* op) const {
        if (q < 0.0) {
            const double tol = 1e-12 * (1.0 + v.squaredNorm());
            if (q < -tol)
                throw InternalConsistencyError(std::string(op) +
                                               ": quadratic form is negative (" +
                                               std::to_string(q) + ")");
            q = 0.0;
        }
        return std::sqrt(q);
    }

    std::vector<ConeBlock> blocks_;
    Index dim_ = 0;
    double theta_ = 0.0;
};

/// A point certified to lie in the strict interior of its cone.
class InteriorPoint {
public:
    InteriorPoint(const Cone& cone, VectorXd x) : cone_(&cone), x_(std::move(x)) {
        const int bad = cone.first_violated_block(x_);
        if (bad >= 0)
            throw ConeDomainError("interior point rejected: cone block " + std::to_string(bad) +
                                  " (" + cone.blocks()[static_cast<std::size_t>(bad)].describe() +
                                  ") is not strictly satisfied");
    }

    const VectorXd& vec() const { return x_; }
    const Cone& cone() const { return *cone_; }

private:
    const Cone* cone_;
    VectorXd x_;
};

inline double barrier_value(const Cone& c, const InteriorPoint& x) {
    return c.barrier_value(x.vec());
}
inline VectorXd barrier_gradient(const Cone& c, const InteriorPoint& x) {
    return c.barrier_gradient(x.vec());
}
inline VectorXd hessian_apply(const Cone& c, const InteriorPoint& x, const VectorXd& v) {
    return c.hessian_apply(x.vec(), v);
}
inline VectorXd inverse_hessian_apply(const Cone& c, const InteriorPoint& x, const VectorXd& v) {
    return c.inverse_hessian_apply(x.vec(), v);
}
inline double local_norm(const Cone& c, const InteriorPoint& x, const VectorXd& v) {
    return c.local_norm(x.vec(), v);
}
inline double dual_local_norm(const Cone& c, const InteriorPoint& x, const VectorXd& v) {
    return c.dual_local_norm(x.vec(), v);
}
inline double complexity_parameter(const Cone& c) { return c.complexity_parameter(); }
inline bool contains_interior(const Cone& c, const VectorXd& x) { return c.contains_interior(x); }

} // namespace sipm
