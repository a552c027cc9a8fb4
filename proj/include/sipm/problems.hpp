// Copyright (c) sipm contributors
// Licensed under Apache-2.0

#pragma once

#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "sipm/cones.hpp"
#include "sipm/data.hpp"
#include "sipm/errors.hpp"
#include "sipm/problem.hpp"

namespace sipm {

/// Bounded robust loss t^2/(1+t^2) and its derivative.
inline double robust_loss(double t) { return t * t / (1.0 + t * t); }
inline double robust_loss_derivative(double t) {
    const double u = 1.0 + t * t;
    return 2.0 * t / (u * u);
}

/// Keeps the first maximal independent subset of rows (Gram-Schmidt with a
/// relative tolerance); later rows in the span of earlier ones are dropped.
inline std::pair<MatrixXd, VectorXd> drop_dependent_rows(const MatrixXd& a, const VectorXd& b,
                                                         double tol = 1e-10) {
    std::vector<Index> keep;
    MatrixXd basis(a.cols(), a.rows()); // orthonormal columns
    Index nb = 0;
    for (Index r = 0; r < a.rows(); ++r) {
        VectorXd v = a.row(r).transpose();
        const double scale = v.norm();
        if (nb > 0) v -= basis.leftCols(nb) * (basis.leftCols(nb).transpose() * v);
        // second pass for numerical orthogonality
        if (nb > 0) v -= basis.leftCols(nb) * (basis.leftCols(nb).transpose() * v);
        if (v.norm() > tol * std::max(scale, 1.0)) {
            basis.col(nb++) = v / v.norm();
            keep.push_back(r);
        }
    }
    MatrixXd ak(static_cast<Index>(keep.size()), a.cols());
    VectorXd bk(static_cast<Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
        ak.row(static_cast<Index>(i)) = a.row(keep[i]);
        bk[static_cast<Index>(i)] = b[keep[i]];
    }
    return {std::move(ak), std::move(bk)};
}

/// Chance-constrained robust regression
///   min (1/p) sum phi(w'a_i - b_i) + lambda1*theta + lambda2*v
///   s.t. (w, v) in Q^{d+1},  (Sigma^{1/2} w, sqrt(eta) theta) in Q^{d+1}.
/// The second cone constraint is lifted: variables are x = [w; v; s; r]
/// with s = Sigma^{1/2} w enforced by the equality rows and theta = r /
/// sqrt(eta), so the cone is a product of two second-order blocks.
inline ConicProblem robust_regression(const RobustRegressionData& data) {
    const Index d = data.features.cols();
    const Index p = data.features.rows();
    if (data.labels.size() != p)
        throw DataError("robust_regression: feature/label row mismatch");
    if (data.sigma_sqrt.rows() != d || data.sigma_sqrt.cols() != d)
        throw DataError("robust_regression: Sigma^{1/2} must be d x d");
    if ((data.sigma_sqrt - data.sigma_sqrt.transpose()).cwiseAbs().maxCoeff() >
        1e-10 * (1.0 + data.sigma_sqrt.cwiseAbs().maxCoeff()))
        throw DataError("robust_regression: Sigma^{1/2} must be symmetric");
    {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(data.sigma_sqrt, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, es.eigenvalues().maxCoeff()))
            throw DataError("robust_regression: Sigma^{1/2} is not positive semidefinite");
    }
    if (!(data.eta_prob > 0.0)) throw DataError("robust_regression: eta must be positive");

    const auto shared = std::make_shared<const RobustRegressionData>(data);
    const Index n = 2 * d + 2;
    const double root_eta = std::sqrt(shared->eta_prob);

    ConicProblem prob;
    prob.cone = Cone::product({Cone::second_order(d), Cone::second_order(d)});
    MatrixXd a = MatrixXd::Zero(d, n);
    a.block(0, 0, d, d) = -shared->sigma_sqrt;
    a.block(0, d + 1, d, d) = MatrixXd::Identity(d, d);
    prob.constraints = AffineConstraints(std::move(a), VectorXd::Zero(d));
    prob.x0 = VectorXd::Zero(n);
    prob.x0[d] = 1.0;        // v
    prob.x0[n - 1] = root_eta; // r = sqrt(eta) * theta with theta = 1
    prob.n_components = p;

    // Deterministic linear terms enter every component so single draws stay
    // unbiased for the full gradient.
    auto add_linear_terms = [d, n, root_eta, shared](VectorXd& g) {
        g[d] += shared->lambda2;
        g[n - 1] += shared->lambda1 / root_eta;
    };
    auto loss_gradient_into = [d, shared](Index i, const VectorXd& x, VectorXd& g,
                                          double weight) {
        const double r = shared->features.row(i).dot(x.head(d)) - shared->labels[i];
        g.head(d) += weight * robust_loss_derivative(r) * shared->features.row(i).transpose();
    };

    prob.component_gradient = [=](Index i, const VectorXd& x) {
        VectorXd g = VectorXd::Zero(n);
        loss_gradient_into(i, x, g, 1.0);
        add_linear_terms(g);
        return g;
    };
    prob.batch_mean_gradient = [=](const std::vector<Index>& batch, const VectorXd& x) {
        VectorXd g = VectorXd::Zero(n);
        const double w = 1.0 / static_cast<double>(batch.size());
        for (Index i : batch) loss_gradient_into(i, x, g, w);
        add_linear_terms(g);
        return g;
    };
    prob.full_gradient = [=](const VectorXd& x) {
        VectorXd g = VectorXd::Zero(n);
        const double w = 1.0 / static_cast<double>(p);
        for (Index i = 0; i < p; ++i) loss_gradient_into(i, x, g, w);
        add_linear_terms(g);
        return g;
    };
    prob.objective = [=](const VectorXd& x) {
        double loss = 0.0;
        for (Index i = 0; i < p; ++i)
            loss += robust_loss(shared->features.row(i).dot(x.head(d)) - shared->labels[i]);
        loss /= static_cast<double>(p);
        return loss + shared->lambda1 * (x[n - 1] / root_eta) + shared->lambda2 * x[d];
    };
    return prob;
}

namespace detail {

// svec index of the diagonal entry (j, j) under column-major lower-triangle
// ordering.
inline Index svec_diag_index(Index j, Index d) { return j * d - j * (j - 1) / 2; }

// svec index of the (i, j) entry, i >= j.
inline Index svec_index(Index i, Index j, Index d) {
    return svec_diag_index(j, d) + (i - j);
}

} // namespace detail

/// Multi-task relationship learning
///   min (1/T) sum_i (1/m_i) sum_j phi(w_i'p_ij - q_ij) + lambda tr(W' P(Sigma) W)
///   s.t. Sigma PSD, tr(Sigma) = 1,
/// with the inverse-covariance coupling P(Sigma) = Sigma^{-1}. The variable
/// is x = [vec(W); svec(Sigma)]; W rides in a free block (identity metric,
/// zero barrier) and Sigma in a PSD block.
inline ConicProblem multitask(const MultiTaskData& data) {
    const Index tasks = static_cast<Index>(data.task_features.size());
    if (tasks < 1 || data.task_labels.size() != data.task_features.size())
        throw DataError("multitask: empty or inconsistent task list");
    const Index d = data.task_features.front().cols();
    Index total = 0;
    for (Index t = 0; t < tasks; ++t) {
        if (data.task_features[t].cols() != d)
            throw DataError("multitask: tasks disagree on feature dimension");
        if (data.task_features[t].rows() != data.task_labels[t].size() ||
            data.task_features[t].rows() == 0)
            throw DataError("multitask: task " + std::to_string(t) + " is empty or inconsistent");
        total += data.task_features[t].rows();
    }

    const auto shared = std::make_shared<const MultiTaskData>(data);
    const Index nw = tasks * d;
    const Index ns = svec_size(tasks);
    const Index n = nw + ns;

    ConicProblem prob;
    prob.cone = Cone::product({Cone::free(nw), Cone::psd(tasks)});
    {
        MatrixXd a = MatrixXd::Zero(1, n);
        for (Index j = 0; j < tasks; ++j) a(0, nw + detail::svec_diag_index(j, tasks)) = 1.0;
        prob.constraints = AffineConstraints(std::move(a), VectorXd::Ones(1));
    }
    prob.x0 = VectorXd::Zero(n);
    for (Index j = 0; j < tasks; ++j)
        prob.x0[nw + detail::svec_diag_index(j, tasks)] = 1.0 / static_cast<double>(tasks);
    prob.n_components = total;

    // Component c maps to (task, sample) in task order; per-task weights
    // keep uniform draws unbiased when task sizes differ.
    std::vector<Index> comp_task(total), comp_sample(total);
    {
        Index c = 0;
        for (Index t = 0; t < tasks; ++t)
            for (Index j = 0; j < shared->task_features[t].rows(); ++j) {
                comp_task[c] = t;
                comp_sample[c] = j;
                ++c;
            }
    }

    auto w_of = [nw, tasks, d](const VectorXd& x) {
        return Eigen::Map<const MatrixXd>(x.data(), tasks, d);
    };
    auto sigma_of = [nw, ns, tasks](const VectorXd& x) {
        return smat(x.segment(nw, ns), tasks);
    };
    // Regularizer gradient blocks: dW = 2 lambda Sigma^{-1} W,
    // dSigma = -lambda Sigma^{-1} W W' Sigma^{-1}.
    auto add_regularizer = [=](const VectorXd& x, VectorXd& g) {
        const MatrixXd sigma = sigma_of(x);
        Eigen::LLT<MatrixXd> llt(sigma);
        if (llt.info() != Eigen::Success)
            throw ConeDomainError("multitask oracle: Sigma is not positive definite");
        const MatrixXd w = w_of(x);
        const MatrixXd siw = llt.solve(w); // Sigma^{-1} W
        Eigen::Map<MatrixXd>(g.data(), tasks, d) += 2.0 * shared->lambda * siw;
        const MatrixXd ds = -shared->lambda * (siw * siw.transpose());
        g.segment(nw, ns) += svec(0.5 * (ds + ds.transpose()));
    };
    const double task_weight_scale = static_cast<double>(total) / static_cast<double>(tasks);
    auto loss_gradient_into = [=](Index c, const VectorXd& x, VectorXd& g, double weight) {
        const Index t = comp_task[c];
        const Index j = comp_sample[c];
        const auto w = w_of(x);
        const auto& feat = shared->task_features[t];
        const double r = feat.row(j).dot(w.row(t)) - shared->task_labels[t][j];
        const double coeff = weight * task_weight_scale /
                             static_cast<double>(feat.rows()) * robust_loss_derivative(r);
        Eigen::Map<MatrixXd> gw(g.data(), tasks, d);
        gw.row(t) += coeff * feat.row(j);
    };

    prob.component_gradient = [=](Index c, const VectorXd& x) {
        VectorXd g = VectorXd::Zero(n);
        loss_gradient_into(c, x, g, 1.0);
        add_regularizer(x, g);
        return g;
    };
    prob.batch_mean_gradient = [=](const std::vector<Index>& batch, const VectorXd& x) {
        VectorXd g = VectorXd::Zero(n);
        const double w = 1.0 / static_cast<double>(batch.size());
        for (Index c : batch) loss_gradient_into(c, x, g, w);
        add_regularizer(x, g);
        return g;
    };
    prob.full_gradient = [=](const VectorXd& x) {
        VectorXd g = VectorXd::Zero(n);
        const double w = 1.0 / static_cast<double>(total);
        for (Index c = 0; c < total; ++c) loss_gradient_into(c, x, g, w);
        add_regularizer(x, g);
        return g;
    };
    prob.objective = [=](const VectorXd& x) {
        const auto w = w_of(x);
        double loss = 0.0;
        for (Index t = 0; t < tasks; ++t) {
            const auto& feat = shared->task_features[t];
            double task_loss = 0.0;
            for (Index j = 0; j < feat.rows(); ++j)
                task_loss += robust_loss(feat.row(j).dot(w.row(t)) - shared->task_labels[t][j]);
            loss += task_loss / static_cast<double>(feat.rows());
        }
        loss /= static_cast<double>(tasks);
        const MatrixXd sigma = sigma_of(x);
        Eigen::LLT<MatrixXd> llt(sigma);
        if (llt.info() != Eigen::Success)
            throw ConeDomainError("multitask objective: Sigma is not positive definite");
        const MatrixXd siw = llt.solve(MatrixXd(w));
        return loss + shared->lambda * (w.array() * siw.array()).sum();
    };
    return prob;
}

/// Stream-clustering semidefinite relaxation
///   min (1/p) sum <A_i, W> + tau sum_i ln(gamma + lambda_i(W))
///   s.t. W PSD, W e = e, <I, W> = k,
/// over svec(W). Dependent constraint rows (if any) are deflated before the
/// full-row-rank check.
inline ConicProblem stream_cluster(const StreamClusterData& data) {
    if (data.observations.empty()) throw DataError("stream_cluster: no observations");
    const Index d = data.observations.front().rows();
    const Index p = static_cast<Index>(data.observations.size());
    if (!(data.n_clusters >= 2 && data.n_clusters < d))
        throw DataError("stream_cluster: need 2 <= k < d");
    for (const auto& m : data.observations) {
        if (m.rows() != d || m.cols() != d)
            throw DataError("stream_cluster: observation matrices must all be d x d");
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + m.cwiseAbs().maxCoeff()))
            throw DataError("stream_cluster: observation matrices must be symmetric");
    }

    const auto shared = std::make_shared<const StreamClusterData>(data);
    const Index n = svec_size(d);
    const double inv_rt2 = 1.0 / std::sqrt(2.0);

    ConicProblem prob;
    prob.cone = Cone::psd(d);
    {
        // d row-sum rows plus the trace row.
        MatrixXd a = MatrixXd::Zero(d + 1, n);
        VectorXd b(d + 1);
        for (Index r = 0; r < d; ++r) {
            a(r, detail::svec_diag_index(r, d)) = 1.0;
            for (Index c = 0; c < d; ++c) {
                if (c == r) continue;
                const Index i = std::max(r, c);
                const Index j = std::min(r, c);
                a(r, detail::svec_index(i, j, d)) = inv_rt2;
            }
            b[r] = 1.0;
        }
        for (Index j = 0; j < d; ++j) a(d, detail::svec_diag_index(j, d)) = 1.0;
        b[d] = static_cast<double>(shared->n_clusters);
        auto [ak, bk] = drop_dependent_rows(a, b);
        prob.constraints = AffineConstraints(std::move(ak), std::move(bk));
    }
    {
        const double k_over_d = static_cast<double>(shared->n_clusters) / static_cast<double>(d);
        const double off = (static_cast<double>(d) - static_cast<double>(shared->n_clusters)) /
                           (static_cast<double>(d) * static_cast<double>(d - 1));
        MatrixXd w0 = MatrixXd::Constant(d, d, off);
        w0.diagonal().setConstant(k_over_d);
        prob.x0 = svec(w0);
    }
    prob.n_components = p;

    // Precomputed svec forms of the stochastic linear terms and their mean.
    auto svec_obs = std::make_shared<std::vector<VectorXd>>();
    svec_obs->reserve(p);
    for (const auto& m : shared->observations) svec_obs->push_back(svec(m));
    auto mean_obs = std::make_shared<const VectorXd>([&] {
        VectorXd s = VectorXd::Zero(n);
        for (const auto& v : *svec_obs) s += v;
        return VectorXd(s / static_cast<double>(p));
    }());

    auto regularizer_gradient = [=](const VectorXd& x) {
        const MatrixXd w = smat(x, d);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(w);
        if (es.info() != Eigen::Success)
            throw ConeDomainError("stream_cluster oracle: eigendecomposition failed");
        VectorXd coeffs(d);
        for (Index i = 0; i < d; ++i) {
            const double gl = shared->gamma_reg + es.eigenvalues()[i];
            if (gl <= 0.0)
                throw ConeDomainError(
                    "stream_cluster oracle: log regularizer undefined (gamma + eigenvalue <= 0)");
            coeffs[i] = shared->tau / gl;
        }
        const MatrixXd g = es.eigenvectors() * coeffs.asDiagonal() * es.eigenvectors().transpose();
        return svec(0.5 * (g + g.transpose()));
    };

    prob.component_gradient = [=](Index i, const VectorXd& x) {
        return VectorXd((*svec_obs)[i] + regularizer_gradient(x));
    };
    prob.batch_mean_gradient = [=](const std::vector<Index>& batch, const VectorXd& x) {
        VectorXd g = VectorXd::Zero(n);
        for (Index i : batch) g += (*svec_obs)[i];
        g /= static_cast<double>(batch.size());
        return VectorXd(g + regularizer_gradient(x));
    };
    prob.full_gradient = [=](const VectorXd& x) {
        return VectorXd(*mean_obs + regularizer_gradient(x));
    };
    prob.objective = [=](const VectorXd& x) {
        const double linear = mean_obs->dot(x);
        const MatrixXd w = smat(x, d);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(w, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success)
            throw ConeDomainError("stream_cluster objective: eigendecomposition failed");
        double reg = 0.0;
        for (Index i = 0; i < d; ++i) {
            const double gl = shared->gamma_reg + es.eigenvalues()[i];
            if (gl <= 0.0)
                throw ConeDomainError(
                    "stream_cluster objective: log regularizer undefined (gamma + eigenvalue <= 0)");
            reg += std::log(gl);
        }
        return linear + shared->tau * reg;
    };
    return prob;
}

} // namespace sipm
