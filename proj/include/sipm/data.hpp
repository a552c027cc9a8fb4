// Copyright (c) sipm contributors
// Licensed under Apache-2.0

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "sipm/errors.hpp"

namespace sipm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Data for the chance-constrained robust regression problem: feature rows
/// a_i, labels b_i, the covariance square root used by the second cone
/// constraint, and the tuning parameters.
struct RobustRegressionData {
    MatrixXd features;
    VectorXd labels;
    MatrixXd sigma_sqrt;
    double lambda1 = 0.1;
    double lambda2 = 0.1;
    double eta_prob = 0.25;
    VectorXd planted_model; // synthetic runs only
};

struct MultiTaskData {
    std::vector<MatrixXd> task_features;
    std::vector<VectorXd> task_labels;
    double lambda = 0.05;
};

/// Stream-clustering data: one symmetric pairwise-distance matrix per
/// observation in the stream.
struct StreamClusterData {
    std::vector<MatrixXd> observations;
    Index n_clusters = 2;
    double tau = 0.5;
    double gamma_reg = 0.5;
    std::vector<int> planted_labels; // synthetic runs only
};

namespace detail {

inline double parse_double(std::string_view tok, const std::string& where) {
    double out = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    while (first < last && (*first == ' ' || *first == '\t')) ++first;
    while (last > first && (*(last - 1) == ' ' || *(last - 1) == '\t' || *(last - 1) == '\r'))
        --last;
    const auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc() || res.ptr != last)
        throw DataError("failed to parse numeric field '" + std::string(tok) + "' in " + where);
    return out;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

inline std::vector<std::vector<double>> read_numeric_csv(const std::string& path,
                                                         Index skip_leading_cols = 0,
                                                         std::vector<int>* leading_ids = nullptr) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("dataset file is empty: " + path);
    // header row is required and skipped
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto toks = split_csv_line(line);
        if (static_cast<Index>(toks.size()) <= skip_leading_cols)
            throw DataError("too few columns at line " + std::to_string(lineno) + " of " + path);
        const std::string where = path + ":" + std::to_string(lineno);
        if (leading_ids) {
            leading_ids->push_back(static_cast<int>(parse_double(toks[0], where)));
        }
        std::vector<double> row;
        row.reserve(toks.size() - skip_leading_cols);
        for (std::size_t j = static_cast<std::size_t>(skip_leading_cols); j < toks.size(); ++j)
            row.push_back(parse_double(toks[j], where));
        if (!rows.empty() && rows.front().size() != row.size())
            throw DataError("ragged row at line " + std::to_string(lineno) + " of " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("dataset has no data rows: " + path);
    return rows;
}

/// Symmetric PSD square root of the empirical feature covariance, with
/// eigenvalues clamped at a small positive floor.
inline MatrixXd covariance_sqrt(const MatrixXd& features) {
    const Index p = features.rows();
    const VectorXd mean = features.colwise().mean();
    const MatrixXd centered = features.rowwise() - mean.transpose();
    MatrixXd cov = centered.transpose() * centered / static_cast<double>(p);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw DataError("covariance eigendecomposition failed");
    const double top = es.eigenvalues().maxCoeff();
    const double floor = std::max(top, 1.0) * 1e-12;
    VectorXd sqrt_eigs = es.eigenvalues().cwiseMax(floor).cwiseSqrt();
    return es.eigenvectors() * sqrt_eigs.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace detail

struct RobustSynthOptions {
    double noise = 0.1;
    bool missing_values = false;
    double lambda1 = 0.1;
    double lambda2 = 0.1;
    double eta_prob = 0.25;
};

/// Gaussian features with a planted linear model and heavy-tailed (Student-t)
/// label noise. With missing_values set, 25% of the features are deleted in
/// 50% of the samples and refilled by least squares on the observed columns.
inline RobustRegressionData synth_robust_regression(Index d, Index p, std::uint64_t seed,
                                                    const RobustSynthOptions& opt = {}) {
    if (d < 1 || p < 2) throw ConfigError("synth_robust_regression: need d >= 1, p >= 2");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::student_t_distribution<double> heavy(3.0);

    RobustRegressionData data;
    data.lambda1 = opt.lambda1;
    data.lambda2 = opt.lambda2;
    data.eta_prob = opt.eta_prob;

    VectorXd scales(d);
    for (Index j = 0; j < d; ++j) scales[j] = 0.5 + std::abs(gauss(rng));
    data.planted_model = VectorXd::NullaryExpr(d, [&](Index) { return gauss(rng); });
    data.planted_model /= std::sqrt(static_cast<double>(d));

    data.features.resize(p, d);
    for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < d; ++j) data.features(i, j) = scales[j] * gauss(rng);
    data.labels.resize(p);
    for (Index i = 0; i < p; ++i)
        data.labels[i] = data.features.row(i).dot(data.planted_model) + opt.noise * heavy(rng);

    if (opt.missing_values) {
        // Delete 25% of the features in 50% of the samples.
        const Index n_miss_rows = p / 2;
        const Index n_miss_cols = std::max<Index>(1, d / 4);
        std::vector<Index> rows(p);
        for (Index i = 0; i < p; ++i) rows[i] = i;
        std::shuffle(rows.begin(), rows.end(), rng);
        std::vector<std::vector<Index>> missing(p);
        std::vector<char> row_has_missing(p, 0);
        for (Index r = 0; r < n_miss_rows; ++r) {
            std::vector<Index> cols(d);
            for (Index j = 0; j < d; ++j) cols[j] = j;
            std::shuffle(cols.begin(), cols.end(), rng);
            cols.resize(n_miss_cols);
            missing[rows[r]] = cols;
            row_has_missing[rows[r]] = 1;
        }
        // Column means over observed entries.
        VectorXd col_mean = VectorXd::Zero(d);
        VectorXd col_count = VectorXd::Zero(d);
        for (Index i = 0; i < p; ++i) {
            std::vector<char> miss(d, 0);
            for (Index j : missing[i]) miss[j] = 1;
            for (Index j = 0; j < d; ++j)
                if (!miss[j]) {
                    col_mean[j] += data.features(i, j);
                    col_count[j] += 1.0;
                }
        }
        for (Index j = 0; j < d; ++j)
            col_mean[j] = col_count[j] > 0 ? col_mean[j] / col_count[j] : 0.0;
        // Complete rows train one least-squares imputer per column.
        std::vector<Index> complete;
        for (Index i = 0; i < p; ++i)
            if (!row_has_missing[i]) complete.push_back(i);
        MatrixXd xc(complete.size(), d);
        for (std::size_t r = 0; r < complete.size(); ++r) xc.row(r) = data.features.row(complete[r]);
        for (Index j = 0; j < d; ++j) {
            bool any = false;
            for (Index i = 0; i < p && !any; ++i)
                for (Index c : missing[i])
                    if (c == j) any = true;
            if (!any) continue;
            MatrixXd design(xc.rows(), d); // other columns plus intercept
            Index col = 0;
            for (Index c = 0; c < d; ++c)
                if (c != j) design.col(col++) = xc.col(c);
            design.col(d - 1).setOnes();
            const VectorXd beta = design.colPivHouseholderQr().solve(xc.col(j));
            for (Index i = 0; i < p; ++i) {
                bool mj = false;
                for (Index c : missing[i])
                    if (c == j) mj = true;
                if (!mj) continue;
                VectorXd feat(d);
                col = 0;
                for (Index c = 0; c < d; ++c)
                    if (c != j) {
                        bool mc = false;
                        for (Index cc : missing[i])
                            if (cc == c) mc = true;
                        feat[col++] = mc ? col_mean[c] : data.features(i, c);
                    }
                feat[d - 1] = 1.0;
                data.features(i, j) = beta.dot(feat);
            }
        }
    }

    data.sigma_sqrt = detail::covariance_sqrt(data.features);
    return data;
}

struct MultiTaskSynthOptions {
    double lambda = 0.05;
    double noise = 0.1;
    double relatedness = 0.3;
};

/// Related planted linear models: each task's model is a shared base plus a
/// task-specific perturbation.
inline MultiTaskData synth_multitask(Index tasks, Index per_task, Index d, std::uint64_t seed,
                                     const MultiTaskSynthOptions& opt = {}) {
    if (tasks < 1 || per_task < 1 || d < 1)
        throw ConfigError("synth_multitask: dimensions must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    MultiTaskData data;
    data.lambda = opt.lambda;
    const double root_d = std::sqrt(static_cast<double>(d));
    VectorXd base = VectorXd::NullaryExpr(d, [&](Index) { return gauss(rng); }) / root_d;
    for (Index t = 0; t < tasks; ++t) {
        VectorXd w = base + opt.relatedness *
                                VectorXd::NullaryExpr(d, [&](Index) { return gauss(rng); }) /
                                root_d;
        MatrixXd x(per_task, d);
        VectorXd y(per_task);
        for (Index i = 0; i < per_task; ++i) {
            for (Index j = 0; j < d; ++j) x(i, j) = gauss(rng);
            y[i] = x.row(i).dot(w) + opt.noise * gauss(rng);
        }
        data.task_features.push_back(std::move(x));
        data.task_labels.push_back(std::move(y));
    }
    return data;
}

struct ClusterSynthOptions {
    double tau = 0.5;
    double gamma_reg = 0.5;
    double separation = 6.0;
    double jitter = 0.3;
    double drift = 0.02;
    Index latent_dim = 2;
};

/// Gaussian cluster mixture streamed over p observations. Cluster centers
/// take a multiplicative (1 + drift*eps) random-walk step per observation,
/// eps standard normal; each observation contributes the pairwise
/// squared-distance matrix of the d points.
inline StreamClusterData synth_stream_cluster(Index d_points, Index k, Index p_obs,
                                              std::uint64_t seed,
                                              const ClusterSynthOptions& opt = {}) {
    if (!(k >= 2 && k < d_points)) throw ConfigError("synth_stream_cluster: need 2 <= k < d");
    if (p_obs < 1) throw ConfigError("synth_stream_cluster: need p >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    StreamClusterData data;
    data.n_clusters = k;
    data.tau = opt.tau;
    data.gamma_reg = opt.gamma_reg;

    const Index q = std::max<Index>(2, opt.latent_dim);
    const double two_pi = 2.0 * std::acos(-1.0);
    MatrixXd centers(k, q);
    centers.setZero();
    for (Index c = 0; c < k; ++c) {
        const double angle = two_pi * static_cast<double>(c) / static_cast<double>(k);
        centers(c, 0) = opt.separation * std::cos(angle);
        centers(c, 1) = opt.separation * std::sin(angle);
    }
    data.planted_labels.resize(d_points);
    for (Index j = 0; j < d_points; ++j) data.planted_labels[j] = static_cast<int>(j % k);

    for (Index t = 0; t < p_obs; ++t) {
        if (t > 0)
            for (Index c = 0; c < k; ++c) {
                const double eps = gauss(rng);
                centers.row(c) *= (1.0 + opt.drift * eps);
            }
        MatrixXd pos(d_points, q);
        for (Index j = 0; j < d_points; ++j) {
            pos.row(j) = centers.row(data.planted_labels[j]);
            for (Index c = 0; c < q; ++c) pos(j, c) += opt.jitter * gauss(rng);
        }
        MatrixXd a(d_points, d_points);
        for (Index i = 0; i < d_points; ++i) {
            a(i, i) = 0.0;
            for (Index j = i + 1; j < d_points; ++j) {
                const double dist = (pos.row(i) - pos.row(j)).squaredNorm();
                a(i, j) = dist;
                a(j, i) = dist;
            }
        }
        data.observations.push_back(std::move(a));
    }
    return data;
}

/// CSV with a header row: d feature columns then one label column.
inline RobustRegressionData load_robust_csv(const std::string& path, double lambda1,
                                            double lambda2, double eta_prob) {
    const auto rows = detail::read_numeric_csv(path);
    const Index p = static_cast<Index>(rows.size());
    const Index cols = static_cast<Index>(rows.front().size());
    if (cols < 2) throw DataError("regression CSV needs at least one feature column: " + path);
    RobustRegressionData data;
    data.lambda1 = lambda1;
    data.lambda2 = lambda2;
    data.eta_prob = eta_prob;
    data.features.resize(p, cols - 1);
    data.labels.resize(p);
    for (Index i = 0; i < p; ++i) {
        for (Index j = 0; j + 1 < cols; ++j) data.features(i, j) = rows[i][j];
        data.labels[i] = rows[i][cols - 1];
    }
    data.sigma_sqrt = detail::covariance_sqrt(data.features);
    return data;
}

/// CSV with a header row: leading integer task-id column, d feature columns,
/// then one label column.
inline MultiTaskData load_multitask_csv(const std::string& path, double lambda) {
    std::vector<int> task_ids;
    const auto rows = detail::read_numeric_csv(path, 1, &task_ids);
    const Index cols = static_cast<Index>(rows.front().size());
    if (cols < 2) throw DataError("multi-task CSV needs features and a label: " + path);
    std::map<int, std::vector<Index>> by_task;
    for (std::size_t i = 0; i < rows.size(); ++i) by_task[task_ids[i]].push_back(static_cast<Index>(i));
    MultiTaskData data;
    data.lambda = lambda;
    for (const auto& [id, members] : by_task) {
        MatrixXd x(members.size(), cols - 1);
        VectorXd y(members.size());
        for (std::size_t r = 0; r < members.size(); ++r) {
            for (Index j = 0; j + 1 < cols; ++j) x(static_cast<Index>(r), j) = rows[members[r]][j];
            y[static_cast<Index>(r)] = rows[members[r]][cols - 1];
        }
        data.task_features.push_back(std::move(x));
        data.task_labels.push_back(std::move(y));
    }
    return data;
}

/// CSV with a header row; row t holds the scalar observation of each of the
/// d points at stream position t. Pairwise squared differences form the
/// per-observation matrices.
inline StreamClusterData load_cluster_csv(const std::string& path, Index k, double tau,
                                          double gamma_reg) {
    const auto rows = detail::read_numeric_csv(path);
    const Index d = static_cast<Index>(rows.front().size());
    if (!(k >= 2 && k < d)) throw DataError("cluster CSV: need 2 <= k < d (d = columns)");
    StreamClusterData data;
    data.n_clusters = k;
    data.tau = tau;
    data.gamma_reg = gamma_reg;
    for (const auto& row : rows) {
        MatrixXd a(d, d);
        for (Index i = 0; i < d; ++i) {
            a(i, i) = 0.0;
            for (Index j = i + 1; j < d; ++j) {
                const double diff = row[static_cast<std::size_t>(i)] - row[static_cast<std::size_t>(j)];
                a(i, j) = diff * diff;
                a(j, i) = a(i, j);
            }
        }
        data.observations.push_back(std::move(a));
    }
    return data;
}

} // namespace sipm
