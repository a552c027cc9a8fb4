// Copyright (c) sipm contributors
// Licensed under Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sipm/cones.hpp"
#include "sipm/errors.hpp"

namespace sipm {

/// Evaluates the stochastic gradient component i at a point. Exposing the
/// component index (rather than "draw and evaluate") lets the recursive
/// momentum estimator evaluate one fixed sample at two iterates.
using ComponentOracle = std::function<VectorXd(Index component, const VectorXd& x)>;

/// Mean of the components in `batch` at x. Problems provide an
/// implementation that evaluates shared deterministic terms once per batch.
using BatchMeanOracle = std::function<VectorXd(const std::vector<Index>& batch, const VectorXd& x)>;

/// Running gradient-estimate state shared by all estimator variants.
/// Conventions: m_bar starts at zero (the k = -1 estimate), gamma at k = -1
/// is one, and prev_x starts at x^0, so the first update of every variant
/// reduces to a fresh sample (or batch mean).
struct EstimatorState {
    VectorXd m_bar;
    VectorXd prev_m_bar;
    VectorXd prev_x;
    long k = 0;
    std::mt19937_64 rng;

    EstimatorState(Index dim, const VectorXd& x0, std::uint64_t seed)
        : m_bar(VectorXd::Zero(dim)),
          prev_m_bar(VectorXd::Zero(dim)),
          prev_x(x0),
          rng(seed) {}

    Index draw_component(Index n_components) {
        std::uniform_int_distribution<Index> dist(0, n_components - 1);
        return dist(rng);
    }

    std::vector<Index> draw_batch(Index n_components, long batch_size) {
        std::vector<Index> batch(static_cast<std::size_t>(batch_size));
        std::uniform_int_distribution<Index> dist(0, n_components - 1);
        for (auto& i : batch) i = dist(rng);
        return batch;
    }
};

/// Mini-batch estimate: the mean of `batch_size` draws with replacement.
inline VectorXd update_me(EstimatorState& state, const BatchMeanOracle& oracle,
                          Index n_components, const VectorXd& x, long batch_size) {
    if (batch_size < 1) throw ConfigError("update_me: batch size must be >= 1");
    const auto batch = state.draw_batch(n_components, batch_size);
    state.prev_m_bar = state.m_bar;
    state.m_bar = oracle(batch, x);
    state.prev_x = x;
    ++state.k;
    return state.m_bar;
}

/// Polyak momentum: m_bar <- (1-gamma) m_bar + gamma G(x, xi).
inline VectorXd update_pm(EstimatorState& state, const ComponentOracle& oracle,
                          Index n_components, const VectorXd& x, double gamma_prev) {
    if (!(gamma_prev > 0.0 && gamma_prev <= 1.0))
        throw ConfigError("update_pm: momentum parameter must lie in (0,1]");
    const Index i = state.draw_component(n_components);
    state.prev_m_bar = state.m_bar;
    state.m_bar = (1.0 - gamma_prev) * state.m_bar + gamma_prev * oracle(i, x);
    state.prev_x = x;
    ++state.k;
    return state.m_bar;
}

/// Extrapolated Polyak momentum: the fresh sample is taken at
/// z = x + ((1-gamma)/gamma)(x - x_prev), which stays strictly feasible
/// whenever the schedule keeps eta_k/gamma_k <= s_eta. Returns (z, m_bar).
inline std::pair<VectorXd, VectorXd> update_em(EstimatorState& state,
                                               const ComponentOracle& oracle,
                                               Index n_components, const Cone& cone,
                                               const VectorXd& x, const VectorXd& x_prev,
                                               double gamma_prev) {
    if (!(gamma_prev > 0.0 && gamma_prev <= 1.0))
        throw ConfigError("update_em: momentum parameter must lie in (0,1]");
    const VectorXd z = x + ((1.0 - gamma_prev) / gamma_prev) * (x - x_prev);
    if (!cone.contains_interior(z))
        throw InvariantViolation(
            "update_em: extrapolated point left the cone interior; the step/momentum "
            "schedule violates the feasibility requirement eta_k/gamma_k <= s_eta");
    const Index i = state.draw_component(n_components);
    state.prev_m_bar = state.m_bar;
    state.m_bar = (1.0 - gamma_prev) * state.m_bar + gamma_prev * oracle(i, z);
    state.prev_x = x;
    ++state.k;
    return {z, state.m_bar};
}

/// Recursive momentum: one sample evaluated at both the current and the
/// previous iterate,
///   m_bar <- G(x, xi) + (1-gamma)(m_bar - G(x_prev, xi)).
inline VectorXd update_rm(EstimatorState& state, const ComponentOracle& oracle,
                          Index n_components, const VectorXd& x, const VectorXd& x_prev,
                          double gamma_prev) {
    if (!(gamma_prev >= 0.0 && gamma_prev <= 1.0))
        throw ConfigError("update_rm: momentum parameter must lie in [0,1]");
    const Index i = state.draw_component(n_components);
    const VectorXd g_now = oracle(i, x);
    state.prev_m_bar = state.m_bar;
    if (gamma_prev == 1.0) {
        state.m_bar = g_now;
    } else {
        const VectorXd g_prev = oracle(i, x_prev);
        state.m_bar = g_now + (1.0 - gamma_prev) * (state.m_bar - g_prev);
    }
    state.prev_x = x;
    ++state.k;
    return state.m_bar;
}

/// Barrier shift m = m_bar + mu (m_bar + grad B) = (1+mu) m_bar + mu grad B.
inline VectorXd shift_with_barrier(const VectorXd& m_bar, double mu,
                                   const VectorXd& grad_b_at_x) {
    return (1.0 + mu) * m_bar + mu * grad_b_at_x;
}

} // namespace sipm
