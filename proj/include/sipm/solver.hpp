// Copyright (c) sipm contributors
// Licensed under Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sipm/cones.hpp"
#include "sipm/errors.hpp"
#include "sipm/estimators.hpp"
#include "sipm/kkt.hpp"
#include "sipm/problem.hpp"
#include "sipm/schedule.hpp"

namespace sipm {

/// Per-iteration metrics, evaluated at the pre-step iterate x^k.
/// f_rel and stat_rel are relative to the k = 0 baselines; epoch counts
/// cumulative oracle component evaluations in units of the dataset size.
struct IterationRecord {
    long k = 0;
    double epoch = 0.0;
    double f_rel = 0.0;
    double stat_rel = 0.0;
    double mu = 0.0;
    double eta = 0.0;
    long samples = 0;
    double wall_ms = 0.0;
    bool estimated_stationary = false;
};

enum class StopReason { Budget, Converged, EstimatedStationary };

inline const char* stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::Budget: return "budget";
        case StopReason::Converged: return "converged";
        case StopReason::EstimatedStationary: return "stationary";
    }
    return "?";
}

/// Iteration or epoch budget; at least one limit must be set.
struct Budget {
    long max_iterations = -1;
    double max_epochs = -1.0;
};

/// The shifted-residual stationarity proxy ||residual||_x^*.
inline double stationarity_measure(const Cone& cone, const InteriorPoint& x,
                                   const VectorXd& residual) {
    return dual_local_norm(cone, x, residual);
}

struct SolverState {
    InteriorPoint x;
    VectorXd lambda;
    long k = 0;
    EstimatorState estimator;
    Schedule schedule;
    long samples = 0;
    long half_step_retries = 0;
    double f0 = 0.0;
    double stat0 = 0.0;
    std::chrono::steady_clock::time_point start_time;

    SolverState(const ConicProblem& problem, Schedule sched, std::uint64_t seed)
        : x(problem.cone, problem.x0),
          lambda(VectorXd::Zero(problem.constraints.rows())),
          estimator(problem.cone.dim(), problem.x0, seed),
          schedule(std::move(sched)),
          start_time(std::chrono::steady_clock::now()) {}
};

namespace detail {

inline void check_equality_feasibility(const AffineConstraints& c, const VectorXd& x,
                                       const char* context) {
    if (c.rows() == 0) return;
    const double drift = (c.matrix() * x - c.rhs()).lpNorm<Eigen::Infinity>();
    const double tol = 1e-8 * (1.0 + c.rhs().lpNorm<Eigen::Infinity>());
    if (drift > tol)
        throw InvariantViolation(std::string(context) + ": equality constraint drift " +
                                 std::to_string(drift) + " exceeds tolerance " +
                                 std::to_string(tol));
}

} // namespace detail

/// One iteration: estimator update, barrier shift, dual solve, unit
/// local-norm primal step. If the shifted residual is numerically
/// stationary the state is left unchanged and the record carries the flag.
inline IterationRecord step(SolverState& s, const ConicProblem& p) {
    const long k = s.k;
    const ScheduleValues sv = s.schedule.at(k);
    const double gamma_prev = (k == 0) ? 1.0 : s.schedule.at(k - 1).gamma;
    const VectorXd x = s.x.vec();
    const VectorXd x_prev = s.estimator.prev_x;

    VectorXd m_bar;
    long consumed = 0;
    switch (s.schedule.variant()) {
        case Variant::ME:
        case Variant::ME1:
            m_bar = update_me(s.estimator, p.batch_mean_gradient, p.n_components, x, sv.batch);
            consumed = sv.batch;
            break;
        case Variant::PM:
            m_bar = update_pm(s.estimator, p.component_gradient, p.n_components, x, gamma_prev);
            consumed = 1;
            break;
        case Variant::EM:
            m_bar = update_em(s.estimator, p.component_gradient, p.n_components, p.cone, x,
                              x_prev, gamma_prev)
                        .second;
            consumed = 1;
            break;
        case Variant::RM:
            m_bar = update_rm(s.estimator, p.component_gradient, p.n_components, x, x_prev,
                              gamma_prev);
            consumed = (gamma_prev == 1.0) ? 1 : 2;
            break;
        case Variant::FG:
            m_bar = p.full_gradient(x);
            s.estimator.prev_m_bar = s.estimator.m_bar;
            s.estimator.m_bar = m_bar;
            s.estimator.prev_x = x;
            ++s.estimator.k;
            consumed = p.n_components;
            break;
    }

    const VectorXd grad_b = barrier_gradient(p.cone, s.x);
    const VectorXd m = shift_with_barrier(m_bar, sv.mu, grad_b);
    const DualSolveResult dual = solve_dual(p.constraints, p.cone, s.x, m);
    s.lambda = dual.lambda;

    const double f_now = p.objective(x);
    if (k == 0) {
        s.f0 = f_now;
        s.stat0 = dual.residual_dual_norm;
    }

    s.samples += consumed;
    IterationRecord rec;
    rec.k = k;
    rec.epoch = static_cast<double>(s.samples) / static_cast<double>(p.n_components);
    rec.f_rel = (s.f0 != 0.0) ? f_now / s.f0 : f_now;
    rec.stat_rel = (s.stat0 > 0.0) ? dual.residual_dual_norm / s.stat0 : 0.0;
    rec.mu = sv.mu;
    rec.eta = sv.eta;
    rec.samples = s.samples;
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                            s.start_time)
                      .count();

    const std::optional<VectorXd> dir = search_direction(p.cone, s.x, dual);
    if (!dir) {
        rec.estimated_stationary = true;
        return rec;
    }

    VectorXd x_new = x + sv.eta * (*dir);
    if (!p.cone.contains_interior(x_new)) {
        // Cannot happen in exact arithmetic (the step stays inside the unit
        // Dikin ellipsoid); retry once at half length and surface the event.
        ++s.half_step_retries;
        x_new = x + (0.5 * sv.eta) * (*dir);
        if (!p.cone.contains_interior(x_new))
            throw InvariantViolation("step: iterate left the cone interior at k = " +
                                     std::to_string(k));
    }
    detail::check_equality_feasibility(p.constraints, x_new, "step");
    s.x = InteriorPoint(p.cone, std::move(x_new));
    ++s.k;
    return rec;
}

struct RunResult {
    std::vector<IterationRecord> trace;
    StopReason stop_reason = StopReason::Budget;
    VectorXd x_final;
    VectorXd lambda_final;
    long half_step_retries = 0;
};

/// Runs the method until the budget is exhausted, the relative stationarity
/// proxy drops to epsilon, or the residual is numerically stationary.
/// Deterministic given (problem data, schedule, budget, seed).
inline RunResult run(const ConicProblem& p, const Schedule& schedule, const Budget& budget,
                     std::uint64_t seed) {
    if (budget.max_iterations < 0 && budget.max_epochs < 0.0)
        throw ConfigError("run: budget must set max_iterations or max_epochs");
    if (p.n_components < 1) throw ConfigError("run: problem has no components");
    if (!p.cone.contains_interior(p.x0))
        throw ConfigError("run: initial point is not strictly inside the cone");
    try {
        detail::check_equality_feasibility(p.constraints, p.x0, "initial point");
    } catch (const InvariantViolation& e) {
        throw ConfigError(std::string("run: initial point infeasible: ") + e.what());
    }

    SolverState s(p, schedule, seed);
    RunResult out;
    for (;;) {
        if (budget.max_iterations >= 0 && s.k >= budget.max_iterations) break;
        if (budget.max_epochs >= 0.0 &&
            static_cast<double>(s.samples) >=
                budget.max_epochs * static_cast<double>(p.n_components))
            break;
        IterationRecord rec = step(s, p);
        out.trace.push_back(rec);
        if (rec.estimated_stationary) {
            out.stop_reason = StopReason::EstimatedStationary;
            break;
        }
        if (rec.stat_rel <= schedule.epsilon()) {
            out.stop_reason = StopReason::Converged;
            break;
        }
    }
    out.x_final = s.x.vec();
    out.lambda_final = s.lambda;
    out.half_step_retries = s.half_step_retries;
    return out;
}

/// Post-hoc draw of the reported iterate: uniform over
/// {floor(K/2), ..., K-1} for a trace of length K.
inline std::size_t draw_reported_index(std::size_t trace_length, std::uint64_t seed) {
    if (trace_length == 0) throw ConfigError("draw_reported_index: empty trace");
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    const std::size_t lo = trace_length / 2;
    std::uniform_int_distribution<std::size_t> dist(lo, trace_length - 1);
    return dist(rng);
}

} // namespace sipm
