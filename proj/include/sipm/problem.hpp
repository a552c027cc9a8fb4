// Copyright (c) sipm contributors
// Licensed under Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "sipm/cones.hpp"
#include "sipm/estimators.hpp"
#include "sipm/kkt.hpp"

namespace sipm {

/// A conic-constrained finite-sum problem
///   min f(x)  s.t.  A x = b,  x in K,
/// with f(x) the mean of n_components component functions. Each component
/// gradient includes the deterministic (regularizer / linear) terms, so a
/// uniformly drawn component gradient is an unbiased estimate of the full
/// gradient. Oracles are pure given the (immutable) problem data.
struct ConicProblem {
    Cone cone;
    AffineConstraints constraints = AffineConstraints::none(0);
    VectorXd x0;
    Index n_components = 0;
    ComponentOracle component_gradient;
    BatchMeanOracle batch_mean_gradient;
    std::function<VectorXd(const VectorXd&)> full_gradient;
    std::function<double(const VectorXd&)> objective;

    /// Fallback batch oracle: the plain mean of single-component calls.
    static BatchMeanOracle batch_mean_from_components(ComponentOracle components) {
        return [components = std::move(components)](const std::vector<Index>& batch,
                                                    const VectorXd& x) {
            VectorXd sum = components(batch.front(), x);
            for (std::size_t j = 1; j < batch.size(); ++j) sum += components(batch[j], x);
            return VectorXd(sum / static_cast<double>(batch.size()));
        };
    }
};

} // namespace sipm
