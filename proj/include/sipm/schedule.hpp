// Copyright (c) sipm contributors
// Licensed under Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "sipm/errors.hpp"

namespace sipm {

/// Gradient-estimator variants. ME draws a growing mini-batch, ME1 a fixed
/// one, PM/EM/RM use momentum recursions with a single fresh sample (RM
/// evaluates it at two points), FG is the deterministic full-gradient
/// baseline.
enum class Variant { ME, ME1, PM, EM, RM, FG };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::ME: return "me";
        case Variant::ME1: return "me1";
        case Variant::PM: return "pm";
        case Variant::EM: return "em";
        case Variant::RM: return "rm";
        case Variant::FG: return "fg";
    }
    return "?";
}

/// Values of the published hyperparameter sequences at iteration k.
/// `gamma` is meaningful for PM/EM/RM; `batch` for ME/ME1 (FG uses the full
/// component set and reports batch = 0 here).
struct ScheduleValues {
    double eta = 0.0;
    double gamma = 1.0;
    long batch = 0;
    double mu = 1.0;
};

/// The per-variant step-size / momentum / barrier-parameter sequences:
///   ME:  eta_k = s/(k+1)^{1/2},     |B_k| = b0 + k*incr, mu_k = max{(k+1)^{-1/2}, floor}
///   PM:  eta_k = s/(k+1)^{3/4},     gamma_k = (k+1)^{-1/2}, mu_k = max{(k+1)^{-1/4}, floor}
///   EM:  eta_k = 5s/(7(k+1)^{5/7}), gamma_k = (k+1)^{-4/7}, mu_k = max{(k+1)^{-2/7}, floor}
///   RM:  eta_k = s/(3(k+1)^{2/3}),  gamma_k = (k+1)^{-2/3}, mu_k = max{(k+1)^{-1/3}, floor}
/// with floor = epsilon/(1+sqrt(theta)). FG follows the ME step/barrier
/// sequences with the exact full gradient.
class Schedule {
public:
    Schedule(Variant variant, double s_eta, double epsilon, double theta)
        : variant_(variant), s_eta_(s_eta), epsilon_(epsilon), theta_(theta) {
        if (!(s_eta > 0.0 && s_eta < 1.0))
            throw ConfigError("Schedule: s_eta must lie in (0,1), got " + std::to_string(s_eta));
        if (!(epsilon > 0.0 && epsilon < 1.0))
            throw ConfigError("Schedule: epsilon must lie in (0,1), got " +
                              std::to_string(epsilon));
        if (theta < 0.0) throw ConfigError("Schedule: negative barrier parameter");
    }

    /// Fixed batch size (ME1 only).
    Schedule& with_fixed_batch(long b) {
        if (b < 1) throw ConfigError("Schedule: fixed batch must be >= 1");
        fixed_batch_ = b;
        return *this;
    }

    /// Initial batch size and per-iteration increment (ME growth; the
    /// published sequence |B_k| = k+1 is b0 = 1, incr = 1).
    Schedule& with_batch_growth(long b0, long incr) {
        if (b0 < 1 || incr < 0) throw ConfigError("Schedule: invalid batch growth");
        batch0_ = b0;
        batch_increment_ = incr;
        return *this;
    }

    Variant variant() const { return variant_; }
    double s_eta() const { return s_eta_; }
    double epsilon() const { return epsilon_; }
    double theta() const { return theta_; }

    ScheduleValues at(long k) const {
        if (k < 0) throw ConfigError("Schedule: negative iteration index");
        const double k1 = static_cast<double>(k) + 1.0;
        const double floor = epsilon_ / (1.0 + std::sqrt(theta_));
        ScheduleValues v;
        switch (variant_) {
            case Variant::ME:
            case Variant::FG:
                v.eta = s_eta_ / std::sqrt(k1);
                v.batch = (variant_ == Variant::ME) ? batch0_ + k * batch_increment_ : 0;
                v.mu = std::max(1.0 / std::sqrt(k1), floor);
                break;
            case Variant::ME1:
                v.eta = s_eta_ / std::sqrt(k1);
                v.batch = fixed_batch_;
                v.mu = std::max(1.0 / std::sqrt(k1), floor);
                break;
            case Variant::PM:
                v.eta = s_eta_ / std::pow(k1, 0.75);
                v.gamma = 1.0 / std::sqrt(k1);
                v.mu = std::max(std::pow(k1, -0.25), floor);
                break;
            case Variant::EM:
                v.eta = 5.0 * s_eta_ / (7.0 * std::pow(k1, 5.0 / 7.0));
                v.gamma = std::pow(k1, -4.0 / 7.0);
                v.mu = std::max(std::pow(k1, -2.0 / 7.0), floor);
                break;
            case Variant::RM:
                v.eta = s_eta_ / (3.0 * std::pow(k1, 2.0 / 3.0));
                v.gamma = std::pow(k1, -2.0 / 3.0);
                v.mu = std::max(std::pow(k1, -1.0 / 3.0), floor);
                break;
        }
        return v;
    }

private:
    Variant variant_;
    double s_eta_;
    double epsilon_;
    double theta_;
    long fixed_batch_ = 1;
    long batch0_ = 1;
    long batch_increment_ = 1;
};

} // namespace sipm
