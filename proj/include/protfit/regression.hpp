#pragma once

// Two-block simplified protection model and its least-squares fit.
//
// The simplified model keeps a fraction pi1 of the motor load behind a single
// rectangular trip block (tau1*, v1*) and the rest behind (tau2*, v2*). The hard
// step blocks are replaced by products of logistic functions while fitting, so
// the cost is smooth in all five free parameters (pi2 = 1 - pi1 is eliminated).

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "protfit/protection.hpp"
#include "protfit/sampling.hpp"

namespace protfit {

struct SimplifiedModel {
  double pi1 = 0.5;
  double tau1_star = 0.0;  // s
  double v1_star = 0.0;    // %
  double tau2_star = 0.0;  // s
  double v2_star = 0.0;    // %

  [[nodiscard]] double pi2() const { return 1.0 - pi1; }

  /// Reduced parameter vector (pi1, tau1*, v1*, tau2*, v2*).
  [[nodiscard]] std::array<double, 5> reduced() const {
    return {pi1, tau1_star, v1_star, tau2_star, v2_star};
  }
  static SimplifiedModel from_reduced(const std::array<double, 5>& x) {
    return {x[0], x[1], x[2], x[3], x[4]};
  }

  /// Block with the shorter trip delay first; equal delays put the higher voltage first.
  [[nodiscard]] SimplifiedModel canonical() const;

  /// Throws ConfigError unless pi1 in [0,1], tau* in [0,5], v* in [0,100].
  void validate() const;

  friend bool operator==(const SimplifiedModel&, const SimplifiedModel&) = default;
};

/// Lower and upper bounds of the reduced parameters.
inline constexpr std::array<double, 5> kParamLower{0.0, 0.0, 0.0, 0.0, 0.0};
inline constexpr std::array<double, 5> kParamUpper{1.0, kTauMax, kVoltMax, kTauMax, kVoltMax};

struct SteepnessStage {
  double alpha_tau = 0.0;
  double alpha_v = 0.0;
};

struct SmoothingConfig {
  double alpha_tau = 50.0;  // 1/s
  double alpha_v = 2.0;     // 1/%
  /// Stages solved in order, each warm-started from the previous. Empty means a
  /// single stage at (alpha_tau, alpha_v).
  std::vector<SteepnessStage> continuation;

  /// Stages at (alpha_tau, alpha_v) scaled by each multiplier.
  static SmoothingConfig with_multipliers(double alpha_tau, double alpha_v,
                                          const std::vector<double>& multipliers);
  /// 50 / 2 scaled by 0.2, 1, 5.
  static SmoothingConfig defaults();

  [[nodiscard]] std::vector<SteepnessStage> stages() const;
  /// Steepness of the last stage, which defines the reported cost.
  [[nodiscard]] SmoothingConfig final_stage() const;
  void validate() const;
};

struct FitConfig {
  std::size_t n_starts = 20;
  std::size_t max_iters = 5000;    // per start and stage
  double grad_tol = 1e-8;          // projected gradient, unit-box coordinates
  double param_tol = 1e-10;        // step length, unit-box coordinates
  double cost_tol = 1e-10;         // relative best-cost decrease over 50 iterations
  std::uint64_t seed = 1;
  std::size_t threads = 0;         // 0: PROTFIT_THREADS or hardware concurrency

  void validate() const;
};

struct StartTrace {
  std::size_t index = 0;
  std::array<double, 5> initial{};
  double initial_cost = 0.0;  // at the final stage's steepness
  double final_cost = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct FitResult {
  SimplifiedModel model;
  double final_cost = 0.0;  // smoothed cost at the final stage's steepness
  double alpha_tau = 0.0;   // final stage steepness
  double alpha_v = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t start_index = 0;
  std::vector<StartTrace> starts;
};

/// 1 / (1 + exp(-alpha x)), evaluated without overflow.
double logistic(double x, double alpha);

/// Smoothed block: 1 - h(tau - tau*; alpha_tau) * (1 - h(v - v*; alpha_v)).
double smooth_block(const FaultPoint& p, double tau_star, double v_star, const SmoothingConfig& s);

double smooth_model(const FaultPoint& p, const SimplifiedModel& m, const SmoothingConfig& s);

/// J = (1/2N) sum (smooth_model - y)^2 at s's (alpha_tau, alpha_v).
double cost(const SimplifiedModel& m, const Dataset& d, const SmoothingConfig& s);

/// Analytic dJ/d(pi1, tau1*, v1*, tau2*, v2*).
std::array<double, 5> cost_gradient(const SimplifiedModel& m, const Dataset& d,
                                    const SmoothingConfig& s);

/// Multistart projected-gradient fit under the box and simplex constraints.
FitResult fit(const Dataset& d, const SmoothingConfig& s, const FitConfig& f);

/// Step-function model as a two-entry composite ("block-1", "block-2").
CompositeProtection harden(const SimplifiedModel& m);

/// Mean squared error of the hardened model on the dataset.
double hard_mse(const SimplifiedModel& m, const Dataset& d);

struct GridResolution {
  std::size_t n_tau = 11;
  std::size_t n_v = 11;
  double pi_step = 0.05;
};

/// Exhaustive minimizer of hard_mse over a parameter grid.
SimplifiedModel brute_force_fit(const Dataset& d, const GridResolution& grid);

}  // namespace protfit
