#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "protfit/protection.hpp"
#include "protfit/regression.hpp"
#include "protfit/sampling.hpp"

namespace protfit {

struct MaeReport {
  double epsilon = 0.0;
  std::size_t m_points = 0;
  std::uint64_t seed = 0;
  std::vector<double> errors;  // |approx - truth| per point, when requested
};

/// Mean |approx - truth| over m Latin hypercube points of the full fault box,
/// drawn from the "evaluation" stream of `seed`.
MaeReport mae(const CompositeProtection& approx, const CompositeProtection& truth, std::size_t m,
              std::uint64_t seed, bool keep_errors = false);

/// Holds the evaluation points and the approximation's values so many truths
/// can be scored against one approximation. Gives the same result as mae().
class MaeEvaluator {
 public:
  MaeEvaluator(const CompositeProtection& approx, std::size_t m, std::uint64_t seed);

  [[nodiscard]] double operator()(const CompositeProtection& truth,
                                  std::vector<double>* errors = nullptr) const;
  [[nodiscard]] std::size_t size() const { return tau_.size(); }

 private:
  std::vector<double> tau_;
  std::vector<double> v_;
  std::vector<double> approx_;
};

/// Scales each named fraction by (1 + gamma). Unnamed entries keep their
/// fraction. With renormalize the result is rescaled to sum to 1; without it
/// the sum must stay within [0.5, 1.5].
CompositeProtection perturb_fractions(const CompositeProtection& c,
                                      const std::map<std::string, double>& gammas,
                                      bool renormalize = true);

struct UncertaintySpec {
  std::vector<double> gamma_levels{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  std::vector<std::string> targets;         // empty: every protection in the composite
  std::vector<std::string> matrix_targets;  // empty or exactly two names
  std::size_t trials = 200;
  bool refit = false;
  bool renormalize = true;
  std::size_t m_eval = 5000;
  std::uint64_t seed = 1;       // gamma draws
  std::uint64_t eval_seed = 1;  // MAE points, shared by every trial

  void validate() const;
};

/// Needed only when UncertaintySpec::refit is set: each trial fits a new model
/// to data sampled from the perturbed composite and scores it against the
/// nominal composite.
struct RefitSettings {
  SamplerConfig sampler;
  SmoothingConfig smoothing;
  FitConfig fit;
};

struct SweepLevel {
  double level = 0.0;
  std::vector<std::size_t> trial;  // trial index of each retained sample
  std::vector<double> mae;
  std::size_t skipped = 0;
  double mean = 0.0;
  double p12_5 = 0.0;
  double p87_5 = 0.0;
};

struct SweepReport {
  double nominal_mae = 0.0;
  std::vector<SweepLevel> levels;
  std::vector<std::string> diagnostics;
};

struct MatrixReport {
  std::string row_target;
  std::string col_target;
  std::vector<double> levels;
  std::vector<double> mean;  // mean[i * levels.size() + j]: row level i, column level j
  std::size_t skipped = 0;

  [[nodiscard]] double at(std::size_t i, std::size_t j) const { return mean[i * levels.size() + j]; }
};

/// Monte Carlo MAE statistics per uncertainty level. Trial t of level l draws
/// its gammas from stream ("sweep", l, t), so results do not depend on thread count.
SweepReport uncertainty_sweep(const CompositeProtection& c_nominal, const SimplifiedModel& fitted,
                              const UncertaintySpec& spec,
                              const std::optional<RefitSettings>& refit = std::nullopt);

/// Mean MAE over every pair of levels for spec.matrix_targets, other fractions unperturbed.
MatrixReport uncertainty_matrix(const CompositeProtection& c_nominal, const SimplifiedModel& fitted,
                                const UncertaintySpec& spec,
                                const std::optional<RefitSettings>& refit = std::nullopt);

/// Linear-interpolated empirical quantile, q in [0, 1].
double quantile(std::vector<double> sample, double q);

/// Spearman rank correlation with average ranks for ties.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace protfit
