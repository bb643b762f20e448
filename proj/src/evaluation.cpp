#include "protfit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "protfit/error.hpp"
#include "protfit/kernels/kernels.hpp"
#include "protfit/parallel.hpp"
#include "protfit/rng.hpp"

namespace protfit {

MaeEvaluator::MaeEvaluator(const CompositeProtection& approx, std::size_t m, std::uint64_t seed) {
  SamplerConfig box;
  box.seed = seed;
  const auto points = latin_hypercube(m, box);
  tau_.resize(m);
  v_.resize(m);
  approx_.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    tau_[k] = points[k].tau_f;
    v_[k] = points[k].v_f;
  }
  kernels::composite_eval(kernels::PackedComposite::from(approx), tau_, v_, approx_);
}

double MaeEvaluator::operator()(const CompositeProtection& truth, std::vector<double>* errors) const {
  std::vector<double> truth_values(tau_.size());
  kernels::composite_eval(kernels::PackedComposite::from(truth), tau_, v_, truth_values);
  double sum = 0.0;
  if (errors) errors->resize(tau_.size());
  for (std::size_t k = 0; k < tau_.size(); ++k) {
    const double e = std::abs(approx_[k] - truth_values[k]);
    sum += e;
    if (errors) (*errors)[k] = e;
  }
  return sum / static_cast<double>(tau_.size());
}

MaeReport mae(const CompositeProtection& approx, const CompositeProtection& truth, std::size_t m,
              std::uint64_t seed, bool keep_errors) {
  MaeReport r;
  r.m_points = m;
  r.seed = seed;
  const MaeEvaluator eval(approx, m, seed);
  r.epsilon = eval(truth, keep_errors ? &r.errors : nullptr);
  return r;
}

CompositeProtection perturb_fractions(const CompositeProtection& c,
                                      const std::map<std::string, double>& gammas,
                                      bool renormalize) {
  bool any = false;
  for (const auto& [name, gamma] : gammas) {
    if (!c.find(name)) throw ConfigError("cannot perturb unknown protection '" + name + "'");
    if (!std::isfinite(gamma)) throw ConfigError("perturbation of '" + name + "' is not finite");
    if (gamma != 0.0) any = true;
  }
  if (!any) return c;

  std::vector<CompositeEntry> entries(c.entries().begin(), c.entries().end());
  double sum = 0.0;
  for (auto& e : entries) {
    if (auto it = gammas.find(e.scheme.name()); it != gammas.end()) {
      e.fraction *= 1.0 + it->second;
    }
    if (e.fraction < 0.0) {
      throw ConfigError("perturbed fraction of '" + e.scheme.name() + "' is negative");
    }
    sum += e.fraction;
  }

  if (renormalize) {
    if (!(sum > 0.0)) throw ConfigError("perturbed fractions sum to zero");
    for (auto& e : entries) e.fraction /= sum;
    return CompositeProtection(std::move(entries));
  }
  if (sum < 0.5 || sum > 1.5) {
    throw ConfigError("unnormalized perturbed fractions sum to " + std::to_string(sum) +
                      ", outside [0.5, 1.5]");
  }
  return CompositeProtection(std::move(entries), FractionSum::unconstrained);
}

void UncertaintySpec::validate() const {
  if (gamma_levels.empty()) throw ConfigError("uncertainty.gamma_levels is empty");
  for (double g : gamma_levels) {
    if (!(g >= 0.0 && g < 1.0)) throw ConfigError("uncertainty levels must lie in [0, 1)");
  }
  if (trials < 30) throw ConfigError("uncertainty.trials must be >= 30 for interval estimates");
  if (!matrix_targets.empty() && matrix_targets.size() != 2) {
    throw ConfigError("uncertainty.matrix_targets must name exactly two protections");
  }
  if (m_eval < 1) throw ConfigError("uncertainty.m_eval must be >= 1");
}

double quantile(std::vector<double> sample, double q) {
  if (sample.empty()) return std::nan("");
  std::sort(sample.begin(), sample.end());
  const double pos = q * static_cast<double>(sample.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sample.size() - 1);
  return sample[lo] + (pos - static_cast<double>(lo)) * (sample[hi] - sample[lo]);
}

namespace {

// Offsets from the first sample, so a constant sample has exactly that mean.
double mean_of(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v - x.front();
  return x.front() + acc / static_cast<double>(x.size());
}

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

// Scores one set of gammas: either the fixed fit against the perturbed truth,
// or a refit on the perturbed composite against the nominal truth.
class TrialScorer {
 public:
  TrialScorer(const CompositeProtection& nominal, const SimplifiedModel& fitted,
              const UncertaintySpec& spec, const std::optional<RefitSettings>& refit)
      : nominal_(nominal), spec_(spec), refit_(refit), nominal_eval_(harden(fitted), spec.m_eval, spec.eval_seed) {
    if (spec.refit && !refit) throw ConfigError("refit sweep requested without refit settings");
  }

  double nominal() const { return nominal_eval_(perturb_fractions(nominal_, {}, spec_.renormalize)); }

  double operator()(const std::map<std::string, double>& gammas) const {
    const auto perturbed = perturb_fractions(nominal_, gammas, spec_.renormalize);
    if (!spec_.refit) return nominal_eval_(perturbed);

    RefitSettings rs = *refit_;
    rs.fit.threads = 1;
    const auto data = sample_training(perturbed, rs.sampler);
    const auto model = fit(data, rs.smoothing, rs.fit).model;
    return MaeEvaluator(harden(model), spec_.m_eval, spec_.eval_seed)(nominal_);
  }

 private:
  const CompositeProtection& nominal_;
  const UncertaintySpec& spec_;
  const std::optional<RefitSettings>& refit_;
  MaeEvaluator nominal_eval_;
};

struct TrialOutcome {
  double mae = 0.0;
  bool ok = false;
  std::string error;
};

std::vector<std::string> resolve_targets(const CompositeProtection& c,
                                         const std::vector<std::string>& targets) {
  if (targets.empty()) {
    std::vector<std::string> all;
    for (const auto& e : c.entries()) all.push_back(e.scheme.name());
    return all;
  }
  for (const auto& t : targets) {
    if (!c.find(t)) throw ConfigError("uncertainty target '" + t + "' is not in the composite");
  }
  return targets;
}

}  // namespace

SweepReport uncertainty_sweep(const CompositeProtection& c_nominal, const SimplifiedModel& fitted,
                              const UncertaintySpec& spec, const std::optional<RefitSettings>& refit) {
  spec.validate();
  const auto targets = resolve_targets(c_nominal, spec.targets);
  const TrialScorer score(c_nominal, fitted, spec, refit);

  SweepReport report;
  report.nominal_mae = score.nominal();

  const Rng base = Rng::stream(spec.seed, "sweep");
  const std::size_t n_levels = spec.gamma_levels.size();
  std::vector<TrialOutcome> outcomes(n_levels * spec.trials);
  parallel_for(outcomes.size(), thread_count(), [&](std::size_t job) {
    const std::size_t l = job / spec.trials;
    const std::size_t t = job % spec.trials;
    const double level = spec.gamma_levels[l];
    Rng rng = base.split(l).split(t);
    std::map<std::string, double> gammas;
    for (const auto& name : targets) gammas[name] = rng.uniform(-level, level);
    try {
      outcomes[job] = {score(gammas), true, {}};
    } catch (const ConfigError& e) {
      outcomes[job] = {0.0, false, e.what()};
    }
  });

  for (std::size_t l = 0; l < n_levels; ++l) {
    SweepLevel lev;
    lev.level = spec.gamma_levels[l];
    for (std::size_t t = 0; t < spec.trials; ++t) {
      const auto& o = outcomes[l * spec.trials + t];
      if (o.ok) {
        lev.trial.push_back(t);
        lev.mae.push_back(o.mae);
      } else {
        ++lev.skipped;
        report.diagnostics.push_back("level " + std::to_string(lev.level) + " trial " +
                                     std::to_string(t) + " skipped: " + o.error);
      }
    }
    if (!lev.mae.empty()) {
      lev.mean = mean_of(lev.mae);
      lev.p12_5 = quantile(lev.mae, 0.125);
      lev.p87_5 = quantile(lev.mae, 0.875);
    } else {
      lev.mean = lev.p12_5 = lev.p87_5 = std::nan("");
    }
    report.levels.push_back(std::move(lev));
  }
  return report;
}

MatrixReport uncertainty_matrix(const CompositeProtection& c_nominal, const SimplifiedModel& fitted,
                                const UncertaintySpec& spec, const std::optional<RefitSettings>& refit) {
  spec.validate();
  if (spec.matrix_targets.size() != 2) {
    throw ConfigError("matrix sweep needs exactly two uncertainty.matrix_targets");
  }
  const auto targets = resolve_targets(c_nominal, spec.matrix_targets);
  const TrialScorer score(c_nominal, fitted, spec, refit);

  MatrixReport report;
  report.row_target = targets[0];
  report.col_target = targets[1];
  report.levels = spec.gamma_levels;
  const std::size_t n = spec.gamma_levels.size();
  const Rng base = Rng::stream(spec.seed, "matrix");

  std::vector<TrialOutcome> outcomes(n * n * spec.trials);
  parallel_for(outcomes.size(), thread_count(), [&](std::size_t job) {
    const std::size_t cell = job / spec.trials;
    const std::size_t t = job % spec.trials;
    const double row_level = spec.gamma_levels[cell / n];
    const double col_level = spec.gamma_levels[cell % n];
    Rng rng = base.split(cell).split(t);
    std::map<std::string, double> gammas;
    gammas[targets[0]] = rng.uniform(-row_level, row_level);
    gammas[targets[1]] = rng.uniform(-col_level, col_level);
    try {
      outcomes[job] = {score(gammas), true, {}};
    } catch (const ConfigError& e) {
      outcomes[job] = {0.0, false, e.what()};
    }
  });

  report.mean.assign(n * n, 0.0);
  for (std::size_t cell = 0; cell < n * n; ++cell) {
    std::vector<double> cell_mae;
    for (std::size_t t = 0; t < spec.trials; ++t) {
      const auto& o = outcomes[cell * spec.trials + t];
      if (o.ok) {
        cell_mae.push_back(o.mae);
      } else {
        ++report.skipped;
      }
    }
    report.mean[cell] = cell_mae.empty() ? std::nan("") : mean_of(cell_mae);
  }
  return report;
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman_rho needs paired samples");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace protfit
