#include "protfit/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "box_solver.hpp"
#include "protfit/error.hpp"
#include "protfit/kernels/kernels.hpp"
#include "protfit/parallel.hpp"
#include "protfit/rng.hpp"

namespace protfit {

SimplifiedModel SimplifiedModel::canonical() const {
  const bool swap = tau1_star > tau2_star || (tau1_star == tau2_star && v1_star < v2_star);
  if (!swap) return *this;
  return {1.0 - pi1, tau2_star, v2_star, tau1_star, v1_star};
}

void SimplifiedModel::validate() const {
  const auto x = reduced();
  static constexpr const char* names[] = {"pi1", "tau1*", "v1*", "tau2*", "v2*"};
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= kParamLower[i] && x[i] <= kParamUpper[i])) {
      throw ConfigError(std::string("model parameter ") + names[i] + " is out of bounds");
    }
  }
}

SmoothingConfig SmoothingConfig::with_multipliers(double alpha_tau, double alpha_v,
                                                  const std::vector<double>& multipliers) {
  SmoothingConfig s;
  s.alpha_tau = alpha_tau;
  s.alpha_v = alpha_v;
  for (double m : multipliers) s.continuation.push_back({alpha_tau * m, alpha_v * m});
  return s;
}

SmoothingConfig SmoothingConfig::defaults() { return with_multipliers(50.0, 2.0, {0.2, 1.0, 5.0}); }

std::vector<SteepnessStage> SmoothingConfig::stages() const {
  if (continuation.empty()) return {{alpha_tau, alpha_v}};
  return continuation;
}

SmoothingConfig SmoothingConfig::final_stage() const {
  const auto last = stages().back();
  return SmoothingConfig{last.alpha_tau, last.alpha_v, {}};
}

void SmoothingConfig::validate() const {
  if (!(alpha_tau > 0.0) || !(alpha_v > 0.0)) {
    throw ConfigError("smoothing steepness alpha_tau and alpha_v must be > 0");
  }
  for (std::size_t i = 0; i < continuation.size(); ++i) {
    const auto& st = continuation[i];
    if (!(st.alpha_tau > 0.0) || !(st.alpha_v > 0.0)) {
      throw ConfigError("continuation stage " + std::to_string(i) + " has non-positive steepness");
    }
    if (i > 0 && (st.alpha_tau < continuation[i - 1].alpha_tau ||
                  st.alpha_v < continuation[i - 1].alpha_v)) {
      throw ConfigError("continuation stages must be increasing in steepness");
    }
  }
}

void FitConfig::validate() const {
  if (n_starts < 1) throw ConfigError("fit.n_starts must be >= 1");
  if (max_iters < 1) throw ConfigError("fit.max_iters must be >= 1");
  if (!(grad_tol >= 0.0) || !(param_tol >= 0.0) || !(cost_tol >= 0.0)) throw ConfigError("fit tolerances must be >= 0");
}

double logistic(double x, double alpha) {
  const double z = alpha * x;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double smooth_block(const FaultPoint& p, double tau_star, double v_star, const SmoothingConfig& s) {
  return 1.0 - logistic(p.tau_f - tau_star, s.alpha_tau) * logistic(v_star - p.v_f, s.alpha_v);
}

double smooth_model(const FaultPoint& p, const SimplifiedModel& m, const SmoothingConfig& s) {
  return m.pi1 * smooth_block(p, m.tau1_star, m.v1_star, s) +
         m.pi2() * smooth_block(p, m.tau2_star, m.v2_star, s);
}

namespace {

kernels::SmoothParams to_kernel(const SimplifiedModel& m, const SmoothingConfig& s) {
  return {m.pi1, m.tau1_star, m.v1_star, m.tau2_star, m.v2_star, s.alpha_tau, s.alpha_v};
}

}  // namespace

double cost(const SimplifiedModel& m, const Dataset& d, const SmoothingConfig& s) {
  return kernels::smooth_cost_grad(to_kernel(m, s), d.tau(), d.v(), d.y(), false).cost;
}

std::array<double, 5> cost_gradient(const SimplifiedModel& m, const Dataset& d,
                                    const SmoothingConfig& s) {
  return kernels::smooth_cost_grad(to_kernel(m, s), d.tau(), d.v(), d.y(), true).grad;
}

namespace {

std::array<double, 5> from_unit(const std::array<double, 5>& u) {
  std::array<double, 5> x{};
  for (std::size_t i = 0; i < 5; ++i) x[i] = kParamLower[i] + u[i] * (kParamUpper[i] - kParamLower[i]);
  return x;
}

struct StartOutcome {
  StartTrace trace;
  std::array<double, 5> best_unit{};
};

StartOutcome run_start(const Dataset& d, const std::vector<SteepnessStage>& stages,
                       const FitConfig& f, std::size_t index, const std::array<double, 5>& start) {
  const auto& last = stages.back();
  const auto final_params = [&](const std::array<double, 5>& u) {
    const auto x = from_unit(u);
    return kernels::SmoothParams{x[0], x[1], x[2], x[3], x[4], last.alpha_tau, last.alpha_v};
  };

  StartOutcome out;
  out.trace.index = index;
  out.trace.initial = from_unit(start);
  out.trace.initial_cost =
      kernels::smooth_cost_grad(final_params(start), d.tau(), d.v(), d.y(), false).cost;

  detail::SpgOptions opt;
  opt.max_iters = f.max_iters;
  opt.grad_tol = f.grad_tol;
  opt.step_tol = f.param_tol;
  opt.cost_tol = f.cost_tol;

  std::array<double, 5> u = start;
  bool converged = false;
  for (const auto& stage : stages) {
    auto eval = [&](const std::array<double, 5>& unit, std::array<double, 5>& grad) {
      const auto x = from_unit(unit);
      const kernels::SmoothParams p{x[0], x[1], x[2], x[3], x[4], stage.alpha_tau, stage.alpha_v};
      const auto cg = kernels::smooth_cost_grad(p, d.tau(), d.v(), d.y(), true);
      for (std::size_t i = 0; i < 5; ++i) grad[i] = cg.grad[i] * (kParamUpper[i] - kParamLower[i]);
      return cg.cost;
    };
    const auto res = detail::spg_minimize<5>(eval, u, opt);
    u = res.x;
    converged = res.converged;
    out.trace.iterations += res.iterations;
  }

  // An earlier, smoother stage may lead somewhere worse than the start itself.
  double final_cost = kernels::smooth_cost_grad(final_params(u), d.tau(), d.v(), d.y(), false).cost;
  if (final_cost > out.trace.initial_cost) {
    u = start;
    final_cost = out.trace.initial_cost;
  }
  out.trace.final_cost = final_cost;
  out.trace.converged = converged;
  out.best_unit = u;
  return out;
}

}  // namespace

FitResult fit(const Dataset& d, const SmoothingConfig& s, const FitConfig& f) {
  if (d.empty()) throw ConfigError("cannot fit an empty dataset");
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!d.point(i).valid() || !std::isfinite(d.label(i))) {
      throw ConfigError("dataset row " + std::to_string(i) + " is not a valid labelled fault point");
    }
  }
  s.validate();
  f.validate();

  const auto stages = s.stages();
  Rng rng = Rng::stream(f.seed, "multistart");
  const auto starts = latin_hypercube_unit(f.n_starts, 5, rng);

  std::vector<StartOutcome> outcomes(f.n_starts);
  parallel_for(f.n_starts, thread_count(f.threads), [&](std::size_t i) {
    std::array<double, 5> u{};
    std::copy(starts[i].begin(), starts[i].end(), u.begin());
    outcomes[i] = run_start(d, stages, f, i, u);
  });

  // strict comparison in index order: lowest index wins ties
  std::size_t winner = 0;
  for (std::size_t i = 1; i < outcomes.size(); ++i) {
    if (outcomes[i].trace.final_cost < outcomes[winner].trace.final_cost) winner = i;
  }

  FitResult r;
  r.model = SimplifiedModel::from_reduced(from_unit(outcomes[winner].best_unit)).canonical();
  const auto fin = s.final_stage();
  r.alpha_tau = fin.alpha_tau;
  r.alpha_v = fin.alpha_v;
  r.final_cost = cost(r.model, d, fin);
  r.converged = outcomes[winner].trace.converged;
  r.iterations = outcomes[winner].trace.iterations;
  r.start_index = winner;
  r.starts.reserve(outcomes.size());
  for (auto& o : outcomes) r.starts.push_back(o.trace);
  return r;
}

CompositeProtection harden(const SimplifiedModel& m) {
  std::vector<CompositeEntry> entries;
  entries.push_back({ProtectionScheme("block-1", TripZone::rectangle(m.tau1_star, m.v1_star)), m.pi1});
  entries.push_back({ProtectionScheme("block-2", TripZone::rectangle(m.tau2_star, m.v2_star)), m.pi2()});
  return CompositeProtection(std::move(entries));
}

double hard_mse(const SimplifiedModel& m, const Dataset& d) {
  if (d.empty()) return 0.0;
  std::vector<double> pred(d.size());
  kernels::composite_eval(kernels::PackedComposite::from(harden(m)), d.tau(), d.v(), pred);
  double sse = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double r = pred[i] - d.label(i);
    sse += r * r;
  }
  return sse / static_cast<double>(d.size());
}

SimplifiedModel brute_force_fit(const Dataset& d, const GridResolution& grid) {
  if (d.empty()) throw ConfigError("cannot fit an empty dataset");
  if (grid.n_tau < 1 || grid.n_v < 1 || !(grid.pi_step > 0.0 && grid.pi_step <= 1.0)) {
    throw ConfigError("invalid brute-force grid resolution");
  }
  const auto taus = linspace(0.0, kTauMax, grid.n_tau);
  const auto volts = linspace(0.0, kVoltMax, grid.n_v);
  const auto n_pi = static_cast<std::size_t>(std::llround(1.0 / grid.pi_step));

  // Candidate rectangles in canonical order: tau ascending, then v descending.
  struct Rect {
    double tau, v;
    std::vector<double> connected;  // 1 - indicator per data point
  };
  std::vector<Rect> rects;
  rects.reserve(taus.size() * volts.size());
  for (double t : taus) {
    for (auto it = volts.rbegin(); it != volts.rend(); ++it) {
      Rect r{t, *it, std::vector<double>(d.size())};
      const TripZone zone = TripZone::rectangle(t, *it);
      for (std::size_t k = 0; k < d.size(); ++k) r.connected[k] = zone.contains(d.point(k)) ? 0.0 : 1.0;
      rects.push_back(std::move(r));
    }
  }

  // For a fixed pair, N * MSE(pi) = S0 + 2 pi S1 + pi^2 S2 with
  // e = B_b - y and delta = B_a - B_b.
  double best = std::numeric_limits<double>::infinity();
  SimplifiedModel best_model;
  const auto y = d.y();
  for (std::size_t a = 0; a < rects.size(); ++a) {
    for (std::size_t b = a; b < rects.size(); ++b) {
      double s0 = 0.0, s1 = 0.0, s2 = 0.0;
      const auto& ba = rects[a].connected;
      const auto& bb = rects[b].connected;
      for (std::size_t k = 0; k < y.size(); ++k) {
        const double e = bb[k] - y[k];
        const double delta = ba[k] - bb[k];
        s0 += e * e;
        s1 += e * delta;
        s2 += delta * delta;
      }
      for (std::size_t ip = 0; ip <= n_pi; ++ip) {
        const double pi = static_cast<double>(ip) / static_cast<double>(n_pi);
        const double sse = s0 + 2.0 * pi * s1 + pi * pi * s2;
        if (sse < best) {
          best = sse;
          best_model = {pi, rects[a].tau, rects[a].v, rects[b].tau, rects[b].v};
        }
      }
    }
  }
  return best_model;
}

}  // namespace protfit
