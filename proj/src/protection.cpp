#include "protfit/protection.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "protfit/error.hpp"
#include "protfit/kernels/kernels.hpp"

namespace protfit {

TripZone::TripZone(std::vector<TripStep> steps) : steps_(std::move(steps)) {
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const auto& s = steps_[i];
    if (!std::isfinite(s.tau_break) || !std::isfinite(s.v_threshold) || s.tau_break < 0.0) {
      throw ConfigError("trip step " + std::to_string(i) + " has an invalid breakpoint");
    }
    if (i > 0) {
      if (!(s.tau_break > steps_[i - 1].tau_break)) {
        throw ConfigError("trip steps must have strictly increasing tau_break (step " +
                          std::to_string(i) + ")");
      }
      if (s.v_threshold < steps_[i - 1].v_threshold) {
        throw ConfigError("trip steps must have non-decreasing v_threshold (step " +
                          std::to_string(i) + ")");
      }
    }
  }
}

TripZone TripZone::rectangle(double tau_break, double v_threshold) {
  return TripZone({TripStep{tau_break, v_threshold}});
}

double TripZone::envelope(double tau) const {
  // last step with tau_break <= tau
  auto it = std::upper_bound(steps_.begin(), steps_.end(), tau,
                             [](double t, const TripStep& s) { return t < s.tau_break; });
  if (it == steps_.begin()) return -1.0;
  return std::prev(it)->v_threshold;
}

bool TripZone::contains(const FaultPoint& p) const {
  auto it = std::upper_bound(steps_.begin(), steps_.end(), p.tau_f,
                             [](double t, const TripStep& s) { return t < s.tau_break; });
  if (it == steps_.begin()) return false;
  return p.v_f <= std::prev(it)->v_threshold;
}

bool zone_contains(const TripZone& zone, const FaultPoint& p) { return zone.contains(p); }

TripZone series_combine(std::span<const TripZone> zones) {
  std::vector<TripStep> all;
  for (const auto& z : zones) all.insert(all.end(), z.steps().begin(), z.steps().end());
  std::sort(all.begin(), all.end(), [](const TripStep& a, const TripStep& b) {
    if (a.tau_break != b.tau_break) return a.tau_break < b.tau_break;
    return a.v_threshold > b.v_threshold;
  });

  // Upper envelope: keep a step only when it raises the running maximum voltage.
  std::vector<TripStep> merged;
  for (const auto& s : all) {
    if (merged.empty() || s.v_threshold > merged.back().v_threshold) merged.push_back(s);
  }
  return TripZone(std::move(merged));
}

std::string combination_name(std::vector<std::string> parts) {
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += '-';
    out += p;
  }
  return out;
}

ProtectionScheme::ProtectionScheme(std::string name, TripZone zone)
    : name_(std::move(name)), zone_(std::move(zone)) {
  if (name_.empty()) throw ConfigError("protection scheme name must not be empty");
}

int protection_f(const ProtectionScheme& scheme, const FaultPoint& p) { return scheme.evaluate(p); }

CompositeProtection::CompositeProtection(std::vector<CompositeEntry> entries, FractionSum policy)
    : entries_(std::move(entries)) {
  if (entries_.empty()) throw ConfigError("composite protection has no entries");

  std::unordered_set<std::string> seen;
  for (const auto& e : entries_) {
    if (!seen.insert(e.scheme.name()).second) {
      throw ConfigError("duplicate protection '" + e.scheme.name() + "' in composite");
    }
    if (!std::isfinite(e.fraction) || e.fraction < 0.0) {
      throw ConfigError("fraction of '" + e.scheme.name() + "' must be non-negative");
    }
    if (policy == FractionSum::must_be_one && e.fraction > 1.0) {
      throw ConfigError("fraction of '" + e.scheme.name() + "' exceeds 1");
    }
  }
  if (policy == FractionSum::must_be_one) {
    const double sum = fraction_sum();
    if (std::abs(sum - 1.0) > kFractionSumTolerance) {
      throw ConfigError("composite fractions sum to " + std::to_string(sum) + ", expected 1");
    }
  }
}

double CompositeProtection::fraction_sum() const {
  double sum = 0.0;
  for (const auto& e : entries_) sum += e.fraction;
  return sum;
}

const CompositeEntry* CompositeProtection::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.scheme.name() == name) return &e;
  }
  return nullptr;
}

// Accumulation order matches kernels::composite_eval so single-point and batch
// evaluations agree bit for bit.
double CompositeProtection::evaluate(const FaultPoint& p) const {
  double acc = 0.0;
  for (const auto& e : entries_) {
    if (!e.scheme.zone().contains(p)) acc += e.fraction;
  }
  return acc;
}

double composite_F(const CompositeProtection& c, const FaultPoint& p) { return c.evaluate(p); }

GridValues grid_evaluate(const CompositeProtection& c, std::span<const double> tau_grid,
                         std::span<const double> v_grid) {
  GridValues g;
  g.tau.assign(tau_grid.begin(), tau_grid.end());
  g.v.assign(v_grid.begin(), v_grid.end());
  g.values.resize(g.tau.size() * g.v.size());

  const auto packed = kernels::PackedComposite::from(c);
  std::vector<double> row_tau(g.v.size());
  for (std::size_t i = 0; i < g.tau.size(); ++i) {
    std::fill(row_tau.begin(), row_tau.end(), g.tau[i]);
    kernels::composite_eval(packed, row_tau, g.v,
                            std::span<double>(g.values).subspan(i * g.v.size(), g.v.size()));
  }
  return g;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

}  // namespace protfit
