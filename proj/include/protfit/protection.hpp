#pragma once

// Exact trip-zone model for motor protections.
//
// A trip-zone is the set of (fault duration, fault voltage) pairs for which a
// protection disconnects its motor. Zones are monotone staircases: a protection
// that trips for a fault also trips for any longer or deeper fault. A zone is
// stored as breakpoints (tau_break, v_threshold); the point (tau, v) trips iff
// some step has tau >= tau_break and v <= v_threshold. Both inequalities are
// closed.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace protfit {

inline constexpr double kTauMax = 5.0;    // seconds
inline constexpr double kVoltMax = 100.0; // percent of nominal

struct FaultPoint {
  double tau_f = 0.0;  // fault duration, s
  double v_f = 0.0;    // voltage during fault, % of nominal

  [[nodiscard]] bool valid() const {
    return tau_f >= 0.0 && v_f >= 0.0 && v_f <= kVoltMax;
  }
};

struct TripStep {
  double tau_break = 0.0;
  double v_threshold = 0.0;

  friend bool operator==(const TripStep&, const TripStep&) = default;
};

class TripZone {
 public:
  /// The empty zone; never trips.
  TripZone() = default;

  /// Validates ordering: tau_break strictly increasing, v_threshold non-decreasing.
  explicit TripZone(std::vector<TripStep> steps);

  /// Single "slow and deep" rectangle: tau >= tau_break && v <= v_threshold.
  static TripZone rectangle(double tau_break, double v_threshold);

  [[nodiscard]] bool contains(const FaultPoint& p) const;

  /// Highest tripping voltage at duration tau; negative when nothing trips yet.
  [[nodiscard]] double envelope(double tau) const;

  [[nodiscard]] std::span<const TripStep> steps() const { return steps_; }
  [[nodiscard]] bool empty() const { return steps_.empty(); }

  friend bool operator==(const TripZone&, const TripZone&) = default;

 private:
  std::vector<TripStep> steps_;
};

bool zone_contains(const TripZone& zone, const FaultPoint& p);

/// Union of trip-zones (series combination of protections). Redundant steps
/// are dropped, so the result has strictly increasing tau and v.
TripZone series_combine(std::span<const TripZone> zones);

/// Sorted hyphen-join of constituent names, e.g. {"P5","P1","P4"} -> "P1-P4-P5".
std::string combination_name(std::vector<std::string> parts);

class ProtectionScheme {
 public:
  ProtectionScheme(std::string name, TripZone zone);

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] const TripZone& zone() const { return zone_; }

  /// 0 when tripped, 1 when the motor stays connected.
  [[nodiscard]] int evaluate(const FaultPoint& p) const { return zone_.contains(p) ? 0 : 1; }

 private:
  std::string name_;
  TripZone zone_;
};

int protection_f(const ProtectionScheme& scheme, const FaultPoint& p);

struct CompositeEntry {
  ProtectionScheme scheme;
  double fraction = 0.0;
};

enum class FractionSum {
  must_be_one,   // sum within kFractionSumTolerance of 1
  unconstrained  // only used for deliberately unnormalized perturbation studies
};

inline constexpr double kFractionSumTolerance = 1e-9;

/// Fraction-weighted set of protections covering an aggregate motor load.
class CompositeProtection {
 public:
  explicit CompositeProtection(std::vector<CompositeEntry> entries,
                               FractionSum policy = FractionSum::must_be_one);

  /// Fraction of motor load still connected for the fault.
  [[nodiscard]] double evaluate(const FaultPoint& p) const;

  [[nodiscard]] std::span<const CompositeEntry> entries() const { return entries_; }
  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] double fraction_sum() const;
  [[nodiscard]] const CompositeEntry* find(std::string_view name) const;

 private:
  std::vector<CompositeEntry> entries_;
};

double composite_F(const CompositeProtection& c, const FaultPoint& p);

/// Row-major matrix of composite values; values[i * v.size() + j] is at (tau[i], v[j]).
struct GridValues {
  std::vector<double> tau;
  std::vector<double> v;
  std::vector<double> values;

  [[nodiscard]] double at(std::size_t i, std::size_t j) const { return values[i * v.size() + j]; }
};

GridValues grid_evaluate(const CompositeProtection& c, std::span<const double> tau_grid,
                         std::span<const double> v_grid);

/// n evenly spaced values covering [lo, hi] inclusive (n == 1 gives lo).
std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace protfit
