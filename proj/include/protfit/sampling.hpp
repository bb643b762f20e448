#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "protfit/protection.hpp"
#include "protfit/rng.hpp"

namespace protfit {

struct Range {
  double lo = 0.0;
  double hi = 1.0;
  [[nodiscard]] double width() const { return hi - lo; }
};

struct SamplerConfig {
  double beta_tau = 1.0;          // 1/s
  double beta_v = 0.1;            // 1/%
  double weight_threshold = 0.5;  // keep points with weight >= threshold
  std::size_t n_train = 200;
  std::size_t m_eval = 5000;
  Range tau_range{0.0, kTauMax};
  Range v_range{0.0, kVoltMax};
  std::uint64_t seed = 1;

  /// Throws ConfigError naming the violated constraint.
  void validate() const;
};

/// Voltage around which faults concentrate; the weight is centred here.
inline constexpr double kTypicalFaultVoltage = 50.0;

/// Training points with their composite labels, stored column-wise.
class Dataset {
 public:
  Dataset() = default;

  void add(const FaultPoint& p, double y);
  void reserve(std::size_t n);

  [[nodiscard]] std::size_t size() const { return y_.size(); }
  [[nodiscard]] bool empty() const { return y_.empty(); }
  [[nodiscard]] FaultPoint point(std::size_t i) const { return {tau_[i], v_[i]}; }
  [[nodiscard]] double label(std::size_t i) const { return y_[i]; }

  [[nodiscard]] std::span<const double> tau() const { return tau_; }
  [[nodiscard]] std::span<const double> v() const { return v_; }
  [[nodiscard]] std::span<const double> y() const { return y_; }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<double> tau_;
  std::vector<double> v_;
  std::vector<double> y_;
};

/// Selection weight: 1 near tau = 0 or v = 50 %, decaying for long shallow faults.
/// The voltage factor is clamped at 0 below 50 %, so w = 1 there.
double weight(const FaultPoint& p, const SamplerConfig& cfg);

/// Fraction of the sampling box whose weight reaches the threshold, estimated on
/// a 200 x 200 midpoint grid.
double accepted_area_fraction(const SamplerConfig& cfg);

/// Exactly cfg.n_train points drawn uniformly from {weight >= threshold} by
/// rejection, labelled with composite_F. Uses the "training" stream of cfg.seed.
Dataset sample_training(const CompositeProtection& c, const SamplerConfig& cfg);

/// Latin hypercube sample of m points over cfg's box, from the "evaluation"
/// stream of cfg.seed.
std::vector<FaultPoint> latin_hypercube(std::size_t m, const SamplerConfig& cfg);

/// m points in [0,1)^dims, one per stratum on every axis.
std::vector<std::vector<double>> latin_hypercube_unit(std::size_t m, std::size_t dims, Rng& rng);

Dataset label_points(const CompositeProtection& c, std::span<const FaultPoint> points);

/// CSV with header tau_f_s,v_f_pct,y. Lines starting with '#' are comments.
void write_dataset_csv(std::ostream& os, const Dataset& d,
                       std::span<const std::string> comment_lines = {});
Dataset read_dataset_csv(std::istream& is);

}  // namespace protfit
