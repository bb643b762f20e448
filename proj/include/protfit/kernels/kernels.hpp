#pragma once

// Batch kernels for the two hot loops of the pipeline:
//   * exact composite evaluation over a batch of fault points,
//   * smoothed two-block cost and gradient reduced over a dataset.
//
// Each kernel has a scalar reference implementation and an AVX2+FMA variant.
// The variant is chosen at runtime from CPU features; PROTFIT_ISA=scalar forces
// the reference path. composite_eval is bit-identical across ISAs. The smoothed
// cost differs only by exp() rounding and lane-wise summation order.

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "protfit/protection.hpp"

namespace protfit::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa best_supported_isa();

/// Best supported ISA unless overridden by the PROTFIT_ISA environment variable.
Isa active_isa();

/// Structure-of-arrays copy of a composite's staircases.
struct PackedComposite {
  std::vector<double> step_tau;
  std::vector<double> step_v;
  std::vector<std::uint32_t> offsets;  // scheme s owns steps [offsets[s], offsets[s+1])
  std::vector<double> fraction;

  static PackedComposite from(const CompositeProtection& c);
  [[nodiscard]] std::size_t schemes() const { return fraction.size(); }
};

void composite_eval(Isa isa, const PackedComposite& c, std::span<const double> tau,
                    std::span<const double> v, std::span<double> out);

/// Reduced parameter vector (pi1, tau1, v1, tau2, v2) plus steepness.
struct SmoothParams {
  double pi1 = 0.5;
  double tau1 = 0.0;
  double v1 = 0.0;
  double tau2 = 0.0;
  double v2 = 0.0;
  double alpha_tau = 1.0;
  double alpha_v = 1.0;
};

struct CostGradient {
  double cost = 0.0;
  std::array<double, 5> grad{};
};

/// J = sum (model - y)^2 / (2N) and, if requested, dJ/d(pi1, tau1, v1, tau2, v2).
CostGradient smooth_cost_grad(Isa isa, const SmoothParams& p, std::span<const double> tau,
                              std::span<const double> v, std::span<const double> y,
                              bool with_gradient);

inline void composite_eval(const PackedComposite& c, std::span<const double> tau,
                           std::span<const double> v, std::span<double> out) {
  composite_eval(active_isa(), c, tau, v, out);
}

inline CostGradient smooth_cost_grad(const SmoothParams& p, std::span<const double> tau,
                                     std::span<const double> v, std::span<const double> y,
                                     bool with_gradient) {
  return smooth_cost_grad(active_isa(), p, tau, v, y, with_gradient);
}

}  // namespace protfit::kernels
