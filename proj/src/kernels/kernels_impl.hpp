#pragma once

#include "protfit/kernels/kernels.hpp"

namespace protfit::kernels {

namespace scalar {
void composite_eval(const PackedComposite& c, std::span<const double> tau,
                    std::span<const double> v, std::span<double> out);
CostGradient smooth_cost_grad(const SmoothParams& p, std::span<const double> tau,
                              std::span<const double> v, std::span<const double> y,
                              bool with_gradient);
}  // namespace scalar

#if defined(PROTFIT_HAVE_AVX2_KERNELS)
namespace avx2 {
void composite_eval(const PackedComposite& c, std::span<const double> tau,
                    std::span<const double> v, std::span<double> out);
CostGradient smooth_cost_grad(const SmoothParams& p, std::span<const double> tau,
                              std::span<const double> v, std::span<const double> y,
                              bool with_gradient);
}  // namespace avx2
#endif

}  // namespace protfit::kernels
