#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_impl.hpp"

namespace protfit::kernels {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(PROTFIT_HAVE_AVX2_KERNELS)
    {
      static const bool has_avx2 = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
      }();
      return has_avx2;
    }
#else
      return false;
#endif
  }
  return false;
}

Isa best_supported_isa() {
  static const Isa best = isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
  return best;
}

Isa active_isa() {
  static const Isa active = [] {
    if (const char* env = std::getenv("PROTFIT_ISA")) {
      const std::string want(env);
      if (want == "scalar") return Isa::scalar;
      if (want == "avx2" && isa_supported(Isa::avx2)) return Isa::avx2;
    }
    return best_supported_isa();
  }();
  return active;
}

PackedComposite PackedComposite::from(const CompositeProtection& c) {
  PackedComposite p;
  p.offsets.push_back(0);
  for (const auto& e : c.entries()) {
    for (const auto& s : e.scheme.zone().steps()) {
      p.step_tau.push_back(s.tau_break);
      p.step_v.push_back(s.v_threshold);
    }
    p.offsets.push_back(static_cast<std::uint32_t>(p.step_tau.size()));
    p.fraction.push_back(e.fraction);
  }
  return p;
}

namespace {

void check_sizes(std::size_t a, std::size_t b, std::size_t c) {
  if (a != c || b != c) throw std::invalid_argument("kernel input spans differ in length");
}

}  // namespace

void composite_eval(Isa isa, const PackedComposite& c, std::span<const double> tau,
                    std::span<const double> v, std::span<double> out) {
  check_sizes(tau.size(), v.size(), out.size());
#if defined(PROTFIT_HAVE_AVX2_KERNELS)
  if (isa == Isa::avx2 && isa_supported(Isa::avx2)) return avx2::composite_eval(c, tau, v, out);
#endif
  (void)isa;
  scalar::composite_eval(c, tau, v, out);
}

CostGradient smooth_cost_grad(Isa isa, const SmoothParams& p, std::span<const double> tau,
                              std::span<const double> v, std::span<const double> y,
                              bool with_gradient) {
  check_sizes(tau.size(), v.size(), y.size());
#if defined(PROTFIT_HAVE_AVX2_KERNELS)
  if (isa == Isa::avx2 && isa_supported(Isa::avx2)) {
    return avx2::smooth_cost_grad(p, tau, v, y, with_gradient);
  }
#endif
  (void)isa;
  return scalar::smooth_cost_grad(p, tau, v, y, with_gradient);
}

}  // namespace protfit::kernels
