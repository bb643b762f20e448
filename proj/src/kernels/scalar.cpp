#include <cmath>

#include "kernels_impl.hpp"

namespace protfit::kernels::scalar {

void composite_eval(const PackedComposite& c, std::span<const double> tau,
                    std::span<const double> v, std::span<double> out) {
  const std::size_t n = out.size();
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t s = 0; s < c.schemes(); ++s) {
      bool tripped = false;
      for (std::uint32_t i = c.offsets[s]; i < c.offsets[s + 1]; ++i) {
        tripped = tripped || (tau[k] >= c.step_tau[i] && v[k] <= c.step_v[i]);
      }
      if (!tripped) acc += c.fraction[s];
    }
    out[k] = acc;
  }
}

namespace {

// Logistic of z and its complement, without overflow for large |z|.
struct Logistic {
  double h;    // 1 / (1 + e^-z)
  double hc;   // 1 - h
  double dh;   // h * (1 - h)
};

inline Logistic logistic(double z) {
  const double e = std::exp(-std::abs(z));
  const double d = 1.0 / (1.0 + e);
  const double ed = e * d;
  return z >= 0.0 ? Logistic{d, ed, ed * d} : Logistic{ed, d, ed * d};
}

}  // namespace

CostGradient smooth_cost_grad(const SmoothParams& p, std::span<const double> tau,
                              std::span<const double> v, std::span<const double> y,
                              bool with_gradient) {
  const std::size_t n = y.size();
  const double pi2 = 1.0 - p.pi1;
  double sse = 0.0;
  double g[5] = {0, 0, 0, 0, 0};

  for (std::size_t k = 0; k < n; ++k) {
    // block i trips where tau is past tau_i and v is below v_i
    const Logistic a1 = logistic(p.alpha_tau * (tau[k] - p.tau1));
    const Logistic c1 = logistic(p.alpha_v * (v[k] - p.v1));
    const Logistic a2 = logistic(p.alpha_tau * (tau[k] - p.tau2));
    const Logistic c2 = logistic(p.alpha_v * (v[k] - p.v2));
    const double b1 = 1.0 - a1.h * c1.hc;
    const double b2 = 1.0 - a2.h * c2.hc;
    const double r = p.pi1 * b1 + pi2 * b2 - y[k];
    sse += r * r;
    if (with_gradient) {
      g[0] += r * (b1 - b2);
      g[1] += r * p.pi1 * a1.dh * c1.hc;
      g[2] -= r * p.pi1 * a1.h * c1.dh;
      g[3] += r * pi2 * a2.dh * c2.hc;
      g[4] -= r * pi2 * a2.h * c2.dh;
    }
  }

  CostGradient out;
  if (n == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n);
  out.cost = 0.5 * sse * inv_n;
  if (with_gradient) {
    out.grad[0] = g[0] * inv_n;
    out.grad[1] = g[1] * p.alpha_tau * inv_n;
    out.grad[2] = g[2] * p.alpha_v * inv_n;
    out.grad[3] = g[3] * p.alpha_tau * inv_n;
    out.grad[4] = g[4] * p.alpha_v * inv_n;
  }
  return out;
}

}  // namespace protfit::kernels::scalar
