// Compiled with -mavx2 -mfma. Nothing here may run before the dispatcher has
// confirmed CPU support.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "kernels_impl.hpp"

namespace protfit::kernels::avx2 {

namespace {

constexpr std::size_t kLanes = 4;

// e^x for x <= 0, Cephes-style Pade approximation after range reduction.
// Relative error is within a few ulp of std::exp; results below e^-708 flush to 0.
inline __m256d exp_nonpositive(__m256d x) {
  const __m256d lower = _mm256_set1_pd(-708.0);
  const __m256d underflow = _mm256_cmp_pd(x, lower, _CMP_LT_OQ);
  x = _mm256_max_pd(x, lower);

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634073599)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125E-1), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212E-6), r);

  const __m256d rr = _mm256_mul_pd(r, r);
  __m256d px = _mm256_fmadd_pd(_mm256_set1_pd(1.26177193074810590878E-4), rr,
                               _mm256_set1_pd(3.02994407707441961300E-2));
  px = _mm256_fmadd_pd(px, rr, _mm256_set1_pd(9.99999999999999999910E-1));
  px = _mm256_mul_pd(px, r);
  __m256d qx = _mm256_fmadd_pd(_mm256_set1_pd(3.00198505138664455042E-6), rr,
                               _mm256_set1_pd(2.52448340349684104192E-3));
  qx = _mm256_fmadd_pd(qx, rr, _mm256_set1_pd(2.27265548208155028766E-1));
  qx = _mm256_fmadd_pd(qx, rr, _mm256_set1_pd(2.00000000000000000009E0));

  const __m256d ratio = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  const __m256d er = _mm256_fmadd_pd(_mm256_set1_pd(2.0), ratio, _mm256_set1_pd(1.0));

  // 2^n via the exponent field; n is in [-1022, 0] here.
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i bits = _mm256_add_epi64(_mm256_cvtepi32_epi64(n32), _mm256_set1_epi64x(1023));
  bits = _mm256_slli_epi64(bits, 52);
  const __m256d result = _mm256_mul_pd(er, _mm256_castsi256_pd(bits));
  return _mm256_andnot_pd(underflow, result);
}

struct Logistic {
  __m256d h;
  __m256d hc;
  __m256d dh;
};

inline Logistic logistic(__m256d z) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d neg_abs = _mm256_or_pd(z, sign_mask);
  const __m256d e = exp_nonpositive(neg_abs);
  const __m256d d = _mm256_div_pd(_mm256_set1_pd(1.0), _mm256_add_pd(_mm256_set1_pd(1.0), e));
  const __m256d ed = _mm256_mul_pd(e, d);
  const __m256d nonneg = _mm256_cmp_pd(z, _mm256_setzero_pd(), _CMP_GE_OQ);
  return Logistic{_mm256_blendv_pd(ed, d, nonneg), _mm256_blendv_pd(d, ed, nonneg),
                  _mm256_mul_pd(ed, d)};
}

inline double hsum(__m256d x) {
  const __m128d lo = _mm256_castpd256_pd128(x);
  const __m128d hi = _mm256_extractf128_pd(x, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline __m256d composite_block(const PackedComposite& c, __m256d tau, __m256d v) {
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t s = 0; s < c.schemes(); ++s) {
    __m256d tripped = _mm256_setzero_pd();
    for (std::uint32_t i = c.offsets[s]; i < c.offsets[s + 1]; ++i) {
      const __m256d late = _mm256_cmp_pd(tau, _mm256_set1_pd(c.step_tau[i]), _CMP_GE_OQ);
      const __m256d deep = _mm256_cmp_pd(v, _mm256_set1_pd(c.step_v[i]), _CMP_LE_OQ);
      tripped = _mm256_or_pd(tripped, _mm256_and_pd(late, deep));
    }
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(tripped, _mm256_set1_pd(c.fraction[s])));
  }
  return acc;
}

}  // namespace

void composite_eval(const PackedComposite& c, std::span<const double> tau,
                    std::span<const double> v, std::span<double> out) {
  const std::size_t n = out.size();
  std::size_t k = 0;
  for (; k + kLanes <= n; k += kLanes) {
    const __m256d t = _mm256_loadu_pd(tau.data() + k);
    const __m256d u = _mm256_loadu_pd(v.data() + k);
    _mm256_storeu_pd(out.data() + k, composite_block(c, t, u));
  }
  if (k < n) {
    alignas(32) double t[kLanes] = {0, 0, 0, 0};
    alignas(32) double u[kLanes] = {0, 0, 0, 0};
    alignas(32) double r[kLanes];
    const std::size_t rem = n - k;
    std::copy_n(tau.data() + k, rem, t);
    std::copy_n(v.data() + k, rem, u);
    _mm256_store_pd(r, composite_block(c, _mm256_load_pd(t), _mm256_load_pd(u)));
    std::copy_n(r, rem, out.data() + k);
  }
}

namespace {

struct SmoothAccumulators {
  __m256d sse = _mm256_setzero_pd();
  __m256d g[5] = {_mm256_setzero_pd(), _mm256_setzero_pd(), _mm256_setzero_pd(),
                  _mm256_setzero_pd(), _mm256_setzero_pd()};
};

inline void smooth_block(const SmoothParams& p, __m256d tau, __m256d v, __m256d y,
                         __m256d valid, bool with_gradient, SmoothAccumulators& acc) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d at = _mm256_set1_pd(p.alpha_tau);
  const __m256d av = _mm256_set1_pd(p.alpha_v);
  const __m256d pi1 = _mm256_set1_pd(p.pi1);
  const __m256d pi2 = _mm256_set1_pd(1.0 - p.pi1);

  const Logistic a1 = logistic(_mm256_mul_pd(at, _mm256_sub_pd(tau, _mm256_set1_pd(p.tau1))));
  const Logistic c1 = logistic(_mm256_mul_pd(av, _mm256_sub_pd(v, _mm256_set1_pd(p.v1))));
  const Logistic a2 = logistic(_mm256_mul_pd(at, _mm256_sub_pd(tau, _mm256_set1_pd(p.tau2))));
  const Logistic c2 = logistic(_mm256_mul_pd(av, _mm256_sub_pd(v, _mm256_set1_pd(p.v2))));
  const __m256d b1 = _mm256_fnmadd_pd(a1.h, c1.hc, one);
  const __m256d b2 = _mm256_fnmadd_pd(a2.h, c2.hc, one);
  __m256d r = _mm256_sub_pd(_mm256_fmadd_pd(pi1, b1, _mm256_mul_pd(pi2, b2)), y);
  r = _mm256_and_pd(r, valid);
  acc.sse = _mm256_fmadd_pd(r, r, acc.sse);
  if (!with_gradient) return;

  const __m256d r1 = _mm256_mul_pd(r, pi1);
  const __m256d r2 = _mm256_mul_pd(r, pi2);
  acc.g[0] = _mm256_fmadd_pd(r, _mm256_sub_pd(b1, b2), acc.g[0]);
  acc.g[1] = _mm256_fmadd_pd(r1, _mm256_mul_pd(a1.dh, c1.hc), acc.g[1]);
  acc.g[2] = _mm256_fnmadd_pd(r1, _mm256_mul_pd(a1.h, c1.dh), acc.g[2]);
  acc.g[3] = _mm256_fmadd_pd(r2, _mm256_mul_pd(a2.dh, c2.hc), acc.g[3]);
  acc.g[4] = _mm256_fnmadd_pd(r2, _mm256_mul_pd(a2.h, c2.dh), acc.g[4]);
}

}  // namespace

CostGradient smooth_cost_grad(const SmoothParams& p, std::span<const double> tau,
                              std::span<const double> v, std::span<const double> y,
                              bool with_gradient) {
  const std::size_t n = y.size();
  CostGradient out;
  if (n == 0) return out;

  SmoothAccumulators acc;
  const __m256d all = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));
  std::size_t k = 0;
  for (; k + kLanes <= n; k += kLanes) {
    smooth_block(p, _mm256_loadu_pd(tau.data() + k), _mm256_loadu_pd(v.data() + k),
                 _mm256_loadu_pd(y.data() + k), all, with_gradient, acc);
  }
  if (k < n) {
    alignas(32) double t[kLanes] = {0, 0, 0, 0};
    alignas(32) double u[kLanes] = {0, 0, 0, 0};
    alignas(32) double w[kLanes] = {0, 0, 0, 0};
    alignas(32) std::int64_t m[kLanes] = {0, 0, 0, 0};
    const std::size_t rem = n - k;
    std::copy_n(tau.data() + k, rem, t);
    std::copy_n(v.data() + k, rem, u);
    std::copy_n(y.data() + k, rem, w);
    std::fill_n(m, rem, std::int64_t{-1});
    const __m256d valid = _mm256_castsi256_pd(_mm256_load_si256(reinterpret_cast<const __m256i*>(m)));
    smooth_block(p, _mm256_load_pd(t), _mm256_load_pd(u), _mm256_load_pd(w), valid, with_gradient,
                 acc);
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  out.cost = 0.5 * hsum(acc.sse) * inv_n;
  if (with_gradient) {
    out.grad[0] = hsum(acc.g[0]) * inv_n;
    out.grad[1] = hsum(acc.g[1]) * p.alpha_tau * inv_n;
    out.grad[2] = hsum(acc.g[2]) * p.alpha_v * inv_n;
    out.grad[3] = hsum(acc.g[3]) * p.alpha_tau * inv_n;
    out.grad[4] = hsum(acc.g[4]) * p.alpha_v * inv_n;
  }
  return out;
}

}  // namespace protfit::kernels::avx2
