#include <cmath>
#include <cstdlib>
#include <vector>

#include "doctest.h"
#include "protfit/kernels/kernels.hpp"
#include "test_support.hpp"

using namespace protfit;
using protfit::kernels::Isa;
using protfit::testing::random_composite;
using protfit::testing::random_point;

namespace {

struct Batch {
  std::vector<double> tau, v, y;
};

Batch random_batch(Rng& rng, std::size_t n) {
  Batch b;
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = random_point(rng);
    b.tau.push_back(p.tau_f);
    b.v.push_back(p.v_f);
    b.y.push_back(rng.uniform() < 0.5 ? 0.0 : rng.uniform());
  }
  return b;
}

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace

TEST_CASE("isa names and selection") {
  CHECK(kernels::isa_name(Isa::scalar) == "scalar");
  CHECK(kernels::isa_name(Isa::avx2) == "avx2");
  CHECK(kernels::isa_supported(Isa::scalar));
  CHECK(kernels::isa_supported(kernels::best_supported_isa()));
  CHECK(kernels::isa_supported(kernels::active_isa()));
}

TEST_CASE("packed composite layout") {
  const ProtectionScheme a("a", TripZone({{0.1, 40.0}, {0.5, 70.0}}));
  const ProtectionScheme b("b", TripZone{});
  const ProtectionScheme c("c", TripZone::rectangle(1.0, 20.0));
  const auto packed = kernels::PackedComposite::from(CompositeProtection({{a, 0.2}, {b, 0.3}, {c, 0.5}}));
  CHECK(packed.schemes() == 3);
  CHECK(packed.offsets == std::vector<std::uint32_t>{0, 2, 2, 3});
  CHECK(packed.step_tau == std::vector<double>{0.1, 0.5, 1.0});
  CHECK(packed.step_v == std::vector<double>{40.0, 70.0, 20.0});
  CHECK(packed.fraction == std::vector<double>{0.2, 0.3, 0.5});
}

TEST_CASE("scalar composite kernel matches the per-point definition") {
  Rng rng = Rng::stream(21, "test-kernel-scalar");
  for (int t = 0; t < 30; ++t) {
    const auto c = random_composite(rng, 1 + rng.below(6), 4);
    const auto packed = kernels::PackedComposite::from(c);
    const auto b = random_batch(rng, 257);
    std::vector<double> out(b.tau.size());
    kernels::composite_eval(Isa::scalar, packed, b.tau, b.v, out);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == composite_F(c, {b.tau[i], b.v[i]}));
  }
}

TEST_CASE("avx2 composite kernel is bit-identical to scalar") {
  if (!kernels::isa_supported(Isa::avx2)) {
    MESSAGE("AVX2 not available on this CPU; equivalence test skipped");
    return;
  }
  Rng rng = Rng::stream(22, "test-kernel-avx2");
  for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 100, 1001}) {
    for (int t = 0; t < 10; ++t) {
      const auto c = random_composite(rng, 1 + rng.below(6), 4);
      const auto packed = kernels::PackedComposite::from(c);
      const auto b = random_batch(rng, n);
      std::vector<double> s(n), a(n);
      kernels::composite_eval(Isa::scalar, packed, b.tau, b.v, s);
      kernels::composite_eval(Isa::avx2, packed, b.tau, b.v, a);
      CHECK(s == a);
    }
  }
}

TEST_CASE("kernel size mismatch is rejected") {
  const auto packed = kernels::PackedComposite::from(CompositeProtection({{ProtectionScheme("a", TripZone{}), 1.0}}));
  std::vector<double> tau(4), v(3), out(4);
  CHECK_THROWS(kernels::composite_eval(Isa::scalar, packed, tau, v, out));
  const kernels::SmoothParams p;
  CHECK_THROWS(kernels::smooth_cost_grad(Isa::scalar, p, tau, v, out, true));
}

TEST_CASE("scalar cost kernel matches a direct two-pass evaluation") {
  Rng rng = Rng::stream(23, "test-cost-scalar");
  for (int t = 0; t < 20; ++t) {
    const auto m = protfit::testing::random_model(rng);
    const SmoothingConfig s{rng.uniform(1.0, 300.0), rng.uniform(0.1, 20.0), {}};
    const auto b = random_batch(rng, 301);
    double sum = 0.0;
    for (std::size_t i = 0; i < b.y.size(); ++i) {
      const double r = smooth_model({b.tau[i], b.v[i]}, m, s) - b.y[i];
      sum += r * r;
    }
    const double expected = sum / (2.0 * static_cast<double>(b.y.size()));
    const kernels::SmoothParams p{m.pi1, m.tau1_star, m.v1_star, m.tau2_star, m.v2_star, s.alpha_tau, s.alpha_v};
    CHECK(rel(kernels::smooth_cost_grad(Isa::scalar, p, b.tau, b.v, b.y, false).cost, expected) < 1e-12);
  }
}

TEST_CASE("avx2 cost and gradient agree with scalar") {
  if (!kernels::isa_supported(Isa::avx2)) {
    MESSAGE("AVX2 not available on this CPU; equivalence test skipped");
    return;
  }
  Rng rng = Rng::stream(24, "test-cost-avx2");
  for (std::size_t n : {1, 2, 3, 4, 5, 6, 7, 8, 9, 31, 200, 1003}) {
    for (int t = 0; t < 10; ++t) {
      const auto m = protfit::testing::random_model(rng);
      // includes extreme steepness, where every logistic saturates
      const double scale = t == 0 ? 1e4 : 1.0;
      const kernels::SmoothParams p{m.pi1, m.tau1_star, m.v1_star, m.tau2_star, m.v2_star,
                                    scale * rng.uniform(1.0, 300.0), scale * rng.uniform(0.1, 20.0)};
      const auto b = random_batch(rng, n);
      const auto s = kernels::smooth_cost_grad(Isa::scalar, p, b.tau, b.v, b.y, true);
      const auto a = kernels::smooth_cost_grad(Isa::avx2, p, b.tau, b.v, b.y, true);
      REQUIRE(std::isfinite(a.cost));
      CHECK(std::abs(a.cost - s.cost) <= 1e-12 * std::max(1e-3, std::abs(s.cost)));
      double gscale = 0.0;
      for (double g : s.grad) gscale = std::max(gscale, std::abs(g));
      for (std::size_t i = 0; i < 5; ++i) {
        REQUIRE(std::isfinite(a.grad[i]));
        CHECK(std::abs(a.grad[i] - s.grad[i]) <= 1e-11 * std::max(gscale, 1e-6));
      }
      const auto a_nograd = kernels::smooth_cost_grad(Isa::avx2, p, b.tau, b.v, b.y, false);
      CHECK(a_nograd.cost == doctest::Approx(a.cost).epsilon(1e-14));
    }
  }
}

TEST_CASE("avx2 logistic path is accurate across the exp range") {
  if (!kernels::isa_supported(Isa::avx2)) {
    MESSAGE("AVX2 not available on this CPU; test skipped");
    return;
  }
  // one point, tau block saturated on, v block swept through the exp range:
  // cost = (pi1 * (1 - h_v) + pi2 - y)^2 / 2 with y = pi2 exposes h_v directly
  for (double z = -745.0; z <= 745.0; z += 0.37) {
    const double v = 50.0;
    const kernels::SmoothParams p{1.0, 0.0, v + z, 5.0, 0.0, 1e6, 1.0};
    const std::vector<double> tau{4.0}, vv{v}, y{0.0};
    const auto s = kernels::smooth_cost_grad(Isa::scalar, p, tau, vv, y, false);
    const auto a = kernels::smooth_cost_grad(Isa::avx2, p, tau, vv, y, false);
    const double hs = 1.0 - std::sqrt(2.0 * s.cost);
    const double ha = 1.0 - std::sqrt(2.0 * a.cost);
    CHECK(std::abs(hs - ha) <= 4e-16);
    const double oracle = 1.0 / (1.0 + std::exp(-z));
    CHECK(std::abs(ha - oracle) <= 1e-15);  // a few ulps, including the sqrt read-back
  }
}
