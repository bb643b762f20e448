#pragma once

// Spectral projected gradient on the unit box [0,1]^n with a nonmonotone
// Armijo line search (Birgin, Martinez & Raydan). Used internally by fit().

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>

namespace protfit::detail {

struct SpgOptions {
  std::size_t max_iters = 500;
  double grad_tol = 1e-8;
  double step_tol = 1e-10;
  double cost_tol = 1e-10;
  std::size_t stall_window = 50;
  std::size_t memory = 10;
  double armijo = 1e-4;
  double lambda_min = 1e-12;
  double lambda_max = 1e12;
};

template <std::size_t N>
struct SpgResult {
  std::array<double, N> x{};
  double f = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

template <std::size_t N>
std::array<double, N> project_unit(std::array<double, N> x) {
  for (auto& xi : x) xi = std::clamp(xi, 0.0, 1.0);
  return x;
}

template <std::size_t N>
double projected_gradient_norm(const std::array<double, N>& x, const std::array<double, N>& g) {
  double norm = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    norm = std::max(norm, std::abs(std::clamp(x[i] - g[i], 0.0, 1.0) - x[i]));
  }
  return norm;
}

/// `eval(x, g)` returns f(x) and writes the gradient into g.
template <std::size_t N, typename Eval>
SpgResult<N> spg_minimize(Eval&& eval, std::array<double, N> x0, const SpgOptions& opt) {
  using Vec = std::array<double, N>;
  Vec x = project_unit(x0);
  Vec g{};
  double f = eval(x, g);

  SpgResult<N> best{x, f, 0, false};
  std::deque<double> history{f};
  std::deque<double> best_history{f};

  double pg = projected_gradient_norm(x, g);
  double lambda = std::clamp(1.0 / std::max(pg, 1e-300), opt.lambda_min, opt.lambda_max);

  std::size_t k = 0;
  for (; k < opt.max_iters; ++k) {
    pg = projected_gradient_norm(x, g);
    if (pg <= opt.grad_tol) {
      best.converged = true;
      break;
    }

    Vec d{};
    double gd = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      d[i] = std::clamp(x[i] - lambda * g[i], 0.0, 1.0) - x[i];
      gd += g[i] * d[i];
    }
    const double f_ref = *std::max_element(history.begin(), history.end());

    double t = 1.0;
    Vec xn{}, gn{};
    double fn = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < N; ++i) xn[i] = std::clamp(x[i] + t * d[i], 0.0, 1.0);
      fn = eval(xn, gn);
      if (std::isfinite(fn) && fn <= f_ref + opt.armijo * t * gd) {
        accepted = true;
        break;
      }
      // safeguarded quadratic backtrack
      const double denom = 2.0 * (fn - f - t * gd);
      double t_new = (std::isfinite(denom) && denom > 0.0) ? -gd * t * t / denom : 0.5 * t;
      if (!(t_new >= 0.1 * t && t_new <= 0.5 * t)) t_new = 0.5 * t;
      t = t_new;
    }
    if (!accepted) break;

    double sy = 0.0, ss = 0.0, step = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double s = xn[i] - x[i];
      sy += s * (gn[i] - g[i]);
      ss += s * s;
      step = std::max(step, std::abs(s));
    }
    x = xn;
    g = gn;
    f = fn;
    if (f < best.f) {
      best.x = x;
      best.f = f;
    }
    history.push_back(f);
    if (history.size() > opt.memory) history.pop_front();

    best_history.push_back(best.f);
    if (best_history.size() > opt.stall_window + 1) best_history.pop_front();
    const bool stalled = best_history.size() > opt.stall_window &&
                         best_history.front() - best.f <=
                             opt.cost_tol * std::max(std::abs(best.f), std::numeric_limits<double>::min());
    if (step <= opt.step_tol || stalled) {
      best.converged = true;
      ++k;
      break;
    }
    lambda = sy > 0.0 ? std::clamp(ss / sy, opt.lambda_min, opt.lambda_max) : opt.lambda_max;
  }
  best.iterations = k;
  return best;
}

}  // namespace protfit::detail
