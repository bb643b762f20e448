#include "protfit/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "protfit/error.hpp"
#include "protfit/format.hpp"
#include "protfit/kernels/kernels.hpp"

namespace protfit {

namespace {

constexpr std::size_t kMinTrainingPoints = 5;  // free parameters of the two-block model
constexpr double kMinAcceptedArea = 1e-3;

}  // namespace

void SamplerConfig::validate() const {
  if (!(beta_tau > 0.0)) throw ConfigError("sampler.beta_tau must be > 0");
  if (!(beta_v > 0.0)) throw ConfigError("sampler.beta_v must be > 0");
  if (!(weight_threshold >= 0.0 && weight_threshold < 1.0)) {
    throw ConfigError("sampler.weight_threshold must lie in [0, 1)");
  }
  if (n_train < kMinTrainingPoints) throw ConfigError("sampler.n_train must be >= 5");
  if (m_eval < 10 * n_train) throw ConfigError("sampler.m_eval must be >= 10 * n_train");
  if (!(tau_range.lo >= 0.0 && tau_range.hi > tau_range.lo && tau_range.hi <= kTauMax)) {
    throw ConfigError("sampler.tau_range must be an interval inside [0, 5] s");
  }
  if (!(v_range.lo >= 0.0 && v_range.hi > v_range.lo && v_range.hi <= kVoltMax)) {
    throw ConfigError("sampler.v_range must be an interval inside [0, 100] %");
  }
}

void Dataset::add(const FaultPoint& p, double y) {
  tau_.push_back(p.tau_f);
  v_.push_back(p.v_f);
  y_.push_back(y);
}

void Dataset::reserve(std::size_t n) {
  tau_.reserve(n);
  v_.reserve(n);
  y_.reserve(n);
}

double weight(const FaultPoint& p, const SamplerConfig& cfg) {
  const double duration_factor = 1.0 - std::exp(-cfg.beta_tau * p.tau_f);
  const double voltage_factor =
      std::max(0.0, 1.0 - std::exp(-cfg.beta_v * (p.v_f - kTypicalFaultVoltage)));
  return std::clamp(1.0 - duration_factor * voltage_factor, 0.0, 1.0);
}

double accepted_area_fraction(const SamplerConfig& cfg) {
  constexpr int kCells = 200;
  int accepted = 0;
  for (int i = 0; i < kCells; ++i) {
    const double tau = cfg.tau_range.lo + cfg.tau_range.width() * (i + 0.5) / kCells;
    for (int j = 0; j < kCells; ++j) {
      const double v = cfg.v_range.lo + cfg.v_range.width() * (j + 0.5) / kCells;
      if (weight({tau, v}, cfg) >= cfg.weight_threshold) ++accepted;
    }
  }
  return static_cast<double>(accepted) / (kCells * kCells);
}

Dataset label_points(const CompositeProtection& c, std::span<const FaultPoint> points) {
  std::vector<double> tau(points.size()), v(points.size()), y(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    tau[i] = points[i].tau_f;
    v[i] = points[i].v_f;
  }
  kernels::composite_eval(kernels::PackedComposite::from(c), tau, v, y);
  Dataset d;
  d.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) d.add(points[i], y[i]);
  return d;
}

Dataset sample_training(const CompositeProtection& c, const SamplerConfig& cfg) {
  cfg.validate();
  const double area = accepted_area_fraction(cfg);
  if (area < kMinAcceptedArea) {
    std::ostringstream msg;
    msg << "weight threshold " << cfg.weight_threshold << " accepts only " << area * 100.0
        << " % of the sampling box (minimum 0.1 %)";
    throw ConfigError(msg.str());
  }

  Rng rng = Rng::stream(cfg.seed, "training");
  std::vector<FaultPoint> points;
  points.reserve(cfg.n_train);
  const std::size_t max_draws = 100'000 * cfg.n_train;
  for (std::size_t draws = 0; points.size() < cfg.n_train; ++draws) {
    if (draws >= max_draws) throw ConfigError("rejection sampling exhausted its draw budget");
    const FaultPoint p{rng.uniform(cfg.tau_range.lo, cfg.tau_range.hi),
                       rng.uniform(cfg.v_range.lo, cfg.v_range.hi)};
    if (weight(p, cfg) >= cfg.weight_threshold) points.push_back(p);
  }
  return label_points(c, points);
}

std::vector<std::vector<double>> latin_hypercube_unit(std::size_t m, std::size_t dims, Rng& rng) {
  std::vector<std::vector<double>> pts(m, std::vector<double>(dims));
  std::vector<std::size_t> perm(m);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t d = 0; d < dims; ++d) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = m; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    for (std::size_t k = 0; k < m; ++k) {
      pts[k][d] = (static_cast<double>(perm[k]) + rng.uniform()) * inv_m;
    }
  }
  return pts;
}

std::vector<FaultPoint> latin_hypercube(std::size_t m, const SamplerConfig& cfg) {
  if (m == 0) throw ConfigError("latin hypercube needs at least one point");
  Rng rng = Rng::stream(cfg.seed, "evaluation");
  const auto unit = latin_hypercube_unit(m, 2, rng);
  std::vector<FaultPoint> out(m);
  for (std::size_t k = 0; k < m; ++k) {
    out[k] = {cfg.tau_range.lo + cfg.tau_range.width() * unit[k][0],
              cfg.v_range.lo + cfg.v_range.width() * unit[k][1]};
  }
  return out;
}

void write_dataset_csv(std::ostream& os, const Dataset& d, std::span<const std::string> comment_lines) {
  for (const auto& line : comment_lines) os << "# " << line << '\n';
  os << "tau_f_s,v_f_pct,y\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto p = d.point(i);
    os << format_double(p.tau_f) << ',' << format_double(p.v_f) << ',' << format_double(d.label(i))
       << '\n';
  }
}

Dataset read_dataset_csv(std::istream& is) {
  Dataset d;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      std::string compact;
      for (char ch : line) {
        if (ch != ' ' && ch != '\r') compact += ch;
      }
      if (compact != "tau_f_s,v_f_pct,y") {
        throw ConfigError("dataset line " + std::to_string(line_no) +
                          ": expected header tau_f_s,v_f_pct,y");
      }
      header_seen = true;
      continue;
    }
    std::string_view rest(line);
    double cols[3];
    for (int c = 0; c < 3; ++c) {
      const auto comma = rest.find(',');
      if ((c < 2) == (comma == std::string_view::npos)) {
        throw ConfigError("dataset line " + std::to_string(line_no) + ": expected 3 columns");
      }
      try {
        cols[c] = parse_double(rest.substr(0, comma));
      } catch (const ConfigError& e) {
        throw ConfigError("dataset line " + std::to_string(line_no) + ": " + e.what());
      }
      if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
    }
    d.add({cols[0], cols[1]}, cols[2]);
  }
  if (!header_seen) throw ConfigError("dataset has no header row");
  return d;
}

}  // namespace protfit
