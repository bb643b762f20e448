#include "protfit/commands.hpp"

#include <fstream>
#include <sstream>

#include "protfit/error.hpp"
#include "protfit/format.hpp"
#include "protfit/kernels/kernels.hpp"

namespace protfit {

namespace {

constexpr int kJsonIndent = 2;

std::vector<std::string> provenance(const ProjectConfig& cfg, const std::string& motor_class) {
  return {"motor_class: " + motor_class, "seed: " + std::to_string(cfg.seed),
          "config: " + cfg.echo().dump()};
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

void write_comments(std::ostream& os, const std::vector<std::string>& lines) {
  for (const auto& l : lines) os << "# " << l << '\n';
}

Json model_to_json(const SimplifiedModel& m) {
  return Json{{"pi1", m.pi1},
              {"pi2", m.pi2()},
              {"tau1_star_s", m.tau1_star},
              {"v1_star_pct", m.v1_star},
              {"tau2_star_s", m.tau2_star},
              {"v2_star_pct", m.v2_star}};
}

}  // namespace

std::filesystem::path fit_file_path(const ProjectConfig& cfg, const std::string& motor_class) {
  return cfg.output_dir / ("fit_" + motor_class + ".json");
}

Json fit_result_to_json(const FitResult& r, const MaeReport& mae, const ProjectConfig& cfg,
                        const std::string& motor_class) {
  Json starts = Json::array();
  for (const auto& s : r.starts) {
    starts.push_back({{"index", s.index},
                      {"initial", s.initial},
                      {"initial_cost", s.initial_cost},
                      {"final_cost", s.final_cost},
                      {"iterations", s.iterations},
                      {"converged", s.converged}});
  }
  Json j;
  j["motor_class"] = motor_class;
  j["model"] = model_to_json(r.model);
  j["final_cost"] = r.final_cost;
  j["final_steepness"] = {{"alpha_tau_per_s", r.alpha_tau}, {"alpha_v_per_pct", r.alpha_v}};
  j["mae"] = {{"epsilon", mae.epsilon}, {"m_points", mae.m_points}, {"seed", mae.seed}};
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["start_index"] = r.start_index;
  j["starts"] = starts;
  j["seeds"] = {{"global", cfg.seed}, {"sampler", cfg.sampler.seed}, {"fit", cfg.fit.seed}};
  j["kernel_isa"] = std::string(kernels::isa_name(kernels::active_isa()));
  j["config"] = cfg.echo();
  return j;
}

SimplifiedModel read_fit_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("fit result '" + path.string() + "' not found; run `protfit fit` first");
  }
  const Json j = read_json_file(path);
  try {
    const auto& m = j.at("model");
    SimplifiedModel model{m.at("pi1").get<double>(), m.at("tau1_star_s").get<double>(),
                          m.at("v1_star_pct").get<double>(), m.at("tau2_star_s").get<double>(),
                          m.at("v2_star_pct").get<double>()};
    model.validate();
    return model;
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": malformed fit result: " + e.what());
  }
}

FitOutput cmd_fit(const ProjectConfig& cfg, const std::string& motor_class) {
  const auto truth = cfg.composite(motor_class);
  FitOutput out;
  const Dataset data = sample_training(truth, cfg.sampler);
  out.result = fit(data, cfg.smoothing, cfg.fit);
  out.mae = mae(harden(out.result.model), truth, cfg.sampler.m_eval, cfg.sampler.seed);

  out.dataset_file = cfg.output_dir / ("dataset_" + motor_class + ".csv");
  {
    auto os = open_output(out.dataset_file);
    write_dataset_csv(os, data, provenance(cfg, motor_class));
  }
  out.fit_file = fit_file_path(cfg, motor_class);
  {
    auto os = open_output(out.fit_file);
    os << fit_result_to_json(out.result, out.mae, cfg, motor_class).dump(kJsonIndent) << '\n';
  }
  return out;
}

MaeReport cmd_mae(const ProjectConfig& cfg, const std::string& motor_class) {
  const auto model = read_fit_model(fit_file_path(cfg, motor_class));
  const auto report = mae(harden(model), cfg.composite(motor_class), cfg.sampler.m_eval, cfg.sampler.seed);
  auto os = open_output(cfg.output_dir / ("mae_" + motor_class + ".json"));
  Json j{{"motor_class", motor_class},
         {"model", model_to_json(model)},
         {"epsilon", report.epsilon},
         {"m_points", report.m_points},
         {"seed", report.seed},
         {"config", cfg.echo()}};
  os << j.dump(kJsonIndent) << '\n';
  return report;
}

GridTarget parse_grid_target(const std::string& name) {
  if (name == "true" || name == "truth") return GridTarget::truth;
  if (name == "fitted" || name == "fit") return GridTarget::fitted;
  throw ConfigError("grid target must be 'true' or 'fitted', got '" + name + "'");
}

std::filesystem::path cmd_grid(const ProjectConfig& cfg, const std::string& motor_class, GridTarget target,
                               std::size_t n_tau, std::size_t n_v) {
  if (n_tau < 1 || n_v < 1) throw ConfigError("grid resolution must be at least 1 x 1");
  const CompositeProtection composite = target == GridTarget::truth
                                            ? cfg.composite(motor_class)
                                            : harden(read_fit_model(fit_file_path(cfg, motor_class)));
  const auto taus = linspace(cfg.sampler.tau_range.lo, cfg.sampler.tau_range.hi, n_tau);
  const auto volts = linspace(cfg.sampler.v_range.lo, cfg.sampler.v_range.hi, n_v);
  const GridValues grid = grid_evaluate(composite, taus, volts);

  const std::string target_name = target == GridTarget::truth ? "true" : "fitted";
  const auto path = cfg.output_dir / ("grid_" + target_name + "_" + motor_class + ".csv");
  auto os = open_output(path);
  auto comments = provenance(cfg, motor_class);
  comments.push_back("target: " + target_name);
  comments.push_back("rows: tau_f_s, columns: v_f_pct, values: connected fraction");
  write_comments(os, comments);
  os << "tau_f_s\\v_f_pct";
  for (double v : volts) os << ',' << format_double(v);
  os << '\n';
  for (std::size_t i = 0; i < taus.size(); ++i) {
    os << format_double(taus[i]);
    for (std::size_t j = 0; j < volts.size(); ++j) os << ',' << format_double(grid.at(i, j));
    os << '\n';
  }
  return path;
}

SweepOutput cmd_sweep(const ProjectConfig& cfg, const std::string& motor_class) {
  const auto model = read_fit_model(fit_file_path(cfg, motor_class));
  const auto truth = cfg.composite(motor_class);
  std::optional<RefitSettings> refit;
  if (cfg.uncertainty.refit) refit = RefitSettings{cfg.sampler, cfg.smoothing, cfg.fit};

  SweepOutput out;
  out.sweep = uncertainty_sweep(truth, model, cfg.uncertainty, refit);
  auto comments = provenance(cfg, motor_class);
  comments.push_back("nominal_mae: " + format_double(out.sweep.nominal_mae));

  const auto long_path = cfg.output_dir / ("sweep_" + motor_class + "_long.csv");
  {
    auto os = open_output(long_path);
    write_comments(os, comments);
    for (const auto& d : out.sweep.diagnostics) os << "# " << d << '\n';
    os << "level,trial,mae\n";
    for (const auto& lev : out.sweep.levels) {
      for (std::size_t k = 0; k < lev.mae.size(); ++k) {
        os << format_double(lev.level) << ',' << lev.trial[k] << ',' << format_double(lev.mae[k]) << '\n';
      }
    }
  }
  out.files.push_back(long_path);

  const auto summary_path = cfg.output_dir / ("sweep_" + motor_class + "_summary.csv");
  {
    auto os = open_output(summary_path);
    write_comments(os, comments);
    os << "level,mean,p12.5,p87.5\n";
    for (const auto& lev : out.sweep.levels) {
      os << format_double(lev.level) << ',' << format_double(lev.mean) << ',' << format_double(lev.p12_5)
         << ',' << format_double(lev.p87_5) << '\n';
    }
  }
  out.files.push_back(summary_path);

  if (cfg.uncertainty.matrix_targets.size() == 2) {
    const auto matrix = uncertainty_matrix(truth, model, cfg.uncertainty, refit);
    const auto matrix_path = cfg.output_dir / ("sweep_" + motor_class + "_matrix.csv");
    auto os = open_output(matrix_path);
    write_comments(os, comments);
    os << "# rows: gamma level of " << matrix.row_target << ", columns: gamma level of " << matrix.col_target
       << ", values: mean MAE\n";
    os << matrix.row_target << '\\' << matrix.col_target;
    for (double l : matrix.levels) os << ',' << format_double(l);
    os << '\n';
    for (std::size_t i = 0; i < matrix.levels.size(); ++i) {
      os << format_double(matrix.levels[i]);
      for (std::size_t j = 0; j < matrix.levels.size(); ++j) os << ',' << format_double(matrix.at(i, j));
      os << '\n';
    }
    out.files.push_back(matrix_path);
  }
  return out;
}

std::string cmd_validate(const ProjectConfig& cfg) {
  std::ostringstream os;
  os << "library: " << cfg.library_ref << " (" << cfg.library.base_names().size() << " base schemes, "
     << cfg.library.schemes().size() << " schemes total)\n";
  for (const auto& motor_class : cfg.motor_classes()) {
    const auto c = cfg.composite(motor_class);
    os << "motor " << motor_class << ":";
    for (const auto& e : c.entries()) os << ' ' << e.scheme.name() << '=' << format_double(e.fraction);
    os << "  (sum " << format_double(c.fraction_sum()) << ")\n";
  }
  os << "kernels: " << kernels::isa_name(kernels::active_isa()) << '\n';
  return os.str();
}

}  // namespace protfit
