// protfit: fit simplified two-block protection models to composite motor-load
// protection and analyse their accuracy.
//
//   protfit validate --config data/table1.json
//   protfit fit      --config data/table1.json --motor all --out out/
//   protfit mae      --config data/table1.json --motor A
//   protfit grid     --config data/table1.json --motor A --target fitted --resolution 101
//   protfit sweep    --config data/example1.json --motor EX1

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "protfit/commands.hpp"
#include "protfit/error.hpp"
#include "protfit/format.hpp"

namespace {

constexpr int kExitError = 1;
constexpr int kExitNotConverged = 2;

struct Options {
  std::string config;
  std::string motor = "all";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string resolution = "101";
  std::string target = "true";
  bool renormalize = false;
};

void add_common(CLI::App* cmd, Options& opt, bool with_motor) {
  cmd->add_option("--config", opt.config, "Project config (JSON)")->required()->check(CLI::ExistingFile);
  if (with_motor) cmd->add_option("--motor", opt.motor, "Motor class, or 'all'")->capture_default_str();
  cmd->add_option("--seed", opt.seed, "Override the global seed");
  cmd->add_option("--out", opt.out, "Override the output directory");
  cmd->add_flag("--renormalize", opt.renormalize, "Rescale fraction tables that do not sum to 1");
}

std::vector<std::string> classes_for(const protfit::ProjectConfig& cfg, const std::string& motor) {
  if (motor == "all") return cfg.motor_classes();
  (void)cfg.fractions.class_index(motor);
  return {motor};
}

std::pair<std::size_t, std::size_t> parse_resolution(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) {
      const auto n = std::stoul(text);
      return {n, n};
    }
    return {std::stoul(text.substr(0, x)), std::stoul(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw protfit::ConfigError("--resolution expects N or NTAUxNV, got '" + text + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Composite motor-protection modelling: two-block regression, MAE and uncertainty sweeps"};
  app.require_subcommand(1);
  Options opt;

  auto* validate = app.add_subcommand("validate", "Load and check a config, print resolved fractions");
  add_common(validate, opt, false);
  auto* fit = app.add_subcommand("fit", "Sample, fit the two-block model, write fit and dataset files");
  add_common(fit, opt, true);
  auto* mae = app.add_subcommand("mae", "Score a stored fit against the true composite");
  add_common(mae, opt, true);
  auto* grid = app.add_subcommand("grid", "Write heatmap CSV of the true composite or the fitted model");
  add_common(grid, opt, true);
  grid->add_option("--target", opt.target, "true | fitted")->capture_default_str();
  grid->add_option("--resolution", opt.resolution, "Grid size N or NTAUxNV")->capture_default_str();
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo MAE under load-fraction uncertainty");
  add_common(sweep, opt, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitError;
  }

  try {
    protfit::ConfigOverrides overrides;
    overrides.seed = opt.seed;
    if (opt.out) overrides.output_dir = *opt.out;
    overrides.renormalize_fractions = opt.renormalize;
    const auto cfg = protfit::load_config(opt.config, overrides);

    if (validate->parsed()) {
      std::cout << protfit::cmd_validate(cfg);
      return 0;
    }

    int status = 0;
    for (const auto& motor : classes_for(cfg, opt.motor)) {
      if (fit->parsed()) {
        const auto res = protfit::cmd_fit(cfg, motor);
        const auto& m = res.result.model;
        std::cout << "motor " << motor << ": pi1=" << protfit::format_double(m.pi1)
                  << " tau1*=" << protfit::format_double(m.tau1_star) << "s v1*=" << protfit::format_double(m.v1_star)
                  << "% tau2*=" << protfit::format_double(m.tau2_star) << "s v2*=" << protfit::format_double(m.v2_star)
                  << "% cost=" << protfit::format_double(res.result.final_cost)
                  << " mae=" << protfit::format_double(res.mae.epsilon) << " -> " << res.fit_file.string() << '\n';
        if (!res.result.converged) {
          std::cerr << "warning: motor " << motor << ": solver stopped before reaching tolerance ("
                    << res.result.iterations << " iterations)\n";
          status = kExitNotConverged;
        }
      } else if (mae->parsed()) {
        const auto r = protfit::cmd_mae(cfg, motor);
        std::cout << "motor " << motor << ": mae=" << protfit::format_double(r.epsilon) << " over " << r.m_points
                  << " points\n";
      } else if (grid->parsed()) {
        const auto [n_tau, n_v] = parse_resolution(opt.resolution);
        const auto path = protfit::cmd_grid(cfg, motor, protfit::parse_grid_target(opt.target), n_tau, n_v);
        std::cout << "motor " << motor << ": " << path.string() << '\n';
      } else if (sweep->parsed()) {
        const auto res = protfit::cmd_sweep(cfg, motor);
        std::cout << "motor " << motor << ": nominal mae=" << protfit::format_double(res.sweep.nominal_mae) << '\n';
        for (const auto& lev : res.sweep.levels) {
          std::cout << "  level " << protfit::format_double(lev.level) << ": mean=" << protfit::format_double(lev.mean)
                    << " 75% interval=[" << protfit::format_double(lev.p12_5) << ", "
                    << protfit::format_double(lev.p87_5) << "]";
          if (lev.skipped) std::cout << " skipped=" << lev.skipped;
          std::cout << '\n';
        }
      }
    }
    return status;
  } catch (const protfit::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}
