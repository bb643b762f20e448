#pragma once

// Workflows behind the protfit subcommands. Each writes only inside
// cfg.output_dir and embeds the config echo and seeds in every file.

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "protfit/config.hpp"
#include "protfit/evaluation.hpp"
#include "protfit/regression.hpp"

namespace protfit {

struct FitOutput {
  FitResult result;
  MaeReport mae;
  std::filesystem::path fit_file;
  std::filesystem::path dataset_file;
};

/// Samples training data for the class, fits, scores the hardened model, and
/// writes fit_<class>.json and dataset_<class>.csv.
FitOutput cmd_fit(const ProjectConfig& cfg, const std::string& motor_class);

/// Re-scores fit_<class>.json against the class composite; writes mae_<class>.json.
MaeReport cmd_mae(const ProjectConfig& cfg, const std::string& motor_class);

enum class GridTarget { truth, fitted };

GridTarget parse_grid_target(const std::string& name);

/// Writes grid_<target>_<class>.csv with n_tau x n_v values.
std::filesystem::path cmd_grid(const ProjectConfig& cfg, const std::string& motor_class, GridTarget target,
                               std::size_t n_tau, std::size_t n_v);

struct SweepOutput {
  SweepReport sweep;
  std::vector<std::filesystem::path> files;
};

/// Runs the uncertainty sweep (and the two-target matrix when configured) for
/// the model stored in fit_<class>.json.
SweepOutput cmd_sweep(const ProjectConfig& cfg, const std::string& motor_class);

/// Human-readable summary of the resolved config; throws ConfigError if invalid.
std::string cmd_validate(const ProjectConfig& cfg);

Json fit_result_to_json(const FitResult& r, const MaeReport& mae, const ProjectConfig& cfg,
                        const std::string& motor_class);
/// Reads the model back from a fit file.
SimplifiedModel read_fit_model(const std::filesystem::path& path);

std::filesystem::path fit_file_path(const ProjectConfig& cfg, const std::string& motor_class);

}  // namespace protfit
