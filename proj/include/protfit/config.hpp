#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "protfit/evaluation.hpp"
#include "protfit/protection_library.hpp"
#include "protfit/regression.hpp"
#include "protfit/sampling.hpp"

namespace protfit {

/// Command-line overrides applied while loading, before derived seeds are fixed.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
  bool renormalize_fractions = false;
};

struct ProjectConfig {
  std::filesystem::path config_path;
  std::string library_ref;  // as written in the config
  std::filesystem::path library_path;
  ProtectionLibrary library;
  FractionTable fractions;
  bool renormalize_fractions = false;

  SamplerConfig sampler;
  SmoothingConfig smoothing = SmoothingConfig::defaults();
  std::vector<double> continuation_multipliers{0.2, 1.0, 5.0};
  FitConfig fit;
  UncertaintySpec uncertainty;

  std::filesystem::path output_dir{"out"};
  std::uint64_t seed = 1;

  [[nodiscard]] std::vector<std::string> motor_classes() const { return fractions.classes; }
  [[nodiscard]] CompositeProtection composite(const std::string& motor_class) const;

  /// Fully materialized settings, including derived seeds. Excludes the output
  /// directory so reruns into different directories produce identical files.
  [[nodiscard]] Json echo() const;
};

/// Seed of a module when the config does not pin one explicitly.
std::uint64_t derive_seed(std::uint64_t global_seed, const std::string& module);

/// Parses and validates a project config. Relative library paths resolve
/// against the config file's directory.
ProjectConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});
ProjectConfig config_from_json(const Json& j, const std::filesystem::path& base_dir,
                               const ConfigOverrides& overrides = {});

}  // namespace protfit
