#include "protfit/config.hpp"

#include <algorithm>
#include <cstdint>
#include <initializer_list>

#include "protfit/error.hpp"
#include "protfit/rng.hpp"

namespace protfit {

namespace {

void check_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!known) throw ConfigError(where + ": unknown field '" + key + "'");
  }
}

std::string field_path(const std::string& where, const char* key) {
  return where.empty() ? std::string(key) : where + "." + key;
}

double read_number(const Json& obj, const char* key, const std::string& where, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(field_path(where, key) + ": expected a number");
  return v.get<double>();
}

bool is_non_negative_integer(const Json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::size_t read_count(const Json& obj, const char* key, const std::string& where, std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!is_non_negative_integer(v)) throw ConfigError(field_path(where, key) + ": expected a non-negative integer");
  return v.get<std::size_t>();
}

std::optional<std::uint64_t> read_seed(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) return std::nullopt;
  const auto& v = obj.at(key);
  if (!is_non_negative_integer(v)) throw ConfigError(field_path(where, key) + ": expected a non-negative integer seed");
  return v.get<std::uint64_t>();
}

bool read_bool(const Json& obj, const char* key, const std::string& where, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(field_path(where, key) + ": expected true or false");
  return v.get<bool>();
}

std::vector<double> read_numbers(const Json& obj, const char* key, const std::string& where,
                                 std::vector<double> fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_array()) throw ConfigError(field_path(where, key) + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(field_path(where, key) + ": expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<std::string> read_strings(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) return {};
  const auto& v = obj.at(key);
  if (!v.is_array()) throw ConfigError(field_path(where, key) + ": expected an array of names");
  std::vector<std::string> out;
  for (const auto& x : v) {
    if (!x.is_string()) throw ConfigError(field_path(where, key) + ": expected an array of names");
    out.push_back(x.get<std::string>());
  }
  return out;
}

Range read_range(const Json& obj, const char* key, const std::string& where, Range fallback) {
  if (!obj.contains(key)) return fallback;
  const auto values = read_numbers(obj, key, where, {});
  if (values.size() != 2) throw ConfigError(field_path(where, key) + ": expected [lo, hi]");
  return {values[0], values[1]};
}

const Json& section(const Json& root, const char* key) {
  static const Json empty = Json::object();
  return root.contains(key) ? root.at(key) : empty;
}

template <typename Validate>
void validated(const std::string& where, Validate&& validate) {
  try {
    validate();
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t global_seed, const std::string& module) {
  return mix64(global_seed ^ hash_name(module));
}

CompositeProtection ProjectConfig::composite(const std::string& motor_class) const {
  return library.composite(fractions, motor_class, renormalize_fractions);
}

Json ProjectConfig::echo() const {
  Json j;
  j["library"] = library_ref;
  j["fraction_table"] = fractions.to_json();
  j["renormalize_fractions"] = renormalize_fractions;
  j["seed"] = seed;
  j["sampler"] = {{"beta_tau", sampler.beta_tau},
                  {"beta_v", sampler.beta_v},
                  {"weight_threshold", sampler.weight_threshold},
                  {"n_train", sampler.n_train},
                  {"m_eval", sampler.m_eval},
                  {"tau_range", {sampler.tau_range.lo, sampler.tau_range.hi}},
                  {"v_range", {sampler.v_range.lo, sampler.v_range.hi}},
                  {"seed", sampler.seed}};
  j["smoothing"] = {{"alpha_tau", smoothing.alpha_tau},
                    {"alpha_v", smoothing.alpha_v},
                    {"continuation", continuation_multipliers}};
  j["fit"] = {{"n_starts", fit.n_starts},
              {"max_iters", fit.max_iters},
              {"grad_tol", fit.grad_tol},
              {"param_tol", fit.param_tol},
              {"cost_tol", fit.cost_tol},
              {"seed", fit.seed}};
  j["uncertainty"] = {{"levels", uncertainty.gamma_levels},
                      {"targets", uncertainty.targets},
                      {"matrix_targets", uncertainty.matrix_targets},
                      {"trials", uncertainty.trials},
                      {"refit", uncertainty.refit},
                      {"renormalize", uncertainty.renormalize},
                      {"seed", uncertainty.seed},
                      {"eval_seed", uncertainty.eval_seed}};
  return j;
}

ProjectConfig config_from_json(const Json& j, const std::filesystem::path& base_dir,
                               const ConfigOverrides& overrides) {
  check_keys(j,
             {"description", "library", "fraction_table", "renormalize_fractions", "seed", "output_dir",
              "sampler", "smoothing", "fit", "uncertainty"},
             "config");
  ProjectConfig cfg;

  if (!j.contains("library")) throw ConfigError("config: missing field 'library'");
  const auto& lib = j.at("library");
  if (lib.is_string()) {
    cfg.library_ref = lib.get<std::string>();
    cfg.library_path = base_dir / cfg.library_ref;
    cfg.library = ProtectionLibrary::load(cfg.library_path);
  } else if (lib.is_object()) {
    cfg.library_ref = "<inline>";
    validated("library", [&] { cfg.library = ProtectionLibrary::from_json(lib); });
  } else {
    throw ConfigError("library: expected a file path or an inline library object");
  }

  if (j.contains("fraction_table")) {
    cfg.fractions = FractionTable::from_json(j.at("fraction_table"), "fraction_table");
  } else if (cfg.library.fraction_table()) {
    cfg.fractions = *cfg.library.fraction_table();
  } else {
    throw ConfigError("config: no fraction_table in the config or the protection library");
  }
  cfg.renormalize_fractions =
      overrides.renormalize_fractions || read_bool(j, "renormalize_fractions", "", false);

  cfg.seed = overrides.seed ? *overrides.seed : read_seed(j, "seed", "").value_or(1);
  if (overrides.output_dir) {
    cfg.output_dir = *overrides.output_dir;
  } else if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) throw ConfigError("output_dir: expected a path");
    cfg.output_dir = j.at("output_dir").get<std::string>();
  }

  const Json& smp = section(j, "sampler");
  check_keys(smp, {"beta_tau", "beta_v", "weight_threshold", "n_train", "m_eval", "tau_range", "v_range", "seed"},
             "sampler");
  auto& s = cfg.sampler;
  s.beta_tau = read_number(smp, "beta_tau", "sampler", s.beta_tau);
  s.beta_v = read_number(smp, "beta_v", "sampler", s.beta_v);
  s.weight_threshold = read_number(smp, "weight_threshold", "sampler", s.weight_threshold);
  s.n_train = read_count(smp, "n_train", "sampler", s.n_train);
  s.m_eval = read_count(smp, "m_eval", "sampler", s.m_eval);
  s.tau_range = read_range(smp, "tau_range", "sampler", s.tau_range);
  s.v_range = read_range(smp, "v_range", "sampler", s.v_range);
  s.seed = read_seed(smp, "seed", "sampler").value_or(derive_seed(cfg.seed, "sampler"));
  validated("sampler", [&] { s.validate(); });

  const Json& sm = section(j, "smoothing");
  check_keys(sm, {"alpha_tau", "alpha_v", "continuation"}, "smoothing");
  const double alpha_tau = read_number(sm, "alpha_tau", "smoothing", 50.0);
  const double alpha_v = read_number(sm, "alpha_v", "smoothing", 2.0);
  cfg.continuation_multipliers = read_numbers(sm, "continuation", "smoothing", cfg.continuation_multipliers);
  cfg.smoothing = SmoothingConfig::with_multipliers(alpha_tau, alpha_v, cfg.continuation_multipliers);
  validated("smoothing", [&] { cfg.smoothing.validate(); });

  const Json& ft = section(j, "fit");
  check_keys(ft, {"n_starts", "max_iters", "grad_tol", "param_tol", "cost_tol", "seed"}, "fit");
  auto& f = cfg.fit;
  f.n_starts = read_count(ft, "n_starts", "fit", f.n_starts);
  f.max_iters = read_count(ft, "max_iters", "fit", f.max_iters);
  f.grad_tol = read_number(ft, "grad_tol", "fit", f.grad_tol);
  f.param_tol = read_number(ft, "param_tol", "fit", f.param_tol);
  f.cost_tol = read_number(ft, "cost_tol", "fit", f.cost_tol);
  f.seed = read_seed(ft, "seed", "fit").value_or(derive_seed(cfg.seed, "fit"));
  validated("fit", [&] { f.validate(); });

  const Json& un = section(j, "uncertainty");
  check_keys(un, {"levels", "targets", "matrix_targets", "trials", "refit", "renormalize", "seed", "eval_seed"},
             "uncertainty");
  auto& u = cfg.uncertainty;
  u.gamma_levels = read_numbers(un, "levels", "uncertainty", u.gamma_levels);
  u.targets = read_strings(un, "targets", "uncertainty");
  u.matrix_targets = read_strings(un, "matrix_targets", "uncertainty");
  u.trials = read_count(un, "trials", "uncertainty", u.trials);
  u.refit = read_bool(un, "refit", "uncertainty", u.refit);
  u.renormalize = read_bool(un, "renormalize", "uncertainty", u.renormalize);
  u.m_eval = cfg.sampler.m_eval;
  u.seed = read_seed(un, "seed", "uncertainty").value_or(derive_seed(cfg.seed, "uncertainty"));
  // the sweep scores on the same points as the fit's reported MAE unless pinned
  u.eval_seed = read_seed(un, "eval_seed", "uncertainty").value_or(cfg.sampler.seed);
  validated("uncertainty", [&] { u.validate(); });

  // Every class must form a valid composite.
  for (const auto& motor_class : cfg.fractions.classes) (void)cfg.composite(motor_class);
  for (const auto& names : {u.targets, u.matrix_targets}) {
    for (const auto& name : names) {
      if (!cfg.library.contains(name)) throw ConfigError("uncertainty: unknown protection '" + name + "'");
    }
  }
  return cfg;
}

ProjectConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  const Json j = read_json_file(path);
  try {
    auto cfg = config_from_json(j, path.parent_path(), overrides);
    cfg.config_path = path;
    return cfg;
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace protfit
