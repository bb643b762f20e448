#include "protfit/protection_library.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "protfit/error.hpp"

namespace protfit {

namespace {

double number_field(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

std::vector<std::string> split_name(const std::string& name) {
  std::vector<std::string> parts;
  std::stringstream ss(name);
  std::string part;
  while (std::getline(ss, part, '-')) parts.push_back(part);
  return parts;
}

}  // namespace

Json trip_zone_to_json(const TripZone& zone) {
  Json steps = Json::array();
  for (const auto& s : zone.steps()) steps.push_back({{"tau_s", s.tau_break}, {"v_pct", s.v_threshold}});
  return Json{{"steps", steps}};
}

TripZone trip_zone_from_json(const Json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("steps") || !j.at("steps").is_array()) {
    throw ConfigError(where + ": expected an object with a 'steps' array");
  }
  std::vector<TripStep> steps;
  std::size_t i = 0;
  for (const auto& s : j.at("steps")) {
    const std::string at = where + ".steps[" + std::to_string(i++) + "]";
    if (!s.is_object()) throw ConfigError(at + ": expected {\"tau_s\": ..., \"v_pct\": ...}");
    steps.push_back({number_field(s, "tau_s", at), number_field(s, "v_pct", at)});
  }
  try {
    return TripZone(std::move(steps));
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

std::size_t FractionTable::class_index(const std::string& motor_class) const {
  const auto it = std::find(classes.begin(), classes.end(), motor_class);
  if (it == classes.end()) throw ConfigError("unknown motor class '" + motor_class + "'");
  return static_cast<std::size_t>(it - classes.begin());
}

std::vector<std::pair<std::string, double>> FractionTable::column(const std::string& motor_class) const {
  const std::size_t k = class_index(motor_class);
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [name, values] : rows) {
    if (values[k] != 0.0) out.emplace_back(name, values[k]);
  }
  return out;
}

FractionTable FractionTable::from_json(const Json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  FractionTable t;
  if (!j.contains("classes") || !j.at("classes").is_array() || j.at("classes").empty()) {
    throw ConfigError(where + ".classes: expected a non-empty array of class names");
  }
  for (const auto& c : j.at("classes")) {
    if (!c.is_string()) throw ConfigError(where + ".classes: expected strings");
    t.classes.push_back(c.get<std::string>());
  }
  if (!j.contains("rows") || !j.at("rows").is_object()) {
    throw ConfigError(where + ".rows: expected an object keyed by protection name");
  }
  for (const auto& [name, values] : j.at("rows").items()) {
    const std::string at = where + ".rows." + name;
    if (!values.is_array() || values.size() != t.classes.size()) {
      throw ConfigError(at + ": expected " + std::to_string(t.classes.size()) + " fractions");
    }
    std::vector<double> row;
    for (const auto& v : values) {
      if (!v.is_number()) throw ConfigError(at + ": fractions must be numbers");
      const double x = v.get<double>();
      if (!(x >= 0.0 && x <= 1.0)) throw ConfigError(at + ": fractions must lie in [0, 1]");
      row.push_back(x);
    }
    t.rows.emplace_back(name, std::move(row));
  }
  return t;
}

Json FractionTable::to_json() const {
  Json rows_json = Json::object();
  for (const auto& [name, values] : rows) rows_json[name] = values;
  return Json{{"classes", classes}, {"rows", rows_json}};
}

ProtectionLibrary ProtectionLibrary::from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("protection library: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key != "units" && key != "base_schemes" && key != "combinations" && key != "fraction_table" &&
        key != "description") {
      throw ConfigError("protection library: unknown field '" + key + "'");
    }
  }
  if (j.contains("units")) {
    const auto& u = j.at("units");
    const bool ok = u.is_object() && u.value("tau", "") == "s" &&
                    (u.value("v", "") == "percent" || u.value("v", "") == "%");
    if (!ok) throw ConfigError("protection library: units must be {\"tau\": \"s\", \"v\": \"percent\"}");
  }

  ProtectionLibrary lib;
  if (!j.contains("base_schemes") || !j.at("base_schemes").is_object()) {
    throw ConfigError("protection library: missing object 'base_schemes'");
  }
  for (const auto& [name, body] : j.at("base_schemes").items()) {
    if (name.empty() || name.find('-') != std::string::npos) {
      throw ConfigError("protection library: base scheme name '" + name + "' must be non-empty without '-'");
    }
    lib.schemes_.emplace(name, ProtectionScheme(name, trip_zone_from_json(body, "base_schemes." + name)));
    lib.base_names_.push_back(name);
  }

  if (j.contains("combinations")) {
    if (!j.at("combinations").is_object()) throw ConfigError("protection library: 'combinations' must be an object");
    for (const auto& [name, parts] : j.at("combinations").items()) {
      const std::string at = "combinations." + name;
      if (!parts.is_array() || parts.empty()) throw ConfigError(at + ": expected a list of base scheme names");
      std::vector<std::string> names;
      std::vector<TripZone> zones;
      for (const auto& p : parts) {
        if (!p.is_string()) throw ConfigError(at + ": expected base scheme names");
        const auto part = p.get<std::string>();
        if (std::find(lib.base_names_.begin(), lib.base_names_.end(), part) == lib.base_names_.end()) {
          throw ConfigError(at + ": unknown base scheme '" + part + "'");
        }
        names.push_back(part);
        zones.push_back(lib.schemes_.at(part).zone());
      }
      if (combination_name(names) != name) {
        throw ConfigError(at + ": name must be the sorted hyphen-join '" + combination_name(names) + "'");
      }
      if (lib.schemes_.count(name)) throw ConfigError(at + ": duplicate scheme name");
      lib.schemes_.emplace(name, ProtectionScheme(name, series_combine(zones)));
    }
  }

  if (j.contains("fraction_table")) lib.table_ = FractionTable::from_json(j.at("fraction_table"), "fraction_table");
  return lib;
}

ProtectionLibrary ProtectionLibrary::load(const std::filesystem::path& path) {
  try {
    return from_json(read_json_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

bool ProtectionLibrary::contains(const std::string& name) const {
  try {
    (void)resolve(name);
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

ProtectionScheme ProtectionLibrary::resolve(const std::string& name) const {
  if (auto it = schemes_.find(name); it != schemes_.end()) return it->second;
  const auto parts = split_name(name);
  if (parts.size() > 1 && combination_name(parts) == name) {
    std::vector<TripZone> zones;
    for (const auto& p : parts) {
      auto it = schemes_.find(p);
      if (it == schemes_.end() ||
          std::find(base_names_.begin(), base_names_.end(), p) == base_names_.end()) {
        throw ConfigError("protection '" + name + "' refers to unknown base scheme '" + p + "'");
      }
      zones.push_back(it->second.zone());
    }
    return ProtectionScheme(name, series_combine(zones));
  }
  throw ConfigError("unknown protection '" + name + "'");
}

CompositeProtection ProtectionLibrary::composite(const FractionTable& table, const std::string& motor_class,
                                                 bool renormalize) const {
  const auto column = table.column(motor_class);
  if (column.empty()) throw ConfigError("motor class '" + motor_class + "' has no non-zero fractions");
  double sum = 0.0;
  for (const auto& [name, fraction] : column) sum += fraction;
  std::vector<CompositeEntry> entries;
  for (const auto& [name, fraction] : column) {
    entries.push_back({resolve(name), renormalize ? fraction / sum : fraction});
  }
  try {
    return CompositeProtection(std::move(entries));
  } catch (const ConfigError& e) {
    throw ConfigError("motor class '" + motor_class + "': " + e.what());
  }
}

Json parse_json_text(const std::string& text, const std::string& source_name) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(source_name + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": JSON syntax error: " + e.what());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str(), path.string());
}

}  // namespace protfit
