#pragma once

// Protection-library file: base protection schemes as staircases, named series
// combinations, and an optional per-motor-class fraction table.
//
//   {
//     "units": {"tau": "s", "v": "percent"},
//     "base_schemes": {"P1": {"steps": [{"tau_s": 0.05, "v_pct": 45}]}, ...},
//     "combinations": {"P1-P4-P5": ["P1", "P4", "P5"], ...},
//     "fraction_table": {"classes": ["A", "B", "C", "D"],
//                        "rows": {"P2-P4": [0.09, 0.08, 0.00, 0.00], ...}}
//   }

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "protfit/protection.hpp"

namespace protfit {

using Json = nlohmann::ordered_json;

/// Fractions per protection combination, one column per motor class.
struct FractionTable {
  std::vector<std::string> classes;
  std::vector<std::pair<std::string, std::vector<double>>> rows;  // file order

  [[nodiscard]] std::size_t class_index(const std::string& motor_class) const;
  /// Fractions of one class with zero entries dropped, in row order.
  [[nodiscard]] std::vector<std::pair<std::string, double>> column(const std::string& motor_class) const;

  static FractionTable from_json(const Json& j, const std::string& where);
  [[nodiscard]] Json to_json() const;
};

class ProtectionLibrary {
 public:
  static ProtectionLibrary from_json(const Json& j);
  static ProtectionLibrary load(const std::filesystem::path& path);

  /// Defined scheme or combination. An undefined hyphenated name whose parts are
  /// all base schemes resolves to their series combination.
  [[nodiscard]] ProtectionScheme resolve(const std::string& name) const;
  [[nodiscard]] bool contains(const std::string& name) const;

  [[nodiscard]] const std::map<std::string, ProtectionScheme>& schemes() const { return schemes_; }
  [[nodiscard]] const std::vector<std::string>& base_names() const { return base_names_; }
  [[nodiscard]] const std::optional<FractionTable>& fraction_table() const { return table_; }

  /// Composite for one motor class of `table` (entries with zero fraction dropped).
  [[nodiscard]] CompositeProtection composite(const FractionTable& table, const std::string& motor_class,
                                              bool renormalize = false) const;

 private:
  std::map<std::string, ProtectionScheme> schemes_;
  std::vector<std::string> base_names_;
  std::optional<FractionTable> table_;
};

Json trip_zone_to_json(const TripZone& zone);
TripZone trip_zone_from_json(const Json& j, const std::string& where);

/// Parses JSON text; syntax errors report the line and column.
Json parse_json_text(const std::string& text, const std::string& source_name);
Json read_json_file(const std::filesystem::path& path);

}  // namespace protfit
