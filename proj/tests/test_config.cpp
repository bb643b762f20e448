#include <fstream>
#include <string>

#include "doctest.h"
#include "protfit/config.hpp"
#include "protfit/error.hpp"
#include "test_support.hpp"

using namespace protfit;
using protfit::testing::data_dir;
using protfit::testing::fresh_temp_dir;

namespace {

Json table1_json() { return read_json_file(data_dir() / "table1.json"); }

ProjectConfig from(const Json& j) { return config_from_json(j, data_dir()); }

}  // namespace

TEST_CASE("motor class fraction fixture loads with the printed fractions") {
  const auto cfg = load_config(data_dir() / "table1.json");
  CHECK(cfg.motor_classes() == std::vector<std::string>{"A", "B", "C", "D"});

  const auto a = cfg.fractions.column("A");
  REQUIRE(a.size() == 4);
  CHECK(a[0] == std::pair<std::string, double>{"P2-P4", 0.09});
  CHECK(a[1] == std::pair<std::string, double>{"P3-P4", 0.08});
  CHECK(a[2] == std::pair<std::string, double>{"P1-P4-P5", 0.25});
  CHECK(a[3] == std::pair<std::string, double>{"P2-P4-P5", 0.58});

  for (const auto& motor : cfg.motor_classes()) {
    long cents = 0;
    for (const auto& [name, f] : cfg.fractions.column(motor)) cents += std::lround(f * 100.0);
    CHECK(cents == 100);
    CHECK(cfg.composite(motor).fraction_sum() == doctest::Approx(1.0).epsilon(1e-12));
  }

  const auto c = cfg.composite("C");
  REQUIRE(c.size() == 1);
  CHECK(c.entries()[0].scheme.name() == "P2-P5");
  CHECK(c.entries()[0].fraction == 1.0);
}

TEST_CASE("combinations are unions of their base schemes") {
  const auto lib = ProtectionLibrary::load(data_dir() / "protection_library.json");
  const auto combo = lib.resolve("P1-P4-P5");
  const auto p1 = lib.resolve("P1"), p4 = lib.resolve("P4"), p5 = lib.resolve("P5");
  for (double tau : linspace(0.0, 5.0, 101)) {
    for (double v : linspace(0.0, 100.0, 101)) {
      const FaultPoint p{tau, v};
      CHECK(combo.zone().contains(p) ==
            (p1.zone().contains(p) || p4.zone().contains(p) || p5.zone().contains(p)));
    }
  }
  // undefined but well-formed combination names resolve on the fly
  CHECK(lib.resolve("P1-P3").zone().contains({2.5, 60.0}));
  CHECK_THROWS_AS((void)lib.resolve("P1-P9"), ConfigError);
  CHECK_THROWS_AS((void)lib.resolve("Q"), ConfigError);
}

TEST_CASE("derived seeds") {
  const auto cfg = load_config(data_dir() / "table1.json");
  CHECK(cfg.seed == 2019);
  CHECK(cfg.sampler.seed == derive_seed(2019, "sampler"));
  CHECK(cfg.fit.seed == derive_seed(2019, "fit"));
  CHECK(cfg.sampler.seed != cfg.fit.seed);
  CHECK(cfg.uncertainty.eval_seed == cfg.sampler.seed);

  ConfigOverrides o;
  o.seed = 5;
  const auto overridden = load_config(data_dir() / "table1.json", o);
  CHECK(overridden.sampler.seed == derive_seed(5, "sampler"));

  auto j = table1_json();
  j["sampler"]["seed"] = 77;
  CHECK(from(j).sampler.seed == 77);
}

TEST_CASE("config echo excludes the output directory") {
  ConfigOverrides a, b;
  a.output_dir = "/tmp/one";
  b.output_dir = "/tmp/two";
  const auto ca = load_config(data_dir() / "table1.json", a);
  const auto cb = load_config(data_dir() / "table1.json", b);
  CHECK(ca.output_dir != cb.output_dir);
  CHECK(ca.echo().dump() == cb.echo().dump());
  CHECK(ca.echo().contains("sampler"));
  CHECK(ca.echo()["fit"]["seed"] == ca.fit.seed);
}

TEST_CASE("configuration errors") {
  SUBCASE("unknown field") {
    auto j = table1_json();
    j["sampler"]["betatau"] = 1.0;
    CHECK_THROWS_WITH_AS(from(j), doctest::Contains("unknown field 'betatau'"), ConfigError);
  }
  SUBCASE("fractions not summing to one") {
    auto j = table1_json();
    j["fraction_table"]["rows"]["P2-P4"][0] = 0.10;
    CHECK_THROWS_WITH_AS(from(j), doctest::Contains("motor class 'A'"), ConfigError);
    ConfigOverrides o;
    o.renormalize_fractions = true;
    const auto cfg = config_from_json(j, data_dir(), o);
    CHECK(cfg.composite("A").fraction_sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("a class with no fractions") {
    auto j = table1_json();
    j["fraction_table"]["classes"] = {"A", "B", "C", "E"};
    for (auto& [name, row] : j["fraction_table"]["rows"].items()) row[3] = 0.0;
    CHECK_THROWS_WITH_AS(from(j), doctest::Contains("no non-zero fractions"), ConfigError);
  }
  SUBCASE("unknown protection in the table") {
    auto j = table1_json();
    auto& rows = j["fraction_table"]["rows"];
    rows["P9"] = rows["P3"];
    rows.erase("P3");
    CHECK_THROWS_WITH_AS(from(j), doctest::Contains("P9"), ConfigError);
  }
  SUBCASE("invalid sampler settings name the section") {
    auto j = table1_json();
    j["sampler"]["m_eval"] = 100;
    CHECK_THROWS_WITH_AS(from(j), doctest::Contains("sampler"), ConfigError);
  }
  SUBCASE("unknown uncertainty target") {
    auto j = table1_json();
    j["uncertainty"]["targets"] = {"P7"};
    CHECK_THROWS_WITH_AS(from(j), doctest::Contains("P7"), ConfigError);
  }
  SUBCASE("missing library") {
    auto j = table1_json();
    j["library"] = "does_not_exist.json";
    CHECK_THROWS_WITH_AS(from(j), doctest::Contains("does_not_exist.json"), ConfigError);
  }
}

TEST_CASE("library validation") {
  Json lib = read_json_file(data_dir() / "protection_library.json");
  SUBCASE("combination names must be sorted") {
    lib["combinations"]["P5-P2"] = {"P5", "P2"};
    CHECK_THROWS_WITH_AS(ProtectionLibrary::from_json(lib), doctest::Contains("P2-P5"), ConfigError);
  }
  SUBCASE("units are checked") {
    lib["units"]["tau"] = "ms";
    CHECK_THROWS_AS(ProtectionLibrary::from_json(lib), ConfigError);
  }
  SUBCASE("non-monotone staircase") {
    lib["base_schemes"]["P1"]["steps"] = Json::parse(R"([{"tau_s": 0.5, "v_pct": 60}, {"tau_s": 1.0, "v_pct": 40}])");
    CHECK_THROWS_AS(ProtectionLibrary::from_json(lib), ConfigError);
  }
}

TEST_CASE("JSON syntax errors report line and column") {
  const auto dir = fresh_temp_dir("config_syntax");
  const auto path = dir / "broken.json";
  {
    std::ofstream out(path);
    out << "{\n  \"library\": \"x.json\",\n  \"seed\": 1,,\n}\n";
  }
  CHECK_THROWS_WITH_AS(load_config(path), doctest::Contains("broken.json:3:"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_json_text("[1, 2", "inline"), doctest::Contains("inline:1:"), ConfigError);
}

TEST_CASE("inline library and fraction table from the library") {
  Json lib = read_json_file(data_dir() / "protection_library.json");
  lib["fraction_table"] = Json::parse(R"({"classes": ["X"], "rows": {"P1": [0.5], "P2-P4": [0.5]}})");
  const Json j{{"library", lib}, {"seed", 3}};
  const auto cfg = config_from_json(j, data_dir());
  CHECK(cfg.library_ref == "<inline>");
  CHECK(cfg.motor_classes() == std::vector<std::string>{"X"});
  CHECK(cfg.composite("X").size() == 2);
  CHECK_THROWS_AS((void)cfg.composite("Y"), ConfigError);
}

TEST_CASE("Example 1 fixture") {
  const auto cfg = load_config(data_dir() / "example1.json");
  const auto c = cfg.composite("EX1");
  CHECK(c.size() == 5);
  CHECK(cfg.uncertainty.matrix_targets.size() == 2);
  CHECK(cfg.uncertainty.gamma_levels.size() == 8);
  CHECK(cfg.uncertainty.trials == 200);
}
