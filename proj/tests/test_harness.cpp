#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ovp/error.hpp"
#include "ovp/harness.hpp"
#include "ovp/rng.hpp"

using namespace ovp;
namespace fs = std::filesystem;

namespace {

const char* kSvConfig = R"({
  "experiment": "SvFractionSweep",
  "ensemble": {"type": "BiLevel", "n": 25, "p": 1.5, "q": 0.5, "r": 0.5},
  "sweep_values": [0.2, 0.6, 0.9],
  "trials": 3,
  "base_seed": 11,
  "tolerances": {"sv_saturation_threshold": 0.5, "sv_saturation_from": 0.9}
})";

ErrorCode config_code(const std::string& text, std::string* message = nullptr) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    if (message != nullptr) *message = e.what();
    return e.code();
  }
  FAIL("config was accepted: " << text);
  return ErrorCode::Io;
}

std::string with(const std::string& base, const std::string& key, const std::string& value) {
  auto j = nlohmann::json::parse(base);
  j[key] = nlohmann::json::parse(value);
  return j.dump();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(OVP_TEST_DATA_DIR) / "harness_scratch";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse_config(kSvConfig);
  CHECK(cfg.experiment == ExperimentKind::SvFractionSweep);
  CHECK(cfg.trials == 3);
  CHECK(cfg.base_seed == 11);
  CHECK(cfg.sweep_values.size() == 3);
  CHECK(cfg.signal.t == 1);
  CHECK(cfg.signal.nu_star == 0.0);
  CHECK(cfg.svm);
  const auto& b = std::get<ensemble::BiLevel>(cfg.ensemble);
  CHECK(b.n == 25);
  const auto swept = std::get<ensemble::BiLevel>(swept_ensemble(cfg, 0.9));
  CHECK(swept.q == 0.9);
  CHECK(required_entries(cfg) == 25.0 * 125.0);
}

TEST_CASE("config errors name the offending field") {
  std::string msg;
  CHECK(config_code(with(kSvConfig, "colour", "\"blue\""), &msg) == ErrorCode::ConfigError);
  CHECK(msg.find("colour") != std::string::npos);
  CHECK(msg.find("unknown key") != std::string::npos);

  auto nested = nlohmann::json::parse(kSvConfig);
  nested["ensemble"]["sigma"] = 0.1;
  CHECK(config_code(nested.dump(), &msg) == ErrorCode::ConfigError);
  CHECK(msg.rfind("ensemble.sigma", 0) == 0);

  CHECK(config_code(with(kSvConfig, "signal", R"({"t": 1, "noise": 0.1})"), &msg) ==
        ErrorCode::ConfigError);
  CHECK(msg.rfind("signal.noise", 0) == 0);

  CHECK(config_code(with(kSvConfig, "trials", "\"many\""), &msg) == ErrorCode::ConfigError);
  CHECK(msg.rfind("trials", 0) == 0);
  CHECK(config_code(with(kSvConfig, "trials", "0"), &msg) == ErrorCode::ConfigError);
  CHECK(config_code(with(kSvConfig, "trials", "2.5"), &msg) == ErrorCode::ConfigError);
  CHECK(config_code(with(kSvConfig, "sweep_values", "[]"), &msg) == ErrorCode::ConfigError);
  CHECK(config_code(with(kSvConfig, "sweep_values", "[0.2, \"x\"]"), &msg) ==
        ErrorCode::ConfigError);
  CHECK(msg.rfind("sweep_values[1]", 0) == 0);
  CHECK(config_code(with(kSvConfig, "sweep_values", "[0.2, 1.2]"), &msg) ==
        ErrorCode::ConfigError);
  CHECK(msg.rfind("sweep_values[1]", 0) == 0);
  CHECK(config_code(with(kSvConfig, "experiment", "\"Nope\""), &msg) == ErrorCode::ConfigError);
  CHECK(config_code(with(kSvConfig, "tolerances", R"({"sv_saturation_from": 0.9})"), &msg) ==
        ErrorCode::ConfigError);
  CHECK(msg.rfind("tolerances.sv_saturation_threshold", 0) == 0);
  CHECK(config_code(with(kSvConfig, "ensemble", R"({"type": "Explicit", "lambdas": [1, 1]})")) ==
        ErrorCode::ConfigError);
  CHECK(config_code(with(kSvConfig, "experiment", "\"MarginSweep\"")) == ErrorCode::ConfigError);
  CHECK(config_code("{not json") == ErrorCode::ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), Error);
}

TEST_CASE("config hash tracks result-affecting fields only") {
  const auto base = parse_config(kSvConfig);
  const auto threads = parse_config(with(kSvConfig, "threads", "4"));
  const auto out = parse_config(with(kSvConfig, "output_path", "\"x.csv\""));
  const auto seed = parse_config(with(kSvConfig, "base_seed", "12"));
  CHECK(config_hash(base) == config_hash(threads));
  CHECK(config_hash(base) == config_hash(out));
  CHECK(config_hash(base) != config_hash(seed));
  // Round trip through the canonical form.
  const auto again = parse_config(canonical_json(base));
  CHECK(canonical_json(again) == canonical_json(base));
}

TEST_CASE("trial seeds") {
  CHECK(trial_seed(5, 2, 3) == derive_seed(derive_seed(5, 2), 3));
  CHECK(trial_seed(5, 2, 3) != trial_seed(5, 3, 2));
}

TEST_CASE("sweep rows arrive in order and are reproducible") {
  auto cfg = parse_config(kSvConfig);
  cfg.threads = 1;
  const auto one = run_experiment(cfg);
  cfg.threads = 3;
  const auto three = run_experiment(cfg);
  REQUIRE(one.size() == 9);
  REQUIRE(three.size() == 9);
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].sweep_value == cfg.sweep_values[i / 3]);
    CHECK(one[i].trial == i % 3);
    CHECK(one[i].seed == trial_seed(11, i / 3, i % 3));
    CHECK(one[i].n == 25);
    CHECK(one[i].d == 125);
    CHECK(csv_line(one[i]) == csv_line(three[i]));
    const auto sv = one[i].get("sv_fraction");
    REQUIRE(sv.has_value());
    CHECK(*sv >= 0.0);
    CHECK(*sv <= 1.0);
  }
}

TEST_CASE("CSV output round trip and sidecar") {
  auto cfg = parse_config(kSvConfig);
  const fs::path out = scratch("sv.csv");
  cfg.output_path = out.string();
  const auto summary = run_to_csv(cfg);
  CHECK(summary.rows == 9);
  CHECK(summary.config_hash == config_hash(cfg));

  const std::string first = slurp(out);
  CHECK(first.rfind(csv_header(), 0) == 0);
  CHECK(first.find(',') != std::string::npos);

  const auto rows = read_csv(out.string());
  const auto direct = run_experiment(cfg);
  REQUIRE(rows.size() == direct.size());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(csv_line(rows[i]) == csv_line(direct[i]));

  cfg.threads = 2;
  run_to_csv(cfg);
  CHECK(slurp(out) == first);

  const auto meta = nlohmann::json::parse(slurp(out.string() + ".meta.json"));
  CHECK(meta.contains("config_hash"));
  CHECK(meta.contains("artifact_version"));
  CHECK(meta.contains("wall_time_seconds"));
  CHECK(meta["rows"] == 9);

  const auto report = verdict(cfg, rows);
  CHECK(report.find("sv_fraction_monotone") != nullptr);
  CHECK(report.find("sv_saturation") != nullptr);
}

TEST_CASE("number formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-300) == "-2.5e-300");
  CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(INFINITY) == "inf");
  CHECK(format_double(-INFINITY) == "-inf");
  for (double v : {0.1, 1.0 / 3.0, 12345.678901234567, 6.02214076e23}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("memory cap") {
  auto cfg = parse_config(kSvConfig);
  cfg.max_entries = 1000;
  try {
    run_experiment(cfg);
    FAIL("expected MemoryCap");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MemoryCap);
  }
}

TEST_CASE("verdicts need complete data") {
  const auto cfg = parse_config(kSvConfig);
  auto rows = run_experiment(cfg);
  auto missing = rows;
  missing.pop_back();
  CHECK_THROWS_AS(verdict(cfg, missing), Error);
  try {
    verdict(cfg, missing);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IncompleteData);
  }
  auto duplicated = rows;
  duplicated.back() = duplicated.front();
  CHECK_THROWS_AS(verdict(cfg, duplicated), Error);
  auto no_metric = rows;
  no_metric[4].metrics.erase("sv_fraction");
  CHECK_THROWS_AS(verdict(cfg, no_metric), Error);
}

TEST_CASE("support-fraction verdict on synthetic medians") {
  const auto cfg = parse_config(kSvConfig);
  auto rows = run_experiment(cfg);
  auto set_all = [&](double a, double b, double c) {
    for (auto& row : rows) {
      const double v = row.sweep_value < 0.5 ? a : (row.sweep_value < 0.8 ? b : c);
      row.set("sv_fraction", v);
    }
  };
  set_all(0.2, 0.6, 1.0);
  auto ok = verdict(cfg, rows);
  CHECK(ok.all_passed());
  set_all(0.2, 0.6, 0.4);
  auto bad = verdict(cfg, rows);
  CHECK_FALSE(bad.find("sv_fraction_monotone")->passed);
  CHECK_FALSE(bad.find("sv_saturation")->passed);
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(median({std::nan(""), 1.0, 5.0}) == 3.0);
  CHECK(std::isnan(median({})));
}

TEST_CASE("every experiment kind runs on a small instance") {
  const char* configs[] = {
      R"({"experiment": "EquivalenceCheck", "ensemble": {"type": "Isotropic", "n": 8, "d": 256},
          "sweep_values": [256], "trials": 3,
          "tolerances": {"coef_gap": 1e-6, "min_all_sv_fraction": 0.6}})",
      R"({"experiment": "RegimeSweepQ",
          "ensemble": {"type": "BiLevel", "n": 25, "p": 1.5, "q": 0.5, "r": 0.5},
          "signal": {"t": 1, "nu_star": 0.1}, "sweep_values": [0.25, 0.9], "trials": 2,
          "n_test": 200,
          "tolerances": {"mse_success_max": 10, "mse_failure_min": 0, "cls_failure_min": 0}})",
      R"({"experiment": "RegimeSweepN",
          "ensemble": {"type": "BiLevel", "n": 25, "p": 1.5, "q": 0.6, "r": 0.5},
          "sweep_values": [16, 25, 36], "trials": 2, "svm": false,
          "tolerances": {"exponent_tol": 5}})",
      R"({"experiment": "MarginSweep", "ensemble": {"type": "WeakFeatures", "n": 8, "d": 64, "sigma": 0.1},
          "sweep_values": [64, 128], "trials": 2, "n_test": 100})",
      R"({"experiment": "MarginSweep", "ensemble": {"type": "Isotropic", "n": 8, "d": 64},
          "sweep_values": [64, 128], "trials": 2, "n_test": 100})",
      R"({"experiment": "FourierSweep",
          "ensemble": {"type": "BiLevel", "n": 25, "p": 1.5, "q": 0.5, "r": 0.5},
          "sweep_values": [0.3, 0.8], "trials": 1, "n_test": 500,
          "tolerances": {"closed_form_tol": 1e-8}})",
      R"({"experiment": "FourierSweep", "ensemble": {"type": "PolyDecay", "n": 9, "d": 45, "m": 1},
          "signal": {"t": 1, "nu_star": 0.1}, "sweep_values": [0, 2], "trials": 2,
          "tolerances": {"closed_form_tol": 1e-8, "all_sv_below_m": 1}})",
  };
  for (const char* text : configs) {
    const std::string label = text;
    CAPTURE(label);
    const auto cfg = parse_config(text);
    const auto rows = run_experiment(cfg);
    CHECK(rows.size() == cfg.sweep_values.size() * cfg.trials);
    for (const auto& row : rows) CHECK(row.experiment == to_string(cfg.experiment));
    const auto report = verdict(cfg, rows);
    CHECK_FALSE(report.checks.empty());
  }
}

TEST_CASE("regime rows carry their classification and both label types") {
  const auto cfg = parse_config(R"({"experiment": "RegimeSweepQ",
      "ensemble": {"type": "BiLevel", "n": 25, "p": 1.5, "q": 0.5, "r": 0.5},
      "sweep_values": [0.25, 0.6, 0.9], "trials": 1,
      "tolerances": {"mse_success_max": 1, "mse_failure_min": 0, "cls_failure_min": 0}})");
  const auto rows = run_experiment(cfg);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].regime == "BothSucceed");
  CHECK(rows[1].regime == "ClassificationOnly");
  CHECK(rows[2].regime == "BothFail");
  for (const auto& row : rows) {
    const double su = *row.get("su");
    const double cn = *row.get("cn");
    CHECK(*row.get("excess_cls_analytic") ==
          doctest::Approx(0.5 - std::atan(su / cn) / std::numbers::pi));
    const double su_real = *row.get("su_real");
    const double cn_real = *row.get("cn_real");
    CHECK(*row.get("excess_mse_analytic") ==
          doctest::Approx((1 - su_real) * (1 - su_real) + cn_real * cn_real));
    CHECK(row.get("sv_fraction").has_value());
    CHECK_FALSE(row.get("mse_hat").has_value());
  }
}
