#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ovp/error.hpp"
#include "ovp/fourier.hpp"
#include "ovp/harness.hpp"
#include "ovp/rng.hpp"

namespace ovp {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ConfigError, path + ": " + what);
}

// Reads fields from one JSON object and rejects any key it was not asked for.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path)
      : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) config_error(path_, "expected an object");
  }

  std::string field_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) config_error(field_path(key), "missing required field");
    return *v;
  }

  double number(const std::string& key, std::optional<double> fallback = {}) {
    const json* v = fallback ? find(key) : &require(key);
    if (v == nullptr) return *fallback;
    if (!v->is_number()) config_error(field_path(key), "expected a number");
    return v->get<double>();
  }

  std::uint64_t count(const std::string& key,
                      std::optional<std::uint64_t> fallback = {}) {
    const json* v = fallback ? find(key) : &require(key);
    if (v == nullptr) return *fallback;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer()) {
      config_error(field_path(key), "expected a non-negative integer");
    }
    if (v->is_number_float()) {
      const double x = v->get<double>();
      if (x >= 0.0 && x == std::floor(x) && x < 1.8e19) {
        return static_cast<std::uint64_t>(x);
      }
    }
    config_error(field_path(key), "expected a non-negative integer");
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = {}) {
    const json* v = fallback ? find(key) : &require(key);
    if (v == nullptr) return *fallback;
    if (!v->is_string()) config_error(field_path(key), "expected a string");
    return v->get<std::string>();
  }

  bool flag(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) config_error(field_path(key), "expected a boolean");
    return v->get<bool>();
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) config_error(field_path(key), "unknown key");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

std::optional<ExperimentKind> parse_kind(const std::string& name) {
  for (auto kind : {ExperimentKind::SvFractionSweep, ExperimentKind::RegimeSweepQ,
                    ExperimentKind::RegimeSweepN, ExperimentKind::MarginSweep,
                    ExperimentKind::FourierSweep, ExperimentKind::EquivalenceCheck}) {
    if (name == to_string(kind)) return kind;
  }
  return std::nullopt;
}

EnsembleSpec read_ensemble(const json& node, const std::string& path) {
  ObjectReader in(node, path);
  const std::string type = in.text("type");
  EnsembleSpec spec;
  if (type == "Isotropic") {
    spec = ensemble::Isotropic{in.count("n"), in.count("d")};
  } else if (type == "BiLevel") {
    ensemble::BiLevel b;
    b.n = in.count("n");
    b.p = in.number("p");
    b.q = in.number("q");
    b.r = in.number("r");
    spec = b;
  } else if (type == "WeakFeatures") {
    ensemble::WeakFeatures w;
    w.n = in.count("n");
    w.d = in.count("d");
    w.sigma = in.number("sigma");
    spec = w;
  } else if (type == "PolyDecay") {
    ensemble::PolyDecay m;
    m.n = in.count("n");
    m.d = in.count("d");
    m.m = in.number("m");
    spec = m;
  } else if (type == "Explicit") {
    const json& values = in.require("lambdas");
    if (!values.is_array()) config_error(in.field_path("lambdas"), "expected an array");
    ensemble::Explicit e;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!values[i].is_number()) {
        config_error(in.field_path("lambdas") + "[" + std::to_string(i) + "]",
                     "expected a number");
      }
      e.lambdas.push_back(values[i].get<double>());
    }
    spec = e;
  } else {
    config_error(in.field_path("type"), "unknown ensemble type '" + type + "'");
  }
  in.finish();
  try {
    validate(spec);
  } catch (const Error& e) {
    config_error(path, e.what());
  }
  return spec;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed JSON: ") + e.what());
  }
}

bool is_integral(double x) { return x >= 0.0 && x == std::floor(x); }

const char* swept_field(ExperimentKind kind, const EnsembleSpec& spec) {
  using K = ExperimentKind;
  if (std::holds_alternative<ensemble::BiLevel>(spec)) {
    if (kind == K::RegimeSweepN) return "n";
    if (kind == K::SvFractionSweep || kind == K::RegimeSweepQ || kind == K::FourierSweep) {
      return "q";
    }
    return nullptr;
  }
  if (std::holds_alternative<ensemble::Isotropic>(spec)) {
    if (kind == K::SvFractionSweep || kind == K::MarginSweep ||
        kind == K::EquivalenceCheck) {
      return "d";
    }
    return nullptr;
  }
  if (std::holds_alternative<ensemble::WeakFeatures>(spec)) {
    if (kind == K::SvFractionSweep || kind == K::MarginSweep) return "d";
    return nullptr;
  }
  if (std::holds_alternative<ensemble::PolyDecay>(spec)) {
    if (kind == K::SvFractionSweep || kind == K::FourierSweep) return "m";
    return nullptr;
  }
  return nullptr;
}

json ensemble_json(const EnsembleSpec& spec) {
  if (const auto* e = std::get_if<ensemble::Isotropic>(&spec)) {
    return {{"type", "Isotropic"}, {"n", e->n}, {"d", e->d}};
  }
  if (const auto* e = std::get_if<ensemble::BiLevel>(&spec)) {
    return {{"type", "BiLevel"}, {"n", e->n}, {"p", e->p}, {"q", e->q}, {"r", e->r}};
  }
  if (const auto* e = std::get_if<ensemble::WeakFeatures>(&spec)) {
    return {{"type", "WeakFeatures"}, {"n", e->n}, {"d", e->d}, {"sigma", e->sigma}};
  }
  if (const auto* e = std::get_if<ensemble::PolyDecay>(&spec)) {
    return {{"type", "PolyDecay"}, {"n", e->n}, {"d", e->d}, {"m", e->m}};
  }
  const auto& e = std::get<ensemble::Explicit>(spec);
  return {{"type", "Explicit"}, {"lambdas", e.lambdas}};
}

}  // namespace

const char* to_string(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::SvFractionSweep: return "SvFractionSweep";
    case ExperimentKind::RegimeSweepQ: return "RegimeSweepQ";
    case ExperimentKind::RegimeSweepN: return "RegimeSweepN";
    case ExperimentKind::MarginSweep: return "MarginSweep";
    case ExperimentKind::FourierSweep: return "FourierSweep";
    case ExperimentKind::EquivalenceCheck: return "EquivalenceCheck";
  }
  return "Unknown";
}

std::vector<std::string> required_tolerances(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::SvFractionSweep:
      return {"sv_saturation_threshold", "sv_saturation_from"};
    case ExperimentKind::RegimeSweepQ:
      return {"mse_success_max", "mse_failure_min", "cls_failure_min"};
    case ExperimentKind::EquivalenceCheck:
      return {"coef_gap", "min_all_sv_fraction"};
    case ExperimentKind::FourierSweep:
      return {"closed_form_tol"};
    case ExperimentKind::RegimeSweepN:
    case ExperimentKind::MarginSweep:
      return {};
  }
  return {};
}

EnsembleSpec parse_ensemble(const std::string& json_text) {
  return read_ensemble(parse_json(json_text), "ensemble");
}

ExperimentConfig parse_config(const std::string& json_text) {
  const json root = parse_json(json_text);
  ObjectReader in(root, "");
  ExperimentConfig cfg;

  const std::string kind = in.text("experiment");
  const auto parsed = parse_kind(kind);
  if (!parsed) config_error("experiment", "unknown experiment '" + kind + "'");
  cfg.experiment = *parsed;

  cfg.ensemble = read_ensemble(in.require("ensemble"), "ensemble");

  if (const json* sig = in.find("signal")) {
    ObjectReader s(*sig, "signal");
    cfg.signal.t = s.count("t", 1);
    cfg.signal.nu_star = s.number("nu_star", 0.0);
    s.finish();
  }

  const json& values = in.require("sweep_values");
  if (!values.is_array()) config_error("sweep_values", "expected an array");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].is_number()) {
      config_error("sweep_values[" + std::to_string(i) + "]", "expected a number");
    }
    cfg.sweep_values.push_back(values[i].get<double>());
  }

  cfg.trials = in.count("trials", 20);
  cfg.n_test = in.count("n_test", 0);
  cfg.base_seed = in.count("base_seed", 0);
  if (const json* tol = in.find("tolerances")) {
    if (!tol->is_object()) config_error("tolerances", "expected an object");
    for (const auto& [key, value] : tol->items()) {
      if (!value.is_number()) config_error("tolerances." + key, "expected a number");
      cfg.tolerances[key] = value.get<double>();
    }
  }
  cfg.output_path = in.text("output_path", std::string());
  cfg.threads = in.count("threads", 0);
  cfg.max_entries = in.number("max_entries", kDefaultMaxEntries);
  cfg.svm = in.flag("svm", true);
  in.finish();

  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw Error(ErrorCode::Io, "cannot open config file " + path);
  std::ostringstream text;
  text << file.rdbuf();
  return parse_config(text.str());
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) config_error("trials", "must be >= 1");
  if (cfg.sweep_values.empty()) config_error("sweep_values", "must be non-empty");
  if (!(cfg.max_entries > 0.0)) config_error("max_entries", "must be > 0");
  if (std::holds_alternative<ensemble::Explicit>(cfg.ensemble)) {
    config_error("ensemble.type", "Explicit spectra carry no n and cannot be swept");
  }
  const char* field = swept_field(cfg.experiment, cfg.ensemble);
  if (field == nullptr) {
    config_error("ensemble.type", std::string("not supported by ") +
                                      to_string(cfg.experiment));
  }
  const std::string f = field;
  for (std::size_t i = 0; i < cfg.sweep_values.size(); ++i) {
    const double v = cfg.sweep_values[i];
    const std::string path = "sweep_values[" + std::to_string(i) + "]";
    if ((f == "n" || f == "d") && !(is_integral(v) && v >= 1.0)) {
      config_error(path, "sweep over " + f + " needs positive integers");
    }
    try {
      const EnsembleSpec spec = swept_ensemble(cfg, v);
      validate(spec);
      if (cfg.experiment == ExperimentKind::FourierSweep) {
        if (const auto* b = std::get_if<ensemble::BiLevel>(&spec)) {
          bilevel_fourier_design(b->n, b->p, b->q, b->r);
        } else if (const auto* m = std::get_if<ensemble::PolyDecay>(&spec)) {
          polydecay_fourier_design(m->n, m->d, m->m);
        }
      }
    } catch (const Error& e) {
      config_error(path, e.what());
    }
  }
  for (const auto& key : required_tolerances(cfg.experiment)) {
    if (!cfg.tolerances.count(key)) {
      config_error("tolerances." + key, "missing; required by " +
                                            std::string(to_string(cfg.experiment)));
    }
  }
  if (cfg.experiment == ExperimentKind::MarginSweep && cfg.n_test < 1) {
    config_error("n_test", "MarginSweep estimates test error and needs n_test >= 1");
  }
  if (cfg.experiment == ExperimentKind::FourierSweep &&
      std::holds_alternative<ensemble::BiLevel>(cfg.ensemble) && cfg.n_test < 1) {
    config_error("n_test", "Fourier bi-level sweep needs n_test >= 1");
  }
  if (!(cfg.signal.nu_star >= 0.0 && cfg.signal.nu_star < 0.5)) {
    config_error("signal.nu_star", "must lie in [0, 0.5)");
  }
  if (cfg.signal.t < 1) config_error("signal.t", "must be >= 1");
}

EnsembleSpec swept_ensemble(const ExperimentConfig& cfg, double value) {
  const char* field = swept_field(cfg.experiment, cfg.ensemble);
  if (field == nullptr) {
    config_error("ensemble.type", std::string("not supported by ") +
                                      to_string(cfg.experiment));
  }
  EnsembleSpec spec = cfg.ensemble;
  const std::string f = field;
  const auto as_count = static_cast<std::size_t>(std::llround(value));
  std::visit(
      [&](auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, ensemble::BiLevel>) {
          if (f == "q") e.q = value;
          if (f == "n") e.n = as_count;
        } else if constexpr (std::is_same_v<T, ensemble::Isotropic> ||
                             std::is_same_v<T, ensemble::WeakFeatures>) {
          e.d = as_count;
        } else if constexpr (std::is_same_v<T, ensemble::PolyDecay>) {
          e.m = value;
        }
      },
      spec);
  return spec;
}

double required_entries(const ExperimentConfig& cfg) {
  double worst = 0.0;
  for (double v : cfg.sweep_values) {
    const EnsembleSpec spec = swept_ensemble(cfg, v);
    double d = 0.0;
    if (cfg.experiment == ExperimentKind::FourierSweep) {
      if (const auto* b = std::get_if<ensemble::BiLevel>(&spec)) {
        const double nn = static_cast<double>(b->n);
        d = nn * std::ceil(2.0 + std::pow(nn, b->p - 1.0));
      } else {
        d = static_cast<double>(feature_dim(spec));
      }
    } else {
      d = static_cast<double>(feature_dim(spec));
    }
    worst = std::max(worst, static_cast<double>(training_size(spec)) * d);
  }
  return worst;
}

std::string canonical_json(const ExperimentConfig& cfg) {
  json root;
  root["experiment"] = to_string(cfg.experiment);
  root["ensemble"] = ensemble_json(cfg.ensemble);
  root["signal"] = {{"t", cfg.signal.t}, {"nu_star", cfg.signal.nu_star}};
  root["sweep_values"] = cfg.sweep_values;
  root["trials"] = cfg.trials;
  root["n_test"] = cfg.n_test;
  root["base_seed"] = cfg.base_seed;
  root["tolerances"] = cfg.tolerances;
  root["svm"] = cfg.svm;
  return root.dump();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_json(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t value_index,
                         std::size_t trial_index) noexcept {
  return derive_seed(derive_seed(base_seed, value_index), trial_index);
}

}  // namespace ovp
