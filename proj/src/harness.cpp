#include "ovp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ovp/error.hpp"
#include "ovp/fourier.hpp"
#include "ovp/metrics.hpp"
#include "ovp/rng.hpp"
#include "ovp/solvers.hpp"
#include "ovp/theory.hpp"

namespace ovp {

namespace {

struct SvmOutcome {
  SvmResult result;
  bool converged = true;
};

SvmOutcome run_svm(const Eigen::MatrixXd& phi, const GramFactor& factor,
                   const Eigen::VectorXd& y) {
  SvmOutcome out;
  try {
    out.result = solve_svm_hard_margin(phi, factor.gram(), &factor, y);
  } catch (const SvmNotConverged& e) {
    out.result = e.best();
    out.converged = false;
  }
  return out;
}

double relative_gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(b.lpNorm<Eigen::Infinity>(), 1e-300);
  return (a - b).lpNorm<Eigen::Infinity>() / scale;
}

// Support-vector bookkeeping shared by every experiment that runs the SVM.
void record_svm(ResultRow& row, const Eigen::MatrixXd& phi, const GramFactor& factor,
                const Eigen::VectorXd& y, const Eigen::VectorXd& alpha_binary,
                const SvmOutcome& svm) {
  const SlacknessPrediction pred = slackness_predictor(factor, y);
  const Eigen::VectorXd& alpha = svm.result.coefficients.alpha;
  row.set("sv_fraction", support_vector_fraction(phi, y, alpha));
  row.set("all_sv", pred.all_sv ? 1.0 : 0.0);
  row.set("min_slackness", pred.min_value);
  row.set("coef_gap", relative_gap(alpha, alpha_binary));
  row.set("kkt_gap", svm.result.dual.kkt_gap);
  row.set("svm_iterations", svm.result.dual.iterations);
  row.set("svm_converged", svm.converged ? 1.0 : 0.0);
  row.set("condition", factor.condition_estimate());
}

void trial_support(const ExperimentConfig& cfg, const EnsembleSpec& spec,
                   ResultRow& row) {
  const Dataset data = sample_dataset(spec, cfg.signal, row.n, row.seed);
  const GramFactor factor(gram_matrix(data.phi));
  const Coefficients mn = min_norm_interpolate(data.phi, factor, data.y);
  record_svm(row, data.phi, factor, data.y, mn.alpha, run_svm(data.phi, factor, data.y));
}

void trial_regime(const ExperimentConfig& cfg, const EnsembleSpec& spec,
                  ResultRow& row) {
  const auto& b = std::get<ensemble::BiLevel>(spec);
  row.regime = to_string(classify_regime(b.p, b.q, b.r).regime);
  const Spectrum spectrum = build_spectrum(spec);
  const Dataset data = sample_dataset(spec, cfg.signal, row.n, row.seed);
  const GramFactor factor(gram_matrix(data.phi));
  const std::size_t t = cfg.signal.t;

  const Coefficients real = min_norm_interpolate(data.phi, factor, data.z);
  const Coefficients binary = min_norm_interpolate(data.phi, factor, data.y);
  const SuCnReport real_sc = survival_contamination(real.alpha, spectrum, t);
  const SuCnReport bin_sc = survival_contamination(binary.alpha, spectrum, t);
  row.set("su", bin_sc.su);
  row.set("cn", bin_sc.cn);
  row.set("snr", bin_sc.snr);
  row.set("su_real", real_sc.su);
  row.set("cn_real", real_sc.cn);
  row.set("excess_mse_analytic", analytic_losses(real_sc.su, real_sc.cn).excess_mse);
  row.set("excess_cls_analytic", analytic_losses(bin_sc.su, bin_sc.cn).excess_cls);

  if (cfg.svm) {
    const SvmOutcome svm = run_svm(data.phi, factor, data.y);
    record_svm(row, data.phi, factor, data.y, binary.alpha, svm);
    const SuCnReport svm_sc =
        survival_contamination(svm.result.coefficients.alpha, spectrum, t);
    row.set("excess_cls_svm", analytic_losses(svm_sc.su, svm_sc.cn).excess_cls);
  } else {
    row.set("condition", factor.condition_estimate());
  }

  if (cfg.n_test > 0) {
    const EmpiricalReport reg = empirical_losses(real.alpha, t, spectrum, cfg.n_test, row.seed);
    const EmpiricalReport cls = empirical_losses(binary.alpha, t, spectrum, cfg.n_test, row.seed);
    row.set("mse_hat", reg.mse_hat);
    row.set("mse_std", reg.mse_sample_std);
    row.set("err_hat", cls.err_hat);
    row.set("err_std", cls.std_err);
  }
}

void trial_margin(const ExperimentConfig& cfg, const EnsembleSpec& spec,
                  ResultRow& row) {
  const Dataset data = sample_dataset(spec, cfg.signal, row.n, row.seed);
  const GramFactor factor(gram_matrix(data.phi));
  const Coefficients mn = min_norm_interpolate(data.phi, factor, data.y);
  const SvmOutcome svm = run_svm(data.phi, factor, data.y);
  record_svm(row, data.phi, factor, data.y, mn.alpha, svm);
  const Eigen::VectorXd& alpha = svm.result.coefficients.alpha;

  const MarginReport m = margin_bound(data.phi, data.y, alpha);
  row.set("gamma", m.gamma);
  row.set("gamma_n", m.gamma_n);
  row.set("frob", m.frob);
  row.set("alpha_norm", m.alpha_norm);
  row.set("ramp_term", m.ramp_term);
  row.set("complexity_term", m.complexity_term);
  row.set("confidence_term", m.confidence_term);
  row.set("bound", m.bound);

  EmpiricalReport test;
  if (const auto* weak = std::get_if<ensemble::WeakFeatures>(&spec)) {
    test = empirical_losses_weak(alpha, weak->sigma, cfg.n_test, row.seed);
  } else {
    const Spectrum spectrum = build_spectrum(spec);
    const SuCnReport sc = survival_contamination(alpha, spectrum, cfg.signal.t);
    row.set("su", sc.su);
    row.set("cn", sc.cn);
    row.set("snr", sc.snr);
    row.set("excess_cls_analytic", analytic_losses(sc.su, sc.cn).excess_cls);
    test = empirical_losses(alpha, cfg.signal.t, spectrum, cfg.n_test, row.seed);
  }
  row.set("err_hat", test.err_hat);
  row.set("err_std", test.std_err);
}

void trial_fourier_bilevel(const ExperimentConfig& cfg, const ensemble::BiLevel& b,
                           ResultRow& row) {
  const FourierDesign design = bilevel_fourier_design(b.n, b.p, b.q, b.r);
  row.d = design.d;
  try {
    row.regime = to_string(classify_regime(b.p, b.q, b.r).regime);
  } catch (const Error&) {
    row.regime.clear();
  }
  const std::vector<double> grid = regular_grid(design.n);
  Eigen::VectorXd targets(static_cast<Eigen::Index>(design.n));
  for (std::size_t i = 0; i < design.n; ++i) targets[static_cast<Eigen::Index>(i)] = std::cos(grid[i]);
  // The grid is symmetric, so the mean is zero up to rounding.
  targets.array() -= targets.mean();
  const Eigen::VectorXd coef = weighted_min_norm(design, targets);

  const double root_pi = std::sqrt(std::numbers::pi);
  const double lambda_h = design.weights[1];
  const ClosedForm closed = closed_form_alias(design.n, design.d, lambda_h);
  row.set("fourier_a", coef[static_cast<Eigen::Index>(cosine_column(1))] / root_pi);
  row.set("fourier_b", coef[static_cast<Eigen::Index>(cosine_column(design.n - 1))] / root_pi);
  row.set("fourier_a_closed", closed.a);
  row.set("fourier_b_closed", closed.b);
  row.set("fourier_sigma_cn", closed.sigma_cn);
  try {
    const RegimeApprox approx = fourier_regime_approx(b.p, b.q, b.r, b.n);
    row.set("fourier_a_approx", approx.a_approx);
    row.set("fourier_sigma_cn_approx", approx.sigma_cn_approx);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BoundaryCase) throw;
  }
  try {
    row.set("cls_upper_bound", fourier_cls_upper_bound(b.p, b.q, b.r, b.n));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InvalidRegime) throw;
  }
  row.set("err_hat", fourier_test_error(coef, cfg.n_test, row.seed));
}

void trial_fourier_poly(const ExperimentConfig& cfg, const ensemble::PolyDecay& m,
                        ResultRow& row) {
  const FourierDesign design = polydecay_fourier_design(m.n, m.d, m.m);
  const std::vector<double> grid = regular_grid(design.n);
  const Eigen::MatrixXd phi =
      fourier_features(grid, design.d) * feature_weights(design).cwiseSqrt().asDiagonal();

  CounterRng flip_rng(derive_seed(row.seed, kLabelNoiseStream));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Eigen::VectorXd y(static_cast<Eigen::Index>(design.n));
  for (std::size_t i = 0; i < design.n; ++i) {
    double label = sgn(std::cos(grid[i]));
    if (uniform(flip_rng) < cfg.signal.nu_star) label = -label;
    y[static_cast<Eigen::Index>(i)] = label;
  }
  const GramFactor factor(gram_matrix(phi));
  const Coefficients mn = min_norm_interpolate(phi, factor, y);
  record_svm(row, phi, factor, y, mn.alpha, run_svm(phi, factor, y));
}

void trial_fourier(const ExperimentConfig& cfg, const EnsembleSpec& spec,
                   ResultRow& row) {
  if (const auto* b = std::get_if<ensemble::BiLevel>(&spec)) {
    trial_fourier_bilevel(cfg, *b, row);
  } else {
    trial_fourier_poly(cfg, std::get<ensemble::PolyDecay>(spec), row);
  }
}

ResultRow run_trial(const ExperimentConfig& cfg, std::size_t value_index,
                    std::size_t trial_index) {
  const double value = cfg.sweep_values[value_index];
  const EnsembleSpec spec = swept_ensemble(cfg, value);
  ResultRow row;
  row.experiment = to_string(cfg.experiment);
  row.sweep_value = value;
  row.trial = trial_index;
  row.seed = trial_seed(cfg.base_seed, value_index, trial_index);
  row.n = training_size(spec);
  row.d = feature_dim(spec);

  switch (cfg.experiment) {
    case ExperimentKind::SvFractionSweep:
    case ExperimentKind::EquivalenceCheck:
      trial_support(cfg, spec, row);
      break;
    case ExperimentKind::RegimeSweepQ:
    case ExperimentKind::RegimeSweepN:
      trial_regime(cfg, spec, row);
      break;
    case ExperimentKind::MarginSweep:
      trial_margin(cfg, spec, row);
      break;
    case ExperimentKind::FourierSweep:
      trial_fourier(cfg, spec, row);
      break;
  }
  return row;
}

void check_memory(const ExperimentConfig& cfg) {
  const double entries = required_entries(cfg);
  if (entries > cfg.max_entries) {
    std::ostringstream msg;
    msg << "a trial needs " << entries << " matrix entries (~"
        << entries * 8.0 / 1e6 << " MB) but the cap is " << cfg.max_entries
        << " entries (~" << cfg.max_entries * 8.0 / 1e6
        << " MB); raise max_entries to run it";
    throw Error(ErrorCode::MemoryCap, msg.str());
  }
}

}  // namespace

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {
      "sv_fraction", "all_sv", "min_slackness", "coef_gap", "kkt_gap",
      "svm_iterations", "svm_converged", "su", "cn", "snr",
      "excess_mse_analytic", "excess_cls_analytic", "su_real", "cn_real",
      "excess_cls_svm", "mse_hat", "mse_std", "err_hat", "err_std", "gamma",
      "gamma_n", "frob", "alpha_norm", "ramp_term", "complexity_term",
      "confidence_term", "bound", "fourier_a", "fourier_b", "fourier_a_closed",
      "fourier_b_closed", "fourier_sigma_cn", "fourier_a_approx",
      "fourier_sigma_cn_approx", "cls_upper_bound", "condition",
  };
  return names;
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> columns = [] {
    std::vector<std::string> c = {"experiment", "sweep_value", "trial", "seed",
                                  "n", "d", "regime"};
    c.insert(c.end(), metric_names().begin(), metric_names().end());
    return c;
  }();
  return columns;
}

void ResultRow::set(const std::string& name, double value) {
  const auto& names = metric_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw Error(ErrorCode::InvalidParams, "unknown metric '" + name + "'");
  }
  metrics[name] = value;
}

std::optional<double> ResultRow::get(const std::string& name) const {
  const auto it = metrics.find(name);
  if (it == metrics.end()) return std::nullopt;
  return it->second;
}

void run_experiment(const ExperimentConfig& config,
                    const std::function<void(const ResultRow&)>& sink) {
  validate(config);
  check_memory(config);

  const std::size_t values = config.sweep_values.size();
  const std::size_t jobs = values * config.trials;
  std::size_t workers = config.threads;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, jobs);

  std::vector<std::optional<ResultRow>> slots(jobs);
  std::vector<std::exception_ptr> failures(jobs);
  std::vector<char> done(jobs, 0);
  std::mutex mutex;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};

  auto work = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= jobs || stop.load()) return;
      std::optional<ResultRow> row;
      std::exception_ptr failure;
      try {
        row = run_trial(config, k / config.trials, k % config.trials);
      } catch (...) {
        failure = std::current_exception();
      }
      {
        std::lock_guard<std::mutex> lock(mutex);
        slots[k] = std::move(row);
        failures[k] = failure;
        done[k] = 1;
      }
      ready.notify_all();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);

  std::exception_ptr first_failure;
  for (std::size_t k = 0; k < jobs && !first_failure; ++k) {
    std::optional<ResultRow> row;
    {
      std::unique_lock<std::mutex> lock(mutex);
      ready.wait(lock, [&] { return done[k] != 0; });
      if (failures[k]) {
        first_failure = failures[k];
        stop = true;
        break;
      }
      row = std::move(slots[k]);
      slots[k].reset();
    }
    try {
      sink(*row);
    } catch (...) {
      first_failure = std::current_exception();
      stop = true;
    }
  }
  for (auto& t : pool) t.join();
  if (first_failure) std::rethrow_exception(first_failure);
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
  std::vector<ResultRow> rows;
  run_experiment(config, [&](const ResultRow& row) { rows.push_back(row); });
  return rows;
}

RunSummary run_to_csv(const ExperimentConfig& config) {
  if (config.output_path.empty()) {
    throw Error(ErrorCode::ConfigError, "output_path: no output file given");
  }
  std::ofstream out(config.output_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + config.output_path);

  const auto start = std::chrono::steady_clock::now();
  RunSummary summary;
  summary.config_hash = config_hash(config);
  out << csv_header() << '\n';
  run_experiment(config, [&](const ResultRow& row) {
    out << csv_line(row) << '\n';
    ++summary.rows;
  });
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "failed writing " + config.output_path);
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(summary.config_hash));
  nlohmann::json meta;
  meta["config_hash"] = hash;
  meta["artifact_version"] = OVP_VERSION_STRING;
  meta["csv_schema_version"] = kCsvSchemaVersion;
  meta["experiment"] = to_string(config.experiment);
  meta["rows"] = summary.rows;
  meta["wall_time_seconds"] = summary.wall_seconds;
  const std::string meta_path = config.output_path + ".meta.json";
  std::ofstream meta_out(meta_path, std::ios::binary | std::ios::trunc);
  if (!meta_out) throw Error(ErrorCode::Io, "cannot write " + meta_path);
  meta_out << meta.dump(2) << '\n';
  if (!meta_out) throw Error(ErrorCode::Io, "failed writing " + meta_path);
  return summary;
}

}  // namespace ovp
