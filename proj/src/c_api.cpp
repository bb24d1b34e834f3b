#include "ovp/ovp.h"

#include <cmath>
#include <exception>
#include <memory>
#include <new>
#include <numbers>
#include <string>

#include "ovp/ensembles.hpp"
#include "ovp/error.hpp"
#include "ovp/fourier.hpp"
#include "ovp/harness.hpp"
#include "ovp/solvers.hpp"
#include "ovp/theory.hpp"

struct ovp_spectrum {
  ovp::Spectrum spectrum;
};

struct ovp_config {
  ovp::ExperimentConfig config;
};

struct ovp_report {
  ovp::VerdictReport report;
};

namespace {

thread_local std::string last_error;

ovp_status to_status(ovp::ErrorCode code) {
  // The enums share their order, offset by OVP_OK.
  return static_cast<ovp_status>(static_cast<int>(code) + 1);
}

template <class F>
ovp_status guarded(F&& body) {
  try {
    body();
    return OVP_OK;
  } catch (const ovp::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return OVP_MEMORY_CAP;
  } catch (const std::exception& e) {
    last_error = e.what();
    return OVP_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return OVP_INTERNAL;
  }
}

ovp_status null_argument(const char* what) {
  last_error = std::string("null argument: ") + what;
  return OVP_NULL_ARGUMENT;
}

Eigen::MatrixXd copy_rows(const double* phi, size_t n, size_t d) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(phi, static_cast<Eigen::Index>(n),
                                    static_cast<Eigen::Index>(d));
}

}  // namespace

extern "C" {

const char* ovp_version(void) { return OVP_VERSION_STRING; }

const char* ovp_last_error(void) { return last_error.c_str(); }

const char* ovp_status_name(ovp_status status) {
  switch (status) {
    case OVP_OK: return "OK";
    case OVP_NULL_ARGUMENT: return "NullArgument";
    case OVP_INTERNAL: return "Internal";
    default: break;
  }
  const int code = static_cast<int>(status) - 1;
  if (code < 0 || code > static_cast<int>(ovp::ErrorCode::Io)) return "Unknown";
  return ovp::to_string(static_cast<ovp::ErrorCode>(code));
}

ovp_status ovp_spectrum_from_json(const char* ensemble_json, ovp_spectrum** out) {
  if (ensemble_json == nullptr) return null_argument("ensemble_json");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<ovp_spectrum>();
    handle->spectrum = ovp::build_spectrum(ovp::parse_ensemble(ensemble_json));
    *out = handle.release();
  });
}

size_t ovp_spectrum_size(const ovp_spectrum* spectrum) {
  return spectrum == nullptr ? 0 : spectrum->spectrum.size();
}

const double* ovp_spectrum_values(const ovp_spectrum* spectrum) {
  return spectrum == nullptr ? nullptr : spectrum->spectrum.lambdas.data();
}

void ovp_spectrum_free(ovp_spectrum* spectrum) { delete spectrum; }

ovp_status ovp_bilevel_dims(size_t n, double p, double r, size_t* d, size_t* s) {
  if (d == nullptr || s == nullptr) return null_argument("d/s");
  return guarded([&] {
    const auto dims = ovp::bilevel_dims(n, p, r);
    *d = dims.d;
    *s = dims.s;
  });
}

ovp_status ovp_classify_regime(double p, double q, double r, ovp_regime_info* out) {
  if (out == nullptr) return null_argument("out");
  return guarded([&] {
    const auto v = ovp::classify_regime(p, q, r);
    out->regime = static_cast<ovp_regime>(static_cast<int>(v.regime));
    out->q_low = v.q_low;
    out->q_high = v.q_high;
    out->limit_mse = v.limit_mse;
    out->limit_cls = v.limit_cls;
  });
}

const char* ovp_regime_name(ovp_regime regime) {
  if (regime < OVP_REGIME_BOTH_SUCCEED || regime > OVP_REGIME_BOUNDARY) return "Unknown";
  return ovp::to_string(static_cast<ovp::Regime>(static_cast<int>(regime)));
}

ovp_status ovp_min_norm(const double* phi, size_t n, size_t d, const double* targets,
                        double* alpha_out) {
  if (phi == nullptr || targets == nullptr || alpha_out == nullptr) {
    return null_argument("phi/targets/alpha_out");
  }
  return guarded([&] {
    const Eigen::MatrixXd m = copy_rows(phi, n, d);
    const Eigen::VectorXd t =
        Eigen::Map<const Eigen::VectorXd>(targets, static_cast<Eigen::Index>(n));
    const auto fit = ovp::min_norm_interpolate(m, t);
    Eigen::Map<Eigen::VectorXd>(alpha_out, static_cast<Eigen::Index>(d)) = fit.alpha;
  });
}

ovp_status ovp_svm(const double* phi, size_t n, size_t d, const double* y,
                   double* alpha_out, double* beta_out, double* sv_fraction) {
  if (phi == nullptr || y == nullptr || alpha_out == nullptr || sv_fraction == nullptr) {
    return null_argument("phi/y/alpha_out/sv_fraction");
  }
  return guarded([&] {
    const Eigen::MatrixXd m = copy_rows(phi, n, d);
    const Eigen::VectorXd labels =
        Eigen::Map<const Eigen::VectorXd>(y, static_cast<Eigen::Index>(n));
    const auto result = ovp::solve_svm_hard_margin(m, labels);
    Eigen::Map<Eigen::VectorXd>(alpha_out, static_cast<Eigen::Index>(d)) =
        result.coefficients.alpha;
    if (beta_out != nullptr) {
      Eigen::Map<Eigen::VectorXd>(beta_out, static_cast<Eigen::Index>(n)) = result.dual.beta;
    }
    *sv_fraction = ovp::support_vector_fraction(m, labels, result.coefficients.alpha);
  });
}

ovp_status ovp_fourier_fit_cosine(size_t n, size_t d, size_t favored, double lambda_h,
                                  ovp_fourier_fit* out) {
  if (out == nullptr) return null_argument("out");
  return guarded([&] {
    const auto design = ovp::bilevel_fourier_design(n, d, favored, lambda_h);
    const auto grid = ovp::regular_grid(n);
    Eigen::VectorXd targets(static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i) targets[static_cast<Eigen::Index>(i)] = std::cos(grid[i]);
    targets.array() -= targets.mean();
    const Eigen::VectorXd coef = ovp::weighted_min_norm(design, targets);
    const double root_pi = std::sqrt(std::numbers::pi);
    const auto closed = ovp::closed_form_alias(n, d, design.weights[1]);
    out->a = coef[static_cast<Eigen::Index>(ovp::cosine_column(1))] / root_pi;
    out->b = d > n ? coef[static_cast<Eigen::Index>(ovp::cosine_column(n - 1))] / root_pi : 0.0;
    out->a_closed = closed.a;
    out->b_closed = closed.b;
    out->sigma_cn = closed.sigma_cn;
  });
}

ovp_status ovp_fourier_cls_upper_bound(double p, double q, double r, size_t n, double* out) {
  if (out == nullptr) return null_argument("out");
  return guarded([&] { *out = ovp::fourier_cls_upper_bound(p, q, r, n); });
}

ovp_status ovp_config_load(const char* path, ovp_config** out) {
  if (path == nullptr) return null_argument("path");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<ovp_config>();
    handle->config = ovp::load_config(path);
    *out = handle.release();
  });
}

ovp_status ovp_config_parse(const char* json, ovp_config** out) {
  if (json == nullptr) return null_argument("json");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<ovp_config>();
    handle->config = ovp::parse_config(json);
    *out = handle.release();
  });
}

ovp_status ovp_config_set_seed(ovp_config* config, uint64_t seed) {
  if (config == nullptr) return null_argument("config");
  config->config.base_seed = seed;
  return OVP_OK;
}

ovp_status ovp_config_set_trials(ovp_config* config, size_t trials) {
  if (config == nullptr) return null_argument("config");
  if (trials < 1) {
    last_error = "trials: must be >= 1";
    return OVP_CONFIG_ERROR;
  }
  config->config.trials = trials;
  return OVP_OK;
}

ovp_status ovp_config_set_threads(ovp_config* config, size_t threads) {
  if (config == nullptr) return null_argument("config");
  config->config.threads = threads;
  return OVP_OK;
}

ovp_status ovp_config_set_output(ovp_config* config, const char* path) {
  if (config == nullptr) return null_argument("config");
  if (path == nullptr) return null_argument("path");
  config->config.output_path = path;
  return OVP_OK;
}

ovp_status ovp_config_hash(const ovp_config* config, uint64_t* out) {
  if (config == nullptr || out == nullptr) return null_argument("config/out");
  return guarded([&] { *out = ovp::config_hash(config->config); });
}

void ovp_config_free(ovp_config* config) { delete config; }

ovp_status ovp_run_sweep(const ovp_config* config, ovp_run_info* info) {
  if (config == nullptr) return null_argument("config");
  return guarded([&] {
    const auto summary = ovp::run_to_csv(config->config);
    if (info != nullptr) {
      info->rows = summary.rows;
      info->wall_seconds = summary.wall_seconds;
      info->config_hash = summary.config_hash;
    }
  });
}

ovp_status ovp_check(const ovp_config* config, const char* csv_path, ovp_report** out) {
  if (config == nullptr || csv_path == nullptr || out == nullptr) {
    return null_argument("config/csv_path/out");
  }
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<ovp_report>();
    handle->report = ovp::verdict(config->config, ovp::read_csv(csv_path));
    *out = handle.release();
  });
}

size_t ovp_report_count(const ovp_report* report) {
  return report == nullptr ? 0 : report->report.checks.size();
}

ovp_status ovp_report_item(const ovp_report* report, size_t index, const char** name,
                           int* passed, double* measured, const char** detail) {
  if (report == nullptr) return null_argument("report");
  if (index >= report->report.checks.size()) {
    last_error = "report index out of range";
    return OVP_INDEX_OUT_OF_RANGE;
  }
  const auto& c = report->report.checks[index];
  if (name != nullptr) *name = c.name.c_str();
  if (passed != nullptr) *passed = c.passed ? 1 : 0;
  if (measured != nullptr) *measured = c.measured;
  if (detail != nullptr) *detail = c.detail.c_str();
  return OVP_OK;
}

int ovp_report_all_passed(const ovp_report* report) {
  return report != nullptr && report->report.all_passed() ? 1 : 0;
}

void ovp_report_free(ovp_report* report) { delete report; }

}  // extern "C"
