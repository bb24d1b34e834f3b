// Command-line front end. Talks to the library only through the C API.
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ovp/ovp.h"

namespace {

int fail(ovp_status status) {
  std::fprintf(stderr, "error [%s]: %s\n", ovp_status_name(status), ovp_last_error());
  return 2;
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> threads;
  std::optional<std::string> out;

  void attach(CLI::App* cmd, bool with_output) {
    cmd->add_option("--seed", seed, "Override base_seed");
    cmd->add_option("--trials", trials, "Override trials per sweep value")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
    if (with_output) cmd->add_option("--out", out, "Override output_path");
  }

  ovp_status apply(ovp_config* cfg) const {
    ovp_status st = OVP_OK;
    if (seed && (st = ovp_config_set_seed(cfg, *seed)) != OVP_OK) return st;
    if (trials && (st = ovp_config_set_trials(cfg, *trials)) != OVP_OK) return st;
    if (threads && (st = ovp_config_set_threads(cfg, *threads)) != OVP_OK) return st;
    if (out && (st = ovp_config_set_output(cfg, out->c_str())) != OVP_OK) return st;
    return st;
  }
};

int run_sweep(const std::string& path, const Overrides& ov) {
  ovp_config* cfg = nullptr;
  ovp_status st = ovp_config_load(path.c_str(), &cfg);
  if (st != OVP_OK) return fail(st);
  st = ov.apply(cfg);
  ovp_run_info info{};
  if (st == OVP_OK) st = ovp_run_sweep(cfg, &info);
  ovp_config_free(cfg);
  if (st != OVP_OK) return fail(st);
  std::printf("wrote %zu rows in %.3f s (config %016llx)\n", info.rows, info.wall_seconds,
              static_cast<unsigned long long>(info.config_hash));
  return 0;
}

int run_check(const std::string& config_path, const std::string& csv_path,
              const Overrides& ov) {
  ovp_config* cfg = nullptr;
  ovp_status st = ovp_config_load(config_path.c_str(), &cfg);
  if (st != OVP_OK) return fail(st);
  st = ov.apply(cfg);
  ovp_report* report = nullptr;
  if (st == OVP_OK) st = ovp_check(cfg, csv_path.c_str(), &report);
  ovp_config_free(cfg);
  if (st != OVP_OK) return fail(st);

  const std::size_t count = ovp_report_count(report);
  for (std::size_t i = 0; i < count; ++i) {
    const char* name = nullptr;
    const char* detail = nullptr;
    int passed = 0;
    double measured = 0.0;
    ovp_report_item(report, i, &name, &passed, &measured, &detail);
    std::printf("%s %s measured=%.6g (%s)\n", passed ? "PASS" : "FAIL", name, measured, detail);
  }
  const bool ok = ovp_report_all_passed(report) != 0;
  ovp_report_free(report);
  std::printf("%s\n", ok ? "all checks passed" : "some checks failed");
  return ok ? 0 : 1;
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int run_spectrum(const std::string& type, const std::map<std::string, double>& args,
                 const std::optional<std::string>& out) {
  std::ostringstream json;
  json << "{\"type\":\"" << type << "\"";
  for (const auto& [key, value] : args) json << ",\"" << key << "\":" << number(value);
  json << "}";

  ovp_spectrum* spectrum = nullptr;
  const ovp_status st = ovp_spectrum_from_json(json.str().c_str(), &spectrum);
  if (st != OVP_OK) return fail(st);
  const std::size_t d = ovp_spectrum_size(spectrum);
  const double* values = ovp_spectrum_values(spectrum);

  double trace = 0.0;
  for (std::size_t j = 0; j < d; ++j) trace += values[j];
  std::printf("d = %zu\ntrace = %.17g\n", d, trace);
  // Runs of equal eigenvalues are printed once with their multiplicity.
  std::size_t start = 0;
  std::size_t runs = 0;
  for (std::size_t j = 1; j <= d; ++j) {
    if (j < d && values[j] == values[start]) continue;
    if (runs < 20) std::printf("lambda[%zu..%zu] = %.17g\n", start + 1, j, values[start]);
    ++runs;
    start = j;
  }
  if (runs > 20) std::printf("... %zu distinct runs in total\n", runs);

  int code = 0;
  if (out) {
    std::ofstream file(*out);
    if (file) {
      file << "index,lambda\n";
      for (std::size_t j = 0; j < d; ++j) file << j + 1 << ',' << number(values[j]) << '\n';
    }
    if (!file) {
      std::fprintf(stderr, "error [Io]: cannot write %s\n", out->c_str());
      code = 2;
    }
  }
  ovp_spectrum_free(spectrum);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-norm interpolation and hard-margin SVM experiments"};
  app.set_version_flag("--version", std::string(ovp_version()));
  app.require_subcommand(1);

  std::string config_path;
  std::string csv_path;
  Overrides sweep_ov;
  Overrides check_ov;

  auto* sweep = app.add_subcommand("sweep", "Run the experiment described by a JSON config");
  sweep->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  sweep_ov.attach(sweep, true);

  auto* check = app.add_subcommand("check", "Evaluate acceptance checks on a results CSV");
  check->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  check->add_option("results", csv_path, "Results CSV")->required()->check(CLI::ExistingFile);
  check_ov.attach(check, false);

  std::string ensemble_type;
  std::map<std::string, double> ens_args;
  std::optional<std::string> spectrum_out;
  auto* spectrum = app.add_subcommand("spectrum", "Print the covariance spectrum of an ensemble");
  spectrum->add_option("type", ensemble_type, "Isotropic | BiLevel | PolyDecay")
      ->required()
      ->check(CLI::IsMember({"Isotropic", "BiLevel", "PolyDecay", "WeakFeatures"}));
  std::optional<double> sn, sd, sp, sq, sr, sm, ssigma;
  spectrum->add_option("--n", sn, "Training-set size");
  spectrum->add_option("--d", sd, "Feature count");
  spectrum->add_option("-p,--p", sp, "Bi-level exponent p");
  spectrum->add_option("-q,--q", sq, "Bi-level exponent q");
  spectrum->add_option("-r,--r", sr, "Bi-level exponent r");
  spectrum->add_option("-m,--m", sm, "Polynomial decay rate");
  spectrum->add_option("--sigma", ssigma, "Weak-feature input scale");
  spectrum->add_option("--out", spectrum_out, "Write index,lambda CSV");

  std::size_t fn = 49;
  std::size_t fd = 441;
  std::size_t favored = 7;
  double lambda_h = 1.0;
  std::optional<double> fp, fq, fr;
  auto* fourier = app.add_subcommand("fourier", "Weighted Fourier fit of cos(x) on a regular grid");
  fourier->add_option("--n", fn, "Odd grid size")->capture_default_str();
  fourier->add_option("--d", fd, "Odd feature count, a multiple of n")->capture_default_str();
  fourier->add_option("--favored", favored, "Number of favored features")->capture_default_str();
  fourier->add_option("--lambda-h", lambda_h, "Weight of favored features")->capture_default_str();
  fourier->add_option("-p,--p", fp, "Exponent p (sets d, favored, lambda-h with q, r)");
  fourier->add_option("-q,--q", fq, "Exponent q");
  fourier->add_option("-r,--r", fr, "Exponent r");

  CLI11_PARSE(app, argc, argv);

  if (*sweep) return run_sweep(config_path, sweep_ov);
  if (*check) return run_check(config_path, csv_path, check_ov);
  if (*spectrum) {
    const std::pair<const char*, const std::optional<double>*> fields[] = {
        {"n", &sn}, {"d", &sd}, {"p", &sp}, {"q", &sq}, {"r", &sr}, {"m", &sm}, {"sigma", &ssigma}};
    for (const auto& [key, value] : fields) {
      if (value->has_value()) ens_args[key] = **value;
    }
    return run_spectrum(ensemble_type, ens_args, spectrum_out);
  }
  if (*fourier) {
    const bool exponents = fp || fq || fr;
    if (exponents && !(fp && fq && fr)) {
      std::fprintf(stderr, "error: --p, --q and --r go together\n");
      return 2;
    }
    if (exponents) {
      // Same parameterization as the Fourier bi-level sweep.
      const double nn = static_cast<double>(fn);
      auto ratio = static_cast<std::size_t>(std::ceil(1.0 + std::pow(nn, *fp - 1.0) - 1e-9));
      if (ratio % 2 == 0) ++ratio;
      fd = fn * ratio;
      favored = static_cast<std::size_t>(std::llround(std::pow(nn, *fr)));
      lambda_h = std::pow(nn, *fp - *fr - *fq);
    }
    ovp_fourier_fit fit{};
    const ovp_status st = ovp_fourier_fit_cosine(fn, fd, favored, lambda_h, &fit);
    if (st != OVP_OK) return fail(st);
    std::printf("n = %zu, d = %zu, favored = %zu, lambda_h = %.10g\n", fn, fd, favored, lambda_h);
    std::printf("a measured = %.17g\na closed   = %.17g\n", fit.a, fit.a_closed);
    std::printf("b measured = %.17g\nb closed   = %.17g\n", fit.b, fit.b_closed);
    std::printf("sigma_cn   = %.17g\n", fit.sigma_cn);
    if (exponents) {
      double bound = 0.0;
      const ovp_status bst = ovp_fourier_cls_upper_bound(*fp, *fq, *fr, fn, &bound);
      if (bst == OVP_OK) {
        std::printf("classification error bound = %.17g\n", bound);
      } else {
        std::printf("classification error bound: n/a (%s)\n", ovp_last_error());
      }
    }
    return 0;
  }
  return 0;
}
