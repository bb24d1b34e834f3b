#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "ovp/error.hpp"
#include "ovp/harness.hpp"
#include "ovp/theory.hpp"

namespace ovp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

std::string at_value(const std::string& name, double value) {
  return name + "@" + fmt(value);
}

// Rows arranged as table[value_index][trial], checked against the config.
class RowTable {
 public:
  RowTable(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows)
      : cfg_(cfg), table_(cfg.sweep_values.size(),
                          std::vector<const ResultRow*>(cfg.trials, nullptr)) {
    std::map<double, std::size_t> index;
    for (std::size_t i = 0; i < cfg.sweep_values.size(); ++i) {
      index.emplace(cfg.sweep_values[i], i);
    }
    const std::string kind = to_string(cfg.experiment);
    for (const auto& row : rows) {
      if (row.experiment != kind) {
        throw Error(ErrorCode::IncompleteData,
                    "row for experiment '" + row.experiment + "' in a " + kind + " check");
      }
      const auto it = index.find(row.sweep_value);
      if (it == index.end() || row.trial >= cfg.trials) {
        throw Error(ErrorCode::IncompleteData,
                    "row (" + fmt(row.sweep_value) + ", trial " + std::to_string(row.trial) +
                        ") is not part of the configured sweep");
      }
      const ResultRow*& slot = table_[it->second][row.trial];
      if (slot != nullptr) {
        throw Error(ErrorCode::IncompleteData,
                    "duplicate row (" + fmt(row.sweep_value) + ", trial " +
                        std::to_string(row.trial) + ")");
      }
      slot = &row;
    }
    for (std::size_t v = 0; v < table_.size(); ++v) {
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        if (table_[v][t] == nullptr) {
          throw Error(ErrorCode::IncompleteData,
                      "missing row (" + fmt(cfg.sweep_values[v]) + ", trial " +
                          std::to_string(t) + ")");
        }
      }
    }
  }

  std::size_t values() const { return table_.size(); }
  double value(std::size_t v) const { return cfg_.sweep_values[v]; }
  const std::vector<const ResultRow*>& at(std::size_t v) const { return table_[v]; }

  std::vector<double> metric(std::size_t v, const std::string& name) const {
    std::vector<double> out;
    for (const ResultRow* row : table_[v]) out.push_back(need(*row, name));
    return out;
  }

  std::vector<double> metric_all(const std::string& name) const {
    std::vector<double> out;
    for (std::size_t v = 0; v < table_.size(); ++v) {
      const auto m = metric(v, name);
      out.insert(out.end(), m.begin(), m.end());
    }
    return out;
  }

  double median_of(std::size_t v, const std::string& name) const {
    return median(metric(v, name));
  }

  // Value indices sorted by sweep value.
  std::vector<std::size_t> order() const {
    std::vector<std::size_t> idx(table_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
    return idx;
  }

  static double need(const ResultRow& row, const std::string& name) {
    const auto v = row.get(name);
    if (!v) {
      throw Error(ErrorCode::IncompleteData,
                  "row (" + fmt(row.sweep_value) + ", trial " + std::to_string(row.trial) +
                      ") lacks metric " + name);
    }
    return *v;
  }

 private:
  const ExperimentConfig& cfg_;
  std::vector<std::vector<const ResultRow*>> table_;
};

std::optional<double> tolerance(const ExperimentConfig& cfg, const std::string& key) {
  const auto it = cfg.tolerances.find(key);
  if (it == cfg.tolerances.end()) return std::nullopt;
  return it->second;
}

void add(VerdictReport& report, std::string name, bool passed, double measured,
         std::string detail) {
  report.checks.push_back({std::move(name), passed, measured, std::move(detail)});
}

// Largest violation of a monotone trend over medians taken in sweep order;
// direction +1 means non-decreasing is expected.
double trend_violation(const RowTable& rows, const std::string& name, int direction) {
  const auto idx = rows.order();
  double worst = 0.0;
  for (std::size_t k = 1; k < idx.size(); ++k) {
    const double step = rows.median_of(idx[k], name) - rows.median_of(idx[k - 1], name);
    worst = std::max(worst, -direction * step);
  }
  return worst;
}

void check_support_sweep(const ExperimentConfig& cfg, const RowTable& rows,
                         VerdictReport& report) {
  const double violation = trend_violation(rows, "sv_fraction", +1);
  add(report, "sv_fraction_monotone", violation <= 0.0, violation,
      "largest drop of median sv_fraction between consecutive sweep values");

  const double threshold = cfg.tolerances.at("sv_saturation_threshold");
  const double from = cfg.tolerances.at("sv_saturation_from");
  double lowest = kNaN;
  for (std::size_t v = 0; v < rows.values(); ++v) {
    if (rows.value(v) < from) continue;
    const double m = rows.median_of(v, "sv_fraction");
    lowest = std::isnan(lowest) ? m : std::min(lowest, m);
  }
  add(report, "sv_saturation", !std::isnan(lowest) && lowest >= threshold, lowest,
      "min median sv_fraction for sweep values >= " + fmt(from) + ", need >= " +
          fmt(threshold));
}

void check_equivalence(const ExperimentConfig& cfg, const RowTable& rows,
                       VerdictReport& report) {
  std::size_t total = 0;
  std::size_t certified = 0;
  double worst_gap = 0.0;
  double min_sv = 1.0;
  for (std::size_t v = 0; v < rows.values(); ++v) {
    for (const ResultRow* row : rows.at(v)) {
      ++total;
      if (RowTable::need(*row, "all_sv") != 1.0) continue;
      ++certified;
      worst_gap = std::max(worst_gap, RowTable::need(*row, "coef_gap"));
      min_sv = std::min(min_sv, RowTable::need(*row, "sv_fraction"));
    }
  }
  const double frac = static_cast<double>(certified) / static_cast<double>(total);
  const double need_frac = cfg.tolerances.at("min_all_sv_fraction");
  add(report, "all_sv_fraction", frac >= need_frac, frac,
      std::to_string(certified) + "/" + std::to_string(total) +
          " trials certified all-support, need fraction >= " + fmt(need_frac));
  const double gap_tol = cfg.tolerances.at("coef_gap");
  add(report, "coef_gap", certified > 0 && worst_gap <= gap_tol, worst_gap,
      "max relative l_inf gap between SVM and min-norm on certified trials, need <= " +
          fmt(gap_tol));
  add(report, "sv_fraction_certified", certified > 0 && min_sv == 1.0, min_sv,
      "min sv_fraction on certified trials, need 1");
}

void check_su_limit(const ExperimentConfig& cfg, const RowTable& rows,
                    VerdictReport& report) {
  const auto tol = tolerance(cfg, "su_limit_tol");
  if (!tol) return;
  const double limit = std::sqrt(2.0 / std::numbers::pi) * (1.0 - 2.0 * cfg.signal.nu_star);
  for (std::size_t v = 0; v < rows.values(); ++v) {
    if (rows.at(v).front()->regime != to_string(Regime::BothSucceed)) continue;
    const double su = rows.median_of(v, "su");
    add(report, at_value("su_limit", rows.value(v)), std::abs(su - limit) <= *tol, su,
        "median su, need within " + fmt(*tol) + " of " + fmt(limit));
  }
}

void check_regime_q(const ExperimentConfig& cfg, const RowTable& rows,
                    VerdictReport& report) {
  const auto idx = rows.order();
  double min_step = kNaN;
  for (std::size_t k = 1; k < idx.size(); ++k) {
    const double step = rows.median_of(idx[k], "excess_cls_analytic") -
                        rows.median_of(idx[k - 1], "excess_cls_analytic");
    min_step = std::isnan(min_step) ? step : std::min(min_step, step);
  }
  if (idx.size() > 1) {
    add(report, "excess_cls_ordering", min_step > 0.0, min_step,
        "smallest increase of median excess_cls between consecutive q, need > 0");
  }

  const double mse_max = cfg.tolerances.at("mse_success_max");
  const double mse_min = cfg.tolerances.at("mse_failure_min");
  const double cls_min = cfg.tolerances.at("cls_failure_min");
  for (std::size_t v = 0; v < rows.values(); ++v) {
    const std::string& regime = rows.at(v).front()->regime;
    const double q = rows.value(v);
    if (regime == to_string(Regime::BothSucceed)) {
      const double m = rows.median_of(v, "excess_mse_analytic");
      add(report, at_value("excess_mse_success", q), m < mse_max, m,
          "median excess_mse, need < " + fmt(mse_max));
    } else if (regime == to_string(Regime::ClassificationOnly)) {
      const double m = rows.median_of(v, "excess_mse_analytic");
      add(report, at_value("excess_mse_failure", q), m > mse_min, m,
          "median excess_mse, need > " + fmt(mse_min));
    } else if (regime == to_string(Regime::BothFail)) {
      const double m = rows.median_of(v, "excess_cls_analytic");
      add(report, at_value("excess_cls_failure", q), m > cls_min, m,
          "median excess_cls, need > " + fmt(cls_min));
    }
  }
  check_su_limit(cfg, rows, report);
}

void check_regime_n(const ExperimentConfig& cfg, const RowTable& rows,
                    VerdictReport& report) {
  const auto& b = std::get<ensemble::BiLevel>(cfg.ensemble);
  const Regime regime = classify_regime(b.p, b.q, b.r).regime;

  if (const auto slack = tolerance(cfg, "trend_slack")) {
    const double cls = trend_violation(rows, "excess_cls_analytic", -1);
    add(report, "excess_cls_trend", cls <= *slack, cls,
        "largest rise of median excess_cls with n, need <= " + fmt(*slack));
    const int mse_dir = regime == Regime::BothSucceed ? -1 : +1;
    const double mse = trend_violation(rows, "excess_mse_analytic", mse_dir);
    add(report, "excess_mse_trend", mse <= *slack, mse,
        std::string("largest ") + (mse_dir > 0 ? "drop" : "rise") +
            " of median excess_mse with n, need <= " + fmt(*slack));
  }

  if (const auto tol = tolerance(cfg, "exponent_tol")) {
    std::vector<double> ns;
    std::vector<double> cn;
    for (std::size_t v = 0; v < rows.values(); ++v) {
      ns.push_back(rows.value(v));
      cn.push_back(rows.median_of(v, "cn"));
    }
    const ExponentFit fit = fit_exponent(ns, cn);
    const AsymptoticPrediction pred = predicted_scalings(b.p, b.q, b.r, cfg.signal.nu_star);
    const double lo = std::min(pred.cn_lower_exponent, pred.cn_upper_exponent);
    const double hi = std::max(pred.cn_lower_exponent, pred.cn_upper_exponent);
    add(report, "cn_exponent", fit.slope >= lo - *tol && fit.slope <= hi + *tol, fit.slope,
        "slope of log median cn on log n, need within " + fmt(*tol) + " of [" + fmt(lo) +
            ", " + fmt(hi) + "]");
  }
  check_su_limit(cfg, rows, report);
}

void check_margin(const ExperimentConfig& cfg, const RowTable& rows,
                  VerdictReport& report) {
  const auto bounds = rows.metric_all("bound");
  const double lowest = *std::min_element(bounds.begin(), bounds.end());
  add(report, "bound_exceeds_one", lowest > 1.0, lowest, "min bound over all rows, need > 1");

  const auto idx = rows.order();
  if (idx.size() < 2) return;
  const double first = rows.median_of(idx.front(), "err_hat");
  const double last = rows.median_of(idx.back(), "err_hat");
  const bool weak = std::holds_alternative<ensemble::WeakFeatures>(cfg.ensemble);
  add(report, "err_trend", weak ? last < first : last > first, last - first,
      std::string("median err_hat at largest d minus at smallest d, need ") +
          (weak ? "< 0" : "> 0"));
}

void check_fourier(const ExperimentConfig& cfg, const RowTable& rows,
                   VerdictReport& report) {
  if (std::holds_alternative<ensemble::PolyDecay>(cfg.ensemble)) {
    if (const auto m_max = tolerance(cfg, "all_sv_below_m")) {
      double lowest = kNaN;
      for (std::size_t v = 0; v < rows.values(); ++v) {
        if (!(rows.value(v) < *m_max)) continue;
        for (double s : rows.metric(v, "sv_fraction")) {
          lowest = std::isnan(lowest) ? s : std::min(lowest, s);
        }
      }
      add(report, "all_sv_below_m", lowest == 1.0, lowest,
          "min sv_fraction for m < " + fmt(*m_max) + ", need 1");
    }
    return;
  }

  const double tol = cfg.tolerances.at("closed_form_tol");
  double gap_a = 0.0;
  double gap_b = 0.0;
  for (std::size_t v = 0; v < rows.values(); ++v) {
    for (const ResultRow* row : rows.at(v)) {
      gap_a = std::max(gap_a, std::abs(RowTable::need(*row, "fourier_a") -
                                       RowTable::need(*row, "fourier_a_closed")));
      gap_b = std::max(gap_b, std::abs(RowTable::need(*row, "fourier_b") -
                                       RowTable::need(*row, "fourier_b_closed")));
    }
  }
  add(report, "closed_form_a", gap_a <= tol, gap_a,
      "max |a measured - a closed form|, need <= " + fmt(tol));
  add(report, "closed_form_b", gap_b <= tol, gap_b,
      "max |b measured - b closed form|, need <= " + fmt(tol));

  if (const auto factor = tolerance(cfg, "approx_factor")) {
    double worst = 1.0;
    for (std::size_t v = 0; v < rows.values(); ++v) {
      const ResultRow& row = *rows.at(v).front();
      const auto approx = row.get("fourier_a_approx");
      if (!approx) continue;
      const double ratio = RowTable::need(row, "fourier_a_closed") / *approx;
      worst = std::max({worst, ratio, 1.0 / ratio});
    }
    add(report, "a_approx_factor", worst <= *factor, worst,
        "worst ratio between exact and power-law survival, need <= " + fmt(*factor));
  }

  if (tolerance(cfg, "union_bound")) {
    for (std::size_t v = 0; v < rows.values(); ++v) {
      const auto bound = rows.at(v).front()->get("cls_upper_bound");
      if (!bound) continue;
      const double err = rows.median_of(v, "err_hat");
      add(report, at_value("union_bound", rows.value(v)), err <= *bound, err,
          "median test error, need <= " + fmt(*bound));
    }
  }
}

}  // namespace

double median(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(),
                              [](double v) { return std::isnan(v); }),
               values.end());
  if (values.empty()) return kNaN;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<long>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<long>(mid));
  return 0.5 * (lower + upper);
}

bool VerdictReport::all_passed() const noexcept {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

const Check* VerdictReport::find(const std::string& name) const noexcept {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

VerdictReport verdict(const ExperimentConfig& config, const std::vector<ResultRow>& rows) {
  const RowTable table(config, rows);
  VerdictReport report;
  switch (config.experiment) {
    case ExperimentKind::SvFractionSweep: check_support_sweep(config, table, report); break;
    case ExperimentKind::EquivalenceCheck: check_equivalence(config, table, report); break;
    case ExperimentKind::RegimeSweepQ: check_regime_q(config, table, report); break;
    case ExperimentKind::RegimeSweepN: check_regime_n(config, table, report); break;
    case ExperimentKind::MarginSweep: check_margin(config, table, report); break;
    case ExperimentKind::FourierSweep: check_fourier(config, table, report); break;
  }
  return report;
}

}  // namespace ovp
