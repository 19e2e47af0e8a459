#include "kgns/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "kgns/errors.hpp"
#include "kgns/numeric.hpp"
#include "kgns/seed.hpp"
#include "kgns/theory.hpp"

namespace kgns {
namespace {

using Range = TabularScoreModel::Range;

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

class Builder {
 public:
  explicit Builder(std::string name) { report_.name = std::move(name); }

  void table(std::string_view title, std::string_view header) {
    out_ << "# " << title << "\n" << header << "\n";
  }
  template <typename... Cols>
  void row(const Cols&... cols) {
    bool first = true;
    ((out_ << (first ? "" : "\t") << cols, first = false), ...);
    out_ << "\n";
  }
  void check(std::string name, bool ok, std::string detail) {
    report_.checks.push_back({std::move(name), ok, std::move(detail)});
  }
  ScenarioReport finish() {
    report_.tables = out_.str();
    return std::move(report_);
  }

 private:
  ScenarioReport report_;
  std::ostringstream out_;
};

double max_row_l1(const std::vector<double>& p, const std::vector<double>& q, std::size_t labels) {
  double worst = 0;
  for (std::size_t start = 0; start < p.size(); start += labels) {
    double l1 = 0;
    for (std::size_t y = 0; y < labels; ++y) l1 += std::abs(p[start + y] - q[start + y]);
    worst = std::max(worst, l1);
  }
  return worst;
}

ScenarioReport prop1(std::uint64_t seed) {
  Builder b("prop1");
  Rng rng = make_rng(seed, "theory/prop1");
  const auto inst = random_instance(3, 8, rng);
  const auto target = objective_distribution(inst);

  struct Case {
    const char* label;
    LossFamily family;
    double margin;
    std::size_t nu;
  };
  const Case cases[] = {{"ns", LossFamily::kNsOriginal, 0.0, 4}, {"ns-kge", LossFamily::kNsKge, 3.0, 4}};

  b.table("softmax of fitted scores vs objective distribution", "loss\tgamma\tnu\titerations\tmax_row_l1\tmax_exp_err");
  for (const auto& c : cases) {
    const auto fit = fit_tabular(inst, c.family, c.margin, c.nu, Range::kUnbounded);
    const double l1 = max_row_l1(fit.model.distribution(), target, inst.num_labels);
    double exp_err = 0;
    const double scale = c.family == LossFamily::kNsOriginal ? static_cast<double>(c.nu) : std::exp(c.margin);
    for (std::size_t i = 0; i < inst.data.size(); ++i) {
      exp_err = std::max(exp_err, std::abs(std::exp(fit.model.scores[i]) - inst.data[i] / (scale * inst.noise[i])));
    }
    b.row(c.label, c.margin, c.nu, fit.iterations, fmt(l1), fmt(exp_err));
    b.check(std::string(c.label) + "-objective-distribution", l1 < 1e-3, "L1 " + fmt(l1));
    b.check(std::string(c.label) + "-closed-form-optimum", exp_err < 1e-4, "max |exp(s) - target| " + fmt(exp_err));
  }
  return b.finish();
}

// Shared by prop2 and prop4: a one-hot data row under uniform noise.
CategoricalInstance one_hot_instance(std::size_t labels) {
  std::vector<double> data(labels, 0.0), noise(labels, 1.0 / static_cast<double>(labels));
  data[0] = 1.0;
  return CategoricalInstance::from_rows({data}, {noise});
}

bool reachability_matches_gap(const CategoricalInstance& inst, LossFamily family, double margin, std::size_t nu) {
  const auto reach = reachability(inst, family, margin, nu);
  const auto floor = exact_loss_and_floor(inst, TabularScoreModel(inst.num_queries, inst.num_labels, Range::kNonPositive),
                                          family, margin, nu);
  for (std::size_t i = 0; i < reach.size(); ++i) {
    if (reach[i] == (floor.cell_gap[i] > 0)) return false;
  }
  return true;
}

ScenarioReport prop2(std::uint64_t) {
  Builder b("prop2");
  const auto inst = CategoricalInstance::from_rows({{0.9, 0.1}}, {{0.5, 0.5}});
  const TabularScoreModel zero(1, 2, Range::kNonPositive);

  b.table("nonpositive-range floors, ns-kge", "gamma\tloss_floor\tunconstrained_floor\tgap\treachable");
  const double margins[] = {0.0, minimal_margin(2) + 0.01};
  double gaps[2];
  for (int k = 0; k < 2; ++k) {
    const auto f = exact_loss_and_floor(inst, zero, LossFamily::kNsKge, margins[k], 1);
    const auto reach = reachability(inst, LossFamily::kNsKge, margins[k], 1);
    gaps[k] = f.floor - f.unconstrained_floor;
    b.row(fmt(margins[k]), fmt(f.floor, "%.10f"), fmt(f.unconstrained_floor, "%.10f"), fmt(gaps[k]),
          std::all_of(reach.begin(), reach.end(), [](bool r) { return r; }) ? "all" : "not-all");
  }
  b.check("gap-positive-when-unreachable", gaps[0] > 0, "gap " + fmt(gaps[0]));
  b.check("gap-vanishes-past-minimal-margin", std::abs(gaps[1]) < 1e-9, "gap " + fmt(gaps[1]));

  const auto fit = fit_tabular(inst, LossFamily::kNsKge, 0.0, 1, Range::kNonPositive);
  const auto at_fit = exact_loss_and_floor(inst, fit.model, LossFamily::kNsKge, 0.0, 1);
  b.check("projected-descent-reaches-floor", std::abs(at_fit.loss - at_fit.floor) < 1e-9,
          "loss - floor " + fmt(at_fit.loss - at_fit.floor));
  b.check("reachability-matches-floor-gap", reachability_matches_gap(inst, LossFamily::kNsKge, 0.0, 1), "");

  const std::size_t labels = 8;
  const auto hot = one_hot_instance(labels);
  const double lo = minimal_margin(labels) - 0.01, hi = minimal_margin(labels) + 0.01;
  const bool flips = !reachability(hot, LossFamily::kNsKge, lo, 1)[0] && reachability(hot, LossFamily::kNsKge, hi, 1)[0];
  b.table("reachability of a p_d = 1 cell, |Y| = 8, uniform noise", "gamma\treachable");
  b.row(fmt(lo), reachability(hot, LossFamily::kNsKge, lo, 1)[0]);
  b.row(fmt(hi), reachability(hot, LossFamily::kNsKge, hi, 1)[0]);
  b.check("reachability-flips-at-log-Y", flips, "");
  return b.finish();
}

ScenarioReport prop3(std::uint64_t seed) {
  Builder b("prop3");
  Rng rng = make_rng(seed, "theory/prop3");
  const auto inst = random_instance(1, 8, rng);
  std::normal_distribution<double> normal(-2.0, 1.0);
  std::vector<double> scores(8);
  for (auto& s : scores) s = normal(rng);

  const std::size_t nus[] = {1};
  const auto probe = gradient_scaling_probe(inst, 0, scores, LossFamily::kNsKge, 0.0, nus, 1, rng);
  b.table("exact expected-gradient norm at fixed scores, ns-kge", "gamma\tgradient_norm");
  for (const auto& r : probe.margin_rows) b.row(r.margin, fmt(r.gradient_norm, "%.10f"));
  const double diff = std::abs(probe.margin_rows[0].gradient_norm - probe.margin_rows[1].gradient_norm);
  b.check("margin-changes-gradient", diff > 1e-6, "difference " + fmt(diff));

  const auto s0 = optimal_scores(inst, LossFamily::kNsKge, 0.0, 1);
  const auto s6 = optimal_scores(inst, LossFamily::kNsKge, 6.0, 1);
  double shift = 0;
  for (std::size_t i = 0; i < s0.size(); ++i) shift = std::max(shift, std::abs(s0[i] - s6[i] - 6.0));
  b.check("optimum-shifts-by-margin", shift < 1e-12, "max deviation " + fmt(shift));
  return b.finish();
}

ScenarioReport prop4(std::uint64_t) {
  Builder b("prop4");
  const std::size_t labels = 8;
  const auto inst = one_hot_instance(labels);
  const TabularScoreModel zero(1, labels, Range::kNonPositive);

  b.table("nonpositive-range floors, ns with gamma = 0", "nu\treachable\tgap");
  bool ok_low = true, ok_high = true;
  for (std::size_t nu : {1, 4, 7, 8, 16}) {
    const auto reach = reachability(inst, LossFamily::kNsOriginal, 0.0, nu);
    const auto f = exact_loss_and_floor(inst, zero, LossFamily::kNsOriginal, 0.0, nu);
    const double gap = f.floor - f.unconstrained_floor;
    const bool all = std::all_of(reach.begin(), reach.end(), [](bool r) { return r; });
    b.row(nu, all ? "all" : "not-all", fmt(gap));
    if (nu < labels) ok_low = ok_low && !all && gap > 0;
    else ok_high = ok_high && all && std::abs(gap) < 1e-9;
    if (!reachability_matches_gap(inst, LossFamily::kNsOriginal, 0.0, nu)) ok_low = ok_high = false;
  }
  b.check("unreachable-below-nu-equals-Y", ok_low, "");
  b.check("reachable-from-nu-equals-Y", ok_high, "");
  return b.finish();
}

ScenarioReport prop5(std::uint64_t seed) {
  Builder b("prop5");
  Rng rng = make_rng(seed, "theory/prop5");
  const std::size_t labels = 16;
  const auto inst = random_instance(1, labels, rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> scores(labels);
  for (auto& s : scores) s = normal(rng);

  const std::size_t nus[] = {8, 64, 512};
  const std::size_t trials = 10000;
  struct Case {
    const char* label;
    LossFamily family;
    double expected_ratio;  // norm(nu) / norm(8) per unit nu / 8
  };
  for (const Case c : {Case{"ns", LossFamily::kNsOriginal, 1.0}, Case{"ns-kge", LossFamily::kNsKge, 0.0}}) {
    Rng trial_rng = make_rng(seed, std::string("theory/prop5/") + c.label);
    const auto probe = gradient_scaling_probe(inst, 0, scores, c.family, 0.0, nus, trials, trial_rng);
    b.table(std::string("negative-term gradient norms, ") + c.label,
            "nu\tnorm_of_mean\tratio_to_nu8\texpected_ratio\tmean_norm\tmean_norm_se");
    bool ok = true;
    for (const auto& r : probe.rows) {
      const double ratio = r.norm_of_mean / probe.rows[0].norm_of_mean;
      const double expected = c.expected_ratio > 0 ? static_cast<double>(r.nu) / 8.0 : 1.0;
      ok = ok && std::abs(ratio / expected - 1.0) <= 0.10;
      b.row(r.nu, fmt(r.norm_of_mean), fmt(ratio), fmt(expected), fmt(r.mean_norm), fmt(r.mean_norm_se));
    }
    b.check(std::string(c.label) + (c.expected_ratio > 0 ? "-linear-in-nu" : "-flat-in-nu"), ok, "");
  }
  return b.finish();
}

ScenarioReport prop6(std::uint64_t seed) {
  Builder b("prop6");
  Rng rng = make_rng(seed, "theory/prop6");
  const std::size_t labels = 32;
  std::normal_distribution<double> normal(-1.0, 1.5);
  std::vector<double> scores(labels);
  for (auto& s : scores) s = normal(rng);
  const double positive = normal(rng);

  const std::size_t nus[] = {4, 16, 64};
  Rng trial_rng = make_rng(seed, "theory/prop6/trials");
  const auto probe = sans_equivalence_probe(scores, positive, 0.0, 1.0, nus, 10000, trial_rng);
  b.table("|sans - ns-kge with p_n = p_theta|, |Y| = 32", "nu\tmean_gap\tgap_se");
  for (const auto& r : probe.rows) b.row(r.nu, fmt(r.mean_gap), fmt(r.gap_se));
  b.row("exhaustive", fmt(probe.exhaustive_gap), 0);

  bool decreasing = true;
  for (std::size_t i = 1; i < probe.rows.size(); ++i) {
    const auto& p = probe.rows[i - 1];
    const auto& q = probe.rows[i];
    decreasing = decreasing && q.mean_gap <= p.mean_gap + 3 * std::hypot(p.gap_se, q.gap_se);
  }
  b.check("gap-decreases-with-nu", decreasing, "");
  b.check("exhaustive-gap-zero", probe.exhaustive_gap <= 1e-12, "gap " + fmt(probe.exhaustive_gap));
  return b.finish();
}

ScenarioReport margins(std::uint64_t) {
  Builder b("margins");
  struct Row {
    const char* dataset;
    std::size_t entities;
    double expected;
  };
  b.table("minimal margin log|Y|", "dataset\tentities\tminimal_margin");
  for (const Row r : {Row{"FB15k-237", 14541, 9.58}, Row{"WN18RR", 40943, 10.62}, Row{"YAGO3-10", 123182, 11.72}}) {
    const double m = minimal_margin(r.entities);
    b.row(r.dataset, r.entities, fmt(m, "%.2f"));
    b.check(std::string(r.dataset) + "-margin", std::abs(std::round(m * 100) / 100 - r.expected) < 1e-9,
            fmt(m, "%.6f"));
  }
  return b.finish();
}

}  // namespace

bool ScenarioReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"prop1", "prop2", "prop3", "prop4", "prop5", "prop6", "margins"};
  return names;
}

ScenarioReport run_scenario(std::string_view name, std::uint64_t seed) {
  if (name == "prop1") return prop1(seed);
  if (name == "prop2") return prop2(seed);
  if (name == "prop3") return prop3(seed);
  if (name == "prop4") return prop4(seed);
  if (name == "prop5") return prop5(seed);
  if (name == "prop6") return prop6(seed);
  if (name == "margins") return margins(seed);
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

std::string format_report(const ScenarioReport& report) {
  std::string out = report.tables;
  for (const auto& c : report.checks) {
    out += (c.passed ? "PASS " : "FAIL ") + report.name + "/" + c.name;
    if (!c.detail.empty()) out += "\t" + c.detail;
    out += "\n";
  }
  return out;
}

}  // namespace kgns
