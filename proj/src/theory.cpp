#include "kgns/theory.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "kgns/errors.hpp"
#include "kgns/numeric.hpp"

namespace kgns {
namespace {

// Weight on the noise term of the expected loss: nu for the plain NS loss (no 1/nu),
// 1 for the normalised KGE form.
double noise_multiplier(LossFamily family, std::size_t nu) {
  switch (family) {
    case LossFamily::kNsOriginal: return static_cast<double>(nu);
    case LossFamily::kNsKge: return 1.0;
    case LossFamily::kSans: break;
  }
  throw ConfigError("closed-form analysis covers the ns and ns-kge losses only");
}

double cell_derivative(double s, double a, double b, double margin) {
  return -a * sigmoid(-(s + margin)) + b * sigmoid(s + margin);
}

double cell_optimum(double a, double b, double margin) {
  if (a == 0) return -std::numeric_limits<double>::infinity();
  return std::log(a / b) - margin;
}

// Loss contribution at the optimum; the p_d = 0 case is the limit s -> -inf.
double cell_min(double a, double b, double margin, bool nonpositive) {
  const double s = cell_optimum(a, b, margin);
  if (std::isinf(s)) return 0.0;
  return cell_loss(nonpositive ? std::min(s, 0.0) : s, a, b, margin);
}

std::vector<double> dirichlet_row(std::size_t n, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> row(n);
  double total = 0;
  for (auto& v : row) {
    v = std::max(expo(rng), 1e-6);
    total += v;
  }
  for (auto& v : row) v /= total;
  return row;
}

}  // namespace

CategoricalInstance CategoricalInstance::from_rows(const std::vector<std::vector<double>>& data_rows,
                                                   const std::vector<std::vector<double>>& noise_rows) {
  if (data_rows.size() != noise_rows.size() || data_rows.empty()) {
    throw ConfigError("data and noise must have the same nonzero number of rows");
  }
  CategoricalInstance inst;
  inst.num_queries = data_rows.size();
  inst.num_labels = data_rows[0].size();
  for (std::size_t x = 0; x < inst.num_queries; ++x) {
    if (data_rows[x].size() != inst.num_labels || noise_rows[x].size() != inst.num_labels) {
      throw ConfigError("ragged distribution rows");
    }
    inst.data.insert(inst.data.end(), data_rows[x].begin(), data_rows[x].end());
    inst.noise.insert(inst.noise.end(), noise_rows[x].begin(), noise_rows[x].end());
  }
  validate(inst);
  return inst;
}

void validate(const CategoricalInstance& inst) {
  if (inst.num_labels == 0 || inst.num_queries == 0) throw ConfigError("empty categorical instance");
  for (std::size_t x = 0; x < inst.num_queries; ++x) {
    double sd = 0, sn = 0;
    for (std::size_t y = 0; y < inst.num_labels; ++y) {
      const double d = inst.data_row(x)[y], n = inst.noise_row(x)[y];
      if (d < 0) throw ConfigError("negative data probability");
      if (!(n > 0)) throw ConfigError("noise distribution must be strictly positive");
      sd += d;
      sn += n;
    }
    if (std::abs(sd - 1) > 1e-12 || std::abs(sn - 1) > 1e-12) {
      throw ConfigError("distribution row " + std::to_string(x) + " does not sum to 1");
    }
  }
}

CategoricalInstance random_instance(std::size_t queries, std::size_t labels, Rng& rng, bool uniform_noise) {
  std::vector<std::vector<double>> data, noise;
  for (std::size_t x = 0; x < queries; ++x) {
    data.push_back(dirichlet_row(labels, rng));
    noise.push_back(uniform_noise ? std::vector<double>(labels, 1.0 / static_cast<double>(labels))
                                  : dirichlet_row(labels, rng));
  }
  return CategoricalInstance::from_rows(data, noise);
}

std::vector<double> TabularScoreModel::effective_row(std::size_t x) const {
  std::vector<double> row(num_labels);
  for (std::size_t y = 0; y < num_labels; ++y) row[y] = at(x, y);
  return row;
}

std::vector<double> TabularScoreModel::distribution() const {
  std::vector<double> out;
  out.reserve(scores.size());
  for (std::size_t x = 0; x < num_queries; ++x) {
    const auto row = softmax(effective_row(x));
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

std::vector<double> objective_distribution(const CategoricalInstance& inst) {
  validate(inst);
  std::vector<double> out(inst.data.size());
  for (std::size_t x = 0; x < inst.num_queries; ++x) {
    double total = 0;
    for (std::size_t y = 0; y < inst.num_labels; ++y) {
      const std::size_t i = x * inst.num_labels + y;
      out[i] = inst.data[i] / inst.noise[i];
      total += out[i];
    }
    for (std::size_t y = 0; y < inst.num_labels; ++y) out[x * inst.num_labels + y] /= total;
  }
  return out;
}

std::vector<double> optimal_scores(const CategoricalInstance& inst, LossFamily family, double margin,
                                   std::size_t nu) {
  const double c = noise_multiplier(family, nu);
  std::vector<double> out(inst.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = cell_optimum(inst.data[i], c * inst.noise[i], margin);
  return out;
}

std::vector<bool> reachability(const CategoricalInstance& inst, LossFamily family, double margin,
                               std::size_t nu) {
  // Equivalent to p_d <= c * exp(gamma) * p_n.
  const auto opt = optimal_scores(inst, family, margin, nu);
  std::vector<bool> out(opt.size());
  for (std::size_t i = 0; i < opt.size(); ++i) out[i] = opt[i] <= 0.0;
  return out;
}

double minimal_margin(std::size_t label_count) {
  if (label_count < 1) throw ConfigError("label count must be >= 1");
  return std::log(static_cast<double>(label_count));
}

double cell_loss(double s, double a, double b, double margin) {
  double loss = 0;
  if (a != 0) loss -= a * log_sigmoid(s + margin);
  if (b != 0) loss -= b * log_sigmoid(-s - margin);
  return loss;
}

double expected_loss(const CategoricalInstance& inst, std::span<const double> scores, LossFamily family,
                     double margin, std::size_t nu) {
  const double c = noise_multiplier(family, nu);
  double total = 0;
  for (std::size_t i = 0; i < inst.data.size(); ++i) {
    total += cell_loss(scores[i], inst.data[i], c * inst.noise[i], margin);
  }
  return total / static_cast<double>(inst.num_queries);
}

LossFloor exact_loss_and_floor(const CategoricalInstance& inst, const TabularScoreModel& model,
                               LossFamily family, double margin, std::size_t nu) {
  validate(inst);
  const double c = noise_multiplier(family, nu);
  const bool nonpositive = model.range == TabularScoreModel::Range::kNonPositive;
  const double wq = 1.0 / static_cast<double>(inst.num_queries);

  LossFloor out;
  out.cell_gap.resize(inst.data.size());
  for (std::size_t x = 0; x < inst.num_queries; ++x) {
    for (std::size_t y = 0; y < inst.num_labels; ++y) {
      const std::size_t i = x * inst.num_labels + y;
      const double a = inst.data[i], b = c * inst.noise[i];
      const double free_min = cell_min(a, b, margin, false);
      const double constrained_min = cell_min(a, b, margin, nonpositive);
      out.loss += wq * cell_loss(model.at(x, y), a, b, margin);
      out.unconstrained_floor += wq * free_min;
      out.floor += wq * constrained_min;
      out.cell_gap[i] = wq * (constrained_min - free_min);
    }
  }
  return out;
}

FitResult fit_tabular(const CategoricalInstance& inst, LossFamily family, double margin, std::size_t nu,
                      TabularScoreModel::Range range, const FitOptions& opts) {
  validate(inst);
  const double c = noise_multiplier(family, nu);
  const bool nonpositive = range == TabularScoreModel::Range::kNonPositive;

  FitResult fit{TabularScoreModel(inst.num_queries, inst.num_labels, range), 0, 0};
  auto& s = fit.model.scores;
  std::vector<double> step(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) step[i] = 4.0 / (inst.data[i] + c * inst.noise[i]);

  for (fit.iterations = 0; fit.iterations < opts.max_iterations; ++fit.iterations) {
    double worst = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double g = cell_derivative(s[i], inst.data[i], c * inst.noise[i], margin);
      double next = s[i] - step[i] * g;
      if (nonpositive) next = std::min(next, 0.0);
      worst = std::max(worst, std::abs(next - s[i]) / step[i]);
      s[i] = next;
    }
    fit.gradient_norm = worst;
    if (worst < opts.gradient_tolerance) break;
  }
  return fit;
}

ScalingProbe gradient_scaling_probe(const CategoricalInstance& inst, std::size_t x,
                                    std::span<const double> scores, LossFamily family, double margin,
                                    std::span<const std::size_t> nus, std::size_t trials, Rng& rng) {
  if (scores.size() != inst.num_labels) throw ConfigError("score row size must equal |Y|");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  const auto noise = inst.noise_row(x);
  std::discrete_distribution<std::size_t> draw(noise.begin(), noise.end());

  std::vector<double> sig(scores.size());
  for (std::size_t y = 0; y < scores.size(); ++y) sig[y] = sigmoid(scores[y] + margin);

  ScalingProbe probe;
  std::vector<double> g(scores.size()), mean(scores.size());
  for (std::size_t nu : nus) {
    const double coef = family == LossFamily::kNsOriginal ? 1.0 : 1.0 / static_cast<double>(nu);
    std::fill(mean.begin(), mean.end(), 0.0);
    double sum = 0, sum_sq = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t i = 0; i < nu; ++i) {
        const std::size_t y = draw(rng);
        g[y] += coef * sig[y];
      }
      double sq = 0;
      for (std::size_t y = 0; y < g.size(); ++y) {
        sq += g[y] * g[y];
        mean[y] += g[y];
      }
      const double norm = std::sqrt(sq);
      sum += norm;
      sum_sq += norm * norm;
    }
    const double n = static_cast<double>(trials);
    ScalingRow row{nu, sum / n, 0.0, 0.0};
    const double var = std::max(0.0, sum_sq / n - row.mean_norm * row.mean_norm);
    row.mean_norm_se = std::sqrt(var / n);
    double sq = 0;
    for (double m : mean) sq += (m / n) * (m / n);
    row.norm_of_mean = std::sqrt(sq);
    probe.rows.push_back(row);
  }

  const double c = family == LossFamily::kNsOriginal ? static_cast<double>(nus.empty() ? 1 : nus.front()) : 1.0;
  const auto data = inst.data_row(x);
  for (double m : {0.0, 6.0}) {
    double sq = 0;
    for (std::size_t y = 0; y < scores.size(); ++y) {
      const double gy = cell_derivative(scores[y], data[y], c * noise[y], m);
      sq += gy * gy;
    }
    probe.margin_rows.push_back({m, std::sqrt(sq)});
  }
  return probe;
}

double kge_loss_with_model_noise(std::span<const double> scores, double positive_score, double margin,
                                 double temperature) {
  const auto p_theta = softmax(scores, temperature);
  double loss = -log_sigmoid(positive_score + margin);
  for (std::size_t y = 0; y < scores.size(); ++y) loss -= p_theta[y] * log_sigmoid(-scores[y] - margin);
  return loss;
}

SansProbe sans_equivalence_probe(std::span<const double> scores, double positive_score, double margin,
                                 double temperature, std::span<const std::size_t> nus, std::size_t trials,
                                 Rng& rng) {
  if (scores.empty()) throw ConfigError("empty score row");
  const double exact = kge_loss_with_model_noise(scores, positive_score, margin, temperature);
  const LossSpec spec{.family = LossFamily::kSans, .margin = margin, .temperature = temperature};
  std::uniform_int_distribution<std::size_t> pick(0, scores.size() - 1);

  SansProbe probe;
  std::vector<double> sampled;
  for (std::size_t nu : nus) {
    double sum = 0, sum_sq = 0;
    sampled.resize(nu);
    for (std::size_t t = 0; t < trials; ++t) {
      for (auto& v : sampled) v = scores[pick(rng)];
      const auto terms = instance_terms(spec, positive_score, sampled);
      const double gap = std::abs(terms.positive + terms.negative - exact);
      sum += gap;
      sum_sq += gap * gap;
    }
    const double n = static_cast<double>(trials);
    const double mean = sum / n;
    probe.rows.push_back({nu, mean, std::sqrt(std::max(0.0, sum_sq / n - mean * mean) / n)});
  }
  const auto terms = instance_terms(spec, positive_score, scores);
  probe.exhaustive_gap = std::abs(terms.positive + terms.negative - exact);
  return probe;
}

}  // namespace kgns
