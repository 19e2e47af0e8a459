#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kgns/loss.hpp"
#include "kgns/seed.hpp"

namespace kgns {

/// Per-query categorical data and noise distributions over |Y| labels, stored as
/// row-major (query, label) tables.
struct CategoricalInstance {
  std::size_t num_queries = 0;
  std::size_t num_labels = 0;
  std::vector<double> data;   // p_d(y|x)
  std::vector<double> noise;  // p_n(y|x), strictly positive

  std::span<const double> data_row(std::size_t x) const { return {data.data() + x * num_labels, num_labels}; }
  std::span<const double> noise_row(std::size_t x) const { return {noise.data() + x * num_labels, num_labels}; }

  static CategoricalInstance from_rows(const std::vector<std::vector<double>>& data_rows,
                                       const std::vector<std::vector<double>>& noise_rows);
};

/// Rows must sum to 1 within 1e-12 and noise must be strictly positive.
void validate(const CategoricalInstance& inst);

/// Random rows drawn from a flat Dirichlet; noise is uniform when `uniform_noise`.
CategoricalInstance random_instance(std::size_t queries, std::size_t labels, Rng& rng,
                                    bool uniform_noise = false);

/// One free score per (query, label). kNonPositive clamps to (-inf, 0], the range of
/// a distance-based scorer.
struct TabularScoreModel {
  enum class Range { kUnbounded, kNonPositive };

  std::size_t num_queries = 0;
  std::size_t num_labels = 0;
  Range range = Range::kUnbounded;
  std::vector<double> scores;

  TabularScoreModel() = default;
  TabularScoreModel(std::size_t queries, std::size_t labels, Range r, double init = 0.0)
      : num_queries(queries), num_labels(labels), range(r), scores(queries * labels, init) {}

  double at(std::size_t x, std::size_t y) const {
    const double s = scores[x * num_labels + y];
    return range == Range::kNonPositive && s > 0 ? 0.0 : s;
  }
  std::vector<double> effective_row(std::size_t x) const;
  /// softmax of each effective row, flattened.
  std::vector<double> distribution() const;
};

/// (p_d / p_n) normalised per row.
std::vector<double> objective_distribution(const CategoricalInstance& inst);

/// Closed-form unbounded optimum of the expected loss:
///   ns:     exp(s) = p_d / (nu * exp(gamma) * p_n)   (gamma = 0 gives the plain NS optimum)
///   ns-kge: exp(s) = p_d / (exp(gamma) * p_n)
/// Cells with p_d = 0 have optimum -inf.
std::vector<double> optimal_scores(const CategoricalInstance& inst, LossFamily family, double margin,
                                   std::size_t nu);

/// True where the unbounded optimum is <= 0, i.e. attainable by a nonpositive scorer.
std::vector<bool> reachability(const CategoricalInstance& inst, LossFamily family, double margin,
                               std::size_t nu);

/// Smallest margin making every cell reachable under uniform noise: log(|Y|).
double minimal_margin(std::size_t label_count);

/// Expected loss of one cell: -a log sigma(s + gamma) - b log sigma(-s - gamma).
double cell_loss(double s, double a, double b, double margin);

/// Full-expectation loss with queries weighted uniformly.
double expected_loss(const CategoricalInstance& inst, std::span<const double> scores, LossFamily family,
                     double margin, std::size_t nu);

struct LossFloor {
  double loss = 0;                 // at the model's effective scores
  double floor = 0;                // minimum under the model's range constraint
  double unconstrained_floor = 0;  // minimum with unbounded scores
  std::vector<double> cell_gap;    // per-cell floor - unconstrained floor contribution
};

LossFloor exact_loss_and_floor(const CategoricalInstance& inst, const TabularScoreModel& model,
                               LossFamily family, double margin, std::size_t nu);

struct FitOptions {
  std::size_t max_iterations = 2'000'000;
  double gradient_tolerance = 1e-13;
};

struct FitResult {
  TabularScoreModel model;
  std::size_t iterations = 0;
  double gradient_norm = 0;
};

/// Full-expectation (projected, per-cell step 4/(a+b)) gradient descent from zero scores.
FitResult fit_tabular(const CategoricalInstance& inst, LossFamily family, double margin, std::size_t nu,
                      TabularScoreModel::Range range, const FitOptions& opts = {});

struct ScalingRow {
  std::size_t nu = 0;
  double mean_norm = 0;     // mean over trials of ||negative-term gradient||
  double mean_norm_se = 0;  // standard error of mean_norm
  double norm_of_mean = 0;  // ||mean over trials of the gradient||
};

struct MarginRow {
  double margin = 0;
  double gradient_norm = 0;  // exact expected-gradient norm at fixed scores
};

struct ScalingProbe {
  std::vector<ScalingRow> rows;
  std::vector<MarginRow> margin_rows;
};

/// Monte-Carlo negative-term gradients (w.r.t. the score row of query x) at fixed
/// scores, with negatives drawn from p_n(.|x); plus the exact gradient norm at
/// margins 0 and 6.
ScalingProbe gradient_scaling_probe(const CategoricalInstance& inst, std::size_t x,
                                    std::span<const double> scores, LossFamily family, double margin,
                                    std::span<const std::size_t> nus, std::size_t trials, Rng& rng);

struct GapRow {
  std::size_t nu = 0;
  double mean_gap = 0;
  double gap_se = 0;
};

struct SansProbe {
  std::vector<GapRow> rows;
  double exhaustive_gap = 0;  // every label exactly once instead of sampling
};

/// |sampled SANS loss - ns-kge loss with p_n = p_theta| for one score row, negatives
/// drawn uniformly with replacement.
SansProbe sans_equivalence_probe(std::span<const double> scores, double positive_score, double margin,
                                 double temperature, std::span<const std::size_t> nus, std::size_t trials,
                                 Rng& rng);

/// Exact ns-kge loss of one instance with p_n = softmax(temperature * scores).
double kge_loss_with_model_noise(std::span<const double> scores, double positive_score, double margin,
                                 double temperature);

}  // namespace kgns
