#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgns/data.hpp"
#include "kgns/loss.hpp"
#include "kgns/model.hpp"
#include "kgns/theory.hpp"

namespace kgns {

enum class LrSchedule { kConstant, kHalveAtFraction };

struct TrainConfig {
  ModelKind model = ModelKind::kTransE;
  std::size_t dim = 100;
  std::optional<int> p_norm;  // defaults per model kind
  std::size_t batch_size = 512;
  std::size_t max_steps = 1000;
  double learning_rate = 1e-3;
  LrSchedule lr_schedule = LrSchedule::kConstant;
  double lr_halve_fraction = 0.5;
  std::uint64_t seed = 0;
  std::size_t eval_every = 0;  // 0 disables periodic validation
  std::size_t log_every = 100;
  bool final_eval = true;
  LossSpec loss;
  std::string dataset_path;
};

void validate(const TrainConfig& cfg);
double learning_rate_at(const TrainConfig& cfg, std::size_t step);

/// JSON document mirroring TrainConfig. Missing keys keep the values already in
/// `base`; unknown keys are rejected.
TrainConfig config_from_json(const std::string& text, TrainConfig base = {});
std::string config_to_json(const TrainConfig& cfg);

/// Adam moments for every parameter of a model. Moments of a row change only when
/// that row receives a gradient; the step counter advances once per call.
struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  std::vector<double> m_entities, v_entities;
  std::vector<double> m_relations, v_relations;
  double m_scalar = 0, v_scalar = 0;
  std::size_t step = 0;

  static AdamState for_params(const ModelParams& params);
};

/// Bias-corrected Adam update of one dense block; `step` is the 1-based count.
void adam_update(std::span<double> param, std::span<double> m, std::span<double> v,
                 std::span<const double> grad, double lr, std::size_t step);

/// Sparse update: only rows present in `grad` move.
void adam_step(ModelParams& params, const GradientAccumulator& grad, AdamState& state, double lr);

struct MetricRecord {
  std::size_t step = 0;
  std::string split;
  std::optional<double> loss;
  std::optional<double> mrr, hits1, hits3, hits10;

  friend bool operator==(const MetricRecord&, const MetricRecord&) = default;
};

/// {"step":..,"loss":..,"split":..,"mrr":..,"hits1":..,"hits3":..,"hits10":..}; absent values are null.
std::string metric_json(const MetricRecord& r);

struct TrainResult {
  ModelParams params;
  std::vector<MetricRecord> log;
};

using MetricSink = std::function<void(const MetricRecord&)>;

/// Minibatch training with one Adam step per batch. Logs the first batch loss at
/// step 0, the mean training loss of every `log_every` window, validation metrics
/// every `eval_every` steps, and final valid/test metrics. Throws NumericalAbort on
/// a non-finite loss.
TrainResult train(const TrainConfig& cfg, const Dataset& data, const MetricSink& sink = {});

struct TabularTrainConfig {
  LossSpec loss;
  std::size_t steps = 1000;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  bool expected_gradient = false;  // exact full-expectation gradient instead of sampling
  TabularScoreModel::Range range = TabularScoreModel::Range::kUnbounded;
  std::uint64_t seed = 0;
};

struct TabularTrainResult {
  TabularScoreModel model;
  std::vector<double> losses;  // per step (sampled batch loss, or exact expected loss)
};

/// Adam on a free score table. Sampled mode draws x uniformly, y ~ p_d(.|x) and
/// negatives ~ p_n(.|x); SANS negatives are drawn uniformly and reweighted.
TabularTrainResult train_tabular(const CategoricalInstance& inst, const TabularTrainConfig& cfg);

}  // namespace kgns
