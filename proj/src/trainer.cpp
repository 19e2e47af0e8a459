#include "kgns/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "kgns/errors.hpp"
#include "kgns/eval.hpp"
#include "kgns/numeric.hpp"
#include "kgns/seed.hpp"

namespace kgns {

using nlohmann::json;

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (cfg.max_steps < 1) throw ConfigError("max steps must be >= 1");
  if (cfg.dim < 1) throw ConfigError("dimension must be >= 1");
  if (!(cfg.learning_rate > 0) || !std::isfinite(cfg.learning_rate)) {
    throw ConfigError("learning rate must be finite and > 0");
  }
  if (cfg.lr_schedule == LrSchedule::kHalveAtFraction &&
      !(cfg.lr_halve_fraction > 0 && cfg.lr_halve_fraction < 1)) {
    throw ConfigError("lr halve fraction must lie in (0, 1)");
  }
  if (cfg.p_norm && *cfg.p_norm != 1 && *cfg.p_norm != 2) throw ConfigError("p-norm must be 1 or 2");
  if (cfg.log_every < 1) throw ConfigError("log interval must be >= 1");
  validate(cfg.loss);
}

double learning_rate_at(const TrainConfig& cfg, std::size_t step) {
  if (cfg.lr_schedule == LrSchedule::kHalveAtFraction &&
      static_cast<double>(step) >= cfg.lr_halve_fraction * static_cast<double>(cfg.max_steps)) {
    return cfg.learning_rate / 2;
  }
  return cfg.learning_rate;
}

TrainConfig config_from_json(const std::string& text, TrainConfig cfg) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "model") cfg.model = parse_model_kind(value.get<std::string>());
      else if (key == "dim") cfg.dim = value.get<std::size_t>();
      else if (key == "p_norm") cfg.p_norm = value.is_null() ? std::nullopt : std::optional<int>(value.get<int>());
      else if (key == "batch_size") cfg.batch_size = value.get<std::size_t>();
      else if (key == "max_steps") cfg.max_steps = value.get<std::size_t>();
      else if (key == "learning_rate") cfg.learning_rate = value.get<double>();
      else if (key == "lr_schedule") {
        const auto s = value.get<std::string>();
        if (s == "constant") cfg.lr_schedule = LrSchedule::kConstant;
        else if (s == "halve") cfg.lr_schedule = LrSchedule::kHalveAtFraction;
        else throw ConfigError("unknown lr_schedule '" + s + "'");
      } else if (key == "lr_halve_fraction") cfg.lr_halve_fraction = value.get<double>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "eval_every") cfg.eval_every = value.get<std::size_t>();
      else if (key == "log_every") cfg.log_every = value.get<std::size_t>();
      else if (key == "final_eval") cfg.final_eval = value.get<bool>();
      else if (key == "dataset") cfg.dataset_path = value.get<std::string>();
      else if (key == "loss") cfg.loss.family = parse_loss_family(value.get<std::string>());
      else if (key == "gamma") cfg.loss.margin = value.get<double>();
      else if (key == "nu") cfg.loss.num_negatives = value.get<std::size_t>();
      else if (key == "alpha") cfg.loss.temperature = value.get<double>();
      else if (key == "subsampling") cfg.loss.subsampling = parse_subsampling(value.get<std::string>());
      else if (key == "rescale_subsampling") cfg.loss.rescale_subsampling = value.get<bool>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return cfg;
}

std::string config_to_json(const TrainConfig& cfg) {
  json doc = {
      {"model", std::string(to_string(cfg.model))},
      {"dim", cfg.dim},
      {"p_norm", cfg.p_norm ? json(*cfg.p_norm) : json(nullptr)},
      {"batch_size", cfg.batch_size},
      {"max_steps", cfg.max_steps},
      {"learning_rate", cfg.learning_rate},
      {"lr_schedule", cfg.lr_schedule == LrSchedule::kConstant ? "constant" : "halve"},
      {"lr_halve_fraction", cfg.lr_halve_fraction},
      {"seed", cfg.seed},
      {"eval_every", cfg.eval_every},
      {"log_every", cfg.log_every},
      {"final_eval", cfg.final_eval},
      {"dataset", cfg.dataset_path},
      {"loss", std::string(to_string(cfg.loss.family))},
      {"gamma", cfg.loss.margin},
      {"nu", cfg.loss.num_negatives},
      {"alpha", cfg.loss.temperature},
      {"subsampling", std::string(to_string(cfg.loss.subsampling))},
      {"rescale_subsampling", cfg.loss.rescale_subsampling},
  };
  return doc.dump(2);
}

AdamState AdamState::for_params(const ModelParams& params) {
  AdamState s;
  s.m_entities.assign(params.entities.size(), 0.0);
  s.v_entities.assign(params.entities.size(), 0.0);
  s.m_relations.assign(params.relations.size(), 0.0);
  s.v_relations.assign(params.relations.size(), 0.0);
  return s;
}

void adam_update(std::span<double> param, std::span<double> m, std::span<double> v,
                 std::span<const double> grad, double lr, std::size_t step) {
  const double c1 = 1.0 - std::pow(AdamState::kBeta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(AdamState::kBeta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = AdamState::kBeta1 * m[i] + (1 - AdamState::kBeta1) * grad[i];
    v[i] = AdamState::kBeta2 * v[i] + (1 - AdamState::kBeta2) * grad[i] * grad[i];
    param[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + AdamState::kEpsilon);
  }
}

void adam_step(ModelParams& params, const GradientAccumulator& grad, AdamState& state, double lr) {
  if (state.m_entities.size() != params.entities.size() || state.m_relations.size() != params.relations.size()) {
    throw ConfigError("optimizer state does not match parameter shapes");
  }
  ++state.step;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const auto slot = grad.slots()[i];
    const auto& g = grad.values(i);
    switch (slot.table) {
      case Table::kEntity: {
        const std::size_t w = params.entity_stride(), off = slot.row * w;
        if (g.size() != w || slot.row >= params.num_entities) throw ConfigError("entity gradient shape mismatch");
        adam_update(params.entity(slot.row), {state.m_entities.data() + off, w},
                    {state.v_entities.data() + off, w}, g, lr, state.step);
        break;
      }
      case Table::kRelation: {
        const std::size_t w = params.relation_stride(), off = slot.row * w;
        if (g.size() != w || slot.row >= params.num_relations) {
          throw ConfigError("relation gradient shape mismatch");
        }
        adam_update(params.relation(slot.row), {state.m_relations.data() + off, w},
                    {state.v_relations.data() + off, w}, g, lr, state.step);
        break;
      }
      case Table::kScalar: {
        if (g.size() != 1) throw ConfigError("scalar gradient shape mismatch");
        adam_update({&params.phase_weight, 1}, {&state.m_scalar, 1}, {&state.v_scalar, 1}, g, lr, state.step);
        break;
      }
    }
  }
}

std::string metric_json(const MetricRecord& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json doc = {{"step", r.step},           {"loss", opt(r.loss)},   {"split", r.split},
              {"mrr", opt(r.mrr)},        {"hits1", opt(r.hits1)}, {"hits3", opt(r.hits3)},
              {"hits10", opt(r.hits10)}};
  return doc.dump();
}

namespace {

MetricRecord eval_record(std::size_t step, std::string split, const EvalReport& rep) {
  return {step, std::move(split), std::nullopt, rep.mrr, rep.hits1, rep.hits3, rep.hits10};
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& data, const MetricSink& sink) {
  validate(cfg);
  if (data.train.empty()) throw DataError("training split is empty");

  TrainResult result;
  auto emit = [&](MetricRecord rec) {
    if (sink) sink(rec);
    result.log.push_back(std::move(rec));
  };

  const std::size_t num_entities = data.vocab.num_entities();
  result.params = init_params({.kind = cfg.model,
                               .dim = cfg.dim,
                               .num_entities = num_entities,
                               .num_relations = data.vocab.num_relations(),
                               .margin = cfg.loss.margin,
                               .seed = cfg.seed,
                               .p_norm = cfg.p_norm});
  auto& params = result.params;
  AdamState adam = AdamState::for_params(params);

  const QuerySet queries = make_queries(data.train);
  const FrequencyTable freq = count_frequencies(data.train);
  std::optional<SubsamplingWeights> weights;
  if (cfg.loss.subsampling != Subsampling::kNone) weights.emplace(cfg.loss.subsampling, freq, data.train);
  const FilterIndex filter = build_filter_index(data.train, data.valid, data.test);
  const QuerySet valid_queries = make_queries(data.valid);

  Rng shuffle_rng = make_rng(cfg.seed, "shuffle");
  std::vector<std::size_t> order(queries.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  std::size_t cursor = 0;

  std::vector<TrainingInstance> batch(cfg.batch_size);
  double window_sum = 0;
  std::size_t window_count = 0;

  for (std::size_t step = 0; step < cfg.max_steps; ++step) {
    const std::uint64_t batch_seed = derive_seed(cfg.seed, "batch", step);
    Rng rng(batch_seed);
    for (auto& inst : batch) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        cursor = 0;
      }
      inst.query = queries[order[cursor++]];
      inst.negatives = sample_negatives(num_entities, cfg.loss.num_negatives, rng);
    }

    auto lg = loss_and_grad(params, batch, cfg.loss, weights ? &*weights : nullptr);
    if (!std::isfinite(lg.loss)) {
      std::ostringstream msg;
      msg << "non-finite loss at step " << step << " (batch seed " << batch_seed << ")";
      throw NumericalAbort(msg.str());
    }
    if (step == 0) emit({0, "train", lg.loss, {}, {}, {}, {}});
    window_sum += lg.loss;
    ++window_count;

    adam_step(params, lg.gradient, adam, learning_rate_at(cfg, step));
    const std::size_t done = step + 1;

    if (done % cfg.log_every == 0) {
      emit({done, "train", window_sum / static_cast<double>(window_count), {}, {}, {}, {}});
      window_sum = 0;
      window_count = 0;
    }
    if (cfg.eval_every > 0 && done % cfg.eval_every == 0 && done != cfg.max_steps && !valid_queries.empty()) {
      emit(eval_record(done, "valid", evaluate(params, valid_queries, filter)));
    }
  }

  if (cfg.final_eval) {
    if (!valid_queries.empty()) emit(eval_record(cfg.max_steps, "valid", evaluate(params, valid_queries, filter)));
    const QuerySet test_queries = make_queries(data.test);
    if (!test_queries.empty()) emit(eval_record(cfg.max_steps, "test", evaluate(params, test_queries, filter)));
  }
  return result;
}

TabularTrainResult train_tabular(const CategoricalInstance& inst, const TabularTrainConfig& cfg) {
  validate(inst);
  validate(cfg.loss);
  const std::size_t X = inst.num_queries, Y = inst.num_labels;
  const auto& spec = cfg.loss;
  const double gamma = spec.margin;
  const bool nonpositive = cfg.range == TabularScoreModel::Range::kNonPositive;

  TabularTrainResult out{TabularScoreModel(X, Y, cfg.range), {}};
  auto& s = out.model.scores;
  std::vector<double> m(s.size(), 0.0), v(s.size(), 0.0), grad(s.size());

  Rng rng = make_rng(cfg.seed, "tabular");
  std::vector<std::discrete_distribution<std::size_t>> data_draw, noise_draw;
  for (std::size_t x = 0; x < X; ++x) {
    data_draw.emplace_back(inst.data_row(x).begin(), inst.data_row(x).end());
    noise_draw.emplace_back(inst.noise_row(x).begin(), inst.noise_row(x).end());
  }
  std::uniform_int_distribution<std::size_t> pick_query(0, X - 1), pick_label(0, Y - 1);
  std::vector<std::size_t> neg_labels(spec.num_negatives);
  std::vector<double> neg_scores(spec.num_negatives);

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0;
    if (cfg.expected_gradient) {
      for (std::size_t x = 0; x < X; ++x) {
        const auto row = out.model.effective_row(x);
        std::vector<double> noise(inst.noise_row(x).begin(), inst.noise_row(x).end());
        double c = 1.0;
        if (spec.family == LossFamily::kNsOriginal) c = static_cast<double>(spec.num_negatives);
        if (spec.family == LossFamily::kSans) noise = softmax(row, spec.temperature);
        for (std::size_t y = 0; y < Y; ++y) {
          const double a = inst.data_row(x)[y], b = c * noise[y], sy = row[y];
          loss += cell_loss(sy, a, b, gamma) / static_cast<double>(X);
          grad[x * Y + y] = (-a * sigmoid(-(sy + gamma)) + b * sigmoid(sy + gamma)) / static_cast<double>(X);
        }
      }
    } else {
      const double inv = 1.0 / static_cast<double>(cfg.batch_size);
      for (std::size_t b = 0; b < cfg.batch_size; ++b) {
        const std::size_t x = pick_query(rng);
        const std::size_t y = data_draw[x](rng);
        for (std::size_t i = 0; i < neg_labels.size(); ++i) {
          neg_labels[i] = spec.family == LossFamily::kSans ? pick_label(rng) : noise_draw[x](rng);
          neg_scores[i] = out.model.at(x, neg_labels[i]);
        }
        const auto terms = instance_terms(spec, out.model.at(x, y), neg_scores);
        loss += inv * (terms.positive + terms.negative);
        grad[x * Y + y] += inv * terms.d_positive;
        for (std::size_t i = 0; i < neg_labels.size(); ++i) grad[x * Y + neg_labels[i]] += inv * terms.d_negatives[i];
      }
    }
    if (nonpositive) {
      // Clamped cells sitting at 0 with an outward gradient do not move.
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] >= 0 && grad[i] < 0) grad[i] = 0;
      }
    }
    out.losses.push_back(loss);
    adam_update(s, m, v, grad, cfg.learning_rate, step);
    if (nonpositive) {
      for (auto& val : s) val = std::min(val, 0.0);
    }
  }
  return out;
}

}  // namespace kgns
