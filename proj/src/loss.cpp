#include "kgns/loss.hpp"

#include <cmath>
#include <string>

#include "kgns/errors.hpp"
#include "kgns/numeric.hpp"

namespace kgns {

std::string_view to_string(LossFamily f) {
  switch (f) {
    case LossFamily::kNsOriginal: return "ns";
    case LossFamily::kNsKge: return "ns-kge";
    case LossFamily::kSans: return "sans";
  }
  return "?";
}

std::string_view to_string(Subsampling s) {
  switch (s) {
    case Subsampling::kNone: return "none";
    case Subsampling::kBase: return "base";
    case Subsampling::kFreq: return "freq";
    case Subsampling::kUniq: return "uniq";
  }
  return "?";
}

LossFamily parse_loss_family(std::string_view name) {
  if (name == "ns" || name == "ns-original") return LossFamily::kNsOriginal;
  if (name == "ns-kge") return LossFamily::kNsKge;
  if (name == "sans") return LossFamily::kSans;
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

Subsampling parse_subsampling(std::string_view name) {
  for (auto s : {Subsampling::kNone, Subsampling::kBase, Subsampling::kFreq, Subsampling::kUniq}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown subsampling method '" + std::string(name) + "'");
}

void validate(const LossSpec& spec) {
  if (spec.num_negatives < 1) throw ConfigError("number of negatives must be >= 1");
  if (!(spec.margin >= 0) || !std::isfinite(spec.margin)) throw ConfigError("margin must be finite and >= 0");
  if (!(spec.temperature > 0) || !std::isfinite(spec.temperature)) {
    throw ConfigError("SANS temperature must be finite and > 0");
  }
}

NegativeBatch sample_negatives(std::size_t num_entities, std::size_t nu, Rng& rng) {
  if (num_entities == 0) throw ConfigError("cannot sample negatives from an empty entity set");
  NegativeBatch batch;
  batch.entities.resize(nu);
  std::uniform_int_distribution<EntityId> pick(0, static_cast<EntityId>(num_entities - 1));
  for (auto& e : batch.entities) e = pick(rng);
  return batch;
}

InstanceTerms instance_terms(const LossSpec& spec, double positive, std::span<const double> negatives) {
  const double gamma = spec.margin;
  const std::size_t nu = negatives.size();
  InstanceTerms out;
  out.positive = -log_sigmoid(positive + gamma);
  out.d_positive = -sigmoid(-(positive + gamma));

  switch (spec.family) {
    case LossFamily::kNsOriginal: out.coefficients.assign(nu, 1.0); break;
    case LossFamily::kNsKge: out.coefficients.assign(nu, nu ? 1.0 / static_cast<double>(nu) : 0.0); break;
    case LossFamily::kSans: out.coefficients = softmax(negatives, spec.temperature); break;
  }
  out.d_negatives.resize(nu);
  for (std::size_t i = 0; i < nu; ++i) {
    const double c = out.coefficients[i];
    out.negative -= c * log_sigmoid(-negatives[i] - gamma);
    out.d_negatives[i] = c * sigmoid(negatives[i] + gamma);
  }
  return out;
}

namespace {

double batch_mean(std::span<const ScoredInstance> batch, const LossSpec& spec) {
  if (batch.empty()) return 0.0;
  double total = 0;
  for (const auto& inst : batch) {
    const auto terms = instance_terms(spec, inst.positive, inst.negatives);
    total += terms.positive + terms.negative;
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace

double loss_original(std::span<const ScoredInstance> batch, double margin) {
  return batch_mean(batch, LossSpec{.family = LossFamily::kNsOriginal, .margin = margin});
}

double loss_kge(std::span<const ScoredInstance> batch, double margin) {
  return batch_mean(batch, LossSpec{.family = LossFamily::kNsKge, .margin = margin});
}

double loss_sans(std::span<const ScoredInstance> batch, double margin, double temperature) {
  return batch_mean(batch, LossSpec{.family = LossFamily::kSans, .margin = margin, .temperature = temperature});
}

LossAndGrad loss_and_grad(const ModelParams& params, std::span<TrainingInstance> batch,
                          const LossSpec& spec, const SubsamplingWeights* weights) {
  LossAndGrad out;
  if (batch.empty()) return out;
  if (spec.subsampling != Subsampling::kNone && weights == nullptr) {
    throw ConfigError("subsampling requested without a weight table");
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  std::vector<double> neg_scores;

  for (auto& inst : batch) {
    const auto& q = inst.query;
    const double pos = score(params, q, q.answer);
    const auto& negs = inst.negatives.entities;
    neg_scores.resize(negs.size());
    for (std::size_t i = 0; i < negs.size(); ++i) neg_scores[i] = score(params, q, negs[i]);

    const auto terms = instance_terms(spec, pos, neg_scores);
    SubsampleWeight w;
    if (spec.subsampling != Subsampling::kNone) w = weights->get(q, spec.rescale_subsampling);

    out.loss += inv_n * (w.positive * terms.positive + w.negative * terms.negative);
    if (spec.family == LossFamily::kSans) inst.negatives.weights = terms.coefficients;

    accumulate_score_grad(params, q, q.answer, inv_n * w.positive * terms.d_positive, out.gradient);
    for (std::size_t i = 0; i < negs.size(); ++i) {
      accumulate_score_grad(params, q, negs[i], inv_n * w.negative * terms.d_negatives[i], out.gradient);
    }
  }
  return out;
}

}  // namespace kgns
