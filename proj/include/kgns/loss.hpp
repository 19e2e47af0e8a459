#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "kgns/data.hpp"
#include "kgns/model.hpp"
#include "kgns/seed.hpp"

namespace kgns {

/// kNsOriginal: no 1/nu on the negative sum. kNsKge: negatives averaged with 1/nu.
/// kSans: negatives weighted by softmax(alpha * score) over the sampled set.
enum class LossFamily { kNsOriginal, kNsKge, kSans };
enum class Subsampling { kNone, kBase, kFreq, kUniq };

std::string_view to_string(LossFamily f);
std::string_view to_string(Subsampling s);
/// "ns" (or "ns-original"), "ns-kge", "sans".
LossFamily parse_loss_family(std::string_view name);
Subsampling parse_subsampling(std::string_view name);

struct LossSpec {
  LossFamily family = LossFamily::kNsKge;
  double margin = 0.0;            // gamma, added inside both sigmoids
  std::size_t num_negatives = 1;  // nu
  double temperature = 1.0;       // alpha, SANS only
  Subsampling subsampling = Subsampling::kNone;
  bool rescale_subsampling = true;  // multiply weights by |D| so that kNone == all ones
};

void validate(const LossSpec& spec);

struct NegativeBatch {
  std::vector<EntityId> entities;
  std::vector<double> weights;  // SANS weights, filled during loss evaluation
};

/// nu i.i.d. uniform draws over all entities, with replacement. The true answer is
/// not excluded.
NegativeBatch sample_negatives(std::size_t num_entities, std::size_t nu, Rng& rng);

struct ScoredInstance {
  double positive = 0;
  std::vector<double> negatives;
};

/// Batch means of the three loss families.
double loss_original(std::span<const ScoredInstance> batch, double margin);
double loss_kge(std::span<const ScoredInstance> batch, double margin);
double loss_sans(std::span<const ScoredInstance> batch, double margin, double temperature);

/// One instance split into its positive and negative terms, with derivatives with
/// respect to each score. SANS weights are constants (stop-gradient).
struct InstanceTerms {
  double positive = 0;    // -log sigma(s+ + gamma)
  double negative = 0;    // -sum_i c_i log sigma(-s_i - gamma)
  double d_positive = 0;  // d positive / d s+
  std::vector<double> d_negatives;
  std::vector<double> coefficients;  // c_i
};
InstanceTerms instance_terms(const LossSpec& spec, double positive, std::span<const double> negatives);

/// Per-instance (A, B) multipliers for the positive and negative terms.
struct SubsampleWeight {
  double positive = 1;
  double negative = 1;
};

/// Subsampling weights over the training query set D (both directions of every
/// training triple). Base: A = B ~ 1/sqrt(#(x,y)). Freq: A ~ 1/sqrt(#(x,y)),
/// B ~ 1/sqrt(#x). Uniq: A = B ~ 1/sqrt(#x). Each is normalised to sum to 1 over
/// D; the rescaled form multiplies by |D|.
class SubsamplingWeights {
 public:
  SubsamplingWeights(Subsampling method, const FrequencyTable& freq, const TripleSet& train);

  Subsampling method() const { return method_; }
  SubsampleWeight raw(const Query& q) const;
  SubsampleWeight rescaled(const Query& q) const;
  SubsampleWeight get(const Query& q, bool rescale) const { return rescale ? rescaled(q) : raw(q); }

  /// Sum of the raw weights of a triple's two queries; sums to 1 over the triples.
  SubsampleWeight triple_raw(const Triple& t) const;
  /// triple_raw scaled by the number of triples (all ones for uniform frequencies).
  SubsampleWeight triple_rescaled(const Triple& t) const;

  double pair_normalizer() const { return pair_norm_; }
  double query_normalizer() const { return query_norm_; }
  std::size_t num_queries() const { return num_queries_; }

 private:
  Subsampling method_;
  const FrequencyTable* freq_;
  double pair_norm_ = 0;
  double query_norm_ = 0;
  std::size_t num_queries_ = 0;
};

/// Triple-level pre-rescaling (A, B) for one training triple.
SubsampleWeight subsample_weights(Subsampling method, const Triple& t, const FrequencyTable& freq,
                                  const TripleSet& train);

struct TrainingInstance {
  Query query;
  NegativeBatch negatives;
};

struct LossAndGrad {
  double loss = 0;
  GradientAccumulator gradient;
};

/// Mean over the batch of A * positive term + B * negative term, with its gradient.
/// `weights` may be null when spec.subsampling is kNone. Fills SANS weights into
/// each instance's NegativeBatch.
LossAndGrad loss_and_grad(const ModelParams& params, std::span<TrainingInstance> batch,
                          const LossSpec& spec, const SubsamplingWeights* weights);

}  // namespace kgns
