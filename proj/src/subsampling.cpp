#include <cmath>
#include <stdexcept>

#include "kgns/loss.hpp"

namespace kgns {
namespace {

double inv_sqrt_count(std::uint32_t count) {
  if (count == 0) throw std::logic_error("zero frequency in subsampling weights");
  return 1.0 / std::sqrt(static_cast<double>(count));
}

}  // namespace

SubsamplingWeights::SubsamplingWeights(Subsampling method, const FrequencyTable& freq,
                                       const TripleSet& train)
    : method_(method), freq_(&freq) {
  // Summed in query order so results are reproducible bit for bit.
  for (const auto& q : make_queries(train)) {
    pair_norm_ += inv_sqrt_count(freq.pair_frequency(q.triple()));
    query_norm_ += inv_sqrt_count(freq.query_frequency(q));
    ++num_queries_;
  }
}

SubsampleWeight SubsamplingWeights::raw(const Query& q) const {
  const double n = static_cast<double>(num_queries_);
  switch (method_) {
    case Subsampling::kNone: return {1.0 / n, 1.0 / n};
    case Subsampling::kBase: {
      const double a = inv_sqrt_count(freq_->pair_frequency(q.triple())) / pair_norm_;
      return {a, a};
    }
    case Subsampling::kFreq:
      return {inv_sqrt_count(freq_->pair_frequency(q.triple())) / pair_norm_,
              inv_sqrt_count(freq_->query_frequency(q)) / query_norm_};
    case Subsampling::kUniq: {
      const double a = inv_sqrt_count(freq_->query_frequency(q)) / query_norm_;
      return {a, a};
    }
  }
  throw std::logic_error("unknown subsampling method");
}

SubsampleWeight SubsamplingWeights::rescaled(const Query& q) const {
  if (method_ == Subsampling::kNone) return {1.0, 1.0};
  const auto w = raw(q);
  const double n = static_cast<double>(num_queries_);
  return {w.positive * n, w.negative * n};
}

SubsampleWeight SubsamplingWeights::triple_raw(const Triple& t) const {
  const auto tail = raw({Direction::kTail, t.head, t.relation, t.tail});
  const auto head = raw({Direction::kHead, t.tail, t.relation, t.head});
  return {tail.positive + head.positive, tail.negative + head.negative};
}

SubsampleWeight SubsamplingWeights::triple_rescaled(const Triple& t) const {
  if (method_ == Subsampling::kNone) return {1.0, 1.0};
  const auto w = triple_raw(t);
  const double n = static_cast<double>(num_queries_ / 2);
  return {w.positive * n, w.negative * n};
}

SubsampleWeight subsample_weights(Subsampling method, const Triple& t, const FrequencyTable& freq,
                                  const TripleSet& train) {
  return SubsamplingWeights(method, freq, train).triple_raw(t);
}

}  // namespace kgns
