#include "kgns/presets.hpp"

namespace kgns {

namespace {

Preset make(std::string dataset_slug, std::string dataset, ModelKind kind, std::size_t batch,
            std::size_t dim, double alpha, std::size_t steps, std::size_t nu, double gamma, double lr) {
  Preset p;
  p.name = dataset_slug + "-" + std::string(to_string(kind));
  p.dataset = std::move(dataset);
  auto& c = p.config;
  c.model = kind;
  c.dim = dim;
  c.batch_size = batch;
  c.max_steps = steps;
  c.learning_rate = lr;
  c.loss.family = LossFamily::kSans;
  c.loss.margin = gamma;
  c.loss.num_negatives = nu;
  c.loss.temperature = alpha;
  c.loss.subsampling = Subsampling::kBase;
  return p;
}

std::vector<Preset> build() {
  using M = ModelKind;
  std::vector<Preset> out;
  auto fb = [&](M k, std::size_t dim, double gamma, double lr) {
    out.push_back(make("fb15k237", "FB15k-237", k, 1024, dim, 1.0, 100000, 256, gamma, lr));
  };
  fb(M::kRescal, 500, 200, 0.001);
  fb(M::kComplEx, 1000, 200, 0.001);
  fb(M::kDistMult, 2000, 200, 0.001);
  fb(M::kTransE, 1000, 9.0, 0.00005);
  fb(M::kRotatE, 1000, 9.0, 0.00005);
  fb(M::kHake, 1000, 9.0, 0.00005);

  auto wn = [&](M k, std::size_t dim, double alpha, double gamma, double lr) {
    out.push_back(make("wn18rr", "WN18RR", k, 512, dim, alpha, 80000, 1024, gamma, lr));
  };
  wn(M::kRescal, 500, 1.0, 200, 0.002);
  wn(M::kComplEx, 500, 1.0, 200, 0.002);
  wn(M::kDistMult, 1000, 1.0, 200, 0.002);
  wn(M::kTransE, 500, 0.5, 6.0, 0.00005);
  wn(M::kRotatE, 500, 0.5, 6.0, 0.00005);
  wn(M::kHake, 500, 0.5, 6.0, 0.00005);

  auto yago = [&](M k, std::size_t nu) {
    out.push_back(make("yago3-10", "YAGO3-10", k, 1024, 500, 1.0, 200000, nu, 24.0, 0.0002));
  };
  yago(M::kTransE, 400);
  yago(M::kRotatE, 400);
  yago(M::kHake, 500);
  return out;
}

}  // namespace

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = build();
  return all;
}

std::optional<Preset> find_preset(std::string_view name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

}  // namespace kgns
