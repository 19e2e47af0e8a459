#include "kgns/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "kgns/errors.hpp"
#include "kgns/numeric.hpp"
#include "kgns/seed.hpp"

namespace kgns {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_phase(double theta) { return theta - kTwoPi * std::floor(theta / kTwoPi); }

struct Roles {
  EntityId head;
  RelationId rel;
  EntityId tail;
};

Roles roles_of(const ModelParams& p, const Query& x, EntityId y) {
  Roles r = x.direction == Direction::kTail ? Roles{x.anchor, x.relation, y}
                                            : Roles{y, x.relation, x.anchor};
  if (r.head >= p.num_entities || r.tail >= p.num_entities) {
    throw std::out_of_range("entity id out of range");
  }
  if (r.rel >= p.num_relations) throw std::out_of_range("relation id out of range");
  return r;
}

// -||res||_p and, when `dres` is non-null, d(-||res||_p)/d res. `res` holds d real
// values, or d complex values as (re[0..d) | im[0..d)) when `complex` is set.
double neg_norm(std::span<const double> res, std::size_t d, bool complex, int p, double* dres) {
  if (p == 1) {
    double total = 0;
    for (std::size_t i = 0; i < d; ++i) {
      if (complex) {
        const double m = std::hypot(res[i], res[d + i]);
        total += m;
        if (dres) {
          dres[i] = m > 0 ? -res[i] / m : 0.0;
          dres[d + i] = m > 0 ? -res[d + i] / m : 0.0;
        }
      } else {
        total += std::abs(res[i]);
        if (dres) dres[i] = -sign(res[i]);
      }
    }
    return -total;
  }
  double sq = 0;
  for (double v : res) sq += v * v;
  const double norm = std::sqrt(sq);
  if (dres) {
    for (std::size_t i = 0; i < res.size(); ++i) dres[i] = norm > 0 ? -res[i] / norm : 0.0;
  }
  return -norm;
}

template <bool kGrad>
double evaluate(const ModelParams& p, const Roles& ro, double scale, GradientAccumulator* grad) {
  const std::size_t d = p.dim;
  const auto h = p.entity(ro.head);
  const auto t = p.entity(ro.tail);
  const auto r = p.relation(ro.rel);

  std::span<double> gh, gt, gr;
  if constexpr (kGrad) {
    gh = grad->block({Table::kEntity, ro.head}, h.size());
    gt = grad->block({Table::kEntity, ro.tail}, t.size());
    gr = grad->block({Table::kRelation, ro.rel}, r.size());
  }

  thread_local std::vector<double> res, dres;

  switch (p.kind) {
    case ModelKind::kRescal: {
      double s = 0;
      for (std::size_t a = 0; a < d; ++a) {
        double mt = 0;
        for (std::size_t b = 0; b < d; ++b) mt += r[a * d + b] * t[b];
        s += h[a] * mt;
        if constexpr (kGrad) gh[a] += scale * mt;
      }
      if constexpr (kGrad) {
        for (std::size_t a = 0; a < d; ++a) {
          for (std::size_t b = 0; b < d; ++b) {
            gt[b] += scale * h[a] * r[a * d + b];
            gr[a * d + b] += scale * h[a] * t[b];
          }
        }
      }
      return s;
    }
    case ModelKind::kDistMult: {
      double s = 0;
      for (std::size_t i = 0; i < d; ++i) {
        s += h[i] * r[i] * t[i];
        if constexpr (kGrad) {
          gh[i] += scale * r[i] * t[i];
          gr[i] += scale * h[i] * t[i];
          gt[i] += scale * h[i] * r[i];
        }
      }
      return s;
    }
    case ModelKind::kComplEx: {
      // Re(<h, r, conj(t)>)
      double s = 0;
      for (std::size_t i = 0; i < d; ++i) {
        const double hr = h[i], hi = h[d + i], rr = r[i], ri = r[d + i], tr = t[i], ti = t[d + i];
        s += hr * rr * tr + hi * rr * ti + hr * ri * ti - hi * ri * tr;
        if constexpr (kGrad) {
          gh[i] += scale * (rr * tr + ri * ti);
          gh[d + i] += scale * (rr * ti - ri * tr);
          gr[i] += scale * (hr * tr + hi * ti);
          gr[d + i] += scale * (hr * ti - hi * tr);
          gt[i] += scale * (hr * rr - hi * ri);
          gt[d + i] += scale * (hi * rr + hr * ri);
        }
      }
      return s;
    }
    case ModelKind::kTransE: {
      res.resize(d);
      dres.resize(d);
      for (std::size_t i = 0; i < d; ++i) res[i] = h[i] + r[i] - t[i];
      const double s = neg_norm(res, d, false, p.p_norm, kGrad ? dres.data() : nullptr);
      if constexpr (kGrad) {
        for (std::size_t i = 0; i < d; ++i) {
          const double g = scale * dres[i];
          gh[i] += g;
          gr[i] += g;
          gt[i] -= g;
        }
      }
      return s;
    }
    case ModelKind::kRotatE: {
      res.resize(2 * d);
      dres.resize(2 * d);
      for (std::size_t i = 0; i < d; ++i) {
        const double c = std::cos(r[i]), sn = std::sin(r[i]);
        res[i] = h[i] * c - h[d + i] * sn - t[i];
        res[d + i] = h[i] * sn + h[d + i] * c - t[d + i];
      }
      const double s = neg_norm(res, d, true, p.p_norm, kGrad ? dres.data() : nullptr);
      if constexpr (kGrad) {
        for (std::size_t i = 0; i < d; ++i) {
          const double c = std::cos(r[i]), sn = std::sin(r[i]);
          const double da = scale * dres[i], db = scale * dres[d + i];
          gh[i] += da * c + db * sn;
          gh[d + i] += -da * sn + db * c;
          gr[i] += da * (-h[i] * sn - h[d + i] * c) + db * (h[i] * c - h[d + i] * sn);
          gt[i] -= da;
          gt[d + i] -= db;
        }
      }
      return s;
    }
    case ModelKind::kHake: {
      res.resize(d);
      dres.resize(d);
      for (std::size_t i = 0; i < d; ++i) res[i] = h[i] * std::abs(r[i]) - t[i];
      const double modulus = neg_norm(res, d, false, p.p_norm, kGrad ? dres.data() : nullptr);
      double phase = 0;
      const double lambda = p.phase_weight;
      for (std::size_t i = 0; i < d; ++i) {
        const double u = wrap_phase(h[d + i]) + wrap_phase(r[d + i]) - wrap_phase(t[d + i]);
        const double sh = std::sin(u / 2);
        phase += std::abs(sh);
        if constexpr (kGrad) {
          const double g = -scale * lambda * sign(sh) * 0.5 * std::cos(u / 2);
          gh[d + i] += g;
          gr[d + i] += g;
          gt[d + i] -= g;
        }
      }
      if constexpr (kGrad) {
        for (std::size_t i = 0; i < d; ++i) {
          const double g = scale * dres[i];
          gh[i] += g * std::abs(r[i]);
          gr[i] += g * h[i] * sign(r[i]);
          gt[i] -= g;
        }
        grad->block({Table::kScalar, 0}, 1)[0] += -scale * phase;
      }
      return modulus - lambda * phase;
    }
  }
  throw std::logic_error("unknown model kind");
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kRescal: return "rescal";
    case ModelKind::kDistMult: return "distmult";
    case ModelKind::kComplEx: return "complex";
    case ModelKind::kTransE: return "transe";
    case ModelKind::kRotatE: return "rotate";
    case ModelKind::kHake: return "hake";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto k : {ModelKind::kRescal, ModelKind::kDistMult, ModelKind::kComplEx, ModelKind::kTransE,
                 ModelKind::kRotatE, ModelKind::kHake}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown model '" + std::string(name) + "'");
}

bool is_distance_based(ModelKind kind) {
  return kind == ModelKind::kTransE || kind == ModelKind::kRotatE || kind == ModelKind::kHake;
}

int default_p_norm(ModelKind kind) { return kind == ModelKind::kHake ? 2 : 1; }

std::size_t entity_width(ModelKind kind, std::size_t dim) {
  switch (kind) {
    case ModelKind::kComplEx:
    case ModelKind::kRotatE:
    case ModelKind::kHake: return 2 * dim;
    default: return dim;
  }
}

std::size_t relation_width(ModelKind kind, std::size_t dim) {
  switch (kind) {
    case ModelKind::kRescal: return dim * dim;
    case ModelKind::kComplEx:
    case ModelKind::kHake: return 2 * dim;
    default: return dim;
  }
}

ModelParams init_params(const InitOptions& opts) {
  if (opts.dim < 1) throw ConfigError("dimension must be >= 1");
  const int p = opts.p_norm.value_or(default_p_norm(opts.kind));
  if (p != 1 && p != 2) throw ConfigError("p-norm must be 1 or 2");

  ModelParams params;
  params.kind = opts.kind;
  params.dim = opts.dim;
  params.num_entities = opts.num_entities;
  params.num_relations = opts.num_relations;
  params.p_norm = p;
  params.entities.resize(opts.num_entities * params.entity_stride());
  params.relations.resize(opts.num_relations * params.relation_stride());

  const double bound = (opts.margin + 2.0) / static_cast<double>(opts.dim);
  std::uniform_real_distribution<double> uni(-bound, bound);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);

  Rng ent_rng = make_rng(opts.seed, "init/entity");
  Rng rel_rng = make_rng(opts.seed, "init/relation");
  const std::size_t d = opts.dim;

  for (std::size_t e = 0; e < opts.num_entities; ++e) {
    auto row = params.entity(static_cast<EntityId>(e));
    for (std::size_t i = 0; i < row.size(); ++i) {
      const bool is_phase = opts.kind == ModelKind::kHake && i >= d;
      row[i] = is_phase ? angle(ent_rng) : uni(ent_rng);
    }
  }
  for (std::size_t r = 0; r < opts.num_relations; ++r) {
    auto row = params.relation(static_cast<RelationId>(r));
    for (std::size_t i = 0; i < row.size(); ++i) {
      const bool is_phase = opts.kind == ModelKind::kRotatE || (opts.kind == ModelKind::kHake && i >= d);
      row[i] = is_phase ? angle(rel_rng) : uni(rel_rng);
    }
  }
  if (opts.kind == ModelKind::kHake) {
    Rng lambda_rng = make_rng(opts.seed, "init/phase-weight");
    params.phase_weight = std::uniform_real_distribution<double>(0.0, 0.01)(lambda_rng);
  }
  return params;
}

std::span<double> GradientAccumulator::block(ParamSlot slot, std::size_t width) {
  const auto k = key(slot);
  auto it = index_.find(k);
  if (it != index_.end()) return blocks_[it->second];
  index_.emplace(k, slots_.size());
  slots_.push_back(slot);
  blocks_.emplace_back(width, 0.0);
  return blocks_.back();
}

const std::vector<double>* GradientAccumulator::find(ParamSlot slot) const {
  auto it = index_.find(key(slot));
  return it == index_.end() ? nullptr : &blocks_[it->second];
}

void GradientAccumulator::merge(const GradientAccumulator& other, double scale) {
  for (std::size_t i = 0; i < other.slots_.size(); ++i) {
    const auto& src = other.blocks_[i];
    auto dst = block(other.slots_[i], src.size());
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] += scale * src[j];
  }
}

void GradientAccumulator::clear() {
  slots_.clear();
  blocks_.clear();
  index_.clear();
}

double score(const ModelParams& params, const Query& x, EntityId y) {
  return evaluate<false>(params, roles_of(params, x, y), 0.0, nullptr);
}

double score_triple(const ModelParams& params, const Triple& t) {
  return score(params, Query{Direction::kTail, t.head, t.relation, t.tail}, t.tail);
}

double accumulate_score_grad(const ModelParams& params, const Query& x, EntityId y, double scale,
                             GradientAccumulator& grad) {
  return evaluate<true>(params, roles_of(params, x, y), scale, &grad);
}

ScoreWithGradient score_grad(const ModelParams& params, const Query& x, EntityId y) {
  ScoreWithGradient out{0.0, {}};
  out.score = accumulate_score_grad(params, x, y, 1.0, out.gradient);
  return out;
}

std::vector<double> score_all(const ModelParams& params, const Query& x) {
  std::vector<double> out(params.num_entities);
  for (std::size_t e = 0; e < params.num_entities; ++e) {
    out[e] = score(params, x, static_cast<EntityId>(e));
  }
  return out;
}

}  // namespace kgns
