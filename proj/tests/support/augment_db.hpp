#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "cjt/join_graph.hpp"

namespace cjt::testing {

struct FactRow {
  int k;
  int j;
  double x;
  double y;
};

struct DimRow {
  int j;
  int z;
};

/// Fact F(k, j; x, y) joined with dimension D(j, z), gram over (x, y), with
/// raw rows kept for materializing the join independently.
struct AugmentDb {
  std::shared_ptr<JoinGraph> graph;
  std::vector<FactRow> facts;
  std::vector<DimRow> dims;
  std::vector<double> key_effect;
};

inline AugmentDb augment_db(std::uint64_t seed, int facts = 200, int keys = 20, int dims = 5,
                            std::shared_ptr<Dictionary> dict = nullptr, std::vector<double> effects = {}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> effect(0.0, 3.0);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::uniform_real_distribution<double> ux(-2.0, 2.0);
  AugmentDb db;
  db.graph = std::make_shared<JoinGraph>("aug" + std::to_string(seed), SemiringSpec::gram({"x", "y"}), dict);
  if (effects.empty()) {
    for (int k = 0; k < keys; ++k) effects.push_back(effect(rng));
  }
  db.key_effect = effects;
  Dictionary& d = db.graph->dictionary();
  for (const char* a : {"k", "j", "z"}) d.declare(a, AttrType::kCategorical);
  const SemiringSpec& spec = db.graph->spec();

  RelationBuilder f({"j", "k"}, spec);
  for (int i = 0; i < facts; ++i) {
    FactRow r{static_cast<int>(rng() % static_cast<unsigned>(keys)), static_cast<int>(rng() % static_cast<unsigned>(dims)),
              ux(rng), 0.0};
    r.y = 1.5 * r.x + effects[static_cast<std::size_t>(r.k)] + noise(rng);
    db.facts.push_back(r);
    const Value t[] = {d.intern("j", "j" + std::to_string(r.j)), d.intern("k", "k" + std::to_string(r.k))};
    const std::optional<double> v[] = {r.x, r.y};
    f.add(t, lift(v, spec));
  }
  RelationBuilder g({"j", "z"}, spec);
  for (int j = 0; j < dims; ++j) {
    const int copies = 1 + static_cast<int>(rng() % 2);
    for (int c = 0; c < copies; ++c) {
      db.dims.push_back({j, c});
      const Value t[] = {d.intern("j", "j" + std::to_string(j)), d.intern("z", "z" + std::to_string(c))};
      g.add(t, Annotation::one(spec));
    }
  }
  db.graph->add_relation("F", std::move(f).build());
  db.graph->add_relation("D", std::move(g).build());
  return db;
}

}  // namespace cjt::testing
