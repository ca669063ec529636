#include "lms/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace lms {

DatasetSplits generate_periodic(const PeriodicOptions& o) {
  if (o.num_entities < 2 || o.num_relations < 1 || o.period < 1)
    throw std::invalid_argument("generate_periodic: degenerate sizes");
  if (!(0 < o.train_end && o.train_end <= o.valid_end && o.valid_end <= o.num_timestamps))
    throw std::invalid_argument("generate_periodic: bad split boundaries");
  if (o.special_phases < 0 || o.special_phases >= o.period)
    throw std::invalid_argument("generate_periodic: special_phases must lie in [0, period)");
  if (o.pairs_per_entity > o.num_relations)
    throw std::invalid_argument("generate_periodic: pairs_per_entity exceeds relations");

  std::mt19937_64 rng(o.seed);
  std::uniform_int_distribution<int> entity(0, o.num_entities - 1);
  std::uniform_int_distribution<int> relation(0, o.num_relations - 1);

  struct Pair {
    int subject;
    int relation;
    int regular;
    int special;
  };
  std::vector<Pair> pairs;
  for (int s = 0; s < o.num_entities; ++s) {
    std::vector<int> rels(static_cast<std::size_t>(o.num_relations));
    std::iota(rels.begin(), rels.end(), 0);
    std::shuffle(rels.begin(), rels.end(), rng);
    for (int j = 0; j < o.pairs_per_entity; ++j) {
      Pair p{s, rels[static_cast<std::size_t>(j)], s, s};
      while (p.regular == s) p.regular = entity(rng);
      while (p.special == s || p.special == p.regular) p.special = entity(rng);
      pairs.push_back(p);
    }
  }

  DatasetSplits out;
  out.num_entities = o.num_entities;
  out.num_base_relations = o.num_relations;
  out.num_timestamps = o.num_timestamps;
  for (int t = 0; t < o.num_timestamps; ++t) {
    std::set<Quadruple> facts;
    const bool special = t % o.period >= o.period - o.special_phases;
    for (const auto& p : pairs) facts.insert({p.subject, p.relation, special ? p.special : p.regular, t});
    for (int n = 0; n < o.noise_per_snapshot; ++n) {
      const int s = entity(rng);
      int obj = entity(rng);
      while (obj == s) obj = entity(rng);
      facts.insert({s, relation(rng), obj, t});
    }
    auto& split = t < o.train_end ? out.train : t < o.valid_end ? out.valid : out.test;
    split.insert(split.end(), facts.begin(), facts.end());
  }
  for (int e = 0; e < o.num_entities; ++e) out.entities.intern("e" + std::to_string(e));
  for (int r = 0; r < o.num_relations; ++r) out.relations.intern("r" + std::to_string(r));
  return out;
}

DatasetSplits generate_event_stream(const StreamOptions& o) {
  if (o.num_entities < 2 || o.num_relations < 1 || o.num_timestamps < 1 || o.num_facts < 1)
    throw std::invalid_argument("generate_event_stream: degenerate sizes");
  std::mt19937_64 rng(o.seed);
  // Zipf-like popularity so that a few actors dominate, as in news events.
  std::vector<double> weights(static_cast<std::size_t>(o.num_entities));
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = 1.0 / static_cast<double>(i + 1);
  std::discrete_distribution<int> actor(weights.begin(), weights.end());
  std::uniform_int_distribution<int> relation(0, o.num_relations - 1);
  std::bernoulli_distribution repeat(o.repeat_rate);

  DatasetSplits out;
  out.num_entities = o.num_entities;
  out.num_base_relations = o.num_relations;
  out.num_timestamps = o.num_timestamps;
  std::vector<Quadruple> seen;
  const double per_step = static_cast<double>(o.num_facts) / o.num_timestamps;
  for (int i = 0; i < o.num_facts; ++i) {
    const int t = std::min(o.num_timestamps - 1, static_cast<int>(i / per_step));
    Quadruple q;
    if (!seen.empty() && repeat(rng)) {
      std::uniform_int_distribution<std::size_t> pick(0, seen.size() - 1);
      q = seen[pick(rng)];
    } else {
      q.subject = actor(rng);
      q.relation = relation(rng);
      q.object = actor(rng);
      while (q.object == q.subject) q.object = actor(rng);
    }
    q.time = t;
    seen.push_back(q);
    out.train.push_back(q);
  }
  return out;
}

}  // namespace lms
