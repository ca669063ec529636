#include "lms/egl.hpp"

#include <algorithm>
#include <set>

namespace lms {

CompGcnLayerParams CompGcnLayerParams::init(int dim, int conv_channels, int kernel_width,
                                            Rng& rng) {
  CompGcnLayerParams p;
  p.w_message = xavier_parameter(dim, dim, rng);
  p.w_self = xavier_parameter(dim, dim, rng);
  p.composition = ConvComposition::init(2, conv_channels, kernel_width, dim, rng);
  return p;
}

std::vector<Tensor*> CompGcnLayerParams::parameters() {
  std::vector<Tensor*> out{&w_message, &w_self};
  for (auto* t : composition.parameters()) out.push_back(t);
  return out;
}

EglParams EglParams::init(int dim, int num_layers, int conv_channels, int kernel_width,
                          Rng& rng) {
  EglParams p;
  for (int l = 0; l < num_layers; ++l)
    p.layers.push_back(CompGcnLayerParams::init(dim, conv_channels, kernel_width, rng));
  p.entity_gru = GruParams::init(dim, dim, rng);
  p.relation_gru = GruParams::init(2 * dim, dim, rng);
  return p;
}

std::vector<Tensor*> EglParams::parameters() {
  std::vector<Tensor*> out;
  for (auto& layer : layers)
    for (auto* t : layer.parameters()) out.push_back(t);
  for (auto* t : entity_gru.parameters()) out.push_back(t);
  for (auto* t : relation_gru.parameters()) out.push_back(t);
  return out;
}

Tensor compgcn_layer(const Snapshot& snapshot, const Tensor& entities, const Tensor& relations,
                     const CompGcnLayerParams& params, Aggregation aggregation,
                     const ForwardContext& ctx) {
  using namespace ops;
  const Eigen::Index num_entities = entities.rows();
  Tensor self = linear(entities, params.w_self);
  if (snapshot.empty()) return rrelu(self, ctx);

  std::vector<int> subjects;
  std::vector<int> rels;
  std::vector<int> objects;
  subjects.reserve(snapshot.size());
  rels.reserve(snapshot.size());
  objects.reserve(snapshot.size());
  Vector in_degree = Vector::Zero(num_entities);
  for (const auto& f : snapshot) {
    subjects.push_back(f.subject);
    rels.push_back(f.relation);
    objects.push_back(f.object);
    in_degree[f.object] += 1.0;
  }

  Tensor composed =
      params.composition.apply({gather_rows(entities, subjects), gather_rows(relations, rels)});
  Tensor messages = dropout(linear(composed, params.w_message), ctx.dropout, ctx);
  if (aggregation == Aggregation::mean) {
    Vector norm(static_cast<Eigen::Index>(objects.size()));
    for (std::size_t i = 0; i < objects.size(); ++i)
      norm[static_cast<Eigen::Index>(i)] = 1.0 / in_degree[objects[i]];
    messages = scale_rows(messages, norm);
  }
  Tensor summed = scatter_add_rows(messages, objects, num_entities);
  return rrelu(add(summed, self), ctx);
}

Tensor aggregate_snapshot(const Snapshot& snapshot, const Tensor& entities,
                          const Tensor& relations, const EglParams& params,
                          Aggregation aggregation, const ForwardContext& ctx) {
  Tensor h = entities;
  for (const auto& layer : params.layers)
    h = compgcn_layer(snapshot, h, relations, layer, aggregation, ctx);
  return h;
}

Tensor evolve_entities(const Tensor& previous, const Tensor& aggregated, const GruParams& gru) {
  return gru_cell(previous, aggregated, gru);
}

Tensor pool_relation_entities(const Snapshot& snapshot, const Tensor& entities,
                              int num_relations) {
  std::vector<std::set<int>> touching(static_cast<std::size_t>(num_relations));
  for (const auto& f : snapshot) {
    touching[static_cast<std::size_t>(f.relation)].insert(f.subject);
    touching[static_cast<std::size_t>(f.relation)].insert(f.object);
  }
  std::vector<int> members;
  std::vector<int> owner;
  Vector weight;
  std::vector<double> weights;
  for (int r = 0; r < num_relations; ++r) {
    const auto& set = touching[static_cast<std::size_t>(r)];
    for (int e : set) {
      members.push_back(e);
      owner.push_back(r);
      weights.push_back(1.0 / static_cast<double>(set.size()));
    }
  }
  if (members.empty()) return Tensor(Matrix::Zero(num_relations, entities.cols()));
  weight = Eigen::Map<Vector>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  Tensor gathered = ops::scale_rows(ops::gather_rows(entities, members), weight);
  return ops::scatter_add_rows(gathered, owner, num_relations);
}

Tensor evolve_relations(const Tensor& previous, const Snapshot& snapshot,
                        const Tensor& entities, const Tensor& initial, const GruParams& gru) {
  Tensor pooled = pool_relation_entities(snapshot, entities, static_cast<int>(initial.rows()));
  return gru_cell(previous, ops::concat_cols({pooled, initial}), gru);
}

EvolutionState run_egl(std::span<const Snapshot* const> history, const Tensor& initial_entities,
                       const Tensor& initial_relations, const EglParams& params,
                       Aggregation aggregation, const ForwardContext& ctx) {
  EvolutionState state;
  state.relations = initial_relations;
  if (history.empty()) {
    state.entities.push_back(initial_entities);
    state.empty_history = true;
    return state;
  }
  Tensor entities = initial_entities;
  for (const Snapshot* snapshot : history) {
    state.relations =
        evolve_relations(state.relations, *snapshot, entities, initial_relations, params.relation_gru);
    Tensor aggregated =
        aggregate_snapshot(*snapshot, entities, state.relations, params, aggregation, ctx);
    entities = evolve_entities(entities, aggregated, params.entity_gru);
    state.entities.push_back(entities);
  }
  return state;
}

}  // namespace lms
