#include "lms/ugl.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace lms {

namespace {

void collect_nodes(UnionGraph& graph) {
  for (const auto& e : graph.edges) {
    graph.nodes.push_back(e.subject);
    graph.nodes.push_back(e.object);
  }
  std::sort(graph.nodes.begin(), graph.nodes.end());
  graph.nodes.erase(std::unique(graph.nodes.begin(), graph.nodes.end()), graph.nodes.end());
}

}  // namespace

UnionGraph build_union_graph(std::span<const Snapshot* const> history,
                             std::span<const int> query_subjects) {
  const std::unordered_set<int> subjects(query_subjects.begin(), query_subjects.end());
  UnionGraph graph;
  for (const Snapshot* snapshot : history) {
    for (const auto& f : *snapshot) {
      if (subjects.contains(f.subject) || subjects.contains(f.object)) graph.edges.push_back(f);
    }
  }
  collect_nodes(graph);
  return graph;
}

UnionGraph build_union_graph(std::span<const Snapshot* const> history,
                             std::span<const Query> queries) {
  std::vector<int> subjects;
  subjects.reserve(queries.size());
  for (const auto& q : queries) subjects.push_back(q.subject);
  return build_union_graph(history, subjects);
}

UnionGraph build_entire_union_graph(std::span<const Snapshot* const> history) {
  UnionGraph graph;
  for (const Snapshot* snapshot : history)
    graph.edges.insert(graph.edges.end(), snapshot->begin(), snapshot->end());
  collect_nodes(graph);
  return graph;
}

std::string dump_union_graph(const UnionGraph& graph) {
  std::ostringstream out;
  for (const auto& e : graph.edges)
    out << e.subject << '\t' << e.relation << '\t' << e.object << '\t' << e.time << '\n';
  return out.str();
}

Tensor init_union_embeddings(const std::vector<Tensor>& entity_steps) {
  if (entity_steps.empty()) throw std::invalid_argument("init_union_embeddings: empty list");
  return ops::mean_of(entity_steps);
}

UgatLayerParams UgatLayerParams::init(int dim, int conv_channels, int kernel_width, Rng& rng) {
  UgatLayerParams p;
  p.w_score = xavier_parameter(1, 4 * dim, rng);
  p.w_attention = xavier_parameter(4 * dim, 4 * dim, rng);
  p.w_message = xavier_parameter(dim, dim, rng);
  p.w_self = xavier_parameter(dim, dim, rng);
  p.composition = ConvComposition::init(2, conv_channels, kernel_width, dim, rng);
  return p;
}

std::vector<Tensor*> UgatLayerParams::parameters() {
  std::vector<Tensor*> out{&w_score, &w_attention, &w_message, &w_self};
  for (auto* t : composition.parameters()) out.push_back(t);
  return out;
}

namespace {

struct EdgeIndex {
  std::vector<int> subjects;
  std::vector<int> relations;
  std::vector<int> objects;
  std::vector<int> times;
};

EdgeIndex index_edges(const UnionGraph& graph) {
  EdgeIndex idx;
  for (const auto& e : graph.edges) {
    idx.subjects.push_back(e.subject);
    idx.relations.push_back(e.relation);
    idx.objects.push_back(e.object);
    idx.times.push_back(e.time);
  }
  return idx;
}

Tensor attention_from_index(const EdgeIndex& idx, const Tensor& entities,
                            const Tensor& relations, const Tensor& time_embeddings,
                            const UgatLayerParams& params, const UglOptions& options) {
  using namespace ops;
  const auto m = static_cast<Eigen::Index>(idx.subjects.size());
  Tensor time_part = options.use_time ? gather_rows(time_embeddings, idx.times)
                                      : Tensor(Matrix::Zero(m, entities.cols()));
  Tensor features = concat_cols({gather_rows(entities, idx.subjects),
                                 gather_rows(relations, idx.relations),
                                 gather_rows(entities, idx.objects), time_part});
  Tensor hidden = leaky_relu(linear(features, params.w_attention), options.leaky_slope);
  Tensor scores = linear(hidden, params.w_score);
  return segment_softmax(scores, idx.objects, entities.rows());
}

}  // namespace

Tensor ugat_attention(const UnionGraph& graph, const Tensor& entities, const Tensor& relations,
                      const Tensor& time_embeddings, const UgatLayerParams& params,
                      const UglOptions& options) {
  if (graph.edges.empty()) return Tensor(Matrix(0, 1));
  return attention_from_index(index_edges(graph), entities, relations, time_embeddings, params,
                              options);
}

Tensor ugl_layer(const UnionGraph& graph, const Tensor& entities, const Tensor& relations,
                 const Tensor& time_embeddings, const UgatLayerParams& params,
                 const UglOptions& options, const ForwardContext& ctx) {
  using namespace ops;
  if (graph.nodes.empty()) return entities;
  const Eigen::Index num_entities = entities.rows();

  std::vector<bool> in_graph(static_cast<std::size_t>(num_entities), false);
  for (int v : graph.nodes) in_graph[static_cast<std::size_t>(v)] = true;

  Tensor pre = linear(entities, params.w_self);
  if (!graph.edges.empty()) {
    const EdgeIndex idx = index_edges(graph);
    Tensor alpha =
        attention_from_index(idx, entities, relations, time_embeddings, params, options);
    Tensor composed = params.composition.apply(
        {gather_rows(entities, idx.subjects), gather_rows(relations, idx.relations)});
    Tensor messages = mul_rows(linear(composed, params.w_message), alpha);
    messages = dropout(messages, ctx.dropout, ctx);
    pre = add(pre, scatter_add_rows(messages, idx.objects, num_entities));
  }
  return select_rows(in_graph, rrelu(pre, ctx), entities);
}

GateParams GateParams::init(int num_entities, int dim, Rng& rng) {
  GateParams g;
  g.theta = xavier_parameter(num_entities, dim, rng);
  g.w_gate = xavier_parameter(1, dim, rng);
  return g;
}

std::vector<Tensor*> GateParams::parameters() { return {&theta, &w_gate}; }

Tensor gate_weights(const GateParams& gate) {
  return ops::sigmoid(ops::linear(gate.theta, gate.w_gate));
}

Tensor adaptive_gate(const Tensor& evolutional, const Tensor& union_embeddings,
                     const GateParams& gate) {
  using namespace ops;
  Tensor g = gate_weights(gate);
  return add(mul_rows(evolutional, g), mul_rows(union_embeddings, one_minus(g)));
}

}  // namespace lms
