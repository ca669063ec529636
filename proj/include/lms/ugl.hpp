#pragma once

// Union graph learning: a query-specific multigraph over the history window
// whose edges keep their source timestamps, aggregated with time-aware
// attention and fused with the evolutional embeddings through a gate.

#include "lms/dataset.hpp"
#include "lms/layers.hpp"

#include <span>
#include <string>
#include <vector>

namespace lms {

struct Query {
  int subject = 0;
  int relation = 0;
  int time = 0;
};

struct UnionGraph {
  /// Edges in history order; `time` is the edge's source timestamp.
  std::vector<Quadruple> edges;
  /// Sorted distinct entities touched by some edge.
  std::vector<int> nodes;
};

/// Facts of the window whose subject or object is one of `query_subjects`.
UnionGraph build_union_graph(std::span<const Snapshot* const> history,
                             std::span<const int> query_subjects);
UnionGraph build_union_graph(std::span<const Snapshot* const> history,
                             std::span<const Query> queries);
/// Every fact of the window (the "entirety" ablation).
UnionGraph build_entire_union_graph(std::span<const Snapshot* const> history);

/// One "s r o t" line per edge.
std::string dump_union_graph(const UnionGraph& graph);

/// Element-wise mean of the evolutional entity matrices.
Tensor init_union_embeddings(const std::vector<Tensor>& entity_steps);

struct UgatLayerParams {
  Tensor w_score;      // [1 x 4d]
  Tensor w_attention;  // [4d x 4d]
  Tensor w_message;    // [d x d]
  Tensor w_self;       // [d x d]
  ConvComposition composition;

  static UgatLayerParams init(int dim, int conv_channels, int kernel_width, Rng& rng);
  std::vector<Tensor*> parameters();
};

struct UglOptions {
  /// Feed the edge timestamp embedding into the attention score.
  bool use_time = true;
  double leaky_slope = 0.2;
};

/// Attention weight of every union edge, normalised over the incoming edges
/// of its object. `time_embeddings` is indexed by timestamp. Returns [m x 1].
Tensor ugat_attention(const UnionGraph& graph, const Tensor& entities, const Tensor& relations,
                      const Tensor& time_embeddings, const UgatLayerParams& params,
                      const UglOptions& options);

/// o' = RReLU(sum alpha_{o,s} W_msg psi(s || r) + W_self o) for every entity
/// touched by the union graph (nodes without incoming edges keep only the
/// self term); entities outside the graph pass through unchanged.
Tensor ugl_layer(const UnionGraph& graph, const Tensor& entities, const Tensor& relations,
                 const Tensor& time_embeddings, const UgatLayerParams& params,
                 const UglOptions& options, const ForwardContext& ctx);

struct GateParams {
  Tensor theta;   // [|E| x d]
  Tensor w_gate;  // [1 x d]

  static GateParams init(int num_entities, int dim, Rng& rng);
  std::vector<Tensor*> parameters();
};

/// sigmoid(W7 theta_e) per entity, [|E| x 1].
Tensor gate_weights(const GateParams& gate);

/// GE_e = g_e E_e + (1 - g_e) UE_e.
Tensor adaptive_gate(const Tensor& evolutional, const Tensor& union_embeddings,
                     const GateParams& gate);

}  // namespace lms
