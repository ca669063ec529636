#pragma once

// Evolutional graph learning: relational aggregation inside each snapshot
// followed by recurrent evolution of entity and relation embeddings across
// the history window.

#include "lms/dataset.hpp"
#include "lms/layers.hpp"

#include <span>
#include <vector>

namespace lms {

enum class Aggregation {
  mean,  // messages divided by the object's in-degree
  sum,
};

struct CompGcnLayerParams {
  Tensor w_message;  // [d x d]
  Tensor w_self;     // [d x d]
  ConvComposition composition;

  static CompGcnLayerParams init(int dim, int conv_channels, int kernel_width, Rng& rng);
  std::vector<Tensor*> parameters();
};

struct EglParams {
  std::vector<CompGcnLayerParams> layers;
  GruParams entity_gru;    // input d, hidden d
  GruParams relation_gru;  // input 2d, hidden d

  static EglParams init(int dim, int num_layers, int conv_channels, int kernel_width, Rng& rng);
  std::vector<Tensor*> parameters();
};

struct EvolutionState {
  /// Entity matrix after each absorbed snapshot, oldest first.
  std::vector<Tensor> entities;
  Tensor relations;
  /// True when the history was empty and `entities` holds only the input.
  bool empty_history = false;
};

/// One relational aggregation layer over a snapshot:
///   o' = RReLU(sum_{(s,r,o)} c_o * W_msg psi(s || r) + W_self o)
/// with c_o = 1/in-degree(o) for mean aggregation and 1 for sum.
Tensor compgcn_layer(const Snapshot& snapshot, const Tensor& entities, const Tensor& relations,
                     const CompGcnLayerParams& params, Aggregation aggregation,
                     const ForwardContext& ctx);

/// All aggregation layers applied in sequence.
Tensor aggregate_snapshot(const Snapshot& snapshot, const Tensor& entities,
                          const Tensor& relations, const EglParams& params,
                          Aggregation aggregation, const ForwardContext& ctx);

/// E_t = GRU(hidden = E_{t-1}, input = G_{t-1}).
Tensor evolve_entities(const Tensor& previous, const Tensor& aggregated, const GruParams& gru);

/// Mean embedding of the distinct entities touching each relation in the
/// snapshot; zero rows for relations that do not occur.
Tensor pool_relation_entities(const Snapshot& snapshot, const Tensor& entities,
                              int num_relations);

/// R_t = GRU(hidden = R_{t-1}, input = [pool(E_{t-1}) || R_init]).
Tensor evolve_relations(const Tensor& previous, const Snapshot& snapshot,
                        const Tensor& entities, const Tensor& initial, const GruParams& gru);

/// Runs relation evolution, aggregation and entity evolution over every
/// snapshot of the window. `initial_entities` and `initial_relations` are
/// used as given.
EvolutionState run_egl(std::span<const Snapshot* const> history, const Tensor& initial_entities,
                       const Tensor& initial_relations, const EglParams& params,
                       Aggregation aggregation, const ForwardContext& ctx);

}  // namespace lms
