#pragma once

// The full multi-graph model: evolutional, union and temporal encoders
// feeding indicator-masked time-aware decoders.

#include "lms/config.hpp"
#include "lms/decoder.hpp"
#include "lms/egl.hpp"
#include "lms/tgl.hpp"
#include "lms/ugl.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lms {

struct ModelShape {
  int num_entities = 0;
  /// Relation vocabulary including inverses (2|R|).
  int num_relations = 0;
  int num_timestamps = 0;
};

/// Output of the encoders for one prediction time.
struct Encoding {
  Tensor entities;         // GE_t, [|E| x d]
  Tensor relations;        // R_t, [2|R| x d]
  Tensor time;             // t'' for every timestamp, [|T| x d]
  EvolutionState evolution;
  std::optional<Tensor> union_embeddings;
  UnionGraph union_graph;
};

struct StepOutput {
  Encoding encoding;
  DecoderOutput entity;
  DecoderOutput relation;
};

/// Queries of one prediction time, in fact form: the entity query is
/// (s, r, ?) with truth o and the relation query (s, ?, o) with truth r.
struct StepQueries {
  int time = 0;
  std::span<const Quadruple> facts;
  /// Subjects defining the union graph; defaults to the facts' subjects.
  std::optional<std::vector<int>> union_subjects;
  Matrix entity_mask;    // [n x |E|]
  Matrix relation_mask;  // [n x 2|R|]
  /// Relation decoding is only needed for the training objective.
  bool score_relations = true;
};

class LmsModel {
 public:
  LmsModel(const Config& config, const ModelShape& shape, Rng& init_rng);

  const Config& config() const { return config_; }
  /// Changes the historical rate used by both decoders.
  void set_alpha(double alpha);
  const ModelShape& shape() const { return shape_; }
  const TemporalGraph& temporal_graph() const { return temporal_graph_; }

  /// Every trainable parameter under a stable name.
  std::vector<std::pair<std::string, Tensor*>> named_parameters();
  std::vector<Tensor*> parameters();

  ForwardContext context(bool training, Rng* rng) const;

  /// t'' for every timestamp (Time2Vec only for the -TGL variant).
  Tensor time_embeddings(const ForwardContext& ctx) const;
  Tensor initial_entities() const;

  Encoding encode(std::span<const Snapshot* const> history, std::span<const int> union_subjects,
                  const ForwardContext& ctx) const;

  StepOutput forward(std::span<const Snapshot* const> history, const StepQueries& queries,
                     const ForwardContext& ctx) const;

  // Parameters. Members unused by the configured variant stay undefined.
  Tensor entity_init;    // [|E| x d], row-normalised before use
  Tensor relation_init;  // [2|R| x d]
  EglParams egl;
  std::vector<UgatLayerParams> ugl;
  GateParams gate;
  Tensor gate_linear;  // [d x 2d]
  Time2VecParams time2vec_params;
  TemporalRgcnParams temporal_rgcn;
  ConvTransEParams entity_decoder;
  ConvTransEParams relation_decoder;

 private:
  Config config_;
  ModelShape shape_;
  TemporalGraph temporal_graph_;
};

}  // namespace lms
