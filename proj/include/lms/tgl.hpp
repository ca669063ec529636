#pragma once

// Temporal graph learning: timestamps linked by periodic relations, embedded
// with Time2Vec and refined by one relational convolution layer.

#include "lms/layers.hpp"

#include <string>
#include <vector>

namespace lms {

/// Period offsets in time-index units. Type p links t to t + offsets[p];
/// type p + offsets.size() is its inverse.
struct PeriodTable {
  std::vector<int> offsets;

  /// 3 days, 1 week, 2 weeks, 1 month at daily granularity.
  static PeriodTable daily();
  /// 1 hour, 12 hours, 1 day, 1 week at 15-minute granularity.
  static PeriodTable quarter_hourly();
  /// Table matching a granularity given in minutes (1440 daily, 15 quarter-hourly).
  static PeriodTable for_granularity_minutes(long minutes);
  /// Parses "3,7,14,30".
  static PeriodTable parse(const std::string& text);
  std::string to_string() const;

  int num_types() const { return 2 * static_cast<int>(offsets.size()); }
};

struct TemporalEdge {
  int from = 0;
  int type = 0;
  int to = 0;

  friend auto operator<=>(const TemporalEdge&, const TemporalEdge&) = default;
};

struct TemporalGraph {
  int num_timestamps = 0;
  PeriodTable periods;
  std::vector<TemporalEdge> edges;

  /// Signed offset (to - from) that an edge of `type` spans.
  int offset_of(int type) const;
  int inverse_type(int type) const;
};

TemporalGraph build_temporal_graph(int num_timestamps, const PeriodTable& periods);

struct Time2VecParams {
  Tensor raw;         // [|T| x time_dim], learned per timestamp
  Tensor w_out;       // [d x 2d]
  Tensor w_linear;    // [d x time_dim]
  Tensor w_periodic;  // [d x time_dim]

  static Time2VecParams init(int num_timestamps, int time_dim, int dim, Rng& rng);
  std::vector<Tensor*> parameters();
};

/// t' = W_out (W_linear t || sin(W_periodic t)) for every row of `raw`.
Tensor time2vec(const Tensor& raw, const Time2VecParams& params);

struct TemporalRgcnParams {
  std::vector<Tensor> w_type;  // one [d x d] per directed period type
  Tensor w_self;               // [d x d]

  static TemporalRgcnParams init(int num_types, int dim, Rng& rng);
  std::vector<Tensor*> parameters();
};

/// t''_i = RReLU(sum_{(j -> i) typed} W_type t'_j / N_i + W_self t'_i), with N_i
/// the total neighbour count of i. Isolated nodes keep only the self term.
Tensor rgcn_update(const TemporalGraph& graph, const Tensor& embeddings,
                   const TemporalRgcnParams& params, const ForwardContext& ctx);

}  // namespace lms
