#pragma once

// Generated temporal knowledge graphs for tests, demos and acceptance runs.

#include "lms/dataset.hpp"

#include <cstdint>

namespace lms {

struct PeriodicOptions {
  int num_entities = 20;
  int num_relations = 8;
  int num_timestamps = 112;
  int period = 7;
  /// Active (subject, relation) pairs per entity; each fires every day.
  int pairs_per_entity = 2;
  /// Last phases of each period on which a pair switches to its special
  /// object; on all other phases it uses its regular object.
  int special_phases = 2;
  /// Random facts added to every snapshot.
  int noise_per_snapshot = 1;
  int train_end = 84;   // first valid time
  int valid_end = 98;   // first test time
  std::uint64_t seed = 7;
};

/// Every active pair (s, r) links to its regular object, or to its special
/// object when t mod period >= period - special_phases. Objects are drawn
/// once from the seed; noise facts are uniform. With a history window
/// shorter than the run of regular phases, the first special phase cannot be
/// told apart from a regular one by history content alone.
DatasetSplits generate_periodic(const PeriodicOptions& options = {});

struct StreamOptions {
  int num_entities = 500;
  int num_relations = 60;
  int num_timestamps = 365;
  int num_facts = 10000;
  /// Probability that a fact repeats an earlier (s, r, o) triple.
  double repeat_rate = 0.6;
  std::uint64_t seed = 11;
};

/// A skewed, repetitive event stream shaped like ICEWS (train split only).
DatasetSplits generate_event_stream(const StreamOptions& options = {});

}  // namespace lms
