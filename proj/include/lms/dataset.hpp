#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace lms {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VocabularyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// One fact (s, r, o, t). Relation ids at or above the base relation count
/// denote inverse relations.
struct Quadruple {
  int subject = 0;
  int relation = 0;
  int object = 0;
  int time = 0;

  friend auto operator<=>(const Quadruple&, const Quadruple&) = default;
};

using Snapshot = std::vector<Quadruple>;

struct SnapshotSequence {
  std::vector<Snapshot> snapshots;
  int num_entities = 0;
  int num_base_relations = 0;
  long granularity = 1;

  int num_timestamps() const { return static_cast<int>(snapshots.size()); }
  std::size_t num_edges() const;
};

/// Bidirectional name <-> id map.
class Vocabulary {
 public:
  int intern(const std::string& name);
  std::optional<int> find(const std::string& name) const;
  const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(names_.size()); }
  void assign(const std::string& name, int id);

 private:
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> names_;
};

struct DatasetSplits {
  std::vector<Quadruple> train;
  std::vector<Quadruple> valid;
  std::vector<Quadruple> test;
  Vocabulary entities;
  Vocabulary relations;
  int num_entities = 0;
  int num_base_relations = 0;
  int num_timestamps = 0;
  long granularity = 1;
};

/// Parses `train.txt`, `valid.txt` and `test.txt` (and the optional
/// `stat.txt`, `entity2id.txt`, `relation2id.txt`) from a dataset directory.
/// Raw times are divided by `granularity` and shifted so the earliest
/// timestamp is 0. Missing valid/test files yield empty splits.
DatasetSplits parse_dataset(const std::filesystem::path& dir, long granularity);

/// Appends (o, r + |R|, s, t) for every (s, r, o, t), after the originals.
std::vector<Quadruple> augment_inverse(std::span<const Quadruple> facts, int num_base_relations);

/// Relation id of the reciprocal direction.
inline int inverse_relation(int relation, int num_base_relations) {
  return relation < num_base_relations ? relation + num_base_relations
                                       : relation - num_base_relations;
}

SnapshotSequence build_snapshots(std::span<const Quadruple> facts, int num_timestamps);

/// Snapshots [max(0, t - k), t) in chronological order. Empty for t == 0.
std::vector<const Snapshot*> slice_history(const SnapshotSequence& seq, int t, int k);

/// Known dataset defaults: granularity in raw time units and the best
/// history length reported for each.
struct DatasetPreset {
  std::string name;
  long granularity;
  int history_length;
  std::vector<int> periods;
};

std::optional<DatasetPreset> find_preset(const std::string& name);
const std::vector<DatasetPreset>& dataset_presets();

/// Key-value summary of split sizes and vocabulary sizes.
std::string summarize(const DatasetSplits& splits);

/// Writes the three split files (and stat.txt) in the format parse_dataset reads.
void write_dataset(const DatasetSplits& splits, const std::filesystem::path& dir);

}  // namespace lms
