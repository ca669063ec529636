#pragma once

#include "lms/dataset.hpp"
#include "lms/tensor.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace lms {

class OrderingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Which pair of a fact keys the store and which element is recorded.
enum class IndicatorKey {
  subject_relation,  // (s, r) -> objects, for entity queries
  subject_object,    // (s, o) -> relations, for relation queries
};

/// Cumulative memory of every fact absorbed so far. Snapshots must be
/// absorbed in chronological order; after absorbing time t the frontier is
/// t + 1 and lookups reflect exactly the facts with time < frontier.
class IndicatorStore {
 public:
  explicit IndicatorStore(IndicatorKey key = IndicatorKey::subject_relation) : key_(key) {}

  void advance(std::span<const Quadruple> snapshot, int t);
  /// Binary vector of length `size` marking the recorded elements of (a, b).
  Vector lookup(int a, int b, int size) const;
  bool contains(int a, int b, int c) const;
  /// Number of recorded elements for (a, b).
  std::size_t count(int a, int b) const;
  int frontier() const { return frontier_; }
  IndicatorKey key() const { return key_; }
  /// "a b c" lines, sorted.
  std::string dump() const;

 private:
  static std::uint64_t pack(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  }

  IndicatorKey key_;
  int frontier_ = 0;
  std::unordered_map<std::uint64_t, std::unordered_set<int>> seen_;
};

}  // namespace lms
