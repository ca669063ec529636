#include "lms/history.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>
#include <vector>

namespace lms {

void IndicatorStore::advance(std::span<const Quadruple> snapshot, int t) {
  if (t < frontier_) {
    throw OrderingError("indicator already absorbed up to " + std::to_string(frontier_ - 1) +
                        ", cannot absorb time " + std::to_string(t));
  }
  for (const auto& f : snapshot) {
    if (f.time != t) {
      throw OrderingError("fact at time " + std::to_string(f.time) +
                          " inside snapshot for time " + std::to_string(t));
    }
    if (key_ == IndicatorKey::subject_relation) {
      seen_[pack(f.subject, f.relation)].insert(f.object);
    } else {
      seen_[pack(f.subject, f.object)].insert(f.relation);
    }
  }
  frontier_ = t + 1;
}

Vector IndicatorStore::lookup(int a, int b, int size) const {
  Vector out = Vector::Zero(size);
  if (auto it = seen_.find(pack(a, b)); it != seen_.end()) {
    for (int c : it->second)
      if (c >= 0 && c < size) out[c] = 1.0;
  }
  return out;
}

bool IndicatorStore::contains(int a, int b, int c) const {
  auto it = seen_.find(pack(a, b));
  return it != seen_.end() && it->second.contains(c);
}

std::size_t IndicatorStore::count(int a, int b) const {
  auto it = seen_.find(pack(a, b));
  return it == seen_.end() ? 0 : it->second.size();
}

std::string IndicatorStore::dump() const {
  std::vector<std::tuple<int, int, int>> rows;
  for (const auto& [key, set] : seen_) {
    const int a = static_cast<int>(key >> 32);
    const int b = static_cast<int>(key & 0xffffffffu);
    for (int c : set) rows.emplace_back(a, b, c);
  }
  std::sort(rows.begin(), rows.end());
  std::ostringstream out;
  for (const auto& [a, b, c] : rows) out << a << '\t' << b << '\t' << c << '\n';
  return out.str();
}

}  // namespace lms
