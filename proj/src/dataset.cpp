#include "lms/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

namespace lms {

namespace fs = std::filesystem;

std::size_t SnapshotSequence::num_edges() const {
  std::size_t n = 0;
  for (const auto& s : snapshots) n += s.size();
  return n;
}

int Vocabulary::intern(const std::string& name) {
  if (auto it = ids_.find(name); it != ids_.end()) return it->second;
  const int id = size();
  ids_.emplace(name, id);
  names_.push_back(name);
  return id;
}

std::optional<int> Vocabulary::find(const std::string& name) const {
  if (auto it = ids_.find(name); it != ids_.end()) return it->second;
  return std::nullopt;
}

void Vocabulary::assign(const std::string& name, int id) {
  if (id < 0) throw VocabularyError("negative id for '" + name + "'");
  if (static_cast<std::size_t>(id) >= names_.size()) names_.resize(static_cast<std::size_t>(id) + 1);
  names_[static_cast<std::size_t>(id)] = name;
  ids_[name] = id;
}

namespace {

struct RawLine {
  std::string subject;
  std::string relation;
  std::string object;
  long time = 0;
  std::string file;
  std::size_t line = 0;
};

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  if (line.find('\t') != std::string::npos) {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
  } else {
    std::istringstream ss(line);
    std::string field;
    while (ss >> field) fields.push_back(field);
  }
  for (auto& f : fields) {
    while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
    while (!f.empty() && f.front() == ' ') f.erase(f.begin());
  }
  return fields;
}

template <typename T>
std::optional<T> parse_integer(const std::string& token) {
  T value{};
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || token.empty()) return std::nullopt;
  return value;
}

std::vector<RawLine> read_split(const fs::path& path, bool required) {
  std::vector<RawLine> rows;
  std::ifstream in(path);
  if (!in) {
    if (required) throw std::runtime_error("cannot open " + path.string());
    return rows;
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_fields(line);
    const std::string where = path.filename().string() + ":" + std::to_string(line_no);
    if (fields.size() < 4) throw ParseError(where + ": expected 4 fields, got " +
                                            std::to_string(fields.size()));
    auto time = parse_integer<long>(fields[3]);
    if (!time) throw ParseError(where + ": malformed time '" + fields[3] + "'");
    rows.push_back(RawLine{fields[0], fields[1], fields[2], *time, path.filename().string(),
                           line_no});
  }
  return rows;
}

std::optional<Vocabulary> read_vocabulary(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_fields(line);
    auto id = fields.size() >= 2 ? parse_integer<int>(fields.back()) : std::nullopt;
    if (!id) throw ParseError(path.filename().string() + ":" + std::to_string(line_no) +
                              ": expected '<name>\\t<id>'");
    std::string name = fields[0];
    for (std::size_t i = 1; i + 1 < fields.size(); ++i) name += "\t" + fields[i];
    vocab.assign(name, *id);
  }
  return vocab;
}

long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

DatasetSplits parse_dataset(const fs::path& dir, long granularity) {
  if (granularity <= 0) throw std::invalid_argument("granularity must be positive");
  if (!fs::is_directory(dir)) throw std::runtime_error("dataset directory not found: " + dir.string());

  std::array<std::vector<RawLine>, 3> raw{read_split(dir / "train.txt", true),
                                          read_split(dir / "valid.txt", false),
                                          read_split(dir / "test.txt", false)};

  std::optional<std::array<long, 3>> stat;
  if (std::ifstream in(dir / "stat.txt"); in) {
    std::array<long, 3> values{0, 0, 0};
    for (auto& v : values) {
      if (!(in >> v)) v = 0;
    }
    stat = values;
  }

  auto entity_file = read_vocabulary(dir / "entity2id.txt");
  auto relation_file = read_vocabulary(dir / "relation2id.txt");

  bool numeric = !entity_file && !relation_file;
  for (const auto& split : raw) {
    for (const auto& row : split) {
      if (!parse_integer<int>(row.subject) || !parse_integer<int>(row.relation) ||
          !parse_integer<int>(row.object)) {
        numeric = false;
      }
    }
  }

  DatasetSplits out;
  out.granularity = granularity;
  if (entity_file) out.entities = *entity_file;
  if (relation_file) out.relations = *relation_file;

  const long max_entities =
      stat && stat->at(0) > 0 ? stat->at(0) : (entity_file ? entity_file->size() : -1);
  const long max_relations =
      stat && stat->at(1) > 0 ? stat->at(1) : (relation_file ? relation_file->size() : -1);

  auto resolve = [&](const std::string& token, Vocabulary& vocab, bool from_file, long bound,
                     const RawLine& row, const char* kind) {
    int id = 0;
    if (numeric) {
      id = *parse_integer<int>(token);
    } else if (from_file) {
      auto found = vocab.find(token);
      if (!found) throw VocabularyError(row.file + ":" + std::to_string(row.line) + ": unknown " +
                                        kind + " '" + token + "'");
      id = *found;
    } else {
      id = vocab.intern(token);
    }
    if (id < 0 || (bound >= 0 && id >= bound)) {
      throw VocabularyError(row.file + ":" + std::to_string(row.line) + ": " + kind + " id " +
                            std::to_string(id) + " outside [0, " + std::to_string(bound) + ")");
    }
    return id;
  };

  long min_index = std::numeric_limits<long>::max();
  long max_index = std::numeric_limits<long>::min();
  for (const auto& split : raw) {
    for (const auto& row : split) {
      const long idx = floor_div(row.time, granularity);
      min_index = std::min(min_index, idx);
      max_index = std::max(max_index, idx);
    }
  }
  if (min_index == std::numeric_limits<long>::max()) min_index = max_index = 0;

  int max_entity = -1;
  int max_relation = -1;
  std::array<std::vector<Quadruple>*, 3> targets{&out.train, &out.valid, &out.test};
  for (std::size_t k = 0; k < raw.size(); ++k) {
    targets[k]->reserve(raw[k].size());
    for (const auto& row : raw[k]) {
      Quadruple q;
      q.subject = resolve(row.subject, out.entities, entity_file.has_value(), max_entities, row,
                          "entity");
      q.relation = resolve(row.relation, out.relations, relation_file.has_value(), max_relations,
                           row, "relation");
      q.object =
          resolve(row.object, out.entities, entity_file.has_value(), max_entities, row, "entity");
      q.time = static_cast<int>(floor_div(row.time, granularity) - min_index);
      max_entity = std::max({max_entity, q.subject, q.object});
      max_relation = std::max(max_relation, q.relation);
      targets[k]->push_back(q);
    }
  }

  if (max_entities >= 0) {
    out.num_entities = static_cast<int>(max_entities);
  } else {
    out.num_entities = numeric ? max_entity + 1 : out.entities.size();
  }
  if (max_relations >= 0) {
    out.num_base_relations = static_cast<int>(max_relations);
  } else {
    out.num_base_relations = numeric ? max_relation + 1 : out.relations.size();
  }
  const bool any_fact = !(out.train.empty() && out.valid.empty() && out.test.empty());
  out.num_timestamps = any_fact ? static_cast<int>(max_index - min_index + 1) : 0;
  if (stat && stat->at(2) > out.num_timestamps) out.num_timestamps = static_cast<int>(stat->at(2));

  if (numeric) {
    for (int i = out.entities.size(); i < out.num_entities; ++i)
      out.entities.assign(std::to_string(i), i);
    for (int i = out.relations.size(); i < out.num_base_relations; ++i)
      out.relations.assign(std::to_string(i), i);
  }
  return out;
}

std::vector<Quadruple> augment_inverse(std::span<const Quadruple> facts, int num_base_relations) {
  std::vector<Quadruple> out;
  out.reserve(facts.size() * 2);
  out.insert(out.end(), facts.begin(), facts.end());
  for (const auto& f : facts)
    out.push_back(Quadruple{f.object, f.relation + num_base_relations, f.subject, f.time});
  return out;
}

SnapshotSequence build_snapshots(std::span<const Quadruple> facts, int num_timestamps) {
  SnapshotSequence seq;
  seq.snapshots.resize(static_cast<std::size_t>(std::max(0, num_timestamps)));
  for (const auto& f : facts) {
    if (f.time < 0 || f.time >= num_timestamps) {
      throw RangeError("fact time " + std::to_string(f.time) + " outside [0, " +
                       std::to_string(num_timestamps) + ")");
    }
    seq.snapshots[static_cast<std::size_t>(f.time)].push_back(f);
  }
  return seq;
}

std::vector<const Snapshot*> slice_history(const SnapshotSequence& seq, int t, int k) {
  if (k < 1) throw std::invalid_argument("history length must be >= 1");
  std::vector<const Snapshot*> out;
  const int end = std::min(t, seq.num_timestamps());
  for (int i = std::max(0, t - k); i < end; ++i)
    out.push_back(&seq.snapshots[static_cast<std::size_t>(i)]);
  return out;
}

const std::vector<DatasetPreset>& dataset_presets() {
  static const std::vector<DatasetPreset> presets{
      {"ICEWS14s", 24, 25, {3, 7, 14, 30}},
      {"ICEWS18", 24, 11, {3, 7, 14, 30}},
      {"ICEWS05-15", 24, 25, {3, 7, 14, 30}},
      {"GDELT", 15, 45, {4, 48, 96, 672}},
      {"ICEWS14", 24, 17, {3, 7, 14, 30}},
  };
  return presets;
}

std::optional<DatasetPreset> find_preset(const std::string& name) {
  for (const auto& p : dataset_presets())
    if (p.name == name) return p;
  return std::nullopt;
}

std::string summarize(const DatasetSplits& splits) {
  auto count_times = [](const std::vector<Quadruple>& facts) {
    std::vector<int> times;
    for (const auto& f : facts) times.push_back(f.time);
    std::sort(times.begin(), times.end());
    return std::unique(times.begin(), times.end()) - times.begin();
  };
  std::ostringstream out;
  out << "entities=" << splits.num_entities << "\n";
  out << "relations=" << splits.num_base_relations << "\n";
  out << "timestamps=" << splits.num_timestamps << "\n";
  out << "granularity=" << splits.granularity << "\n";
  out << "train_facts=" << splits.train.size() << "\n";
  out << "valid_facts=" << splits.valid.size() << "\n";
  out << "test_facts=" << splits.test.size() << "\n";
  out << "train_timestamps=" << count_times(splits.train) << "\n";
  out << "valid_timestamps=" << count_times(splits.valid) << "\n";
  out << "test_timestamps=" << count_times(splits.test) << "\n";
  return out.str();
}

void write_dataset(const DatasetSplits& splits, const fs::path& dir) {
  fs::create_directories(dir);
  auto write = [&](const std::vector<Quadruple>& facts, const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    for (const auto& f : facts)
      out << f.subject << '\t' << f.relation << '\t' << f.object << '\t'
          << static_cast<long>(f.time) * splits.granularity << '\n';
  };
  write(splits.train, "train.txt");
  write(splits.valid, "valid.txt");
  write(splits.test, "test.txt");
  std::ofstream stat(dir / "stat.txt");
  stat << splits.num_entities << '\t' << splits.num_base_relations << '\t' << splits.num_timestamps
       << '\n';
}

}  // namespace lms
