#include "lms/cli.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace lms {

namespace fs = std::filesystem;
using nlohmann::json;

void write_manifest(const RunManifest& m, const fs::path& dir) {
  fs::create_directories(dir);
  json j{{"run_id", m.run_id},     {"command", m.command},
         {"config", m.config},     {"dataset", m.dataset},
         {"git_revision", m.git_revision}, {"seed", m.seed},
         {"started_at", m.started_at},     {"finished_at", m.finished_at}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  out << j.dump(2) << '\n';
}

RunManifest read_manifest(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  const json j = json::parse(in);
  RunManifest m;
  m.run_id = j.value("run_id", "");
  m.command = j.value("command", "");
  m.config = j.value("config", std::map<std::string, std::string>{});
  m.dataset = j.value("dataset", "");
  m.git_revision = j.value("git_revision", "");
  m.seed = j.value("seed", std::uint64_t{0});
  m.started_at = j.value("started_at", "");
  m.finished_at = j.value("finished_at", "");
  return m;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms
      << 'Z';
  return out.str();
}

std::vector<double> parse_sweep_values(const std::string& text) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || s.find_first_not_of(" \t", used) != std::string::npos)
      throw std::invalid_argument("sweep values: cannot parse '" + s + "' in '" + text + "'");
    return v;
  };
  std::vector<double> out;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const auto step_at = text.find("step");
    if (step_at == std::string::npos || step_at < dots)
      throw std::invalid_argument("sweep values: expected 'a..b step s', got '" + text + "'");
    const double lo = number(text.substr(0, dots));
    const double hi = number(text.substr(dots + 2, step_at - dots - 2));
    const double step = number(text.substr(step_at + 4));
    if (!(step > 0.0) || hi < lo) throw std::invalid_argument("sweep values: empty range");
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) {
      // Round to the step's precision so 0.1 * 3 prints as 0.3.
      out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e9) / 1e9);
    }
    return out;
  }
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(number(item));
  if (out.empty()) throw std::invalid_argument("sweep values: none given");
  return out;
}

std::string metrics_record(const std::string& run_id, int epoch, const std::string& split,
                           const std::string& mode, const RankMetrics& m,
                           const std::map<std::string, std::string>& extra) {
  json j{{"run_id", run_id}, {"epoch", epoch},   {"split", split},   {"mode", mode},
         {"mrr", m.mrr},     {"hits1", m.hits1}, {"hits3", m.hits3}, {"hits10", m.hits10},
         {"count", m.count}};
  for (const auto& [k, v] : extra) j[k] = v;
  return j.dump();
}

namespace {

RankMetrics metrics_from(const json& j) {
  RankMetrics m;
  m.mrr = j.value("mrr", 0.0);
  m.hits1 = j.value("hits1", 0.0);
  m.hits3 = j.value("hits3", 0.0);
  m.hits10 = j.value("hits10", 0.0);
  m.count = j.value("count", std::size_t{0});
  return m;
}

}  // namespace

std::vector<ReportRow> collect_runs(const fs::path& root, std::vector<std::string>* warnings) {
  auto warn = [&](const std::string& w) {
    if (warnings) warnings->push_back(w);
  };
  std::map<std::string, ReportRow> latest;
  if (!fs::exists(root)) {
    warn("no such directory: " + root.string());
    return {};
  }
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file() || entry.path().filename() != "manifest.json") continue;
    const RunManifest m = read_manifest(entry.path());
    const fs::path metrics_file = entry.path().parent_path() / "metrics.jsonl";
    std::ifstream in(metrics_file);
    if (!in) {
      warn("run without metrics: " + entry.path().parent_path().string());
      continue;
    }
    ReportRow row;
    row.run_id = m.run_id;
    row.command = m.command;
    row.dataset = m.dataset;
    row.finished_at = m.finished_at;
    if (auto it = m.config.find("variant"); it != m.config.end()) row.variant = it->second;
    bool found = false;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (j.value("split", "") != "test") continue;
      if (j.value("mode", "") == "filtered") {
        row.filtered = metrics_from(j);
        found = true;
      } else if (j.value("mode", "") == "raw") {
        row.raw = metrics_from(j);
      }
      for (const auto& key : {"param", "value"})
        if (j.contains(key)) row.extra[key] = j[key].get<std::string>();
    }
    if (!found) {
      warn("run without test metrics: " + entry.path().parent_path().string());
      continue;
    }
    auto [it, inserted] = latest.emplace(row.run_id, row);
    if (!inserted && it->second.finished_at < row.finished_at) it->second = row;
  }
  std::vector<ReportRow> rows;
  for (auto& [id, row] : latest) rows.push_back(std::move(row));
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return a.filtered.mrr > b.filtered.mrr;
  });
  if (rows.empty()) warn("no completed runs found under " + root.string());
  return rows;
}

std::string format_table(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(28) << "run" << std::setw(16) << "variant" << std::right
      << std::setw(9) << "MRR" << std::setw(9) << "H@1" << std::setw(9) << "H@3" << std::setw(9)
      << "H@10" << std::setw(9) << "rawMRR" << '\n';
  out << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    out << std::left << std::setw(28) << r.run_id << std::setw(16) << r.variant << std::right
        << std::setw(9) << 100.0 * r.filtered.mrr << std::setw(9) << 100.0 * r.filtered.hits1
        << std::setw(9) << 100.0 * r.filtered.hits3 << std::setw(9) << 100.0 * r.filtered.hits10
        << std::setw(9) << 100.0 * r.raw.mrr << '\n';
  }
  return out.str();
}

std::string report_json(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  for (const auto& r : rows) {
    json j{{"run_id", r.run_id},     {"command", r.command},   {"variant", r.variant},
           {"dataset", r.dataset},   {"finished_at", r.finished_at},
           {"mrr", r.filtered.mrr},  {"hits1", r.filtered.hits1},
           {"hits3", r.filtered.hits3}, {"hits10", r.filtered.hits10},
           {"raw_mrr", r.raw.mrr}};
    for (const auto& [k, v] : r.extra) j[k] = v;
    out << j.dump() << '\n';
  }
  return out.str();
}

fs::path resolve_dataset(const std::string& name_or_path) {
  const fs::path direct(name_or_path);
  if (fs::is_directory(direct)) return direct;
  std::string tried = direct.string();
  if (const char* root = std::getenv("LMS_DATA_ROOT")) {
    const fs::path under = fs::path(root) / name_or_path;
    if (fs::is_directory(under)) return under;
    tried += ", " + under.string();
  }
  throw std::runtime_error("dataset directory not found (tried " + tried + ")");
}

long apply_preset(Config& config, const std::string& dataset) {
  const auto preset = find_preset(fs::path(dataset).filename().string());
  if (!preset) return 1;
  config.history_length = preset->history_length;
  std::string periods;
  for (int p : preset->periods) periods += (periods.empty() ? "" : ",") + std::to_string(p);
  config.periods = periods;
  return preset->granularity;
}

}  // namespace lms
