#pragma once

// Run bookkeeping shared by the command-line tool: manifests, metric
// records, sweep grids and the consolidated report.

#include "lms/config.hpp"
#include "lms/dataset.hpp"
#include "lms/training.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace lms {

/// One per artifact directory, written as manifest.json.
struct RunManifest {
  std::string run_id;
  std::string command;
  std::map<std::string, std::string> config;
  std::string dataset;
  std::string git_revision;
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& dir);
RunManifest read_manifest(const std::filesystem::path& file);

/// UTC time as ISO-8601 with milliseconds; sorts lexicographically.
std::string utc_timestamp();

/// "0.0..1.0 step 0.1" (inclusive range) or "1,2,3".
std::vector<double> parse_sweep_values(const std::string& text);

/// One JSON line for a (epoch, split, mode) metric record.
std::string metrics_record(const std::string& run_id, int epoch, const std::string& split,
                           const std::string& mode, const RankMetrics& metrics,
                           const std::map<std::string, std::string>& extra = {});

struct ReportRow {
  std::string run_id;
  std::string command;
  std::string variant;
  std::string dataset;
  std::string finished_at;
  std::map<std::string, std::string> extra;
  RankMetrics filtered;
  RankMetrics raw;
};

/// Finds every manifest.json below `root`, pairs it with the last test
/// records of the sibling metrics.jsonl, keeps the latest run per run id and
/// sorts by filtered MRR, best first.
std::vector<ReportRow> collect_runs(const std::filesystem::path& root,
                                    std::vector<std::string>* warnings = nullptr);

std::string format_table(const std::vector<ReportRow>& rows);
std::string report_json(const std::vector<ReportRow>& rows);

/// A path as given, else $LMS_DATA_ROOT/<name>. Throws with the tried paths.
std::filesystem::path resolve_dataset(const std::string& name_or_path);

/// Granularity and history length / periods for a known dataset name.
/// Returns the granularity (1 for unknown names).
long apply_preset(Config& config, const std::string& dataset);

}  // namespace lms
