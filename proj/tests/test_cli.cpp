#include <gtest/gtest.h>

#include "lms/cli.hpp"

#include <cstdlib>
#include <fstream>

using namespace lms;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("lms_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_run(const fs::path& dir, const std::string& id, const std::string& finished, double mrr) {
  fs::create_directories(dir);
  RunManifest m;
  m.run_id = id;
  m.command = "train";
  m.config = {{"variant", "full"}};
  m.dataset = "synthetic";
  m.finished_at = finished;
  write_manifest(m, dir);
  RankMetrics r;
  r.mrr = mrr;
  r.count = 4;
  std::ofstream(dir / "metrics.jsonl") << metrics_record(id, 1, "valid", "filtered", r) << '\n'
                                       << metrics_record(id, 0, "test", "filtered", r) << '\n'
                                       << metrics_record(id, 0, "test", "raw", r) << '\n';
}

}  // namespace

TEST(Sweep, InclusiveRange) {
  auto v = parse_sweep_values("0.0..1.0 step 0.1");
  ASSERT_EQ(v.size(), 11u);
  EXPECT_DOUBLE_EQ(v.front(), 0.0);
  EXPECT_DOUBLE_EQ(v[3], 0.3);
  EXPECT_DOUBLE_EQ(v.back(), 1.0);
  EXPECT_EQ(parse_sweep_values("1,2,5"), (std::vector<double>{1, 2, 5}));
  EXPECT_EQ(parse_sweep_values("3..9 step 3"), (std::vector<double>{3, 6, 9}));
  EXPECT_THROW(parse_sweep_values("1..2 step 0"), std::invalid_argument);
  EXPECT_THROW(parse_sweep_values("a,b"), std::invalid_argument);
}

TEST(Manifest, RoundTrip) {
  const fs::path dir = fresh_dir("manifest");
  RunManifest m;
  m.run_id = "r1";
  m.command = "ablate";
  m.config = {{"alpha", "0.3"}, {"variant", "-TGL"}};
  m.dataset = "ICEWS14s";
  m.git_revision = "abc123";
  m.seed = 42;
  m.started_at = utc_timestamp();
  m.finished_at = utc_timestamp();
  write_manifest(m, dir);
  RunManifest back = read_manifest(dir / "manifest.json");
  EXPECT_EQ(back.run_id, "r1");
  EXPECT_EQ(back.config, m.config);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.finished_at, m.finished_at);
  EXPECT_EQ(m.started_at.back(), 'Z');
  fs::remove_all(dir);
}

TEST(Report, SortsAndDedupes) {
  const fs::path root = fresh_dir("report");
  write_run(root / "a", "alpha", "2026-01-01T00:00:00.000Z", 0.4);
  write_run(root / "b", "beta", "2026-01-01T00:00:00.000Z", 0.6);
  write_run(root / "c", "alpha", "2026-02-01T00:00:00.000Z", 0.7);
  std::vector<std::string> warnings;
  auto rows = collect_runs(root, &warnings);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].run_id, "alpha");
  EXPECT_DOUBLE_EQ(rows[0].filtered.mrr, 0.7);
  EXPECT_EQ(rows[1].run_id, "beta");
  EXPECT_TRUE(warnings.empty());
  const std::string table = format_table(rows);
  EXPECT_NE(table.find("70.00"), std::string::npos);
  EXPECT_NE(report_json(rows).find("\"run_id\""), std::string::npos);
  fs::remove_all(root);
}

TEST(Report, EmptyDirectoryWarns) {
  const fs::path root = fresh_dir("empty");
  std::vector<std::string> warnings;
  EXPECT_TRUE(collect_runs(root, &warnings).empty());
  EXPECT_EQ(warnings.size(), 1u);
  warnings.clear();
  collect_runs(root / "missing", &warnings);
  EXPECT_EQ(warnings.size(), 1u);
  fs::remove_all(root);
}

TEST(Dataset, ResolveReportsTriedPaths) {
  ::setenv("LMS_DATA_ROOT", "/nonexistent/root", 1);
  try {
    resolve_dataset("ICEWS14s");
    FAIL() << "expected an error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/root/ICEWS14s"), std::string::npos);
  }
  const fs::path dir = fresh_dir("data");
  EXPECT_EQ(resolve_dataset(dir.string()), dir);
  ::setenv("LMS_DATA_ROOT", dir.parent_path().c_str(), 1);
  EXPECT_EQ(resolve_dataset(dir.filename().string()), dir);
  fs::remove_all(dir);
}

TEST(Preset, AppliesHistoryAndPeriods) {
  Config c;
  EXPECT_EQ(apply_preset(c, "GDELT"), 15);
  EXPECT_EQ(c.periods, "4,48,96,672");
  Config d;
  EXPECT_EQ(apply_preset(d, "ICEWS14s"), 24);
  EXPECT_EQ(d.history_length, 25);
  Config e;
  EXPECT_EQ(apply_preset(e, "synthetic"), 1);
}
