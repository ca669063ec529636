// Command-line driver: preprocess, train, eval, ablate, sweep, report.

#include "CLI11.hpp"

#include "lms/cli.hpp"
#include "lms/synthetic.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#ifndef LMS_GIT_REVISION
#define LMS_GIT_REVISION "unknown"
#endif

namespace fs = std::filesystem;
using namespace lms;

namespace {

constexpr const char* kSynthetic = "synthetic";

struct CommonFlags {
  std::string dataset;
  std::string config_file;
  std::string out = "runs";
  std::string run_id;
  std::vector<std::string> settings;
  std::optional<int> k;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<int> dim;
  std::optional<std::string> periods;
  std::optional<std::string> variant;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<long> granularity;
};

void add_common(CLI::App* app, CommonFlags& f, bool with_variant = true,
                bool dataset_required = true) {
  auto* dataset = app->add_option("--dataset", f.dataset,
                                  "dataset directory, name under $LMS_DATA_ROOT, or 'synthetic'");
  if (dataset_required) dataset->required();
  app->add_option("--config", f.config_file, "flat key = value config file");
  app->add_option("--out", f.out, "artifact directory");
  app->add_option("--run-id", f.run_id, "run identifier (default: output directory name)");
  app->add_option("--set", f.settings, "extra config override key=value (repeatable)");
  app->add_option("--k", f.k, "history length");
  app->add_option("--alpha", f.alpha, "historical rate");
  app->add_option("--beta", f.beta, "entity loss weight");
  app->add_option("--dim", f.dim, "embedding dimension");
  app->add_option("--periods", f.periods, "temporal graph offsets, e.g. 3,7,14,30");
  if (with_variant) {
    app->add_option("--variant", f.variant, "model variant")
        ->check(CLI::Validator(
            [](std::string& v) -> std::string {
              if (parse_variant(v)) return {};
              std::string names;
              for (const auto& n : variant_names()) names += " " + n;
              return "unknown variant '" + v + "'; valid names:" + names;
            },
            "VARIANT"));
  }
  app->add_option("--seed", f.seed, "random seed");
  app->add_option("--epochs", f.epochs, "maximum epochs");
  app->add_option("--granularity", f.granularity, "raw time units per timestamp");
}

struct LoadedDataset {
  DatasetSplits splits;
  std::string id;
};

LoadedDataset load_dataset(const CommonFlags& f, long preset_granularity) {
  if (f.dataset == kSynthetic) return {generate_periodic(), kSynthetic};
  const fs::path dir = resolve_dataset(f.dataset);
  // Paths are recorded absolutely so eval can find the data from a manifest.
  const std::string id = fs::exists(f.dataset) ? fs::absolute(dir).lexically_normal().string()
                                               : f.dataset;
  return {parse_dataset(dir, f.granularity.value_or(preset_granularity)), id};
}

/// defaults < dataset preset < config file < --set < dedicated flags.
Config build_config(const CommonFlags& f, long& granularity) {
  Config c;
  granularity = apply_preset(c, f.dataset);
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    if (!in) throw std::runtime_error("cannot open config " + f.config_file);
    std::stringstream text;
    text << in.rdbuf();
    c.merge_text(text.str());
  }
  for (const auto& s : f.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    c.set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (f.k) c.history_length = *f.k;
  if (f.alpha) c.alpha = *f.alpha;
  if (f.beta) c.beta = *f.beta;
  if (f.dim) c.dim = *f.dim;
  if (f.periods) c.periods = *f.periods;
  if (f.variant) c.variant = *parse_variant(*f.variant);
  if (f.seed) c.seed = *f.seed;
  if (f.epochs) c.epochs = *f.epochs;
  c.validate();
  return c;
}

void print_metrics(std::ostream& out, const std::string& label, Variant variant,
                   const MetricsReport& r) {
  ReportRow row;
  row.run_id = label;
  row.variant = variant_name(variant);
  row.filtered = r.filtered;
  row.raw = r.raw;
  out << format_table({row});
}

/// Trains one model into `dir` and writes its manifest, metrics and checkpoint.
MetricsReport run_training(const std::string& command, const Config& config,
                           const LoadedDataset& data, const fs::path& dir, std::string run_id,
                           const std::map<std::string, std::string>& extra = {}) {
  if (run_id.empty()) run_id = dir.filename().string();
  fs::create_directories(dir);
  RunManifest manifest{run_id,        command, config.to_map(), data.id, LMS_GIT_REVISION,
                       config.seed, utc_timestamp(), ""};
  const PreparedData prepared = prepare_data(data.splits);
  Rng rng(config.seed);
  LmsModel model(config, prepared.shape, rng);

  std::ofstream metrics(dir / "metrics.jsonl");
  TrainOptions options;
  options.on_epoch = [&](const EpochRecord& e) {
    std::cerr << "epoch " << e.epoch << " loss " << e.loss;
    if (e.valid) {
      std::cerr << " valid MRR " << e.valid->filtered.mrr;
      metrics << metrics_record(run_id, e.epoch, "valid", "filtered", e.valid->filtered, extra)
              << '\n';
      metrics << metrics_record(run_id, e.epoch, "valid", "raw", e.valid->raw, extra) << '\n';
    }
    if (e.clamped > 0) std::cerr << " (clamped " << e.clamped << " probabilities)";
    std::cerr << '\n';
  };
  const TrainResult result = train(model, prepared, options);
  save_checkpoint(model, dir / "checkpoint");

  const MetricsReport test = evaluate(model, prepared, Split::test);
  metrics << metrics_record(run_id, result.best_epoch, "test", "filtered", test.filtered, extra)
          << '\n';
  metrics << metrics_record(run_id, result.best_epoch, "test", "raw", test.raw, extra) << '\n';
  print_metrics(std::cout, run_id, config.variant, test);

  manifest.finished_at = utc_timestamp();
  write_manifest(manifest, dir);
  return test;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal knowledge graph extrapolation with evolutional, union and temporal graphs"};
  app.require_subcommand(1);

  // preprocess
  std::string pre_in;
  std::string pre_out;
  long pre_granularity = 0;
  auto* preprocess = app.add_subcommand("preprocess", "normalise a raw dataset directory");
  preprocess->add_option("--dataset", pre_in, "raw dataset directory or name")->required();
  preprocess->add_option("--out", pre_out, "output directory")->required();
  preprocess->add_option("--granularity", pre_granularity, "raw time units per timestamp");

  // synth
  std::string synth_out;
  PeriodicOptions synth_options;
  auto* synth = app.add_subcommand("synth", "write the synthetic weekly-periodic dataset");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_options.seed, "generator seed");
  synth->add_option("--noise", synth_options.noise_per_snapshot, "noise facts per snapshot");

  // train / ablate
  CommonFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "train a model and evaluate it on test");
  add_common(train_cmd, train_flags);

  CommonFlags ablate_flags;
  auto* ablate = app.add_subcommand("ablate", "train an ablation variant ('all' runs every one)");
  add_common(ablate, ablate_flags, false);
  std::string ablate_variant;
  ablate->add_option("--variant", ablate_variant, "variant name or 'all'")
      ->required()
      ->check(CLI::Validator(
          [](std::string& v) -> std::string {
            if (v == "all" || parse_variant(v)) return {};
            std::string names;
            for (const auto& n : variant_names()) names += " " + n;
            return "unknown variant '" + v + "'; valid names:" + names + " all";
          },
          "VARIANT"));

  // sweep
  CommonFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "retrain over a grid of k or alpha");
  add_common(sweep, sweep_flags);
  std::string sweep_param;
  std::string sweep_values;
  sweep->add_option("--param", sweep_param, "k or alpha")
      ->required()
      ->check(CLI::IsMember({"k", "alpha"}));
  sweep->add_option("--values", sweep_values, "'a..b step s' or comma list")->required();

  // eval
  CommonFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "evaluate a saved checkpoint");
  add_common(eval, eval_flags, false, false);
  std::string eval_checkpoint;
  std::string eval_mode = "both";
  std::string eval_split = "test";
  std::string eval_dump;
  eval->add_option("--checkpoint", eval_checkpoint, "run or checkpoint directory")->required();
  eval->add_option("--mode", eval_mode, "raw, filtered or both")
      ->check(CLI::IsMember({"raw", "filtered", "both"}));
  eval->add_option("--split", eval_split, "valid or test")->check(CLI::IsMember({"valid", "test"}));
  eval->add_option("--dump-scores", eval_dump, "write per-query top scores as JSON lines");

  // report
  std::string report_dir = "runs";
  bool report_as_json = false;
  auto* report = app.add_subcommand("report", "merge completed runs into one table");
  report->add_option("dir", report_dir, "artifact root");
  report->add_flag("--json", report_as_json, "machine-readable output");

  // dump
  std::string dump_dataset;
  std::string dump_what = "union";
  int dump_time = 0;
  int dump_k = 3;
  std::vector<int> dump_subjects;
  auto* dump = app.add_subcommand("dump", "print a union graph or indicator state");
  dump->add_option("--dataset", dump_dataset, "dataset directory, name or 'synthetic'")->required();
  dump->add_option("--what", dump_what, "union or indicator")
      ->check(CLI::IsMember({"union", "indicator"}));
  dump->add_option("--time", dump_time, "prediction time")->required();
  dump->add_option("--k", dump_k, "history length");
  dump->add_option("--subjects", dump_subjects, "query subjects")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (preprocess->parsed()) {
      Config unused;
      const long g = pre_granularity > 0 ? pre_granularity : apply_preset(unused, pre_in);
      const DatasetSplits splits = parse_dataset(resolve_dataset(pre_in), g);
      write_dataset(splits, pre_out);
      std::cout << summarize(splits);
    } else if (synth->parsed()) {
      const DatasetSplits splits = generate_periodic(synth_options);
      write_dataset(splits, synth_out);
      std::cout << summarize(splits);
    } else if (train_cmd->parsed()) {
      long g = 1;
      const Config config = build_config(train_flags, g);
      const LoadedDataset data = load_dataset(train_flags, g);
      run_training("train", config, data, train_flags.out, train_flags.run_id);
    } else if (ablate->parsed()) {
      long g = 1;
      std::vector<std::string> variants;
      if (ablate_variant == "all") {
        variants = variant_names();
      } else {
        variants.push_back(ablate_variant);
      }
      const Config base = build_config(ablate_flags, g);
      const LoadedDataset data = load_dataset(ablate_flags, g);
      for (const auto& v : variants) {
        Config config = base;
        config.variant = *parse_variant(v);
        const fs::path dir = variants.size() == 1 ? fs::path(ablate_flags.out)
                                                  : fs::path(ablate_flags.out) / v;
        const std::string id =
            ablate_flags.run_id.empty() ? dir.filename().string() : ablate_flags.run_id + ":" + v;
        run_training("ablate", config, data, dir, id, {{"variant", variant_name(config.variant)}});
      }
      std::vector<std::string> warnings;
      if (variants.size() > 1) std::cout << format_table(collect_runs(ablate_flags.out, &warnings));
    } else if (sweep->parsed()) {
      long g = 1;
      const Config base = build_config(sweep_flags, g);
      const LoadedDataset data = load_dataset(sweep_flags, g);
      std::vector<ReportRow> rows;
      for (double value : parse_sweep_values(sweep_values)) {
        Config config = base;
        std::ostringstream text;
        text << value;
        config.set(sweep_param, text.str());
        config.validate();
        const fs::path dir = fs::path(sweep_flags.out) / (sweep_param + "=" + text.str());
        const std::string id = (sweep_flags.run_id.empty() ? "sweep" : sweep_flags.run_id) + ":" +
                               sweep_param + "=" + text.str();
        const MetricsReport r = run_training("sweep", config, data, dir, id,
                                             {{"param", sweep_param}, {"value", text.str()}});
        ReportRow row;
        row.run_id = id;
        row.variant = variant_name(config.variant);
        row.filtered = r.filtered;
        row.raw = r.raw;
        rows.push_back(row);
      }
      std::cout << format_table(rows);
    } else if (eval->parsed()) {
      fs::path ckpt = eval_checkpoint;
      const fs::path run_dir = fs::exists(ckpt / "checkpoint") ? ckpt : ckpt.parent_path();
      if (fs::exists(ckpt / "checkpoint")) ckpt /= "checkpoint";
      auto model = load_checkpoint(ckpt);
      std::string trained_id = run_dir.filename().string();
      if (fs::exists(run_dir / "manifest.json")) {
        const RunManifest trained = read_manifest(run_dir / "manifest.json");
        trained_id = trained.run_id;
        if (eval_flags.dataset.empty()) eval_flags.dataset = trained.dataset;
      }
      if (eval_flags.dataset.empty())
        throw std::runtime_error("--dataset is required: no manifest next to the checkpoint");
      if (eval_flags.out == "runs") eval_flags.out = (run_dir / ("eval_" + eval_split)).string();
      if (eval_flags.run_id.empty()) eval_flags.run_id = trained_id + ".eval_" + eval_split;
      Config ignored;
      const long g = apply_preset(ignored, eval_flags.dataset);
      const LoadedDataset data = load_dataset(eval_flags, g);
      const PreparedData prepared = prepare_data(data.splits);
      if (prepared.shape.num_entities != model->shape().num_entities ||
          prepared.shape.num_relations != model->shape().num_relations ||
          prepared.shape.num_timestamps != model->shape().num_timestamps)
        throw std::runtime_error("checkpoint shape does not match dataset " + data.id);

      const std::string run_id =
          eval_flags.run_id.empty() ? fs::path(eval_flags.out).filename().string() : eval_flags.run_id;
      RunManifest manifest{run_id,      "eval",         model->config().to_map(), data.id,
                           LMS_GIT_REVISION, model->config().seed, utc_timestamp(), ""};
      EvaluationOptions options;
      options.alpha = eval_flags.alpha;
      std::ofstream dump_stream;
      if (!eval_dump.empty()) {
        dump_stream.open(eval_dump);
        if (!dump_stream) throw std::runtime_error("cannot write " + eval_dump);
        options.score_dump = &dump_stream;
      }
      const Split split = eval_split == "valid" ? Split::valid : Split::test;
      const MetricsReport r = evaluate(*model, prepared, split, options);
      fs::create_directories(eval_flags.out);
      std::ofstream metrics(fs::path(eval_flags.out) / "metrics.jsonl");
      ReportRow row;
      row.run_id = run_id;
      row.variant = variant_name(model->config().variant);
      if (eval_mode != "raw") {
        metrics << metrics_record(run_id, 0, eval_split, "filtered", r.filtered) << '\n';
        row.filtered = r.filtered;
      }
      if (eval_mode != "filtered") {
        metrics << metrics_record(run_id, 0, eval_split, "raw", r.raw) << '\n';
        row.raw = r.raw;
      }
      std::cout << format_table({row});
      manifest.finished_at = utc_timestamp();
      write_manifest(manifest, eval_flags.out);
    } else if (report->parsed()) {
      std::vector<std::string> warnings;
      const auto rows = collect_runs(report_dir, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
      std::cout << (report_as_json ? report_json(rows) : format_table(rows));
    } else if (dump->parsed()) {
      CommonFlags f;
      f.dataset = dump_dataset;
      Config ignored;
      const LoadedDataset data = load_dataset(f, apply_preset(ignored, dump_dataset));
      const PreparedData prepared = prepare_data(data.splits);
      if (dump_time < 0 || dump_time >= prepared.shape.num_timestamps)
        throw RangeError("--time outside [0, " + std::to_string(prepared.shape.num_timestamps) + ")");
      if (dump_what == "union") {
        std::cout << dump_union_graph(
            build_union_graph(slice_history(prepared.all, dump_time, dump_k), dump_subjects));
      } else {
        IndicatorStore store(IndicatorKey::subject_relation);
        for (int t = 0; t < dump_time; ++t)
          store.advance(prepared.all.snapshots[static_cast<std::size_t>(t)], t);
        std::cout << store.dump();
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
