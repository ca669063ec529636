#pragma once

#include "lms/config.hpp"
#include "lms/dataset.hpp"
#include "lms/history.hpp"
#include "lms/model.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lms {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- loss

struct LossResult {
  Tensor loss;
  Tensor entity_loss;
  Tensor relation_loss;
  /// Truth probabilities that had to be clamped to epsilon before the log.
  int clamped = 0;
};

inline constexpr double kProbabilityFloor = 1e-12;

/// beta * CE(entity) + (1 - beta) * CE(relation), each the mean negative log
/// probability of the truth label.
LossResult compute_loss(const Tensor& entity_probs, const Tensor& relation_probs,
                        std::span<const int> truth_entities, std::span<const int> truth_relations,
                        double beta);

// ---------------------------------------------------------------- metrics

/// 1-based rank of `truth` with ties resolved to the mean rank of the tie
/// group. Candidates flagged in `exclude` (never the truth) are dropped.
double rank_of(const Vector& scores, int truth, const std::vector<int>& exclude = {});

struct RankMetrics {
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  std::size_t count = 0;
};

struct TimestampMetrics {
  int time = 0;
  std::size_t count = 0;
  double raw_mrr = 0.0;
  double filtered_mrr = 0.0;
};

struct MetricsReport {
  RankMetrics raw;
  RankMetrics filtered;
  std::vector<TimestampMetrics> per_timestamp;
  double runtime_seconds = 0.0;
};

class MetricsAccumulator {
 public:
  void add(int time, double raw_rank, double filtered_rank);
  MetricsReport report() const;

 private:
  struct Sums {
    double rr = 0.0;
    double h1 = 0.0;
    double h3 = 0.0;
    double h10 = 0.0;
    std::size_t n = 0;
    void add(double rank);
    RankMetrics finish() const;
  };
  Sums raw_;
  Sums filtered_;
  std::map<int, std::pair<Sums, Sums>> per_time_;
};

// ---------------------------------------------------------------- optimizer

class Adam {
 public:
  Adam(std::vector<Tensor*> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  /// Scales gradients so their global L2 norm is at most max_norm; returns the norm.
  double clip_grad_norm(double max_norm);
  void step();
  void zero_grad();

 private:
  std::vector<Tensor*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  long steps_ = 0;
};

// ---------------------------------------------------------------- data

/// Splits turned into augmented snapshot sequences.
struct PreparedData {
  ModelShape shape;
  int num_base_relations = 0;
  /// All splits, augmented: ground-truth history and filter sets.
  SnapshotSequence all;
  SnapshotSequence train;
  SnapshotSequence valid;
  SnapshotSequence test;
  std::vector<int> train_times;
  std::vector<int> valid_times;
  std::vector<int> test_times;
};

PreparedData prepare_data(const DatasetSplits& splits);

enum class Split { train, valid, test };
std::string split_name(Split s);

/// Masks for the facts of one time from the current indicator stores.
StepQueries make_step_queries(std::span<const Quadruple> facts, int time,
                              const IndicatorStore& entity_store,
                              const IndicatorStore& relation_store, const ModelShape& shape);

// ---------------------------------------------------------------- evaluation

struct EvaluationOptions {
  /// Override of the model's historical rate.
  std::optional<double> alpha;
  /// When set, every query's top entries are appended here as JSON lines.
  std::ostream* score_dump = nullptr;
  int dump_top = 10;
};

/// Ranks the truth object of every (augmented) query of the split, in
/// chronological order, using ground-truth history before each time.
MetricsReport evaluate(LmsModel& model, const PreparedData& data, Split split,
                       const EvaluationOptions& options = {});

// ---------------------------------------------------------------- training

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  int clamped = 0;
  std::optional<MetricsReport> valid;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  std::optional<MetricsReport> best_valid;
  /// Parameter values at the best epoch, by name.
  std::map<std::string, Matrix> best_parameters;
};

struct TrainOptions {
  /// Called after every epoch (for metric records and progress output).
  std::function<void(const EpochRecord&)> on_epoch;
  /// Skip validation; keep the parameters of the last epoch.
  bool skip_validation = false;
};

/// Runs one epoch over the training timestamps. Returns the mean loss.
EpochRecord train_epoch(LmsModel& model, Adam& optimizer, const PreparedData& data, Rng& rng,
                        int epoch);

/// Epoch loop with validation-based early stopping on filtered MRR. The
/// model ends holding the best parameters.
TrainResult train(LmsModel& model, const PreparedData& data, const TrainOptions& options = {});

// ---------------------------------------------------------------- checkpoints

/// Writes `parameters.bin` (little-endian float64, concatenated),
/// `parameters.manifest` ("name rows cols offset" per line) and `config.txt`.
void save_checkpoint(LmsModel& model, const std::filesystem::path& dir);
/// Loads a model saved by save_checkpoint.
std::unique_ptr<LmsModel> load_checkpoint(const std::filesystem::path& dir);

std::map<std::string, Matrix> snapshot_parameters(LmsModel& model);
void restore_parameters(LmsModel& model, const std::map<std::string, Matrix>& values);

}  // namespace lms
