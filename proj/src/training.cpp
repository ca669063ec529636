#include "lms/training.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace lms {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- loss

LossResult compute_loss(const Tensor& entity_probs, const Tensor& relation_probs,
                        std::span<const int> truth_entities, std::span<const int> truth_relations,
                        double beta) {
  using namespace ops;
  check_rate(beta, "beta");
  if (truth_entities.empty()) throw std::invalid_argument("compute_loss: empty batch");
  LossResult out;
  auto cross_entropy = [&](const Tensor& probs, std::span<const int> truth) {
    Tensor picked = pick(probs, truth);
    for (Eigen::Index i = 0; i < picked.rows(); ++i)
      if (!(picked.value()(i, 0) > kProbabilityFloor)) ++out.clamped;
    return scale(mean_all(log_clamped(picked, kProbabilityFloor)), -1.0);
  };
  out.entity_loss = cross_entropy(entity_probs, truth_entities);
  if (beta < 1.0) {
    out.relation_loss = cross_entropy(relation_probs, truth_relations);
    out.loss = add(scale(out.entity_loss, beta), scale(out.relation_loss, 1.0 - beta));
  } else {
    out.relation_loss = Tensor(Matrix::Zero(1, 1));
    out.loss = out.entity_loss;
  }
  return out;
}

// ---------------------------------------------------------------- metrics

double rank_of(const Vector& scores, int truth, const std::vector<int>& exclude) {
  const double target = scores[truth];
  std::vector<bool> skip(static_cast<std::size_t>(scores.size()), false);
  for (int e : exclude)
    if (e != truth) skip[static_cast<std::size_t>(e)] = true;
  double greater = 0.0;
  double ties = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (i == truth || skip[static_cast<std::size_t>(i)]) continue;
    if (scores[i] > target) {
      greater += 1.0;
    } else if (scores[i] == target) {
      ties += 1.0;
    }
  }
  return 1.0 + greater + ties / 2.0;
}

void MetricsAccumulator::Sums::add(double rank) {
  rr += 1.0 / rank;
  h1 += rank <= 1.0 ? 1.0 : 0.0;
  h3 += rank <= 3.0 ? 1.0 : 0.0;
  h10 += rank <= 10.0 ? 1.0 : 0.0;
  ++n;
}

RankMetrics MetricsAccumulator::Sums::finish() const {
  RankMetrics m;
  m.count = n;
  if (n == 0) return m;
  const double inv = 1.0 / static_cast<double>(n);
  m.mrr = rr * inv;
  m.hits1 = h1 * inv;
  m.hits3 = h3 * inv;
  m.hits10 = h10 * inv;
  return m;
}

void MetricsAccumulator::add(int time, double raw_rank, double filtered_rank) {
  raw_.add(raw_rank);
  filtered_.add(filtered_rank);
  auto& [raw, filtered] = per_time_[time];
  raw.add(raw_rank);
  filtered.add(filtered_rank);
}

MetricsReport MetricsAccumulator::report() const {
  MetricsReport r;
  r.raw = raw_.finish();
  r.filtered = filtered_.finish();
  for (const auto& [time, sums] : per_time_) {
    TimestampMetrics tm;
    tm.time = time;
    tm.count = sums.first.n;
    tm.raw_mrr = sums.first.finish().mrr;
    tm.filtered_mrr = sums.second.finish().mrr;
    r.per_timestamp.push_back(tm);
  }
  return r;
}

// ---------------------------------------------------------------- optimizer

Adam::Adam(std::vector<Tensor*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (auto* p : params_) {
    m_.push_back(Matrix::Zero(p->rows(), p->cols()));
    v_.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
}

double Adam::clip_grad_norm(double max_norm) {
  double total = 0.0;
  for (auto* p : params_)
    if (p->has_grad()) total += p->grad().squaredNorm();
  const double norm = std::sqrt(total);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / (norm + 1e-6);
    for (auto* p : params_)
      if (p->has_grad()) p->mutable_grad() *= s;
  }
  return norm;
}

void Adam::step() {
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor* p = params_[i];
    if (!p->has_grad()) continue;
    const Matrix& g = p->grad();
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    p->mutable_value().array() -=
        lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

void Adam::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

// ---------------------------------------------------------------- data

PreparedData prepare_data(const DatasetSplits& splits) {
  PreparedData data;
  data.num_base_relations = splits.num_base_relations;
  data.shape.num_entities = splits.num_entities;
  data.shape.num_relations = 2 * splits.num_base_relations;
  data.shape.num_timestamps = splits.num_timestamps;

  const int T = splits.num_timestamps;
  auto train = augment_inverse(splits.train, splits.num_base_relations);
  auto valid = augment_inverse(splits.valid, splits.num_base_relations);
  auto test = augment_inverse(splits.test, splits.num_base_relations);
  data.train = build_snapshots(train, T);
  data.valid = build_snapshots(valid, T);
  data.test = build_snapshots(test, T);
  std::vector<Quadruple> all;
  all.reserve(train.size() + valid.size() + test.size());
  all.insert(all.end(), train.begin(), train.end());
  all.insert(all.end(), valid.begin(), valid.end());
  all.insert(all.end(), test.begin(), test.end());
  data.all = build_snapshots(all, T);
  for (auto* seq : {&data.train, &data.valid, &data.test, &data.all}) {
    seq->num_entities = splits.num_entities;
    seq->num_base_relations = splits.num_base_relations;
    seq->granularity = splits.granularity;
  }
  auto times_of = [](const SnapshotSequence& seq) {
    std::vector<int> times;
    for (int t = 0; t < seq.num_timestamps(); ++t)
      if (!seq.snapshots[static_cast<std::size_t>(t)].empty()) times.push_back(t);
    return times;
  };
  data.train_times = times_of(data.train);
  data.valid_times = times_of(data.valid);
  data.test_times = times_of(data.test);
  return data;
}

std::string split_name(Split s) {
  switch (s) {
    case Split::train:
      return "train";
    case Split::valid:
      return "valid";
    case Split::test:
      return "test";
  }
  return "unknown";
}

StepQueries make_step_queries(std::span<const Quadruple> facts, int time,
                              const IndicatorStore& entity_store,
                              const IndicatorStore& relation_store, const ModelShape& shape) {
  if (entity_store.frontier() > time || relation_store.frontier() > time)
    throw OrderingError("indicator frontier is past the query time " + std::to_string(time));
  StepQueries q;
  q.time = time;
  q.facts = facts;
  const auto n = static_cast<Eigen::Index>(facts.size());
  q.entity_mask.resize(n, shape.num_entities);
  q.relation_mask.resize(n, shape.num_relations);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& f = facts[static_cast<std::size_t>(i)];
    q.entity_mask.row(i) =
        entity_store.lookup(f.subject, f.relation, shape.num_entities).transpose();
    q.relation_mask.row(i) =
        relation_store.lookup(f.subject, f.object, shape.num_relations).transpose();
  }
  return q;
}

// ---------------------------------------------------------------- evaluation

namespace {

const SnapshotSequence& split_sequence(const PreparedData& data, Split split) {
  switch (split) {
    case Split::train:
      return data.train;
    case Split::valid:
      return data.valid;
    case Split::test:
      return data.test;
  }
  return data.test;
}

const std::vector<int>& split_times(const PreparedData& data, Split split) {
  switch (split) {
    case Split::train:
      return data.train_times;
    case Split::valid:
      return data.valid_times;
    case Split::test:
      return data.test_times;
  }
  return data.test_times;
}

}  // namespace

MetricsReport evaluate(LmsModel& model, const PreparedData& data, Split split,
                       const EvaluationOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  NoGradGuard no_grad;
  const double saved_alpha = model.config().alpha;
  if (options.alpha) model.set_alpha(*options.alpha);
  const ForwardContext ctx = model.context(false, nullptr);
  const SnapshotSequence& queries = split_sequence(data, split);
  const SnapshotSequence& absorbed_source = model.config().strict_indicator ? data.train : data.all;
  const int k = model.config().history_length;

  IndicatorStore entity_store(IndicatorKey::subject_relation);
  IndicatorStore relation_store(IndicatorKey::subject_object);
  int next_absorb = 0;
  MetricsAccumulator metrics;

  for (int t : split_times(data, split)) {
    for (; next_absorb < t; ++next_absorb) {
      const auto& snapshot = absorbed_source.snapshots[static_cast<std::size_t>(next_absorb)];
      entity_store.advance(snapshot, next_absorb);
      relation_store.advance(snapshot, next_absorb);
    }
    const auto history = slice_history(data.all, t, k);
    const Snapshot& facts = queries.snapshots[static_cast<std::size_t>(t)];
    StepQueries step = make_step_queries(facts, t, entity_store, relation_store, model.shape());
    step.score_relations = false;
    const StepOutput out = model.forward(history, step, ctx);
    const Matrix& probs = out.entity.combined.value();

    // Other true objects of (s, r) at this time, from every split.
    std::map<std::pair<int, int>, std::vector<int>> truths;
    for (const auto& f : data.all.snapshots[static_cast<std::size_t>(t)])
      truths[{f.subject, f.relation}].push_back(f.object);

    for (std::size_t i = 0; i < facts.size(); ++i) {
      const auto& f = facts[i];
      const Vector scores = probs.row(static_cast<Eigen::Index>(i)).transpose();
      const double raw = rank_of(scores, f.object);
      const double filtered = rank_of(scores, f.object, truths[{f.subject, f.relation}]);
      metrics.add(t, raw, filtered);
      if (options.score_dump != nullptr) {
        std::vector<int> order(static_cast<std::size_t>(scores.size()));
        std::iota(order.begin(), order.end(), 0);
        const auto top = std::min<std::size_t>(order.size(),
                                               static_cast<std::size_t>(options.dump_top));
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top),
                          order.end(), [&](int a, int b) { return scores[a] > scores[b]; });
        nlohmann::json record{{"time", t},          {"subject", f.subject},
                              {"relation", f.relation}, {"truth", f.object},
                              {"raw_rank", raw},    {"filtered_rank", filtered}};
        nlohmann::json entries = nlohmann::json::array();
        for (std::size_t j = 0; j < top; ++j)
          entries.push_back({order[j], scores[order[j]]});
        record["top"] = entries;
        *options.score_dump << record.dump() << '\n';
      }
    }
  }
  if (options.alpha) model.set_alpha(saved_alpha);
  MetricsReport report = metrics.report();
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// ---------------------------------------------------------------- training

namespace {

std::string diagnostics(LmsModel& model, const LossResult& loss, int epoch, int t) {
  std::ostringstream out;
  out << "non-finite loss at epoch " << epoch << ", time " << t
      << ": entity_loss=" << loss.entity_loss.value()(0, 0)
      << " relation_loss=" << loss.relation_loss.value()(0, 0) << "; non-finite parameters:";
  bool any = false;
  for (auto& [name, tensor] : model.named_parameters()) {
    if (!tensor->value().allFinite()) {
      out << ' ' << name;
      any = true;
    }
  }
  if (!any) out << " none";
  return out.str();
}

}  // namespace

EpochRecord train_epoch(LmsModel& model, Adam& optimizer, const PreparedData& data, Rng& rng,
                        int epoch) {
  const ForwardContext ctx = model.context(true, &rng);
  const int k = model.config().history_length;
  IndicatorStore entity_store(IndicatorKey::subject_relation);
  IndicatorStore relation_store(IndicatorKey::subject_object);

  EpochRecord record;
  record.epoch = epoch;
  double total = 0.0;
  int steps = 0;
  const int last = data.train_times.empty() ? -1 : data.train_times.back();
  for (int t = 0; t <= last; ++t) {
    const Snapshot& facts = data.train.snapshots[static_cast<std::size_t>(t)];
    const auto history = slice_history(data.train, t, k);
    if (!facts.empty() && !history.empty()) {
      const StepQueries step =
          make_step_queries(facts, t, entity_store, relation_store, model.shape());
      const StepOutput out = model.forward(history, step, ctx);
      std::vector<int> objects;
      std::vector<int> relations;
      for (const auto& f : facts) {
        objects.push_back(f.object);
        relations.push_back(f.relation);
      }
      LossResult loss = compute_loss(out.entity.combined, out.relation.combined, objects,
                                     relations, model.config().beta);
      const double value = loss.loss.value()(0, 0);
      if (!std::isfinite(value)) throw TrainingError(diagnostics(model, loss, epoch, t));
      record.clamped += loss.clamped;
      optimizer.zero_grad();
      loss.loss.backward();
      optimizer.clip_grad_norm(model.config().grad_clip);
      optimizer.step();
      total += value;
      ++steps;
    }
    entity_store.advance(facts, t);
    relation_store.advance(facts, t);
  }
  record.loss = steps > 0 ? total / steps : 0.0;
  return record;
}

TrainResult train(LmsModel& model, const PreparedData& data, const TrainOptions& options) {
  const Config& config = model.config();
  Adam optimizer(model.parameters(), config.learning_rate);
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  TrainResult result;
  const bool validate = !options.skip_validation && !data.valid_times.empty();
  double best = -1.0;
  int bad_epochs = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochRecord record = train_epoch(model, optimizer, data, rng, epoch);
    bool stop = false;
    if (validate) {
      record.valid = evaluate(model, data, Split::valid);
      const double mrr = record.valid->filtered.mrr;
      if (mrr > best) {
        best = mrr;
        bad_epochs = 0;
        result.best_epoch = epoch;
        result.best_valid = record.valid;
        result.best_parameters = snapshot_parameters(model);
      } else if (++bad_epochs >= config.patience) {
        stop = true;
      }
    } else {
      result.best_epoch = epoch;
    }
    result.epochs.push_back(record);
    if (options.on_epoch) options.on_epoch(record);
    if (stop) break;
  }
  if (validate && !result.best_parameters.empty()) restore_parameters(model, result.best_parameters);
  if (!validate) result.best_parameters = snapshot_parameters(model);
  return result;
}

// ---------------------------------------------------------------- checkpoints

std::map<std::string, Matrix> snapshot_parameters(LmsModel& model) {
  std::map<std::string, Matrix> out;
  for (auto& [name, tensor] : model.named_parameters()) out.emplace(name, tensor->value());
  return out;
}

void restore_parameters(LmsModel& model, const std::map<std::string, Matrix>& values) {
  for (auto& [name, tensor] : model.named_parameters()) {
    auto it = values.find(name);
    if (it == values.end()) throw std::runtime_error("missing parameter " + name);
    if (it->second.rows() != tensor->rows() || it->second.cols() != tensor->cols())
      throw std::runtime_error("shape mismatch for parameter " + name);
    tensor->mutable_value() = it->second;
  }
}

void save_checkpoint(LmsModel& model, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream manifest(dir / "parameters.manifest");
  std::ofstream blob(dir / "parameters.bin", std::ios::binary);
  if (!manifest || !blob) throw std::runtime_error("cannot write checkpoint in " + dir.string());
  const auto& shape = model.shape();
  manifest << "shape " << shape.num_entities << ' ' << shape.num_relations << ' '
           << shape.num_timestamps << '\n';
  std::size_t offset = 0;
  for (auto& [name, tensor] : model.named_parameters()) {
    const Matrix& m = tensor->value();
    manifest << name << ' ' << m.rows() << ' ' << m.cols() << ' ' << offset << '\n';
    blob.write(reinterpret_cast<const char*>(m.data()),
               static_cast<std::streamsize>(m.size() * sizeof(double)));
    offset += static_cast<std::size_t>(m.size());
  }
  std::ofstream config(dir / "config.txt");
  config << model.config().to_text();
}

std::unique_ptr<LmsModel> load_checkpoint(const fs::path& dir) {
  std::ifstream manifest(dir / "parameters.manifest");
  std::ifstream blob(dir / "parameters.bin", std::ios::binary);
  if (!manifest || !blob) throw std::runtime_error("no checkpoint in " + dir.string());
  const Config config = Config::load((dir / "config.txt").string());

  std::string tag;
  ModelShape shape;
  manifest >> tag >> shape.num_entities >> shape.num_relations >> shape.num_timestamps;
  if (tag != "shape") throw std::runtime_error("malformed checkpoint manifest");

  std::map<std::string, Matrix> values;
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t offset = 0;
  while (manifest >> name >> rows >> cols >> offset) {
    Matrix m(rows, cols);
    blob.seekg(static_cast<std::streamoff>(offset * sizeof(double)));
    blob.read(reinterpret_cast<char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!blob) throw std::runtime_error("truncated checkpoint blob for " + name);
    values.emplace(name, std::move(m));
  }
  Rng rng(config.seed);
  auto model = std::make_unique<LmsModel>(config, shape, rng);
  restore_parameters(*model, values);
  return model;
}

}  // namespace lms
