#include <gtest/gtest.h>

#include "lms/synthetic.hpp"
#include "lms/training.hpp"
#include "oracles.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace lms;
namespace fs = std::filesystem;

namespace {

DatasetSplits tiny_splits() {
  PeriodicOptions o;
  o.num_entities = 10;
  o.num_relations = 3;
  o.num_timestamps = 28;
  o.train_end = 20;
  o.valid_end = 24;
  o.pairs_per_entity = 1;
  return generate_periodic(o);
}

Config tiny_config() {
  Config c;
  c.dim = 8;
  c.time_dim = 4;
  c.conv_channels = 2;
  c.history_length = 3;
  c.learning_rate = 0.01;
  c.epochs = 3;
  c.patience = 2;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(Loss, UniformDistributionGivesLogM) {
  Tensor p(Matrix::Constant(4, 10, 0.1));
  Tensor q(Matrix::Constant(4, 6, 1.0 / 6));
  const int te[] = {0, 3, 5, 9};
  const int tr[] = {1, 1, 2, 5};
  auto res = compute_loss(p, q, te, tr, 1.0);
  EXPECT_NEAR(res.loss.value()(0, 0), std::log(10.0), 1e-12);
  EXPECT_EQ(res.clamped, 0);
}

TEST(Loss, MatchesLoopAtBeta) {
  Rng rng(1);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  Matrix pe(3, 5);
  Matrix pr(3, 4);
  for (Eigen::Index i = 0; i < pe.size(); ++i) pe.data()[i] = u(rng);
  for (Eigen::Index i = 0; i < pr.size(); ++i) pr.data()[i] = u(rng);
  const int te[] = {4, 0, 2};
  const int tr[] = {3, 1, 1};
  double ce_e = 0.0;
  double ce_r = 0.0;
  for (int i = 0; i < 3; ++i) {
    ce_e -= std::log(pe(i, te[i])) / 3.0;
    ce_r -= std::log(pr(i, tr[i])) / 3.0;
  }
  auto res = compute_loss(Tensor(pe), Tensor(pr), te, tr, 0.7);
  EXPECT_NEAR(res.loss.value()(0, 0), 0.7 * ce_e + 0.3 * ce_r, 1e-12);
  EXPECT_NEAR(res.entity_loss.value()(0, 0), ce_e, 1e-12);
}

TEST(Loss, ZeroProbabilityIsClamped) {
  Matrix pe = Matrix::Zero(1, 3);
  pe(0, 0) = 1.0;
  const int te[] = {2};
  const int tr[] = {0};
  auto res = compute_loss(Tensor(pe), Tensor(Matrix::Ones(1, 1)), te, tr, 1.0);
  EXPECT_TRUE(std::isfinite(res.loss.value()(0, 0)));
  EXPECT_NEAR(res.loss.value()(0, 0), -std::log(kProbabilityFloor), 1e-9);
  EXPECT_EQ(res.clamped, 1);
}

TEST(Rank, WorkedExample) {
  Vector s(10);
  s << 0.9, 0.8, 0.7, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.0;
  EXPECT_DOUBLE_EQ(rank_of(s, 3), 4.0);
  MetricsAccumulator acc;
  acc.add(0, 4.0, 4.0);
  auto r = acc.report();
  EXPECT_DOUBLE_EQ(r.raw.mrr, 0.25);
  EXPECT_DOUBLE_EQ(r.raw.hits1, 0.0);
  EXPECT_DOUBLE_EQ(r.raw.hits10, 1.0);
}

TEST(Rank, TiesTakeMeanPosition) {
  Vector s(5);
  s << 0.5, 0.2, 0.5, 0.5, 0.1;
  EXPECT_DOUBLE_EQ(rank_of(s, 2), 2.0);
  Vector flat = Vector::Constant(4, 0.25);
  EXPECT_DOUBLE_EQ(rank_of(flat, 0), 2.5);
}

TEST(Rank, MatchesSortOracle) {
  Rng rng(2);
  std::uniform_int_distribution<int> level(0, 5);
  for (int trial = 0; trial < 200; ++trial) {
    Vector s(30);
    for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = level(rng) / 5.0;
    const int truth = trial % 30;
    std::vector<int> exclude;
    for (int i = 0; i < 30; i += 3 + trial % 4) exclude.push_back(i);
    EXPECT_DOUBLE_EQ(rank_of(s, truth), oracle::sorted_rank(s, truth, {}));
    const double filtered = rank_of(s, truth, exclude);
    EXPECT_DOUBLE_EQ(filtered, oracle::sorted_rank(s, truth, exclude));
    EXPECT_LE(filtered, rank_of(s, truth));
  }
}

TEST(Metrics, PerTimestampBreakdown) {
  MetricsAccumulator acc;
  acc.add(3, 1.0, 1.0);
  acc.add(3, 2.0, 1.0);
  acc.add(5, 4.0, 2.0);
  auto r = acc.report();
  EXPECT_EQ(r.filtered.count, 3u);
  EXPECT_NEAR(r.filtered.mrr, (1.0 + 1.0 + 0.5) / 3, 1e-12);
  EXPECT_NEAR(r.raw.hits3, 2.0 / 3, 1e-12);
  ASSERT_EQ(r.per_timestamp.size(), 2u);
  EXPECT_EQ(r.per_timestamp[0].time, 3);
  EXPECT_NEAR(r.per_timestamp[0].raw_mrr, 0.75, 1e-12);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Tensor w(Matrix::Constant(1, 2, 1.0), true);
  Adam opt({&w}, 0.1);
  ops::sum_all(ops::mul(w, Tensor(Matrix::Constant(1, 2, 3.0)))).backward();
  opt.step();
  EXPECT_NEAR(w.value()(0, 0), 0.9, 1e-6);
  opt.zero_grad();
  EXPECT_FALSE(w.has_grad() && w.grad().norm() > 0.0);
}

TEST(Adam, ClipScalesGlobalNorm) {
  Tensor a(Matrix::Constant(1, 1, 0.0), true);
  Tensor b(Matrix::Constant(1, 1, 0.0), true);
  Adam opt({&a, &b}, 0.1);
  ops::sum_all(ops::add(ops::scale(a, 3.0), ops::scale(b, 4.0))).backward();
  EXPECT_NEAR(opt.clip_grad_norm(1.0), 5.0, 1e-12);
  EXPECT_NEAR(a.grad()(0, 0), 0.6, 1e-6);
  EXPECT_NEAR(b.grad()(0, 0), 0.8, 1e-6);
}

TEST(Data, PrepareAugmentsAndOrders) {
  DatasetSplits s = tiny_splits();
  PreparedData d = prepare_data(s);
  EXPECT_EQ(d.shape.num_relations, 6);
  EXPECT_EQ(d.shape.num_timestamps, 28);
  std::size_t n = 0;
  for (const auto& snap : d.all.snapshots) n += snap.size();
  EXPECT_EQ(n, 2 * (s.train.size() + s.valid.size() + s.test.size()));
  EXPECT_EQ(d.valid_times.front(), 20);
  EXPECT_EQ(d.test_times.back(), 27);
}

TEST(Data, StepQueriesRejectStaleStores) {
  DatasetSplits s = tiny_splits();
  PreparedData d = prepare_data(s);
  IndicatorStore es;
  IndicatorStore rs(IndicatorKey::subject_object);
  es.advance(d.all.snapshots[0], 0);
  rs.advance(d.all.snapshots[0], 0);
  es.advance(d.all.snapshots[1], 1);
  rs.advance(d.all.snapshots[1], 1);
  EXPECT_THROW(make_step_queries(d.all.snapshots[0], 0, es, rs, d.shape), OrderingError);
  auto q = make_step_queries(d.all.snapshots[2], 2, es, rs, d.shape);
  EXPECT_EQ(q.entity_mask.rows(), static_cast<Eigen::Index>(d.all.snapshots[2].size()));
  EXPECT_EQ(q.relation_mask.cols(), 6);
}

TEST(Evaluate, AlphaZeroEqualsRawDecoder) {
  PreparedData d = prepare_data(tiny_splits());
  Config c = tiny_config();
  Rng r1(1);
  LmsModel a(c, d.shape, r1);
  c.alpha = 0.0;
  Rng r2(1);
  LmsModel b(c, d.shape, r2);
  EvaluationOptions o;
  o.alpha = 0.0;
  auto ra = evaluate(a, d, Split::test, o);
  auto rb = evaluate(b, d, Split::test);
  EXPECT_DOUBLE_EQ(ra.filtered.mrr, rb.filtered.mrr);
  EXPECT_DOUBLE_EQ(a.config().alpha, 0.3);
  EXPECT_GE(ra.filtered.mrr, ra.raw.mrr);
  EXPECT_EQ(ra.filtered.count, 2 * tiny_splits().test.size());
}

TEST(Evaluate, ScoreDumpHasOneLinePerQuery) {
  PreparedData d = prepare_data(tiny_splits());
  Rng rng(1);
  LmsModel m(tiny_config(), d.shape, rng);
  std::ostringstream dump;
  EvaluationOptions o;
  o.score_dump = &dump;
  o.dump_top = 3;
  auto r = evaluate(m, d, Split::valid, o);
  std::size_t lines = 0;
  std::istringstream in(dump.str());
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, r.filtered.count);
  EXPECT_NE(dump.str().find("\"filtered_rank\""), std::string::npos);
}

TEST(Train, FirstEpochIsDeterministic) {
  PreparedData d = prepare_data(tiny_splits());
  auto run = [&] {
    Rng init(7);
    LmsModel m(tiny_config(), d.shape, init);
    Adam opt(m.parameters(), 0.01);
    Rng rng(8);
    return train_epoch(m, opt, d, rng, 1).loss;
  };
  EXPECT_EQ(run(), run());
}

TEST(Train, LossDecreases) {
  PreparedData d = prepare_data(tiny_splits());
  Config c = tiny_config();
  c.dropout = 0.0;
  Rng init(9);
  LmsModel m(c, d.shape, init);
  Adam opt(m.parameters(), c.learning_rate);
  Rng rng(10);
  std::vector<double> losses;
  for (int e = 1; e <= 20; ++e) losses.push_back(train_epoch(m, opt, d, rng, e).loss);
  int upticks = 0;
  for (std::size_t i = 1; i < losses.size(); ++i) upticks += losses[i] > losses[i - 1];
  EXPECT_LT(losses.back(), 0.7 * losses.front());
  EXPECT_LE(upticks, 2);
}

TEST(Train, NonFiniteLossThrows) {
  PreparedData d = prepare_data(tiny_splits());
  Rng init(3);
  LmsModel m(tiny_config(), d.shape, init);
  m.entity_decoder.projection.mutable_value()(0, 0) = std::nan("");
  Adam opt(m.parameters(), 0.01);
  Rng rng(4);
  try {
    train_epoch(m, opt, d, rng, 1);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("decoder.entity.projection"), std::string::npos) << e.what();
  }
}

TEST(Train, EarlyStoppingKeepsBest) {
  PreparedData d = prepare_data(tiny_splits());
  Rng init(11);
  LmsModel m(tiny_config(), d.shape, init);
  std::vector<int> seen;
  TrainOptions o;
  o.on_epoch = [&](const EpochRecord& r) { seen.push_back(r.epoch); };
  auto res = train(m, d, o);
  EXPECT_FALSE(seen.empty());
  EXPECT_LE(seen.size(), 3u);
  ASSERT_TRUE(res.best_valid);
  auto again = evaluate(m, d, Split::valid);
  EXPECT_DOUBLE_EQ(again.filtered.mrr, res.best_valid->filtered.mrr);
}

TEST(Checkpoint, RoundTrip) {
  PreparedData d = prepare_data(tiny_splits());
  Config c = tiny_config();
  c.variant = Variant::gate_linear;
  Rng init(12);
  LmsModel m(c, d.shape, init);
  Adam opt(m.parameters(), 0.01);
  Rng rng(13);
  train_epoch(m, opt, d, rng, 1);
  const fs::path dir = fs::temp_directory_path() / "lms_checkpoint_test";
  fs::remove_all(dir);
  save_checkpoint(m, dir);
  auto back = load_checkpoint(dir);
  EXPECT_EQ(back->config().variant, Variant::gate_linear);
  auto a = snapshot_parameters(m);
  auto b = snapshot_parameters(*back);
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [name, v] : a) EXPECT_EQ(v, b.at(name)) << name;
  EXPECT_DOUBLE_EQ(evaluate(m, d, Split::test).filtered.mrr,
                   evaluate(*back, d, Split::test).filtered.mrr);
  fs::remove_all(dir);
}
