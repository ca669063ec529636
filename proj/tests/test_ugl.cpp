#include <gtest/gtest.h>

#include "grad_check.hpp"
#include "lms/ugl.hpp"
#include "oracles.hpp"

using namespace lms;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

const Snapshot kT0{{0, 0, 1, 0}, {2, 1, 3, 0}};
const Snapshot kT1{{1, 0, 0, 1}, {3, 2, 4, 1}, {4, 1, 2, 1}};
// Objects 1 and 3 receive several edges across both steps.
const Snapshot kShared{{1, 0, 0, 1}, {3, 2, 1, 1}, {4, 1, 1, 1}, {0, 2, 3, 1}};

}  // namespace

TEST(UnionGraph, ExampleFilter) {
  const Snapshot* hist[] = {&kT0, &kT1};
  const int subjects[] = {0};
  UnionGraph g = build_union_graph(hist, subjects);
  ASSERT_EQ(g.edges.size(), 2u);
  EXPECT_EQ(g.edges[0], (Quadruple{0, 0, 1, 0}));
  EXPECT_EQ(g.edges[1], (Quadruple{1, 0, 0, 1}));
  EXPECT_EQ(g.nodes, (std::vector<int>{0, 1}));
}

TEST(UnionGraph, QueryOverloadAndEntirety) {
  const Snapshot* hist[] = {&kT0, &kT1};
  const Query queries[] = {{3, 0, 2}, {3, 1, 2}};
  UnionGraph g = build_union_graph(hist, queries);
  EXPECT_EQ(g.edges.size(), 2u);
  EXPECT_EQ(build_entire_union_graph(hist).edges.size(), 5u);
}

TEST(UnionGraph, EmptyInputs) {
  const int subjects[] = {0};
  EXPECT_TRUE(build_union_graph({}, subjects).edges.empty());
  const Snapshot* hist[] = {&kT0};
  EXPECT_TRUE(build_union_graph(hist, std::span<const int>{}).nodes.empty());
}

TEST(UnionGraph, MatchesExhaustiveFilter) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> ent(0, 19);
    std::vector<Snapshot> snaps(4);
    std::vector<std::vector<Quadruple>> window;
    for (int t = 0; t < 4; ++t) {
      for (int i = 0; i < 8; ++i) snaps[static_cast<std::size_t>(t)].push_back({ent(rng), i % 3, ent(rng), t});
      window.push_back(snaps[static_cast<std::size_t>(t)]);
    }
    std::vector<const Snapshot*> hist;
    for (const auto& s : snaps) hist.push_back(&s);
    std::vector<int> subjects{ent(rng), ent(rng)};
    EXPECT_EQ(build_union_graph(hist, subjects).edges, oracle::union_edges(window, subjects));
  }
}

TEST(UnionGraph, DumpFormat) {
  const Snapshot* hist[] = {&kT0};
  EXPECT_EQ(dump_union_graph(build_entire_union_graph(hist)), "0\t0\t1\t0\n2\t1\t3\t0\n");
}

TEST(Ugl, InitIsMeanOfSteps) {
  Tensor a(Matrix::Constant(2, 2, 1.0));
  Tensor b(Matrix::Constant(2, 2, 3.0));
  EXPECT_TRUE(init_union_embeddings({a, b}).value().isApprox(Matrix::Constant(2, 2, 2.0)));
  EXPECT_THROW(init_union_embeddings({}), std::invalid_argument);
}

TEST(Ugl, AttentionMatchesLoopAndNormalises) {
  Rng rng(12);
  const int d = 3;
  auto p = UgatLayerParams::init(d, 2, 3, rng);
  Matrix e = random_matrix(5, d, rng);
  Matrix r = random_matrix(3, d, rng);
  Matrix t = random_matrix(2, d, rng);
  const Snapshot* hist[] = {&kT0, &kShared};
  UnionGraph g = build_entire_union_graph(hist);
  Matrix a = ugat_attention(g, Tensor(e), Tensor(r), Tensor(t), p, {}).value();

  std::vector<double> score;
  for (const auto& f : g.edges) {
    auto feat = oracle::cat(oracle::cat(oracle::row(e, f.subject), oracle::row(r, f.relation)),
                            oracle::cat(oracle::row(e, f.object), oracle::row(t, f.time)));
    auto h = oracle::apply(p.w_attention.value(), feat);
    for (double& v : h) v = v >= 0 ? v : 0.2 * v;
    score.push_back(oracle::apply(p.w_score.value(), h)[0]);
  }
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < g.edges.size(); ++j)
      if (g.edges[j].object == g.edges[i].object) z += std::exp(score[j]);
    EXPECT_NEAR(a(static_cast<Eigen::Index>(i), 0), std::exp(score[i]) / z, 1e-10);
  }
  std::map<int, double> sums;
  for (std::size_t i = 0; i < g.edges.size(); ++i) sums[g.edges[i].object] += a(static_cast<Eigen::Index>(i), 0);
  for (const auto& [o, s] : sums) EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Ugl, SingleIncomingEdgeGetsWeightOne) {
  Rng rng(13);
  auto p = UgatLayerParams::init(3, 2, 3, rng);
  const Snapshot snap{{0, 0, 1, 0}};
  const Snapshot* hist[] = {&snap};
  Matrix a = ugat_attention(build_entire_union_graph(hist), Tensor(random_matrix(2, 3, rng)),
                            Tensor(random_matrix(1, 3, rng)), Tensor(random_matrix(1, 3, rng)), p, {})
                 .value();
  EXPECT_DOUBLE_EQ(a(0, 0), 1.0);
}

TEST(Ugl, TimeFlagChangesAttention) {
  Rng rng(14);
  auto p = UgatLayerParams::init(3, 2, 3, rng);
  Matrix e = random_matrix(5, 3, rng);
  Matrix r = random_matrix(3, 3, rng);
  Matrix t = random_matrix(2, 3, rng);
  const Snapshot* hist[] = {&kT0, &kShared};
  UnionGraph g = build_entire_union_graph(hist);
  Matrix with = ugat_attention(g, Tensor(e), Tensor(r), Tensor(t), p, {}).value();
  UglOptions no_time;
  no_time.use_time = false;
  Matrix without = ugat_attention(g, Tensor(e), Tensor(r), Tensor(Matrix::Zero(2, 3)), p, no_time).value();
  Matrix zero_time = ugat_attention(g, Tensor(e), Tensor(r), Tensor(Matrix::Zero(2, 3)), p, {}).value();
  EXPECT_TRUE(without.isApprox(zero_time));
  EXPECT_FALSE(with.isApprox(without));
}

TEST(Ugl, LayerPassesOutsideNodesThrough) {
  Rng rng(15);
  auto p = UgatLayerParams::init(3, 2, 3, rng);
  Matrix e = random_matrix(6, 3, rng);
  const Snapshot* hist[] = {&kT0};
  const int subjects[] = {0};
  UnionGraph g = build_union_graph(hist, subjects);
  Matrix out = ugl_layer(g, Tensor(e), Tensor(random_matrix(3, 3, rng)),
                         Tensor(random_matrix(1, 3, rng)), p, {}, {})
                   .value();
  for (int v : {2, 3, 4, 5}) EXPECT_TRUE(out.row(v).isApprox(e.row(v)));
  // Node 0 has no incoming edge: self term only.
  Matrix self = (e.row(0) * p.w_self.value().transpose()).unaryExpr([](double x) {
    return oracle::rrelu_eval(x);
  });
  EXPECT_TRUE(out.row(0).isApprox(self));
}

TEST(Ugl, GateIsConvexCombination) {
  Rng rng(16);
  auto gate = GateParams::init(4, 3, rng);
  Matrix e = random_matrix(4, 3, rng);
  Matrix u = random_matrix(4, 3, rng);
  Matrix g = gate_weights(gate).value();
  Matrix out = adaptive_gate(Tensor(e), Tensor(u), gate).value();
  for (int i = 0; i < 4; ++i) {
    EXPECT_GT(g(i, 0), 0.0);
    EXPECT_LT(g(i, 0), 1.0);
    EXPECT_NEAR(g(i, 0), oracle::sigmoid(gate.theta.value().row(i).dot(gate.w_gate.value().row(0))), 1e-12);
    for (int j = 0; j < 3; ++j) {
      EXPECT_NEAR(out(i, j), g(i, 0) * e(i, j) + (1 - g(i, 0)) * u(i, j), 1e-12);
      EXPECT_GE(out(i, j), std::min(e(i, j), u(i, j)) - 1e-12);
      EXPECT_LE(out(i, j), std::max(e(i, j), u(i, j)) + 1e-12);
    }
  }
}

TEST(Ugl, SaturatedGateSelectsOneSide) {
  Rng rng(17);
  auto gate = GateParams::init(2, 2, rng);
  gate.w_gate.mutable_value() << 1.0, 0.0;
  gate.theta.mutable_value() << 100.0, 0.0, -100.0, 0.0;
  Matrix e = Matrix::Constant(2, 2, 1.0);
  Matrix u = Matrix::Constant(2, 2, -1.0);
  Matrix out = adaptive_gate(Tensor(e), Tensor(u), gate).value();
  EXPECT_NEAR(out(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(out(1, 0), -1.0, 1e-12);
}

TEST(Ugl, GradientThroughLayerAndGate) {
  Rng rng(18);
  auto p = UgatLayerParams::init(3, 2, 3, rng);
  auto gate = GateParams::init(5, 3, rng);
  Tensor e(random_matrix(5, 3, rng), true);
  Tensor r(random_matrix(3, 3, rng), true);
  Tensor t(random_matrix(2, 3, rng), true);
  const Snapshot* hist[] = {&kT0, &kT1};
  const int subjects[] = {1, 3};
  UnionGraph g = build_union_graph(hist, subjects);
  Matrix w = random_matrix(5, 3, rng);
  auto loss = [&] {
    Tensor ue = ugl_layer(g, e, r, t, p, {}, {});
    return ops::sum_all(ops::mul(adaptive_gate(e, ue, gate), Tensor(w)));
  };
  std::vector<std::pair<std::string, Tensor*>> params{{"e", &e}, {"r", &r}, {"t", &t},
                                                      {"theta", &gate.theta}, {"w_gate", &gate.w_gate}};
  auto all = p.parameters();
  for (std::size_t i = 0; i < all.size(); ++i) params.emplace_back("p" + std::to_string(i), all[i]);
  auto res = gradcheck::check(loss, params);
  EXPECT_LT(res.max_relative_error, 1e-5) << res.worst;
}
