#include "lms/tgl.hpp"

#include <sstream>
#include <stdexcept>

namespace lms {

PeriodTable PeriodTable::daily() { return PeriodTable{{3, 7, 14, 30}}; }

PeriodTable PeriodTable::quarter_hourly() { return PeriodTable{{4, 48, 96, 672}}; }

PeriodTable PeriodTable::for_granularity_minutes(long minutes) {
  if (minutes == 15) return quarter_hourly();
  if (minutes == 1440) return daily();
  throw std::invalid_argument("no default period table for granularity " +
                              std::to_string(minutes) + " minutes; pass explicit periods");
}

PeriodTable PeriodTable::parse(const std::string& text) {
  PeriodTable table;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(' ') == std::string::npos) continue;
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad period '" + item + "'");
    }
    if (value <= 0) throw std::invalid_argument("periods must be positive: '" + item + "'");
    table.offsets.push_back(value);
  }
  if (table.offsets.empty()) throw std::invalid_argument("empty period table");
  return table;
}

std::string PeriodTable::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(offsets[i]);
  }
  return out;
}

int TemporalGraph::offset_of(int type) const {
  const int n = static_cast<int>(periods.offsets.size());
  return type < n ? periods.offsets[static_cast<std::size_t>(type)]
                  : -periods.offsets[static_cast<std::size_t>(type - n)];
}

int TemporalGraph::inverse_type(int type) const {
  const int n = static_cast<int>(periods.offsets.size());
  return type < n ? type + n : type - n;
}

TemporalGraph build_temporal_graph(int num_timestamps, const PeriodTable& periods) {
  TemporalGraph graph;
  graph.num_timestamps = num_timestamps;
  graph.periods = periods;
  const int n = static_cast<int>(periods.offsets.size());
  for (int p = 0; p < n; ++p) {
    const int offset = periods.offsets[static_cast<std::size_t>(p)];
    for (int i = 0; i + offset < num_timestamps; ++i) {
      graph.edges.push_back(TemporalEdge{i, p, i + offset});
      graph.edges.push_back(TemporalEdge{i + offset, p + n, i});
    }
  }
  return graph;
}

Time2VecParams Time2VecParams::init(int num_timestamps, int time_dim, int dim, Rng& rng) {
  Time2VecParams p;
  p.raw = xavier_parameter(num_timestamps, time_dim, rng);
  p.w_out = xavier_parameter(dim, 2 * dim, rng);
  p.w_linear = xavier_parameter(dim, time_dim, rng);
  p.w_periodic = xavier_parameter(dim, time_dim, rng);
  return p;
}

std::vector<Tensor*> Time2VecParams::parameters() {
  return {&raw, &w_out, &w_linear, &w_periodic};
}

Tensor time2vec(const Tensor& raw, const Time2VecParams& params) {
  using namespace ops;
  Tensor linear_part = linear(raw, params.w_linear);
  Tensor periodic_part = sin(linear(raw, params.w_periodic));
  return linear(concat_cols({linear_part, periodic_part}), params.w_out);
}

TemporalRgcnParams TemporalRgcnParams::init(int num_types, int dim, Rng& rng) {
  TemporalRgcnParams p;
  for (int r = 0; r < num_types; ++r) p.w_type.push_back(xavier_parameter(dim, dim, rng));
  p.w_self = xavier_parameter(dim, dim, rng);
  return p;
}

std::vector<Tensor*> TemporalRgcnParams::parameters() {
  std::vector<Tensor*> out;
  for (auto& w : w_type) out.push_back(&w);
  out.push_back(&w_self);
  return out;
}

Tensor rgcn_update(const TemporalGraph& graph, const Tensor& embeddings,
                   const TemporalRgcnParams& params, const ForwardContext& ctx) {
  using namespace ops;
  const Eigen::Index n = embeddings.rows();
  if (static_cast<int>(params.w_type.size()) != graph.periods.num_types())
    throw std::invalid_argument("rgcn_update: weight count does not match period types");

  Vector neighbours = Vector::Zero(n);
  for (const auto& e : graph.edges) neighbours[e.to] += 1.0;

  Tensor out = linear(embeddings, params.w_self);
  const int types = graph.periods.num_types();
  for (int type = 0; type < types; ++type) {
    std::vector<int> from;
    std::vector<int> to;
    for (const auto& e : graph.edges) {
      if (e.type != type) continue;
      from.push_back(e.from);
      to.push_back(e.to);
    }
    if (from.empty()) continue;
    Vector norm(static_cast<Eigen::Index>(to.size()));
    for (std::size_t i = 0; i < to.size(); ++i)
      norm[static_cast<Eigen::Index>(i)] = 1.0 / neighbours[to[i]];
    Tensor messages = scale_rows(
        linear(gather_rows(embeddings, from), params.w_type[static_cast<std::size_t>(type)]),
        norm);
    out = add(out, scatter_add_rows(messages, to, n));
  }
  return rrelu(out, ctx);
}

}  // namespace lms
