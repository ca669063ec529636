#include "lms/model.hpp"

namespace lms {

namespace {

bool uses_egl(Variant v) { return v != Variant::no_egl; }
bool uses_ugl(Variant v) { return v != Variant::no_ugl; }
bool uses_tgl(Variant v) { return v != Variant::no_tgl; }

}  // namespace

LmsModel::LmsModel(const Config& config, const ModelShape& shape, Rng& rng)
    : config_(config), shape_(shape) {
  config_.validate();
  const int d = config_.dim;
  const Variant v = config_.variant;
  temporal_graph_ = build_temporal_graph(shape.num_timestamps, PeriodTable::parse(config_.periods));

  entity_init = normal_parameter(shape.num_entities, d, 1.0, rng);
  relation_init = xavier_parameter(shape.num_relations, d, rng);
  if (uses_egl(v))
    egl = EglParams::init(d, config_.egl_layers, config_.conv_channels, config_.kernel_width, rng);
  if (uses_ugl(v)) {
    for (int l = 0; l < config_.ugl_layers; ++l)
      ugl.push_back(UgatLayerParams::init(d, config_.conv_channels, config_.kernel_width, rng));
    if (v == Variant::gate_linear) {
      gate_linear = xavier_parameter(d, 2 * d, rng);
    } else if (v != Variant::gate_sum && v != Variant::no_egl) {
      gate = GateParams::init(shape.num_entities, d, rng);
    }
  }
  time2vec_params = Time2VecParams::init(shape.num_timestamps, config_.time_dim, d, rng);
  if (uses_tgl(v))
    temporal_rgcn = TemporalRgcnParams::init(temporal_graph_.periods.num_types(), d, rng);
  const int rows = v == Variant::no_time_decoder ? 2 : 3;
  entity_decoder =
      ConvTransEParams::init(rows, config_.conv_channels, config_.kernel_width, d, rng);
  relation_decoder =
      ConvTransEParams::init(rows, config_.conv_channels, config_.kernel_width, d, rng);
}

void LmsModel::set_alpha(double alpha) {
  check_rate(alpha, "alpha");
  config_.alpha = alpha;
}

std::vector<std::pair<std::string, Tensor*>> LmsModel::named_parameters() {
  std::vector<std::pair<std::string, Tensor*>> out;
  auto add = [&](const std::string& name, Tensor* t) {
    if (t->defined()) out.emplace_back(name, t);
  };
  auto add_composition = [&](const std::string& prefix, ConvComposition& c) {
    add(prefix + ".kernels", &c.kernels);
    add(prefix + ".bias", &c.bias);
    add(prefix + ".projection", &c.projection);
  };
  auto add_gru = [&](const std::string& prefix, GruParams& g) {
    add(prefix + ".w_input", &g.w_input);
    add(prefix + ".w_hidden", &g.w_hidden);
    add(prefix + ".b_input", &g.b_input);
    add(prefix + ".b_hidden", &g.b_hidden);
  };
  auto add_decoder = [&](const std::string& prefix, ConvTransEParams& p) {
    add(prefix + ".kernels", &p.kernels);
    add(prefix + ".bias", &p.bias);
    add(prefix + ".projection", &p.projection);
    add(prefix + ".projection_bias", &p.projection_bias);
  };

  add("entity_init", &entity_init);
  add("relation_init", &relation_init);
  for (std::size_t l = 0; l < egl.layers.size(); ++l) {
    const std::string prefix = "egl.layer" + std::to_string(l);
    add(prefix + ".w_message", &egl.layers[l].w_message);
    add(prefix + ".w_self", &egl.layers[l].w_self);
    add_composition(prefix + ".composition", egl.layers[l].composition);
  }
  add_gru("egl.entity_gru", egl.entity_gru);
  add_gru("egl.relation_gru", egl.relation_gru);
  for (std::size_t l = 0; l < ugl.size(); ++l) {
    const std::string prefix = "ugl.layer" + std::to_string(l);
    add(prefix + ".w_score", &ugl[l].w_score);
    add(prefix + ".w_attention", &ugl[l].w_attention);
    add(prefix + ".w_message", &ugl[l].w_message);
    add(prefix + ".w_self", &ugl[l].w_self);
    add_composition(prefix + ".composition", ugl[l].composition);
  }
  add("gate.theta", &gate.theta);
  add("gate.w_gate", &gate.w_gate);
  add("gate.linear", &gate_linear);
  add("tgl.time2vec.raw", &time2vec_params.raw);
  add("tgl.time2vec.w_out", &time2vec_params.w_out);
  add("tgl.time2vec.w_linear", &time2vec_params.w_linear);
  add("tgl.time2vec.w_periodic", &time2vec_params.w_periodic);
  for (std::size_t r = 0; r < temporal_rgcn.w_type.size(); ++r)
    add("tgl.rgcn.w_type" + std::to_string(r), &temporal_rgcn.w_type[r]);
  add("tgl.rgcn.w_self", &temporal_rgcn.w_self);
  add_decoder("decoder.entity", entity_decoder);
  add_decoder("decoder.relation", relation_decoder);
  return out;
}

std::vector<Tensor*> LmsModel::parameters() {
  std::vector<Tensor*> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

ForwardContext LmsModel::context(bool training, Rng* rng) const {
  ForwardContext ctx;
  ctx.training = training;
  ctx.dropout = training ? config_.dropout : 0.0;
  ctx.rrelu = RReLUBounds{config_.rrelu_lower, config_.rrelu_upper};
  ctx.rng = rng;
  return ctx;
}

Tensor LmsModel::time_embeddings(const ForwardContext& ctx) const {
  Tensor base = time2vec(time2vec_params.raw, time2vec_params);
  if (!uses_tgl(config_.variant)) return base;
  return rgcn_update(temporal_graph_, base, temporal_rgcn, ctx);
}

Tensor LmsModel::initial_entities() const { return ops::normalize_rows(entity_init); }

Encoding LmsModel::encode(std::span<const Snapshot* const> history,
                          std::span<const int> union_subjects, const ForwardContext& ctx) const {
  const Variant v = config_.variant;
  Encoding enc;
  enc.time = time_embeddings(ctx);
  Tensor initial = initial_entities();

  if (uses_egl(v)) {
    enc.evolution = run_egl(history, initial, relation_init, egl, config_.aggregation, ctx);
  } else {
    enc.evolution.entities.push_back(initial);
    enc.evolution.relations = relation_init;
    enc.evolution.empty_history = history.empty();
  }
  enc.relations = enc.evolution.relations;
  const Tensor& evolved = enc.evolution.entities.back();

  if (!uses_ugl(v)) {
    enc.entities = evolved;
    return enc;
  }

  enc.union_graph = v == Variant::ugl_entirety ? build_entire_union_graph(history)
                                               : build_union_graph(history, union_subjects);
  Tensor ue = init_union_embeddings(enc.evolution.entities);
  UglOptions options;
  options.use_time = v != Variant::no_time_ugl;
  options.leaky_slope = config_.leaky_slope;
  for (const auto& layer : ugl)
    ue = ugl_layer(enc.union_graph, ue, enc.relations, enc.time, layer, options, ctx);
  enc.union_embeddings = ue;

  switch (v) {
    case Variant::no_egl:
      enc.entities = ue;
      break;
    case Variant::gate_sum:
      enc.entities = ops::scale(ops::add(evolved, ue), 0.5);
      break;
    case Variant::gate_linear:
      enc.entities = ops::linear(ops::concat_cols({evolved, ue}), gate_linear);
      break;
    default:
      enc.entities = adaptive_gate(evolved, ue, gate);
      break;
  }
  return enc;
}

StepOutput LmsModel::forward(std::span<const Snapshot* const> history,
                             const StepQueries& queries, const ForwardContext& ctx) const {
  std::vector<int> subjects;
  std::vector<int> relations;
  std::vector<int> objects;
  for (const auto& f : queries.facts) {
    subjects.push_back(f.subject);
    relations.push_back(f.relation);
    objects.push_back(f.object);
  }
  const std::vector<int>& union_subjects =
      queries.union_subjects ? *queries.union_subjects : subjects;

  StepOutput out;
  out.encoding = encode(history, union_subjects, ctx);
  const std::vector<int> times(subjects.size(), queries.time);
  Tensor query_time = ops::gather_rows(out.encoding.time, times);
  out.entity = score_entities(subjects, relations, out.encoding.entities, out.encoding.relations,
                              query_time, queries.entity_mask, config_.alpha, entity_decoder,
                              config_.mask_mode, ctx);
  if (!queries.score_relations) return out;
  out.relation = score_relations(subjects, objects, out.encoding.entities,
                                 out.encoding.relations, query_time, queries.relation_mask,
                                 config_.alpha, relation_decoder, config_.mask_mode, ctx);
  return out;
}

}  // namespace lms
