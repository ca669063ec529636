#include "lms/decoder.hpp"

#include <cmath>
#include <string>

namespace lms {

ConvTransEParams ConvTransEParams::init(int rows, int out_channels, int width, int dim,
                                        Rng& rng) {
  ConvTransEParams p;
  p.rows = rows;
  p.kernels = xavier_parameter(out_channels, static_cast<Eigen::Index>(rows) * width, rng);
  p.bias = zero_parameter(1, out_channels);
  p.projection = xavier_parameter(dim, static_cast<Eigen::Index>(out_channels) * dim, rng);
  p.projection_bias = zero_parameter(1, dim);
  return p;
}

std::vector<Tensor*> ConvTransEParams::parameters() {
  return {&kernels, &bias, &projection, &projection_bias};
}

void check_rate(double value, const char* name) {
  if (!(value >= 0.0 && value <= 1.0))
    throw ConfigError(std::string(name) + " must lie in [0, 1], got " + std::to_string(value));
}

Tensor convtranse(const std::vector<Tensor>& inputs, const ConvTransEParams& params,
                  const ForwardContext& ctx) {
  using namespace ops;
  if (static_cast<int>(inputs.size()) != params.rows)
    throw std::invalid_argument("convtranse: expected " + std::to_string(params.rows) + " inputs");
  Tensor maps = conv1d_rows(concat_cols(inputs), params.kernels, params.bias, params.rows,
                            params.dim());
  maps = dropout(relu(maps), ctx.dropout, ctx);
  Tensor projected = add_row(linear(maps, params.projection), params.projection_bias);
  return relu(dropout(projected, ctx.dropout, ctx));
}

Vector convtranse_time(const Vector& subject, const Vector& relation, const Vector& time,
                       const ConvTransEParams& params) {
  NoGradGuard no_grad;
  auto row = [](const Vector& v) { return Tensor(Matrix(v.transpose())); };
  std::vector<Tensor> inputs{row(subject), row(relation)};
  if (params.rows == 3) inputs.push_back(row(time));
  return convtranse(inputs, params, ForwardContext{}).value().row(0).transpose();
}

DecoderOutput blend_decoder(const Tensor& query, const Tensor& candidates, const Matrix& mask,
                            double alpha, MaskMode mode) {
  using namespace ops;
  check_rate(alpha, "alpha");
  Tensor logits = linear(query, candidates);
  DecoderOutput out;
  out.raw = softmax_rows(logits);
  if (mode == MaskMode::exclude) {
    out.historical = masked_softmax_rows(logits, mask);
  } else {
    out.historical = softmax_rows(mul(logits, Tensor(mask)));
  }
  if (alpha == 0.0) {
    out.combined = out.raw;
  } else if (alpha == 1.0) {
    out.combined = out.historical;
  } else {
    out.combined = add(scale(out.historical, alpha), scale(out.raw, 1.0 - alpha));
  }
  return out;
}

namespace {

std::vector<Tensor> decoder_inputs(const Tensor& first, const Tensor& second,
                                   const Tensor& query_time, const ConvTransEParams& params) {
  std::vector<Tensor> inputs{first, second};
  if (params.rows == 3) inputs.push_back(query_time);
  return inputs;
}

}  // namespace

DecoderOutput score_entities(std::span<const int> subjects, std::span<const int> relations,
                             const Tensor& entities, const Tensor& relation_embeddings,
                             const Tensor& query_time, const Matrix& mask, double alpha,
                             const ConvTransEParams& params, MaskMode mode,
                             const ForwardContext& ctx) {
  check_rate(alpha, "alpha");
  Tensor query = convtranse(decoder_inputs(ops::gather_rows(entities, subjects),
                                           ops::gather_rows(relation_embeddings, relations),
                                           query_time, params),
                            params, ctx);
  return blend_decoder(query, entities, mask, alpha, mode);
}

DecoderOutput score_relations(std::span<const int> subjects, std::span<const int> objects,
                              const Tensor& entities, const Tensor& relation_embeddings,
                              const Tensor& query_time, const Matrix& mask, double alpha,
                              const ConvTransEParams& params, MaskMode mode,
                              const ForwardContext& ctx) {
  check_rate(alpha, "alpha");
  Tensor query = convtranse(decoder_inputs(ops::gather_rows(entities, subjects),
                                           ops::gather_rows(entities, objects), query_time,
                                           params),
                            params, ctx);
  return blend_decoder(query, relation_embeddings, mask, alpha, mode);
}

namespace {

ScoreDistribution pick_provenance(const DecoderOutput& out, Provenance provenance) {
  ScoreDistribution dist;
  dist.provenance = provenance;
  const Tensor& chosen = provenance == Provenance::historical ? out.historical
                         : provenance == Provenance::raw      ? out.raw
                                                              : out.combined;
  dist.probabilities = chosen.value().row(0).transpose();
  return dist;
}

}  // namespace

ScoreDistribution score_entities(const Query& query, const Tensor& entities,
                                 const Tensor& relation_embeddings, const Vector& time_vector,
                                 const Vector& mask, double alpha, const ConvTransEParams& params,
                                 MaskMode mode, Provenance provenance) {
  NoGradGuard no_grad;
  const int s[] = {query.subject};
  const int r[] = {query.relation};
  Matrix mask_row = mask.transpose();
  auto out = score_entities(s, r, entities, relation_embeddings,
                            Tensor(Matrix(time_vector.transpose())), mask_row, alpha, params, mode,
                            ForwardContext{});
  return pick_provenance(out, provenance);
}

ScoreDistribution score_relations(int subject, int object, const Tensor& entities,
                                  const Tensor& relation_embeddings, const Vector& time_vector,
                                  const Vector& mask, double alpha, const ConvTransEParams& params,
                                  MaskMode mode, Provenance provenance) {
  NoGradGuard no_grad;
  const int s[] = {subject};
  const int o[] = {object};
  Matrix mask_row = mask.transpose();
  auto out = score_relations(s, o, entities, relation_embeddings,
                             Tensor(Matrix(time_vector.transpose())), mask_row, alpha, params,
                             mode, ForwardContext{});
  return pick_provenance(out, provenance);
}

}  // namespace lms
