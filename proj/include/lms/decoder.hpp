#pragma once

// Time-aware ConvTransE decoders. The historical distribution is restricted
// to candidates marked by the indicator, the raw distribution is not, and the
// final score blends both with the historical rate alpha.

#include "lms/layers.hpp"
#include "lms/ugl.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace lms {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ConvTransEParams {
  Tensor kernels;          // [C x rows*width]
  Tensor bias;             // [1 x C]
  Tensor projection;       // [d x C*d]
  Tensor projection_bias;  // [1 x d]
  int rows = 3;

  static ConvTransEParams init(int rows, int out_channels, int width, int dim, Rng& rng);
  int dim() const { return static_cast<int>(projection.rows()); }
  std::vector<Tensor*> parameters();
};

/// Stacks the inputs as a [rows x d] signal, convolves, applies ReLU and
/// dropout, flattens, projects to d and applies ReLU again. Every input is
/// [n x d]; the number of inputs must equal params.rows.
Tensor convtranse(const std::vector<Tensor>& inputs, const ConvTransEParams& params,
                  const ForwardContext& ctx);

/// Single-query form of `convtranse` over the (s, r, t'') triple.
Vector convtranse_time(const Vector& subject, const Vector& relation, const Vector& time,
                       const ConvTransEParams& params);

enum class MaskMode {
  exclude,   // masked-out logits become -inf
  multiply,  // logits are multiplied by the 0/1 mask before the softmax
};

enum class Provenance { historical, raw, combined };

struct DecoderOutput {
  Tensor historical;  // [n x m]
  Tensor raw;         // [n x m]
  Tensor combined;    // [n x m]
};

/// p_R = softmax(q C^T), p_H = softmax restricted by `mask` (an empty mask row
/// falls back to p_R), combined = alpha p_H + (1 - alpha) p_R.
DecoderOutput blend_decoder(const Tensor& query, const Tensor& candidates, const Matrix& mask,
                            double alpha, MaskMode mode);

/// Batched entity scoring for queries (s_i, r_i) with per-query time rows.
DecoderOutput score_entities(std::span<const int> subjects, std::span<const int> relations,
                             const Tensor& entities, const Tensor& relation_embeddings,
                             const Tensor& query_time, const Matrix& mask, double alpha,
                             const ConvTransEParams& params, MaskMode mode,
                             const ForwardContext& ctx);

/// Batched relation scoring for queries (s_i, ?, o_i).
DecoderOutput score_relations(std::span<const int> subjects, std::span<const int> objects,
                              const Tensor& entities, const Tensor& relation_embeddings,
                              const Tensor& query_time, const Matrix& mask, double alpha,
                              const ConvTransEParams& params, MaskMode mode,
                              const ForwardContext& ctx);

struct ScoreDistribution {
  Vector probabilities;
  Provenance provenance = Provenance::combined;
};

/// Single-query entity distribution; `time_vector` is t'' of the query time.
ScoreDistribution score_entities(const Query& query, const Tensor& entities,
                                 const Tensor& relation_embeddings, const Vector& time_vector,
                                 const Vector& mask, double alpha, const ConvTransEParams& params,
                                 MaskMode mode = MaskMode::exclude,
                                 Provenance provenance = Provenance::combined);

ScoreDistribution score_relations(int subject, int object, const Tensor& entities,
                                  const Tensor& relation_embeddings, const Vector& time_vector,
                                  const Vector& mask, double alpha, const ConvTransEParams& params,
                                  MaskMode mode = MaskMode::exclude,
                                  Provenance provenance = Provenance::combined);

void check_rate(double value, const char* name);

}  // namespace lms
