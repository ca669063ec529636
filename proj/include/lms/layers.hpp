#pragma once

#include "lms/tensor.hpp"

#include <vector>

namespace lms {

/// Xavier-uniform initialised [rows x cols] parameter.
Tensor xavier_parameter(Eigen::Index rows, Eigen::Index cols, Rng& rng);
Tensor normal_parameter(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng);
Tensor zero_parameter(Eigen::Index rows, Eigen::Index cols);

// Convolutional composition of stacked embeddings: the inputs are treated as
// `channels` signals of length d, convolved with out_channels same-padded
// kernels, flattened and projected back to d.
struct ConvComposition {
  Tensor kernels;     // [out_channels x channels*width]
  Tensor bias;        // [1 x out_channels]
  Tensor projection;  // [d x out_channels*d]
  int channels = 2;

  static ConvComposition init(int channels, int out_channels, int width, int dim, Rng& rng);

  int dim() const { return static_cast<int>(projection.rows()); }
  /// Every part is [n x d]; returns [n x d].
  Tensor apply(const std::vector<Tensor>& parts) const;
  std::vector<Tensor*> parameters();
};

struct GruParams {
  Tensor w_input;   // [3d x input_dim], gate order (reset, update, candidate)
  Tensor w_hidden;  // [3d x d]
  Tensor b_input;   // [1 x 3d]
  Tensor b_hidden;  // [1 x 3d]

  static GruParams init(int input_dim, int hidden_dim, Rng& rng);
  int hidden_dim() const { return static_cast<int>(w_hidden.cols()); }
  std::vector<Tensor*> parameters();
};

/// Row-wise GRU cell:
///   r = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
///   z = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
///   n = tanh(W_in x + b_in + r * (W_hn h + b_hn))
///   h' = (1 - z) * n + z * h
Tensor gru_cell(const Tensor& hidden, const Tensor& input, const GruParams& params);

}  // namespace lms
