#include "lms/layers.hpp"

#include <cmath>

namespace lms {

Tensor xavier_parameter(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return Tensor(std::move(m), true);
}

Tensor normal_parameter(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return Tensor(std::move(m), true);
}

Tensor zero_parameter(Eigen::Index rows, Eigen::Index cols) {
  return Tensor(Matrix::Zero(rows, cols), true);
}

ConvComposition ConvComposition::init(int channels, int out_channels, int width, int dim,
                                      Rng& rng) {
  ConvComposition c;
  c.channels = channels;
  c.kernels = xavier_parameter(out_channels, static_cast<Eigen::Index>(channels) * width, rng);
  c.bias = zero_parameter(1, out_channels);
  c.projection = xavier_parameter(dim, static_cast<Eigen::Index>(out_channels) * dim, rng);
  return c;
}

Tensor ConvComposition::apply(const std::vector<Tensor>& parts) const {
  Tensor stacked = ops::concat_cols(parts);
  Tensor maps = ops::conv1d_rows(stacked, kernels, bias, channels, dim());
  return ops::linear(maps, projection);
}

std::vector<Tensor*> ConvComposition::parameters() { return {&kernels, &bias, &projection}; }

GruParams GruParams::init(int input_dim, int hidden_dim, Rng& rng) {
  GruParams p;
  p.w_input = xavier_parameter(3 * hidden_dim, input_dim, rng);
  p.w_hidden = xavier_parameter(3 * hidden_dim, hidden_dim, rng);
  p.b_input = zero_parameter(1, 3 * hidden_dim);
  p.b_hidden = zero_parameter(1, 3 * hidden_dim);
  return p;
}

std::vector<Tensor*> GruParams::parameters() { return {&w_input, &w_hidden, &b_input, &b_hidden}; }

Tensor gru_cell(const Tensor& hidden, const Tensor& input, const GruParams& params) {
  using namespace ops;
  const Eigen::Index d = params.hidden_dim();
  Tensor gi = add_row(linear(input, params.w_input), params.b_input);
  Tensor gh = add_row(linear(hidden, params.w_hidden), params.b_hidden);
  Tensor reset = sigmoid(add(slice_cols(gi, 0, d), slice_cols(gh, 0, d)));
  Tensor update = sigmoid(add(slice_cols(gi, d, d), slice_cols(gh, d, d)));
  Tensor candidate = tanh(add(slice_cols(gi, 2 * d, d), mul(reset, slice_cols(gh, 2 * d, d))));
  return add(mul(one_minus(update), candidate), mul(update, hidden));
}

}  // namespace lms
