#pragma once

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. Every model component is written against this tape so that
// training and finite-difference gradient checks share one code path.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

namespace lms {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

namespace detail {
struct Node;
}

/// A matrix value on the autodiff tape. Copies share the underlying node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Matrix value, bool requires_grad = false);

  static Tensor zeros(Eigen::Index rows, Eigen::Index cols, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const;
  /// Mutable access for optimizers, initializers and finite-difference probes.
  Matrix& mutable_value();
  const Matrix& grad() const;
  Matrix& mutable_grad();
  bool has_grad() const;
  bool requires_grad() const;

  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

  /// Back-propagates from a 1x1 tensor, accumulating into leaf gradients.
  void backward() const;
  void zero_grad() const;
  /// Same value, cut from the tape.
  Tensor detach() const;

  /// Used by op implementations.
  static Tensor make_result(Matrix value, std::vector<Tensor> inputs,
                            std::function<void(const Matrix& grad_out,
                                               std::span<Tensor> inputs)> backward_fn);
  void accumulate_grad(const Matrix& g) const;

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

/// Disables graph recording in its scope (evaluation).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

// Slopes of the randomized leaky ReLU. Equal bounds give a deterministic
// leaky ReLU; bounds (1, 1) make it the identity.
struct RReLUBounds {
  double lower = 1.0 / 8.0;
  double upper = 1.0 / 3.0;
};

/// Per-forward settings shared by every layer.
struct ForwardContext {
  bool training = false;
  double dropout = 0.0;
  RReLUBounds rrelu{};
  Rng* rng = nullptr;
};

namespace ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
/// 1 - a
Tensor one_minus(const Tensor& a);
Tensor matmul(const Tensor& a, const Tensor& b);
/// x * w^T, i.e. w applied to every row of x. w is [out x in].
Tensor linear(const Tensor& x, const Tensor& w);
/// Adds a [1 x cols] row to every row.
Tensor add_row(const Tensor& x, const Tensor& row);
/// Multiplies row i of x by column entry a(i, 0).
Tensor mul_rows(const Tensor& x, const Tensor& a);
/// Multiplies row i of x by the constant w[i].
Tensor scale_rows(const Tensor& x, const Vector& w);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& x, Eigen::Index begin, Eigen::Index count);
Tensor gather_rows(const Tensor& x, std::span<const int> index);
Tensor scatter_add_rows(const Tensor& x, std::span<const int> index, Eigen::Index out_rows);
/// Row i from a where keep[i] is true, else from b.
Tensor select_rows(const std::vector<bool>& keep, const Tensor& a, const Tensor& b);
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);
/// Mean of equally shaped tensors.
Tensor mean_of(const std::vector<Tensor>& xs);

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sin(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);
/// Randomized leaky ReLU: negative-side slope drawn from U(lower, upper)
/// per element when training, fixed to their mean otherwise.
Tensor rrelu(const Tensor& x, const ForwardContext& ctx);
/// Inverted dropout; identity when not training or p == 0.
Tensor dropout(const Tensor& x, double p, const ForwardContext& ctx);
Tensor normalize_rows(const Tensor& x);

/// Softmax of a [n x 1] score column within groups given by segment[i].
Tensor segment_softmax(const Tensor& scores, std::span<const int> segment,
                       Eigen::Index num_segments);
Tensor softmax_rows(const Tensor& logits);
/// Softmax restricted to entries with mask == 1; rows whose mask is empty
/// fall back to the unrestricted softmax.
Tensor masked_softmax_rows(const Tensor& logits, const Matrix& mask);
/// Element (i, index[i]) of every row, as a [n x 1] column.
Tensor pick(const Tensor& x, std::span<const int> index);
/// log(max(x, eps)).
Tensor log_clamped(const Tensor& x, double eps);

/// Same-padded 1-D convolution along the feature axis. Each row of x holds
/// `channels` stacked signals of length `length`; kernels is
/// [out_channels x channels*width] and bias [1 x out_channels]. The result
/// row is the out_channels feature maps concatenated ([n x out*length]).
Tensor conv1d_rows(const Tensor& x, const Tensor& kernels, const Tensor& bias, int channels,
                   int length);

}  // namespace ops

}  // namespace lms
