#include "lms/tensor.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace lms {

namespace detail {

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<Tensor> inputs;
  std::function<void(const Matrix&, std::span<Tensor>)> backward_fn;
};

}  // namespace detail

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_mode_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor::Tensor(Matrix value, bool requires_grad) : node_(std::make_shared<detail::Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Eigen::Index rows, Eigen::Index cols, bool requires_grad) {
  return Tensor(Matrix::Zero(rows, cols), requires_grad);
}

const Matrix& Tensor::value() const {
  assert(node_);
  return node_->value;
}

Matrix& Tensor::mutable_value() {
  assert(node_);
  return node_->value;
}

const Matrix& Tensor::grad() const { return node_->grad; }

Matrix& Tensor::mutable_grad() {
  if (node_->grad.size() == 0) node_->grad = Matrix::Zero(rows(), cols());
  return node_->grad;
}

bool Tensor::has_grad() const { return node_ && node_->grad.size() != 0; }

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::zero_grad() const {
  if (node_) node_->grad.resize(0, 0);
}

Tensor Tensor::detach() const { return Tensor(node_->value, false); }

void Tensor::accumulate_grad(const Matrix& g) const {
  if (!node_->requires_grad) return;
  if (node_->grad.size() == 0) {
    node_->grad = g;
  } else {
    node_->grad += g;
  }
}

Tensor Tensor::make_result(
    Matrix value, std::vector<Tensor> inputs,
    std::function<void(const Matrix&, std::span<Tensor>)> backward_fn) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  bool any = false;
  if (g_grad_enabled) {
    for (const auto& in : inputs) {
      if (in.requires_grad()) {
        any = true;
        break;
      }
    }
  }
  if (any) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

void Tensor::backward() const {
  if (!node_ || !node_->requires_grad) return;
  if (node_->value.size() != 1) throw std::logic_error("backward() needs a scalar tensor");

  // Iterative post-order DFS gives a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].node_.get();
      if (child->requires_grad && child->backward_fn && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->grad = Matrix::Ones(1, 1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->grad.size() == 0 || !node->backward_fn) continue;
    node->backward_fn(node->grad, node->inputs);
    // Intermediate gradients are no longer needed once propagated.
    if (node != node_.get()) node->grad.resize(0, 0);
  }
}

namespace ops {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

template <typename F, typename D>
Tensor unary(const Tensor& x, F f, D derivative) {
  Matrix y = x.value().unaryExpr(f);
  return Tensor::make_result(y, {x}, [derivative](const Matrix& g, std::span<Tensor> in) {
    in[0].accumulate_grad(g.cwiseProduct(in[0].value().unaryExpr(derivative)));
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  return Tensor::make_result(a.value() + b.value(), {a, b},
                             [](const Matrix& g, std::span<Tensor> in) {
                               in[0].accumulate_grad(g);
                               in[1].accumulate_grad(g);
                             });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  return Tensor::make_result(a.value() - b.value(), {a, b},
                             [](const Matrix& g, std::span<Tensor> in) {
                               in[0].accumulate_grad(g);
                               in[1].accumulate_grad(-g);
                             });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  return Tensor::make_result(a.value().cwiseProduct(b.value()), {a, b},
                             [](const Matrix& g, std::span<Tensor> in) {
                               in[0].accumulate_grad(g.cwiseProduct(in[1].value()));
                               in[1].accumulate_grad(g.cwiseProduct(in[0].value()));
                             });
}

Tensor scale(const Tensor& a, double c) {
  return Tensor::make_result(a.value() * c, {a}, [c](const Matrix& g, std::span<Tensor> in) {
    in[0].accumulate_grad(g * c);
  });
}

Tensor one_minus(const Tensor& a) {
  Matrix y = (1.0 - a.value().array()).matrix();
  return Tensor::make_result(std::move(y), {a}, [](const Matrix& g, std::span<Tensor> in) {
    in[0].accumulate_grad(-g);
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: shape mismatch");
  return Tensor::make_result(a.value() * b.value(), {a, b},
                             [](const Matrix& g, std::span<Tensor> in) {
                               if (in[0].requires_grad())
                                 in[0].accumulate_grad(g * in[1].value().transpose());
                               if (in[1].requires_grad())
                                 in[1].accumulate_grad(in[0].value().transpose() * g);
                             });
}

Tensor linear(const Tensor& x, const Tensor& w) {
  if (x.cols() != w.cols()) throw std::invalid_argument("linear: shape mismatch");
  return Tensor::make_result(x.value() * w.value().transpose(), {x, w},
                             [](const Matrix& g, std::span<Tensor> in) {
                               if (in[0].requires_grad()) in[0].accumulate_grad(g * in[1].value());
                               if (in[1].requires_grad())
                                 in[1].accumulate_grad(g.transpose() * in[0].value());
                             });
}

Tensor add_row(const Tensor& x, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != x.cols()) throw std::invalid_argument("add_row: shape");
  Matrix y = x.value().rowwise() + row.value().row(0);
  return Tensor::make_result(std::move(y), {x, row}, [](const Matrix& g, std::span<Tensor> in) {
    in[0].accumulate_grad(g);
    if (in[1].requires_grad()) in[1].accumulate_grad(g.colwise().sum());
  });
}

Tensor mul_rows(const Tensor& x, const Tensor& a) {
  if (a.cols() != 1 || a.rows() != x.rows()) throw std::invalid_argument("mul_rows: shape");
  Matrix y = x.value().array().colwise() * a.value().col(0).array();
  return Tensor::make_result(std::move(y), {x, a}, [](const Matrix& g, std::span<Tensor> in) {
    if (in[0].requires_grad()) {
      Matrix gx = g.array().colwise() * in[1].value().col(0).array();
      in[0].accumulate_grad(gx);
    }
    if (in[1].requires_grad()) {
      Matrix ga = g.cwiseProduct(in[0].value()).rowwise().sum();
      in[1].accumulate_grad(ga);
    }
  });
}

Tensor scale_rows(const Tensor& x, const Vector& w) {
  if (w.size() != x.rows()) throw std::invalid_argument("scale_rows: shape");
  Matrix y = x.value().array().colwise() * w.array();
  return Tensor::make_result(std::move(y), {x}, [w](const Matrix& g, std::span<Tensor> in) {
    Matrix gx = g.array().colwise() * w.array();
    in[0].accumulate_grad(gx);
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix y(rows, cols);
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    y.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  return Tensor::make_result(std::move(y), parts, [](const Matrix& g, std::span<Tensor> in) {
    Eigen::Index off = 0;
    for (auto& p : in) {
      if (p.requires_grad()) p.accumulate_grad(g.middleCols(off, p.cols()));
      off += p.cols();
    }
  });
}

Tensor slice_cols(const Tensor& x, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || begin + count > x.cols()) throw std::invalid_argument("slice_cols: range");
  Matrix y = x.value().middleCols(begin, count);
  return Tensor::make_result(std::move(y), {x},
                             [begin, count](const Matrix& g, std::span<Tensor> in) {
                               Matrix gx = Matrix::Zero(in[0].rows(), in[0].cols());
                               gx.middleCols(begin, count) = g;
                               in[0].accumulate_grad(gx);
                             });
}

Tensor gather_rows(const Tensor& x, std::span<const int> index) {
  Matrix y(static_cast<Eigen::Index>(index.size()), x.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    assert(index[i] >= 0 && index[i] < x.rows());
    y.row(static_cast<Eigen::Index>(i)) = x.value().row(index[i]);
  }
  std::vector<int> idx(index.begin(), index.end());
  return Tensor::make_result(std::move(y), {x},
                             [idx = std::move(idx)](const Matrix& g, std::span<Tensor> in) {
                               Matrix gx = Matrix::Zero(in[0].rows(), in[0].cols());
                               for (std::size_t i = 0; i < idx.size(); ++i)
                                 gx.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
                               in[0].accumulate_grad(gx);
                             });
}

Tensor scatter_add_rows(const Tensor& x, std::span<const int> index, Eigen::Index out_rows) {
  if (static_cast<Eigen::Index>(index.size()) != x.rows())
    throw std::invalid_argument("scatter_add_rows: index size");
  Matrix y = Matrix::Zero(out_rows, x.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    assert(index[i] >= 0 && index[i] < out_rows);
    y.row(index[i]) += x.value().row(static_cast<Eigen::Index>(i));
  }
  std::vector<int> idx(index.begin(), index.end());
  return Tensor::make_result(std::move(y), {x},
                             [idx = std::move(idx)](const Matrix& g, std::span<Tensor> in) {
                               Matrix gx(static_cast<Eigen::Index>(idx.size()), g.cols());
                               for (std::size_t i = 0; i < idx.size(); ++i)
                                 gx.row(static_cast<Eigen::Index>(i)) = g.row(idx[i]);
                               in[0].accumulate_grad(gx);
                             });
}

Tensor select_rows(const std::vector<bool>& keep, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "select_rows");
  if (static_cast<Eigen::Index>(keep.size()) != a.rows())
    throw std::invalid_argument("select_rows: mask size");
  Matrix y = b.value();
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    if (keep[static_cast<std::size_t>(i)]) y.row(i) = a.value().row(i);
  return Tensor::make_result(std::move(y), {a, b},
                             [keep](const Matrix& g, std::span<Tensor> in) {
                               Matrix ga = Matrix::Zero(g.rows(), g.cols());
                               Matrix gb = Matrix::Zero(g.rows(), g.cols());
                               for (Eigen::Index i = 0; i < g.rows(); ++i) {
                                 if (keep[static_cast<std::size_t>(i)])
                                   ga.row(i) = g.row(i);
                                 else
                                   gb.row(i) = g.row(i);
                               }
                               in[0].accumulate_grad(ga);
                               in[1].accumulate_grad(gb);
                             });
}

Tensor sum_all(const Tensor& x) {
  Matrix y(1, 1);
  y(0, 0) = x.value().sum();
  return Tensor::make_result(std::move(y), {x}, [](const Matrix& g, std::span<Tensor> in) {
    in[0].accumulate_grad(Matrix::Constant(in[0].rows(), in[0].cols(), g(0, 0)));
  });
}

Tensor mean_all(const Tensor& x) {
  const double n = static_cast<double>(x.value().size());
  if (n == 0) throw std::invalid_argument("mean_all: empty tensor");
  return scale(sum_all(x), 1.0 / n);
}

Tensor mean_of(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean_of: empty list");
  Matrix y = xs.front().value();
  for (std::size_t i = 1; i < xs.size(); ++i) {
    check_same_shape(xs.front(), xs[i], "mean_of");
    y += xs[i].value();
  }
  const double inv = 1.0 / static_cast<double>(xs.size());
  y *= inv;
  return Tensor::make_result(std::move(y), xs, [inv](const Matrix& g, std::span<Tensor> in) {
    const Matrix gi = g * inv;
    for (auto& t : in) t.accumulate_grad(gi);
  });
}

Tensor sigmoid(const Tensor& x) {
  Matrix y = x.value().unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  Matrix yc = y;
  return Tensor::make_result(std::move(y), {x},
                             [yc = std::move(yc)](const Matrix& g, std::span<Tensor> in) {
                               Matrix d = yc.array() * (1.0 - yc.array());
                               in[0].accumulate_grad(g.cwiseProduct(d));
                             });
}

Tensor tanh(const Tensor& x) {
  Matrix y = x.value().array().tanh();
  Matrix yc = y;
  return Tensor::make_result(std::move(y), {x},
                             [yc = std::move(yc)](const Matrix& g, std::span<Tensor> in) {
                               Matrix d = 1.0 - yc.array().square();
                               in[0].accumulate_grad(g.cwiseProduct(d));
                             });
}

Tensor sin(const Tensor& x) {
  return unary(
      x, [](double v) { return std::sin(v); }, [](double v) { return std::cos(v); });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, [](double v) { return v > 0 ? v : 0.0; }, [](double v) { return v > 0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  return unary(
      x, [slope](double v) { return v > 0 ? v : slope * v; },
      [slope](double v) { return v > 0 ? 1.0 : slope; });
}

Tensor rrelu(const Tensor& x, const ForwardContext& ctx) {
  const auto [lower, upper] = ctx.rrelu;
  Matrix slopes(x.rows(), x.cols());
  if (ctx.training && ctx.rng != nullptr && lower != upper) {
    std::uniform_real_distribution<double> dist(lower, upper);
    for (Eigen::Index i = 0; i < slopes.size(); ++i) slopes.data()[i] = dist(*ctx.rng);
  } else {
    slopes.setConstant(0.5 * (lower + upper));
  }
  for (Eigen::Index i = 0; i < slopes.size(); ++i)
    if (x.value().data()[i] >= 0) slopes.data()[i] = 1.0;
  Matrix y = x.value().cwiseProduct(slopes);
  return Tensor::make_result(std::move(y), {x},
                             [slopes = std::move(slopes)](const Matrix& g, std::span<Tensor> in) {
                               in[0].accumulate_grad(g.cwiseProduct(slopes));
                             });
}

Tensor dropout(const Tensor& x, double p, const ForwardContext& ctx) {
  if (!ctx.training || p <= 0.0 || ctx.rng == nullptr) return x;
  std::bernoulli_distribution keep(1.0 - p);
  Matrix mask(x.rows(), x.cols());
  const double s = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(*ctx.rng) ? s : 0.0;
  Matrix y = x.value().cwiseProduct(mask);
  return Tensor::make_result(std::move(y), {x},
                             [mask = std::move(mask)](const Matrix& g, std::span<Tensor> in) {
                               in[0].accumulate_grad(g.cwiseProduct(mask));
                             });
}

Tensor normalize_rows(const Tensor& x) {
  constexpr double eps = 1e-12;
  Vector norms = x.value().rowwise().norm().cwiseMax(eps);
  Matrix y = x.value().array().colwise() / norms.array();
  Matrix yc = y;
  return Tensor::make_result(
      std::move(y), {x},
      [yc = std::move(yc), norms = std::move(norms)](const Matrix& g, std::span<Tensor> in) {
        Vector dots = g.cwiseProduct(yc).rowwise().sum();
        Matrix gx = g - (yc.array().colwise() * dots.array()).matrix();
        gx.array().colwise() /= norms.array();
        in[0].accumulate_grad(gx);
      });
}

Tensor segment_softmax(const Tensor& scores, std::span<const int> segment,
                       Eigen::Index num_segments) {
  if (scores.cols() != 1 || scores.rows() != static_cast<Eigen::Index>(segment.size()))
    throw std::invalid_argument("segment_softmax: shape");
  const Eigen::Index n = scores.rows();
  Vector seg_max = Vector::Constant(num_segments, -std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < n; ++i)
    seg_max[segment[i]] = std::max(seg_max[segment[i]], scores.value()(i, 0));
  Vector seg_sum = Vector::Zero(num_segments);
  Matrix y(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i, 0) = std::exp(scores.value()(i, 0) - seg_max[segment[i]]);
    seg_sum[segment[i]] += y(i, 0);
  }
  for (Eigen::Index i = 0; i < n; ++i) y(i, 0) /= seg_sum[segment[i]];
  std::vector<int> seg(segment.begin(), segment.end());
  Matrix yc = y;
  return Tensor::make_result(
      std::move(y), {scores},
      [seg = std::move(seg), yc = std::move(yc), num_segments](const Matrix& g,
                                                                std::span<Tensor> in) {
        Vector dot = Vector::Zero(num_segments);
        for (std::size_t i = 0; i < seg.size(); ++i) {
          const auto ii = static_cast<Eigen::Index>(i);
          dot[seg[i]] += g(ii, 0) * yc(ii, 0);
        }
        Matrix gx(yc.rows(), 1);
        for (std::size_t i = 0; i < seg.size(); ++i) {
          const auto ii = static_cast<Eigen::Index>(i);
          gx(ii, 0) = yc(ii, 0) * (g(ii, 0) - dot[seg[i]]);
        }
        in[0].accumulate_grad(gx);
      });
}

namespace {

Matrix softmax_backward(const Matrix& y, const Matrix& g) {
  Vector dots = g.cwiseProduct(y).rowwise().sum();
  return y.cwiseProduct((g.colwise() - dots));
}

}  // namespace

Tensor softmax_rows(const Tensor& logits) {
  Matrix y = logits.value();
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const double m = y.row(i).maxCoeff();
    y.row(i) = (y.row(i).array() - m).exp();
    y.row(i) /= y.row(i).sum();
  }
  Matrix yc = y;
  return Tensor::make_result(std::move(y), {logits},
                             [yc = std::move(yc)](const Matrix& g, std::span<Tensor> in) {
                               in[0].accumulate_grad(softmax_backward(yc, g));
                             });
}

Tensor masked_softmax_rows(const Tensor& logits, const Matrix& mask) {
  if (mask.rows() != logits.rows() || mask.cols() != logits.cols())
    throw std::invalid_argument("masked_softmax_rows: mask shape");
  Matrix y(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const auto z = logits.value().row(i);
    const auto m = mask.row(i);
    const bool any = (m.array() != 0.0).any();
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < z.size(); ++j)
      if (!any || m(j) != 0.0) best = std::max(best, z(j));
    double total = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      const double e = (!any || m(j) != 0.0) ? std::exp(z(j) - best) : 0.0;
      y(i, j) = e;
      total += e;
    }
    y.row(i) /= total;
  }
  Matrix yc = y;
  return Tensor::make_result(std::move(y), {logits},
                             [yc = std::move(yc)](const Matrix& g, std::span<Tensor> in) {
                               in[0].accumulate_grad(softmax_backward(yc, g));
                             });
}

Tensor pick(const Tensor& x, std::span<const int> index) {
  if (static_cast<Eigen::Index>(index.size()) != x.rows())
    throw std::invalid_argument("pick: index size");
  Matrix y(x.rows(), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) y(i, 0) = x.value()(i, index[i]);
  std::vector<int> idx(index.begin(), index.end());
  return Tensor::make_result(std::move(y), {x},
                             [idx = std::move(idx)](const Matrix& g, std::span<Tensor> in) {
                               Matrix gx = Matrix::Zero(in[0].rows(), in[0].cols());
                               for (std::size_t i = 0; i < idx.size(); ++i) {
                                 const auto ii = static_cast<Eigen::Index>(i);
                                 gx(ii, idx[i]) = g(ii, 0);
                               }
                               in[0].accumulate_grad(gx);
                             });
}

Tensor log_clamped(const Tensor& x, double eps) {
  return unary(
      x, [eps](double v) { return std::log(std::max(v, eps)); },
      [eps](double v) { return v > eps ? 1.0 / v : 0.0; });
}

Tensor conv1d_rows(const Tensor& x, const Tensor& kernels, const Tensor& bias, int channels,
                   int length) {
  const Eigen::Index n = x.rows();
  const Eigen::Index out_channels = kernels.rows();
  if (x.cols() != static_cast<Eigen::Index>(channels) * length)
    throw std::invalid_argument("conv1d_rows: input width");
  if (kernels.cols() % channels != 0) throw std::invalid_argument("conv1d_rows: kernel width");
  const int width = static_cast<int>(kernels.cols() / channels);
  if (width % 2 == 0) throw std::invalid_argument("conv1d_rows: kernel width must be odd");
  if (bias.rows() != 1 || bias.cols() != out_channels)
    throw std::invalid_argument("conv1d_rows: bias shape");
  const int pad = width / 2;

  // im2col: one row per (input row, position), one column per (channel, tap).
  Matrix columns = Matrix::Zero(n * length, static_cast<Eigen::Index>(channels) * width);
  const Matrix& xv = x.value();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int p = 0; p < length; ++p) {
      auto dst = columns.row(i * length + p);
      for (int c = 0; c < channels; ++c) {
        for (int j = 0; j < width; ++j) {
          const int q = p + j - pad;
          if (q >= 0 && q < length) dst(c * width + j) = xv(i, c * length + q);
        }
      }
    }
  }
  Matrix maps = columns * kernels.value().transpose();
  maps.rowwise() += bias.value().row(0);

  Matrix y(n, out_channels * length);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int p = 0; p < length; ++p)
      for (Eigen::Index c = 0; c < out_channels; ++c) y(i, c * length + p) = maps(i * length + p, c);

  return Tensor::make_result(
      std::move(y), {x, kernels, bias},
      [columns = std::move(columns), channels, length, width, pad, n,
       out_channels](const Matrix& g, std::span<Tensor> in) {
        Matrix dmaps(n * length, out_channels);
        for (Eigen::Index i = 0; i < n; ++i)
          for (int p = 0; p < length; ++p)
            for (Eigen::Index c = 0; c < out_channels; ++c)
              dmaps(i * length + p, c) = g(i, c * length + p);
        if (in[1].requires_grad()) in[1].accumulate_grad(dmaps.transpose() * columns);
        if (in[2].requires_grad()) in[2].accumulate_grad(dmaps.colwise().sum());
        if (in[0].requires_grad()) {
          Matrix dcols = dmaps * in[1].value();
          Matrix gx = Matrix::Zero(n, static_cast<Eigen::Index>(channels) * length);
          for (Eigen::Index i = 0; i < n; ++i) {
            for (int p = 0; p < length; ++p) {
              const auto src = dcols.row(i * length + p);
              for (int c = 0; c < channels; ++c) {
                for (int j = 0; j < width; ++j) {
                  const int q = p + j - pad;
                  if (q >= 0 && q < length) gx(i, c * length + q) += src(c * width + j);
                }
              }
            }
          }
          in[0].accumulate_grad(gx);
        }
      });
}

}  // namespace ops

}  // namespace lms
