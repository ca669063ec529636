#pragma once

#include "lms/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace gradcheck {

struct Result {
  double max_relative_error = 0.0;
  std::string worst;
  std::size_t checked = 0;
};

// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true
// gradient is zero from dividing rounding noise by itself.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Central differences on every entry of every named parameter against the
// tape's gradient of `loss()`.
inline Result check(const std::function<lms::Tensor()>& loss,
                    const std::vector<std::pair<std::string, lms::Tensor*>>& params,
                    double step = 1e-5) {
  for (auto& [name, p] : params) p->zero_grad();
  loss().backward();
  std::vector<lms::Matrix> analytic;
  for (auto& [name, p] : params)
    analytic.push_back(p->has_grad() ? p->grad() : lms::Matrix::Zero(p->rows(), p->cols()));

  Result result;
  lms::NoGradGuard no_grad;
  for (std::size_t k = 0; k < params.size(); ++k) {
    lms::Matrix& value = params[k].second->mutable_value();
    for (Eigen::Index i = 0; i < value.rows(); ++i) {
      for (Eigen::Index j = 0; j < value.cols(); ++j) {
        const double saved = value(i, j);
        value(i, j) = saved + step;
        const double up = loss().value()(0, 0);
        value(i, j) = saved - step;
        const double down = loss().value()(0, 0);
        value(i, j) = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double err = relative_error(analytic[k](i, j), numeric);
        ++result.checked;
        if (err > result.max_relative_error) {
          result.max_relative_error = err;
          result.worst = params[k].first + "(" + std::to_string(i) + "," + std::to_string(j) + ")";
        }
      }
    }
  }
  return result;
}

}  // namespace gradcheck
