#pragma once

// Central finite-difference gradient checker for the tape engine.

#include <cmath>
#include <functional>
#include <vector>

#include "twix/tensor.hpp"

namespace twix::oracle {

struct GradCheckResult {
  double max_rel_err = 0.0;
  long checked = 0;
};

// Compares the analytic gradient of `forward()` (a scalar-producing closure
// re-evaluating the computation from the current parameter values) against
// central differences for every element of every parameter. The error is
// |analytic - numeric| / max(|analytic|, |numeric|, floor): gradients below
// `floor` are held to the absolute tolerance floor * rtol, which keeps the
// check meaningful where finite differences are truncation-noise bound.
inline GradCheckResult gradient_check(const std::function<Tensor()>& forward,
                                      std::vector<Tensor>& params, Tape<double>& tape,
                                      double step = 1e-5, double floor = 1e-4) {
  for (Tensor& p : params) p.zero_grad();
  tape.clear();
  Tensor loss = forward();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (Tensor& p : params) analytic.push_back(p.grad());
  tape.clear();

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    std::vector<double>& v = params[pi].values_mut();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double keep = v[i];
      v[i] = keep + step;
      const double up = forward().value();
      tape.clear();
      v[i] = keep - step;
      const double down = forward().value();
      tape.clear();
      v[i] = keep;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[pi][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      result.max_rel_err = std::max(result.max_rel_err, std::abs(a - numeric) / denom);
      ++result.checked;
    }
  }
  return result;
}

}  // namespace twix::oracle
