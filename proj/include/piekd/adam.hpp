#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "piekd/tensor.hpp"

namespace piekd {

// Bias-corrected Adam over a fixed parameter list. Moment tensors mirror the
// parameter shapes; step_count increments by one per apply.
struct AdamState {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step_count = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  static AdamState for_params(std::span<Tensor* const> params, double lr);

  void apply(std::span<Tensor* const> params,
             std::span<const Tensor* const> grads,
             std::span<const std::string> names = {});

  // Zero moments and step count (fresh optimizer over the same parameters).
  void reset();
};

}  // namespace piekd
