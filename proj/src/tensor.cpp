#include "piekd/tensor.hpp"

#include <cmath>

namespace piekd {

void Tensor::assert_finite(const char* context) const {
  double acc = 0.0;
  for (double v : data_) acc += std::fabs(v);
  if (!std::isfinite(acc)) {
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!std::isfinite(data_[i])) {
        fail(context, ": non-finite value ", data_[i], " at flat index ", i,
             " in tensor ", shape_str());
      }
    }
    fail(context, ": non-finite magnitude in tensor ", shape_str());
  }
}

}  // namespace piekd
