#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "piekd/mlp.hpp"
#include "piekd/rng.hpp"
#include "piekd/tensor.hpp"

namespace piekd::testing {

// Central finite difference of a scalar function with respect to one entry
// of a parameter tensor. Restores the entry afterwards.
inline double central_fd(Tensor& param, std::int64_t flat_index, double h,
                         const std::function<double()>& eval) {
  const double saved = param.at(flat_index);
  param.at(flat_index) = saved + h;
  const double hi = eval();
  param.at(flat_index) = saved - h;
  const double lo = eval();
  param.at(flat_index) = saved;
  return (hi - lo) / (2.0 * h);
}

// max over all parameter entries of |adjoint - fd| / max(|fd|, floor)
inline double max_rel_grad_error(Mlp& net,
                                 const std::function<double()>& eval,
                                 const std::vector<Tensor>& adjoints,
                                 double h = 1e-5, double floor = 1e-3) {
  auto params = net.params();
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::int64_t j = 0; j < params[p]->size(); ++j) {
      const double fd = central_fd(*params[p], j, h, eval);
      const double ad = adjoints[p].at(j);
      const double err = std::fabs(ad - fd) / std::max(std::fabs(fd), floor);
      if (err > worst) worst = err;
    }
  }
  return worst;
}

inline Tensor random_tensor(std::vector<std::int64_t> shape, Rng& rng,
                            double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t.at(i) = rng.uniform(lo, hi);
  return t;
}

// Closed-form KL between diagonal Gaussians given mean/log-std rows.
inline double diag_gauss_kl(const std::vector<double>& mu_p,
                            const std::vector<double>& ls_p,
                            const std::vector<double>& mu_q,
                            const std::vector<double>& ls_q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < mu_p.size(); ++i) {
    const double vp = std::exp(2.0 * ls_p[i]);
    const double vq = std::exp(2.0 * ls_q[i]);
    const double d = mu_p[i] - mu_q[i];
    kl += ls_q[i] - ls_p[i] + (vp + d * d) / (2.0 * vq) - 0.5;
  }
  return kl;
}

}  // namespace piekd::testing
