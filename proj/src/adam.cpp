#include "piekd/adam.hpp"

#include <cmath>

namespace piekd {

AdamState AdamState::for_params(std::span<Tensor* const> params, double lr) {
  AdamState st;
  st.lr = lr;
  for (const Tensor* p : params) {
    st.m.push_back(Tensor({p->rows(), p->cols()}));
    st.v.push_back(Tensor({p->rows(), p->cols()}));
  }
  return st;
}

void AdamState::apply(std::span<Tensor* const> params,
                      std::span<const Tensor* const> grads,
                      std::span<const std::string> names) {
  check(params.size() == m.size() && grads.size() == m.size(),
        "adam: expected ", m.size(), " parameters, got ", params.size(),
        " params / ", grads.size(), " grads");
  ++step_count;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    const auto name = [&] {
      return i < names.size() ? names[i] : ("param " + std::to_string(i));
    };
    check(p.same_shape(g) && p.same_shape(m[i]), "adam: shape mismatch for ",
          name(), ": ", p.shape_str(), " vs grad ", g.shape_str());

    const std::int64_t n = p.size();
    const double* pg = g.data();
    double acc = 0.0;
    for (std::int64_t j = 0; j < n; ++j) acc += std::fabs(pg[j]);
    if (!std::isfinite(acc)) {
      for (std::int64_t j = 0; j < n; ++j)
        if (!std::isfinite(pg[j]))
          fail("adam: non-finite gradient for ", name(), " at flat index ", j);
    }

    double* pp = p.data();
    double* pm = m[i].data();
    double* pv = v[i].data();
    for (std::int64_t j = 0; j < n; ++j) {
      const double gj = pg[j];
      pm[j] = beta1 * pm[j] + (1.0 - beta1) * gj;
      pv[j] = beta2 * pv[j] + (1.0 - beta2) * gj * gj;
      pp[j] -= lr * (pm[j] / bc1) / (std::sqrt(pv[j] / bc2) + eps);
    }
  }
}

void AdamState::reset() {
  step_count = 0;
  for (auto& t : m) t.fill(0.0);
  for (auto& t : v) t.fill(0.0);
}

}  // namespace piekd
