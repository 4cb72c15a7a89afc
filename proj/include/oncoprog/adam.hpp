#ifndef ONCOPROG_ADAM_HPP
#define ONCOPROG_ADAM_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "oncoprog/error.hpp"
#include "oncoprog/model.hpp"

namespace oncoprog {

struct adam_config {
  double beta1{0.9};
  double beta2{0.999};
  double epsilon{1e-8};
};

struct adam_state {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::size_t step{};
};

[[nodiscard]] inline auto
make_adam_state(const model_params &p) -> adam_state {
  adam_state s;
  for_each_tensor(p, [&s](auto, std::span<const double> t) {
    s.first_moment.emplace_back(t.size(), 0.0);
    s.second_moment.emplace_back(t.size(), 0.0);
  });
  return s;
}

// Elementwise bias-corrected update on one flat tensor.
inline void
adam_update(std::span<double> x, std::span<const double> grad, std::span<double> m,
            std::span<double> v, std::size_t step, double lr, const adam_config &cfg = {}) {
  if (x.size() != grad.size() || x.size() != m.size() || x.size() != v.size())
    throw error(errc::shape_mismatch, "Adam tensor lengths differ");
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < x.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    x[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.epsilon);
  }
}

inline void
adam_step(model_params &p, const model_grads &g, adam_state &s, double lr,
          const adam_config &cfg = {}) {
  std::vector<std::span<const double>> grads;
  for_each_tensor(g, [&grads](auto, std::span<const double> t) { grads.push_back(t); });
  if (grads.size() != s.first_moment.size())
    throw error(errc::shape_mismatch, "Adam state does not match parameters");
  ++s.step;
  std::size_t i = 0;
  for_each_tensor(p, [&](auto, std::span<double> t) {
    adam_update(t, grads[i], s.first_moment[i], s.second_moment[i], s.step, lr, cfg);
    ++i;
  });
}

}  // namespace oncoprog

#endif  // ONCOPROG_ADAM_HPP
