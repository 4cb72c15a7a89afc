#ifndef ONCOPROG_TESTS_TINY_MODEL_HPP
#define ONCOPROG_TESTS_TINY_MODEL_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "oncoprog/model.hpp"
#include "oncoprog/rng.hpp"
#include "oracles.hpp"

namespace testing_support {

// Random parameters of the given shape with every tensor (biases included)
// drawn from U(-scale, scale); the PAD embedding row stays zero.
inline auto
random_model(const oncoprog::model_dims &d, oncoprog::rng &gen, double scale = 0.5)
  -> oncoprog::model_params {
  std::vector<double> weights;
  for (std::size_t i = 0; i < d.classes; ++i)
    weights.push_back(gen.uniform(0.2, 3.0));
  auto p = oncoprog::init_params(d, weights, gen.below(1u << 30));
  oncoprog::for_each_tensor(p, [&](auto, std::span<double> t) {
    for (auto &v : t)
      v = gen.uniform(-scale, scale);
  });
  std::ranges::fill(p.embedding.weight.row(oncoprog::mutation_vocabulary::pad), 0.0);
  return p;
}

// Token ids in [1, vocab) followed by optional trailing PAD.
inline auto
random_tokens(oncoprog::rng &gen, std::size_t vocab, std::size_t len, std::size_t pad)
  -> std::vector<std::int32_t> {
  std::vector<std::int32_t> out;
  for (std::size_t t = 0; t < len; ++t)
    out.push_back(static_cast<std::int32_t>(1 + gen.below(vocab - 1)));
  out.resize(len + pad, oncoprog::mutation_vocabulary::pad);
  return out;
}

struct gradcheck_result {
  std::size_t checked{};
  std::size_t failures{};
  double worst_relative{};
};

// Central differences of the oracle loss against the analytic gradients.
// Passing means |a - n| <= abs_floor or |a - n| / max(|a|, |n|) <= rel_tol.
inline auto
gradient_check(const oncoprog::model_params &p,
               const std::vector<std::pair<std::vector<std::int32_t>, int>> &batch,
               double eps = 1e-5, double rel_tol = 1e-4, double abs_floor = 1e-7)
  -> gradcheck_result {
  std::vector<oncoprog::example_ref> refs;
  for (const auto &[tokens, label] : batch)
    refs.push_back({tokens, label});
  const auto analytic = oncoprog::loss_and_grads(refs, p).grads;

  std::vector<std::vector<double>> flat;
  oncoprog::for_each_tensor(analytic, [&](auto, std::span<const double> t) {
    flat.emplace_back(t.begin(), t.end());
  });

  gradcheck_result r;
  auto work = p;
  std::size_t tensor = 0;
  oncoprog::for_each_tensor(work, [&](auto, std::span<double> t) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + eps;
      const double up = oracle::batch_loss(batch, work);
      t[i] = saved - eps;
      const double down = oracle::batch_loss(batch, work);
      t[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = flat[tensor][i];
      const double diff = std::abs(a - numeric);
      const double scale = std::max(std::abs(a), std::abs(numeric));
      const double rel = scale > 0.0 ? diff / scale : 0.0;
      ++r.checked;
      if (scale > abs_floor)
        r.worst_relative = std::max(r.worst_relative, rel);
      if (diff > abs_floor && rel > rel_tol)
        ++r.failures;
    }
    ++tensor;
  });
  return r;
}

}  // namespace testing_support

#endif  // ONCOPROG_TESTS_TINY_MODEL_HPP
