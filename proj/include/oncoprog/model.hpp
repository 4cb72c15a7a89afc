#ifndef ONCOPROG_MODEL_HPP
#define ONCOPROG_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "oncoprog/error.hpp"
#include "oncoprog/layers.hpp"
#include "oncoprog/matrix.hpp"
#include "oncoprog/preprocess.hpp"
#include "oncoprog/rng.hpp"

namespace oncoprog {

struct model_dims {
  std::size_t vocab{};
  std::size_t embedding{256};
  std::size_t hidden{64};  // per direction
  std::size_t dense{64};
  std::size_t classes{};

  auto
  operator==(const model_dims &) const -> bool = default;
};

// Embedding -> biLSTM -> dense + ReLU -> dense -> weighted softmax.
struct model_params {
  embedding_params embedding;
  lstm_params forward_lstm;
  lstm_params backward_lstm;
  dense_params dense1;  // 2h -> d, ReLU
  dense_params dense2;  // d -> K
  std::vector<double> class_weights;

  [[nodiscard]] auto
  dims() const -> model_dims {
    return {embedding.weight.rows(), embedding.weight.cols(), forward_lstm.hidden(),
            dense1.weight.cols(), dense2.weight.cols()};
  }

  auto
  operator==(const model_params &) const -> bool = default;
};

// Gradients share the parameter layout; class_weights is left empty.
using model_grads = model_params;

// Visits every trainable tensor in a fixed order. class_weights is not
// trainable and is skipped.
template <typename Params, typename F>
  requires std::same_as<std::remove_const_t<Params>, model_params>
void
for_each_tensor(Params &p, F &&fn) {
  fn(std::string_view{"embedding"}, p.embedding.weight.data());
  fn(std::string_view{"forward_lstm.input_weight"}, p.forward_lstm.input_weight.data());
  fn(std::string_view{"forward_lstm.recurrent_weight"}, p.forward_lstm.recurrent_weight.data());
  fn(std::string_view{"forward_lstm.bias"}, std::span(p.forward_lstm.bias));
  fn(std::string_view{"backward_lstm.input_weight"}, p.backward_lstm.input_weight.data());
  fn(std::string_view{"backward_lstm.recurrent_weight"}, p.backward_lstm.recurrent_weight.data());
  fn(std::string_view{"backward_lstm.bias"}, std::span(p.backward_lstm.bias));
  fn(std::string_view{"dense1.weight"}, p.dense1.weight.data());
  fn(std::string_view{"dense1.bias"}, std::span(p.dense1.bias));
  fn(std::string_view{"dense2.weight"}, p.dense2.weight.data());
  fn(std::string_view{"dense2.bias"}, std::span(p.dense2.bias));
}

[[nodiscard]] inline auto
zeros_like(const model_params &p) -> model_grads {
  const auto d = p.dims();
  auto lstm_zero = [](const lstm_params &l) {
    return lstm_params{matrix(l.input_weight.rows(), l.input_weight.cols()),
                       matrix(l.recurrent_weight.rows(), l.recurrent_weight.cols()),
                       std::vector<double>(l.bias.size(), 0.0)};
  };
  return model_grads{{matrix(d.vocab, d.embedding)},
                     lstm_zero(p.forward_lstm),
                     lstm_zero(p.backward_lstm),
                     {matrix(2 * d.hidden, d.dense), std::vector<double>(d.dense, 0.0)},
                     {matrix(d.dense, d.classes), std::vector<double>(d.classes, 0.0)},
                     {}};
}

inline void
validate(const model_params &p) {
  const auto d = p.dims();
  auto bad = [](const char *what) { throw error(errc::shape_mismatch, what); };
  if (d.vocab < mutation_vocabulary::first_gene || d.embedding == 0 || d.hidden == 0 ||
      d.dense == 0 || d.classes == 0)
    bad("model dimensions must be positive");
  for (const auto *l : {&p.forward_lstm, &p.backward_lstm}) {
    if (l->input_weight.rows() != d.embedding || l->input_weight.cols() != 4 * d.hidden ||
        l->recurrent_weight.rows() != d.hidden || l->recurrent_weight.cols() != 4 * d.hidden ||
        l->bias.size() != 4 * d.hidden)
      bad("LSTM shapes do not chain");
  }
  if (p.dense1.weight.rows() != 2 * d.hidden || p.dense1.bias.size() != d.dense)
    bad("dense1 shape does not chain");
  if (p.dense2.weight.rows() != d.dense || p.dense2.bias.size() != d.classes)
    bad("dense2 shape does not chain");
  if (p.class_weights.size() != d.classes)
    bad("class weight count differs from class count");
  for (double w : p.class_weights)
    if (!(w > 0.0))
      throw error(errc::non_positive_weight, "class weight " + std::to_string(w));
}

// Embeddings U(-0.05, 0.05) with the PAD row zeroed; LSTM and dense weights
// U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero except the forget gate at 1.
[[nodiscard]] inline auto
init_params(const model_dims &d, std::vector<double> class_weights, std::uint64_t seed)
  -> model_params {
  if (class_weights.size() != d.classes)
    throw error(errc::shape_mismatch, "class weight count differs from class count");
  rng gen(seed);
  auto uniform_fill = [&gen](matrix &m, double bound) {
    for (auto &v : m.data())
      v = gen.uniform(-bound, bound);
  };
  auto make_lstm = [&](std::size_t k, std::size_t h) {
    lstm_params l{matrix(k, 4 * h), matrix(h, 4 * h), std::vector<double>(4 * h, 0.0)};
    uniform_fill(l.input_weight, 1.0 / std::sqrt(static_cast<double>(k)));
    uniform_fill(l.recurrent_weight, 1.0 / std::sqrt(static_cast<double>(h)));
    std::fill_n(l.bias.begin() + static_cast<std::ptrdiff_t>(h), h, 1.0);
    return l;
  };
  auto make_dense = [&](std::size_t in, std::size_t out) {
    dense_params p{matrix(in, out), std::vector<double>(out, 0.0)};
    uniform_fill(p.weight, 1.0 / std::sqrt(static_cast<double>(in)));
    return p;
  };

  model_params p;
  p.embedding.weight = matrix(d.vocab, d.embedding);
  uniform_fill(p.embedding.weight, 0.05);
  std::ranges::fill(p.embedding.weight.row(mutation_vocabulary::pad), 0.0);
  p.forward_lstm = make_lstm(d.embedding, d.hidden);
  p.backward_lstm = make_lstm(d.embedding, d.hidden);
  p.dense1 = make_dense(2 * d.hidden, d.dense);
  p.dense2 = make_dense(d.dense, d.classes);
  p.class_weights = std::move(class_weights);
  validate(p);
  return p;
}

enum class softmax_mode {
  training,   // class weights applied inside the softmax
  inference,  // uniform weights
};

namespace detail {

struct forward_trace {
  matrix x;
  lstm_trace fwd;
  lstm_trace bwd;
  std::vector<double> pooled;
  std::vector<double> pre_relu;
  std::vector<double> hidden;
  std::vector<double> logits;
};

[[nodiscard]] inline auto
run_forward(std::span<const std::int32_t> tokens, const model_params &p) -> forward_trace {
  forward_trace tr;
  tr.x = embed(tokens, p.embedding);
  const auto length = effective_length(tokens);
  tr.fwd = lstm_run(tr.x, p.forward_lstm, false, length);
  tr.bwd = lstm_run(tr.x, p.backward_lstm, true, length);
  tr.pooled = pool(tr.fwd, tr.bwd);
  tr.pre_relu = dense(tr.pooled, p.dense1);
  tr.hidden = tr.pre_relu;
  for (auto &v : tr.hidden)
    v = std::max(v, 0.0);
  tr.logits = dense(tr.hidden, p.dense2);
  return tr;
}

}  // namespace detail

// Pre-softmax scores of the final dense layer.
[[nodiscard]] inline auto
logits(std::span<const std::int32_t> tokens, const model_params &p) -> std::vector<double> {
  return detail::run_forward(tokens, p).logits;
}

[[nodiscard]] inline auto
forward(std::span<const std::int32_t> tokens, const model_params &p,
        softmax_mode mode = softmax_mode::inference) -> std::vector<double> {
  const auto z = logits(tokens, p);
  if (mode == softmax_mode::training)
    return weighted_softmax(z, p.class_weights);
  const std::vector<double> ones(z.size(), 1.0);
  return weighted_softmax(z, ones);
}

struct example_ref {
  std::span<const std::int32_t> tokens;
  int label{};
};

struct loss_result {
  double loss{};
  model_grads grads;
};

// Mean cross-entropy of the class-weighted softmax over the batch, with exact
// gradients via backpropagation through time.
[[nodiscard]] inline auto
loss_and_grads(std::span<const example_ref> batch, const model_params &p) -> loss_result {
  if (batch.empty())
    throw error(errc::config_invalid, "empty batch");
  const auto d = p.dims();
  loss_result out{0.0, zeros_like(p)};
  auto &g = out.grads;
  const double scale = 1.0 / static_cast<double>(batch.size());

  std::vector<double> dz2(d.classes), dh(d.dense), dz1(d.dense);
  for (const auto &ex : batch) {
    if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= d.classes)
      throw error(errc::index_out_of_range, "label " + std::to_string(ex.label));
    const auto tr = detail::run_forward(ex.tokens, p);

    // log P_y = z_y w_y - logsumexp(z w)
    double m = -INFINITY;
    for (std::size_t i = 0; i < d.classes; ++i)
      m = std::max(m, tr.logits[i] * p.class_weights[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < d.classes; ++i)
      sum += std::exp(tr.logits[i] * p.class_weights[i] - m);
    const auto y = static_cast<std::size_t>(ex.label);
    out.loss -= (tr.logits[y] * p.class_weights[y] - m - std::log(sum)) * scale;

    for (std::size_t i = 0; i < d.classes; ++i) {
      const double prob = std::exp(tr.logits[i] * p.class_weights[i] - m) / sum;
      dz2[i] = scale * p.class_weights[i] * (prob - (i == y ? 1.0 : 0.0));
    }

    // dense2
    for (std::size_t j = 0; j < d.dense; ++j) {
      if (tr.hidden[j] != 0.0)
        axpy(tr.hidden[j], dz2, g.dense2.weight.row(j));
      dh[j] = dot(p.dense2.weight.row(j), dz2);
    }
    axpy(1.0, dz2, g.dense2.bias);

    // ReLU + dense1
    for (std::size_t j = 0; j < d.dense; ++j)
      dz1[j] = tr.pre_relu[j] > 0.0 ? dh[j] : 0.0;
    axpy(1.0, dz1, g.dense1.bias);
    matrix d_fwd(tr.x.rows(), d.hidden), d_bwd(tr.x.rows(), d.hidden);
    for (std::size_t i = 0; i < 2 * d.hidden; ++i) {
      if (tr.pooled[i] != 0.0)
        axpy(tr.pooled[i], dz1, g.dense1.weight.row(i));
      const double dp = dot(p.dense1.weight.row(i), dz1);
      if (i < d.hidden) {
        if (tr.fwd.length > 0)
          d_fwd(tr.fwd.length - 1, i) = dp;
      } else if (tr.bwd.length > 0) {
        d_bwd(0, i - d.hidden) = dp;
      }
    }

    const auto dx_f = lstm_backward(tr.x, p.forward_lstm, tr.fwd, d_fwd, g.forward_lstm);
    const auto dx_b = lstm_backward(tr.x, p.backward_lstm, tr.bwd, d_bwd, g.backward_lstm);
    for (std::size_t t = 0; t < tr.fwd.length; ++t) {
      const auto id = ex.tokens[t];
      if (id == mutation_vocabulary::pad)
        continue;
      auto row = g.embedding.weight.row(static_cast<std::size_t>(id));
      axpy(1.0, dx_f.row(t), row);
      axpy(1.0, dx_b.row(t), row);
    }
  }
  return out;
}

[[nodiscard]] inline auto
argmax(std::span<const double> v) -> std::size_t {
  return static_cast<std::size_t>(std::ranges::max_element(v) - v.begin());
}

}  // namespace oncoprog

#endif  // ONCOPROG_MODEL_HPP
