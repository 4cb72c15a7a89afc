#ifndef ONCOPROG_LAYERS_HPP
#define ONCOPROG_LAYERS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "oncoprog/error.hpp"
#include "oncoprog/matrix.hpp"
#include "oncoprog/preprocess.hpp"

namespace oncoprog {

struct embedding_params {
  matrix weight;  // vocabulary size x embedding width; row PAD stays zero

  auto
  operator==(const embedding_params &) const -> bool = default;
};

// Gate blocks are stored side by side in the order input, forget, cell
// candidate, output: columns [0,h), [h,2h), [2h,3h), [3h,4h).
struct lstm_params {
  matrix input_weight;      // k x 4h
  matrix recurrent_weight;  // h x 4h
  std::vector<double> bias; // 4h

  [[nodiscard]] auto
  input_width() const noexcept -> std::size_t {
    return input_weight.rows();
  }
  [[nodiscard]] auto
  hidden() const noexcept -> std::size_t {
    return recurrent_weight.rows();
  }

  auto
  operator==(const lstm_params &) const -> bool = default;
};

struct dense_params {
  matrix weight;  // in x out
  std::vector<double> bias;

  auto
  operator==(const dense_params &) const -> bool = default;
};

[[nodiscard]] inline auto
sigmoid(double x) noexcept -> double {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// One-hot times weight is a row select.
[[nodiscard]] inline auto
embed(std::span<const std::int32_t> token_ids, const embedding_params &p) -> matrix {
  const auto n = p.weight.rows();
  matrix out(token_ids.size(), p.weight.cols());
  for (std::size_t t = 0; t < token_ids.size(); ++t) {
    const auto id = token_ids[t];
    if (id < 0 || static_cast<std::size_t>(id) >= n)
      throw error(errc::index_out_of_range,
                  "token " + std::to_string(id) + " outside vocabulary of " + std::to_string(n));
    std::ranges::copy(p.weight.row(static_cast<std::size_t>(id)), out.row(t).begin());
  }
  return out;
}

// Number of timesteps up to and including the last non-PAD token.
[[nodiscard]] inline auto
effective_length(std::span<const std::int32_t> tokens) noexcept -> std::size_t {
  std::size_t n = tokens.size();
  while (n > 0 && tokens[n - 1] == mutation_vocabulary::pad)
    --n;
  return n;
}

// Everything backpropagation needs from one directional pass. Rows are
// indexed by input timestep regardless of direction; rows at or past
// `length` are zero.
struct lstm_trace {
  matrix hidden;  // T x h
  matrix cell;    // T x h
  matrix gates;   // T x 4h, post-activation
  std::size_t length{};
  bool reversed{};
};

[[nodiscard]] inline auto
lstm_run(const matrix &x, const lstm_params &p, bool reversed, std::size_t length)
  -> lstm_trace {
  const auto k = p.input_width();
  const auto h = p.hidden();
  if (x.cols() != k || p.input_weight.cols() != 4 * h || p.recurrent_weight.cols() != 4 * h ||
      p.bias.size() != 4 * h)
    throw error(errc::shape_mismatch, "LSTM input or parameter shapes disagree");
  length = std::min(length, x.rows());

  lstm_trace tr{matrix(x.rows(), h), matrix(x.rows(), h), matrix(x.rows(), 4 * h), length,
                reversed};
  std::vector<double> a(4 * h);
  std::vector<double> zero(h, 0.0);
  for (std::size_t s = 0; s < length; ++s) {
    const std::size_t t = reversed ? length - 1 - s : s;
    const std::size_t prev = reversed ? t + 1 : t - 1;
    std::span<const double> h_prev = s == 0 ? std::span<const double>(zero) : tr.hidden.row(prev);
    std::span<const double> c_prev = s == 0 ? std::span<const double>(zero) : tr.cell.row(prev);

    std::ranges::copy(p.bias, a.begin());
    const auto xt = x.row(t);
    for (std::size_t i = 0; i < k; ++i)
      if (xt[i] != 0.0)
        axpy(xt[i], p.input_weight.row(i), a);
    for (std::size_t j = 0; j < h; ++j)
      if (h_prev[j] != 0.0)
        axpy(h_prev[j], p.recurrent_weight.row(j), a);

    auto g = tr.gates.row(t);
    auto c = tr.cell.row(t);
    auto hs = tr.hidden.row(t);
    for (std::size_t j = 0; j < h; ++j) {
      const double ig = sigmoid(a[j]);
      const double fg = sigmoid(a[h + j]);
      const double cg = std::tanh(a[2 * h + j]);
      const double og = sigmoid(a[3 * h + j]);
      g[j] = ig;
      g[h + j] = fg;
      g[2 * h + j] = cg;
      g[3 * h + j] = og;
      c[j] = fg * c_prev[j] + ig * cg;
      hs[j] = og * std::tanh(c[j]);
    }
  }
  return tr;
}

// Hidden states, row t aligned with input row t for both directions.
[[nodiscard]] inline auto
lstm_forward(const matrix &x, const lstm_params &p, bool reversed) -> matrix {
  return lstm_run(x, p, reversed, x.rows()).hidden;
}

// Backpropagation through time. `d_hidden` is the loss gradient with respect
// to every emitted hidden state; parameter gradients accumulate into `grad`
// and the gradient with respect to the input rows is returned.
[[nodiscard]] inline auto
lstm_backward(const matrix &x, const lstm_params &p, const lstm_trace &tr,
              const matrix &d_hidden, lstm_params &grad) -> matrix {
  const auto k = p.input_width();
  const auto h = p.hidden();
  matrix dx(x.rows(), k);
  std::vector<double> dh_next(h, 0.0), dc_next(h, 0.0), dh(h), da(4 * h);
  std::vector<double> zero(h, 0.0);

  for (std::size_t s = tr.length; s-- > 0;) {
    const std::size_t t = tr.reversed ? tr.length - 1 - s : s;
    const std::size_t prev = tr.reversed ? t + 1 : t - 1;
    std::span<const double> h_prev = s == 0 ? std::span<const double>(zero) : tr.hidden.row(prev);
    std::span<const double> c_prev = s == 0 ? std::span<const double>(zero) : tr.cell.row(prev);
    const auto g = tr.gates.row(t);
    const auto c = tr.cell.row(t);
    const auto dht = d_hidden.row(t);

    for (std::size_t j = 0; j < h; ++j) {
      const double ig = g[j], fg = g[h + j], cg = g[2 * h + j], og = g[3 * h + j];
      const double tc = std::tanh(c[j]);
      const double dhj = dht[j] + dh_next[j];
      const double dc = dhj * og * (1.0 - tc * tc) + dc_next[j];
      da[j] = dc * cg * ig * (1.0 - ig);
      da[h + j] = dc * c_prev[j] * fg * (1.0 - fg);
      da[2 * h + j] = dc * ig * (1.0 - cg * cg);
      da[3 * h + j] = dhj * tc * og * (1.0 - og);
      dc_next[j] = dc * fg;
    }

    const auto xt = x.row(t);
    for (std::size_t i = 0; i < k; ++i)
      if (xt[i] != 0.0)
        axpy(xt[i], da, grad.input_weight.row(i));
    for (std::size_t j = 0; j < h; ++j)
      if (h_prev[j] != 0.0)
        axpy(h_prev[j], da, grad.recurrent_weight.row(j));
    axpy(1.0, da, grad.bias);

    auto dxt = dx.row(t);
    for (std::size_t i = 0; i < k; ++i)
      dxt[i] = dot(p.input_weight.row(i), da);
    for (std::size_t j = 0; j < h; ++j)
      dh_next[j] = dot(p.recurrent_weight.row(j), da);
  }
  return dx;
}

struct bilstm_output {
  matrix states;               // T x 2h, [forward | backward]
  std::vector<double> pooled;  // forward at last non-PAD step, backward at step 0
};

[[nodiscard]] inline auto
pool(const lstm_trace &fwd, const lstm_trace &bwd) -> std::vector<double> {
  const auto h = fwd.hidden.cols();
  std::vector<double> pooled(h + bwd.hidden.cols(), 0.0);
  if (fwd.length > 0)
    std::ranges::copy(fwd.hidden.row(fwd.length - 1), pooled.begin());
  if (bwd.length > 0)
    std::ranges::copy(bwd.hidden.row(0), pooled.begin() + static_cast<std::ptrdiff_t>(h));
  return pooled;
}

// Both directions run over the first `length` rows only, so trailing PAD
// never reaches either state.
[[nodiscard]] inline auto
bilstm(const matrix &x, const lstm_params &fwd, const lstm_params &bwd, std::size_t length)
  -> bilstm_output {
  if (fwd.input_width() != bwd.input_width())
    throw error(errc::shape_mismatch, "forward and backward LSTM input widths differ");
  const auto tf = lstm_run(x, fwd, false, length);
  const auto tb = lstm_run(x, bwd, true, length);
  const auto hf = fwd.hidden();
  const auto hb = bwd.hidden();
  bilstm_output out{matrix(x.rows(), hf + hb), pool(tf, tb)};
  for (std::size_t t = 0; t < x.rows(); ++t) {
    std::ranges::copy(tf.hidden.row(t), out.states.row(t).begin());
    std::ranges::copy(tb.hidden.row(t), out.states.row(t).begin() + static_cast<std::ptrdiff_t>(hf));
  }
  return out;
}

[[nodiscard]] inline auto
bilstm(const matrix &x, const lstm_params &fwd, const lstm_params &bwd) -> bilstm_output {
  return bilstm(x, fwd, bwd, x.rows());
}

// y = x W + b
[[nodiscard]] inline auto
dense(std::span<const double> x, const dense_params &p) -> std::vector<double> {
  if (x.size() != p.weight.rows() || p.bias.size() != p.weight.cols())
    throw error(errc::shape_mismatch, "dense layer input does not match weight rows");
  std::vector<double> y(p.bias);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != 0.0)
      axpy(x[i], p.weight.row(i), y);
  return y;
}

// P_i = exp(v_i w_i) / sum_j exp(v_j w_j), shifted by max_j v_j w_j.
[[nodiscard]] inline auto
weighted_softmax(std::span<const double> v, std::span<const double> w) -> std::vector<double> {
  if (v.size() != w.size())
    throw error(errc::shape_mismatch, "logit and weight lengths differ");
  std::vector<double> z(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(w[i] > 0.0))
      throw error(errc::non_positive_weight, "class weight " + std::to_string(w[i]));
    z[i] = v[i] * w[i];
  }
  const double m = *std::ranges::max_element(z);
  double sum = 0.0;
  for (auto &zi : z) {
    zi = std::exp(zi - m);
    sum += zi;
  }
  for (auto &zi : z)
    zi /= sum;
  return z;
}

}  // namespace oncoprog

#endif  // ONCOPROG_LAYERS_HPP
