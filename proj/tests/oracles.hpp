// Independent reference implementations used only by tests. None of these
// call into the library code paths they check.

#ifndef ONCOPROG_TESTS_ORACLES_HPP
#define ONCOPROG_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "oncoprog/cohort.hpp"
#include "oncoprog/model.hpp"
#include "oncoprog/preprocess.hpp"

namespace oracle {

using counts = std::map<std::string, std::size_t>;

// Sorted (count desc, gene asc) via an explicit key instead of a stable sort.
inline auto
top(const counts &c, std::size_t x) -> std::vector<std::string> {
  std::vector<std::pair<long long, std::string>> keyed;
  for (const auto &[g, n] : c)
    keyed.emplace_back(-static_cast<long long>(n), g);
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < keyed.size() && i < x; ++i)
    out.push_back(keyed[i].second);
  return out;
}

// Literal evaluation of S = { S_x, ..., S_{x,i} - (S_{x,i} ∩ (S_x ∪ ⋃_{j<i} S_{x,j})) }.
inline auto
significant_set(const counts &overall, const std::map<int, counts> &per_stage, std::size_t x)
  -> std::set<std::string> {
  const auto sx_list = top(overall, x);
  const std::set<std::string> sx(sx_list.begin(), sx_list.end());
  std::set<std::string> result = sx;
  std::vector<std::set<std::string>> stage_sets;
  for (const auto &[stage, c] : per_stage) {
    const auto l = top(c, x);
    stage_sets.emplace_back(l.begin(), l.end());
  }
  for (std::size_t i = 0; i < stage_sets.size(); ++i) {
    std::set<std::string> earlier = sx;
    for (std::size_t j = 0; j < i; ++j)
      earlier.insert(stage_sets[j].begin(), stage_sets[j].end());
    std::set<std::string> overlap;
    std::set_intersection(stage_sets[i].begin(), stage_sets[i].end(), earlier.begin(),
                          earlier.end(), std::inserter(overlap, overlap.end()));
    std::set<std::string> fresh;
    std::set_difference(stage_sets[i].begin(), stage_sets[i].end(), overlap.begin(),
                        overlap.end(), std::inserter(fresh, fresh.end()));
    result.insert(fresh.begin(), fresh.end());
  }
  return result;
}

struct recount {
  counts overall;
  std::map<int, counts> per_stage;
  std::map<int, std::size_t> stage_sizes;
};

// Quadratic recount: for every (patient, gene) pair, scan the patient's list.
inline auto
recount_frequencies(const oncoprog::cohort &c) -> recount {
  recount r;
  std::set<std::string> universe;
  for (const auto &p : c.patients)
    universe.insert(p.genes.begin(), p.genes.end());
  for (const auto &p : c.patients) {
    r.stage_sizes[p.stage] += 1;
    for (const auto &g : universe) {
      const bool has = std::find(p.genes.begin(), p.genes.end(), g) != p.genes.end();
      if (has) {
        r.overall[g] += 1;
        r.per_stage[p.stage][g] += 1;
      }
    }
  }
  return r;
}

// Mann-Whitney statistic over all positive/negative pairs, ties counted 1/2.
inline auto
mann_whitney_auc(const std::vector<double> &scores, const std::vector<bool> &labels) -> double {
  double concordant = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i])
      continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j])
        continue;
      ++pairs;
      if (scores[i] > scores[j])
        concordant += 1.0;
      else if (scores[i] == scores[j])
        concordant += 0.5;
    }
  }
  return concordant / static_cast<double>(pairs);
}

inline double
sig(double x) {
  return 1.0 / (1.0 + std::exp(-x));
}

// Scalar LSTM written gate by gate. `xs[t]` is the input at step t; returns
// hidden states aligned with input order.
inline auto
lstm(const std::vector<std::vector<double>> &xs, const oncoprog::lstm_params &p, bool reversed)
  -> std::vector<std::vector<double>> {
  const std::size_t k = p.input_weight.rows();
  const std::size_t h = p.recurrent_weight.rows();
  const std::size_t T = xs.size();
  std::vector<std::vector<double>> out(T, std::vector<double>(h, 0.0));
  std::vector<double> hp(h, 0.0), cp(h, 0.0);
  for (std::size_t s = 0; s < T; ++s) {
    const std::size_t t = reversed ? T - 1 - s : s;
    std::vector<double> hn(h), cn(h);
    for (std::size_t j = 0; j < h; ++j) {
      double pre[4];
      for (int gate = 0; gate < 4; ++gate) {
        const std::size_t col = static_cast<std::size_t>(gate) * h + j;
        double a = p.bias[col];
        for (std::size_t i = 0; i < k; ++i)
          a += xs[t][i] * p.input_weight(i, col);
        for (std::size_t r = 0; r < h; ++r)
          a += hp[r] * p.recurrent_weight(r, col);
        pre[gate] = a;
      }
      const double ig = sig(pre[0]), fg = sig(pre[1]), cg = std::tanh(pre[2]), og = sig(pre[3]);
      cn[j] = fg * cp[j] + ig * cg;
      hn[j] = og * std::tanh(cn[j]);
    }
    hp = hn;
    cp = cn;
    out[t] = hn;
  }
  return out;
}

// Whole-model forward (inference or weighted) using the scalar LSTM above.
inline auto
model_logits(const std::vector<std::int32_t> &tokens, const oncoprog::model_params &p)
  -> std::vector<double> {
  std::size_t len = tokens.size();
  while (len > 0 && tokens[len - 1] == 0)
    --len;
  std::vector<std::vector<double>> xs;
  for (std::size_t t = 0; t < len; ++t) {
    const auto row = p.embedding.weight.row(static_cast<std::size_t>(tokens[t]));
    xs.emplace_back(row.begin(), row.end());
  }
  const std::size_t h = p.forward_lstm.recurrent_weight.rows();
  std::vector<double> pooled(2 * h, 0.0);
  if (len > 0) {
    const auto f = lstm(xs, p.forward_lstm, false);
    const auto b = lstm(xs, p.backward_lstm, true);
    for (std::size_t j = 0; j < h; ++j) {
      pooled[j] = f[len - 1][j];
      pooled[h + j] = b[0][j];
    }
  }
  auto affine = [](const std::vector<double> &x, const oncoprog::dense_params &d) {
    std::vector<double> y(d.weight.cols());
    for (std::size_t o = 0; o < y.size(); ++o) {
      double s = d.bias[o];
      for (std::size_t i = 0; i < x.size(); ++i)
        s += x[i] * d.weight(i, o);
      y[o] = s;
    }
    return y;
  };
  auto hidden = affine(pooled, p.dense1);
  for (auto &v : hidden)
    v = v > 0.0 ? v : 0.0;
  return affine(hidden, p.dense2);
}

inline auto
softmax(const std::vector<double> &z, const std::vector<double> &w) -> std::vector<double> {
  std::vector<double> e(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i)
    sum += e[i] = std::exp(z[i] * w[i]);
  for (auto &v : e)
    v /= sum;
  return e;
}

// Mean weighted cross-entropy computed entirely through the oracle forward.
inline auto
batch_loss(const std::vector<std::pair<std::vector<std::int32_t>, int>> &batch,
           const oncoprog::model_params &p) -> double {
  double total = 0.0;
  for (const auto &[tokens, label] : batch) {
    const auto probs = softmax(model_logits(tokens, p), p.class_weights);
    total -= std::log(probs[static_cast<std::size_t>(label)]);
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace oracle

#endif  // ONCOPROG_TESTS_ORACLES_HPP
