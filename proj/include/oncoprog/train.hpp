#ifndef ONCOPROG_TRAIN_HPP
#define ONCOPROG_TRAIN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <ostream>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "oncoprog/adam.hpp"
#include "oncoprog/error.hpp"
#include "oncoprog/model.hpp"
#include "oncoprog/preprocess.hpp"
#include "oncoprog/rng.hpp"
#include "oncoprog/roc.hpp"

namespace oncoprog {

struct train_config {
  std::size_t epochs{200};
  std::size_t batch_size{32};
  double learning_rate{1e-3};
  std::uint64_t seed{0};
  bool shuffle_each_epoch{true};

  void
  validate() const {
    if (epochs < 1)
      throw error(errc::config_invalid, "epochs must be >= 1");
    if (batch_size < 1)
      throw error(errc::config_invalid, "batch_size must be >= 1");
    if (!(learning_rate > 0.0))
      throw error(errc::config_invalid, "learning_rate must be positive");
  }
};

// Class weights in class-id order.
[[nodiscard]] inline auto
weight_vector(const class_weights &w, const std::vector<int> &class_map) -> std::vector<double> {
  std::vector<double> out;
  for (int stage : class_map) {
    auto it = w.weights.find(stage);
    if (it == w.weights.end())
      throw error(errc::shape_mismatch, "no class weight for stage " + std::to_string(stage));
    out.push_back(it->second);
  }
  return out;
}

struct train_result {
  model_params params;
  std::vector<double> loss_history;  // mean loss per epoch
};

using epoch_callback = std::function<void(std::size_t epoch, double mean_loss)>;

[[nodiscard]] inline auto
train(const encoded_dataset &ds, model_params params, const class_weights &weights,
      const train_config &cfg, const epoch_callback &on_epoch = {}) -> train_result {
  cfg.validate();
  if (ds.size() == 0)
    throw error(errc::empty_cohort, "empty training set");
  if (weights.weights.size() != ds.num_classes() || params.dims().classes != ds.num_classes())
    throw error(errc::shape_mismatch, "class count differs between data, weights and model");
  params.class_weights = weight_vector(weights, ds.class_map);
  validate(params);

  rng gen(cfg.seed);
  auto state = make_adam_state(params);
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<example_ref> batch;
  train_result out;
  out.loss_history.reserve(cfg.epochs);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle_each_epoch)
      gen.shuffle(std::span(order));
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      const auto stop = std::min(order.size(), start + cfg.batch_size);
      for (auto i = start; i < stop; ++i)
        batch.push_back({ds.sequences[order[i]], ds.labels[order[i]]});
      auto r = loss_and_grads(batch, params);
      if (!std::isfinite(r.loss))
        throw error(errc::non_finite_loss, "at epoch " + std::to_string(epoch + 1));
      total += r.loss * static_cast<double>(batch.size());
      adam_step(params, r.grads, state, cfg.learning_rate);
    }
    const double mean = total / static_cast<double>(ds.size());
    out.loss_history.push_back(mean);
    if (on_epoch)
      on_epoch(epoch + 1, mean);
  }
  out.params = std::move(params);
  return out;
}

struct eval_report {
  double accuracy{};
  std::size_t n_test{};
  std::vector<std::vector<std::size_t>> confusion;  // [true class][predicted class]
  std::vector<roc_curve> roc;                       // one per class with both outcomes present
  std::vector<int> class_map;
  std::vector<int> predicted;                       // class id per test row
  std::vector<std::vector<double>> probabilities;

  [[nodiscard]] auto
  mean_auc() const -> double {
    if (roc.empty())
      return 0.0;
    double s = 0.0;
    for (const auto &c : roc)
      s += c.auc;
    return s / static_cast<double>(roc.size());
  }
};

// Inference-mode predictions; rows are split across `threads` workers that
// write disjoint slots, so the result does not depend on the thread count.
[[nodiscard]] inline auto
predict_probabilities(const encoded_dataset &ds, const model_params &params,
                      std::size_t threads = 1) -> std::vector<std::vector<double>> {
  std::vector<std::vector<double>> probs(ds.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (auto i = begin; i < end; ++i)
      probs[i] = forward(ds.sequences[i], params, softmax_mode::inference);
  };
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(ds.size(), 1));
  if (threads == 1) {
    work(0, ds.size());
    return probs;
  }
  std::vector<std::jthread> pool;
  const auto chunk = (ds.size() + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const auto b = std::min(ds.size(), t * chunk);
    const auto e = std::min(ds.size(), b + chunk);
    pool.emplace_back(work, b, e);
  }
  return probs;
}

[[nodiscard]] inline auto
evaluate(const encoded_dataset &ds, const model_params &params, std::size_t threads = 1)
  -> eval_report {
  if (ds.size() == 0)
    throw error(errc::empty_test_set, "no test patients");
  const auto k = ds.num_classes();
  if (params.dims().classes != k)
    throw error(errc::shape_mismatch, "model class count differs from dataset");

  eval_report r;
  r.n_test = ds.size();
  r.class_map = ds.class_map;
  r.probabilities = predict_probabilities(ds, params, threads);
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto pred = static_cast<int>(argmax(r.probabilities[i]));
    r.predicted.push_back(pred);
    ++r.confusion[static_cast<std::size_t>(ds.labels[i])][static_cast<std::size_t>(pred)];
    correct += pred == ds.labels[i] ? 1 : 0;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());

  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> scores;
    std::vector<bool> labels;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      scores.push_back(r.probabilities[i][c]);
      labels.push_back(ds.labels[i] == static_cast<int>(c));
    }
    const bool has_pos = std::ranges::find(labels, true) != labels.end();
    const bool has_neg = std::ranges::find(labels, false) != labels.end();
    if (has_pos && has_neg)
      r.roc.push_back(roc_points(scores, labels, static_cast<int>(c)));
  }
  return r;
}

[[nodiscard]] inline auto
to_json(const eval_report &r) -> nlohmann::json {
  nlohmann::json curves = nlohmann::json::array();
  for (const auto &c : r.roc) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto &p : c.points)
      pts.push_back({p.fpr, p.tpr});
    curves.push_back({{"class_id", c.class_id},
                      {"stage", r.class_map[static_cast<std::size_t>(c.class_id)]},
                      {"auc", c.auc},
                      {"points", std::move(pts)}});
  }
  return nlohmann::json{{"accuracy", r.accuracy}, {"n_test", r.n_test},
                        {"class_map", r.class_map}, {"confusion", r.confusion},
                        {"mean_auc", r.mean_auc()}, {"roc", std::move(curves)}};
}

inline void
write_roc_csv(std::ostream &out, const roc_curve &c) {
  out << "class,fpr,tpr\n";
  for (const auto &p : c.points)
    out << fmt::format("{},{},{}\n", c.class_id, p.fpr, p.tpr);
}

inline void
write_loss_csv(std::ostream &out, const std::vector<double> &history) {
  out << "epoch,mean_loss\n";
  for (std::size_t i = 0; i < history.size(); ++i)
    out << fmt::format("{},{}\n", i + 1, history[i]);
}

}  // namespace oncoprog

#endif  // ONCOPROG_TRAIN_HPP
