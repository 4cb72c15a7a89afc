#ifndef ONCOPROG_PIPELINE_HPP
#define ONCOPROG_PIPELINE_HPP

#include <cstddef>
#include <functional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <fmt/format.h>

#include "oncoprog/cohort.hpp"
#include "oncoprog/error.hpp"
#include "oncoprog/model.hpp"
#include "oncoprog/preprocess.hpp"
#include "oncoprog/progression.hpp"
#include "oncoprog/train.hpp"

namespace oncoprog {

struct pipeline_config {
  preprocess_config preprocess;
  train_config training;
  model_dims architecture;  // vocab and classes are filled in from the data
  double future_threshold{default_future_threshold};
  std::size_t threads{1};
};

struct prepared_data {
  cohort filtered;
  frequency_table frequencies;
  mutation_vocabulary vocab;
  dataset_split split;
  class_weights weights;  // from training-partition class sizes
};

// Stage filtering, significant-set selection, encoding, split and class
// weights, in that order.
[[nodiscard]] inline auto
prepare(const cohort &c, const preprocess_config &cfg) -> prepared_data {
  cfg.validate();
  validate(c);
  prepared_data d;
  d.filtered = filter_small_stages(c, cfg);
  d.frequencies = count_frequencies(d.filtered);
  d.vocab = build_significant_set(d.frequencies, cfg);
  const auto max_len = cfg.max_len > 0 ? cfg.max_len : default_max_len(d.filtered);
  d.split = split(encode(d.filtered, d.vocab, max_len), cfg);
  d.weights = compute_class_weights(d.split.train.stage_sizes());
  return d;
}

[[nodiscard]] inline auto
initial_params(const prepared_data &d, const model_dims &architecture, std::uint64_t seed)
  -> model_params {
  auto dims = architecture;
  dims.vocab = d.vocab.size();
  dims.classes = d.split.train.num_classes();
  return init_params(dims, weight_vector(d.weights, d.split.train.class_map), seed);
}

// Future-mutation predictions for every test patient at its predicted stage.
[[nodiscard]] inline auto
predict_test_patients(const prepared_data &d, const eval_report &report,
                      const stage_gene_matrix &m, double threshold)
  -> std::vector<progression_prediction> {
  std::unordered_map<std::string, const patient *> by_id;
  for (const auto &p : d.filtered.patients)
    by_id.emplace(p.id, &p);
  std::vector<progression_prediction> out;
  const auto &test = d.split.test;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto &p = *by_id.at(test.patient_ids[i]);
    const int stage = test.class_map[static_cast<std::size_t>(report.predicted[i])];
    out.push_back({p.id, stage, predict_future(p.genes, stage, m, threshold)});
  }
  return out;
}

struct pipeline_result {
  prepared_data data;
  train_result trained;
  eval_report report;
  stage_gene_matrix heatmap;
  std::vector<progression_prediction> predictions;
};

[[nodiscard]] inline auto
run_pipeline(const cohort &c, const pipeline_config &cfg, const epoch_callback &on_epoch = {})
  -> pipeline_result {
  pipeline_result r;
  r.data = prepare(c, cfg.preprocess);
  const auto &train_ds = r.data.split.train;
  r.trained = train(cfg.preprocess.oversample ? oversample(train_ds) : train_ds,
                    initial_params(r.data, cfg.architecture, cfg.training.seed), r.data.weights,
                    cfg.training, on_epoch);
  r.report = evaluate(r.data.split.test, r.trained.params, cfg.threads);
  r.heatmap = build_stage_gene_matrix(train_ds, r.data.vocab, r.data.filtered);
  r.predictions = predict_test_patients(r.data, r.report, r.heatmap, cfg.future_threshold);
  return r;
}

struct ablation_row {
  std::size_t top_x{};
  std::size_t vocab_genes{};
  double accuracy{};
  double mean_auc{};
};

// One full pipeline per grid value; seed and split are shared because the
// split depends only on labels and the seed.
[[nodiscard]] inline auto
ablation_run(const cohort &c, const std::vector<std::size_t> &grid, const pipeline_config &cfg,
             const std::function<void(std::size_t)> &on_start = {}) -> std::vector<ablation_row> {
  if (grid.empty())
    throw error(errc::config_invalid, "ablation grid is empty");
  std::vector<ablation_row> rows;
  for (auto x : grid) {
    if (on_start)
      on_start(x);
    auto run_cfg = cfg;
    run_cfg.preprocess.top_x = x;
    const auto d = prepare(c, run_cfg.preprocess);
    const auto &train_ds = d.split.train;
    const auto trained =
      train(run_cfg.preprocess.oversample ? oversample(train_ds) : train_ds,
            initial_params(d, run_cfg.architecture, run_cfg.training.seed), d.weights,
            run_cfg.training);
    const auto report = evaluate(d.split.test, trained.params, run_cfg.threads);
    rows.push_back({x, d.vocab.genes().size(), report.accuracy, report.mean_auc()});
  }
  return rows;
}

[[nodiscard]] inline auto
format_top_x(std::size_t x) -> std::string {
  return x == all_genes ? std::string("all") : std::to_string(x);
}

inline void
write_ablation_csv(std::ostream &out, const std::vector<ablation_row> &rows) {
  out << "top_x,vocab_genes,accuracy,mean_auc\n";
  for (const auto &r : rows)
    out << fmt::format("{},{},{:.6f},{:.6f}\n", format_top_x(r.top_x), r.vocab_genes,
                       r.accuracy, r.mean_auc);
}

}  // namespace oncoprog

#endif  // ONCOPROG_PIPELINE_HPP
