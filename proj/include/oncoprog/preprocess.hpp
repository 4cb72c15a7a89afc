#ifndef ONCOPROG_PREPROCESS_HPP
#define ONCOPROG_PREPROCESS_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "oncoprog/cohort.hpp"
#include "oncoprog/error.hpp"
#include "oncoprog/rng.hpp"

namespace oncoprog {

// top_x value that keeps every gene (the unfiltered baseline).
inline constexpr std::size_t all_genes = std::numeric_limits<std::size_t>::max();

struct preprocess_config {
  std::size_t top_x{200};
  double min_stage_fraction{0.10};
  std::size_t min_class_size{300};
  double split_fraction{0.80};
  std::uint64_t seed{0};
  std::size_t max_len{0};  // 0 selects the percentile rule
  bool oversample{false};

  void
  validate() const {
    if (top_x < 1)
      throw error(errc::config_invalid, "top_x must be >= 1");
    if (!(min_stage_fraction >= 0.0 && min_stage_fraction < 1.0))
      throw error(errc::config_invalid, "min_stage_fraction must be in [0, 1)");
    if (!(split_fraction > 0.0 && split_fraction < 1.0))
      throw error(errc::config_invalid, "split_fraction must be in (0, 1)");
  }
};

using gene_counts = std::map<std::string, std::size_t>;

// Counts are distinct patients, not raw events.
struct frequency_table {
  gene_counts overall;
  std::map<int, gene_counts> per_stage;
  std::map<int, std::size_t> stage_sizes;

  auto
  operator==(const frequency_table &) const -> bool = default;
};

[[nodiscard]] inline auto
count_frequencies(const cohort &c) -> frequency_table {
  if (c.empty())
    throw error(errc::empty_cohort, "cannot count frequencies of an empty cohort");
  frequency_table t;
  for (const auto &p : c.patients) {
    ++t.stage_sizes[p.stage];
    auto &stage = t.per_stage[p.stage];
    const std::set<std::string> distinct(p.genes.begin(), p.genes.end());
    for (const auto &g : distinct) {
      ++t.overall[g];
      ++stage[g];
    }
  }
  return t;
}

// Drops patients of any stage holding strictly less than min_stage_fraction
// of the cohort.
[[nodiscard]] inline auto
filter_small_stages(const cohort &c, const preprocess_config &cfg) -> cohort {
  if (c.empty())
    throw error(errc::empty_cohort, "cannot filter an empty cohort");
  std::map<int, std::size_t> sizes;
  for (const auto &p : c.patients)
    ++sizes[p.stage];
  const auto total = static_cast<double>(c.size());
  std::set<int> kept;
  for (const auto &[stage, n] : sizes)
    if (!(static_cast<double>(n) / total < cfg.min_stage_fraction))
      kept.insert(stage);
  cohort out;
  for (const auto &p : c.patients)
    if (kept.contains(p.stage))
      out.patients.push_back(p);
  if (out.empty())
    throw error(errc::all_stages_removed, "no stage reaches the minimum fraction");
  return out;
}

class mutation_vocabulary {
public:
  static constexpr std::int32_t pad = 0;
  static constexpr std::int32_t unk = 1;
  static constexpr std::int32_t first_gene = 2;

  mutation_vocabulary() = default;

  mutation_vocabulary(std::vector<std::string> genes, std::size_t top_x)
      : genes_(std::move(genes)), top_x_(top_x) {
    for (std::size_t i = 0; i < genes_.size(); ++i)
      if (!index_.emplace(genes_[i], static_cast<std::int32_t>(i) + first_gene).second)
        throw error(errc::config_invalid, "duplicate vocabulary gene " + genes_[i]);
  }

  [[nodiscard]] auto
  genes() const noexcept -> const std::vector<std::string> & {
    return genes_;
  }
  [[nodiscard]] auto
  top_x() const noexcept -> std::size_t {
    return top_x_;
  }
  // Token count including PAD and UNK.
  [[nodiscard]] auto
  size() const noexcept -> std::size_t {
    return genes_.size() + first_gene;
  }
  [[nodiscard]] auto
  id(const std::string &gene) const -> std::int32_t {
    auto it = index_.find(gene);
    return it == index_.end() ? unk : it->second;
  }
  [[nodiscard]] auto
  contains(const std::string &gene) const -> bool {
    return index_.contains(gene);
  }
  // Gene for a token id; PAD and UNK have none.
  [[nodiscard]] auto
  gene(std::int32_t id) const -> const std::string & {
    if (id < first_gene || static_cast<std::size_t>(id) >= size())
      throw error(errc::index_out_of_range, "token " + std::to_string(id) + " has no gene");
    return genes_[static_cast<std::size_t>(id - first_gene)];
  }

  // FNV-1a over the newline-joined gene list.
  [[nodiscard]] auto
  hash() const -> std::uint64_t {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](unsigned char b) {
      h ^= b;
      h *= 0x100000001b3ULL;
    };
    for (const auto &g : genes_) {
      for (char c : g)
        mix(static_cast<unsigned char>(c));
      mix('\n');
    }
    return h;
  }

  auto
  operator==(const mutation_vocabulary &o) const -> bool {
    return genes_ == o.genes_ && top_x_ == o.top_x_;
  }

private:
  std::vector<std::string> genes_;
  std::unordered_map<std::string, std::int32_t> index_;
  std::size_t top_x_{};
};

inline void
to_json(nlohmann::json &j, const mutation_vocabulary &v) {
  j = nlohmann::json{{"genes", v.genes()}};
  if (v.top_x() == all_genes)
    j["top_x"] = "all";
  else
    j["top_x"] = v.top_x();
}

inline void
from_json(const nlohmann::json &j, mutation_vocabulary &v) {
  const auto &x = j.at("top_x");
  const std::size_t top_x = x.is_string() ? all_genes : x.get<std::size_t>();
  v = mutation_vocabulary(j.at("genes").get<std::vector<std::string>>(), top_x);
}

namespace detail {

// Top x genes of a count map by descending count, ties ascending symbol.
[[nodiscard]] inline auto
top_genes(const gene_counts &counts, std::size_t x) -> std::vector<std::string> {
  std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
  std::ranges::stable_sort(items, [](const auto &a, const auto &b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < items.size() && i < x; ++i)
    out.push_back(items[i].first);
  return out;
}

}  // namespace detail

// The overall top-x list followed, stage by ascending stage, by each stage's
// top-x genes not already selected.
[[nodiscard]] inline auto
build_significant_set(const frequency_table &freq, const preprocess_config &cfg)
  -> mutation_vocabulary {
  if (cfg.top_x < 1)
    throw error(errc::config_invalid, "top_x must be >= 1");
  std::vector<std::string> genes = detail::top_genes(freq.overall, cfg.top_x);
  std::set<std::string> seen(genes.begin(), genes.end());
  for (const auto &[stage, counts] : freq.per_stage)
    for (auto &g : detail::top_genes(counts, cfg.top_x))
      if (seen.insert(g).second)
        genes.push_back(std::move(g));
  return mutation_vocabulary(std::move(genes), cfg.top_x);
}

// w_i = (sum_j c_j) / (2 c_i). The exact rational form is kept alongside the
// rounded weights: numerator / denominators[i].
struct class_weights {
  std::map<int, std::size_t> counts;
  std::map<int, double> weights;
  std::size_t numerator{};
  std::map<int, std::size_t> denominators;
};

[[nodiscard]] inline auto
compute_class_weights(const std::map<int, std::size_t> &stage_sizes) -> class_weights {
  class_weights w;
  w.counts = stage_sizes;
  for (const auto &[stage, c] : stage_sizes) {
    if (c == 0)
      throw error(errc::zero_class_size, "stage " + std::to_string(stage));
    w.numerator += c;
  }
  for (const auto &[stage, c] : stage_sizes) {
    w.denominators[stage] = 2 * c;
    w.weights[stage] = static_cast<double>(w.numerator) / static_cast<double>(2 * c);
  }
  return w;
}

struct encoded_dataset {
  std::vector<std::vector<std::int32_t>> sequences;
  std::vector<int> labels;           // contiguous class ids
  std::vector<int> class_map;        // class id -> stage ordinal
  std::vector<std::string> patient_ids;
  std::size_t max_len{};

  [[nodiscard]] auto
  size() const noexcept -> std::size_t {
    return sequences.size();
  }
  [[nodiscard]] auto
  num_classes() const noexcept -> std::size_t {
    return class_map.size();
  }
  [[nodiscard]] auto
  class_of_stage(int stage) const -> int {
    for (std::size_t i = 0; i < class_map.size(); ++i)
      if (class_map[i] == stage)
        return static_cast<int>(i);
    throw error(errc::unknown_stage, std::to_string(stage));
  }
  // Training-partition class sizes keyed by stage ordinal.
  [[nodiscard]] auto
  stage_sizes() const -> std::map<int, std::size_t> {
    std::map<int, std::size_t> out;
    for (int s : class_map)
      out[s] = 0;
    for (int l : labels)
      ++out[class_map[static_cast<std::size_t>(l)]];
    return out;
  }

  auto
  operator==(const encoded_dataset &) const -> bool = default;
};

inline void
to_json(nlohmann::json &j, const encoded_dataset &d) {
  j = nlohmann::json{{"max_len", d.max_len},     {"class_map", d.class_map},
                     {"patient_ids", d.patient_ids}, {"labels", d.labels},
                     {"sequences", d.sequences}};
}

inline void
from_json(const nlohmann::json &j, encoded_dataset &d) {
  j.at("max_len").get_to(d.max_len);
  j.at("class_map").get_to(d.class_map);
  j.at("patient_ids").get_to(d.patient_ids);
  j.at("labels").get_to(d.labels);
  j.at("sequences").get_to(d.sequences);
  if (d.labels.size() != d.sequences.size() || d.patient_ids.size() != d.sequences.size())
    throw error(errc::config_invalid, "dataset arrays have inconsistent lengths");
}

// Nearest-rank 95th percentile of sequence lengths, clamped to [1, 512].
[[nodiscard]] inline auto
default_max_len(const cohort &c) -> std::size_t {
  if (c.empty())
    return 1;
  std::vector<std::size_t> lengths;
  lengths.reserve(c.size());
  for (const auto &p : c.patients)
    lengths.push_back(p.genes.size());
  std::ranges::sort(lengths);
  const auto rank = (95 * lengths.size() + 99) / 100;  // ceil(0.95 n)
  return std::clamp<std::size_t>(lengths[rank - 1], 1, 512);
}

// Out-of-vocabulary genes become UNK; sequences are right-padded with PAD or
// truncated to their first max_len tokens.
[[nodiscard]] inline auto
encode(const cohort &c, const mutation_vocabulary &vocab, std::size_t max_len)
  -> encoded_dataset {
  if (max_len < 1)
    throw error(errc::config_invalid, "max_len must be >= 1");
  encoded_dataset d;
  d.max_len = max_len;
  std::set<int> stages;
  for (const auto &p : c.patients)
    stages.insert(p.stage);
  d.class_map.assign(stages.begin(), stages.end());
  for (const auto &p : c.patients) {
    std::vector<std::int32_t> seq(max_len, mutation_vocabulary::pad);
    for (std::size_t t = 0; t < max_len && t < p.genes.size(); ++t)
      seq[t] = vocab.id(p.genes[t]);
    d.sequences.push_back(std::move(seq));
    d.labels.push_back(d.class_of_stage(p.stage));
    d.patient_ids.push_back(p.id);
  }
  return d;
}

// In-vocabulary genes of a token sequence; PAD and UNK are skipped.
[[nodiscard]] inline auto
decode(const std::vector<std::int32_t> &tokens, const mutation_vocabulary &vocab)
  -> std::vector<std::string> {
  std::vector<std::string> out;
  for (auto t : tokens)
    if (t >= mutation_vocabulary::first_gene)
      out.push_back(vocab.gene(t));
  return out;
}

namespace detail {

[[nodiscard]] inline auto
subset(const encoded_dataset &d, const std::vector<std::size_t> &rows) -> encoded_dataset {
  encoded_dataset out;
  out.max_len = d.max_len;
  out.class_map = d.class_map;
  for (auto r : rows) {
    out.sequences.push_back(d.sequences[r]);
    out.labels.push_back(d.labels[r]);
    out.patient_ids.push_back(d.patient_ids[r]);
  }
  return out;
}

}  // namespace detail

struct dataset_split {
  encoded_dataset train;
  encoded_dataset test;
};

// Stratified shuffled split. Per class, floor(fraction * n) rows train,
// clamped so each side keeps at least one row. Both partitions preserve the
// input row order.
[[nodiscard]] inline auto
split(const encoded_dataset &d, const preprocess_config &cfg) -> dataset_split {
  cfg.validate();
  std::vector<std::vector<std::size_t>> by_class(d.num_classes());
  for (std::size_t i = 0; i < d.size(); ++i)
    by_class[static_cast<std::size_t>(d.labels[i])].push_back(i);

  rng gen(cfg.seed);
  std::vector<char> is_train(d.size(), 0);
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto &rows = by_class[k];
    if (rows.size() < 2)
      throw error(errc::class_too_small,
                  "stage " + std::to_string(d.class_map[k]) + " has " +
                    std::to_string(rows.size()) + " patient(s); need at least 2");
    gen.shuffle(std::span(rows));
    auto n_train = static_cast<std::size_t>(cfg.split_fraction * static_cast<double>(rows.size()));
    n_train = std::clamp<std::size_t>(n_train, 1, rows.size() - 1);
    for (std::size_t i = 0; i < n_train; ++i)
      is_train[rows[i]] = 1;
  }
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < d.size(); ++i)
    (is_train[i] ? train_rows : test_rows).push_back(i);
  return {detail::subset(d, train_rows), detail::subset(d, test_rows)};
}

// Replicates rows of smaller classes (cycling in row order) until every class
// matches the largest one. Off by default; class weighting is the primary
// balancing device.
[[nodiscard]] inline auto
oversample(const encoded_dataset &d) -> encoded_dataset {
  std::vector<std::vector<std::size_t>> by_class(d.num_classes());
  for (std::size_t i = 0; i < d.size(); ++i)
    by_class[static_cast<std::size_t>(d.labels[i])].push_back(i);
  std::size_t largest = 0;
  for (const auto &rows : by_class)
    largest = std::max(largest, rows.size());
  std::vector<std::size_t> rows(d.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  for (const auto &cls : by_class)
    for (std::size_t i = cls.size(); !cls.empty() && i < largest; ++i)
      rows.push_back(cls[i % cls.size()]);
  return detail::subset(d, rows);
}

[[nodiscard]] inline auto
split_manifest(const dataset_split &s, const preprocess_config &cfg) -> nlohmann::json {
  return nlohmann::json{{"seed", cfg.seed},
                        {"split_fraction", cfg.split_fraction},
                        {"train", s.train.patient_ids},
                        {"test", s.test.patient_ids}};
}

}  // namespace oncoprog

#endif  // ONCOPROG_PREPROCESS_HPP
