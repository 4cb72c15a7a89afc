#ifndef ONCOPROG_PROGRESSION_HPP
#define ONCOPROG_PROGRESSION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "oncoprog/cohort.hpp"
#include "oncoprog/error.hpp"
#include "oncoprog/matrix.hpp"
#include "oncoprog/preprocess.hpp"
#include "oncoprog/tsv.hpp"

namespace oncoprog {

// values(s, g): fraction of training patients of stages[s] that carry genes[g].
struct stage_gene_matrix {
  std::vector<int> stages;
  std::vector<std::string> genes;
  matrix values;

  [[nodiscard]] auto
  stage_row(int stage) const -> std::size_t {
    for (std::size_t i = 0; i < stages.size(); ++i)
      if (stages[i] == stage)
        return i;
    throw error(errc::unknown_stage, "stage " + std::to_string(stage) + " not in matrix");
  }

  auto
  operator==(const stage_gene_matrix &) const -> bool = default;
};

// Built from the training partition only; gene sets come from the full
// (untruncated) cohort sequences.
[[nodiscard]] inline auto
build_stage_gene_matrix(const encoded_dataset &train, const mutation_vocabulary &vocab,
                        const cohort &c) -> stage_gene_matrix {
  std::unordered_map<std::string, const patient *> by_id;
  for (const auto &p : c.patients)
    by_id.emplace(p.id, &p);

  stage_gene_matrix m{train.class_map, vocab.genes(),
                      matrix(train.class_map.size(), vocab.genes().size())};
  std::vector<std::size_t> stage_count(train.class_map.size(), 0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    auto it = by_id.find(train.patient_ids[i]);
    if (it == by_id.end())
      throw error(errc::config_invalid,
                  "training patient " + train.patient_ids[i] + " missing from cohort");
    const auto row = static_cast<std::size_t>(train.labels[i]);
    ++stage_count[row];
    std::set<std::int32_t> ids;
    for (const auto &g : it->second->genes)
      if (vocab.contains(g))
        ids.insert(vocab.id(g));
    for (auto id : ids)
      m.values(row, static_cast<std::size_t>(id - mutation_vocabulary::first_gene)) += 1.0;
  }
  for (std::size_t s = 0; s < m.stages.size(); ++s) {
    if (stage_count[s] == 0)
      throw error(errc::empty_stage, "stage " + std::to_string(m.stages[s]) +
                                       " has no training patients");
    for (auto &v : m.values.row(s))
      v /= static_cast<double>(stage_count[s]);
  }
  return m;
}

struct gene_probability {
  std::string gene;
  double probability{};

  auto
  operator==(const gene_probability &) const -> bool = default;
};

struct progression_prediction {
  std::string patient_id;
  int predicted_stage{};
  std::vector<gene_probability> future;  // descending probability, ties by symbol
};

inline void
to_json(nlohmann::json &j, const progression_prediction &p) {
  nlohmann::json future = nlohmann::json::array();
  for (const auto &f : p.future)
    future.push_back({{"gene", f.gene}, {"probability", f.probability}});
  j = nlohmann::json{{"patient_id", p.patient_id},
                     {"predicted_stage", p.predicted_stage},
                     {"future", std::move(future)}};
}

inline constexpr double default_future_threshold = 0.05;

// Genes scoring at least `threshold` for the predicted stage that the patient
// does not already carry. `score(stage, gene)` supplies the probability; the
// matrix overload below uses stage-conditional frequency, and a model-derived
// score can be substituted here.
template <typename Score>
[[nodiscard]] auto
predict_future(const std::vector<std::string> &patient_genes, int predicted_stage,
               const std::vector<std::string> &candidates, Score &&score, double threshold)
  -> std::vector<gene_probability> {
  const std::set<std::string> carried(patient_genes.begin(), patient_genes.end());
  std::vector<gene_probability> out;
  for (const auto &g : candidates) {
    if (carried.contains(g))
      continue;
    const double p = score(predicted_stage, g);
    if (p >= threshold)
      out.push_back({g, p});
  }
  std::ranges::sort(out, [](const auto &a, const auto &b) {
    return a.probability != b.probability ? a.probability > b.probability : a.gene < b.gene;
  });
  return out;
}

[[nodiscard]] inline auto
predict_future(const std::vector<std::string> &patient_genes, int predicted_stage,
               const stage_gene_matrix &m, double threshold = default_future_threshold)
  -> std::vector<gene_probability> {
  const auto row = m.stage_row(predicted_stage);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t g = 0; g < m.genes.size(); ++g)
    col.emplace(m.genes[g], g);
  return predict_future(
    patient_genes, predicted_stage, m.genes,
    [&](int, const std::string &g) { return m.values(row, col.at(g)); }, threshold);
}

// CSV: header "stage,<gene>...", one row per stage, values at 4 decimals.
inline void
write_heatmap_csv(std::ostream &out, const stage_gene_matrix &m) {
  out << "stage";
  for (const auto &g : m.genes)
    out << ',' << g;
  out << '\n';
  for (std::size_t s = 0; s < m.stages.size(); ++s) {
    out << m.stages[s];
    for (double v : m.values.row(s))
      out << fmt::format(",{:.4f}", v);
    out << '\n';
  }
}

[[nodiscard]] inline auto
read_heatmap_csv(std::istream &in) -> stage_gene_matrix {
  auto split_commas = [](const std::string &line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ','))
      out.push_back(f);
    return out;
  };
  std::string line;
  if (!std::getline(in, line))
    throw error(errc::malformed_row, "empty heatmap CSV");
  auto header = split_commas(line);
  if (header.empty() || header[0] != "stage")
    throw error(errc::missing_column, "stage");
  stage_gene_matrix m;
  m.genes.assign(header.begin() + 1, header.end());
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    auto fields = split_commas(line);
    if (fields.size() != header.size())
      throw error(errc::malformed_row, "heatmap row width differs from header");
    m.stages.push_back(std::stoi(fields[0]));
    for (std::size_t i = 1; i < fields.size(); ++i)
      values.push_back(std::stod(fields[i]));
  }
  m.values = matrix(m.stages.size(), m.genes.size(), std::move(values));
  return m;
}

// White-to-red linear ramp, one rect per cell, genes along the x axis.
inline void
write_heatmap_svg(std::ostream &out, const stage_gene_matrix &m) {
  constexpr int cell = 18, left = 70, top = 20, label_band = 90;
  const auto width = left + static_cast<int>(m.genes.size()) * cell + 20;
  const auto height = top + static_cast<int>(m.stages.size()) * cell + label_band;
  out << fmt::format(
    "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
    "font-family=\"sans-serif\" font-size=\"10\">\n",
    width, height);
  for (std::size_t s = 0; s < m.stages.size(); ++s) {
    const int y = top + static_cast<int>(s) * cell;
    out << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">Stage {}</text>\n", left - 6,
                       y + cell - 5, m.stages[s]);
    for (std::size_t g = 0; g < m.genes.size(); ++g) {
      const double v = std::clamp(m.values(s, g), 0.0, 1.0);
      const int fade = static_cast<int>(std::lround(255.0 * (1.0 - v)));
      out << fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"rgb(255,{},{})\">"
        "<title>{} stage {}: {:.4f}</title></rect>\n",
        left + static_cast<int>(g) * cell, y, cell, cell, fade, fade, m.genes[g], m.stages[s], v);
    }
  }
  const int base = top + static_cast<int>(m.stages.size()) * cell + 6;
  for (std::size_t g = 0; g < m.genes.size(); ++g) {
    const int x = left + static_cast<int>(g) * cell + cell / 2;
    out << fmt::format(
      "<text x=\"{0}\" y=\"{1}\" transform=\"rotate(60 {0} {1})\">{2}</text>\n", x, base,
      m.genes[g]);
  }
  out << "</svg>\n";
}

inline void
emit_heatmap(const stage_gene_matrix &m, const std::filesystem::path &csv_path,
             const std::filesystem::path &svg_path = {}) {
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv)
    throw error(errc::io_error, "cannot write " + csv_path.string());
  write_heatmap_csv(csv, m);
  if (!csv)
    throw error(errc::io_error, "failed writing " + csv_path.string());
  if (!svg_path.empty()) {
    std::ofstream svg(svg_path, std::ios::binary);
    if (!svg)
      throw error(errc::io_error, "cannot write " + svg_path.string());
    write_heatmap_svg(svg, m);
  }
}

}  // namespace oncoprog

#endif  // ONCOPROG_PROGRESSION_HPP
