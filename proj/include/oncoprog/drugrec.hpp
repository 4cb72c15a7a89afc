#ifndef ONCOPROG_DRUGREC_HPP
#define ONCOPROG_DRUGREC_HPP

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "oncoprog/error.hpp"
#include "oncoprog/tsv.hpp"

namespace oncoprog {

enum class drug_source { primary_db, validation_db };

struct drug_target_record {
  std::string drug_name;  // lowercase
  std::string gene;
  std::string action;
  drug_source source{drug_source::primary_db};

  auto
  operator==(const drug_target_record &) const -> bool = default;
};

// Rows keyed by (drug_name, gene) after normalization; the first occurrence
// wins and later duplicates are dropped.
[[nodiscard]] inline auto
load_drug_table(const tsv::table &t, drug_source source, const std::string &name = "<drugs>")
  -> std::vector<drug_target_record> {
  const auto drug_col = t.column("drug_name");
  const auto gene_col = t.column("gene");
  const auto action_col = t.find("action");

  std::vector<drug_target_record> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto &r : t.rows) {
    std::string drug = r.fields[drug_col];
    std::ranges::transform(drug, drug.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const auto &gene = r.fields[gene_col];
    if (drug.empty() || gene.empty())
      throw error(errc::malformed_row,
                  name + " line " + std::to_string(r.line) + ": empty drug_name or gene");
    if (!seen.emplace(drug, gene).second)
      continue;
    out.push_back({std::move(drug), gene, action_col ? r.fields[*action_col] : std::string{},
                   source});
  }
  return out;
}

[[nodiscard]] inline auto
load_drug_table(const std::filesystem::path &path, drug_source source)
  -> std::vector<drug_target_record> {
  return load_drug_table(tsv::read_file(path), source, path.string());
}

struct recommended_drug {
  std::string drug_name;
  std::string action;
  bool validated{};

  auto
  operator==(const recommended_drug &) const -> bool = default;
};

struct recommendation {
  std::string gene;
  std::vector<recommended_drug> drugs;  // validated first, then by name

  auto
  operator==(const recommendation &) const -> bool = default;
};

// One entry per requested gene, in request order (repeats collapsed). A drug
// is validated when the same (drug_name, gene) pair appears in the
// validation table.
[[nodiscard]] inline auto
recommend(const std::vector<std::string> &genes, const std::vector<drug_target_record> &primary,
          const std::vector<drug_target_record> &validation) -> std::vector<recommendation> {
  std::set<std::pair<std::string, std::string>> validated;
  for (const auto &v : validation)
    validated.emplace(v.drug_name, v.gene);

  // gene -> drug -> action; the smallest action string wins on collisions so
  // the result is independent of table row order.
  std::map<std::string, std::map<std::string, std::string>> index;
  for (const auto &p : primary) {
    auto [it, inserted] = index[p.gene].try_emplace(p.drug_name, p.action);
    if (!inserted && p.action < it->second)
      it->second = p.action;
  }

  std::vector<recommendation> out;
  std::set<std::string> emitted;
  for (const auto &g : genes) {
    if (!emitted.insert(g).second)
      continue;
    recommendation rec{g, {}};
    if (auto it = index.find(g); it != index.end())
      for (const auto &[drug, action] : it->second)
        rec.drugs.push_back({drug, action, validated.contains({drug, g})});
    std::ranges::stable_sort(rec.drugs, [](const auto &a, const auto &b) {
      return a.validated != b.validated ? a.validated : a.drug_name < b.drug_name;
    });
    out.push_back(std::move(rec));
  }
  return out;
}

[[nodiscard]] inline auto
to_json(const std::vector<recommendation> &recs) -> nlohmann::json {
  nlohmann::json out = nlohmann::json::array();
  for (const auto &r : recs) {
    nlohmann::json drugs = nlohmann::json::array();
    for (const auto &d : r.drugs)
      drugs.push_back(
        {{"drug_name", d.drug_name}, {"action", d.action}, {"validated", d.validated}});
    out.push_back({{"gene", r.gene}, {"drugs", std::move(drugs)}});
  }
  return out;
}

}  // namespace oncoprog

#endif  // ONCOPROG_DRUGREC_HPP
