#ifndef ONCOPROG_COHORT_HPP
#define ONCOPROG_COHORT_HPP

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "oncoprog/error.hpp"
#include "oncoprog/tsv.hpp"

namespace oncoprog {

// Clinical stage as an ordinal in [1, 4].
class stage_label {
public:
  // Accepts "1", "I", "Stage I", "stage1", "Stage IIA" (substage letters are
  // dropped), case-insensitive.
  [[nodiscard]] static auto
  parse(std::string_view text) -> std::optional<stage_label> {
    std::string s;
    for (char c : text)
      if (!std::isspace(static_cast<unsigned char>(c)) && c != '_' && c != '-')
        s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (s.starts_with("stage"))
      s.erase(0, 5);
    if (s.empty())
      return std::nullopt;
    if (s.size() == 1 && s[0] >= '1' && s[0] <= '4')
      return stage_label(s[0] - '0');
    // roman numeral with optional substage letter
    if (s.size() >= 2 && (s.back() == 'a' || s.back() == 'b' || s.back() == 'c'))
      s.pop_back();
    if (s == "i")
      return stage_label(1);
    if (s == "ii")
      return stage_label(2);
    if (s == "iii")
      return stage_label(3);
    if (s == "iv")
      return stage_label(4);
    return std::nullopt;
  }

  [[nodiscard]] static auto
  from_ordinal(int ordinal) -> stage_label {
    if (ordinal < 1 || ordinal > 4)
      throw error(errc::unknown_stage, std::to_string(ordinal));
    return stage_label(ordinal);
  }

  [[nodiscard]] auto
  ordinal() const noexcept -> int {
    return ordinal_;
  }

  auto
  operator<=>(const stage_label &) const = default;

private:
  explicit stage_label(int ordinal) : ordinal_(ordinal) {}
  int ordinal_;
};

struct mutation_record {
  std::string patient_id;
  std::string gene;
  std::uint32_t sample_order{};

  auto
  operator<=>(const mutation_record &) const = default;
};

struct clinical_record {
  std::string patient_id;
  std::string cancer_type;
  stage_label stage = stage_label::from_ordinal(1);

  auto
  operator==(const clinical_record &) const -> bool = default;
};

struct patient {
  std::string id;
  std::string cancer_type;
  int stage{};
  std::vector<std::string> genes;  // mutation sequence

  auto
  operator==(const patient &) const -> bool = default;
};

struct cohort {
  std::vector<patient> patients;

  [[nodiscard]] auto
  size() const noexcept -> std::size_t {
    return patients.size();
  }
  [[nodiscard]] auto
  empty() const noexcept -> bool {
    return patients.empty();
  }

  auto
  operator==(const cohort &) const -> bool = default;
};

struct discard_summary {
  std::size_t unmatched_mutations{};  // mutation rows whose patient has no clinical row
  std::size_t no_mutations{};         // clinical patients without any mutation
  std::size_t no_clinical{};          // distinct mutated patients without clinical row

  auto
  operator==(const discard_summary &) const -> bool = default;
};

inline void
to_json(nlohmann::json &j, const discard_summary &d) {
  j = nlohmann::json{{"unmatched_mutations", d.unmatched_mutations},
                     {"no_mutations", d.no_mutations},
                     {"no_clinical", d.no_clinical}};
}

struct cohort_build {
  oncoprog::cohort cohort;
  discard_summary discards;
};

namespace detail {

[[nodiscard]] inline auto
has_whitespace(std::string_view s) -> bool {
  return std::ranges::any_of(
    s, [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; });
}

[[nodiscard]] inline auto
row_error(const std::string &source, std::size_t line, const std::string &msg) -> error {
  return error(errc::malformed_row, source + " line " + std::to_string(line) + ": " + msg);
}

}  // namespace detail

[[nodiscard]] inline auto
parse_mutations(const tsv::table &t, const std::string &source = "<mutations>")
  -> std::vector<mutation_record> {
  const auto pid_col = t.column("patient_id");
  const auto gene_col = t.column("gene");
  const auto order_col = t.find("sample_order");

  std::vector<mutation_record> out;
  out.reserve(t.rows.size());
  for (const auto &r : t.rows) {
    mutation_record m{r.fields[pid_col], r.fields[gene_col], 0};
    if (m.patient_id.empty())
      throw detail::row_error(source, r.line, "empty patient_id");
    if (m.gene.empty() || detail::has_whitespace(m.gene))
      throw detail::row_error(source, r.line, "invalid gene symbol '" + m.gene + "'");
    if (order_col && !r.fields[*order_col].empty()) {
      const auto &f = r.fields[*order_col];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), m.sample_order);
      if (ec != std::errc{} || ptr != f.data() + f.size())
        throw detail::row_error(source, r.line, "invalid sample_order '" + f + "'");
    }
    out.push_back(std::move(m));
  }
  return out;
}

[[nodiscard]] inline auto
parse_mutations(const std::filesystem::path &path) -> std::vector<mutation_record> {
  return parse_mutations(tsv::read_file(path), path.string());
}

[[nodiscard]] inline auto
parse_clinical(const tsv::table &t, const std::string &source = "<clinical>")
  -> std::vector<clinical_record> {
  const auto pid_col = t.column("patient_id");
  const auto type_col = t.column("cancer_type");
  const auto stage_col = t.column("stage");

  std::vector<clinical_record> out;
  out.reserve(t.rows.size());
  for (const auto &r : t.rows) {
    const auto &pid = r.fields[pid_col];
    const auto &type = r.fields[type_col];
    if (pid.empty())
      throw detail::row_error(source, r.line, "empty patient_id");
    if (type.empty())
      throw detail::row_error(source, r.line, "empty cancer_type");
    const auto stage = stage_label::parse(r.fields[stage_col]);
    if (!stage)
      throw error(errc::unknown_stage, "'" + r.fields[stage_col] + "' at " + source +
                                         " line " + std::to_string(r.line));
    out.push_back({pid, type, *stage});
  }
  return out;
}

[[nodiscard]] inline auto
parse_clinical(const std::filesystem::path &path) -> std::vector<clinical_record> {
  return parse_clinical(tsv::read_file(path), path.string());
}

// Joins on patient_id. Patient order follows the clinical table; each
// mutation sequence is ordered by sample_order, ties by input order.
[[nodiscard]] inline auto
build_cohort(const std::vector<mutation_record> &mutations,
             const std::vector<clinical_record> &clinical) -> cohort_build {
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<const clinical_record *> unique_clinical;
  for (const auto &c : clinical) {
    auto [it, inserted] = slot.try_emplace(c.patient_id, unique_clinical.size());
    if (inserted) {
      unique_clinical.push_back(&c);
    } else if (!(*unique_clinical[it->second] == c)) {
      throw error(errc::duplicate_clinical, c.patient_id);
    }
  }

  std::vector<std::vector<const mutation_record *>> per_patient(unique_clinical.size());
  discard_summary discards;
  std::set<std::string> orphan_patients;
  for (const auto &m : mutations) {
    auto it = slot.find(m.patient_id);
    if (it == slot.end()) {
      ++discards.unmatched_mutations;
      orphan_patients.insert(m.patient_id);
      continue;
    }
    per_patient[it->second].push_back(&m);
  }
  discards.no_clinical = orphan_patients.size();

  cohort_build out;
  for (std::size_t i = 0; i < unique_clinical.size(); ++i) {
    auto &events = per_patient[i];
    if (events.empty()) {
      ++discards.no_mutations;
      continue;
    }
    std::ranges::stable_sort(events, {}, &mutation_record::sample_order);
    patient p{unique_clinical[i]->patient_id, unique_clinical[i]->cancer_type,
              unique_clinical[i]->stage.ordinal(), {}};
    p.genes.reserve(events.size());
    for (const auto *m : events)
      p.genes.push_back(m->gene);
    out.cohort.patients.push_back(std::move(p));
  }
  out.discards = discards;
  return out;
}

// Throws if any structural invariant is violated.
inline void
validate(const cohort &c) {
  std::set<std::string_view> seen;
  for (const auto &p : c.patients) {
    if (!seen.insert(p.id).second)
      throw error(errc::duplicate_clinical, p.id);
    if (p.genes.empty())
      throw error(errc::empty_cohort, "patient " + p.id + " has no mutations");
    if (p.stage < 1 || p.stage > 4)
      throw error(errc::unknown_stage, std::to_string(p.stage));
    if (p.cancer_type.empty())
      throw error(errc::malformed_row, "patient " + p.id + " has empty cancer_type");
  }
}

// Per-patient sample_order is written as 0; file order then carries the
// sequence, so re-parsing reproduces the cohort.
inline void
write_mutations(std::ostream &out, const cohort &c) {
  out << "patient_id\tgene\tsample_order\n";
  for (const auto &p : c.patients)
    for (const auto &g : p.genes)
      out << p.id << '\t' << g << "\t0\n";
}

inline void
write_clinical(std::ostream &out, const cohort &c) {
  out << "patient_id\tcancer_type\tstage\n";
  for (const auto &p : c.patients)
    out << p.id << '\t' << p.cancer_type << '\t' << p.stage << '\n';
}

inline void
write_cohort(const cohort &c, const std::filesystem::path &mutations_path,
             const std::filesystem::path &clinical_path) {
  std::ofstream m(mutations_path, std::ios::binary);
  std::ofstream k(clinical_path, std::ios::binary);
  if (!m || !k)
    throw error(errc::io_error, "cannot write cohort TSVs");
  write_mutations(m, c);
  write_clinical(k, c);
}

[[nodiscard]] inline auto
load_cohort(const std::filesystem::path &mutations_path,
            const std::filesystem::path &clinical_path) -> cohort_build {
  return build_cohort(parse_mutations(mutations_path), parse_clinical(clinical_path));
}

// Cancer types holding at least `min_class_size` patients, ascending by code.
[[nodiscard]] inline auto
eligible_cancer_types(const cohort &c, std::size_t min_class_size)
  -> std::vector<std::string> {
  std::map<std::string, std::size_t> counts;
  for (const auto &p : c.patients)
    ++counts[p.cancer_type];
  std::vector<std::string> out;
  for (const auto &[type, n] : counts)
    if (n >= min_class_size)
      out.push_back(type);
  return out;
}

[[nodiscard]] inline auto
restrict_to_cancer_type(const cohort &c, std::string_view type) -> cohort {
  cohort out;
  for (const auto &p : c.patients)
    if (p.cancer_type == type)
      out.patients.push_back(p);
  return out;
}

}  // namespace oncoprog

#endif  // ONCOPROG_COHORT_HPP
