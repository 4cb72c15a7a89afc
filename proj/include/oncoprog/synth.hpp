#ifndef ONCOPROG_SYNTH_HPP
#define ONCOPROG_SYNTH_HPP

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "oncoprog/cohort.hpp"
#include "oncoprog/error.hpp"
#include "oncoprog/rng.hpp"

namespace oncoprog {

struct generator_config {
  int n_stages{3};
  std::size_t patients_per_stage{100};
  std::size_t drivers_per_stage{5};
  double driver_expression_prob{0.8};
  std::size_t n_noise_genes{200};
  std::size_t noise_genes_per_patient{10};
  std::uint64_t seed{0};
  std::string cancer_type{"SYN"};

  void
  validate() const {
    auto bad = [](const std::string &m) { throw error(errc::config_invalid, m); };
    if (n_stages < 2 || n_stages > 4)
      bad("n_stages must be in [2, 4]");
    if (patients_per_stage < 1)
      bad("patients_per_stage must be >= 1");
    if (drivers_per_stage < 1)
      bad("drivers_per_stage must be >= 1");
    if (!(driver_expression_prob > 0.0 && driver_expression_prob <= 1.0))
      bad("driver_expression_prob must be in (0, 1]");
    if (noise_genes_per_patient > n_noise_genes)
      bad("noise_genes_per_patient exceeds n_noise_genes");
    if (cancer_type.empty())
      bad("cancer_type must be non-empty");
  }
};

[[nodiscard]] inline auto
driver_gene_name(int stage, std::size_t i) -> std::string {
  return fmt::format("DRV{}_{:03}", stage, i + 1);
}

[[nodiscard]] inline auto
noise_gene_name(std::size_t i) -> std::string {
  return fmt::format("NOISE{:05}", i + 1);
}

struct synthetic_cohort {
  oncoprog::cohort cohort;
  std::vector<std::vector<std::string>> drivers;  // index = stage - 1
  std::vector<std::string> noise_genes;
};

// Stage s patients draw each driver of stages 1..s independently and then a
// uniform sample of distinct noise genes. Sequence order is stage-1 drivers,
// stage-2 drivers, ..., noise, each group shuffled. If a patient would draw
// no genes at all (possible only without noise) the driver draws repeat.
[[nodiscard]] inline auto
generate(const generator_config &cfg) -> synthetic_cohort {
  cfg.validate();
  rng gen(cfg.seed);
  synthetic_cohort out;
  for (int s = 1; s <= cfg.n_stages; ++s) {
    auto &d = out.drivers.emplace_back();
    for (std::size_t i = 0; i < cfg.drivers_per_stage; ++i)
      d.push_back(driver_gene_name(s, i));
  }
  for (std::size_t i = 0; i < cfg.n_noise_genes; ++i)
    out.noise_genes.push_back(noise_gene_name(i));

  std::vector<std::size_t> pool(cfg.n_noise_genes);
  const auto total = static_cast<std::size_t>(cfg.n_stages) * cfg.patients_per_stage;
  std::size_t serial = 0;
  for (int s = 1; s <= cfg.n_stages; ++s) {
    for (std::size_t n = 0; n < cfg.patients_per_stage; ++n) {
      patient p{fmt::format("SYN{:0{}}", ++serial, std::to_string(total).size()),
                cfg.cancer_type, s, {}};
      do {
        p.genes.clear();
        for (int stage = 1; stage <= s; ++stage) {
          std::vector<std::string> group;
          for (const auto &g : out.drivers[static_cast<std::size_t>(stage - 1)])
            if (gen.bernoulli(cfg.driver_expression_prob))
              group.push_back(g);
          gen.shuffle(std::span(group));
          p.genes.insert(p.genes.end(), group.begin(), group.end());
        }
      } while (p.genes.empty() && cfg.noise_genes_per_patient == 0);

      // partial Fisher-Yates draw of distinct noise genes
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      for (std::size_t i = 0; i < cfg.noise_genes_per_patient; ++i) {
        const auto j = i + gen.below(pool.size() - i);
        std::swap(pool[i], pool[j]);
        p.genes.push_back(out.noise_genes[pool[i]]);
      }
      out.cohort.patients.push_back(std::move(p));
    }
  }
  return out;
}

[[nodiscard]] inline auto
manifest(const synthetic_cohort &sc, const generator_config &cfg) -> nlohmann::json {
  nlohmann::json drivers = nlohmann::json::object();
  for (std::size_t s = 0; s < sc.drivers.size(); ++s)
    drivers[std::to_string(s + 1)] = sc.drivers[s];
  return nlohmann::json{
    {"config",
     {{"n_stages", cfg.n_stages},
      {"patients_per_stage", cfg.patients_per_stage},
      {"drivers_per_stage", cfg.drivers_per_stage},
      {"driver_expression_prob", cfg.driver_expression_prob},
      {"n_noise_genes", cfg.n_noise_genes},
      {"noise_genes_per_patient", cfg.noise_genes_per_patient},
      {"seed", cfg.seed},
      {"cancer_type", cfg.cancer_type}}},
    {"drivers", std::move(drivers)},
    {"n_patients", sc.cohort.size()}};
}

}  // namespace oncoprog

#endif  // ONCOPROG_SYNTH_HPP
