#include <filesystem>
#include <set>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "oncoprog/preprocess.hpp"
#include "oracles.hpp"

using namespace oncoprog;

namespace {

const std::filesystem::path data_dir{ONCOPROG_TEST_DATA};

auto
make_patient(std::string id, int stage, std::vector<std::string> genes) -> patient {
  return patient{std::move(id), "BRCA", stage, std::move(genes)};
}

auto
five_patients() -> cohort {
  return load_cohort(data_dir / "five_mutations.tsv", data_dir / "five_clinical.tsv").cohort;
}

// Random cohort over a small gene alphabet.
auto
random_cohort(rng &gen, std::size_t n_patients, std::size_t n_genes, int n_stages) -> cohort {
  cohort c;
  for (std::size_t i = 0; i < n_patients; ++i) {
    patient p = make_patient("R" + std::to_string(i), 1 + static_cast<int>(gen.below(n_stages)), {});
    const auto len = 1 + gen.below(8);
    for (std::size_t t = 0; t < len; ++t)
      p.genes.push_back("G" + std::to_string(gen.below(n_genes)));
    c.patients.push_back(std::move(p));
  }
  return c;
}

auto
random_table(rng &gen) -> frequency_table {
  frequency_table t;
  const auto n_genes = 1 + gen.below(20);
  const auto n_stages = 1 + static_cast<int>(gen.below(4));
  for (int s = 1; s <= n_stages; ++s) {
    t.stage_sizes[s] = 1 + gen.below(30);
    auto &row = t.per_stage[s];
    for (std::size_t g = 0; g < n_genes; ++g) {
      const auto n = gen.below(6);  // small range forces ties
      if (n == 0)
        continue;
      row["G" + std::to_string(g)] = n;
      t.overall["G" + std::to_string(g)] += n;
    }
  }
  return t;
}

}  // namespace

TEST(CountFrequencies, DistinctPatients) {
  cohort c{{make_patient("P1", 1, {"TP53", "TP53"})}};
  const auto t = count_frequencies(c);
  EXPECT_EQ(t.overall, (gene_counts{{"TP53", 1}}));
  EXPECT_EQ(t.per_stage.at(1), (gene_counts{{"TP53", 1}}));
}

TEST(CountFrequencies, TwoPatients) {
  cohort c{{make_patient("P1", 1, {"A"}), make_patient("P2", 2, {"A", "B"})}};
  EXPECT_EQ(count_frequencies(c).overall, (gene_counts{{"A", 2}, {"B", 1}}));
}

TEST(CountFrequencies, FixtureMatchesHandCountAndRecount) {
  const auto c = five_patients();
  const auto t = count_frequencies(c);
  EXPECT_EQ(t.overall, (gene_counts{{"TP53", 3}, {"PIK3CA", 3}, {"CDH1", 3}, {"GATA3", 1},
                                    {"MAP3K1", 1}}));
  EXPECT_EQ(t.per_stage.at(1), (gene_counts{{"TP53", 2}, {"PIK3CA", 1}, {"GATA3", 1}}));
  EXPECT_EQ(t.per_stage.at(2), (gene_counts{{"PIK3CA", 1}, {"CDH1", 2}, {"TP53", 1}}));
  EXPECT_EQ(t.per_stage.at(3), (gene_counts{{"CDH1", 1}, {"MAP3K1", 1}, {"PIK3CA", 1}}));
  const auto r = oracle::recount_frequencies(c);
  EXPECT_EQ(t.overall, r.overall);
  EXPECT_EQ(t.per_stage, r.per_stage);
  EXPECT_EQ(t.stage_sizes, r.stage_sizes);
}

TEST(CountFrequencies, PerStageSumsToOverallOnRandomCohorts) {
  rng gen(101);
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = random_cohort(gen, 1 + gen.below(40), 12, 4);
    const auto t = count_frequencies(c);
    const auto r = oracle::recount_frequencies(c);
    ASSERT_EQ(t.overall, r.overall);
    ASSERT_EQ(t.per_stage, r.per_stage);
    for (const auto &[g, n] : t.overall) {
      std::size_t sum = 0;
      for (const auto &[s, row] : t.per_stage)
        sum += row.contains(g) ? row.at(g) : 0;
      ASSERT_EQ(sum, n);
    }
  }
}

TEST(CountFrequencies, EmptyCohort) {
  EXPECT_THROW((void)count_frequencies(cohort{}), error);
}

TEST(FilterSmallStages, RemovesStageBelowTenPercent) {
  cohort c;
  for (int i = 0; i < 50; ++i)
    c.patients.push_back(make_patient("A" + std::to_string(i), 1, {"X"}));
  for (int i = 0; i < 45; ++i)
    c.patients.push_back(make_patient("B" + std::to_string(i), 2, {"X"}));
  for (int i = 0; i < 5; ++i)
    c.patients.push_back(make_patient("C" + std::to_string(i), 3, {"X"}));
  const auto out = filter_small_stages(c, {});
  EXPECT_EQ(out.size(), 95u);
  for (const auto &p : out.patients)
    EXPECT_NE(p.stage, 3);
}

TEST(FilterSmallStages, EqualSizesUnchanged) {
  cohort c;
  for (int s = 1; s <= 4; ++s)
    for (int i = 0; i < 3; ++i)
      c.patients.push_back(make_patient(fmt::format("P{}_{}", s, i), s, {"X"}));
  EXPECT_EQ(filter_small_stages(c, {}), c);
}

TEST(FilterSmallStages, BoundaryIsKept) {
  cohort c;
  for (int i = 0; i < 90; ++i)
    c.patients.push_back(make_patient("A" + std::to_string(i), 1, {"X"}));
  for (int i = 0; i < 10; ++i)
    c.patients.push_back(make_patient("B" + std::to_string(i), 2, {"X"}));
  EXPECT_EQ(filter_small_stages(c, {}).size(), 100u);
}

TEST(FilterSmallStages, IdempotentOnRandomCohorts) {
  rng gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto c = random_cohort(gen, 2 + gen.below(60), 5, 4);
    preprocess_config cfg;
    cfg.min_stage_fraction = gen.uniform(0.0, 0.3);
    try {
      const auto once = filter_small_stages(c, cfg);
      ASSERT_EQ(filter_small_stages(once, cfg), once);
    } catch (const error &e) {
      ASSERT_EQ(e.code(), errc::all_stages_removed);
    }
  }
}

TEST(SignificantSet, SingleStageEqualsOverall) {
  frequency_table t;
  t.overall = {{"A", 3}, {"B", 2}, {"C", 1}};
  t.per_stage[1] = t.overall;
  t.stage_sizes[1] = 3;
  preprocess_config cfg;
  cfg.top_x = 2;
  EXPECT_EQ(build_significant_set(t, cfg).genes(), (std::vector<std::string>{"A", "B"}));
}

TEST(SignificantSet, ThreeGeneExample) {
  frequency_table t;
  t.overall = {{"A", 5}, {"B", 4}, {"C", 3}};
  t.per_stage[1] = {{"A", 4}, {"B", 2}};
  t.per_stage[2] = {{"A", 1}, {"B", 2}, {"C", 3}};
  preprocess_config cfg;
  cfg.top_x = 2;
  const auto v = build_significant_set(t, cfg);
  EXPECT_EQ(v.genes(), (std::vector<std::string>{"A", "B", "C"}));
  EXPECT_EQ(std::set<std::string>(v.genes().begin(), v.genes().end()),
            oracle::significant_set(t.overall, t.per_stage, 2));
}

TEST(SignificantSet, TieBreakIsLexicographic) {
  frequency_table t;
  t.overall = {{"ZETA", 2}, {"ALPHA", 2}, {"MID", 2}};
  t.per_stage[1] = t.overall;
  preprocess_config cfg;
  cfg.top_x = 2;
  EXPECT_EQ(build_significant_set(t, cfg).genes(), (std::vector<std::string>{"ALPHA", "MID"}));
}

TEST(SignificantSet, MatchesOracleOnRandomTables) {
  rng gen(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const auto t = random_table(gen);
    preprocess_config cfg;
    cfg.top_x = 1 + gen.below(5);
    const auto v = build_significant_set(t, cfg);
    const auto &genes = v.genes();
    const std::set<std::string> as_set(genes.begin(), genes.end());
    ASSERT_EQ(as_set.size(), genes.size()) << "duplicates";
    ASSERT_EQ(as_set, oracle::significant_set(t.overall, t.per_stage, cfg.top_x));
    const auto sx = oracle::top(t.overall, cfg.top_x);
    ASSERT_TRUE(std::equal(sx.begin(), sx.end(), genes.begin())) << "S_x is not a prefix";
    ASSERT_LE(genes.size(), cfg.top_x * (t.per_stage.size() + 1));
    for (std::size_t i = 0; i < genes.size(); ++i)
      ASSERT_EQ(v.id(genes[i]), static_cast<std::int32_t>(i) + mutation_vocabulary::first_gene);
  }
}

TEST(SignificantSet, AllGenesKeepsEverything) {
  const auto c = five_patients();
  preprocess_config cfg;
  cfg.top_x = all_genes;
  EXPECT_EQ(build_significant_set(count_frequencies(c), cfg).genes().size(), 5u);
}

TEST(Vocabulary, JsonRoundTripAndReservedIds) {
  const mutation_vocabulary v({"TP53", "PIK3CA"}, 200);
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.id("TP53"), 2);
  EXPECT_EQ(v.id("KRAS"), mutation_vocabulary::unk);
  EXPECT_EQ(v.gene(3), "PIK3CA");
  EXPECT_THROW((void)v.gene(mutation_vocabulary::unk), error);
  const nlohmann::json j = v;
  EXPECT_EQ(j, (nlohmann::json{{"genes", {"TP53", "PIK3CA"}}, {"top_x", 200}}));
  EXPECT_EQ(j.get<mutation_vocabulary>(), v);
  const mutation_vocabulary all({"A"}, all_genes);
  EXPECT_EQ(nlohmann::json(all).at("top_x"), "all");
  EXPECT_EQ(nlohmann::json(all).get<mutation_vocabulary>(), all);
  EXPECT_NE(v.hash(), mutation_vocabulary({"PIK3CA", "TP53"}, 200).hash());
  EXPECT_THROW(mutation_vocabulary({"A", "A"}, 1), error);
}

TEST(ClassWeights, Examples) {
  auto w = compute_class_weights({{1, 10}, {2, 10}});
  EXPECT_EQ(w.weights.at(1), 1.0);
  EXPECT_EQ(w.weights.at(2), 1.0);
  w = compute_class_weights({{1, 30}, {2, 10}});
  EXPECT_NEAR(w.weights.at(1), 0.6667, 5e-5);
  EXPECT_NEAR(w.weights.at(2), 2.0, 5e-5);
  EXPECT_EQ(fmt::format("{:.4f}", w.weights.at(1)), "0.6667");
  w = compute_class_weights({{3, 17}});
  EXPECT_EQ(w.weights.at(3), 0.5);
  try {
    (void)compute_class_weights({{1, 4}, {2, 0}});
    FAIL();
  } catch (const error &e) {
    EXPECT_EQ(e.code(), errc::zero_class_size);
  }
}

TEST(ClassWeights, ExactIdentityOnRandomSizes) {
  rng gen(9);
  for (int trial = 0; trial < 500; ++trial) {
    std::map<int, std::size_t> sizes;
    const auto k = 1 + gen.below(4);
    for (std::size_t s = 1; s <= k; ++s)
      sizes[static_cast<int>(s)] = 1 + gen.below(100000);
    const auto w = compute_class_weights(sizes);
    std::size_t total = 0;
    for (const auto &[s, c] : sizes)
      total += c;
    ASSERT_EQ(w.numerator, total);
    for (const auto &[s, c] : sizes) {
      // w_i c_i = numerator c_i / (2 c_i) = numerator / 2, in integers
      ASSERT_EQ(w.denominators.at(s), 2 * c);
      ASSERT_EQ(w.numerator * c * 2, w.denominators.at(s) * total);
      ASSERT_GT(w.weights.at(s), 0.0);
      ASSERT_NEAR(w.weights.at(s) * static_cast<double>(c), static_cast<double>(total) / 2.0,
                  1e-9 * static_cast<double>(total));
    }
  }
}

TEST(Encode, UnknownAndPadding) {
  cohort c{{make_patient("P1", 1, {"A", "Z"})}};
  const mutation_vocabulary v({"A", "B", "C"}, 3);
  const auto d = encode(c, v, 4);
  EXPECT_EQ(d.sequences[0], (std::vector<std::int32_t>{2, 1, 0, 0}));
  EXPECT_EQ(d.labels, std::vector<int>{0});
}

TEST(Encode, EmptyVocabularyGivesUnk) {
  cohort c{{make_patient("P1", 2, {"A", "B", "C"})}};
  const auto d = encode(c, mutation_vocabulary({}, 1), 3);
  EXPECT_EQ(d.sequences[0], (std::vector<std::int32_t>{1, 1, 1}));
}

TEST(Encode, TruncatesToMaxLen) {
  cohort c{{make_patient("P1", 2, {"A", "B", "C"})}};
  const auto d = encode(c, mutation_vocabulary({"C", "B", "A"}, 3), 2);
  EXPECT_EQ(d.sequences[0], (std::vector<std::int32_t>{4, 3}));
}

TEST(Encode, FixtureMatchesIndependentEncoding) {
  const auto c = five_patients();
  preprocess_config cfg;
  cfg.top_x = 2;
  const auto v = build_significant_set(count_frequencies(c), cfg);
  const auto d = encode(c, v, 4);
  const auto &genes = v.genes();
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::vector<std::int32_t> expect(4, 0);
    for (std::size_t t = 0; t < 4 && t < c.patients[i].genes.size(); ++t) {
      auto it = std::find(genes.begin(), genes.end(), c.patients[i].genes[t]);
      expect[t] = it == genes.end() ? 1 : static_cast<std::int32_t>(it - genes.begin()) + 2;
    }
    EXPECT_EQ(d.sequences[i], expect) << c.patients[i].id;
  }
  EXPECT_EQ(d.class_map, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(d.labels, (std::vector<int>{0, 0, 1, 1, 2}));
}

TEST(Encode, DecodeRecoversInVocabularySubsequence) {
  rng gen(77);
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = random_cohort(gen, 1 + gen.below(10), 10, 3);
    preprocess_config cfg;
    cfg.top_x = 1 + gen.below(4);
    const auto v = build_significant_set(count_frequencies(c), cfg);
    const auto d = encode(c, v, 16);
    for (std::size_t i = 0; i < c.size(); ++i) {
      std::vector<std::string> expect;
      for (const auto &g : c.patients[i].genes)
        if (v.contains(g))
          expect.push_back(g);
      ASSERT_EQ(decode(d.sequences[i], v), expect);
      ASSERT_EQ(d.sequences[i].size(), 16u);
      for (auto id : d.sequences[i])
        ASSERT_LT(static_cast<std::size_t>(id), v.size());
    }
  }
}

TEST(Encode, DatasetJsonRoundTrip) {
  const auto d = encode(five_patients(), mutation_vocabulary({"TP53"}, 1), 3);
  EXPECT_EQ(nlohmann::json(d).get<encoded_dataset>(), d);
}

TEST(DefaultMaxLen, NearestRankPercentile) {
  cohort c;
  for (std::size_t i = 1; i <= 20; ++i)
    c.patients.push_back(make_patient("P" + std::to_string(i), 1,
                                      std::vector<std::string>(i, "G")));
  EXPECT_EQ(default_max_len(c), 19u);  // ceil(0.95 * 20) = 19th smallest
  c.patients.push_back(make_patient("BIG", 1, std::vector<std::string>(1000, "G")));
  EXPECT_EQ(default_max_len(c), 20u);
  cohort huge{{make_patient("H", 1, std::vector<std::string>(900, "G"))}};
  EXPECT_EQ(default_max_len(huge), 512u);
}

namespace {

auto
labelled_dataset(std::size_t per_class, std::size_t classes) -> encoded_dataset {
  encoded_dataset d;
  d.max_len = 1;
  for (std::size_t k = 0; k < classes; ++k)
    d.class_map.push_back(static_cast<int>(k + 1));
  for (std::size_t i = 0; i < per_class * classes; ++i) {
    d.sequences.push_back({2});
    d.labels.push_back(static_cast<int>(i % classes));
    d.patient_ids.push_back("P" + std::to_string(i));
  }
  return d;
}

}  // namespace

TEST(Split, EightyTwentyPerClass) {
  const auto d = labelled_dataset(10, 3);
  preprocess_config cfg;
  cfg.seed = 7;
  const auto s = split(d, cfg);
  for (const auto &[stage, n] : s.train.stage_sizes())
    EXPECT_EQ(n, 8u) << stage;
  for (const auto &[stage, n] : s.test.stage_sizes())
    EXPECT_EQ(n, 2u) << stage;
}

TEST(Split, DeterministicAndSeedSensitive) {
  const auto d = labelled_dataset(50, 2);
  preprocess_config a, b;
  a.seed = 11;
  b.seed = 12;
  EXPECT_EQ(split(d, a).train, split(d, a).train);
  const auto sa = split(d, a), sb = split(d, b);
  EXPECT_NE(sa.train.patient_ids, sb.train.patient_ids);
  EXPECT_EQ(sa.train.stage_sizes(), sb.train.stage_sizes());
}

TEST(Split, PartitionsPreserveRowOrderAndCoverAll) {
  const auto d = labelled_dataset(7, 3);
  const auto s = split(d, {});
  std::vector<std::string> all = s.train.patient_ids;
  all.insert(all.end(), s.test.patient_ids.begin(), s.test.patient_ids.end());
  std::ranges::sort(all);
  auto ids = d.patient_ids;
  std::ranges::sort(ids);
  EXPECT_EQ(all, ids);
  auto index = [&](const std::string &id) {
    return std::ranges::find(d.patient_ids, id) - d.patient_ids.begin();
  };
  for (const auto *part : {&s.train, &s.test})
    for (std::size_t i = 1; i < part->size(); ++i)
      EXPECT_LT(index(part->patient_ids[i - 1]), index(part->patient_ids[i]));
}

TEST(Split, TinyClassRejected) {
  auto d = labelled_dataset(3, 2);
  d.class_map.push_back(3);
  d.sequences.push_back({2});
  d.labels.push_back(2);
  d.patient_ids.push_back("LONE");
  try {
    (void)split(d, {});
    FAIL();
  } catch (const error &e) {
    EXPECT_EQ(e.code(), errc::class_too_small);
  }
}

TEST(Oversample, BalancesClasses) {
  auto d = labelled_dataset(2, 2);
  for (int i = 0; i < 5; ++i) {
    d.sequences.push_back({3});
    d.labels.push_back(0);
    d.patient_ids.push_back("X" + std::to_string(i));
  }
  const auto o = oversample(d);
  EXPECT_EQ(o.stage_sizes(), (std::map<int, std::size_t>{{1, 7}, {2, 7}}));
  EXPECT_EQ(std::vector<std::string>(o.patient_ids.begin(), o.patient_ids.begin() + 9),
            d.patient_ids);
}

TEST(PreprocessConfig, Validation) {
  preprocess_config cfg;
  cfg.top_x = 0;
  EXPECT_THROW(cfg.validate(), error);
  cfg = {};
  cfg.min_stage_fraction = 1.0;
  EXPECT_THROW(cfg.validate(), error);
  cfg = {};
  cfg.split_fraction = 1.0;
  EXPECT_THROW(cfg.validate(), error);
}
