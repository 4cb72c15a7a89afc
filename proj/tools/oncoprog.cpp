// Command-line driver: preprocess, train, evaluate, predict, synth, ablate.
//
// Machine-readable outputs go to files under --out; progress goes to stderr.
// Exit codes: 0 success, 1 numeric/model failure, 2 input/config failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "oncoprog/oncoprog.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace oncoprog;

namespace {

void
write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text))
    throw error(errc::io_error, "cannot write " + path.string());
}

void
write_json(const fs::path &path, const json &j) {
  write_text(path, j.dump(2) + "\n");
}

auto
read_json(const fs::path &path) -> json {
  std::ifstream in(path);
  if (!in)
    throw error(errc::io_error, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    throw error(errc::config_invalid, path.string() + ": " + e.what());
  }
}

auto
parse_top_x(const std::string &s) -> std::size_t {
  if (s == "all")
    return all_genes;
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception &) {
    pos = 0;
  }
  if (pos != s.size() || v < 1)
    throw error(errc::config_invalid, "top-x must be a positive integer or 'all', got '" + s + "'");
  return static_cast<std::size_t>(v);
}

auto
parse_grid(const std::string &s) -> std::vector<std::size_t> {
  std::vector<std::size_t> grid;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    grid.push_back(parse_top_x(std::string(tsv::trim(item))));
  return grid;
}

// Contents of dataset.json: both partitions plus the stage-filtered cohort the
// heatmap and future predictions read gene sets from.
struct run_data {
  encoded_dataset train;
  encoded_dataset test;
  cohort patients;
};

auto
to_json(const cohort &c) -> json {
  json out = json::array();
  for (const auto &p : c.patients)
    out.push_back({{"patient_id", p.id},
                   {"cancer_type", p.cancer_type},
                   {"stage", p.stage},
                   {"genes", p.genes}});
  return out;
}

auto
load_run_data(const fs::path &path) -> run_data {
  const auto j = read_json(path);
  run_data d;
  try {
    d.train = j.at("train").get<encoded_dataset>();
    d.test = j.at("test").get<encoded_dataset>();
    for (const auto &p : j.at("patients"))
      d.patients.patients.push_back({p.at("patient_id").get<std::string>(),
                                     p.at("cancer_type").get<std::string>(),
                                     p.at("stage").get<int>(),
                                     p.at("genes").get<std::vector<std::string>>()});
  } catch (const json::exception &e) {
    throw error(errc::config_invalid, path.string() + ": " + e.what());
  }
  return d;
}

auto
load_vocab(const fs::path &path) -> mutation_vocabulary {
  try {
    return read_json(path).get<mutation_vocabulary>();
  } catch (const json::exception &e) {
    throw error(errc::config_invalid, path.string() + ": " + e.what());
  }
}

struct preprocess_flags {
  std::string mutations;
  std::string clinical;
  std::string top_x{"200"};
  std::string cancer_type;
  preprocess_config cfg;
};

void
add_preprocess_flags(CLI::App *cmd, preprocess_flags &f) {
  cmd->add_option("--mutations", f.mutations, "Mutations TSV (patient_id, gene[, sample_order])")
    ->required()
    ->check(CLI::ExistingFile);
  cmd->add_option("--clinical", f.clinical, "Clinical TSV (patient_id, cancer_type, stage)")
    ->required()
    ->check(CLI::ExistingFile);
  cmd->add_option("--top-x", f.top_x, "Top-x mutations per list, or 'all'")->capture_default_str();
  cmd->add_option("--min-stage-fraction", f.cfg.min_stage_fraction,
                  "Drop stages holding less than this fraction of patients")
    ->capture_default_str();
  cmd->add_option("--min-class-size", f.cfg.min_class_size,
                  "Minimum patients for a cancer type to be modeled")
    ->capture_default_str();
  cmd->add_option("--split-fraction", f.cfg.split_fraction, "Training fraction per stage")
    ->capture_default_str();
  cmd->add_option("--seed", f.cfg.seed, "Split seed")->capture_default_str();
  cmd->add_option("--max-len", f.cfg.max_len,
                  "Sequence length (0 = 95th percentile, capped at 512)")
    ->capture_default_str();
  cmd->add_flag("--oversample", f.cfg.oversample, "Replicate minority-stage training rows");
  cmd->add_option("--cancer-type", f.cancer_type, "Cancer type code to model");
}

// Loads the cohort and narrows it to the requested (or only) cancer type.
auto
load_selected_cohort(preprocess_flags &f) -> cohort_build {
  f.cfg.top_x = parse_top_x(f.top_x);
  auto built = load_cohort(f.mutations, f.clinical);
  std::set<std::string> types;
  for (const auto &p : built.cohort.patients)
    types.insert(p.cancer_type);
  if (f.cancer_type.empty()) {
    if (types.size() > 1) {
      const auto eligible = eligible_cancer_types(built.cohort, f.cfg.min_class_size);
      throw error(errc::config_invalid,
                  fmt::format("cohort holds {} cancer types; pass --cancer-type (eligible: {})",
                              types.size(), fmt::join(eligible, ", ")));
    }
    if (!types.empty())
      f.cancer_type = *types.begin();
  }
  built.cohort = restrict_to_cancer_type(built.cohort, f.cancer_type);
  if (built.cohort.size() < f.cfg.min_class_size)
    throw error(errc::config_invalid,
                fmt::format("cancer type '{}' has {} patients, below --min-class-size {}",
                            f.cancer_type, built.cohort.size(), f.cfg.min_class_size));
  return built;
}

struct model_flags {
  train_config train;
  model_dims dims;
};

void
add_model_flags(CLI::App *cmd, model_flags &f, bool with_seed) {
  cmd->add_option("--epochs", f.train.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch-size", f.train.batch_size, "Mini-batch size")->capture_default_str();
  cmd->add_option("--learning-rate", f.train.learning_rate, "Adam step size")
    ->capture_default_str();
  if (with_seed)
    cmd->add_option("--seed", f.train.seed, "Initialization and shuffling seed")
      ->capture_default_str();
  cmd->add_option("--embedding", f.dims.embedding, "Embedding width")->capture_default_str();
  cmd->add_option("--hidden", f.dims.hidden, "LSTM width per direction")->capture_default_str();
  cmd->add_option("--dense", f.dims.dense, "Hidden dense width")->capture_default_str();
}

void
progress(const std::string &msg) {
  std::cerr << msg << '\n';
}

auto
epoch_logger(std::size_t epochs) -> epoch_callback {
  return [epochs](std::size_t e, double loss) {
    if (e == 1 || e == epochs || e % 10 == 0)
      progress(fmt::format("epoch {}/{} mean_loss {:.6f}", e, epochs, loss));
  };
}

}  // namespace

int
main(int argc, char **argv) {
  CLI::App app{"Stage prediction, mutation progression and drug recommendation from cohort "
               "mutation sequences"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML configuration file; flags override it");
  std::string out_dir;
  std::size_t threads = 1;

  auto add_out = [&](CLI::App *cmd) {
    cmd->add_option("--out", out_dir, "Output directory")->required();
  };

  // preprocess
  preprocess_flags pre;
  auto *cmd_pre = app.add_subcommand("preprocess", "Filter, encode and split a cohort");
  add_preprocess_flags(cmd_pre, pre);
  add_out(cmd_pre);

  // train
  model_flags mdl;
  std::string data_path, vocab_path, checkpoint_path;
  auto *cmd_train = app.add_subcommand("train", "Train the recurrent stage classifier");
  cmd_train->add_option("--data", data_path, "dataset.json (default <out>/dataset.json)");
  cmd_train->add_option("--vocab", vocab_path, "vocab.json (default <out>/vocab.json)");
  add_model_flags(cmd_train, mdl, true);
  add_out(cmd_train);

  // evaluate
  auto *cmd_eval = app.add_subcommand("evaluate", "Accuracy, confusion and per-stage ROC curves");
  cmd_eval->add_option("--checkpoint", checkpoint_path,
                       "checkpoint.json (default <out>/checkpoint.json)");
  cmd_eval->add_option("--data", data_path, "dataset.json (default <out>/dataset.json)");
  cmd_eval->add_option("--vocab", vocab_path, "vocab.json (default <out>/vocab.json)");
  cmd_eval->add_option("--threads", threads, "Inference threads")->capture_default_str();
  add_out(cmd_eval);

  // predict
  double threshold = default_future_threshold;
  std::string drug_db, validation_db;
  bool no_drugs = false, no_svg = false;
  auto *cmd_predict =
    app.add_subcommand("predict", "Future mutations, stage heatmap and drug recommendations");
  cmd_predict->add_option("--checkpoint", checkpoint_path,
                          "checkpoint.json (default <out>/checkpoint.json)");
  cmd_predict->add_option("--data", data_path, "dataset.json (default <out>/dataset.json)");
  cmd_predict->add_option("--vocab", vocab_path, "vocab.json (default <out>/vocab.json)");
  cmd_predict->add_option("--threshold", threshold, "Minimum stage frequency for a future gene")
    ->capture_default_str();
  cmd_predict->add_option("--drug-db", drug_db, "Primary drug-target TSV")
    ->check(CLI::ExistingFile);
  cmd_predict->add_option("--validation-db", validation_db, "Validation drug-target TSV")
    ->check(CLI::ExistingFile);
  cmd_predict->add_flag("--no-drugs", no_drugs, "Skip drug recommendations");
  cmd_predict->add_flag("--no-svg", no_svg, "Skip the SVG heatmap");
  cmd_predict->add_option("--threads", threads, "Inference threads")->capture_default_str();
  add_out(cmd_predict);

  // synth
  generator_config gen;
  auto *cmd_synth = app.add_subcommand("synth", "Generate a synthetic cohort with planted drivers");
  cmd_synth->add_option("--stages", gen.n_stages, "Number of stages (2-4)")->capture_default_str();
  cmd_synth->add_option("--patients-per-stage", gen.patients_per_stage)->capture_default_str();
  cmd_synth->add_option("--drivers-per-stage", gen.drivers_per_stage)->capture_default_str();
  cmd_synth->add_option("--driver-prob", gen.driver_expression_prob)->capture_default_str();
  cmd_synth->add_option("--noise-genes", gen.n_noise_genes)->capture_default_str();
  cmd_synth->add_option("--noise-per-patient", gen.noise_genes_per_patient)->capture_default_str();
  cmd_synth->add_option("--seed", gen.seed)->capture_default_str();
  cmd_synth->add_option("--cancer-type", gen.cancer_type)->capture_default_str();
  add_out(cmd_synth);

  // ablate
  preprocess_flags abl;
  model_flags abl_mdl;
  std::string grid{"50,100,200"};
  auto *cmd_ablate = app.add_subcommand("ablate", "Compare top-x settings on one cohort");
  add_preprocess_flags(cmd_ablate, abl);
  add_model_flags(cmd_ablate, abl_mdl, false);
  cmd_ablate->add_option("--grid", grid, "Comma-separated top-x values ('all' = no filtering)")
    ->capture_default_str();
  cmd_ablate->add_option("--threads", threads, "Inference threads")->capture_default_str();
  add_out(cmd_ablate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }

  try {
    const fs::path out(out_dir);
    fs::create_directories(out);
    auto or_default = [&out](const std::string &given, const char *name) {
      return given.empty() ? out / name : fs::path(given);
    };

    if (cmd_pre->parsed()) {
      auto built = load_selected_cohort(pre);
      progress(fmt::format("cohort: {} patients of type {}", built.cohort.size(), pre.cancer_type));
      const auto d = prepare(built.cohort, pre.cfg);
      progress(fmt::format("significant set: {} genes; train {} / test {}", d.vocab.genes().size(),
                           d.split.train.size(), d.split.test.size()));
      write_json(out / "vocab.json", json(d.vocab));
      write_json(out / "split.json", split_manifest(d.split, pre.cfg));
      write_json(out / "discards.json", json(built.discards));
      write_text(out / "dataset.json",
                 json{{"train", d.split.train},
                      {"test", d.split.test},
                      {"oversample", pre.cfg.oversample},
                      {"patients", to_json(d.filtered)}}
                     .dump() +
                   "\n");
    } else if (cmd_train->parsed()) {
      const auto vocab = load_vocab(or_default(vocab_path, "vocab.json"));
      const auto dataset_path = or_default(data_path, "dataset.json");
      const auto data = load_run_data(dataset_path);
      const bool over = read_json(dataset_path).value("oversample", false);
      const auto weights = compute_class_weights(data.train.stage_sizes());
      auto dims = mdl.dims;
      dims.vocab = vocab.size();
      dims.classes = data.train.num_classes();
      auto params = init_params(dims, weight_vector(weights, data.train.class_map), mdl.train.seed);
      const auto result = train(over ? oversample(data.train) : data.train, std::move(params),
                                weights, mdl.train, epoch_logger(mdl.train.epochs));
      save_checkpoint({result.params, data.train.class_map, vocab.hash()}, out / "checkpoint.json");
      std::ostringstream loss;
      write_loss_csv(loss, result.loss_history);
      write_text(out / "loss.csv", loss.str());
    } else if (cmd_eval->parsed()) {
      const auto vocab = load_vocab(or_default(vocab_path, "vocab.json"));
      const auto data = load_run_data(or_default(data_path, "dataset.json"));
      const auto ckpt = load_checkpoint(or_default(checkpoint_path, "checkpoint.json"), vocab);
      const auto report = evaluate(data.test, ckpt.params, threads);
      write_json(out / "report.json", to_json(report));
      for (const auto &curve : report.roc) {
        std::ostringstream csv;
        write_roc_csv(csv, curve);
        write_text(out / fmt::format("roc_stage{}.csv",
                                     report.class_map[static_cast<std::size_t>(curve.class_id)]),
                   csv.str());
      }
      progress(fmt::format("accuracy {:.4f}, mean AUC {:.4f} on {} test patients", report.accuracy,
                           report.mean_auc(), report.n_test));
    } else if (cmd_predict->parsed()) {
      if (!no_drugs && (drug_db.empty() || validation_db.empty()))
        throw error(errc::config_invalid, "--drug-db and --validation-db are required unless --no-drugs");
      const auto vocab = load_vocab(or_default(vocab_path, "vocab.json"));
      const auto data = load_run_data(or_default(data_path, "dataset.json"));
      const auto ckpt = load_checkpoint(or_default(checkpoint_path, "checkpoint.json"), vocab);
      const auto report = evaluate(data.test, ckpt.params, threads);
      const auto heatmap = build_stage_gene_matrix(data.train, vocab, data.patients);
      emit_heatmap(heatmap, out / "heatmap.csv", no_svg ? fs::path{} : out / "heatmap.svg");

      prepared_data pd;
      pd.filtered = data.patients;
      pd.split = {data.train, data.test};
      const auto predictions = predict_test_patients(pd, report, heatmap, threshold);
      write_json(out / "predictions.json", json(predictions));
      progress(fmt::format("future-mutation predictions for {} patients", predictions.size()));

      if (!no_drugs) {
        std::set<std::string> genes;
        for (const auto &p : predictions)
          for (const auto &f : p.future)
            genes.insert(f.gene);
        const auto recs = recommend({genes.begin(), genes.end()},
                                    load_drug_table(fs::path(drug_db), drug_source::primary_db),
                                    load_drug_table(fs::path(validation_db), drug_source::validation_db));
        write_json(out / "recommendations.json", to_json(recs));
        progress(fmt::format("drug recommendations for {} genes", recs.size()));
      }
    } else if (cmd_synth->parsed()) {
      const auto sc = generate(gen);
      write_cohort(sc.cohort, out / "mutations.tsv", out / "clinical.tsv");
      write_json(out / "manifest.json", manifest(sc, gen));
      progress(fmt::format("synthetic cohort: {} patients", sc.cohort.size()));
    } else if (cmd_ablate->parsed()) {
      const auto x_grid = parse_grid(grid);
      auto built = load_selected_cohort(abl);
      abl_mdl.train.seed = abl.cfg.seed;
      pipeline_config cfg{abl.cfg, abl_mdl.train, abl_mdl.dims, default_future_threshold, threads};
      const auto rows = ablation_run(built.cohort, x_grid, cfg, [](std::size_t x) {
        progress("ablation run top_x=" + format_top_x(x));
      });
      std::ostringstream csv;
      write_ablation_csv(csv, rows);
      write_text(out / "ablation.csv", csv.str());
    }
  } catch (const error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const fs::filesystem_error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
