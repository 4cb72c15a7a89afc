#ifndef ONCOPROG_CHECKPOINT_HPP
#define ONCOPROG_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "oncoprog/error.hpp"
#include "oncoprog/model.hpp"
#include "oncoprog/preprocess.hpp"

namespace oncoprog {

struct checkpoint {
  model_params params;
  std::vector<int> class_map;  // class id -> stage ordinal
  std::uint64_t vocab_hash{};
};

[[nodiscard]] inline auto
to_json(const checkpoint &c) -> nlohmann::json {
  const auto d = c.params.dims();
  nlohmann::json tensors = nlohmann::json::object();
  for_each_tensor(c.params, [&tensors](std::string_view name, std::span<const double> t) {
    tensors[std::string(name)] = std::vector<double>(t.begin(), t.end());
  });
  return nlohmann::json{{"format", "oncoprog-checkpoint"},
                        {"version", 1},
                        {"vocab_hash", fmt::format("{:016x}", c.vocab_hash)},
                        {"dims",
                         {{"vocab", d.vocab},
                          {"embedding", d.embedding},
                          {"hidden", d.hidden},
                          {"dense", d.dense},
                          {"classes", d.classes}}},
                        {"class_map", c.class_map},
                        {"class_weights", c.params.class_weights},
                        {"tensors", std::move(tensors)}};
}

[[nodiscard]] inline auto
checkpoint_from_json(const nlohmann::json &j) -> checkpoint {
  if (j.value("format", "") != "oncoprog-checkpoint")
    throw error(errc::config_invalid, "not a checkpoint file");
  const auto &jd = j.at("dims");
  model_dims d{jd.at("vocab").get<std::size_t>(), jd.at("embedding").get<std::size_t>(),
               jd.at("hidden").get<std::size_t>(), jd.at("dense").get<std::size_t>(),
               jd.at("classes").get<std::size_t>()};
  checkpoint c;
  c.params = zeros_like(model_params{{matrix(d.vocab, d.embedding)},
                                     {matrix(d.embedding, 4 * d.hidden),
                                      matrix(d.hidden, 4 * d.hidden),
                                      std::vector<double>(4 * d.hidden)},
                                     {matrix(d.embedding, 4 * d.hidden),
                                      matrix(d.hidden, 4 * d.hidden),
                                      std::vector<double>(4 * d.hidden)},
                                     {matrix(2 * d.hidden, d.dense), std::vector<double>(d.dense)},
                                     {matrix(d.dense, d.classes), std::vector<double>(d.classes)},
                                     {}});
  c.params.class_weights = j.at("class_weights").get<std::vector<double>>();
  c.class_map = j.at("class_map").get<std::vector<int>>();
  c.vocab_hash = std::stoull(j.at("vocab_hash").get<std::string>(), nullptr, 16);
  const auto &jt = j.at("tensors");
  for_each_tensor(c.params, [&jt](std::string_view name, std::span<double> t) {
    const auto values = jt.at(std::string(name)).get<std::vector<double>>();
    if (values.size() != t.size())
      throw error(errc::shape_mismatch, "tensor " + std::string(name) + " has wrong length");
    std::ranges::copy(values, t.begin());
  });
  if (c.class_map.size() != d.classes)
    throw error(errc::shape_mismatch, "class map length differs from class count");
  validate(c.params);
  return c;
}

inline void
save_checkpoint(const checkpoint &c, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw error(errc::io_error, "cannot write " + path.string());
  out << to_json(c).dump() << '\n';
}

// Loads a checkpoint and checks that it was trained against `vocab`.
[[nodiscard]] inline auto
load_checkpoint(const std::filesystem::path &path, const mutation_vocabulary &vocab)
  -> checkpoint {
  std::ifstream in(path);
  if (!in)
    throw error(errc::io_error, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception &e) {
    throw error(errc::config_invalid, path.string() + ": " + e.what());
  }
  auto c = checkpoint_from_json(j);
  if (c.vocab_hash != vocab.hash() || c.params.dims().vocab != vocab.size())
    throw error(errc::vocabulary_mismatch,
                path.string() + " was trained against a different vocabulary");
  return c;
}

}  // namespace oncoprog

#endif  // ONCOPROG_CHECKPOINT_HPP
