#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vf/net.hpp"
#include "vf/rng.hpp"
#include "vf/variant.hpp"

namespace vf {

struct GeneratorConfig {
  double beta = 100.0;  // target inverse temperature of the relaxation
  std::uint64_t seed = 0;
  int epochs = 150;  // adversarial epochs
  int pretrain_epochs = 50;
  int embedding_dim = 32;
  int hidden_dim = 64;
  double learning_rate = 1e-3;      // pretraining
  double adv_learning_rate = 1e-4;  // adversarial phase
  int batch_size = 32;
  enum class Anneal { exponential, linear } anneal = Anneal::exponential;
  double grad_clip = 5.0;
};

struct TrainingRecord {
  int epoch = 0;
  std::string phase;  // "pretrain" | "disc" | "gen"
  double loss = 0.0;
};

struct NeuralGenerator {
  GeneratorNet gen;
  DiscriminatorNet disc;
};

// Baseline n-gram model implementing the same sampling/scoring surface.
struct MarkovModel {
  int order = 1;
  double smoothing = 0.0;
  // context (last `order` ids, PAD-padded) -> next id (event or EOS) -> count
  std::map<std::vector<int>, std::map<int, double>> table;
};

struct TrainedGenerator {
  TokenCodec codec;
  GeneratorConfig config;
  std::variant<NeuralGenerator, MarkovModel> model;
  std::vector<TrainingRecord> training_log;

  bool is_markov() const noexcept {
    return std::holds_alternative<MarkovModel>(model);
  }
};

// Adversarial training: MLE pretraining, then alternating discriminator /
// generator steps on relaxed rollouts with the inverse temperature annealed
// from 1 toward beta. Deterministic under (log, cfg, cfg.seed).
TrainedGenerator train(const UniqueVariantLog& log, const GeneratorConfig& cfg);

// Inverse temperature at adversarial epoch `epoch` (0-based) of `total`.
double annealed_inv_temp(const GeneratorConfig& cfg, int epoch, int total);

TrainedGenerator markov_train(const UniqueVariantLog& log, int order, double smoothing);

// One ancestral draw; rejections (undecodable token sequences) are nullopt.
std::optional<Variant> sample_one(const TrainedGenerator& gen, Rng& rng);

// n independent draws; draw i uses a stream derived from (seed, i), so draw
// streams are nested across increasing n and safely parallelizable.
std::vector<std::optional<Variant>> sample(const TrainedGenerator& gen, std::size_t n,
                                           std::uint64_t seed);

// Probability-of-real score in (1e-6, 1-1e-6). Throws on unencodable variants.
double discriminator_score(const TrainedGenerator& gen, const Variant& v);

void save_checkpoint(const TrainedGenerator& gen, const std::filesystem::path& path);
TrainedGenerator load_checkpoint(const std::filesystem::path& path);

}  // namespace vf
