#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mmfuse/embedding_store.hpp"
#include "mmfuse/eval_bench.hpp"
#include "mmfuse/fusion_gates.hpp"
#include "mmfuse/pipeline.hpp"
#include "mmfuse/trainer.hpp"
#include "mmfuse/weight_analysis.hpp"

namespace mmfuse {

/// Controls a synthetic corpus with a planted modality structure.
///
/// Words come in clusters that share a latent meaning. A concrete-like
/// cluster's latent lives in one half of the latent space and is expressed in
/// both modalities; an abstract-like cluster's latent lives in the other half
/// and is expressed only linguistically, its visual vectors being pure noise.
/// Each type also carries a small shared offset so the type is linearly
/// recoverable from the vectors.
struct SyntheticSpec {
  std::size_t vocab_size = 500;
  Eigen::Index dim = 16;            // per modality, even
  std::size_t num_pairs = 400;      // association pairs eligible for training
  double fraction_abstract = 0.5;   // share of abstract-like clusters
  double noise = 0.3;               // word jitter and observation noise
  std::uint64_t seed = 0;

  std::size_t cluster_size = 5;
  double benchmark_fraction = 0.2;  // clusters reserved for benchmarks
  double visual_fraction = 0.6;     // words with a true visual vector
  double type_offset = 0.5;
  std::size_t dev_pairs = 300;      // low-score unrelated pairs
  std::size_t benchmarks = 2;
  std::size_t benchmark_pairs = 150;
  std::size_t images_per_word = 0;  // >0 also emits per-image features
};

void validate(const SyntheticSpec& spec);

struct SyntheticCorpus {
  EmbeddingTable ling;
  EmbeddingTable visual;  // visual-vocabulary words only
  std::vector<AssociationPair> pairs;
  ConcretenessTable concreteness;  // 1 abstract-like, 7 concrete-like
  SupersenseMap senses;            // abstractish / concretish
  std::vector<SimilarityBenchmark> benchmarks;
  std::optional<ImageFeatureSet> images;

  WordSet abstract_words;
  WordSet concrete_words;
  WordSet train_vocab;      // words of non-benchmark clusters
  WordSet benchmark_vocab;  // words of benchmark clusters

  PipelineData pipeline_data() const;
};

SyntheticCorpus generate(const SyntheticSpec& spec);

/// Writes ling.txt, visual.txt, pairs.tsv, concreteness.tsv,
/// supersenses.tsv, bench_<name>.tsv for each benchmark and, when present,
/// images.tsv. Returns the written paths in that order.
std::vector<std::filesystem::path> write_corpus(
    const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace mmfuse
