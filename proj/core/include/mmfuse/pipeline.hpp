#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mmfuse/cross_modal_map.hpp"
#include "mmfuse/eval_bench.hpp"
#include "mmfuse/fusion_gates.hpp"
#include "mmfuse/trainer.hpp"

namespace mmfuse {

// End-to-end wiring shared by the CLI, the data-size ablation and the
// acceptance suite: map, prepare gate inputs, train, evaluate.

struct PipelineData {
  EmbeddingTable ling;
  EmbeddingTable visual;
  std::vector<AssociationPair> pairs;
  std::vector<SimilarityBenchmark> benchmarks;
  SupersenseMap senses;
};

struct PreparedData {
  MappingModel mapping;
  /// Linguistic rows for every word the run touches (pairs and benchmarks).
  EmbeddingTable ling;
  EmbeddingTable predicted;
  PairSplit split;
  WordSet visual_vocab;
};

/// Fits the ridge map on the words with visual vectors (with `lambda`, or
/// the CV choice over `lambda_grid` when it is non-empty), predicts visual
/// vectors and splits the association pairs.
PreparedData prepare(const PipelineData& data, double lambda,
                     double score_threshold = 0.2,
                     const std::vector<double>& lambda_grid = {},
                     int folds = 5);

/// Linguistic rows restricted to words named by pairs or benchmarks, kept in
/// linguistic-table order.
EmbeddingTable restrict_to_used(const EmbeddingTable& ling,
                                const std::vector<AssociationPair>& pairs,
                                std::span<const SimilarityBenchmark> benchmarks);

struct RunConfig {
  GateScope scope = GateScope::sample;
  GateForm form = GateForm::value;
  TrainConfig train;
  FusionOptions fusion;
};

struct RunOutcome {
  TrainResult trained;
  std::vector<BenchmarkResult> results;  // per benchmark, ALL/VIS/ZS
  double mean_rho = 0.0;                 // mean ALL rho over benchmarks
};

GateModel initial_model(const RunConfig& config, const GateInputs& inputs);

/// Trains on `train` (defaults to the prepared training split) and scores
/// the fused table on every benchmark.
RunOutcome train_and_evaluate(const PipelineData& data,
                              const PreparedData& prepared,
                              const GateInputs& inputs, const RunConfig& config,
                              const AssociationPairSet* train = nullptr);

}  // namespace mmfuse
