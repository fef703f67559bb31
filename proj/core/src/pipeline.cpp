#include "mmfuse/pipeline.hpp"

#include "mmfuse/error.hpp"

namespace mmfuse {

EmbeddingTable restrict_to_used(
    const EmbeddingTable& ling, const std::vector<AssociationPair>& pairs,
    std::span<const SimilarityBenchmark> benchmarks) {
  WordSet used = benchmark_vocabulary(benchmarks);
  for (const auto& p : pairs) {
    used.insert(p.cue);
    used.insert(p.target);
  }
  std::vector<std::string> words;
  for (const auto& w : ling.words()) {
    if (used.contains(w)) words.push_back(w);
  }
  if (words.empty()) {
    throw Error("no pair or benchmark word has a linguistic vector");
  }
  return ling.subset(words);
}

PreparedData prepare(const PipelineData& data, double lambda,
                     double score_threshold,
                     const std::vector<double>& lambda_grid, int folds) {
  PreparedData out;
  auto aligned = align_for_mapping(data.ling, data.visual);
  if (!lambda_grid.empty()) {
    lambda = select_lambda(aligned.ling, aligned.visual, lambda_grid, folds)
                 .best_lambda;
  }
  out.mapping = fit_ridge(aligned.ling, aligned.visual, lambda);
  out.ling = restrict_to_used(data.ling, data.pairs, data.benchmarks);
  out.predicted = predict_visual(out.ling, out.mapping);
  out.visual_vocab = data.visual.vocabulary();

  const WordSet bench_vocab = benchmark_vocabulary(data.benchmarks);
  const WordSet ling_vocab = out.ling.vocabulary();
  out.split = split_pairs(data.pairs, {score_threshold, &bench_vocab,
                                       &ling_vocab});
  return out;
}

GateModel initial_model(const RunConfig& config, const GateInputs& inputs) {
  return GateModel::initial(config.scope, config.form,
                            inputs.ling_matrix().cols(),
                            inputs.visual_matrix().cols(),
                            inputs.sense_inventory(), config.train.seed);
}

RunOutcome train_and_evaluate(const PipelineData& data,
                              const PreparedData& prepared,
                              const GateInputs& inputs, const RunConfig& config,
                              const AssociationPairSet* train) {
  RunOutcome out{
      mmfuse::train(initial_model(config, inputs),
                    train ? *train : prepared.split.train, prepared.split.dev,
                    inputs, config.train),
      {},
      0.0};
  const FusedTable fused = build_fused_table(out.trained.model, inputs);
  for (const auto& bench : data.benchmarks) {
    for (auto& r : evaluate(fused, bench, prepared.visual_vocab)) {
      out.results.push_back(std::move(r));
    }
  }
  out.mean_rho = mean_all_rho(out.results);
  return out;
}

}  // namespace mmfuse
