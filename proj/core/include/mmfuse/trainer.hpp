#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mmfuse/eval_bench.hpp"
#include "mmfuse/fusion_gates.hpp"

namespace mmfuse {

struct AssociationPair {
  std::string cue;
  std::string target;
  double score = 0.0;  // in (0, 1]
};

struct AssociationPairSet {
  std::vector<AssociationPair> pairs;
  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

struct PairSplit {
  AssociationPairSet train;
  AssociationPairSet dev;
  std::size_t out_of_vocabulary = 0;  // dropped from both splits
  std::size_t below_threshold = 0;    // in-vocabulary, sent to dev
  std::size_t leaked = 0;             // touch a benchmark word, sent to dev
};

struct PairFilter {
  double score_threshold = 0.2;
  const WordSet* benchmark_vocab = nullptr;
  const WordSet* ling_vocab = nullptr;
};

/// Reads `cue TAB target TAB score` lines and splits them. Train keeps pairs
/// with score >= threshold, both words in the linguistic vocabulary and
/// neither in any benchmark. Every other in-vocabulary pair goes to dev.
PairSplit split_pairs(std::vector<AssociationPair> pairs,
                      const PairFilter& filter);
PairSplit read_pairs(std::istream& in, const PairFilter& filter);
/// Parses without filtering.
std::vector<AssociationPair> parse_pairs(std::istream& in);
PairSplit load_pairs(const std::filesystem::path& path,
                     const PairFilter& filter);
void write_pairs(std::ostream& out, const std::vector<AssociationPair>& pairs);

/// Hinge terms for one association pair with negatives n1 and n2:
/// max(0, margin - w1.w2 + w1.n1) + max(0, margin - w1.w2 + w2.n2).
double pair_loss(const Vector& w1, const Vector& w2, const Vector& n1,
                 const Vector& n2, double margin = 1.0);

/// Row indices into GateInputs for one training example.
struct TrainingExample {
  Eigen::Index w1 = 0;
  Eigen::Index w2 = 0;
  Eigen::Index n1 = 0;
  Eigen::Index n2 = 0;
};

struct GradientResult {
  GateModel gradient;  // same kind and shapes as the model
  double loss = 0.0;   // summed pair_loss over the batch
};

/// Exact subgradient of the summed pair_loss over `batch` with respect to
/// every gate parameter. Inactive hinges (argument <= 0) contribute nothing.
GradientResult gradients(const GateModel& model, const GateInputs& inputs,
                         std::span<const TrainingExample> batch,
                         double margin = 1.0);

/// Two independent uniform draws from `pool`, each excluding the pair's
/// own words. Pool entries are distinct row indices.
std::pair<Eigen::Index, Eigen::Index> sample_negatives(
    Eigen::Index w1, Eigen::Index w2, std::span<const Eigen::Index> pool,
    std::mt19937_64& rng);

/// Adagrad with one accumulator per parameter:
/// acc += g^2; p -= lr * g / sqrt(acc + epsilon).
class Adagrad {
 public:
  Adagrad(const GateModel& shape, double learning_rate, double epsilon);
  void step(GateModel& model, const GateModel& gradient);
  const GateModel& accumulators() const { return accum_; }

 private:
  GateModel accum_;
  double lr_;
  double eps_;
};

/// Spearman correlation between fused-vector cosines and dev scores.
/// Pairs with a word missing from `inputs` are ignored.
Correlation dev_score(const GateModel& model, const AssociationPairSet& dev,
                      const GateInputs& inputs);

struct TrainConfig {
  std::vector<double> learning_rates{0.05, 0.01, 0.5, 0.1};
  std::size_t batch_size = 25;
  int epochs = 5;
  double margin = 1.0;
  std::uint64_t seed = 0;
  double adagrad_epsilon = 1e-6;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double learning_rate = 0.0;
  double mean_loss = 0.0;  // per training pair
  Correlation dev;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  double best_learning_rate = 0.0;
  int best_epoch = 0;  // 0 when no epoch ran
  Correlation best_dev;
};

struct TrainResult {
  GateModel model;
  TrainReport report;
};

/// Trains a copy of `initial` once per learning rate. Every epoch reshuffles
/// the pairs and redraws negatives from the words of the training pairs
/// (seeded), then applies Adagrad per batch. The snapshot with the best dev
/// Spearman over all (learning rate, epoch) cells is returned; ties keep the
/// earlier cell. With zero epochs `initial` comes back unchanged.
TrainResult train(const GateModel& initial, const AssociationPairSet& train,
                  const AssociationPairSet& dev, const GateInputs& inputs,
                  const TrainConfig& config);

/// `epoch TAB lr TAB mean_loss TAB dev_spearman` with a header line.
void write_train_report(std::ostream& out, const TrainReport& report);

}  // namespace mmfuse
