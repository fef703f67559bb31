#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mmfuse/eval_bench.hpp"
#include "mmfuse/fusion_gates.hpp"
#include "mmfuse/pipeline.hpp"

namespace mmfuse {

/// word -> concreteness rating (higher is more concrete).
using ConcretenessTable = std::unordered_map<std::string, double>;

/// `word TAB rating` lines.
ConcretenessTable read_concreteness(std::istream& in);
ConcretenessTable load_concreteness(const std::filesystem::path& path);
void write_concreteness(std::ostream& out, const ConcretenessTable& table);

struct WeightRatio {
  double value = 0.0;     // +inf when the visual weight is zero
  bool infinite = false;
};

/// Linguistic-to-visual importance: |g_L| / |g_P| for value gates and
/// ||g_L||_2 / ||g_P||_2 for vector gates.
WeightRatio weight_ratio(const GatePair& gates);
WeightRatio weight_ratio(const GateModel& model, const Vector& ling,
                         const Vector& visual,
                         std::optional<std::string_view> sense = {});

struct QuartileSplit {
  std::vector<std::string> concrete;  // top quartile, sorted
  std::vector<std::string> abstract;  // bottom quartile, sorted
};

/// Orders the rated words of `vocab` by (rating, word) and takes the bottom
/// and top floor(n/4). With `sample_size`, each side is then subsampled to at
/// most that many words using `seed`.
QuartileSplit quartile_split(const ConcretenessTable& conc,
                             const WordSet& vocab, std::uint64_t seed = 0,
                             std::optional<std::size_t> sample_size = {});

struct WordRatio {
  std::string word;
  WeightRatio ratio;
  std::optional<double> concreteness;
  std::string sense;  // resolved gate sense, or the word's supersense
};

struct RatioReport {
  std::vector<WordRatio> rows;  // sorted by ratio, largest first

  double concrete_mean = 0.0;
  double abstract_mean = 0.0;
  std::size_t concrete_count = 0;  // finite ratios averaged
  std::size_t abstract_count = 0;
  std::size_t infinite_count = 0;  // excluded from every mean

  /// Spearman(concreteness, ratio) over rated words with a finite ratio.
  Correlation concreteness_correlation;

  std::vector<WordRatio> top;     // k largest finite ratios
  std::vector<WordRatio> bottom;  // k smallest, smallest first

  /// Mean finite ratio per sense, largest first.
  std::vector<std::pair<std::string, double>> category_means;
};

struct RatioOptions {
  std::size_t k = 5;
  std::uint64_t seed = 0;
  std::optional<std::size_t> quartile_sample;
};

/// Weight ratios for every word in `inputs`. Extremes are drawn from rated
/// words when any are rated.
RatioReport ratio_report(const GateModel& model, const GateInputs& inputs,
                         const ConcretenessTable& conc,
                         const RatioOptions& options = {});

/// Aggregate block, then `word TAB ratio TAB concreteness` rows.
void write_ratio_report(std::ostream& out, const RatioReport& report);

struct AblationPoint {
  double fraction = 0.0;
  std::size_t train_pairs = 0;
  std::vector<double> per_seed_rho;  // mean ALL rho over benchmarks
  double mean_rho = 0.0;             // average over seeds
};

/// Subsamples the training split to each fraction (seeded, no subsampling at
/// 1.0), trains and evaluates, once per seed. A fraction that leaves fewer
/// pairs than one batch is an error.
std::vector<AblationPoint> data_size_ablation(
    const std::vector<double>& fractions, const PipelineData& data,
    const PreparedData& prepared, const GateInputs& inputs,
    const RunConfig& config, const std::vector<std::uint64_t>& seeds);

/// Training pairs kept for `fraction`, in their original order.
AssociationPairSet subsample_pairs(const AssociationPairSet& pairs,
                                   double fraction, std::uint64_t seed);

void write_ablation(std::ostream& out, const std::vector<AblationPoint>& rows);

}  // namespace mmfuse
