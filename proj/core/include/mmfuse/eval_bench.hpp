#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mmfuse/embedding_store.hpp"
#include "mmfuse/fusion_gates.hpp"

namespace mmfuse {

struct RatedPair {
  std::string word1;
  std::string word2;
  double rating = 0.0;
};

struct SimilarityBenchmark {
  std::string name;
  std::vector<RatedPair> pairs;
};

/// `word1 TAB word2 TAB rating`. A first line whose rating field is not a
/// number is treated as a header. Repeated unordered pairs keep the first
/// occurrence.
SimilarityBenchmark read_benchmark(std::istream& in, std::string name);
SimilarityBenchmark load_benchmark(const std::filesystem::path& path,
                                   std::string name);
void write_benchmark(std::ostream& out, const SimilarityBenchmark& bench);

/// Every word mentioned by any of the benchmarks.
WordSet benchmark_vocabulary(std::span<const SimilarityBenchmark> benchmarks);

/// 1-based ranks with ties sharing their average rank.
std::vector<double> fractional_ranks(std::span<const double> xs);

struct Correlation {
  double rho = 0.0;
  bool defined = false;  // false for n < 2 or a constant input; rho is 0
};

/// Spearman's rho: Pearson correlation of the fractional ranks.
Correlation spearman(std::span<const double> xs, std::span<const double> ys);

enum class Region { all, vis, zs };
std::string_view to_string(Region region);

struct BenchmarkResult {
  std::string dataset;
  Region region = Region::all;
  Correlation correlation;
  std::size_t pairs_used = 0;
  std::size_t pairs_skipped = 0;  // at least one word missing from the table
};

/// True when both words have a visual vector; such pairs form VIS, the rest
/// form ZS.
bool is_visual_pair(const RatedPair& pair, const WordSet& visual_vocab);

/// Cosine similarity against the human ratings over ALL, VIS and ZS, in that
/// order.
std::vector<BenchmarkResult> evaluate(const EmbeddingTable& table,
                                      const SimilarityBenchmark& bench,
                                      const WordSet& visual_vocab);
std::vector<BenchmarkResult> evaluate(const FusedTable& table,
                                      const SimilarityBenchmark& bench,
                                      const WordSet& visual_vocab);

struct SuiteRow {
  std::string model;
  BenchmarkResult result;
};

using NamedTable = std::pair<std::string, const EmbeddingTable*>;

/// models x datasets x {ALL, VIS, ZS}, in that nesting order.
std::vector<SuiteRow> run_suite(std::span<const NamedTable> tables,
                                std::span<const SimilarityBenchmark> benchmarks,
                                const WordSet& visual_vocab);

/// `model TAB dataset TAB region TAB rho TAB used TAB skipped` with a header
/// line; undefined correlations print as NA.
void write_suite_tsv(std::ostream& out, std::span<const SuiteRow> rows);

/// Mean ALL-region rho over the defined results.
double mean_all_rho(std::span<const BenchmarkResult> results);

}  // namespace mmfuse
