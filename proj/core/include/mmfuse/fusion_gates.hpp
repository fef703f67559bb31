#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "mmfuse/embedding_store.hpp"

namespace mmfuse {

/// Which words share a gate: all words (modality), words of one supersense
/// (category), or none, the gate being computed from the word's own vectors
/// (sample).
enum class GateScope { modality, category, sample };

/// A value gate is one scalar per modality; a vector gate has one weight per
/// dimension.
enum class GateForm { value, vector };

std::string_view to_string(GateScope scope);
std::string_view to_string(GateForm form);
/// Accepts the full names and the short forms m/c/s and val/vec.
GateScope parse_scope(std::string_view text);
GateForm parse_form(std::string_view text);

inline constexpr std::string_view kDefaultSense = "__default__";

using SupersenseMap = std::unordered_map<std::string, std::string>;

/// `word TAB supersense` lines.
SupersenseMap load_supersenses(const std::filesystem::path& path);
SupersenseMap read_supersenses(std::istream& in);
void write_supersenses(std::ostream& out, const SupersenseMap& map);

/// Gate activations for one word. Each side has size 1 for value gates and
/// the modality's dimension for vector gates.
struct GatePair {
  Vector linguistic;
  Vector visual;
};

struct ModalityGates {
  GatePair gates;
};

struct CategoryGates {
  std::map<std::string, GatePair, std::less<>> senses;
};

/// g = tanh(W x + b) per modality. W has one row for value gates and d rows
/// for vector gates.
struct SampleGates {
  Matrix w_ling;
  Vector b_ling;
  Matrix w_visual;
  Vector b_visual;
};

class GateModel {
 public:
  using Params = std::variant<ModalityGates, CategoryGates, SampleGates>;

  GateModel(GateForm form, Eigen::Index ling_dim, Eigen::Index visual_dim,
            Params params);

  /// Starting point for training: modality and category gates at 1.0,
  /// sample gates with W ~ U(-0.01, 0.01) and biases 1.0. Category models get
  /// one entry per listed sense plus `__default__`.
  static GateModel initial(GateScope scope, GateForm form,
                           Eigen::Index ling_dim, Eigen::Index visual_dim,
                           const std::vector<std::string>& senses = {},
                           std::uint64_t seed = 0);

  /// Modality gates fixed at 1: fusion reduces to plain concatenation.
  static GateModel unit(GateForm form, Eigen::Index ling_dim,
                        Eigen::Index visual_dim);

  GateScope scope() const;
  GateForm form() const { return form_; }
  Eigen::Index ling_dim() const { return ling_dim_; }
  Eigen::Index visual_dim() const { return visual_dim_; }
  Eigen::Index ling_gate_size() const {
    return form_ == GateForm::value ? 1 : ling_dim_;
  }
  Eigen::Index visual_gate_size() const {
    return form_ == GateForm::value ? 1 : visual_dim_;
  }

  const Params& params() const { return params_; }
  Params& params() { return params_; }

  /// Sense key used for `sense` (falls back to `__default__`).
  std::string_view resolve_sense(std::optional<std::string_view> sense) const;

  /// Every trainable parameter block, in a fixed order.
  std::vector<std::span<double>> parameter_blocks();
  std::vector<std::span<const double>> parameter_blocks() const;
  std::vector<std::string> parameter_names() const;
  std::size_t parameter_count() const;

  /// Same kind and shapes, every parameter zero.
  GateModel zeros_like() const;

  bool operator==(const GateModel& other) const;

 private:
  void validate() const;

  GateForm form_;
  Eigen::Index ling_dim_;
  Eigen::Index visual_dim_;
  Params params_;
};

/// Gate weights for a word with linguistic vector `ling` and predicted visual
/// vector `visual`. Category models need `sense`; a missing or unknown sense
/// uses `__default__`.
GatePair compute_gates(const GateModel& model, const Vector& ling,
                       const Vector& visual,
                       std::optional<std::string_view> sense = {});

/// [g_ling * ling ; g_visual * visual]. Size-1 gates broadcast.
Vector fuse(const Vector& ling, const Vector& visual, const Vector& g_ling,
            const Vector& g_visual);

struct FusionOptions {
  // Unit-normalize both halves before gating.
  bool normalize_inputs = true;
};

/// Linguistic and predicted visual rows for one aligned vocabulary, prepared
/// for gating (normalized per FusionOptions) with each word's supersense.
class GateInputs {
 public:
  GateInputs(const EmbeddingTable& ling, const EmbeddingTable& visual,
             const SupersenseMap* senses = nullptr,
             FusionOptions options = {});

  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  std::optional<Eigen::Index> index_of(std::string_view word) const;

  Vector ling(Eigen::Index i) const { return ling_.row(i).transpose(); }
  Vector visual(Eigen::Index i) const { return visual_.row(i).transpose(); }
  const Matrix& ling_matrix() const { return ling_; }
  const Matrix& visual_matrix() const { return visual_; }
  /// Empty when the word has no supersense.
  const std::string& sense(Eigen::Index i) const {
    return senses_[static_cast<std::size_t>(i)];
  }
  std::optional<std::string_view> sense_or_none(Eigen::Index i) const;

  /// Distinct supersenses present, sorted.
  std::vector<std::string> sense_inventory() const;

  std::size_t zero_rows() const { return zero_rows_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, Eigen::Index> index_;
  Matrix ling_;
  Matrix visual_;
  std::vector<std::string> senses_;
  std::size_t zero_rows_ = 0;
};

GatePair compute_gates(const GateModel& model, const GateInputs& inputs,
                       Eigen::Index row);
Vector fused_row(const GateModel& model, const GateInputs& inputs,
                 Eigen::Index row);

/// A fused table: rows are [gated linguistic ; gated visual].
struct FusedTable {
  EmbeddingTable table;
  Eigen::Index ling_dim = 0;
};

/// One fused row per word. The two tables must list the same words in the
/// same order.
FusedTable build_fused_table(const EmbeddingTable& ling,
                             const EmbeddingTable& predicted_visual,
                             const GateModel& model,
                             const SupersenseMap* senses = nullptr,
                             FusionOptions options = {});
FusedTable build_fused_table(const GateModel& model, const GateInputs& inputs);

/// Concatenation of normalized linguistic and true visual vectors, restricted
/// to words present in both tables (linguistic order).
FusedTable baseline_conc(const EmbeddingTable& ling,
                         const EmbeddingTable& visual);

/// Concatenation of normalized linguistic and predicted visual vectors.
FusedTable baseline_ridge(const EmbeddingTable& ling,
                          const EmbeddingTable& predicted_visual);

struct DispersionBaseline {
  FusedTable fused;
  double median = 0.0;
  std::size_t abstract_words = 0;      // visual half zeroed
  std::size_t undefined_dispersion = 0;  // fewer than two images
};

/// CONC with the visual half zeroed for words whose image dispersion exceeds
/// the median dispersion (or cannot be computed). Covers the words present in
/// both tables; the median is taken over those with at least two images.
DispersionBaseline baseline_dispersion(const EmbeddingTable& ling,
                                       const EmbeddingTable& visual,
                                       const ImageFeatureSet& images);

double median(std::vector<double> values);

/// Line 1 `gate <scope> <form> <dim>` (or `<ling_dim> <visual_dim>` when
/// they differ), then one named block per line: g_L/g_P, `sense <name> g_L
/// ... g_P ...`, or W_L/b_L/W_P/b_P (matrices row-major).
void write_gate_model(std::ostream& out, const GateModel& model);
GateModel read_gate_model(std::istream& in);
void save_gate_model(const std::filesystem::path& path,
                     const GateModel& model);
GateModel load_gate_model(const std::filesystem::path& path);

}  // namespace mmfuse
