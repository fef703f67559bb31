#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

namespace mmfuse {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using WordSet = std::unordered_set<std::string>;

/// Ordered vocabulary with one dense row per word.
///
/// Words are unique and non-empty and every row has `dim()` finite entries;
/// the constructor enforces this. Tables are immutable once built, so any
/// number of readers may share one.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::string> words, Matrix vectors);

  std::size_t size() const { return words_.size(); }
  Eigen::Index dim() const { return vectors_.cols(); }
  bool empty() const { return words_.empty(); }

  const std::vector<std::string>& words() const { return words_; }
  const Matrix& vectors() const { return vectors_; }

  std::optional<Eigen::Index> index_of(std::string_view word) const;
  bool contains(std::string_view word) const {
    return index_of(word).has_value();
  }
  auto row(Eigen::Index i) const { return vectors_.row(i); }

  WordSet vocabulary() const;

  /// Rows for `words`, in that order. Throws if any word is missing.
  EmbeddingTable subset(const std::vector<std::string>& words) const;

 private:
  std::vector<std::string> words_;
  Matrix vectors_;
  std::unordered_map<std::string, Eigen::Index> index_;
};

struct LoadStats {
  std::size_t rows = 0;
  std::size_t duplicates = 0;
};

/// Reads `word v1 ... vd` lines (whitespace separated, no header). Blank
/// lines are ignored. Duplicate words keep their first row and are tallied
/// in `stats`.
EmbeddingTable read_embeddings(std::istream& in,
                               std::optional<Eigen::Index> expected_dim = {},
                               LoadStats* stats = nullptr);
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               std::optional<Eigen::Index> expected_dim = {},
                               LoadStats* stats = nullptr);

/// Same text format as the loader, values at 6 significant digits.
void write_embeddings(std::ostream& out, const EmbeddingTable& table);
void save_embeddings(const std::filesystem::path& path,
                     const EmbeddingTable& table);

struct Normalized {
  Vector values;
  bool zero_norm = false;
};

/// Unit-length copy of `v`; an all-zero input comes back as zeros with
/// `zero_norm` set.
Normalized l2_normalize(const Vector& v);

/// Row-wise l2_normalize; `zero_rows` receives the number of all-zero rows.
EmbeddingTable normalize_rows(const EmbeddingTable& table,
                              std::size_t* zero_rows = nullptr);

struct ImageFeature {
  std::string word;
  std::string image_id;
  Vector features;
};

/// Per-image visual features. All vectors share one dimension and
/// (word, image_id) keys are unique.
class ImageFeatureSet {
 public:
  ImageFeatureSet() = default;
  explicit ImageFeatureSet(Eigen::Index dim) : dim_(dim) {}

  void add(ImageFeature entry);

  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<ImageFeature>& entries() const { return entries_; }

  /// Feature vectors of `word`, ordered by image id.
  std::vector<const ImageFeature*> images_of(std::string_view word) const;
  /// Distinct words, lexicographically ordered.
  std::vector<std::string> words() const;

 private:
  Eigen::Index dim_ = 0;
  std::vector<ImageFeature> entries_;
  std::unordered_set<std::string> keys_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_word_;
};

/// Corpus-construction filters applied while reading image features.
struct ImageFilter {
  std::optional<std::size_t> min_images;  // drop words with fewer images
  std::optional<std::size_t> max_images;  // keep the first N images by id
};

/// Reads `word TAB image_id TAB v1 SP ... SP vd` lines.
ImageFeatureSet read_image_features(std::istream& in,
                                    const ImageFilter& filter = {});
ImageFeatureSet load_image_features(const std::filesystem::path& path,
                                    const ImageFilter& filter = {});
void write_image_features(std::ostream& out, const ImageFeatureSet& set);

/// Per-word mean of image vectors. Words are emitted in lexicographic order
/// and each mean is summed in image-id order, so the result does not depend
/// on entry order.
EmbeddingTable aggregate_image_features(const ImageFeatureSet& features);

struct Dispersion {
  double value = 0.0;
  std::size_t zero_norm_pairs = 0;
};

/// Mean pairwise cosine distance between the images of `word`. Requires at
/// least two images. Pairs touching a zero vector count as distance 1.
Dispersion image_dispersion(const ImageFeatureSet& features,
                            std::string_view word);

double cosine_similarity(const Vector& a, const Vector& b);

}  // namespace mmfuse
