#include "mmfuse/embedding_store.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "mmfuse/error.hpp"
#include "mmfuse/text_io.hpp"

namespace mmfuse {

EmbeddingTable::EmbeddingTable(std::vector<std::string> words, Matrix vectors)
    : words_(std::move(words)), vectors_(std::move(vectors)) {
  if (static_cast<Eigen::Index>(words_.size()) != vectors_.rows()) {
    throw Error("embedding table: " + std::to_string(words_.size()) +
                " words but " + std::to_string(vectors_.rows()) + " rows");
  }
  if (!words_.empty() && vectors_.cols() == 0) {
    throw Error("embedding table: dimension must be positive");
  }
  if (!vectors_.allFinite()) {
    throw Error("embedding table: non-finite entry");
  }
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i].empty()) throw Error("embedding table: empty word");
    if (!index_.emplace(words_[i], static_cast<Eigen::Index>(i)).second) {
      throw Error("embedding table: duplicate word '" + words_[i] + "'");
    }
  }
}

std::optional<Eigen::Index> EmbeddingTable::index_of(
    std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

WordSet EmbeddingTable::vocabulary() const {
  return WordSet(words_.begin(), words_.end());
}

EmbeddingTable EmbeddingTable::subset(
    const std::vector<std::string>& words) const {
  Matrix rows(static_cast<Eigen::Index>(words.size()), dim());
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto idx = index_of(words[i]);
    if (!idx) throw Error("embedding table: no row for '" + words[i] + "'");
    rows.row(static_cast<Eigen::Index>(i)) = vectors_.row(*idx);
  }
  return EmbeddingTable(words, std::move(rows));
}

EmbeddingTable read_embeddings(std::istream& in,
                               std::optional<Eigen::Index> expected_dim,
                               LoadStats* stats) {
  std::vector<std::string> words;
  std::vector<double> values;
  std::unordered_set<std::string> seen;
  Eigen::Index dim = expected_dim.value_or(0);
  std::size_t duplicates = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    auto width = static_cast<Eigen::Index>(fields.size()) - 1;
    if (width == 0) {
      throw Error("embeddings: line " + std::to_string(line_no) +
                  ": word without values");
    }
    if (dim == 0) dim = width;
    if (width != dim) {
      std::ostringstream msg;
      msg << "embeddings: line " << line_no << ": expected " << dim
          << " values, found " << width;
      throw Error(msg.str());
    }
    std::string word(fields[0]);
    if (!seen.insert(word).second) {
      ++duplicates;
      continue;
    }
    words.push_back(std::move(word));
    for (std::size_t k = 1; k < fields.size(); ++k) {
      values.push_back(parse_double(fields[k], line_no, "embeddings"));
    }
  }
  if (words.empty()) throw Error("embeddings: no rows");

  // Row-major buffer into a column-major matrix.
  Matrix m = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                            Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(words.size()), dim);
  if (stats) {
    stats->rows = words.size();
    stats->duplicates = duplicates;
  }
  return EmbeddingTable(std::move(words), std::move(m));
}

EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               std::optional<Eigen::Index> expected_dim,
                               LoadStats* stats) {
  auto in = open_input(path);
  try {
    return read_embeddings(in, expected_dim, stats);
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  std::ostringstream os;
  os << std::setprecision(6);
  for (std::size_t i = 0; i < table.size(); ++i) {
    os << table.words()[i];
    auto r = table.row(static_cast<Eigen::Index>(i));
    for (Eigen::Index k = 0; k < r.size(); ++k) os << ' ' << r(k);
    os << '\n';
  }
  out << os.str();
}

void save_embeddings(const std::filesystem::path& path,
                     const EmbeddingTable& table) {
  auto out = open_output(path);
  write_embeddings(out, table);
  if (!out) throw IoError("write failed: " + path.string());
}

Normalized l2_normalize(const Vector& v) {
  double n = v.norm();
  if (n == 0.0) return {Vector::Zero(v.size()), true};
  return {v / n, false};
}

EmbeddingTable normalize_rows(const EmbeddingTable& table,
                              std::size_t* zero_rows) {
  Matrix m = table.vectors();
  std::size_t zeros = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto n = l2_normalize(m.row(i).transpose());
    if (n.zero_norm) ++zeros;
    m.row(i) = n.values.transpose();
  }
  if (zero_rows) *zero_rows = zeros;
  return EmbeddingTable(table.words(), std::move(m));
}

void ImageFeatureSet::add(ImageFeature entry) {
  if (entry.word.empty()) throw Error("image features: empty word");
  if (entries_.empty() && dim_ == 0) dim_ = entry.features.size();
  if (entry.features.size() != dim_ || dim_ == 0) {
    throw Error("image features: '" + entry.word + "' has dimension " +
                std::to_string(entry.features.size()) + ", expected " +
                std::to_string(dim_));
  }
  if (!entry.features.allFinite()) {
    throw Error("image features: non-finite value for '" + entry.word + "'");
  }
  std::string key = entry.word + '\t' + entry.image_id;
  if (!keys_.insert(key).second) {
    throw Error("image features: duplicate (" + entry.word + ", " +
                entry.image_id + ")");
  }
  by_word_[entry.word].push_back(entries_.size());
  entries_.push_back(std::move(entry));
}

std::vector<const ImageFeature*> ImageFeatureSet::images_of(
    std::string_view word) const {
  std::vector<const ImageFeature*> out;
  auto it = by_word_.find(std::string(word));
  if (it == by_word_.end()) return out;
  for (std::size_t i : it->second) out.push_back(&entries_[i]);
  std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) {
    return a->image_id < b->image_id;
  });
  return out;
}

std::vector<std::string> ImageFeatureSet::words() const {
  std::vector<std::string> out;
  out.reserve(by_word_.size());
  for (const auto& [w, idx] : by_word_) out.push_back(w);
  std::sort(out.begin(), out.end());
  return out;
}

ImageFeatureSet read_image_features(std::istream& in,
                                    const ImageFilter& filter) {
  // word -> (image_id -> features), ordered so filtering is deterministic.
  std::map<std::string, std::map<std::string, Vector>> grouped;
  Eigen::Index dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cols = split_on(line, '\t');
    if (cols.size() != 3) {
      throw Error("image features: line " + std::to_string(line_no) +
                  ": expected 3 tab-separated columns");
    }
    auto fields = split_whitespace(cols[2]);
    auto width = static_cast<Eigen::Index>(fields.size());
    if (dim == 0) dim = width;
    if (width == 0 || width != dim) {
      throw Error("image features: line " + std::to_string(line_no) +
                  ": expected " + std::to_string(dim) + " values, found " +
                  std::to_string(width));
    }
    Vector v(width);
    for (Eigen::Index k = 0; k < width; ++k) {
      v(k) = parse_double(fields[static_cast<std::size_t>(k)], line_no,
                          "image features");
    }
    std::string word(trim(cols[0]));
    std::string id(trim(cols[1]));
    if (!grouped[word].emplace(id, std::move(v)).second) {
      throw Error("image features: line " + std::to_string(line_no) +
                  ": duplicate (" + word + ", " + id + ")");
    }
  }
  if (grouped.empty()) throw Error("image features: no rows");

  ImageFeatureSet set(dim);
  for (auto& [word, images] : grouped) {
    if (filter.min_images && images.size() < *filter.min_images) continue;
    std::size_t kept = 0;
    for (auto& [id, v] : images) {
      if (filter.max_images && kept == *filter.max_images) break;
      set.add({word, id, std::move(v)});
      ++kept;
    }
  }
  return set;
}

ImageFeatureSet load_image_features(const std::filesystem::path& path,
                                    const ImageFilter& filter) {
  auto in = open_input(path);
  try {
    return read_image_features(in, filter);
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_image_features(std::ostream& out, const ImageFeatureSet& set) {
  std::ostringstream os;
  os << std::setprecision(6);
  for (const auto& e : set.entries()) {
    os << e.word << '\t' << e.image_id << '\t';
    for (Eigen::Index k = 0; k < e.features.size(); ++k) {
      if (k) os << ' ';
      os << e.features(k);
    }
    os << '\n';
  }
  out << os.str();
}

EmbeddingTable aggregate_image_features(const ImageFeatureSet& features) {
  if (features.empty()) throw Error("image features: empty set");
  auto words = features.words();
  Matrix means(static_cast<Eigen::Index>(words.size()), features.dim());
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto images = features.images_of(words[i]);
    Vector sum = Vector::Zero(features.dim());
    for (const auto* img : images) sum += img->features;
    means.row(static_cast<Eigen::Index>(i)) =
        (sum / static_cast<double>(images.size())).transpose();
  }
  return EmbeddingTable(std::move(words), std::move(means));
}

double cosine_similarity(const Vector& a, const Vector& b) {
  double na = a.norm();
  double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

Dispersion image_dispersion(const ImageFeatureSet& features,
                            std::string_view word) {
  auto images = features.images_of(word);
  const std::size_t n = images.size();
  if (n < 2) {
    throw Error("dispersion undefined for '" + std::string(word) + "': " +
                std::to_string(n) + " image(s)");
  }
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = images[i]->features.norm();

  Dispersion out;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (norms[i] == 0.0 || norms[j] == 0.0) {
        total += 1.0;
        ++out.zero_norm_pairs;
        continue;
      }
      double cos =
          images[i]->features.dot(images[j]->features) / (norms[i] * norms[j]);
      total += 1.0 - std::clamp(cos, -1.0, 1.0);
    }
  }
  out.value = 2.0 * total / static_cast<double>(n * (n - 1));
  return out;
}

}  // namespace mmfuse
