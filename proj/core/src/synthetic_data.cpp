#include "mmfuse/synthetic_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

#include "mmfuse/error.hpp"
#include "mmfuse/text_io.hpp"

namespace mmfuse {

void validate(const SyntheticSpec& spec) {
  auto fail = [](const std::string& msg) { throw Error("synthetic: " + msg); };
  if (spec.vocab_size == 0 || spec.num_pairs == 0) {
    fail("vocab size and pair count must be positive");
  }
  if (spec.dim < 2 || spec.dim % 2 != 0) fail("dim must be even and >= 2");
  if (spec.cluster_size < 2) fail("cluster size must be at least 2");
  if (spec.vocab_size % spec.cluster_size != 0) {
    fail("vocab size must be a multiple of the cluster size");
  }
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!unit(spec.fraction_abstract) || !unit(spec.benchmark_fraction) ||
      !unit(spec.visual_fraction)) {
    fail("fractions must lie in [0, 1]");
  }
  if (!(spec.noise >= 0.0) || !(spec.type_offset >= 0.0)) {
    fail("noise and offset must be nonnegative");
  }
}

namespace {

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  Vector gaussian(Eigen::Index n, double scale) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * normal_(rng_);
    return v;
  }

  Matrix orthogonal(Eigen::Index n) {
    Matrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) g(i, j) = normal_(rng_);
    }
    Eigen::HouseholderQR<Matrix> qr(g);
    return qr.householderQ();
  }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }
  bool coin() { return index(2) == 1; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    std::shuffle(v.begin(), v.end(), rng_);
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
};

std::string word_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "w%04zu", i);
  return buf;
}

std::vector<std::size_t> permutation(std::size_t n, Sampler& s) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  s.shuffle(p);
  return p;
}

}  // namespace

SyntheticCorpus generate(const SyntheticSpec& spec) {
  validate(spec);
  Sampler rng(spec.seed);
  const Eigen::Index d = spec.dim;
  const Eigen::Index half = d / 2;
  const std::size_t n_words = spec.vocab_size;
  const std::size_t n_clusters = n_words / spec.cluster_size;

  const Matrix ling_basis = rng.orthogonal(d);
  const Matrix visual_basis = rng.orthogonal(d);

  std::vector<bool> cluster_abstract(n_clusters, false);
  {
    auto order = permutation(n_clusters, rng);
    const auto n_abs = static_cast<std::size_t>(
        std::llround(spec.fraction_abstract * static_cast<double>(n_clusters)));
    for (std::size_t k = 0; k < n_abs; ++k) cluster_abstract[order[k]] = true;
  }
  std::vector<bool> cluster_bench(n_clusters, false);
  {
    auto order = permutation(n_clusters, rng);
    const auto n_bench = static_cast<std::size_t>(std::llround(
        spec.benchmark_fraction * static_cast<double>(n_clusters)));
    for (std::size_t k = 0; k < n_bench; ++k) cluster_bench[order[k]] = true;
  }

  // Latent meaning per word: cluster latent plus jitter in the type's half of
  // the latent space, plus the type offset on that half's first axis.
  Matrix latent(static_cast<Eigen::Index>(n_words), d);
  latent.setZero();
  const double coord_scale = 1.0 / std::sqrt(static_cast<double>(half));
  for (std::size_t k = 0; k < n_clusters; ++k) {
    const Vector center = rng.gaussian(half, coord_scale);
    const Eigen::Index first = cluster_abstract[k] ? half : 0;
    for (std::size_t m = 0; m < spec.cluster_size; ++m) {
      const auto w = static_cast<Eigen::Index>(k * spec.cluster_size + m);
      Vector z = center + rng.gaussian(half, spec.noise * coord_scale);
      z(0) += spec.type_offset;
      latent.row(w).segment(first, half) = z.transpose();
    }
  }

  const double obs_scale = spec.noise / std::sqrt(static_cast<double>(d));
  const double unit_scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<std::string> words(n_words);
  Matrix ling(static_cast<Eigen::Index>(n_words), d);
  Matrix visual_all(static_cast<Eigen::Index>(n_words), d);
  SyntheticCorpus corpus;
  for (std::size_t w = 0; w < n_words; ++w) {
    const auto row = static_cast<Eigen::Index>(w);
    const std::size_t k = w / spec.cluster_size;
    words[w] = word_name(w);
    const Vector z = latent.row(row).transpose();
    ling.row(row) = (ling_basis * z + rng.gaussian(d, obs_scale)).transpose();
    if (cluster_abstract[k]) {
      visual_all.row(row) = rng.gaussian(d, unit_scale).transpose();
      corpus.abstract_words.insert(words[w]);
      corpus.concreteness[words[w]] = 1.0;
      corpus.senses[words[w]] = "abstractish";
    } else {
      visual_all.row(row) =
          (visual_basis * z + rng.gaussian(d, obs_scale)).transpose();
      corpus.concrete_words.insert(words[w]);
      corpus.concreteness[words[w]] = 7.0;
      corpus.senses[words[w]] = "concretish";
    }
    (cluster_bench[k] ? corpus.benchmark_vocab : corpus.train_vocab)
        .insert(words[w]);
  }
  corpus.ling = EmbeddingTable(words, ling);

  std::vector<bool> has_visual(n_words, false);
  {
    auto order = permutation(n_words, rng);
    const auto n_vis = static_cast<std::size_t>(
        std::llround(spec.visual_fraction * static_cast<double>(n_words)));
    for (std::size_t i = 0; i < n_vis; ++i) has_visual[order[i]] = true;
  }
  std::vector<std::string> vis_words;
  std::vector<Eigen::Index> vis_rows;
  for (std::size_t w = 0; w < n_words; ++w) {
    if (!has_visual[w]) continue;
    vis_words.push_back(words[w]);
    vis_rows.push_back(static_cast<Eigen::Index>(w));
  }
  if (vis_words.empty()) throw Error("synthetic: no visual words");
  Matrix vis(static_cast<Eigen::Index>(vis_rows.size()), d);
  for (std::size_t i = 0; i < vis_rows.size(); ++i) {
    vis.row(static_cast<Eigen::Index>(i)) = visual_all.row(vis_rows[i]);
  }
  corpus.visual = EmbeddingTable(vis_words, vis);

  // Association pairs: within-cluster pairs of training clusters (eligible
  // for training), within-cluster pairs of benchmark clusters (dev only),
  // and unrelated low-score pairs (dev only).
  std::vector<std::pair<std::size_t, std::size_t>> train_cand, bench_cand;
  for (std::size_t k = 0; k < n_clusters; ++k) {
    for (std::size_t a = 0; a < spec.cluster_size; ++a) {
      for (std::size_t b = a + 1; b < spec.cluster_size; ++b) {
        auto p = std::make_pair(k * spec.cluster_size + a,
                                k * spec.cluster_size + b);
        (cluster_bench[k] ? bench_cand : train_cand).push_back(p);
      }
    }
  }
  if (train_cand.size() < spec.num_pairs) {
    throw Error("synthetic: only " + std::to_string(train_cand.size()) +
                " within-cluster training pairs available");
  }
  rng.shuffle(train_cand);
  train_cand.resize(spec.num_pairs);

  auto oriented = [&](std::size_t a, std::size_t b, double score) {
    if (rng.coin()) std::swap(a, b);
    return AssociationPair{words[a], words[b], score};
  };
  std::set<std::pair<std::size_t, std::size_t>> used;
  for (auto [a, b] : train_cand) {
    used.emplace(a, b);
    corpus.pairs.push_back(oriented(a, b, rng.uniform(0.2, 1.0)));
  }
  for (auto [a, b] : bench_cand) {
    used.emplace(a, b);
    corpus.pairs.push_back(oriented(a, b, rng.uniform(0.2, 1.0)));
  }
  for (std::size_t made = 0, tries = 0;
       made < spec.dev_pairs && tries < 100 * (spec.dev_pairs + 1); ++tries) {
    std::size_t a = rng.index(n_words);
    std::size_t b = rng.index(n_words);
    if (a / spec.cluster_size == b / spec.cluster_size) continue;
    if (!used.emplace(std::min(a, b), std::max(a, b)).second) continue;
    corpus.pairs.push_back(oriented(a, b, rng.uniform(0.01, 0.19)));
    ++made;
  }
  rng.shuffle(corpus.pairs);

  // Benchmarks over benchmark-cluster words; ratings follow latent cosine.
  std::vector<std::size_t> bench_words;
  for (std::size_t w = 0; w < n_words; ++w) {
    if (cluster_bench[w / spec.cluster_size]) bench_words.push_back(w);
  }
  auto rating = [&](std::size_t a, std::size_t b) {
    const Vector za = latent.row(static_cast<Eigen::Index>(a)).transpose();
    const Vector zb = latent.row(static_cast<Eigen::Index>(b)).transpose();
    return 5.0 * (1.0 + cosine_similarity(za, zb));
  };
  if (bench_words.size() >= 2) {
    for (std::size_t bi = 0; bi < spec.benchmarks; ++bi) {
      SimilarityBenchmark bench{"synth" + std::to_string(bi + 1), {}};
      std::set<std::pair<std::size_t, std::size_t>> seen;
      auto within = bench_cand;
      rng.shuffle(within);
      const std::size_t n_within =
          std::min(within.size(), spec.benchmark_pairs / 2);
      for (std::size_t i = 0; i < n_within; ++i) {
        auto [a, b] = within[i];
        seen.emplace(a, b);
        bench.pairs.push_back({words[a], words[b], rating(a, b)});
      }
      for (std::size_t tries = 0;
           bench.pairs.size() < spec.benchmark_pairs &&
           tries < 100 * (spec.benchmark_pairs + 1);
           ++tries) {
        std::size_t a = bench_words[rng.index(bench_words.size())];
        std::size_t b = bench_words[rng.index(bench_words.size())];
        if (a == b) continue;
        if (!seen.emplace(std::min(a, b), std::max(a, b)).second) continue;
        bench.pairs.push_back({words[a], words[b], rating(a, b)});
      }
      corpus.benchmarks.push_back(std::move(bench));
    }
  }

  if (spec.images_per_word > 0) {
    ImageFeatureSet images(d);
    for (std::size_t i = 0; i < vis_rows.size(); ++i) {
      const Vector center = vis.row(static_cast<Eigen::Index>(i)).transpose();
      const bool abstract = corpus.abstract_words.contains(vis_words[i]);
      for (std::size_t j = 0; j < spec.images_per_word; ++j) {
        char id[32];
        std::snprintf(id, sizeof(id), "img%03zu", j);
        // Abstract-like words get unrelated images (high dispersion).
        Vector f = abstract ? rng.gaussian(d, unit_scale)
                            : Vector(center + rng.gaussian(d, 0.2 * unit_scale));
        images.add({vis_words[i], id, std::move(f)});
      }
    }
    corpus.images = std::move(images);
  }
  return corpus;
}

PipelineData SyntheticCorpus::pipeline_data() const {
  return {ling, visual, pairs, benchmarks, senses};
}

std::vector<std::filesystem::path> write_corpus(
    const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string());
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, auto&& writer) {
    auto path = dir / name;
    auto out = open_output(path);
    writer(out);
    if (!out) throw IoError("write failed: " + path.string());
    written.push_back(path);
  };
  emit("ling.txt", [&](std::ostream& o) { write_embeddings(o, corpus.ling); });
  emit("visual.txt",
       [&](std::ostream& o) { write_embeddings(o, corpus.visual); });
  emit("pairs.tsv", [&](std::ostream& o) { write_pairs(o, corpus.pairs); });
  emit("concreteness.tsv",
       [&](std::ostream& o) { write_concreteness(o, corpus.concreteness); });
  emit("supersenses.tsv",
       [&](std::ostream& o) { write_supersenses(o, corpus.senses); });
  for (const auto& b : corpus.benchmarks) {
    emit("bench_" + b.name + ".tsv",
         [&](std::ostream& o) { write_benchmark(o, b); });
  }
  if (corpus.images) {
    emit("images.tsv",
         [&](std::ostream& o) { write_image_features(o, *corpus.images); });
  }
  return written;
}

}  // namespace mmfuse
