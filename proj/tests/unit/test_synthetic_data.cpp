#include <doctest.h>

#include "mmfuse/error.hpp"
#include "mmfuse/synthetic_data.hpp"
#include "temp_dir.hpp"

using namespace mmfuse;

namespace {

double cos_rows(const EmbeddingTable& t, const std::string& a,
                const std::string& b) {
  return cosine_similarity(t.row(*t.index_of(a)).transpose(),
                           t.row(*t.index_of(b)).transpose());
}

/// Words of one cluster, in order.
std::vector<std::string> cluster_words(const SyntheticSpec& spec,
                                       std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t m = 0; m < spec.cluster_size; ++m) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "w%04zu", k * spec.cluster_size + m);
    out.emplace_back(buf);
  }
  return out;
}

}  // namespace

TEST_CASE("noise 0: concrete clusters agree in both modalities") {
  SyntheticSpec spec;
  spec.noise = 0.0;
  spec.visual_fraction = 1.0;
  auto c = generate(spec);
  int checked = 0;
  for (std::size_t k = 0; k < spec.vocab_size / spec.cluster_size; ++k) {
    auto words = cluster_words(spec, k);
    if (!c.concrete_words.contains(words[0])) continue;
    CHECK(cos_rows(c.ling, words[0], words[1]) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cos_rows(c.visual, words[0], words[1]) == doctest::Approx(1.0).epsilon(1e-12));
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("noise 0: abstract clusters agree only linguistically") {
  SyntheticSpec spec;
  spec.noise = 0.0;
  spec.visual_fraction = 1.0;
  auto c = generate(spec);
  double vis_sum = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < spec.vocab_size / spec.cluster_size; ++k) {
    auto words = cluster_words(spec, k);
    if (!c.abstract_words.contains(words[0])) continue;
    CHECK(cos_rows(c.ling, words[0], words[1]) == doctest::Approx(1.0).epsilon(1e-12));
    vis_sum += cos_rows(c.visual, words[0], words[1]);
    ++n;
  }
  REQUIRE(n > 10);
  // Independent noise vectors: mean cosine near 0 (sd about 1/sqrt(16 n)).
  CHECK(std::abs(vis_sum / n) < 0.1);
}

TEST_CASE("fixed seed gives an identical corpus, another seed does not") {
  SyntheticSpec spec;
  spec.images_per_word = 2;
  auto a = generate(spec), b = generate(spec);
  CHECK(a.ling.vectors() == b.ling.vectors());
  CHECK(a.visual.words() == b.visual.words());
  CHECK(a.pairs.size() == b.pairs.size());
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK(a.pairs[i].cue == b.pairs[i].cue);
    CHECK(a.pairs[i].score == b.pairs[i].score);
  }
  testing_support::TempDir d1, d2;
  auto f1 = write_corpus(a, d1.path());
  auto f2 = write_corpus(b, d2.path());
  REQUIRE(f1.size() == f2.size());
  for (std::size_t i = 0; i < f1.size(); ++i) {
    CHECK(testing_support::slurp(f1[i]) == testing_support::slurp(f2[i]));
  }
  spec.seed = 1;
  CHECK_FALSE(generate(spec).ling.vectors() == a.ling.vectors());
}

TEST_CASE("corpus structure: sizes, labels, disjoint vocabularies") {
  SyntheticSpec spec;
  auto c = generate(spec);
  CHECK(c.ling.size() == 500);
  CHECK(c.ling.dim() == 16);
  CHECK(c.visual.size() == 300);
  CHECK(c.abstract_words.size() == 250);
  CHECK(c.concrete_words.size() == 250);
  CHECK(c.concreteness.size() == 500);
  for (const auto& w : c.abstract_words) {
    CHECK(c.concreteness.at(w) == 1.0);
    CHECK(c.senses.at(w) == "abstractish");
  }
  for (const auto& w : c.concrete_words) {
    CHECK(c.concreteness.at(w) == 7.0);
    CHECK(c.senses.at(w) == "concretish");
  }
  for (const auto& w : c.benchmark_vocab) CHECK_FALSE(c.train_vocab.contains(w));
  REQUIRE(c.benchmarks.size() == 2);
  for (const auto& b : c.benchmarks) {
    CHECK(b.pairs.size() == 150);
    for (const auto& p : b.pairs) {
      CHECK(c.benchmark_vocab.contains(p.word1));
      CHECK(c.benchmark_vocab.contains(p.word2));
    }
  }

  // With the generated benchmarks as the leakage guard, exactly the planted
  // training pairs survive.
  auto bench_vocab = benchmark_vocabulary(c.benchmarks);
  auto ling_vocab = c.ling.vocabulary();
  auto split = split_pairs(c.pairs, {0.2, &bench_vocab, &ling_vocab});
  CHECK(split.train.size() == spec.num_pairs);
  for (const auto& p : split.train.pairs) {
    CHECK(c.train_vocab.contains(p.cue));
    CHECK(c.train_vocab.contains(p.target));
  }
}

TEST_CASE("validation") {
  SyntheticSpec spec;
  spec.dim = 7;
  CHECK_THROWS_AS(generate(spec), Error);
  spec = {};
  spec.fraction_abstract = 1.5;
  CHECK_THROWS_AS(generate(spec), Error);
  spec = {};
  spec.vocab_size = 503;
  CHECK_THROWS_AS(generate(spec), Error);
  spec = {};
  spec.num_pairs = 100000;
  CHECK_THROWS_AS(generate(spec), Error);
  spec = {};
  spec.noise = -1;
  CHECK_THROWS_AS(generate(spec), Error);
}

TEST_CASE("written files load back through the regular readers") {
  SyntheticSpec spec;
  spec.images_per_word = 3;
  auto c = generate(spec);
  testing_support::TempDir dir;
  auto files = write_corpus(c, dir.path());
  CHECK(files.size() == 8);
  auto ling = load_embeddings(dir / "ling.txt");
  CHECK(ling.words() == c.ling.words());
  CHECK(load_embeddings(dir / "visual.txt").size() == c.visual.size());
  CHECK(load_concreteness(dir / "concreteness.tsv").size() == 500);
  CHECK(load_supersenses(dir / "supersenses.tsv").size() == 500);
  CHECK(load_benchmark(dir / "bench_synth1.tsv", "s").pairs.size() == 150);
  auto images = load_image_features(dir / "images.tsv");
  CHECK(images.size() == 300 * 3);
  std::ifstream pin(dir / "pairs.tsv");
  CHECK(parse_pairs(pin).size() == c.pairs.size());
}

TEST_CASE("images: abstract words disperse more than concrete words") {
  SyntheticSpec spec;
  spec.images_per_word = 4;
  auto c = generate(spec);
  double abs_sum = 0, con_sum = 0;
  int na = 0, nc = 0;
  for (const auto& w : c.images->words()) {
    double d = image_dispersion(*c.images, w).value;
    if (c.abstract_words.contains(w)) {
      abs_sum += d;
      ++na;
    } else {
      con_sum += d;
      ++nc;
    }
  }
  CHECK(abs_sum / na > con_sum / nc);
}

TEST_CASE("unwritable output directory is an I/O error") {
  auto c = generate(SyntheticSpec{});
  CHECK_THROWS_AS(write_corpus(c, "/proc/not-a-dir/x"), IoError);
}
