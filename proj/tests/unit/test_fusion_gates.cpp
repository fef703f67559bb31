#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "mmfuse/error.hpp"
#include "mmfuse/fusion_gates.hpp"
#include "oracles.hpp"

using namespace mmfuse;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Vector scalar(double x) { return Vector::Constant(1, x); }

GateModel sample_value(double w, double b, Eigen::Index d) {
  SampleGates s{Matrix::Constant(1, d, w), scalar(b), Matrix::Constant(1, d, w),
                scalar(b)};
  return GateModel(GateForm::value, d, d, s);
}

const std::vector<std::pair<GateScope, GateForm>> kVariants = {
    {GateScope::modality, GateForm::value}, {GateScope::modality, GateForm::vector},
    {GateScope::category, GateForm::value}, {GateScope::category, GateForm::vector},
    {GateScope::sample, GateForm::value},   {GateScope::sample, GateForm::vector},
};

}  // namespace

TEST_CASE("scope and form names") {
  CHECK(parse_scope("m") == GateScope::modality);
  CHECK(parse_scope("category") == GateScope::category);
  CHECK(parse_scope("s") == GateScope::sample);
  CHECK(parse_form("val") == GateForm::value);
  CHECK(parse_form("vector") == GateForm::vector);
  CHECK_THROWS_AS(parse_scope("x"), Error);
  CHECK_THROWS_AS(parse_form("matrix"), Error);
  CHECK(to_string(GateScope::sample) == "sample");
  CHECK(to_string(GateForm::value) == "value");
}

TEST_CASE("sample-value gates: tanh(0) and tanh(1)") {
  Vector l = vec({0.3, -0.2}), p = vec({0.5, 0.1});
  auto zero = compute_gates(sample_value(0.0, 0.0, 2), l, p);
  CHECK(zero.linguistic(0) == 0.0);
  auto one = compute_gates(sample_value(0.0, 1.0, 2), l, p);
  CHECK(one.linguistic(0) == doctest::Approx(0.76159).epsilon(1e-5));
  CHECK(one.linguistic(0) == std::tanh(1.0));
}

TEST_CASE("sample gates use the bias of their own modality") {
  SampleGates s{Matrix::Zero(1, 2), scalar(0.25), Matrix::Zero(1, 2),
                scalar(-0.5)};
  GateModel m(GateForm::value, 2, 2, s);
  auto g = compute_gates(m, vec({1, 1}), vec({1, 1}));
  CHECK(g.linguistic(0) == std::tanh(0.25));
  CHECK(g.visual(0) == std::tanh(-0.5));
}

TEST_CASE("sample gates: hand-computed vector form") {
  SampleGates s{Matrix::Zero(2, 2), vec({0.0, 0.0}), Matrix::Zero(2, 2),
                vec({0.0, 0.0})};
  s.w_ling << 1, 0, 0, 2;
  s.b_ling << 0.5, 0;
  s.w_visual << 0, 1, 1, 0;
  GateModel m(GateForm::vector, 2, 2, s);
  auto g = compute_gates(m, vec({0.1, 0.2}), vec({0.3, 0.4}));
  CHECK(g.linguistic(0) == std::tanh(0.6));
  CHECK(g.linguistic(1) == std::tanh(0.4));
  CHECK(g.visual(0) == std::tanh(0.4));
  CHECK(g.visual(1) == std::tanh(0.3));
}

TEST_CASE("compute_gates rejects wrong input sizes") {
  auto m = GateModel::initial(GateScope::modality, GateForm::value, 3, 2);
  CHECK_THROWS_AS(compute_gates(m, vec({1, 2}), vec({1, 2})), Error);
}

TEST_CASE("fuse examples") {
  Vector l = vec({1, 2}), p = vec({3, 4});
  CHECK(fuse(l, p, scalar(1), scalar(1)) == vec({1, 2, 3, 4}));
  CHECK(fuse(l, p, scalar(0), scalar(1)) == vec({0, 0, 3, 4}));
  CHECK(fuse(l, p, vec({0.5, 1}), scalar(2)) == vec({0.5, 2, 6, 8}));
  CHECK_THROWS_AS(fuse(l, p, vec({1, 1, 1}), scalar(1)), Error);
}

TEST_CASE("initial models") {
  auto mv = GateModel::initial(GateScope::modality, GateForm::vector, 3, 2);
  const auto& g = std::get<ModalityGates>(mv.params()).gates;
  CHECK(g.linguistic == Vector::Ones(3));
  CHECK(g.visual == Vector::Ones(2));

  auto cv = GateModel::initial(GateScope::category, GateForm::value, 3, 3,
                               {"noun.food", "noun.act"});
  const auto& senses = std::get<CategoryGates>(cv.params()).senses;
  CHECK(senses.size() == 3);
  CHECK(senses.contains(kDefaultSense));
  for (const auto& [name, gp] : senses) CHECK(gp.linguistic(0) == 1.0);

  auto sv = GateModel::initial(GateScope::sample, GateForm::vector, 4, 4, {}, 7);
  const auto& s = std::get<SampleGates>(sv.params());
  CHECK(s.w_ling.rows() == 4);
  CHECK(s.w_ling.cwiseAbs().maxCoeff() <= 0.01);
  CHECK(s.b_ling == Vector::Ones(4));
  CHECK(s.b_visual == Vector::Ones(4));
  CHECK(GateModel::initial(GateScope::sample, GateForm::vector, 4, 4, {}, 7) ==
        sv);
  CHECK_FALSE(GateModel::initial(GateScope::sample, GateForm::vector, 4, 4, {},
                                 8) == sv);
  auto gates = compute_gates(sv, Vector::Zero(4), Vector::Zero(4));
  CHECK(gates.linguistic(0) == std::tanh(1.0));
}

TEST_CASE("model validation rejects bad shapes") {
  ModalityGates bad{{Vector::Ones(2), Vector::Ones(3)}};
  CHECK_THROWS_AS(GateModel(GateForm::vector, 3, 3, bad), Error);
  CategoryGates nodefault;
  nodefault.senses.emplace("x", GatePair{scalar(1), scalar(1)});
  CHECK_THROWS_AS(GateModel(GateForm::value, 2, 2, nodefault), Error);
  SampleGates s{Matrix::Zero(2, 3), scalar(1), Matrix::Zero(1, 3), scalar(1)};
  CHECK_THROWS_AS(GateModel(GateForm::value, 3, 3, s), Error);
  ModalityGates nan{{scalar(std::nan("")), scalar(1)}};
  CHECK_THROWS_AS(GateModel(GateForm::value, 3, 3, nan), Error);
}

TEST_CASE("category gates fall back to __default__") {
  CategoryGates c;
  c.senses.emplace(std::string(kDefaultSense), GatePair{scalar(0.5), scalar(0.25)});
  c.senses.emplace("noun.food", GatePair{scalar(2), scalar(3)});
  GateModel m(GateForm::value, 2, 2, c);
  Vector l = vec({1, 0}), p = vec({0, 1});
  CHECK(compute_gates(m, l, p, "noun.food").linguistic(0) == 2.0);
  CHECK(compute_gates(m, l, p, "verb.motion").linguistic(0) == 0.5);
  CHECK(compute_gates(m, l, p).visual(0) == 0.25);
  CHECK(m.resolve_sense(std::nullopt) == kDefaultSense);
}

TEST_CASE("every variant: first half of a fused row is g_L times L") {
  std::mt19937_64 rng(31);
  auto ling = oracle::random_table(12, 5, rng, "w");
  auto vis = oracle::random_table(12, 5, rng, "w");
  SupersenseMap senses{{"w0", "a"}, {"w1", "b"}, {"w2", "a"}};
  GateInputs inputs(ling, vis, &senses);
  for (auto [scope, form] : kVariants) {
    auto m = oracle::random_model(scope, form, 5, 5, inputs.sense_inventory(),
                                  rng);
    for (Eigen::Index i = 0; i < 12; ++i) {
      auto g = compute_gates(m, inputs, i);
      Vector row = fused_row(m, inputs, i);
      REQUIRE(row.size() == 10);
      Vector l = inputs.ling(i);
      for (Eigen::Index k = 0; k < 5; ++k) {
        double gk = g.linguistic.size() == 1 ? g.linguistic(0) : g.linguistic(k);
        CHECK(row(k) == gk * l(k));
      }
      CHECK((row - oracle::fused(m, inputs, i)).cwiseAbs().maxCoeff() <= 1e-15);
      if (scope == GateScope::sample) {
        CHECK(g.linguistic.cwiseAbs().maxCoeff() < 1.0);
        CHECK(g.visual.cwiseAbs().maxCoeff() < 1.0);
      }
    }
  }
}

TEST_CASE("gate inputs are normalized and report divergence") {
  EmbeddingTable ling({"a", "b"}, Matrix::Constant(2, 2, 3.0));
  EmbeddingTable vis({"a", "b"}, Matrix::Constant(2, 3, 2.0));
  GateInputs in(ling, vis);
  CHECK(in.ling(0).norm() == doctest::Approx(1.0));
  CHECK(in.visual(1).norm() == doctest::Approx(1.0));
  GateInputs raw(ling, vis, nullptr, {false});
  CHECK(raw.ling(0)(0) == 3.0);

  EmbeddingTable other({"a", "c"}, Matrix::Ones(2, 3));
  CHECK_THROWS_WITH_AS(GateInputs(ling, other), doctest::Contains("'b'"),
                       Error);
  EmbeddingTable shorter({"a"}, Matrix::Ones(1, 3));
  CHECK_THROWS_AS(GateInputs(ling, shorter), Error);
}

TEST_CASE("build_fused_table: hand gates on three words") {
  Matrix l(3, 2), p(3, 2);
  l << 3, 4, 1, 0, 0, 2;
  p << 0, 1, 6, 8, 1, 0;
  EmbeddingTable ling({"x", "y", "z"}, l), pred({"x", "y", "z"}, p);
  ModalityGates g{{vec({2.0, 0.5}), vec({1.0, -1.0})}};
  GateModel m(GateForm::vector, 2, 2, g);
  auto fused = build_fused_table(ling, pred, m);
  CHECK(fused.table.words() == ling.words());
  CHECK(fused.table.dim() == 4);
  CHECK(fused.ling_dim == 2);
  Matrix expected(3, 4);
  expected << 1.2, 0.4, 0, -1,   //
      2, 0, 0.6, -0.8,           //
      0, 0.5, 1, 0;
  CHECK((fused.table.vectors() - expected).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("build_fused_table is order independent per word") {
  std::mt19937_64 rng(41);
  auto ling = oracle::random_table(10, 4, rng, "w");
  auto pred = oracle::random_table(10, 4, rng, "w");
  auto m = oracle::random_model(GateScope::sample, GateForm::vector, 4, 4, {},
                                rng);
  auto a = build_fused_table(ling, pred, m);
  std::vector<std::string> rev(ling.words().rbegin(), ling.words().rend());
  auto b = build_fused_table(ling.subset(rev), pred.subset(rev), m);
  for (const auto& w : ling.words()) {
    CHECK(a.table.row(*a.table.index_of(w)) == b.table.row(*b.table.index_of(w)));
  }
  CHECK(build_fused_table(ling, pred, m).table.vectors() == a.table.vectors());
}

TEST_CASE("unit gates reproduce the baselines bit for bit") {
  std::mt19937_64 rng(51);
  auto ling = oracle::random_table(15, 6, rng, "w");
  auto pred = oracle::random_table(15, 4, rng, "w");
  auto ridge = baseline_ridge(ling, pred);
  auto unit_val = build_fused_table(ling, pred, GateModel::unit(GateForm::value, 6, 4));
  auto unit_vec = build_fused_table(ling, pred, GateModel::unit(GateForm::vector, 6, 4));
  CHECK(unit_val.table.vectors() == ridge.table.vectors());
  CHECK(unit_vec.table.vectors() == ridge.table.vectors());

  // CONC on a table whose visual vocabulary is complete equals ridge fusion
  // with the true vectors in place of predictions.
  auto conc = baseline_conc(ling, pred);
  CHECK(conc.table.vectors() == unit_vec.table.vectors());
}

TEST_CASE("CONC restricts to words with true visual vectors") {
  EmbeddingTable ling({"a", "b", "c"}, Matrix::Identity(3, 3));
  EmbeddingTable vis({"c", "a"}, Matrix::Constant(2, 2, 1.0));
  auto conc = baseline_conc(ling, vis);
  CHECK(conc.table.words() == std::vector<std::string>{"a", "c"});
  CHECK(conc.table.row(0)(3) == doctest::Approx(std::sqrt(0.5)));
  EmbeddingTable none({"z"}, Matrix::Ones(1, 2));
  CHECK_THROWS_AS(baseline_conc(ling, none), Error);
}

TEST_CASE("Ridge baseline requires aligned tables") {
  EmbeddingTable a({"a", "b"}, Matrix::Ones(2, 2));
  EmbeddingTable b({"b", "a"}, Matrix::Ones(2, 2));
  CHECK_THROWS_AS(baseline_ridge(a, b), Error);
}

TEST_CASE("Dispersion baseline: median threshold over four words") {
  const std::vector<double> disp{0.1, 0.2, 0.8, 0.9};
  std::vector<std::string> words{"w1", "w2", "w3", "w4"};
  ImageFeatureSet images(2);
  for (std::size_t i = 0; i < 4; ++i) {
    double c = 1.0 - disp[i];
    images.add({words[i], "a", vec({1, 0})});
    images.add({words[i], "b", vec({c, std::sqrt(1 - c * c)})});
  }
  EmbeddingTable ling(words, Matrix::Constant(4, 3, 1.0));
  EmbeddingTable vis(words, Matrix::Constant(4, 2, 2.0));
  auto d = baseline_dispersion(ling, vis, images);
  CHECK(d.median == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d.abstract_words == 2);
  CHECK(d.undefined_dispersion == 0);
  auto conc = baseline_conc(ling, vis);
  for (Eigen::Index i = 0; i < 4; ++i) {
    Vector row = d.fused.table.row(i).transpose();
    CHECK(row.head(3) == Vector(conc.table.row(i).transpose().head(3)));
    if (i < 2) {
      CHECK(row.tail(2) == Vector(conc.table.row(i).transpose().tail(2)));
    } else {
      CHECK(row.tail(2) == Vector::Zero(2));
    }
  }
}

TEST_CASE("Dispersion baseline: identical images keep the visual half") {
  ImageFeatureSet images(2);
  images.add({"same", "a", vec({1, 1})});
  images.add({"same", "b", vec({1, 1})});
  images.add({"wide", "a", vec({1, 0})});
  images.add({"wide", "b", vec({0, 1})});
  images.add({"one", "a", vec({0, 1})});
  EmbeddingTable ling({"same", "wide", "one"}, Matrix::Ones(3, 2));
  EmbeddingTable vis({"same", "wide", "one"}, Matrix::Ones(3, 2));
  auto d = baseline_dispersion(ling, vis, images);
  CHECK(d.fused.table.row(0).tail(2).norm() > 0.0);
  CHECK(d.fused.table.row(2).tail(2).norm() == 0.0);
  CHECK(d.undefined_dispersion == 1);
  CHECK(d.abstract_words == 2);
}

TEST_CASE("median") {
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  CHECK_THROWS_AS(median({}), Error);
}

TEST_CASE("gate model files round-trip exactly for every variant") {
  std::mt19937_64 rng(61);
  for (auto [scope, form] : kVariants) {
    auto m = oracle::random_model(scope, form, 3, 3, {"noun.a", "verb.b"}, rng);
    std::ostringstream out;
    write_gate_model(out, m);
    std::istringstream in(out.str());
    auto back = read_gate_model(in);
    CHECK(back == m);
    CHECK(back.scope() == scope);
    CHECK(back.form() == form);
  }
  auto uneven = GateModel::initial(GateScope::sample, GateForm::vector, 4, 2, {}, 3);
  std::ostringstream out;
  write_gate_model(out, uneven);
  std::istringstream in(out.str());
  CHECK(read_gate_model(in) == uneven);
}

TEST_CASE("gate model file errors") {
  std::istringstream empty("");
  CHECK_THROWS_AS(read_gate_model(empty), Error);
  std::istringstream header("gate modality value\n");
  CHECK_THROWS_AS(read_gate_model(header), Error);
  std::istringstream missing("gate modality value 2\ng_L 1\n");
  CHECK_THROWS_WITH_AS(read_gate_model(missing), doctest::Contains("g_P"), Error);
  std::istringstream width("gate modality vector 2\ng_L 1 2 3\ng_P 1 1\n");
  CHECK_THROWS_AS(read_gate_model(width), Error);
}

TEST_CASE("supersense files") {
  std::istringstream in("apple\tnoun.food\nrun\tverb.motion\n");
  auto map = read_supersenses(in);
  CHECK(map.at("apple") == "noun.food");
  std::ostringstream out;
  write_supersenses(out, map);
  std::istringstream back(out.str());
  CHECK(read_supersenses(back) == map);
  std::istringstream bad("apple noun.food\n");
  CHECK_THROWS_AS(read_supersenses(bad), Error);
}
