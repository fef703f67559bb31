// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mmfuse/cross_modal_map.hpp"
#include "mmfuse/eval_bench.hpp"
#include "mmfuse/fusion_gates.hpp"
#include "mmfuse/pipeline.hpp"
#include "mmfuse/synthetic_data.hpp"
#include "mmfuse/trainer.hpp"
#include "mmfuse/weight_analysis.hpp"
#include "mmfuse_cli/cli.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace mmfuse;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

const std::vector<std::pair<GateScope, GateForm>> kVariants = {
    {GateScope::modality, GateForm::value}, {GateScope::modality, GateForm::vector},
    {GateScope::category, GateForm::value}, {GateScope::category, GateForm::vector},
    {GateScope::sample, GateForm::value},   {GateScope::sample, GateForm::vector},
};

Matrix gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

Outcome ridge_vs_descent() {
  auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  const double lambdas[] = {0.0, 0.1, 0.6, 10.0};
  double worst = 0.0, worst_orth = 0.0;
  for (int t = 0; t < 50; ++t) {
    double lambda = lambdas[t % 4];
    std::uniform_int_distribution<int> nl_d(1, 8), nv_d(1, 4);
    int nl = nl_d(rng), nv = nv_d(rng);
    int lo = lambda == 0.0 ? nl + 4 : 2;
    int m = std::uniform_int_distribution<int>(lo, 20)(rng);
    Matrix L = gaussian(m, nl, rng), V = gaussian(m, nv, rng);
    auto fit = fit_ridge(L, V, lambda);
    Matrix ref = oracle::ridge_gd(L, V, lambda);
    worst = std::max(worst, (fit.coefficients - ref).cwiseAbs().maxCoeff());
    // Stationarity: L^T (V - L A) = lambda A.
    Matrix resid = L.transpose() * (V - L * fit.coefficients) -
                   lambda * fit.coefficients;
    worst_orth = std::max(worst_orth, resid.cwiseAbs().maxCoeff());
  }
  double secs = seconds_since(t0);
  return {worst <= 1e-6 && worst_orth <= 1e-8 && secs < 10.0,
          "max coef diff " + fmt("%.2e", worst) + ", stationarity " +
              fmt("%.2e", worst_orth) + ", " + fmt("%.1f s", secs)};
}

std::vector<TrainingExample> random_batch(std::size_t n, Eigen::Index words,
                                          std::mt19937_64& rng) {
  std::uniform_int_distribution<Eigen::Index> pick(0, words - 1);
  std::vector<TrainingExample> batch;
  for (std::size_t k = 0; k < n; ++k) {
    batch.push_back({pick(rng), pick(rng), pick(rng), pick(rng)});
  }
  return batch;
}

Outcome gradient_check() {
  auto t0 = Clock::now();
  std::mt19937_64 rng(1002);
  auto ling = oracle::random_table(12, 5, rng, "w");
  auto vis = oracle::random_table(12, 4, rng, "w");
  SupersenseMap senses{{"w0", "x"}, {"w1", "y"}, {"w2", "x"}, {"w3", "z"},
                       {"w4", "y"}};
  GateInputs in(ling, vis, &senses);
  double worst = 0.0;
  int batches = 0;
  for (auto [scope, form] : kVariants) {
    int checked = 0;
    while (checked < 20) {
      auto model =
          oracle::random_model(scope, form, 5, 4, in.sense_inventory(), rng);
      auto batch = random_batch(6, 12, rng);
      if (oracle::min_hinge_distance(model, in, batch, 1.0) < 1e-3) continue;
      auto g = gradients(model, in, batch);
      auto fd = oracle::fd_gradient(model, in, batch, 1.0, 1e-5);
      worst = std::max(worst,
                       oracle::max_relative_error(oracle::flatten(g.gradient), fd, 1e-4));
      ++checked;
      ++batches;
    }
  }
  double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 30.0,
          std::to_string(batches) + " batches, max rel err " +
              fmt("%.2e", worst) + ", " + fmt("%.1f s", secs)};
}

Outcome loss_oracle() {
  std::mt19937_64 rng(1003);
  std::normal_distribution<double> g;
  double worst = 0.0;
  int kinks = 0;
  for (int t = 0; t < 10000; ++t) {
    int d = 1 + t % 7;
    Vector w1(d), w2(d), n1(d), n2(d);
    for (int i = 0; i < d; ++i) {
      w1(i) = g(rng);
      w2(i) = g(rng);
      n1(i) = g(rng);
      n2(i) = g(rng);
    }
    if (t % 10 == 0) {
      // Place the first hinge exactly at its kink: 1 - w1.w2 + w1.n1 = 0.
      n1.setZero();
      w2 = w1 / w1.squaredNorm();
      ++kinks;
    }
    double got = pair_loss(w1, w2, n1, n2, 1.0);
    double ref = oracle::pair_loss(w1, w2, n1, n2, 1.0);
    worst = std::max(worst, std::abs(got - ref) / std::max(1.0, std::abs(ref)));
  }
  return {worst <= 1e-12, "10000 cases (" + std::to_string(kinks) +
                              " at a kink), max err " + fmt("%.2e", worst)};
}

Outcome spearman_oracle() {
  std::mt19937_64 rng(1004);
  double worst = 0.0;
  bool exact = true;
  for (int t = 0; t < 1000; ++t) {
    int n = std::uniform_int_distribution<int>(2, 60)(rng);
    std::uniform_int_distribution<int> level(0, 1 + t % 9);
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = level(rng);
      y[i] = level(rng) * 0.25;
    }
    auto got = spearman(x, y);
    auto ref = oracle::spearman(x, y);
    if (got.defined != ref.defined) exact = false;
    worst = std::max(worst, std::abs(got.rho - ref.rho));

    std::vector<double> up(n), down(n), base(n);
    for (int i = 0; i < n; ++i) {
      base[i] = i + 0.5 * std::sin(i);
      up[i] = std::exp(0.1 * i);
      down[i] = -i * 3.0;
    }
    if (spearman(base, up).rho != 1.0 || spearman(base, down).rho != -1.0) {
      exact = false;
    }
  }
  return {worst <= 1e-12 && exact,
          "1000 tied lists, max diff " + fmt("%.2e", worst) +
              (exact ? ", monotone lists exact" : ", monotone lists NOT exact")};
}

Outcome planted_signal() {
  auto t0 = Clock::now();
  bool ok = true;
  std::ostringstream detail;
  for (std::uint64_t s = 0; s < 5; ++s) {
    SyntheticSpec spec;
    spec.seed = s;
    auto corpus = generate(spec);
    auto data = corpus.pipeline_data();
    auto prepared = prepare(data, 0.6);
    GateInputs in(prepared.ling, prepared.predicted, &data.senses);

    RunConfig mod;
    mod.scope = GateScope::modality;
    mod.form = GateForm::value;
    mod.train.seed = s;
    auto m = train_and_evaluate(data, prepared, in, mod);
    const auto& g = std::get<ModalityGates>(m.trained.model.params()).gates;

    RunConfig smp = mod;
    smp.scope = GateScope::sample;
    auto sm = train_and_evaluate(data, prepared, in, smp);
    auto rep = ratio_report(sm.trained.model, in, corpus.concreteness);
    const auto& c = rep.concreteness_correlation;

    bool seed_ok = g.linguistic(0) > g.visual(0) &&
                   rep.abstract_mean > rep.concrete_mean && c.defined &&
                   c.rho < 0.0 && std::abs(c.rho) > 0.3;
    ok = ok && seed_ok;
    detail << (s ? "; " : "") << "seed " << s << ": gap "
           << fmt("%.3f", g.linguistic(0) - g.visual(0)) << " ratio A/C "
           << fmt("%.3f", rep.abstract_mean) << "/"
           << fmt("%.3f", rep.concrete_mean) << " rho " << fmt("%.3f", c.rho);
  }
  double secs = seconds_since(t0);
  detail << "; " << fmt("%.1f s", secs);
  return {ok && secs < 120.0, detail.str()};
}

bool same_results(const std::vector<BenchmarkResult>& a,
                  const std::vector<BenchmarkResult>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].dataset != b[i].dataset || a[i].region != b[i].region ||
        a[i].correlation.rho != b[i].correlation.rho ||
        a[i].correlation.defined != b[i].correlation.defined ||
        a[i].pairs_used != b[i].pairs_used ||
        a[i].pairs_skipped != b[i].pairs_skipped) {
      return false;
    }
  }
  return true;
}

Outcome unit_gates_equal_ridge() {
  SyntheticSpec spec;
  spec.seed = 3;
  auto corpus = generate(spec);
  auto data = corpus.pipeline_data();
  auto prepared = prepare(data, 0.6);
  auto ridge = baseline_ridge(prepared.ling, prepared.predicted);
  int tables = 0;
  bool ok = true;
  for (auto form : {GateForm::value, GateForm::vector}) {
    auto unit = build_fused_table(prepared.ling, prepared.predicted,
                                  GateModel::unit(form, spec.dim, spec.dim));
    ok = ok && unit.table.words() == ridge.table.words() &&
         unit.table.vectors() == ridge.table.vectors();
    for (const auto& b : data.benchmarks) {
      ok = ok && same_results(evaluate(unit, b, prepared.visual_vocab),
                              evaluate(ridge, b, prepared.visual_vocab));
    }
    ++tables;
  }
  return {ok, std::to_string(tables) + " unit models, bitwise table and result match"};
}

Outcome region_partition() {
  SyntheticSpec spec;
  spec.seed = 4;
  spec.visual_fraction = 0.5;
  auto corpus = generate(spec);
  auto data = corpus.pipeline_data();
  auto prepared = prepare(data, 0.6);
  auto table = baseline_ridge(prepared.ling, prepared.predicted).table;
  EmbeddingTable tripled(table.words(), table.vectors() * 3.0);
  // Drop some words so OOV pairs show up.
  std::vector<std::string> keep;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (i % 7 != 0) keep.push_back(table.words()[i]);
  }
  auto partial = table.subset(keep);
  bool ok = true;
  std::size_t skipped = 0;
  for (const auto& b : data.benchmarks) {
    auto r = evaluate(partial, b, prepared.visual_vocab);
    ok = ok && r[1].pairs_used + r[2].pairs_used == r[0].pairs_used &&
         r[1].pairs_skipped + r[2].pairs_skipped == r[0].pairs_skipped &&
         r[0].pairs_used + r[0].pairs_skipped == b.pairs.size();
    skipped += r[0].pairs_skipped;
    auto base = evaluate(table, b, prepared.visual_vocab);
    auto x3 = evaluate(tripled, b, prepared.visual_vocab);
    for (std::size_t k = 0; k < 3; ++k) {
      ok = ok && std::abs(base[k].correlation.rho - x3[k].correlation.rho) <= 1e-12;
    }
  }
  return {ok && skipped > 0, "VIS+ZS = ALL with " + std::to_string(skipped) +
                                 " OOV pairs; x3 scale invariant"};
}

Outcome data_size() {
  bool ok = true;
  std::ostringstream detail;
  // Fraction 1.0 reproduces a direct run.
  {
    SyntheticSpec spec;
    auto corpus = generate(spec);
    auto data = corpus.pipeline_data();
    auto prepared = prepare(data, 0.6);
    GateInputs in(prepared.ling, prepared.predicted, &data.senses);
    RunConfig cfg;
    cfg.form = GateForm::vector;
    cfg.train.seed = 2;
    auto pts = data_size_ablation({1.0}, data, prepared, in, cfg, {2});
    auto direct = train_and_evaluate(data, prepared, in, cfg);
    bool same = pts[0].mean_rho == direct.mean_rho;
    ok = ok && same;
    detail << (same ? "fraction 1.0 = direct run" : "fraction 1.0 DIFFERS");
  }
  for (auto scope : {GateScope::modality, GateScope::category, GateScope::sample}) {
    double full = 0.0, fifth = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
      SyntheticSpec spec;
      spec.seed = s;
      auto corpus = generate(spec);
      auto data = corpus.pipeline_data();
      auto prepared = prepare(data, 0.6);
      GateInputs in(prepared.ling, prepared.predicted, &data.senses);
      RunConfig cfg;
      cfg.scope = scope;
      cfg.form = GateForm::vector;
      auto pts = data_size_ablation({0.2, 1.0}, data, prepared, in, cfg, {s});
      fifth += pts[0].mean_rho / 5.0;
      full += pts[1].mean_rho / 5.0;
    }
    ok = ok && full >= fifth;
    detail << "; " << to_string(scope) << "-vec " << fmt("%.4f", fifth)
           << " -> " << fmt("%.4f", full);
  }
  return {ok, detail.str()};
}

Outcome manifest_rerun() {
  testing_support::TempDir dir;
  auto p = [&](const char* n) { return (dir / n).string(); };
  std::ostringstream out, err;
  auto run = [&](std::vector<std::string> args) {
    out.str("");
    err.str("");
    return mmfuse::cli::run_cli(std::move(args), out, err);
  };
  if (run({"synth", "--vocab-size", "160", "--dim", "8", "--num-pairs", "100",
           "--out-dir", dir.path().string()}) != 0) {
    return {false, "synth failed: " + err.str()};
  }
  if (run({"train", "--ling", p("ling.txt"), "--visual", p("visual.txt"),
           "--pairs", p("pairs.tsv"), "--supersenses", p("supersenses.tsv"),
           "--benchmarks", "synth1=" + p("bench_synth1.tsv"), "--gate", "c",
           "--form", "vec", "--epochs", "3", "--seed", "9", "--out",
           p("first.gates")}) != 0) {
    return {false, "train failed: " + err.str()};
  }
  const std::string first_out = out.str();
  if (run({"train", "--config", p("first.gates.manifest"), "--out",
           p("second.gates")}) != 0) {
    return {false, "rerun failed: " + err.str()};
  }
  using testing_support::slurp;
  bool ok = slurp(dir / "first.gates") == slurp(dir / "second.gates") &&
            slurp(dir / "first.gates.report") == slurp(dir / "second.gates.report") &&
            slurp(dir / "first.gates.eval.tsv") == slurp(dir / "second.gates.eval.tsv") &&
            out.str() == first_out && err.str().empty();
  return {ok, ok ? "model, report and scores byte-identical"
                 : "rerun output differs"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"ridge solution matches gradient descent", ridge_vs_descent},
      {"analytic gradients match finite differences", gradient_check},
      {"hinge loss matches the literal objective", loss_oracle},
      {"spearman matches the rank oracle", spearman_oracle},
      {"planted modality signal is recovered", planted_signal},
      {"unit gates reproduce the ridge baseline", unit_gates_equal_ridge},
      {"evaluation regions partition the pairs", region_partition},
      {"more training data does not hurt vector gates", data_size},
      {"manifest rerun is byte-identical", manifest_rerun},
  };
  int failed = 0;
  int k = 0;
  for (const auto& [name, check] : criteria) {
    ++k;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << k << "] " << name
              << " (" << o.detail << ")" << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed"
                       : "all criteria passed")
            << std::endl;
  return failed ? 1 : 0;
}
