#include "mmfuse_cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include "mmfuse/cross_modal_map.hpp"
#include "mmfuse/error.hpp"
#include "mmfuse/eval_bench.hpp"
#include "mmfuse/fusion_gates.hpp"
#include "mmfuse/pipeline.hpp"
#include "mmfuse/synthetic_data.hpp"
#include "mmfuse/text_io.hpp"
#include "mmfuse/trainer.hpp"
#include "mmfuse/weight_analysis.hpp"

#ifndef MMFUSE_VERSION
#define MMFUSE_VERSION "0.0.0"
#endif

namespace mmfuse::cli {

KeyValues read_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw Error("config: line " + std::to_string(line_no) +
                  ": expected key=value");
    }
    out.emplace_back(std::string(trim(t.substr(0, eq))),
                     std::string(trim(t.substr(eq + 1))));
  }
  return out;
}

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string text(const std::string& v) { return v; }
std::string text(double v) { return format_exact(v); }
std::string text(bool v) { return v ? "true" : "false"; }
template <typename T>
  requires std::is_integral_v<T>
std::string text(T v) {
  return std::to_string(v);
}
template <typename T>
std::string text(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += text(v[i]);
  }
  return s;
}

template <typename T>
inline constexpr bool is_vector_v = false;
template <typename T>
inline constexpr bool is_vector_v<std::vector<T>> = true;

enum class Kind { plain, input, named_inputs };

struct NamedPath {
  std::string name;
  std::filesystem::path path;
};

std::vector<NamedPath> parse_named(const std::vector<std::string>& specs,
                                   const std::string& flag) {
  std::vector<NamedPath> out;
  std::set<std::string> seen;
  for (const auto& s : specs) {
    NamedPath np;
    auto eq = s.find('=');
    if (eq == std::string::npos) {
      np.path = s;
      np.name = np.path.stem().string();
    } else {
      np.name = s.substr(0, eq);
      np.path = s.substr(eq + 1);
    }
    if (np.name.empty() || np.path.empty()) {
      throw UsageError("--" + flag + ": expected name=path, got '" + s + "'");
    }
    if (!seen.insert(np.name).second) {
      throw UsageError("--" + flag + ": duplicate name '" + np.name + "'");
    }
    out.push_back(std::move(np));
  }
  return out;
}

/// One subcommand: owns its flag values and remembers how to print each
/// resolved value for the run manifest.
class Command {
 public:
  Command(CLI::App& app, const std::string& name, const std::string& about)
      : name_(name), app_(app.add_subcommand(name, about)) {
    app_->add_option("--config", config_,
                     "key=value file (e.g. a manifest), merged under flags");
  }
  virtual ~Command() = default;

  CLI::App* app() const { return app_; }
  const std::string& name() const { return name_; }

  virtual void run(std::ostream& out, std::ostream& err) = 0;

  KeyValues manifest() const {
    KeyValues kv{{"subcommand", name_}, {"tool_version", MMFUSE_VERSION}};
    for (const auto& f : flags_) kv.emplace_back(f.name, f.value());
    for (const auto& [k, v] : digests()) kv.emplace_back(k, v);
    return kv;
  }

  std::map<std::string, std::string> digests() const {
    std::map<std::string, std::string> out;
    for (const auto& f : flags_) {
      if (f.kind == Kind::input) {
        auto v = f.value();
        if (!v.empty()) out["digest." + f.name] = file_digest(v);
      } else if (f.kind == Kind::named_inputs) {
        for (const auto& np : parse_named(*f.list, f.name)) {
          out["digest." + f.name + "." + np.name] = file_digest(np.path);
        }
      }
    }
    return out;
  }

  void write_manifest(const std::filesystem::path& path) const {
    auto os = open_output(path);
    for (const auto& [k, v] : manifest()) os << k << '=' << v << '\n';
    if (!os) throw IoError("write failed: " + path.string());
  }

 protected:
  template <typename T>
  CLI::Option* flag(const std::string& name, T& var, const std::string& about,
                    Kind kind = Kind::plain) {
    auto* opt = app_->add_option("--" + name, var, about);
    if constexpr (is_vector_v<T>) {
      opt->delimiter(',');
    }
    Flag f{name, [&var] { return text(var); }, kind, nullptr};
    if constexpr (std::is_same_v<T, std::vector<std::string>>) f.list = &var;
    flags_.push_back(std::move(f));
    return opt;
  }

 private:
  struct Flag {
    std::string name;
    std::function<std::string()> value;
    Kind kind;
    const std::vector<std::string>* list;
  };

  std::string name_;
  CLI::App* app_;
  std::string config_;
  std::vector<Flag> flags_;
};

void write_file(const std::filesystem::path& path,
                const std::function<void(std::ostream&)>& body) {
  auto os = open_output(path);
  body(os);
  if (!os) throw IoError("write failed: " + path.string());
}

std::filesystem::path sibling(const std::string& out, const std::string& ext) {
  return out + ext;
}

std::vector<SimilarityBenchmark> load_benchmarks(
    const std::vector<std::string>& specs) {
  std::vector<SimilarityBenchmark> out;
  for (const auto& np : parse_named(specs, "benchmarks")) {
    out.push_back(load_benchmark(np.path, np.name));
  }
  return out;
}

/// First whitespace-separated token of each non-blank line, so both word
/// lists and embedding files work.
WordSet load_word_list(const std::filesystem::path& path) {
  auto in = open_input(path);
  WordSet words;
  std::string line;
  while (std::getline(in, line)) {
    auto fields = split_whitespace(line);
    if (!fields.empty()) words.emplace(fields.front());
  }
  return words;
}

/// Loaded mapping, or a ridge fit on the given visual table.
MappingModel mapping_from(const std::string& mapping_path,
                          const EmbeddingTable& ling,
                          const std::optional<EmbeddingTable>& visual,
                          double lambda) {
  if (!mapping_path.empty()) {
    auto m = load_mapping(mapping_path);
    if (m.source_dim() != ling.dim()) {
      throw Error("mapping expects linguistic dim " +
                  std::to_string(m.source_dim()) + ", table has " +
                  std::to_string(ling.dim()));
    }
    return m;
  }
  if (!visual) throw UsageError("need --mapping or --visual");
  auto aligned = align_for_mapping(ling, *visual);
  return fit_ridge(aligned.ling, aligned.visual, lambda);
}

class MapCommand : public Command {
 public:
  explicit MapCommand(CLI::App& app)
      : Command(app, "map", "Fit the linguistic-to-visual ridge mapping") {
    flag("ling", ling_, "linguistic embeddings", Kind::input)->required();
    flag("visual", visual_, "visual embeddings", Kind::input)->required();
    flag("lambda", lambda_, "ridge penalty");
    flag("lambda-grid", grid_, "candidate penalties for cross-validation");
    flag("folds", folds_, "cross-validation folds");
    flag("seed", seed_, "fold shuffling seed");
    flag("out", out_, "mapping file to write")->required();
  }

  void run(std::ostream& out, std::ostream&) override {
    auto ling = load_embeddings(ling_);
    auto visual = load_embeddings(visual_);
    auto aligned = align_for_mapping(ling, visual);
    double lambda = lambda_;
    if (!grid_.empty()) {
      auto sel = select_lambda(aligned.ling, aligned.visual, grid_, folds_,
                               seed_);
      out << "lambda\tcv_mse\n";
      for (const auto& [l, mse] : sel.mse) {
        out << format_exact(l) << '\t' << format_exact(mse) << '\n';
      }
      lambda = sel.best_lambda;
    }
    save_mapping(out_, fit_ridge(aligned.ling, aligned.visual, lambda));
    out << "chosen_lambda\t" << format_exact(lambda) << '\n'
        << "fit_rows\t" << aligned.words.size() << '\n';
    write_manifest(sibling(out_, ".manifest"));
  }

 private:
  std::string ling_, visual_, out_;
  double lambda_ = 0.6;
  std::vector<double> grid_;
  int folds_ = 5;
  std::uint64_t seed_ = 0;
};

class FuseCommand : public Command {
 public:
  explicit FuseCommand(CLI::App& app)
      : Command(app, "fuse", "Write a fused embedding table") {
    flag("ling", ling_, "linguistic embeddings", Kind::input)->required();
    flag("mapping", mapping_, "ridge mapping", Kind::input);
    flag("visual", visual_, "visual embeddings", Kind::input);
    flag("lambda", lambda_, "ridge penalty when fitting from --visual");
    flag("model", model_, "trained gate model", Kind::input);
    flag("baseline", baseline_, "ridge, conc or dispersion instead of a model")
        ->check(CLI::IsMember({"", "ridge", "conc", "dispersion"}));
    flag("images", images_, "per-image features (dispersion)", Kind::input);
    flag("supersenses", senses_, "word supersenses", Kind::input);
    flag("normalize", normalize_, "unit-normalize both halves");
    flag("out", out_, "fused table to write")->required();
  }

  void run(std::ostream& out, std::ostream&) override {
    if (model_.empty() == baseline_.empty()) {
      throw UsageError("give exactly one of --model and --baseline");
    }
    auto ling = load_embeddings(ling_);
    std::optional<EmbeddingTable> visual;
    if (!visual_.empty()) visual = load_embeddings(visual_);
    FusedTable fused;
    if (baseline_ == "conc" || baseline_ == "dispersion") {
      if (!visual) throw UsageError("--baseline " + baseline_ + " needs --visual");
      if (baseline_ == "conc") {
        fused = baseline_conc(ling, *visual);
      } else {
        if (images_.empty()) throw UsageError("--baseline dispersion needs --images");
        auto d = baseline_dispersion(ling, *visual, load_image_features(images_));
        out << "median_dispersion\t" << format_exact(d.median) << '\n'
            << "visual_zeroed\t" << d.abstract_words << '\n';
        fused = std::move(d.fused);
      }
    } else {
      auto predicted =
          predict_visual(ling, mapping_from(mapping_, ling, visual, lambda_));
      if (baseline_ == "ridge") {
        fused = baseline_ridge(ling, predicted);
      } else {
        std::optional<SupersenseMap> senses;
        if (!senses_.empty()) senses = load_supersenses(senses_);
        fused = build_fused_table(ling, predicted, load_gate_model(model_),
                                  senses ? &*senses : nullptr, {normalize_});
      }
    }
    save_embeddings(out_, fused.table);
    out << "rows\t" << fused.table.size() << '\n'
        << "dim\t" << fused.table.dim() << '\n';
    write_manifest(sibling(out_, ".manifest"));
  }

 private:
  std::string ling_, mapping_, visual_, model_, baseline_, images_, senses_,
      out_;
  double lambda_ = 0.6;
  bool normalize_ = true;
};

/// Flags and loading shared by train and ablate.
class TrainingCommand : public Command {
 protected:
  TrainingCommand(CLI::App& app, const std::string& name,
                  const std::string& about, const std::string& default_form)
      : Command(app, name, about), form_(default_form) {
    flag("ling", ling_, "linguistic embeddings", Kind::input)->required();
    flag("visual", visual_, "visual embeddings (fit and VIS/ZS regions)",
         Kind::input);
    flag("mapping", mapping_, "ridge mapping", Kind::input);
    flag("lambda", lambda_, "ridge penalty when fitting from --visual");
    flag("pairs", pairs_, "association pairs", Kind::input)->required();
    flag("benchmarks", benchmarks_, "name=path similarity datasets",
         Kind::named_inputs);
    flag("supersenses", senses_, "word supersenses", Kind::input);
    flag("gate", gate_, "gate scope: m, c or s")
        ->check(CLI::IsMember({"m", "c", "s", "modality", "category", "sample"}));
    flag("form", form_, "gate form: val or vec")
        ->check(CLI::IsMember({"val", "vec", "value", "vector"}));
    flag("threshold", threshold_, "minimum association score for training");
    flag("lr-grid", config_.train.learning_rates, "candidate learning rates");
    flag("batch", config_.train.batch_size, "pairs per batch");
    flag("epochs", config_.train.epochs, "epochs per learning rate");
    flag("margin", config_.train.margin, "hinge margin");
    flag("normalize", config_.fusion.normalize_inputs,
         "unit-normalize both halves");
  }

  struct Loaded {
    PipelineData data;
    PreparedData prepared;
  };

  Loaded load() {
    Loaded l;
    l.data.ling = load_embeddings(ling_);
    std::optional<EmbeddingTable> visual;
    if (!visual_.empty()) {
      visual = load_embeddings(visual_);
      l.data.visual = *visual;
      l.prepared.visual_vocab = visual->vocabulary();
    }
    {
      auto in = open_input(pairs_);
      try {
        l.data.pairs = parse_pairs(in);
      } catch (const IoError&) {
        throw;
      } catch (const Error& e) {
        throw Error(pairs_ + ": " + e.what());
      }
    }
    l.data.benchmarks = load_benchmarks(benchmarks_);
    if (!senses_.empty()) l.data.senses = load_supersenses(senses_);

    l.prepared.mapping = mapping_from(mapping_, l.data.ling, visual, lambda_);
    l.prepared.ling =
        restrict_to_used(l.data.ling, l.data.pairs, l.data.benchmarks);
    l.prepared.predicted = predict_visual(l.prepared.ling, l.prepared.mapping);
    const WordSet bench_vocab = benchmark_vocabulary(l.data.benchmarks);
    const WordSet ling_vocab = l.prepared.ling.vocabulary();
    l.prepared.split =
        split_pairs(l.data.pairs, {threshold_, &bench_vocab, &ling_vocab});
    config_.scope = parse_scope(gate_);
    config_.form = parse_form(form_);
    return l;
  }

  static void describe_split(std::ostream& out, const PairSplit& s) {
    out << "train_pairs\t" << s.train.size() << '\n'
        << "dev_pairs\t" << s.dev.size() << '\n'
        << "oov_pairs\t" << s.out_of_vocabulary << '\n';
  }

  std::string ling_, visual_, mapping_, pairs_, senses_, out_;
  std::vector<std::string> benchmarks_;
  std::string gate_ = "s";
  std::string form_;
  double lambda_ = 0.6;
  double threshold_ = 0.2;
  RunConfig config_;
};

class TrainCommand : public TrainingCommand {
 public:
  explicit TrainCommand(CLI::App& app)
      : TrainingCommand(app, "train", "Train gate parameters", "val") {
    flag("seed", seed_, "seed for initialization, shuffling and negatives");
    flag("repeats", repeats_, "independent runs with seeds seed, seed+1, ...")
        ->check(CLI::PositiveNumber);
    flag("out", out_, "model file to write")->required();
  }

  void run(std::ostream& out, std::ostream&) override {
    auto l = load();
    describe_split(out, l.prepared.split);
    GateInputs inputs(l.prepared.ling, l.prepared.predicted, &l.data.senses,
                      config_.fusion);
    std::vector<SuiteRow> suite;
    std::vector<double> means;
    out << "repeat\tseed\tbest_lr\tbest_epoch\tdev_spearman";
    if (!l.data.benchmarks.empty()) out << "\tmean_rho";
    out << '\n';
    for (int r = 1; r <= repeats_; ++r) {
      RunConfig run = config_;
      run.train.seed = seed_ + static_cast<std::uint64_t>(r - 1);
      const std::string base = r == 1 ? out_ : out_ + "." + std::to_string(r);
      auto outcome = train_and_evaluate(l.data, l.prepared, inputs, run);
      save_gate_model(base, outcome.trained.model);
      write_file(base + ".report", [&](std::ostream& os) {
        write_train_report(os, outcome.trained.report);
      });
      const auto& rep = outcome.trained.report;
      out << r << '\t' << run.train.seed << '\t'
          << format_exact(rep.best_learning_rate) << '\t' << rep.best_epoch
          << '\t'
          << (rep.best_dev.defined ? format_exact(rep.best_dev.rho) : "NA");
      if (!l.data.benchmarks.empty()) {
        out << '\t' << format_exact(outcome.mean_rho);
        means.push_back(outcome.mean_rho);
        for (auto& res : outcome.results) {
          suite.push_back({"repeat" + std::to_string(r), std::move(res)});
        }
      }
      out << '\n';
    }
    if (!suite.empty()) {
      write_file(out_ + ".eval.tsv",
                 [&](std::ostream& os) { write_suite_tsv(os, suite); });
      double sum = 0.0;
      for (double m : means) sum += m;
      out << "mean_rho_over_repeats\t"
          << format_exact(sum / static_cast<double>(means.size())) << '\n';
    }
    write_manifest(sibling(out_, ".manifest"));
  }

 private:
  std::uint64_t seed_ = 0;
  int repeats_ = 1;
};

class AblateCommand : public TrainingCommand {
 public:
  explicit AblateCommand(CLI::App& app)
      : TrainingCommand(app, "ablate",
                        "Benchmark rho against training-data fraction", "vec") {
    flag("fractions", fractions_, "training-set fractions in (0, 1]");
    flag("seeds", seeds_, "one training run per seed and fraction");
    flag("out", out_, "ablation table to write")->required();
  }

  void run(std::ostream& out, std::ostream&) override {
    auto l = load();
    if (l.data.benchmarks.empty()) throw UsageError("ablate needs --benchmarks");
    describe_split(out, l.prepared.split);
    GateInputs inputs(l.prepared.ling, l.prepared.predicted, &l.data.senses,
                      config_.fusion);
    auto points = data_size_ablation(fractions_, l.data, l.prepared, inputs,
                                     config_, seeds_);
    write_file(out_, [&](std::ostream& os) { write_ablation(os, points); });
    write_ablation(out, points);
    write_manifest(sibling(out_, ".manifest"));
  }

 private:
  std::vector<double> fractions_{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<std::uint64_t> seeds_{0};
};

class EvalCommand : public Command {
 public:
  explicit EvalCommand(CLI::App& app)
      : Command(app, "eval", "Score embedding tables on similarity datasets") {
    flag("tables", tables_, "name=path embedding tables", Kind::named_inputs)
        ->required();
    flag("benchmarks", benchmarks_, "name=path similarity datasets",
         Kind::named_inputs)
        ->required();
    flag("visual-vocab", visual_vocab_,
         "words with visual vectors (first column of each line)", Kind::input);
    flag("out", out_, "result TSV to write")->required();
  }

  void run(std::ostream& out, std::ostream&) override {
    std::vector<std::pair<std::string, EmbeddingTable>> tables;
    for (const auto& np : parse_named(tables_, "tables")) {
      tables.emplace_back(np.name, load_embeddings(np.path));
    }
    auto benches = load_benchmarks(benchmarks_);
    WordSet vocab;
    if (!visual_vocab_.empty()) vocab = load_word_list(visual_vocab_);
    std::vector<NamedTable> named;
    for (const auto& [name, t] : tables) named.emplace_back(name, &t);
    auto rows = run_suite(named, benches, vocab);
    write_file(out_, [&](std::ostream& os) { write_suite_tsv(os, rows); });
    write_suite_tsv(out, rows);
    write_manifest(sibling(out_, ".manifest"));
  }

 private:
  std::vector<std::string> tables_, benchmarks_;
  std::string visual_vocab_, out_;
};

class AnalyzeCommand : public Command {
 public:
  explicit AnalyzeCommand(CLI::App& app)
      : Command(app, "analyze", "Linguistic-to-visual gate weight ratios") {
    flag("model", model_, "trained gate model", Kind::input)->required();
    flag("ling", ling_, "linguistic embeddings", Kind::input)->required();
    flag("visual", visual_, "visual embeddings (to fit a mapping)",
         Kind::input);
    flag("mapping", mapping_, "ridge mapping", Kind::input);
    flag("lambda", lambda_, "ridge penalty when fitting from --visual");
    flag("concreteness", conc_, "word concreteness ratings", Kind::input);
    flag("supersenses", senses_, "word supersenses", Kind::input);
    flag("top-k", top_k_, "extreme words to list");
    flag("quartile-sample", quartile_sample_,
         "words sampled per quartile (0 keeps all)");
    flag("seed", seed_, "quartile sampling seed");
    flag("normalize", normalize_, "unit-normalize both halves");
    flag("out", out_, "ratio report to write")->required();
  }

  void run(std::ostream& out, std::ostream&) override {
    auto model = load_gate_model(model_);
    auto ling = load_embeddings(ling_);
    std::optional<EmbeddingTable> visual;
    if (!visual_.empty()) visual = load_embeddings(visual_);
    auto predicted =
        predict_visual(ling, mapping_from(mapping_, ling, visual, lambda_));
    SupersenseMap senses;
    if (!senses_.empty()) senses = load_supersenses(senses_);
    ConcretenessTable conc;
    if (!conc_.empty()) conc = load_concreteness(conc_);
    GateInputs inputs(ling, predicted, &senses, {normalize_});
    RatioOptions opts;
    opts.k = top_k_;
    opts.seed = seed_;
    if (quartile_sample_ > 0) opts.quartile_sample = quartile_sample_;
    auto report = ratio_report(model, inputs, conc, opts);
    write_file(out_,
               [&](std::ostream& os) { write_ratio_report(os, report); });
    std::ostringstream full;
    write_ratio_report(full, report);
    std::istringstream lines(full.str());
    for (std::string line; std::getline(lines, line);) {
      if (line.starts_with("#")) out << line << '\n';
    }
    write_manifest(sibling(out_, ".manifest"));
  }

 private:
  std::string model_, ling_, visual_, mapping_, conc_, senses_, out_;
  double lambda_ = 0.6;
  std::size_t top_k_ = 5;
  std::size_t quartile_sample_ = 0;
  std::uint64_t seed_ = 0;
  bool normalize_ = true;
};

class SynthCommand : public Command {
 public:
  explicit SynthCommand(CLI::App& app)
      : Command(app, "synth", "Generate a synthetic corpus") {
    flag("vocab-size", spec_.vocab_size, "words");
    flag("dim", spec_.dim, "dimension per modality (even)");
    flag("num-pairs", spec_.num_pairs, "association pairs eligible for training");
    flag("fraction-abstract", spec_.fraction_abstract,
         "share of abstract-like clusters");
    flag("noise", spec_.noise, "jitter and observation noise");
    flag("seed", spec_.seed, "generator seed");
    flag("cluster-size", spec_.cluster_size, "words per latent cluster");
    flag("benchmark-fraction", spec_.benchmark_fraction,
         "clusters reserved for benchmarks");
    flag("visual-fraction", spec_.visual_fraction,
         "words with a visual vector");
    flag("type-offset", spec_.type_offset, "shared per-type offset");
    flag("dev-pairs", spec_.dev_pairs, "unrelated low-score pairs");
    flag("benchmarks", spec_.benchmarks, "number of similarity datasets");
    flag("benchmark-pairs", spec_.benchmark_pairs, "pairs per dataset");
    flag("images-per-word", spec_.images_per_word,
         "per-image features per visual word (0 for none)");
    flag("out-dir", out_dir_, "directory to write")->required();
  }

  void run(std::ostream& out, std::ostream&) override {
    auto corpus = generate(spec_);
    for (const auto& p : write_corpus(corpus, out_dir_)) {
      out << p.string() << '\n';
    }
    write_manifest(std::filesystem::path(out_dir_) / "manifest.txt");
  }

 private:
  SyntheticSpec spec_;
  std::string out_dir_;
};

/// Keys that describe a run rather than set a flag.
bool is_bookkeeping(const std::string& key) {
  return key == "subcommand" || key == "tool_version" ||
         key.starts_with("digest.");
}

struct ConfigMerge {
  std::vector<std::string> args;
  std::map<std::string, std::string> digests;
  std::string config_path;
};

/// Appends `--key=value` for every config entry the command line does not
/// set explicitly.
ConfigMerge merge_config(std::vector<std::string> args) {
  ConfigMerge m;
  std::string path;
  std::set<std::string> explicit_keys;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const auto& a = args[i];
    if (!a.starts_with("--")) continue;
    auto eq = a.find('=');
    std::string key = a.substr(2, eq == std::string::npos ? eq : eq - 2);
    explicit_keys.insert(key);
    if (key == "config") {
      if (eq != std::string::npos) {
        path = a.substr(eq + 1);
      } else if (i + 1 < args.size()) {
        path = args[i + 1];
      }
    }
  }
  if (path.empty()) {
    m.args = std::move(args);
    return m;
  }
  auto in = open_input(path);
  for (auto& [k, v] : read_key_values(in)) {
    if (k == "subcommand") {
      if (!args.empty() && v != args.front()) {
        throw UsageError(path + ": written for '" + v + "', not '" +
                         args.front() + "'");
      }
      continue;
    }
    if (k.starts_with("digest.")) {
      m.digests.emplace(k, v);
      continue;
    }
    if (is_bookkeeping(k) || explicit_keys.contains(k) || v.empty()) continue;
    args.push_back("--" + k + "=" + v);
  }
  m.args = std::move(args);
  m.config_path = path;
  return m;
}

int run(std::vector<std::string> raw, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal word representations with gated fusion",
               "mmfuse-cli"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MMFUSE_VERSION);
  std::vector<std::unique_ptr<Command>> commands;
  commands.push_back(std::make_unique<MapCommand>(app));
  commands.push_back(std::make_unique<FuseCommand>(app));
  commands.push_back(std::make_unique<TrainCommand>(app));
  commands.push_back(std::make_unique<EvalCommand>(app));
  commands.push_back(std::make_unique<AnalyzeCommand>(app));
  commands.push_back(std::make_unique<SynthCommand>(app));
  commands.push_back(std::make_unique<AblateCommand>(app));

  ConfigMerge merged;
  try {
    merged = merge_config(std::move(raw));
    std::vector<std::string> reversed(merged.args.rbegin(),
                                      merged.args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << MMFUSE_VERSION << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  for (auto& cmd : commands) {
    if (!cmd->app()->parsed()) continue;
    if (!merged.digests.empty()) {
      auto now = cmd->digests();
      for (const auto& [k, v] : merged.digests) {
        auto it = now.find(k);
        if (it != now.end() && it->second != v) {
          err << "warning: input for " << k.substr(7) << " differs from "
              << merged.config_path << '\n';
        }
      }
    }
    cmd->run(out, err);
    return 0;
  }
  return 2;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out,
            std::ostream& err) {
  try {
    return run(std::move(args), out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace mmfuse::cli
