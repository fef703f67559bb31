#include "mmfuse/fusion_gates.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "mmfuse/error.hpp"
#include "mmfuse/text_io.hpp"

namespace mmfuse {

std::string_view to_string(GateScope scope) {
  switch (scope) {
    case GateScope::modality: return "modality";
    case GateScope::category: return "category";
    case GateScope::sample: return "sample";
  }
  return "?";
}

std::string_view to_string(GateForm form) {
  return form == GateForm::value ? "value" : "vector";
}

GateScope parse_scope(std::string_view text) {
  if (text == "modality" || text == "m") return GateScope::modality;
  if (text == "category" || text == "c") return GateScope::category;
  if (text == "sample" || text == "s") return GateScope::sample;
  throw Error("unknown gate scope '" + std::string(text) +
              "' (expected modality|category|sample)");
}

GateForm parse_form(std::string_view text) {
  if (text == "value" || text == "val") return GateForm::value;
  if (text == "vector" || text == "vec") return GateForm::vector;
  throw Error("unknown gate form '" + std::string(text) +
              "' (expected value|vector)");
}

SupersenseMap read_supersenses(std::istream& in) {
  SupersenseMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cols = split_on(line, '\t');
    if (cols.size() != 2 || trim(cols[0]).empty() || trim(cols[1]).empty()) {
      throw Error("supersenses: line " + std::to_string(line_no) +
                  ": expected 'word TAB supersense'");
    }
    map.emplace(std::string(trim(cols[0])), std::string(trim(cols[1])));
  }
  return map;
}

SupersenseMap load_supersenses(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_supersenses(in);
}

void write_supersenses(std::ostream& out, const SupersenseMap& map) {
  std::vector<std::pair<std::string, std::string>> rows(map.begin(),
                                                        map.end());
  std::sort(rows.begin(), rows.end());
  for (const auto& [w, s] : rows) out << w << '\t' << s << '\n';
}

// ---------------------------------------------------------------------------
// GateModel

GateModel::GateModel(GateForm form, Eigen::Index ling_dim,
                     Eigen::Index visual_dim, Params params)
    : form_(form),
      ling_dim_(ling_dim),
      visual_dim_(visual_dim),
      params_(std::move(params)) {
  validate();
}

GateScope GateModel::scope() const {
  switch (params_.index()) {
    case 0: return GateScope::modality;
    case 1: return GateScope::category;
    default: return GateScope::sample;
  }
}

namespace {

void check_shape(bool ok, std::string_view what) {
  if (!ok) throw Error("gate model: bad shape for " + std::string(what));
}

void check_finite(const Eigen::Ref<const Matrix>& m, std::string_view what) {
  if (!m.allFinite()) {
    throw Error("gate model: non-finite value in " + std::string(what));
  }
}

GatePair filled_pair(Eigen::Index nl, Eigen::Index nv, double value) {
  return {Vector::Constant(nl, value), Vector::Constant(nv, value)};
}

}  // namespace

void GateModel::validate() const {
  if (ling_dim_ < 1 || visual_dim_ < 1) {
    throw Error("gate model: dimensions must be positive");
  }
  const auto nl = ling_gate_size();
  const auto nv = visual_gate_size();
  auto check_pair = [&](const GatePair& p, std::string_view what) {
    check_shape(p.linguistic.size() == nl && p.visual.size() == nv, what);
    check_finite(p.linguistic, what);
    check_finite(p.visual, what);
  };
  if (auto* m = std::get_if<ModalityGates>(&params_)) {
    check_pair(m->gates, "modality gates");
  } else if (auto* c = std::get_if<CategoryGates>(&params_)) {
    if (!c->senses.contains(kDefaultSense)) {
      throw Error("gate model: category gates lack a __default__ sense");
    }
    for (const auto& [name, pair] : c->senses) {
      if (name.empty() ||
          name.find_first_of(" \t\r\n") != std::string::npos) {
        throw Error("gate model: invalid sense name '" + name + "'");
      }
      check_pair(pair, "sense " + name);
    }
  } else {
    const auto& s = std::get<SampleGates>(params_);
    check_shape(s.w_ling.rows() == nl && s.w_ling.cols() == ling_dim_, "W_L");
    check_shape(s.b_ling.size() == nl, "b_L");
    check_shape(s.w_visual.rows() == nv && s.w_visual.cols() == visual_dim_,
                "W_P");
    check_shape(s.b_visual.size() == nv, "b_P");
    check_finite(s.w_ling, "W_L");
    check_finite(s.b_ling, "b_L");
    check_finite(s.w_visual, "W_P");
    check_finite(s.b_visual, "b_P");
  }
}

GateModel GateModel::initial(GateScope scope, GateForm form,
                             Eigen::Index ling_dim, Eigen::Index visual_dim,
                             const std::vector<std::string>& senses,
                             std::uint64_t seed) {
  const Eigen::Index nl = form == GateForm::value ? 1 : ling_dim;
  const Eigen::Index nv = form == GateForm::value ? 1 : visual_dim;
  switch (scope) {
    case GateScope::modality:
      return GateModel(form, ling_dim, visual_dim,
                       ModalityGates{filled_pair(nl, nv, 1.0)});
    case GateScope::category: {
      CategoryGates c;
      c.senses.emplace(std::string(kDefaultSense), filled_pair(nl, nv, 1.0));
      for (const auto& s : senses) c.senses.emplace(s, filled_pair(nl, nv, 1.0));
      return GateModel(form, ling_dim, visual_dim, std::move(c));
    }
    case GateScope::sample: {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(-0.01, 0.01);
      auto draw = [&](Eigen::Index r, Eigen::Index c) {
        Matrix m(r, c);
        // Row-major fill keeps the draw order independent of storage order.
        for (Eigen::Index i = 0; i < r; ++i) {
          for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
        }
        return m;
      };
      SampleGates s;
      s.w_ling = draw(nl, ling_dim);
      s.b_ling = Vector::Ones(nl);
      s.w_visual = draw(nv, visual_dim);
      s.b_visual = Vector::Ones(nv);
      return GateModel(form, ling_dim, visual_dim, std::move(s));
    }
  }
  throw Error("gate model: unknown scope");
}

GateModel GateModel::unit(GateForm form, Eigen::Index ling_dim,
                          Eigen::Index visual_dim) {
  return initial(GateScope::modality, form, ling_dim, visual_dim);
}

std::string_view GateModel::resolve_sense(
    std::optional<std::string_view> sense) const {
  const auto* c = std::get_if<CategoryGates>(&params_);
  if (!c) return kDefaultSense;
  if (sense && !sense->empty()) {
    auto it = c->senses.find(*sense);
    if (it != c->senses.end()) return it->first;
  }
  return kDefaultSense;
}

namespace {

template <typename Fn>
void visit_blocks(auto& params, Fn&& fn) {
  using P = std::remove_const_t<std::remove_reference_t<decltype(params)>>;
  static_assert(std::is_same_v<P, GateModel::Params>);
  std::visit(
      [&](auto& p) {
        using T = std::remove_const_t<std::remove_reference_t<decltype(p)>>;
        if constexpr (std::is_same_v<T, ModalityGates>) {
          fn("g_L", p.gates.linguistic);
          fn("g_P", p.gates.visual);
        } else if constexpr (std::is_same_v<T, CategoryGates>) {
          for (auto& [name, pair] : p.senses) {
            fn("sense " + name + " g_L", pair.linguistic);
            fn("sense " + name + " g_P", pair.visual);
          }
        } else {
          fn("W_L", p.w_ling);
          fn("b_L", p.b_ling);
          fn("W_P", p.w_visual);
          fn("b_P", p.b_visual);
        }
      },
      params);
}

}  // namespace

std::vector<std::span<double>> GateModel::parameter_blocks() {
  std::vector<std::span<double>> out;
  visit_blocks(params_, [&](const std::string&, auto& m) {
    out.emplace_back(m.data(), static_cast<std::size_t>(m.size()));
  });
  return out;
}

std::vector<std::span<const double>> GateModel::parameter_blocks() const {
  std::vector<std::span<const double>> out;
  visit_blocks(params_, [&](const std::string&, const auto& m) {
    out.emplace_back(m.data(), static_cast<std::size_t>(m.size()));
  });
  return out;
}

std::vector<std::string> GateModel::parameter_names() const {
  std::vector<std::string> out;
  visit_blocks(params_,
               [&](const std::string& name, const auto&) { out.push_back(name); });
  return out;
}

std::size_t GateModel::parameter_count() const {
  std::size_t n = 0;
  for (auto b : parameter_blocks()) n += b.size();
  return n;
}

GateModel GateModel::zeros_like() const {
  GateModel z = *this;
  for (auto block : z.parameter_blocks()) {
    std::fill(block.begin(), block.end(), 0.0);
  }
  return z;
}

bool GateModel::operator==(const GateModel& other) const {
  if (form_ != other.form_ || ling_dim_ != other.ling_dim_ ||
      visual_dim_ != other.visual_dim_ || scope() != other.scope() ||
      parameter_names() != other.parameter_names()) {
    return false;
  }
  auto a = parameter_blocks();
  auto b = other.parameter_blocks();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size() ||
        !std::equal(a[i].begin(), a[i].end(), b[i].begin())) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Gating and fusion

GatePair compute_gates(const GateModel& model, const Vector& ling,
                       const Vector& visual,
                       std::optional<std::string_view> sense) {
  if (ling.size() != model.ling_dim() || visual.size() != model.visual_dim()) {
    throw Error("compute_gates: inputs are " + std::to_string(ling.size()) +
                "/" + std::to_string(visual.size()) + "-dimensional, model "
                "expects " + std::to_string(model.ling_dim()) + "/" +
                std::to_string(model.visual_dim()));
  }
  const auto& params = model.params();
  if (const auto* m = std::get_if<ModalityGates>(&params)) return m->gates;
  if (const auto* c = std::get_if<CategoryGates>(&params)) {
    return c->senses.find(model.resolve_sense(sense))->second;
  }
  const auto& s = std::get<SampleGates>(params);
  GatePair g;
  g.linguistic = (s.w_ling * ling + s.b_ling).array().tanh().matrix();
  g.visual = (s.w_visual * visual + s.b_visual).array().tanh().matrix();
  return g;
}

namespace {

void gate_half(const Vector& x, const Vector& g, Eigen::Ref<Vector> out,
               const char* side) {
  if (g.size() == 1) {
    out = g(0) * x;
  } else if (g.size() == x.size()) {
    out = g.cwiseProduct(x);
  } else {
    throw Error(std::string("fuse: ") + side + " gate has size " +
                std::to_string(g.size()) + " for a " +
                std::to_string(x.size()) + "-dimensional vector");
  }
}

}  // namespace

Vector fuse(const Vector& ling, const Vector& visual, const Vector& g_ling,
            const Vector& g_visual) {
  Vector out(ling.size() + visual.size());
  gate_half(ling, g_ling, out.head(ling.size()), "linguistic");
  gate_half(visual, g_visual, out.tail(visual.size()), "visual");
  return out;
}

GateInputs::GateInputs(const EmbeddingTable& ling, const EmbeddingTable& visual,
                       const SupersenseMap* senses, FusionOptions options)
    : words_(ling.words()) {
  if (ling.size() != visual.size()) {
    throw Error("fusion: linguistic table has " + std::to_string(ling.size()) +
                " words, visual table has " + std::to_string(visual.size()));
  }
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i] != visual.words()[i]) {
      throw Error("fusion: vocabularies diverge at row " + std::to_string(i) +
                  ": '" + words_[i] + "' vs '" + visual.words()[i] + "'");
    }
    index_.emplace(words_[i], static_cast<Eigen::Index>(i));
  }
  if (options.normalize_inputs) {
    std::size_t zl = 0, zv = 0;
    ling_ = normalize_rows(ling, &zl).vectors();
    visual_ = normalize_rows(visual, &zv).vectors();
    zero_rows_ = zl + zv;
  } else {
    ling_ = ling.vectors();
    visual_ = visual.vectors();
  }
  senses_.resize(words_.size());
  if (senses) {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      auto it = senses->find(words_[i]);
      if (it != senses->end()) senses_[i] = it->second;
    }
  }
}

std::optional<Eigen::Index> GateInputs::index_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string_view> GateInputs::sense_or_none(
    Eigen::Index i) const {
  const auto& s = sense(i);
  if (s.empty()) return std::nullopt;
  return std::string_view(s);
}

std::vector<std::string> GateInputs::sense_inventory() const {
  std::set<std::string> s;
  for (const auto& x : senses_) {
    if (!x.empty()) s.insert(x);
  }
  return {s.begin(), s.end()};
}

GatePair compute_gates(const GateModel& model, const GateInputs& inputs,
                       Eigen::Index row) {
  return compute_gates(model, inputs.ling(row), inputs.visual(row),
                       inputs.sense_or_none(row));
}

Vector fused_row(const GateModel& model, const GateInputs& inputs,
                 Eigen::Index row) {
  Vector l = inputs.ling(row);
  Vector p = inputs.visual(row);
  auto g = compute_gates(model, l, p, inputs.sense_or_none(row));
  return fuse(l, p, g.linguistic, g.visual);
}

FusedTable build_fused_table(const GateModel& model, const GateInputs& inputs) {
  const auto n = static_cast<Eigen::Index>(inputs.size());
  Matrix out(n, model.ling_dim() + model.visual_dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.row(i) = fused_row(model, inputs, i).transpose();
  }
  return {EmbeddingTable(inputs.words(), std::move(out)), model.ling_dim()};
}

FusedTable build_fused_table(const EmbeddingTable& ling,
                             const EmbeddingTable& predicted_visual,
                             const GateModel& model,
                             const SupersenseMap* senses,
                             FusionOptions options) {
  GateInputs inputs(ling, predicted_visual, senses, options);
  return build_fused_table(model, inputs);
}

namespace {

Matrix concat_normalized(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    out.row(i).head(a.cols()) =
        l2_normalize(a.row(i).transpose()).values.transpose();
    out.row(i).tail(b.cols()) =
        l2_normalize(b.row(i).transpose()).values.transpose();
  }
  return out;
}

}  // namespace

FusedTable baseline_conc(const EmbeddingTable& ling,
                         const EmbeddingTable& visual) {
  std::vector<std::string> words;
  for (const auto& w : ling.words()) {
    if (visual.contains(w)) words.push_back(w);
  }
  if (words.empty()) throw Error("CONC: no word has both vectors");
  auto l = ling.subset(words);
  auto v = visual.subset(words);
  return {EmbeddingTable(words, concat_normalized(l.vectors(), v.vectors())),
          ling.dim()};
}

FusedTable baseline_ridge(const EmbeddingTable& ling,
                          const EmbeddingTable& predicted_visual) {
  if (ling.words() != predicted_visual.words()) {
    throw Error("Ridge: linguistic and predicted tables are not aligned");
  }
  return {EmbeddingTable(ling.words(), concat_normalized(ling.vectors(),
                                                         predicted_visual.vectors())),
          ling.dim()};
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

DispersionBaseline baseline_dispersion(const EmbeddingTable& ling,
                                       const EmbeddingTable& visual,
                                       const ImageFeatureSet& images) {
  std::vector<std::string> words;
  for (const auto& w : ling.words()) {
    if (visual.contains(w)) words.push_back(w);
  }
  if (words.empty()) throw Error("Dispersion: no word has both vectors");
  const auto l = ling.subset(words);
  const auto v = visual.subset(words);
  const auto n = static_cast<Eigen::Index>(words.size());
  std::vector<std::optional<double>> disp(static_cast<std::size_t>(n));
  std::vector<double> defined;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& w = words[static_cast<std::size_t>(i)];
    if (images.images_of(w).size() >= 2) {
      double d = image_dispersion(images, w).value;
      disp[static_cast<std::size_t>(i)] = d;
      defined.push_back(d);
    }
  }
  if (defined.empty()) {
    throw Error("Dispersion: no word has two or more images");
  }

  DispersionBaseline out;
  out.median = median(defined);
  Matrix fused = concat_normalized(l.vectors(), v.vectors());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& d = disp[static_cast<std::size_t>(i)];
    bool abstract = !d || *d > out.median;
    if (!d) ++out.undefined_dispersion;
    if (abstract) {
      ++out.abstract_words;
      fused.row(i).tail(visual.dim()).setZero();
    }
  }
  out.fused = {EmbeddingTable(std::move(words), std::move(fused)), ling.dim()};
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void write_values(std::ostream& os, const double* data, Eigen::Index n) {
  for (Eigen::Index k = 0; k < n; ++k) os << ' ' << format_exact(data[k]);
}

void write_row_major(std::ostream& os, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      os << ' ' << format_exact(m(i, j));
    }
  }
}

Vector parse_values(const std::vector<std::string_view>& fields,
                    std::size_t first, Eigen::Index count, std::size_t line_no) {
  if (fields.size() < first + static_cast<std::size_t>(count)) {
    throw Error("gate model: line " + std::to_string(line_no) + ": expected " +
                std::to_string(count) + " values");
  }
  Vector v(count);
  for (Eigen::Index k = 0; k < count; ++k) {
    v(k) = parse_double(fields[first + static_cast<std::size_t>(k)], line_no,
                        "gate model");
  }
  return v;
}

Matrix parse_row_major(const std::vector<std::string_view>& fields,
                       Eigen::Index rows, Eigen::Index cols,
                       std::size_t line_no) {
  if (fields.size() != 1 + static_cast<std::size_t>(rows * cols)) {
    throw Error("gate model: line " + std::to_string(line_no) + ": expected " +
                std::to_string(rows * cols) + " values");
  }
  Vector flat = parse_values(fields, 1, rows * cols, line_no);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = flat(i * cols + j);
  }
  return m;
}

}  // namespace

void write_gate_model(std::ostream& out, const GateModel& model) {
  std::ostringstream os;
  os << "gate " << to_string(model.scope()) << ' ' << to_string(model.form())
     << ' ' << model.ling_dim();
  if (model.visual_dim() != model.ling_dim()) os << ' ' << model.visual_dim();
  os << '\n';
  const auto& params = model.params();
  if (const auto* m = std::get_if<ModalityGates>(&params)) {
    os << "g_L";
    write_values(os, m->gates.linguistic.data(), m->gates.linguistic.size());
    os << "\ng_P";
    write_values(os, m->gates.visual.data(), m->gates.visual.size());
    os << '\n';
  } else if (const auto* c = std::get_if<CategoryGates>(&params)) {
    for (const auto& [name, pair] : c->senses) {
      os << "sense " << name << " g_L";
      write_values(os, pair.linguistic.data(), pair.linguistic.size());
      os << " g_P";
      write_values(os, pair.visual.data(), pair.visual.size());
      os << '\n';
    }
  } else {
    const auto& s = std::get<SampleGates>(params);
    os << "W_L";
    write_row_major(os, s.w_ling);
    os << "\nb_L";
    write_values(os, s.b_ling.data(), s.b_ling.size());
    os << "\nW_P";
    write_row_major(os, s.w_visual);
    os << "\nb_P";
    write_values(os, s.b_visual.data(), s.b_visual.size());
    os << '\n';
  }
  out << os.str();
}

GateModel read_gate_model(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<std::size_t, std::string>> lines;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) lines.emplace_back(line_no, line);
  }
  if (lines.empty()) throw Error("gate model: empty file");

  auto header = split_whitespace(lines[0].second);
  if ((header.size() != 4 && header.size() != 5) || header[0] != "gate") {
    throw Error("gate model: line " + std::to_string(lines[0].first) +
                ": expected 'gate <scope> <form> <dim>'");
  }
  const GateScope scope = parse_scope(header[1]);
  const GateForm form = parse_form(header[2]);
  const auto dl = static_cast<Eigen::Index>(
      parse_double(header[3], lines[0].first, "gate model"));
  const auto dv = header.size() == 5
                      ? static_cast<Eigen::Index>(parse_double(
                            header[4], lines[0].first, "gate model"))
                      : dl;
  if (dl < 1 || dv < 1) throw Error("gate model: dimensions must be positive");
  const Eigen::Index nl = form == GateForm::value ? 1 : dl;
  const Eigen::Index nv = form == GateForm::value ? 1 : dv;

  std::map<std::string, std::pair<std::size_t, std::vector<std::string_view>>>
      blocks;
  CategoryGates cat;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    auto fields = split_whitespace(lines[k].second);
    const auto ln = lines[k].first;
    if (fields[0] == "sense") {
      if (scope != GateScope::category) {
        throw Error("gate model: line " + std::to_string(ln) +
                    ": sense block in a non-category model");
      }
      const std::size_t expect = 2 + 1 + static_cast<std::size_t>(nl) + 1 +
                                 static_cast<std::size_t>(nv);
      if (fields.size() != expect || fields[2] != "g_L" ||
          fields[3 + static_cast<std::size_t>(nl)] != "g_P") {
        throw Error("gate model: line " + std::to_string(ln) +
                    ": expected 'sense <name> g_L ... g_P ...'");
      }
      GatePair pair{parse_values(fields, 3, nl, ln),
                    parse_values(fields, 4 + static_cast<std::size_t>(nl), nv,
                                 ln)};
      if (!cat.senses.emplace(std::string(fields[1]), std::move(pair)).second) {
        throw Error("gate model: line " + std::to_string(ln) +
                    ": duplicate sense '" + std::string(fields[1]) + "'");
      }
      continue;
    }
    std::string name(fields[0]);
    if (!blocks.emplace(name, std::make_pair(ln, fields)).second) {
      throw Error("gate model: line " + std::to_string(ln) +
                  ": duplicate block " + name);
    }
  }

  auto block = [&](const char* name) -> const auto& {
    auto it = blocks.find(name);
    if (it == blocks.end()) {
      throw Error(std::string("gate model: missing block ") + name);
    }
    return it->second;
  };
  auto vector_block = [&](const char* name, Eigen::Index n) {
    const auto& [ln, fields] = block(name);
    if (fields.size() != 1 + static_cast<std::size_t>(n)) {
      throw Error("gate model: line " + std::to_string(ln) + ": expected " +
                  std::to_string(n) + " values for " + name);
    }
    return parse_values(fields, 1, n, ln);
  };
  auto matrix_block = [&](const char* name, Eigen::Index r, Eigen::Index c) {
    const auto& [ln, fields] = block(name);
    return parse_row_major(fields, r, c, ln);
  };

  switch (scope) {
    case GateScope::modality:
      return GateModel(form, dl, dv,
                       ModalityGates{{vector_block("g_L", nl),
                                      vector_block("g_P", nv)}});
    case GateScope::category:
      return GateModel(form, dl, dv, std::move(cat));
    case GateScope::sample:
      return GateModel(form, dl, dv,
                       SampleGates{matrix_block("W_L", nl, dl),
                                   vector_block("b_L", nl),
                                   matrix_block("W_P", nv, dv),
                                   vector_block("b_P", nv)});
  }
  throw Error("gate model: unknown scope");
}

void save_gate_model(const std::filesystem::path& path,
                     const GateModel& model) {
  auto out = open_output(path);
  write_gate_model(out, model);
  if (!out) throw IoError("write failed: " + path.string());
}

GateModel load_gate_model(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return read_gate_model(in);
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace mmfuse
