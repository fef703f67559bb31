#include "mmfuse/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "mmfuse/error.hpp"
#include "mmfuse/text_io.hpp"

namespace mmfuse {

std::vector<AssociationPair> parse_pairs(std::istream& in) {
  std::vector<AssociationPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cols = split_on(line, '\t');
    if (cols.size() != 3 || trim(cols[0]).empty() || trim(cols[1]).empty()) {
      throw Error("pairs: line " + std::to_string(line_no) +
                  ": expected 'cue TAB target TAB score'");
    }
    AssociationPair p{std::string(trim(cols[0])), std::string(trim(cols[1])),
                      parse_double(trim(cols[2]), line_no, "pairs")};
    if (!(p.score > 0.0 && p.score <= 1.0)) {
      throw Error("pairs: line " + std::to_string(line_no) +
                  ": score must lie in (0, 1]");
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

PairSplit split_pairs(std::vector<AssociationPair> pairs,
                      const PairFilter& filter) {
  PairSplit split;
  for (auto& p : pairs) {
    if (filter.ling_vocab && (!filter.ling_vocab->contains(p.cue) ||
                              !filter.ling_vocab->contains(p.target))) {
      ++split.out_of_vocabulary;
      continue;
    }
    const bool leaks = filter.benchmark_vocab &&
                       (filter.benchmark_vocab->contains(p.cue) ||
                        filter.benchmark_vocab->contains(p.target));
    if (leaks) {
      ++split.leaked;
      split.dev.pairs.push_back(std::move(p));
    } else if (p.score < filter.score_threshold) {
      ++split.below_threshold;
      split.dev.pairs.push_back(std::move(p));
    } else {
      split.train.pairs.push_back(std::move(p));
    }
  }
  if (split.train.empty()) throw Error("pairs: training split is empty");
  return split;
}

PairSplit read_pairs(std::istream& in, const PairFilter& filter) {
  return split_pairs(parse_pairs(in), filter);
}

PairSplit load_pairs(const std::filesystem::path& path,
                     const PairFilter& filter) {
  auto in = open_input(path);
  try {
    return read_pairs(in, filter);
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_pairs(std::ostream& out, const std::vector<AssociationPair>& pairs) {
  std::ostringstream os;
  for (const auto& p : pairs) {
    os << p.cue << '\t' << p.target << '\t' << format_exact(p.score) << '\n';
  }
  out << os.str();
}

namespace {

// max(0, x) that lets NaN through, so overflow shows up in the loss.
double hinge(double x) { return std::isnan(x) ? x : std::max(0.0, x); }

}  // namespace

double pair_loss(const Vector& w1, const Vector& w2, const Vector& n1,
                 const Vector& n2, double margin) {
  const double pos = w1.dot(w2);
  return hinge(margin - pos + w1.dot(n1)) + hinge(margin - pos + w2.dot(n2));
}

namespace {

struct WordState {
  Vector ling;
  Vector visual;
  GatePair gates;
  Vector fused;
};

WordState forward(const GateModel& model, const GateInputs& inputs,
                  Eigen::Index row) {
  WordState s;
  s.ling = inputs.ling(row);
  s.visual = inputs.visual(row);
  s.gates = compute_gates(model, s.ling, s.visual, inputs.sense_or_none(row));
  s.fused = fuse(s.ling, s.visual, s.gates.linguistic, s.gates.visual);
  return s;
}

// d(loss)/d(gate) for one modality half, given d(loss)/d(fused half).
Vector gate_grad(const Vector& upstream, const Vector& x, Eigen::Index size) {
  Vector dg = upstream.cwiseProduct(x);
  if (size == 1) return Vector::Constant(1, dg.sum());
  return dg;
}

void backprop_word(GateModel& grad, const GateModel& model,
                   const GateInputs& inputs, Eigen::Index row,
                   const WordState& s, const Vector& d_fused) {
  const Eigen::Index dl = model.ling_dim();
  Vector dg_l = gate_grad(d_fused.head(dl), s.ling, model.ling_gate_size());
  Vector dg_v =
      gate_grad(d_fused.tail(model.visual_dim()), s.visual,
                model.visual_gate_size());
  auto& params = grad.params();
  if (auto* m = std::get_if<ModalityGates>(&params)) {
    m->gates.linguistic += dg_l;
    m->gates.visual += dg_v;
  } else if (auto* c = std::get_if<CategoryGates>(&params)) {
    auto& pair =
        c->senses.find(model.resolve_sense(inputs.sense_or_none(row)))->second;
    pair.linguistic += dg_l;
    pair.visual += dg_v;
  } else {
    auto& g = std::get<SampleGates>(params);
    // g = tanh(z)  =>  dz = dg * (1 - g^2)
    Vector dz_l = dg_l.cwiseProduct(
        (1.0 - s.gates.linguistic.array().square()).matrix());
    Vector dz_v =
        dg_v.cwiseProduct((1.0 - s.gates.visual.array().square()).matrix());
    g.w_ling.noalias() += dz_l * s.ling.transpose();
    g.b_ling += dz_l;
    g.w_visual.noalias() += dz_v * s.visual.transpose();
    g.b_visual += dz_v;
  }
}

}  // namespace

GradientResult gradients(const GateModel& model, const GateInputs& inputs,
                         std::span<const TrainingExample> batch,
                         double margin) {
  GradientResult out{model.zeros_like(), 0.0};
  for (const auto& ex : batch) {
    const WordState a = forward(model, inputs, ex.w1);
    const WordState b = forward(model, inputs, ex.w2);
    const WordState n1 = forward(model, inputs, ex.n1);
    const WordState n2 = forward(model, inputs, ex.n2);
    const double pos = a.fused.dot(b.fused);
    const double h1 = margin - pos + a.fused.dot(n1.fused);
    const double h2 = margin - pos + b.fused.dot(n2.fused);
    const bool on1 = h1 > 0.0;
    const bool on2 = h2 > 0.0;
    out.loss += hinge(h1) + hinge(h2);
    if (!on1 && !on2) continue;

    const Eigen::Index n = a.fused.size();
    Vector da = Vector::Zero(n), db = Vector::Zero(n);
    Vector dn1 = Vector::Zero(n), dn2 = Vector::Zero(n);
    if (on1) {
      da += n1.fused - b.fused;
      db -= a.fused;
      dn1 += a.fused;
    }
    if (on2) {
      da -= b.fused;
      db += n2.fused - a.fused;
      dn2 += b.fused;
    }
    backprop_word(out.gradient, model, inputs, ex.w1, a, da);
    backprop_word(out.gradient, model, inputs, ex.w2, b, db);
    if (on1) backprop_word(out.gradient, model, inputs, ex.n1, n1, dn1);
    if (on2) backprop_word(out.gradient, model, inputs, ex.n2, n2, dn2);
  }
  return out;
}

std::pair<Eigen::Index, Eigen::Index> sample_negatives(
    Eigen::Index w1, Eigen::Index w2, std::span<const Eigen::Index> pool,
    std::mt19937_64& rng) {
  if (pool.size() < 3) {
    throw Error("negative sampling: pool has " + std::to_string(pool.size()) +
                " words, need at least 3");
  }
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  auto draw = [&]() {
    // At most two pool entries are excluded, so this terminates quickly.
    while (true) {
      Eigen::Index c = pool[pick(rng)];
      if (c != w1 && c != w2) return c;
    }
  };
  Eigen::Index n1 = draw();
  Eigen::Index n2 = draw();
  return {n1, n2};
}

Adagrad::Adagrad(const GateModel& shape, double learning_rate, double epsilon)
    : accum_(shape.zeros_like()), lr_(learning_rate), eps_(epsilon) {
  if (!(learning_rate > 0.0) || !(epsilon > 0.0)) {
    throw Error("adagrad: learning rate and epsilon must be positive");
  }
}

void Adagrad::step(GateModel& model, const GateModel& gradient) {
  auto params = model.parameter_blocks();
  auto grads = gradient.parameter_blocks();
  auto accs = accum_.parameter_blocks();
  if (params.size() != grads.size() || params.size() != accs.size()) {
    throw Error("adagrad: gradient does not match the model");
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    for (std::size_t k = 0; k < params[b].size(); ++k) {
      const double g = grads[b][k];
      accs[b][k] += g * g;
      params[b][k] -= lr_ * g / std::sqrt(accs[b][k] + eps_);
    }
  }
}

Correlation dev_score(const GateModel& model, const AssociationPairSet& dev,
                      const GateInputs& inputs) {
  std::vector<double> sims, scores;
  std::unordered_map<Eigen::Index, Vector> cache;
  auto fused = [&](Eigen::Index row) -> const Vector& {
    auto it = cache.find(row);
    if (it == cache.end()) {
      it = cache.emplace(row, fused_row(model, inputs, row)).first;
    }
    return it->second;
  };
  for (const auto& p : dev.pairs) {
    auto i = inputs.index_of(p.cue);
    auto j = inputs.index_of(p.target);
    if (!i || !j) continue;
    sims.push_back(cosine_similarity(fused(*i), fused(*j)));
    scores.push_back(p.score);
  }
  return spearman(sims, scores);
}

namespace {

std::string parameter_norms(const GateModel& model) {
  std::ostringstream os;
  auto names = model.parameter_names();
  auto blocks = model.parameter_blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    double sq = 0.0;
    for (double v : blocks[b]) sq += v * v;
    os << (b ? ", " : "") << names[b] << "=" << std::sqrt(sq);
  }
  return os.str();
}

}  // namespace

TrainResult train(const GateModel& initial, const AssociationPairSet& train,
                  const AssociationPairSet& dev, const GateInputs& inputs,
                  const TrainConfig& config) {
  if (config.batch_size == 0) throw Error("train: batch size must be positive");
  if (config.epochs < 0) throw Error("train: epochs must be nonnegative");
  if (config.learning_rates.empty()) {
    throw Error("train: no learning rate candidates");
  }
  TrainResult result{initial, {}};
  if (config.epochs == 0) return result;
  if (train.empty()) throw Error("train: no training pairs");
  if (dev.empty()) throw Error("train: development set is empty");

  std::vector<std::pair<Eigen::Index, Eigen::Index>> rows;
  std::set<Eigen::Index> pool_set;
  for (const auto& p : train.pairs) {
    auto i = inputs.index_of(p.cue);
    auto j = inputs.index_of(p.target);
    if (!i || !j) {
      throw Error("train: pair (" + p.cue + ", " + p.target +
                  ") has a word without vectors");
    }
    rows.emplace_back(*i, *j);
    pool_set.insert(*i);
    pool_set.insert(*j);
  }
  const std::vector<Eigen::Index> pool(pool_set.begin(), pool_set.end());

  double best = -std::numeric_limits<double>::infinity();
  for (double lr : config.learning_rates) {
    GateModel model = initial;
    Adagrad opt(model, lr, config.adagrad_epsilon);
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(rows.size());
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<TrainingExample> examples;
      examples.reserve(order.size());
      for (std::size_t k : order) {
        auto [w1, w2] = rows[k];
        auto [n1, n2] = sample_negatives(w1, w2, pool, rng);
        examples.push_back({w1, w2, n1, n2});
      }

      double epoch_loss = 0.0;
      std::span<const TrainingExample> all(examples);
      for (std::size_t start = 0; start < all.size();
           start += config.batch_size) {
        auto batch = all.subspan(
            start, std::min(config.batch_size, all.size() - start));
        auto g = gradients(model, inputs, batch, config.margin);
        if (!std::isfinite(g.loss)) {
          std::ostringstream msg;
          msg << "train: non-finite loss at lr " << lr << ", epoch " << epoch
              << ", batch starting at example " << start
              << "; parameter norms: " << parameter_norms(model);
          throw Error(msg.str());
        }
        epoch_loss += g.loss;
        opt.step(model, g.gradient);
      }

      EpochRecord rec;
      rec.epoch = epoch;
      rec.learning_rate = lr;
      rec.mean_loss = epoch_loss / static_cast<double>(examples.size());
      rec.dev = dev_score(model, dev, inputs);
      result.report.epochs.push_back(rec);
      if (rec.dev.rho > best) {
        best = rec.dev.rho;
        result.model = model;
        result.report.best_learning_rate = lr;
        result.report.best_epoch = epoch;
        result.report.best_dev = rec.dev;
      }
    }
  }
  return result;
}

void write_train_report(std::ostream& out, const TrainReport& report) {
  std::ostringstream os;
  os << "epoch\tlr\tmean_loss\tdev_spearman\n";
  for (const auto& e : report.epochs) {
    os << e.epoch << '\t' << format_exact(e.learning_rate) << '\t'
       << std::setprecision(10) << e.mean_loss << '\t';
    if (e.dev.defined) {
      os << std::setprecision(10) << e.dev.rho;
    } else {
      os << "NA";
    }
    os << '\n';
  }
  out << os.str();
}

}  // namespace mmfuse
