#include "mmfuse/weight_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "mmfuse/error.hpp"
#include "mmfuse/text_io.hpp"

namespace mmfuse {

ConcretenessTable read_concreteness(std::istream& in) {
  ConcretenessTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cols = split_on(line, '\t');
    if (cols.size() != 2 || trim(cols[0]).empty()) {
      throw Error("concreteness: line " + std::to_string(line_no) +
                  ": expected 'word TAB rating'");
    }
    table.emplace(std::string(trim(cols[0])),
                  parse_double(trim(cols[1]), line_no, "concreteness"));
  }
  return table;
}

ConcretenessTable load_concreteness(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_concreteness(in);
}

void write_concreteness(std::ostream& out, const ConcretenessTable& table) {
  std::vector<std::pair<std::string, double>> rows(table.begin(), table.end());
  std::sort(rows.begin(), rows.end());
  for (const auto& [w, r] : rows) out << w << '\t' << format_exact(r) << '\n';
}

WeightRatio weight_ratio(const GatePair& gates) {
  const double l = gates.linguistic.norm();
  const double v = gates.visual.norm();
  if (v == 0.0) return {std::numeric_limits<double>::infinity(), true};
  return {l / v, false};
}

WeightRatio weight_ratio(const GateModel& model, const Vector& ling,
                         const Vector& visual,
                         std::optional<std::string_view> sense) {
  return weight_ratio(compute_gates(model, ling, visual, sense));
}

QuartileSplit quartile_split(const ConcretenessTable& conc,
                             const WordSet& vocab, std::uint64_t seed,
                             std::optional<std::size_t> sample_size) {
  std::vector<std::pair<double, std::string>> rated;
  for (const auto& [w, r] : conc) {
    if (vocab.contains(w)) rated.emplace_back(r, w);
  }
  if (rated.size() < 4) {
    throw Error("quartile split: need at least 4 rated words, found " +
                std::to_string(rated.size()));
  }
  std::sort(rated.begin(), rated.end());
  const std::size_t q = rated.size() / 4;
  QuartileSplit out;
  for (std::size_t i = 0; i < q; ++i) {
    out.abstract.push_back(rated[i].second);
    out.concrete.push_back(rated[rated.size() - 1 - i].second);
  }
  std::sort(out.abstract.begin(), out.abstract.end());
  std::sort(out.concrete.begin(), out.concrete.end());
  if (sample_size) {
    std::mt19937_64 rng(seed);
    for (auto* side : {&out.concrete, &out.abstract}) {
      if (side->size() <= *sample_size) continue;
      std::shuffle(side->begin(), side->end(), rng);
      side->resize(*sample_size);
      std::sort(side->begin(), side->end());
    }
  }
  return out;
}

namespace {

bool ratio_greater(const WordRatio& a, const WordRatio& b) {
  if (a.ratio.value != b.ratio.value) return a.ratio.value > b.ratio.value;
  return a.word < b.word;
}

}  // namespace

RatioReport ratio_report(const GateModel& model, const GateInputs& inputs,
                         const ConcretenessTable& conc,
                         const RatioOptions& options) {
  RatioReport report;
  std::unordered_map<std::string, double> ratio_of;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(inputs.size()); ++i) {
    WordRatio row;
    row.word = inputs.words()[static_cast<std::size_t>(i)];
    row.ratio = weight_ratio(compute_gates(model, inputs, i));
    if (auto it = conc.find(row.word); it != conc.end()) {
      row.concreteness = it->second;
    }
    if (model.scope() == GateScope::category) {
      row.sense = std::string(model.resolve_sense(inputs.sense_or_none(i)));
    } else {
      row.sense = inputs.sense(i).empty() ? std::string(kDefaultSense)
                                          : inputs.sense(i);
    }
    if (row.ratio.infinite) ++report.infinite_count;
    ratio_of.emplace(row.word, row.ratio.value);
    report.rows.push_back(std::move(row));
  }
  std::sort(report.rows.begin(), report.rows.end(), ratio_greater);

  // Concrete/abstract means over the quartile split of rated words.
  WordSet vocab(inputs.words().begin(), inputs.words().end());
  std::size_t rated = 0;
  for (const auto& [w, r] : conc) rated += vocab.contains(w) ? 1 : 0;
  if (rated >= 4) {
    auto split = quartile_split(conc, vocab, options.seed,
                                options.quartile_sample);
    auto mean_of = [&](const std::vector<std::string>& words,
                       std::size_t& count) {
      double sum = 0.0;
      count = 0;
      for (const auto& w : words) {
        double r = ratio_of.at(w);
        if (!std::isfinite(r)) continue;
        sum += r;
        ++count;
      }
      return count ? sum / static_cast<double>(count) : 0.0;
    };
    report.concrete_mean = mean_of(split.concrete, report.concrete_count);
    report.abstract_mean = mean_of(split.abstract, report.abstract_count);
  }

  std::vector<double> c, r;
  std::vector<const WordRatio*> extremes_pool;
  for (const auto& row : report.rows) {
    if (row.ratio.infinite) continue;
    if (row.concreteness) {
      c.push_back(*row.concreteness);
      r.push_back(row.ratio.value);
    }
    if (rated == 0 || row.concreteness) extremes_pool.push_back(&row);
  }
  report.concreteness_correlation = spearman(c, r);

  const std::size_t k = std::min(options.k, extremes_pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    report.top.push_back(*extremes_pool[i]);
    report.bottom.push_back(*extremes_pool[extremes_pool.size() - 1 - i]);
  }

  std::map<std::string, std::pair<double, std::size_t>> by_sense;
  for (const auto& row : report.rows) {
    if (row.ratio.infinite) continue;
    auto& acc = by_sense[row.sense];
    acc.first += row.ratio.value;
    ++acc.second;
  }
  for (const auto& [sense, acc] : by_sense) {
    report.category_means.emplace_back(
        sense, acc.first / static_cast<double>(acc.second));
  }
  std::stable_sort(report.category_means.begin(), report.category_means.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  return report;
}

void write_ratio_report(std::ostream& out, const RatioReport& report) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "# concrete_mean_ratio\t" << report.concrete_mean << "\t(n="
     << report.concrete_count << ")\n";
  os << "# abstract_mean_ratio\t" << report.abstract_mean << "\t(n="
     << report.abstract_count << ")\n";
  os << "# infinite_ratios\t" << report.infinite_count << '\n';
  os << "# concreteness_spearman\t";
  if (report.concreteness_correlation.defined) {
    os << report.concreteness_correlation.rho << '\n';
  } else {
    os << "NA\n";
  }
  auto list = [&](const char* name, const std::vector<WordRatio>& rows) {
    os << "# " << name;
    for (const auto& r : rows) os << '\t' << r.word << '=' << r.ratio.value;
    os << '\n';
  };
  list("top", report.top);
  list("bottom", report.bottom);
  for (const auto& [sense, mean] : report.category_means) {
    os << "# category\t" << sense << '\t' << mean << '\n';
  }
  os << "word\tratio\tconcreteness\n";
  for (const auto& r : report.rows) {
    os << r.word << '\t';
    if (r.ratio.infinite) {
      os << "inf";
    } else {
      os << r.ratio.value;
    }
    os << '\t';
    if (r.concreteness) {
      os << *r.concreteness;
    } else {
      os << "NA";
    }
    os << '\n';
  }
  out << os.str();
}

AssociationPairSet subsample_pairs(const AssociationPairSet& pairs,
                                   double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error("ablation: fraction must lie in (0, 1]");
  }
  if (fraction == 1.0) return pairs;
  const auto keep = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(pairs.size())));
  std::vector<std::size_t> idx(pairs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  AssociationPairSet out;
  for (std::size_t i : idx) out.pairs.push_back(pairs.pairs[i]);
  return out;
}

std::vector<AblationPoint> data_size_ablation(
    const std::vector<double>& fractions, const PipelineData& data,
    const PreparedData& prepared, const GateInputs& inputs,
    const RunConfig& config, const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw Error("ablation: no seeds");
  std::vector<AblationPoint> out;
  for (double f : fractions) {
    AblationPoint point;
    point.fraction = f;
    for (auto seed : seeds) {
      auto subset = subsample_pairs(prepared.split.train, f, seed);
      if (subset.size() < config.train.batch_size) {
        std::ostringstream msg;
        msg << "ablation: fraction " << f << " keeps " << subset.size()
            << " pairs, fewer than one batch of " << config.train.batch_size;
        throw Error(msg.str());
      }
      point.train_pairs = subset.size();
      RunConfig run = config;
      run.train.seed = seed;
      auto outcome = train_and_evaluate(data, prepared, inputs, run, &subset);
      point.per_seed_rho.push_back(outcome.mean_rho);
    }
    point.mean_rho =
        std::accumulate(point.per_seed_rho.begin(), point.per_seed_rho.end(),
                        0.0) /
        static_cast<double>(point.per_seed_rho.size());
    out.push_back(std::move(point));
  }
  return out;
}

void write_ablation(std::ostream& out, const std::vector<AblationPoint>& rows) {
  std::ostringstream os;
  os << "fraction\ttrain_pairs\tmean_rho";
  if (!rows.empty()) {
    for (std::size_t s = 0; s < rows.front().per_seed_rho.size(); ++s) {
      os << "\tseed" << s;
    }
  }
  os << '\n' << std::setprecision(6);
  for (const auto& r : rows) {
    os << r.fraction << '\t' << r.train_pairs << '\t' << r.mean_rho;
    for (double v : r.per_seed_rho) os << '\t' << v;
    os << '\n';
  }
  out << os.str();
}

}  // namespace mmfuse
