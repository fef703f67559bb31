#include "mmfuse/cross_modal_map.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "mmfuse/error.hpp"
#include "mmfuse/text_io.hpp"

namespace mmfuse {

MappingModel fit_ridge(const Matrix& ling, const Matrix& visual,
                       double lambda) {
  if (ling.rows() != visual.rows()) {
    throw Error("fit_ridge: " + std::to_string(ling.rows()) +
                " linguistic rows vs " + std::to_string(visual.rows()) +
                " visual rows");
  }
  if (ling.rows() < 1 || ling.cols() < 1 || visual.cols() < 1) {
    throw Error("fit_ridge: empty training matrices");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error("fit_ridge: lambda must be a finite nonnegative number");
  }

  Matrix gram = ling.transpose() * ling;
  gram.diagonal().array() += lambda;
  Eigen::LLT<Matrix> llt(gram);
  // A numerically rank-deficient Gram matrix can still factor with tiny
  // pivots, so the reciprocal condition number is checked as well.
  const double rcond_floor =
      static_cast<double>(gram.rows()) * std::numeric_limits<double>::epsilon();
  if (llt.info() != Eigen::Success || llt.rcond() < rcond_floor) {
    throw Error(
        "fit_ridge: normal equations are singular at lambda = " +
        format_exact(lambda) + "; use lambda > 0");
  }
  MappingModel model;
  model.coefficients = llt.solve(ling.transpose() * visual);
  model.lambda = lambda;
  if (!model.coefficients.allFinite()) {
    throw Error("fit_ridge: non-finite coefficients");
  }
  return model;
}

Matrix predict_visual(const Matrix& ling, const MappingModel& model) {
  if (ling.cols() != model.source_dim()) {
    throw Error("predict_visual: input has " + std::to_string(ling.cols()) +
                " columns, mapping expects " +
                std::to_string(model.source_dim()));
  }
  return ling * model.coefficients;
}

EmbeddingTable predict_visual(const EmbeddingTable& ling,
                              const MappingModel& model) {
  return EmbeddingTable(ling.words(), predict_visual(ling.vectors(), model));
}

std::vector<int> fold_assignment(Eigen::Index rows, int folds,
                                 std::uint64_t seed) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(rows));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<int> fold(static_cast<std::size_t>(rows));
  // First (rows % folds) folds get one extra row.
  const Eigen::Index base = rows / folds;
  const Eigen::Index extra = rows % folds;
  Eigen::Index pos = 0;
  for (int f = 0; f < folds; ++f) {
    Eigen::Index len = base + (f < extra ? 1 : 0);
    for (Eigen::Index k = 0; k < len; ++k) {
      fold[static_cast<std::size_t>(order[static_cast<std::size_t>(pos++)])] =
          f;
    }
  }
  return fold;
}

namespace {

Matrix take_rows(const Matrix& m, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  }
  return out;
}

}  // namespace

LambdaSelection select_lambda(const Matrix& ling, const Matrix& visual,
                              const std::vector<double>& candidates,
                              int folds, std::uint64_t seed) {
  if (candidates.empty()) throw Error("select_lambda: no candidates");
  if (ling.rows() != visual.rows()) {
    throw Error("select_lambda: row-count mismatch");
  }
  if (folds < 2) throw Error("select_lambda: need at least 2 folds");
  if (folds > ling.rows()) {
    throw Error("select_lambda: " + std::to_string(folds) + " folds but only " +
                std::to_string(ling.rows()) + " rows");
  }

  const auto fold = fold_assignment(ling.rows(), folds, seed);
  std::vector<Matrix> train_l, train_v, test_l, test_v;
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> tr, te;
    for (Eigen::Index i = 0; i < ling.rows(); ++i) {
      (fold[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
    }
    train_l.push_back(take_rows(ling, tr));
    train_v.push_back(take_rows(visual, tr));
    test_l.push_back(take_rows(ling, te));
    test_v.push_back(take_rows(visual, te));
  }

  LambdaSelection out;
  double best = std::numeric_limits<double>::infinity();
  for (double lambda : candidates) {
    double total = 0.0;
    for (int f = 0; f < folds; ++f) {
      auto model = fit_ridge(train_l[static_cast<std::size_t>(f)],
                             train_v[static_cast<std::size_t>(f)], lambda);
      Matrix resid =
          predict_visual(test_l[static_cast<std::size_t>(f)], model) -
          test_v[static_cast<std::size_t>(f)];
      total += resid.squaredNorm() / static_cast<double>(resid.size());
    }
    double mse = total / folds;
    out.mse.emplace_back(lambda, mse);
    if (mse < best || (mse == best && lambda > out.best_lambda)) {
      best = mse;
      out.best_lambda = lambda;
    }
  }
  return out;
}

AlignedRows align_for_mapping(const EmbeddingTable& ling,
                              const EmbeddingTable& visual) {
  AlignedRows out;
  std::vector<Eigen::Index> li, vi;
  for (std::size_t i = 0; i < visual.size(); ++i) {
    if (auto j = ling.index_of(visual.words()[i])) {
      out.words.push_back(visual.words()[i]);
      vi.push_back(static_cast<Eigen::Index>(i));
      li.push_back(*j);
    }
  }
  if (out.words.empty()) {
    throw Error("no word has both a linguistic and a visual vector");
  }
  out.ling = take_rows(ling.vectors(), li);
  out.visual = take_rows(visual.vectors(), vi);
  return out;
}

void write_mapping(std::ostream& out, const MappingModel& model) {
  std::ostringstream os;
  os << "ridge " << model.source_dim() << ' ' << model.target_dim() << ' '
     << format_exact(model.lambda) << '\n';
  for (Eigen::Index i = 0; i < model.coefficients.rows(); ++i) {
    for (Eigen::Index j = 0; j < model.coefficients.cols(); ++j) {
      if (j) os << ' ';
      os << format_exact(model.coefficients(i, j));
    }
    os << '\n';
  }
  out << os.str();
}

MappingModel read_mapping(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!trim(line).empty()) return true;
    }
    return false;
  };
  if (!next_line()) throw Error("mapping: empty file");
  auto header = split_whitespace(line);
  if (header.size() != 4 || header[0] != "ridge") {
    throw Error("mapping: line 1: expected 'ridge n_l n_v lambda'");
  }
  auto rows = static_cast<Eigen::Index>(parse_double(header[1], 1, "mapping"));
  auto cols = static_cast<Eigen::Index>(parse_double(header[2], 1, "mapping"));
  if (rows < 1 || cols < 1) throw Error("mapping: dimensions must be positive");
  MappingModel model;
  model.lambda = parse_double(header[3], 1, "mapping");
  model.coefficients.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!next_line()) {
      throw Error("mapping: expected " + std::to_string(rows) +
                  " coefficient rows, found " + std::to_string(i));
    }
    auto fields = split_whitespace(line);
    if (static_cast<Eigen::Index>(fields.size()) != cols) {
      throw Error("mapping: line " + std::to_string(line_no) + ": expected " +
                  std::to_string(cols) + " values");
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      model.coefficients(i, j) =
          parse_double(fields[static_cast<std::size_t>(j)], line_no, "mapping");
    }
  }
  return model;
}

void save_mapping(const std::filesystem::path& path,
                  const MappingModel& model) {
  auto out = open_output(path);
  write_mapping(out, model);
  if (!out) throw IoError("write failed: " + path.string());
}

MappingModel load_mapping(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_mapping(in);
}

}  // namespace mmfuse
