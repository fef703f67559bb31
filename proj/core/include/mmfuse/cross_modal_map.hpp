#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <utility>
#include <vector>

#include "mmfuse/embedding_store.hpp"

namespace mmfuse {

/// Linear map from linguistic space (source_dim columns) to visual space
/// (target_dim columns), fit by ridge regression.
struct MappingModel {
  Matrix coefficients;  // source_dim x target_dim
  double lambda = 0.0;

  Eigen::Index source_dim() const { return coefficients.rows(); }
  Eigen::Index target_dim() const { return coefficients.cols(); }
};

/// Minimizes ||ling * A - visual||^2 + lambda * ||A||^2 for every visual
/// column at once through the normal equations and a Cholesky solve.
/// lambda is applied as written, without scaling by the row count.
MappingModel fit_ridge(const Matrix& ling, const Matrix& visual,
                       double lambda);

/// P = L * A.
Matrix predict_visual(const Matrix& ling, const MappingModel& model);
EmbeddingTable predict_visual(const EmbeddingTable& ling,
                              const MappingModel& model);

struct LambdaSelection {
  double best_lambda = 0.0;
  // (candidate, mean held-out squared error), in candidate order.
  std::vector<std::pair<double, double>> mse;
};

/// K-fold cross-validated choice of lambda. Rows are shuffled once with
/// `seed` and cut into `folds` contiguous blocks. The MSE is averaged over
/// every held-out entry of a fold, then over folds. Ties go to the larger
/// lambda.
LambdaSelection select_lambda(const Matrix& ling, const Matrix& visual,
                              const std::vector<double>& candidates,
                              int folds, std::uint64_t seed = 0);

/// Deterministic fold id per row (0..folds-1) as used by select_lambda.
std::vector<int> fold_assignment(Eigen::Index rows, int folds,
                                 std::uint64_t seed);

/// Rows of the words that have both a linguistic and a visual vector,
/// ordered as in the visual table.
struct AlignedRows {
  std::vector<std::string> words;
  Matrix ling;
  Matrix visual;
};
AlignedRows align_for_mapping(const EmbeddingTable& ling,
                              const EmbeddingTable& visual);

/// Header `ridge n_l n_v lambda`, then n_l lines of n_v values.
void write_mapping(std::ostream& out, const MappingModel& model);
MappingModel read_mapping(std::istream& in);
void save_mapping(const std::filesystem::path& path,
                  const MappingModel& model);
MappingModel load_mapping(const std::filesystem::path& path);

}  // namespace mmfuse
