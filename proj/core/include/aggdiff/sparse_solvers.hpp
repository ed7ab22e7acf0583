#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace aggdiff {

struct SparseSolution {
  Eigen::VectorXd c;
  /// Sorted ascending, zero-based.
  std::vector<int> support;
  std::string solver;
  int iterations = 0;
  double residual_error = 0.0;
  /// Support after each iteration.
  std::vector<std::vector<int>> trace;

  nlohmann::json to_json() const;
};

/// Minimum-norm least squares via SVD, dropping singular values below
/// rel_tol * sigma_max. An all-zero matrix gives the zero vector.
Eigen::VectorXd pinv_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                           double rel_tol = 1e-12);

/// Columns of A indexed by `cols`.
Eigen::MatrixXd columns(const Eigen::MatrixXd& A, const std::vector<int>& cols);

/// Least squares restricted to the columns in `support`, zero elsewhere.
Eigen::VectorXd restricted_ls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                              const std::vector<int>& support, double rel_tol = 1e-12);

/// Indices of the K largest |v|; ties go to the smaller index. Returned sorted.
std::vector<int> top_k(const Eigen::VectorXd& v, int K);

struct GreedyOptions {
  int max_iter = 50;
  double rel_tol = 1e-12;
};

SparseSolution partinv(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int K,
                       const GreedyOptions& opt = {});

SparseSolution subspace_pursuit(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int K,
                                const GreedyOptions& opt = {});

/// Sequentially thresholded least squares.
SparseSolution stls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double threshold,
                    const GreedyOptions& opt = {});

/// Plain pseudoinverse least squares over all columns.
SparseSolution least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                             double rel_tol = 1e-12);

/// c^T A c - 2 <c, b>.
double residual_error(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c);

/// Max normalised column correlation over i != j; zero columns are skipped
/// and counted in *zero_columns when given.
double coherence(const Eigen::MatrixXd& A, int* zero_columns = nullptr);

}  // namespace aggdiff
