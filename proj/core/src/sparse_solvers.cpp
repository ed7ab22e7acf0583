#include "aggdiff/sparse_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aggdiff/errors.hpp"

namespace aggdiff {
namespace {

std::vector<int> nonzero_support(const Eigen::VectorXd& c) {
  std::vector<int> s;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (c(i) != 0.0) s.push_back(static_cast<int>(i));
  }
  return s;
}

void check_system(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  if (A.rows() != b.size()) throw InvalidParameter("A and b have different row counts");
  if (A.cols() < 1) throw InvalidParameter("A has no columns");
}

}  // namespace

nlohmann::json SparseSolution::to_json() const {
  return {{"solver", solver},
          {"coefficients", std::vector<double>(c.data(), c.data() + c.size())},
          {"support", support},
          {"iterations", iterations},
          {"residual_error", residual_error},
          {"trace", trace}};
}

Eigen::VectorXd pinv_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double rel_tol) {
  if (A.cols() < 1) throw InvalidParameter("pinv_solve needs at least one column");
  if (A.rows() != b.size()) throw InvalidParameter("A and b have different row counts");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(A.cols());
  if (s.size() == 0 || s(0) == 0.0) return x;
  const double cut = rel_tol * s(0);
  const Eigen::VectorXd utb = svd.matrixU().transpose() * b;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) <= cut) break;
    x += svd.matrixV().col(k) * (utb(k) / s(k));
  }
  return x;
}

Eigen::MatrixXd columns(const Eigen::MatrixXd& A, const std::vector<int>& cols) {
  Eigen::MatrixXd out(A.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = A.col(cols[k]);
  return out;
}

Eigen::VectorXd restricted_ls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                              const std::vector<int>& support, double rel_tol) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(A.cols());
  if (support.empty()) return c;
  const Eigen::VectorXd cs = pinv_solve(columns(A, support), b, rel_tol);
  for (std::size_t k = 0; k < support.size(); ++k) c(support[k]) = cs(static_cast<Eigen::Index>(k));
  return c;
}

std::vector<int> top_k(const Eigen::VectorXd& v, int K) {
  std::vector<int> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return std::abs(v(a)) > std::abs(v(b)); });
  idx.resize(static_cast<std::size_t>(std::min<Eigen::Index>(K, v.size())));
  std::sort(idx.begin(), idx.end());
  return idx;
}

SparseSolution partinv(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int K,
                       const GreedyOptions& opt) {
  check_system(A, b);
  const auto n = static_cast<int>(A.cols());
  if (K < 1 || K > n) throw InvalidParameter("sparsity bound K must lie in [1, n]");

  SparseSolution sol;
  sol.solver = "partinv";
  Eigen::VectorXd ct = A.transpose() * b;
  std::vector<int> I = top_k(ct, K);
  std::vector<int> accepted = I;
  double last_norm = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= opt.max_iter; ++k) {
    sol.iterations = k;
    const Eigen::MatrixXd AI = columns(A, I);
    const Eigen::VectorXd cI = pinv_solve(AI, b, opt.rel_tol);
    const Eigen::VectorXd r = b - AI * cI;
    const double rn = r.norm();
    if (rn > last_norm) break;  // keep the previous support
    last_norm = rn;
    accepted = I;
    sol.trace.push_back(I);

    ct = A.transpose() * r;
    for (std::size_t q = 0; q < I.size(); ++q) ct(I[q]) = cI(static_cast<Eigen::Index>(q));
    std::vector<int> next = top_k(ct, K);
    if (next == I) break;
    I = std::move(next);
  }
  sol.support = accepted;
  sol.c = restricted_ls(A, b, accepted, opt.rel_tol);
  sol.residual_error = residual_error(A, b, sol.c);
  return sol;
}

SparseSolution subspace_pursuit(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int K,
                                const GreedyOptions& opt) {
  check_system(A, b);
  const auto n = static_cast<int>(A.cols());
  if (K < 1 || K > n) throw InvalidParameter("sparsity bound K must lie in [1, n]");

  SparseSolution sol;
  sol.solver = "subspace-pursuit";
  std::vector<int> T = top_k(A.transpose() * b, K);
  Eigen::VectorXd c = restricted_ls(A, b, T, opt.rel_tol);
  Eigen::VectorXd r = b - A * c;
  sol.trace.push_back(T);
  for (int k = 1; k <= opt.max_iter; ++k) {
    sol.iterations = k;
    std::vector<int> merged = T;
    for (int i : top_k(A.transpose() * r, K)) merged.push_back(i);
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    const Eigen::VectorXd cm = restricted_ls(A, b, merged, opt.rel_tol);
    std::vector<int> Tn = top_k(cm, K);
    const Eigen::VectorXd cn = restricted_ls(A, b, Tn, opt.rel_tol);
    const Eigen::VectorXd rn = b - A * cn;
    if (rn.norm() >= r.norm()) break;
    T = std::move(Tn);
    c = cn;
    r = rn;
    sol.trace.push_back(T);
  }
  sol.support = T;
  sol.c = c;
  sol.residual_error = residual_error(A, b, c);
  return sol;
}

SparseSolution stls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double threshold,
                    const GreedyOptions& opt) {
  check_system(A, b);
  if (threshold < 0.0) throw InvalidParameter("threshold must be non-negative");
  SparseSolution sol;
  sol.solver = "stls";
  std::vector<int> S(static_cast<std::size_t>(A.cols()));
  std::iota(S.begin(), S.end(), 0);
  Eigen::VectorXd c = restricted_ls(A, b, S, opt.rel_tol);
  for (int k = 1; k <= opt.max_iter; ++k) {
    sol.iterations = k;
    std::vector<int> keep;
    for (int i : S) {
      if (std::abs(c(i)) >= threshold) keep.push_back(i);
    }
    sol.trace.push_back(keep);
    if (keep == S) break;
    S = std::move(keep);
    c = restricted_ls(A, b, S, opt.rel_tol);
  }
  sol.support = S;
  sol.c = c;
  sol.residual_error = residual_error(A, b, c);
  return sol;
}

SparseSolution least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double rel_tol) {
  check_system(A, b);
  SparseSolution sol;
  sol.solver = "least-squares";
  sol.c = pinv_solve(A, b, rel_tol);
  sol.support = nonzero_support(sol.c);
  sol.iterations = 1;
  sol.residual_error = residual_error(A, b, sol.c);
  return sol;
}

double residual_error(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
  if (A.rows() != A.cols() || A.cols() != c.size() || b.size() != c.size()) {
    throw InvalidParameter("residual_error needs square A and matching vectors");
  }
  return c.dot(A * c) - 2.0 * c.dot(b);
}

double coherence(const Eigen::MatrixXd& A, int* zero_columns) {
  std::vector<Eigen::Index> live;
  int zeros = 0;
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    if (A.col(j).norm() > 0.0) {
      live.push_back(j);
    } else {
      ++zeros;
    }
  }
  if (zero_columns) *zero_columns = zeros;
  double mu = 0.0;
  for (std::size_t a = 0; a < live.size(); ++a) {
    for (std::size_t c = a + 1; c < live.size(); ++c) {
      const auto u = A.col(live[a]);
      const auto v = A.col(live[c]);
      // sqrt(fl(d*d)) == |d|, so a duplicated column gives exactly 1.
      mu = std::max(mu, std::abs(u.dot(v)) / std::sqrt(u.dot(u) * v.dot(v)));
    }
  }
  return std::min(mu, 1.0);
}

}  // namespace aggdiff
