#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <utility>

#include "olp/errors.hpp"

namespace olp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Euclidean projection onto the probability simplex {x >= 0, sum x = 1}.
VectorXd project_simplex(const VectorXd& v);

bool on_simplex(const VectorXd& x, double tol = 1e-9);

struct SvdFactors {
  MatrixXd U;       // m x m orthogonal
  VectorXd sigma;   // min(m,n), non-increasing, >= 0
  MatrixXd V;       // n x n orthogonal
};

// Full SVD with a deterministic sign convention: each left singular vector is
// flipped so that its first component of magnitude > 1e-12 is negative.
SvdFactors canonical_svd(const MatrixXd& A, double tie_tol = 1e-12);

int numeric_rank(const VectorXd& sigma, double rank_tol = 1e-9);
int numeric_rank(const MatrixXd& A, double rank_tol = 1e-9);

// (right_basis n x k, left_basis m x j) spanning ker(A) and ker(A^T).
std::pair<MatrixXd, MatrixXd> null_space_bases(const MatrixXd& A, double rank_tol = 1e-9);

// Sum of the top-r singular triplets. Throws DegenerateTie when the cut falls
// inside a tied group of nonzero singular values.
MatrixXd truncated_svd(const MatrixXd& A, int r, double tie_tol = 1e-12, double rank_tol = 1e-9);

struct SubgradientReport {
  VectorXd argmax;
  double value = 0.0;
  long iterations = 0;
  double certified_gap = 0.0;  // best-value improvement seen over the last window
};

// objective(x) -> (value, supergradient) for a concave function on the simplex.
using ConcaveObjective = std::function<std::pair<double, VectorXd>(const VectorXd&)>;

// Projected subgradient ascent over the probability simplex. Diminishing steps
// with periodic restarts from the incumbent; deterministic given the seed.
SubgradientReport subgradient_maximize(const ConcaveObjective& objective, int dim, double tol,
                                       long max_iters, std::uint64_t seed,
                                       double initial_step = 1.0);

struct ZeroSumSolution {
  double value = 0.0;
  VectorXd x;
  VectorXd y;
};

// Value of the zero-sum matrix game max_x min_y x^T A y via regret-minimizing
// self-play, certified by the duality gap of the averaged strategies.
ZeroSumSolution zero_sum_value(const MatrixXd& A, double tol);

}  // namespace olp
