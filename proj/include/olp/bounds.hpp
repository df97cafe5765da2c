#pragma once

#include <cstdint>
#include <utility>

#include "olp/perception.hpp"

namespace olp {

struct PayoffBounds {
  double lower = 0.0;
  double upper = 0.0;
};

double expected_payoff(const MatrixXd& u, const VectorXd& x, const VectorXd& y);

// Closed-interval bounds of the expected true payoff over the concretization
// set of the perceived matrix v at level c.
PayoffBounds payoff_bounds(const PerceptionFamily& family, const MatrixXd& v, const Capability& c,
                           const VectorXd& x, const VectorXd& y);

// sigma_c(A) * ||left_null(A)^T x|| * ||null(A)^T y||.
double uncertainty_limited_rank(const MatrixXd& A, const Capability& c, const VectorXd& x,
                                const VectorXd& y, double rank_tol = 1e-9);

// Rank-(r+1) perturbation A + q * xhat yhat^T along the null directions
// aligned with x and y; truncates back to A and shifts the payoff by
// q * ||left_null(A)^T x|| * ||null(A)^T y||.
MatrixXd extremal_concretization_limited_rank(const MatrixXd& A, int r, const VectorXd& x,
                                              const VectorXd& y, double q,
                                              double rank_tol = 1e-9);

PayoffBounds bounds_sampling_oracle(const PerceptionFamily& family, const MatrixXd& v,
                                    const Capability& c, const VectorXd& x, const VectorXd& y,
                                    int n, std::uint64_t seed);

// Value-and-subgradient views used by the solvers. The table variants pick the
// active extreme element of lowest universe index within tolerance 1e-10.
std::pair<double, VectorXd> lower_bound_with_grad_x(const PerceptionFamily& family,
                                                    const MatrixXd& v, const Capability& c,
                                                    const VectorXd& x, const VectorXd& y);
std::pair<double, VectorXd> lower_bound_with_grad_y(const PerceptionFamily& family,
                                                    const MatrixXd& v, const Capability& c,
                                                    const VectorXd& x, const VectorXd& y);
std::pair<double, VectorXd> upper_bound_with_grad_y(const PerceptionFamily& family,
                                                    const MatrixXd& v, const Capability& c,
                                                    const VectorXd& x, const VectorXd& y);

}  // namespace olp
