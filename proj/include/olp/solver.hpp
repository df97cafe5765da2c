#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "olp/bounds.hpp"

namespace olp {

// Two-player instance seen from the lower-capability (row) player: u1 is
// their perceived own payoff, v1 their perceived opponent payoff (-u1 when
// zero-sum). Normalization keeps c1 <= c2, swapping players if needed.
struct GameInstance {
  PerceptionFamily family;
  MatrixXd u1;
  MatrixXd v1;
  Capability c1 = Capability(1);
  Capability c2 = Capability(1);
  bool zero_sum = false;
  bool swapped = false;
  std::optional<MatrixXd> true_row, true_col;
  std::optional<std::string> perceived_id;  // table instances: id of u1's profile

  int rows() const { return static_cast<int>(u1.rows()); }
  int cols() const { return static_cast<int>(u1.cols()); }
};

// Enforces c1 <= c2 by swapping the players (transposing payoffs) when
// necessary; records the swap.
GameInstance normalize(GameInstance game);

// f1(x) = min over pure columns of the lower payoff bound of u1 at c1; the
// subgradient comes from the lowest-index active branch (tolerance 1e-10).
std::pair<double, VectorXd> maximin_objective(const GameInstance& game, const VectorXd& x);

struct MaximinResult {
  VectorXd x_star;
  double value = 0.0;
  SubgradientReport report;
};

MaximinResult solve_maximin(const GameInstance& game, double tol, long max_iters,
                            std::uint64_t seed);

// argmin over y of the upper payoff bound of v2 at c2 given x (convex).
VectorXd best_response_upper(const GameInstance& game, const MatrixXd& v2, const Capability& c2,
                             const VectorXd& x, double tol);
// argmax over y of the lower payoff bound of v2 at c2 given x (concave).
VectorXd best_response_lower(const GameInstance& game, const MatrixXd& v2, const Capability& c2,
                             const VectorXd& x, double tol);

struct PropertyWitness {
  std::string description;
  double gap = 0.0;
  std::uint64_t seed = 0;
};

struct PropertyReport {
  std::string property;
  std::string verdict;  // "holds", "fails", "holds-up-to-tolerance", ...
  std::vector<PropertyWitness> witnesses;
  std::map<std::string, double> stats;
};

PropertyReport check_constant_gap(const PerceptionFamily& family, const Capability& c,
                                  int n_trials, std::uint64_t seed);

PropertyReport check_narrowly_reversible(const GameInstance& game, int n_x_samples,
                                         std::uint64_t seed, double tol);

struct StackelbergProbe {
  double h1 = 0.0;
  double g_upper = 0.0;
  double g_lower_est = 0.0;
};

StackelbergProbe stackelberg_gap_probe(const GameInstance& game, const VectorXd& x, int n_samples,
                                       std::uint64_t seed, double tol);

}  // namespace olp
