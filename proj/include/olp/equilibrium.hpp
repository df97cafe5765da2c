#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "olp/solver.hpp"

namespace olp {

// One perception the higher-capability player might hold of their own payoff.
// Table families carry the universe id; the matrix is the payoff as that
// player perceives it (the B side of a general-sum table entry).
struct NarrowElem {
  std::optional<std::string> id;
  MatrixXd perception;
};

// Narrow set of the instance from the lower-capability player's viewpoint.
// Throws TooLarge when the family cannot be enumerated within cap.
std::vector<NarrowElem> narrow_elements(const GameInstance& game, std::size_t cap = 100000);

struct EnumeratedResponse {
  std::vector<NarrowElem> elements;
  std::vector<VectorXd> responses;

  // index of the entry matching e (by id for tables, else by matrix), or -1
  int find(const NarrowElem& e, double tol = 1e-9) const;
};

struct CompactResponseRepr {
  VectorXd x_star;
  std::vector<std::pair<NarrowElem, VectorXd>> anchors;  // at most |S1| + 1
  double f_star = 0.0;
  double eps = 0.0;
  double eps_prime = 0.0;
};

struct ResponseFunction {
  std::optional<EnumeratedResponse> enumerated;
  std::optional<CompactResponseRepr> compact;

  static ResponseFunction from(EnumeratedResponse r) {
    ResponseFunction f;
    f.enumerated = std::move(r);
    return f;
  }
  static ResponseFunction from(CompactResponseRepr r) {
    ResponseFunction f;
    f.compact = std::move(r);
    return f;
  }
};

struct EquilibriumReport {
  double max_deviation_p1 = 0.0;  // shortfall of x_star against the best deviation
  double max_deviation_p2 = 0.0;  // worst shortfall of any response against its best reply
  double eps = 0.0;
  bool holds = false;
  std::string witness;
};

EquilibriumReport verify_nash(const GameInstance& game, const VectorXd& x_star,
                              const ResponseFunction& Ry, double eps, int check_budget,
                              std::uint64_t seed);

struct SearchResult {
  VectorXd x_star;
  EnumeratedResponse Ry;
  double value = 0.0;  // f(x_star) with the returned responses
};

// Fixed-point grid search over the row simplex for enumerable narrow sets.
// Returns the first acceptable candidate, or nullopt when no grid point
// passes at eps.
std::optional<SearchResult> search_nash_table(const GameInstance& game, int x_grid_resolution,
                                              double eps);

CompactResponseRepr build_compact_repr(const GameInstance& game, const VectorXd& x_star,
                                       const EnumeratedResponse& Ry, double eps,
                                       double eps_prime);

VectorXd eval_compact_repr(const GameInstance& game, const CompactResponseRepr& repr,
                           const NarrowElem& u);

struct ReductionMapping {
  double k_p = 1.0, b_p = 0.0;  // row-payoff range -> (0,1)
  double k_n = -1.0, b_n = 0.0;  // column-payoff range -> (1,2)
  int m = 0;                     // original row count
  // original narrow-set id -> reduced capability-2 perception id
  std::vector<std::pair<std::string, std::string>> element_map;
};

struct ReducedGame {
  GameInstance game;
  ReductionMapping mapping;
};

ReducedGame reduce_general_to_zero_sum(const GameInstance& table_game);

std::pair<VectorXd, EnumeratedResponse> map_back_equilibrium(const GameInstance& original,
                                                             const ReducedGame& reduced,
                                                             const VectorXd& x_bar_star,
                                                             const EnumeratedResponse& Ry_bar);

// f(x_star): the first player's guaranteed value under the response function.
double nash_value_p1(const GameInstance& game, const VectorXd& x_star, const ResponseFunction& Ry);

// Commitment value over a grid of leader strategies; follower best responses
// break payoff-bound ties in the leader's favor.
double stackelberg_value_zero_sum(const GameInstance& game, int x_grid_resolution,
                                  const std::vector<VectorXd>& extra_candidates = {});

}  // namespace olp
