#include "olp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace olp {

namespace {

VectorXd basis(int n, int k) {
  VectorXd e = VectorXd::Zero(n);
  e[k] = 1.0;
  return e;
}

MatrixXd random_matrix(int m, int n, std::mt19937_64& rng, double scale = 5.0) {
  std::uniform_real_distribution<double> unif(-scale, scale);
  MatrixXd a(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = unif(rng);
  return a;
}

VectorXd random_simplex_point(int n, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = expo(rng);
  return x / x.sum();
}

double payoff_range(const MatrixXd& u) {
  const double r = u.maxCoeff() - u.minCoeff();
  return r > 0.0 ? r : 1.0;
}

std::string cell_desc(const MatrixXd& v, const VectorXd& x, const VectorXd& y, double gap) {
  std::ostringstream os;
  os << v.rows() << "x" << v.cols() << " matrix, gap " << gap << ", x=[";
  for (int i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
  os << "], y=[";
  for (int j = 0; j < y.size(); ++j) os << (j ? "," : "") << y[j];
  os << "]";
  return os.str();
}

}  // namespace

GameInstance normalize(GameInstance game) {
  if (game.c1 <= game.c2) return game;
  GameInstance s = game;
  s.u1 = game.v1.transpose();
  s.v1 = game.u1.transpose();
  s.c1 = game.c2;
  s.c2 = game.c1;
  s.swapped = !game.swapped;
  s.true_row.reset();
  s.true_col.reset();
  if (game.true_col) s.true_row = game.true_col->transpose();
  if (game.true_row) s.true_col = game.true_row->transpose();
  s.perceived_id.reset();
  if (s.family.kind == PerceptionFamily::Kind::Table && s.family.table) {
    const int idx = s.family.table->find_by_matrix(s.u1);
    if (idx >= 0) s.perceived_id = s.family.table->universe[idx].id;
  }
  return s;
}

std::pair<double, VectorXd> maximin_objective(const GameInstance& game, const VectorXd& x) {
  if (!on_simplex(x, 1e-9)) throw InvalidInput("x must lie on the row simplex");
  const int n = game.cols();
  std::vector<double> vals(n);
  std::vector<VectorXd> grads(n);
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    auto [val, gx] = lower_bound_with_grad_x(game.family, game.u1, game.c1, x, basis(n, k));
    vals[k] = val;
    grads[k] = std::move(gx);
    best = std::min(best, val);
  }
  // subgradient from the lowest-index active branch
  for (int k = 0; k < n; ++k)
    if (vals[k] <= best + 1e-10) return {best, grads[k]};
  return {best, grads[0]};
}

MaximinResult solve_maximin(const GameInstance& game, double tol, long max_iters,
                            std::uint64_t seed) {
  const int m = game.rows();
  ConcaveObjective obj = [&game](const VectorXd& x) { return maximin_objective(game, x); };
  SubgradientReport rep =
      subgradient_maximize(obj, m, tol, max_iters, seed, payoff_range(game.u1));
  MaximinResult out;
  out.x_star = rep.argmax;
  out.value = rep.value;
  out.report = std::move(rep);
  return out;
}

namespace {

VectorXd best_response_impl(const GameInstance& game, const MatrixXd& v2, const Capability& c2,
                            const VectorXd& x, double tol, bool upper) {
  const int n = static_cast<int>(v2.cols());
  auto eval = [&](const VectorXd& y) {
    return upper ? upper_bound_with_grad_y(game.family, v2, c2, x, y)
                 : lower_bound_with_grad_y(game.family, v2, c2, x, y);
  };
  int best_k = 0;
  double best_v = upper ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    const double v = eval(basis(n, k)).first;
    if ((upper && v < best_v) || (!upper && v > best_v)) {
      best_v = v;
      best_k = k;
    }
  }
  VectorXd y = basis(n, best_k);
  const auto kind = game.family.kind;
  if (kind == PerceptionFamily::Kind::LimitedRank || kind == PerceptionFamily::Kind::Table) {
    // curved objective: refine over the full simplex
    ConcaveObjective obj = [&](const VectorXd& yy) {
      auto [v, g] = eval(yy);
      if (upper) return std::make_pair(-v, VectorXd(-g));
      return std::make_pair(v, g);
    };
    SubgradientReport rep = subgradient_maximize(obj, n, tol, 200000, 17, payoff_range(v2));
    const double ref = upper ? -rep.value : rep.value;
    if ((upper && ref < best_v) || (!upper && ref > best_v)) y = rep.argmax;
  }
  return y;
}

}  // namespace

VectorXd best_response_upper(const GameInstance& game, const MatrixXd& v2, const Capability& c2,
                             const VectorXd& x, double tol) {
  return best_response_impl(game, v2, c2, x, tol, true);
}

VectorXd best_response_lower(const GameInstance& game, const MatrixXd& v2, const Capability& c2,
                             const VectorXd& x, double tol) {
  return best_response_impl(game, v2, c2, x, tol, false);
}

PropertyReport check_constant_gap(const PerceptionFamily& family, const Capability& c,
                                  int n_trials, std::uint64_t seed) {
  PropertyReport rep;
  rep.property = "constant-gap";
  std::mt19937_64 rng(seed);
  const bool quantized = family.kind == PerceptionFamily::Kind::Quantized;
  const double delta = (quantized && !c.is_inf()) ? std::pow(10.0, -c.value()) : 0.0;

  double gmin = std::numeric_limits<double>::infinity();
  double gmax = -std::numeric_limits<double>::infinity();
  PropertyWitness wmin, wmax;
  int done = 0, attempts = 0;
  int zero_trials = 0;
  double zero_gap_max = 0.0;
  double nz_dev_max = 0.0;
  bool quant_fail = false;

  while (done < n_trials && attempts < 50 * std::max(1, n_trials)) {
    ++attempts;
    const std::uint64_t trial_seed = seed + static_cast<std::uint64_t>(attempts);
    const int m = 2 + static_cast<int>(rng() % 3);
    const int n = 2 + static_cast<int>(rng() % 3);
    MatrixXd v;
    try {
      v = perceive(family, random_matrix(m, n, rng), c);
    } catch (const DegenerateTie&) {
      continue;
    }
    std::vector<std::pair<VectorXd, VectorXd>> probes;
    probes.emplace_back(random_simplex_point(m, rng), random_simplex_point(n, rng));
    if (!quantized) {
      // pure cells expose gap variation for mask- and rank-limited families
      probes.emplace_back(basis(m, static_cast<int>(rng() % m)),
                          basis(n, static_cast<int>(rng() % n)));
      probes.emplace_back(basis(m, static_cast<int>(rng() % m)),
                          basis(n, static_cast<int>(rng() % n)));
    }
    bool used = false;
    for (const auto& [x, y] : probes) {
      PayoffBounds b;
      try {
        b = payoff_bounds(family, v, c, x, y);
      } catch (const InvalidPerceived&) {
        continue;
      }
      used = true;
      const double gap = b.upper - b.lower;
      if (quantized && !c.is_inf()) {
        if ((v.array() == 0.0).any()) {
          ++zero_trials;
          zero_gap_max = std::max(zero_gap_max, gap);
          continue;
        }
        nz_dev_max = std::max(nz_dev_max, std::abs(gap - delta));
        if (std::abs(gap - delta) > 1e-12) {
          quant_fail = true;
          rep.witnesses.push_back({cell_desc(v, x, y, gap), gap - delta, trial_seed});
        }
      } else {
        if (gap < gmin) {
          gmin = gap;
          wmin = {cell_desc(v, x, y, gap), gap, trial_seed};
        }
        if (gap > gmax) {
          gmax = gap;
          wmax = {cell_desc(v, x, y, gap), gap, trial_seed};
        }
      }
    }
    if (used) ++done;
  }

  rep.stats["trials"] = done;
  if (quantized && !c.is_inf()) {
    rep.stats["delta"] = delta;
    rep.stats["nonzero_max_deviation"] = nz_dev_max;
    rep.stats["zero_entry_trials"] = zero_trials;
    rep.stats["zero_entry_max_gap"] = zero_gap_max;
    rep.verdict = quant_fail ? "fails" : "holds";
    if (zero_trials > 0) {
      PropertyWitness w;
      std::ostringstream os;
      os << "perceived matrices with zero entries reach gap " << zero_gap_max
         << " (zero entries have two-sided preimages); reported separately";
      w.description = os.str();
      w.gap = zero_gap_max - delta;
      w.seed = seed;
      rep.witnesses.push_back(w);
    }
  } else {
    rep.stats["min_gap"] = gmin;
    rep.stats["max_gap"] = gmax;
    if (done == 0 || gmax - gmin <= 1e-9) {
      rep.verdict = "holds";
    } else {
      rep.verdict = "fails";
      rep.witnesses.push_back(wmin);
      rep.witnesses.push_back(wmax);
    }
  }
  return rep;
}

PropertyReport check_narrowly_reversible(const GameInstance& g0, int n_x_samples,
                                         std::uint64_t seed, double tol) {
  const GameInstance game = normalize(g0);
  if (!game.zero_sum) throw InvalidInput("narrow reversibility needs a zero-sum instance");
  PropertyReport rep;
  rep.property = "narrowly-reversible";

  if (game.c1 == game.c2) {
    rep.verdict = "holds";
    rep.witnesses.push_back(
        {"degenerate comparison: the narrow set is the singleton of the perceived matrix "
         "itself, so the upper and lower sides coincide wherever the bounds are tight",
         0.0, seed});
    return rep;
  }

  const auto& fam = game.family;
  const auto kind = fam.kind;
  const int m = game.rows();
  const int n = game.cols();
  std::mt19937_64 rng(seed);

  // finite families: collect the narrow set once
  std::vector<MatrixXd> elems;
  bool have_elems = false;
  bool sampled_fallback = false;
  if (kind == PerceptionFamily::Kind::Quantized || kind == PerceptionFamily::Kind::Table) {
    try {
      auto ns = narrow_set(fam, game.u1, game.c1, game.c2, 20000);
      if (ns.enumerated) {
        elems = ns.elements;
        have_elems = true;
      }
    } catch (const TooLarge&) {
      sampled_fallback = true;
    }
    if (!have_elems) {
      sampled_fallback = true;
      for (const auto& u : sample_concretization(fam, game.u1, game.c1, 256, seed ^ 0x9e3779b9ULL))
        elems.push_back(perceive(fam, u, game.c2));
      have_elems = !elems.empty();
    }
  }

  double max_gap = 0.0;
  int not_applicable = 0;
  int checked = 0;
  bool any_fail = false;

  for (int t = 0; t < n_x_samples; ++t) {
    const VectorXd x = random_simplex_point(m, rng);
    for (int k = 0; k < n; ++k) {
      const VectorXd ek = basis(n, k);
      const double lhs = payoff_bounds(fam, game.u1, game.c1, x, ek).lower;
      double rhs;
      if (have_elems) {
        rhs = std::numeric_limits<double>::infinity();
        for (const auto& u : elems)
          rhs = std::min(rhs, payoff_bounds(fam, u, game.c2, x, ek).upper);
      } else if (kind == PerceptionFamily::Kind::Masked) {
        const MaskedProfile prof = masked_profile(game.u1, game.c1);
        std::vector<int> col_masked;
        for (const auto& [i, j] : prof.masked)
          if (j == k) col_masked.push_back(i);
        const bool saturated =
            game.c1.is_inf() || static_cast<int>(prof.kept.size()) == game.c1.value();
        const long budget = game.c2.is_inf()
                                ? std::numeric_limits<long>::max()
                                : game.c2.value() - game.c1.value();
        if (col_masked.empty()) {
          rhs = payoff_bounds(fam, game.u1, game.c2, x, ek).upper;
        } else if (!saturated || prof.theta <= 0.0 ||
                   static_cast<long>(col_masked.size()) > budget) {
          ++not_applicable;
          std::ostringstream os;
          os << "column " << k << ": NotApplicable (cannot fill " << col_masked.size()
             << " masked entries within the capability budget)";
          rep.witnesses.push_back({os.str(), 0.0, seed});
          continue;
        } else {
          MatrixXd u = game.u1;
          for (const int i : col_masked) u(i, k) = -prof.theta * (1.0 - 1e-9);
          rhs = payoff_bounds(fam, u, game.c2, x, ek).upper;
        }
      } else {  // limited rank
        const double s = uncertainty_limited_rank(game.u1, game.c1, x, ek, fam.rank_tol);
        if (s <= 1e-12) {
          rhs = payoff_bounds(fam, game.u1, game.c2, x, ek).upper;
        } else {
          const int r = numeric_rank(game.u1, fam.rank_tol);
          const double q = -canonical_svd(game.u1, fam.tie_tol).sigma[r - 1] * (1.0 - 1e-9);
          try {
            const MatrixXd u =
                extremal_concretization_limited_rank(game.u1, r, x, ek, q, fam.rank_tol);
            rhs = payoff_bounds(fam, u, game.c2, x, ek).upper;
          } catch (const DegenerateDirection&) {
            rhs = payoff_bounds(fam, game.u1, game.c2, x, ek).upper;
          }
        }
      }
      ++checked;
      const double gap = rhs - lhs;
      max_gap = std::max(max_gap, std::abs(gap));
      if (std::abs(gap) > tol) {
        any_fail = true;
        std::ostringstream os;
        os << "column " << k << ", sample " << t << ": upper estimate differs from the "
           << "guaranteed value by " << gap;
        rep.witnesses.push_back({os.str(), gap, seed});
      }
    }
  }

  rep.stats["checked"] = checked;
  rep.stats["not_applicable"] = not_applicable;
  rep.stats["max_gap"] = max_gap;
  if (any_fail)
    rep.verdict = "fails";
  else if (sampled_fallback)
    rep.verdict = "holds-up-to-sampling";
  else
    rep.verdict = "holds";
  return rep;
}

StackelbergProbe stackelberg_gap_probe(const GameInstance& g0, const VectorXd& x, int n_samples,
                                       std::uint64_t seed, double tol) {
  const GameInstance game = normalize(g0);
  if (!game.zero_sum) throw InvalidInput("the probe needs a zero-sum instance");
  StackelbergProbe out;
  out.h1 = maximin_objective(game, x).first;

  const auto& fam = game.family;
  const int n = game.cols();

  // the perceived matrix itself always belongs to the narrow set
  std::vector<MatrixXd> cands;
  cands.push_back(game.u1);
  if (!(game.c1 == game.c2)) {
    try {
      auto ns = narrow_set(fam, game.u1, game.c1, game.c2, 20000);
      if (ns.enumerated) {
        for (const auto& e : ns.elements) cands.push_back(e);
      } else if (ns.sample) {
        for (const auto& e : ns.sample(n_samples, seed)) cands.push_back(e);
      }
    } catch (const TooLarge&) {
      for (const auto& u : sample_concretization(fam, game.u1, game.c1, n_samples, seed))
        cands.push_back(perceive(fam, u, game.c2));
    }
    if (fam.kind == PerceptionFamily::Kind::LimitedRank) {
      const int r = numeric_rank(game.u1, fam.rank_tol);
      for (int k = 0; k < n; ++k) {
        const VectorXd ek = basis(n, k);
        if (uncertainty_limited_rank(game.u1, game.c1, x, ek, fam.rank_tol) <= 1e-12) continue;
        const double q = -canonical_svd(game.u1, fam.tie_tol).sigma[r - 1] * (1.0 - 1e-9);
        try {
          cands.push_back(
              extremal_concretization_limited_rank(game.u1, r, x, ek, q, fam.rank_tol));
        } catch (const DegenerateDirection&) {
        }
      }
    } else if (fam.kind == PerceptionFamily::Kind::Masked) {
      const MaskedProfile prof = masked_profile(game.u1, game.c1);
      const bool saturated =
          game.c1.is_inf() || static_cast<int>(prof.kept.size()) == game.c1.value();
      const long budget = game.c2.is_inf() ? std::numeric_limits<long>::max()
                                           : game.c2.value() - game.c1.value();
      if (saturated && prof.theta > 0.0) {
        for (int k = 0; k < n; ++k) {
          std::vector<int> col_masked;
          for (const auto& [i, j] : prof.masked)
            if (j == k) col_masked.push_back(i);
          if (col_masked.empty() || static_cast<long>(col_masked.size()) > budget) continue;
          MatrixXd u = game.u1;
          for (const int i : col_masked) u(i, k) = -prof.theta * (1.0 - 1e-9);
          cands.push_back(u);
        }
      }
    }
  }

  double best = std::numeric_limits<double>::infinity();
  bool first = true;
  for (const auto& u : cands) {
    const VectorXd y = best_response_upper(game, u, game.c2, x, tol);
    const double val = payoff_bounds(fam, u, game.c2, x, y).lower;
    if (first) {
      out.g_upper = val;
      first = false;
    }
    best = std::min(best, val);
  }
  out.g_lower_est = best;
  return out;
}

}  // namespace olp
