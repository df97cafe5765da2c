#include "olp/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace olp {

namespace {

constexpr double kTieTol = 1e-9;
const double kInf = std::numeric_limits<double>::infinity();

VectorXd basis(int n, int k) {
  VectorXd e = VectorXd::Zero(n);
  e[k] = 1.0;
  return e;
}

// Lower/upper endpoint matrices for entrywise-interval families, so that the
// payoff bounds are x^T L y and x^T H y.
std::pair<MatrixXd, MatrixXd> interval_endpoints(const PerceptionFamily& fam, const MatrixXd& v,
                                                 const Capability& c) {
  if (fam.kind == PerceptionFamily::Kind::Quantized) {
    const Capability level = max(intrinsic_capability(fam, v), c);
    if (level.is_inf()) return {v, v};
    if (intrinsic_capability(fam, v).is_inf())
      throw InvalidPerceived("quantized perception at a finite level must be a finite decimal");
    const double step = std::pow(10.0, -level.value());
    MatrixXd lo = v, hi = v;
    for (int i = 0; i < v.rows(); ++i)
      for (int j = 0; j < v.cols(); ++j) {
        if (v(i, j) <= 0.0) lo(i, j) -= step;
        if (v(i, j) >= 0.0) hi(i, j) += step;
      }
    return {lo, hi};
  }
  if (fam.kind == PerceptionFamily::Kind::Masked) {
    const MaskedProfile prof = masked_profile(v, c);
    MatrixXd lo = v, hi = v;
    if (!prof.singleton) {
      for (const auto& [i, j] : prof.masked) {
        lo(i, j) -= prof.theta;
        hi(i, j) += prof.theta;
      }
    }
    return {lo, hi};
  }
  throw InvalidInput("entrywise endpoints exist only for the masked and quantized families");
}

// Per narrow-set element: payoff bounds as min/max over finite bilinear sets.
// own_*: the higher-capability player's own payoff at c2. lead_lo: the set
// whose min gives the first player's guaranteed term in f.
struct ElemCtx {
  NarrowElem elem;
  std::vector<MatrixXd> own_lo, own_hi;
  std::vector<MatrixXd> lead_lo, lead_hi;
  bool exact = true;  // false: limited rank, fall back to family closed forms
};

double set_min(const std::vector<MatrixXd>& S, const VectorXd& x, const VectorXd& y) {
  double v = kInf;
  for (const auto& M : S) v = std::min(v, x.dot(M * y));
  return v;
}

double set_max(const std::vector<MatrixXd>& S, const VectorXd& x, const VectorXd& y) {
  double v = -kInf;
  for (const auto& M : S) v = std::max(v, x.dot(M * y));
  return v;
}

std::vector<MatrixXd> table_side(const TableFamily& table, const std::string& id,
                                 const Capability& c, bool col_side) {
  std::vector<MatrixXd> out;
  for (const int idx : table_concretization(table, id, c)) {
    const auto& e = table.universe[idx];
    if (col_side) {
      if (!e.B) throw InvalidInput("general-sum table entry '" + e.id + "' lacks a column payoff");
      out.push_back(*e.B);
    } else {
      out.push_back(e.A);
    }
  }
  return out;
}

std::vector<ElemCtx> build_contexts(const GameInstance& game,
                                    const std::vector<NarrowElem>& elems) {
  const auto& fam = game.family;
  std::vector<ElemCtx> out;
  std::vector<MatrixXd> shared_lead_lo, shared_lead_hi;
  const bool general = !game.zero_sum;
  if (general) {
    // the first player's own term is fixed: u1 at c1
    if (fam.kind == PerceptionFamily::Kind::Table) {
      if (!game.perceived_id) throw InvalidInput("table instance needs a perceived id");
      shared_lead_lo = table_side(*fam.table, *game.perceived_id, game.c1, false);
      shared_lead_hi = shared_lead_lo;
    } else if (fam.kind != PerceptionFamily::Kind::LimitedRank) {
      auto [lo, hi] = interval_endpoints(fam, game.u1, game.c1);
      shared_lead_lo = {lo};
      shared_lead_hi = {hi};
    }
  }
  for (const auto& e : elems) {
    ElemCtx ctx;
    ctx.elem = e;
    if (fam.kind == PerceptionFamily::Kind::LimitedRank) {
      ctx.exact = false;
    } else if (fam.kind == PerceptionFamily::Kind::Table) {
      ctx.own_lo = table_side(*fam.table, *e.id, game.c2, general);
      ctx.own_hi = ctx.own_lo;
      if (general) {
        ctx.lead_lo = shared_lead_lo;
        ctx.lead_hi = shared_lead_hi;
      } else {
        ctx.lead_lo = table_side(*fam.table, *e.id, game.c2, false);
        ctx.lead_hi = ctx.lead_lo;
      }
    } else {
      auto [lo, hi] = interval_endpoints(fam, e.perception, game.c2);
      ctx.own_lo = {lo};
      ctx.own_hi = {hi};
      if (general) {
        ctx.lead_lo = shared_lead_lo;
        ctx.lead_hi = shared_lead_hi;
      } else {
        ctx.lead_lo = {lo};
        ctx.lead_hi = {hi};
      }
    }
    out.push_back(std::move(ctx));
  }
  return out;
}

// Exact minimizers of y -> max_k x^T M_k y on the column simplex: vertices,
// exact 1-D solutions on every edge, and a subgradient pass for interior
// optima of 3+ action simplices. Returns all candidates within tie_tol of the
// optimum, augmented with uniform mixtures of tied pure columns.
std::vector<VectorXd> minimize_upper_candidates(const std::vector<MatrixXd>& S, const VectorXd& x,
                                                double tie_tol) {
  const int n = static_cast<int>(S.front().cols());
  std::vector<VectorXd> pts;
  for (int k = 0; k < n; ++k) pts.push_back(basis(n, k));
  // edge (j, j'): lines a_k t + b_k over t in [0,1]
  for (int j = 0; j < n; ++j) {
    for (int jp = j + 1; jp < n; ++jp) {
      std::vector<double> as, bs;
      for (const auto& M : S) {
        const double vj = x.dot(M.col(j));
        const double vjp = x.dot(M.col(jp));
        as.push_back(vj - vjp);
        bs.push_back(vjp);
      }
      std::vector<double> ts = {0.0, 1.0};
      for (std::size_t a = 0; a < as.size(); ++a)
        for (std::size_t b = a + 1; b < as.size(); ++b) {
          const double da = as[a] - as[b];
          if (std::abs(da) < 1e-14) continue;
          const double t = (bs[b] - bs[a]) / da;
          if (t > 0.0 && t < 1.0) ts.push_back(t);
        }
      for (const double t : ts) {
        VectorXd y = VectorXd::Zero(n);
        y[j] = t;
        y[jp] = 1.0 - t;
        pts.push_back(y);
      }
    }
  }
  if (n >= 3) {
    ConcaveObjective obj = [&](const VectorXd& y) {
      double best = -kInf;
      VectorXd g;
      for (const auto& M : S) {
        const double v = x.dot(M * y);
        if (v > best) {
          best = v;
          g = M.transpose() * x;
        }
      }
      return std::make_pair(-best, VectorXd(-g));
    };
    pts.push_back(subgradient_maximize(obj, n, 1e-10, 60000, 19).argmax);
  }
  auto U = [&](const VectorXd& y) { return set_max(S, x, y); };
  double best = kInf;
  for (const auto& y : pts) best = std::min(best, U(y));
  std::vector<VectorXd> cands;
  for (const auto& y : pts) {
    if (U(y) > best + tie_tol) continue;
    bool dup = false;
    for (const auto& c : cands)
      if ((c - y).lpNorm<Eigen::Infinity>() <= 1e-12) dup = true;
    if (!dup) cands.push_back(y);
  }
  // mixtures over tied pure columns (the equilibrium response may be interior)
  std::vector<int> tied;
  for (int k = 0; k < n; ++k)
    if (U(basis(n, k)) <= best + tie_tol) tied.push_back(k);
  if (tied.size() >= 2) {
    for (unsigned mask = 3; mask < (1u << tied.size()); ++mask) {
      if ((mask & (mask - 1)) == 0) continue;  // singletons already present
      VectorXd y = VectorXd::Zero(n);
      int cnt = 0;
      for (std::size_t t = 0; t < tied.size(); ++t)
        if (mask & (1u << t)) {
          y[tied[t]] = 1.0;
          ++cnt;
        }
      y /= cnt;
      if (U(y) > best + tie_tol) continue;
      bool dup = false;
      for (const auto& c : cands)
        if ((c - y).lpNorm<Eigen::Infinity>() <= 1e-12) dup = true;
      if (!dup) cands.push_back(y);
    }
  }
  return cands;
}

std::vector<VectorXd> follower_candidates(const GameInstance& game, const ElemCtx& ctx,
                                          const VectorXd& x, double tie_tol) {
  if (game.zero_sum) return minimize_upper_candidates(ctx.own_hi, x, tie_tol);
  // general sum: maximize min_k x^T M y == -minimize max_k x^T (-M) y
  std::vector<MatrixXd> neg;
  for (const auto& M : ctx.own_lo) neg.push_back(-M);
  return minimize_upper_candidates(neg, x, tie_tol);
}

double follower_value(const GameInstance& game, const ElemCtx& ctx, const VectorXd& x,
                      const VectorXd& y) {
  return game.zero_sum ? set_max(ctx.own_hi, x, y) : set_min(ctx.own_lo, x, y);
}

double leader_term(const ElemCtx& ctx, const VectorXd& x, const VectorXd& y) {
  return set_min(ctx.lead_lo, x, y);
}

// limited-rank fallbacks via the closed-form bound functions
double lr_follower_value(const GameInstance& game, const NarrowElem& e, const VectorXd& x,
                         const VectorXd& y) {
  const auto b = payoff_bounds(game.family, e.perception, game.c2, x, y);
  return game.zero_sum ? b.upper : b.lower;
}

double lr_leader_term(const GameInstance& game, const NarrowElem& e, const VectorXd& x,
                      const VectorXd& y) {
  if (game.zero_sum) return payoff_bounds(game.family, e.perception, game.c2, x, y).lower;
  return payoff_bounds(game.family, game.u1, game.c1, x, y).lower;
}

void simplex_grid_rec(int m, int res, int pos, int left, std::vector<int>& acc,
                      std::vector<VectorXd>& out) {
  if (pos == m - 1) {
    acc[pos] = left;
    VectorXd x(m);
    for (int i = 0; i < m; ++i) x[i] = static_cast<double>(acc[i]) / res;
    out.push_back(x);
    return;
  }
  for (int k = 0; k <= left; ++k) {
    acc[pos] = k;
    simplex_grid_rec(m, res, pos + 1, left - k, acc, out);
  }
}

std::vector<VectorXd> simplex_grid(int m, int res) {
  std::vector<VectorXd> out;
  std::vector<int> acc(m, 0);
  simplex_grid_rec(m, res, 0, res, acc, out);
  return out;
}

// f(x) = min over elements of min_k x^T d_{e,k} with d = M y_e precomputed
struct PinnedF {
  std::vector<VectorXd> dirs;  // flattened over elements and set members
  std::vector<int> elem_of;

  void build(const std::vector<ElemCtx>& ctxs, const std::vector<VectorXd>& ys) {
    dirs.clear();
    elem_of.clear();
    for (std::size_t e = 0; e < ctxs.size(); ++e)
      for (const auto& M : ctxs[e].lead_lo) {
        dirs.push_back(M * ys[e]);
        elem_of.push_back(static_cast<int>(e));
      }
  }

  // min over each element of its own members, then min over elements: since
  // all members enter a min, a single global min suffices
  double value(const VectorXd& x) const {
    double v = kInf;
    for (const auto& d : dirs) v = std::min(v, x.dot(d));
    return v;
  }

  std::pair<double, VectorXd> value_grad(const VectorXd& x) const {
    double v = kInf;
    int arg = 0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      const double t = x.dot(dirs[i]);
      if (t < v) {
        v = t;
        arg = static_cast<int>(i);
      }
    }
    return {v, dirs[arg]};
  }
};

std::string elem_name(const NarrowElem& e) {
  if (e.id) return "'" + *e.id + "'";
  std::ostringstream os;
  os << e.perception.rows() << "x" << e.perception.cols() << " matrix";
  return os.str();
}

bool same_elem(const NarrowElem& a, const NarrowElem& b, double tol) {
  if (a.id && b.id) return *a.id == *b.id;
  if (a.perception.rows() != b.perception.rows() || a.perception.cols() != b.perception.cols())
    return false;
  return (a.perception - b.perception).lpNorm<Eigen::Infinity>() <= tol;
}

}  // namespace

std::vector<NarrowElem> narrow_elements(const GameInstance& g0, std::size_t cap) {
  const GameInstance game = normalize(g0);
  const auto& fam = game.family;
  std::vector<NarrowElem> out;
  if (fam.kind == PerceptionFamily::Kind::Table) {
    if (!game.perceived_id) throw InvalidInput("table instance needs a perceived id");
    const auto& table = *fam.table;
    const Capability cmin = min(game.c1, game.c2);
    const std::string base = table.apply(*game.perceived_id, cmin);
    for (const auto& entry : table.universe) {
      if (!(table_intrinsic(table, entry.id) <= game.c2)) continue;
      if (table.apply(entry.id, cmin) != base) continue;
      NarrowElem e;
      e.id = entry.id;
      if (game.zero_sum) {
        e.perception = entry.A;
      } else {
        if (!entry.B)
          throw InvalidInput("general-sum table entry '" + entry.id + "' lacks a column payoff");
        e.perception = *entry.B;
      }
      out.push_back(std::move(e));
      if (out.size() > cap) throw TooLarge("narrow set exceeds the enumeration cap");
    }
    return out;
  }
  const MatrixXd& base = game.zero_sum ? game.u1 : game.v1;
  auto ns = narrow_set(fam, base, game.c1, game.c2, cap);
  if (!ns.enumerated) throw TooLarge("narrow set of this family is not enumerable");
  for (const auto& v : ns.elements) out.push_back({std::nullopt, v});
  return out;
}

int EnumeratedResponse::find(const NarrowElem& e, double tol) const {
  for (std::size_t i = 0; i < elements.size(); ++i)
    if (same_elem(elements[i], e, tol)) return static_cast<int>(i);
  return -1;
}

EquilibriumReport verify_nash(const GameInstance& g0, const VectorXd& x_star,
                              const ResponseFunction& Ry, double eps, int check_budget,
                              std::uint64_t seed) {
  const GameInstance game = normalize(g0);
  if (!on_simplex(x_star, 1e-9)) throw InvalidInput("x_star must lie on the row simplex");
  if (!Ry.enumerated && !Ry.compact) throw InvalidResponseFunction("empty response function");

  std::vector<NarrowElem> elems;
  bool full = true;
  try {
    elems = narrow_elements(game, static_cast<std::size_t>(std::max(check_budget, 1)));
  } catch (const TooLarge&) {
    full = false;
    std::set<std::string> seen;
    for (const auto& u :
         sample_concretization(game.family, game.zero_sum ? game.u1 : game.v1, game.c1,
                               std::max(check_budget, 1), seed)) {
      MatrixXd p = perceive(game.family, u, game.c2);
      std::ostringstream key;
      key.precision(17);
      for (int i = 0; i < p.size(); ++i) key << p(i) << ",";
      if (seen.insert(key.str()).second) elems.push_back({std::nullopt, p});
    }
  }
  if (Ry.enumerated && full) {
    if (Ry.enumerated->elements.size() != elems.size())
      throw InvalidResponseFunction("response domain does not match the narrow set");
    for (const auto& e : elems)
      if (Ry.enumerated->find(e) < 0)
        throw InvalidResponseFunction("response missing for element " + elem_name(e));
  }

  const std::vector<ElemCtx> ctxs = build_contexts(game, elems);
  std::vector<VectorXd> ys;
  for (std::size_t i = 0; i < elems.size(); ++i) {
    if (Ry.enumerated) {
      const int idx = Ry.enumerated->find(elems[i]);
      if (idx < 0) throw InvalidResponseFunction("response missing for element " + elem_name(elems[i]));
      ys.push_back(Ry.enumerated->responses[idx]);
    } else {
      ys.push_back(eval_compact_repr(game, *Ry.compact, elems[i]));
    }
    if (!on_simplex(ys.back(), 1e-9))
      throw InvalidResponseFunction("response for element " + elem_name(elems[i]) +
                                    " is not a mixed strategy");
  }

  EquilibriumReport rep;
  rep.eps = eps;

  // second-player condition
  int worst2 = -1;
  for (std::size_t i = 0; i < elems.size(); ++i) {
    double got, best;
    if (ctxs[i].exact) {
      got = follower_value(game, ctxs[i], x_star, ys[i]);
      const auto cands = follower_candidates(game, ctxs[i], x_star, kTieTol);
      best = game.zero_sum ? kInf : -kInf;
      for (const auto& y : cands) {
        const double v = follower_value(game, ctxs[i], x_star, y);
        best = game.zero_sum ? std::min(best, v) : std::max(best, v);
      }
    } else {
      got = lr_follower_value(game, elems[i], x_star, ys[i]);
      const VectorXd yb =
          game.zero_sum
              ? best_response_upper(game, elems[i].perception, game.c2, x_star, 1e-8)
              : best_response_lower(game, elems[i].perception, game.c2, x_star, 1e-8);
      best = lr_follower_value(game, elems[i], x_star, yb);
    }
    const double dev = game.zero_sum ? got - best : best - got;
    if (dev > rep.max_deviation_p2) {
      rep.max_deviation_p2 = dev;
      worst2 = static_cast<int>(i);
    }
  }
  rep.max_deviation_p2 = std::max(0.0, rep.max_deviation_p2);

  // first-player condition: responses stay pinned while x deviates
  double f_at_star, f_max;
  bool all_exact = true;
  for (const auto& c : ctxs) all_exact = all_exact && c.exact;
  if (all_exact) {
    PinnedF f;
    f.build(ctxs, ys);
    f_at_star = f.value(x_star);
    ConcaveObjective obj = [&f](const VectorXd& x) { return f.value_grad(x); };
    f_max = std::max(f_at_star,
                     subgradient_maximize(obj, game.rows(), 1e-9, 120000, seed ^ 0x5bd1e995ULL)
                         .value);
    for (const auto& x : simplex_grid(game.rows(), 32)) f_max = std::max(f_max, f.value(x));
  } else {
    auto fval = [&](const VectorXd& x) {
      double v = kInf;
      VectorXd g;
      for (std::size_t i = 0; i < elems.size(); ++i) {
        auto [t, gx] = lower_bound_with_grad_x(
            game.family, game.zero_sum ? elems[i].perception : game.u1,
            game.zero_sum ? game.c2 : game.c1, x, ys[i]);
        if (t < v) {
          v = t;
          g = gx;
        }
      }
      return std::make_pair(v, g);
    };
    f_at_star = fval(x_star).first;
    f_max = std::max(f_at_star,
                     subgradient_maximize(fval, game.rows(), 1e-9, 120000, seed ^ 0x5bd1e995ULL)
                         .value);
  }
  rep.max_deviation_p1 = std::max(0.0, f_max - f_at_star);

  rep.holds = rep.max_deviation_p1 <= eps + 1e-9 && rep.max_deviation_p2 <= eps + 1e-9;
  std::ostringstream os;
  if (!rep.holds && rep.max_deviation_p2 > eps && worst2 >= 0)
    os << "element " << elem_name(elems[worst2]) << " gains " << rep.max_deviation_p2
       << " by deviating";
  else if (!rep.holds)
    os << "first player gains " << rep.max_deviation_p1 << " by deviating";
  else if (!full)
    os << "verified on " << elems.size() << " sampled narrow-set elements";
  rep.witness = os.str();
  return rep;
}

std::optional<SearchResult> search_nash_table(const GameInstance& g0, int x_grid_resolution,
                                              double eps) {
  const GameInstance game = normalize(g0);
  const std::vector<NarrowElem> elems = narrow_elements(game, 20000);
  const std::vector<ElemCtx> ctxs = build_contexts(game, elems);
  for (const auto& c : ctxs)
    if (!c.exact) throw InvalidInput("grid search needs an enumerable bounded family");
  const int m = game.rows();

  const std::vector<VectorXd> grid = simplex_grid(m, x_grid_resolution);

  struct Scored {
    VectorXd x;
    std::vector<std::vector<VectorXd>> cands;  // per element, ordered by leader term desc
    double sep_f = 0.0;
  };

  auto score = [&](const VectorXd& x) {
    Scored s;
    s.x = x;
    s.sep_f = kInf;
    for (const auto& ctx : ctxs) {
      auto cands = follower_candidates(game, ctx, x, kTieTol);
      std::stable_sort(cands.begin(), cands.end(), [&](const VectorXd& a, const VectorXd& b) {
        return leader_term(ctx, x, a) > leader_term(ctx, x, b);
      });
      s.sep_f = std::min(s.sep_f, leader_term(ctx, x, cands.front()));
      s.cands.push_back(std::move(cands));
    }
    return s;
  };

  auto try_accept = [&](const Scored& s,
                        const std::vector<VectorXd>& reference) -> std::optional<SearchResult> {
    // enumerate tie selections, separable-best first, up to the combination cap
    long combos = 1;
    for (const auto& c : s.cands) {
      combos *= static_cast<long>(c.size());
      if (combos > 10000) {
        combos = 10000;
        break;
      }
    }
    std::vector<std::size_t> pick(ctxs.size(), 0);
    for (long it = 0; it < combos; ++it) {
      std::vector<VectorXd> ys;
      for (std::size_t e = 0; e < ctxs.size(); ++e) ys.push_back(s.cands[e][pick[e]]);
      PinnedF f;
      f.build(ctxs, ys);
      const double fx = f.value(s.x);
      double fmax = fx;
      for (const auto& xp : reference) {
        fmax = std::max(fmax, f.value(xp));
        if (fmax > fx + eps) break;
      }
      if (fmax <= fx + eps) {
        SearchResult r;
        r.x_star = s.x;
        r.Ry.elements = elems;
        r.Ry.responses = ys;
        r.value = fx;
        return r;
      }
      // next selection (mixed-radix increment)
      std::size_t e = 0;
      while (e < pick.size()) {
        if (++pick[e] < s.cands[e].size()) break;
        pick[e] = 0;
        ++e;
      }
      if (e == pick.size()) break;
    }
    return std::nullopt;
  };

  std::vector<Scored> scored;
  scored.reserve(grid.size());
  for (const auto& x : grid) scored.push_back(score(x));
  std::vector<std::size_t> order(scored.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scored[a].sep_f > scored[b].sep_f; });

  for (const std::size_t i : order)
    if (auto r = try_accept(scored[i], grid)) return r;

  // one refinement pass around the most promising candidate
  if (!order.empty()) {
    const VectorXd center = scored[order.front()].x;
    const int fine = x_grid_resolution * 8;
    std::vector<VectorXd> local, reference = grid;
    for (const auto& x : simplex_grid(m, fine)) {
      if ((x - center).lpNorm<Eigen::Infinity>() <= 2.0 / x_grid_resolution) {
        local.push_back(x);
        reference.push_back(x);
      }
    }
    std::vector<Scored> fine_scored;
    for (const auto& x : local) fine_scored.push_back(score(x));
    std::vector<std::size_t> forder(fine_scored.size());
    for (std::size_t i = 0; i < forder.size(); ++i) forder[i] = i;
    std::stable_sort(forder.begin(), forder.end(), [&](std::size_t a, std::size_t b) {
      return fine_scored[a].sep_f > fine_scored[b].sep_f;
    });
    for (const std::size_t i : forder)
      if (auto r = try_accept(fine_scored[i], reference)) return r;
  }
  return std::nullopt;
}

CompactResponseRepr build_compact_repr(const GameInstance& g0, const VectorXd& x_star,
                                       const EnumeratedResponse& Ry, double eps,
                                       double eps_prime) {
  const GameInstance game = normalize(g0);
  auto check = verify_nash(game, x_star, ResponseFunction::from(Ry), eps, 2000, 12345);
  if (!check.holds)
    throw InvalidInput("the candidate pair does not verify at the requested tolerance");

  const std::vector<NarrowElem> elems = narrow_elements(game, 20000);
  const std::vector<ElemCtx> ctxs = build_contexts(game, elems);
  const int m = game.rows();
  std::vector<VectorXd> ys;
  for (const auto& e : elems) ys.push_back(Ry.responses[Ry.find(e)]);

  CompactResponseRepr repr;
  repr.x_star = x_star;
  repr.eps = eps;
  repr.eps_prime = eps_prime;
  repr.f_star = kInf;
  for (std::size_t i = 0; i < ctxs.size(); ++i)
    repr.f_star = std::min(repr.f_star, leader_term(ctxs[i], x_star, ys[i]));

  // vertex list of each element's attainable pure-row payoff set
  std::vector<VectorXd> verts;
  std::vector<int> vert_elem;
  auto add_vertex = [&](const VectorXd& s, int e) {
    for (const auto& v : verts)
      if ((v - s).lpNorm<Eigen::Infinity>() <= 1e-12) return;
    verts.push_back(s);
    vert_elem.push_back(e);
  };
  for (std::size_t i = 0; i < ctxs.size(); ++i) {
    const auto& ctx = ctxs[i];
    if (!ctx.exact) throw InvalidInput("compact representation needs an enumerable bounded family");
    if (ctx.lead_lo.size() > 1 || game.family.kind == PerceptionFamily::Kind::Table) {
      for (const auto& M : ctx.lead_lo) add_vertex(M * ys[i], static_cast<int>(i));
    } else {
      const VectorXd lo = ctx.lead_lo.front() * ys[i];
      const VectorXd hi = ctx.lead_hi.front() * ys[i];
      for (unsigned mask = 0; mask < (1u << m); ++mask) {
        VectorXd s(m);
        for (int r = 0; r < m; ++r) s[r] = (mask & (1u << r)) ? hi[r] : lo[r];
        add_vertex(s, static_cast<int>(i));
      }
    }
  }

  // hull point minimizing the max coordinate, as weights on the vertices
  const int K = static_cast<int>(verts.size());
  VectorXd lam;
  if (K == 1) {
    lam = VectorXd::Ones(1);
  } else {
    MatrixXd V(m, K);
    for (int k = 0; k < K; ++k) V.col(k) = verts[k];
    ConcaveObjective obj = [&](const VectorXd& w) {
      const VectorXd s = V * w;
      int arg = 0;
      s.maxCoeff(&arg);
      return std::make_pair(-s[arg], VectorXd(-V.row(arg).transpose()));
    };
    lam = subgradient_maximize(obj, K, 1e-10, 200000, 23).argmax;
  }

  // Caratheodory: shrink the support to at most m + 1 vertices
  std::vector<int> support;
  for (int k = 0; k < K; ++k)
    if (lam[k] > 1e-12) support.push_back(k);
  while (static_cast<int>(support.size()) > m + 1) {
    const int k = static_cast<int>(support.size());
    // affine dependence: A mu = 0 with the weights summing to zero
    MatrixXd A(m + 1, k);
    for (int j = 0; j < k; ++j) {
      A.block(0, j, m, 1) = verts[support[j]];
      A(m, j) = 1.0;
    }
    const MatrixXd ker = Eigen::FullPivLU<MatrixXd>(A).kernel();
    if (ker.cols() == 0 || ker.col(0).lpNorm<Eigen::Infinity>() <= 1e-12) break;
    VectorXd mu = ker.col(0);
    if (mu.maxCoeff() <= 0.0) mu = -mu;
    // lam <- lam - t mu keeps the combination and zeroes one weight
    double step = kInf;
    for (int j = 0; j < k; ++j)
      if (mu[j] > 1e-15) step = std::min(step, lam[support[j]] / mu[j]);
    for (int j = 0; j < k; ++j) lam[support[j]] -= step * mu[j];
    std::vector<int> next;
    for (const int s : support)
      if (lam[s] > 1e-12) next.push_back(s);
    if (next.size() == support.size()) break;  // numerical stall
    support = std::move(next);
  }

  std::set<int> anchor_elems;
  for (const int k : support) anchor_elems.insert(vert_elem[k]);
  for (const int e : anchor_elems) repr.anchors.emplace_back(elems[e], ys[e]);
  if (static_cast<int>(repr.anchors.size()) > m + 1) repr.anchors.resize(m + 1);
  return repr;
}

VectorXd eval_compact_repr(const GameInstance& g0, const CompactResponseRepr& repr,
                           const NarrowElem& u) {
  const GameInstance game = normalize(g0);
  const std::vector<NarrowElem> elems = narrow_elements(game, 20000);
  bool member = false;
  for (const auto& e : elems) member = member || same_elem(e, u, 1e-9);
  if (!member) throw InvalidInput("the queried perception is outside the narrow set");

  for (const auto& [e, y] : repr.anchors)
    if (same_elem(e, u, 1e-9)) return y;

  const std::vector<ElemCtx> ctx = build_contexts(game, {u});
  const auto& c = ctx.front();
  if (!c.exact) throw InvalidInput("oracle evaluation needs an enumerable bounded family");
  const int n = game.cols();
  const VectorXd& x = repr.x_star;

  double best2 = game.zero_sum ? kInf : -kInf;
  for (const auto& y : follower_candidates(game, c, x, kTieTol)) {
    const double v = follower_value(game, c, x, y);
    best2 = game.zero_sum ? std::min(best2, v) : std::max(best2, v);
  }
  const double slack_budget = repr.eps + repr.eps_prime;

  // maximize the minimum constraint slack over the column simplex
  ConcaveObjective obj = [&](const VectorXd& y) {
    double g1 = kInf;
    VectorXd grad1;
    for (const auto& M : c.lead_lo) {
      const double v = x.dot(M * y);
      if (v < g1) {
        g1 = v;
        grad1 = M.transpose() * x;
      }
    }
    g1 -= repr.f_star;
    double g2;
    VectorXd grad2;
    if (game.zero_sum) {
      g2 = -kInf;
      for (const auto& M : c.own_hi) {
        const double v = x.dot(M * y);
        if (v > g2) {
          g2 = v;
          grad2 = -(M.transpose() * x);
        }
      }
      g2 = (best2 + slack_budget) - g2;
    } else {
      g2 = kInf;
      for (const auto& M : c.own_lo) {
        const double v = x.dot(M * y);
        if (v < g2) {
          g2 = v;
          grad2 = M.transpose() * x;
        }
      }
      g2 -= best2 - slack_budget;
    }
    if (g1 <= g2) return std::make_pair(g1, grad1);
    return std::make_pair(g2, grad2);
  };
  const auto rep = subgradient_maximize(obj, n, 1e-10, 120000, 29);
  if (rep.value < -1e-9)
    throw OracleFailure("no feasible response satisfies the stored guarantees");
  return rep.argmax;
}

ReducedGame reduce_general_to_zero_sum(const GameInstance& table_game) {
  const GameInstance game = normalize(table_game);
  if (game.zero_sum || game.family.kind != PerceptionFamily::Kind::Table || !game.perceived_id)
    throw InvalidInput("the reduction takes a general-sum table instance");
  const auto& table = *game.family.table;
  const std::string pid = *game.perceived_id;
  const int m = game.rows();
  const int n = game.cols();

  const std::vector<int> conc = table_concretization(table, pid, game.c1);
  std::vector<std::string> narrow_ids;
  {
    const Capability cmin = min(game.c1, game.c2);
    const std::string base = table.apply(pid, cmin);
    for (const auto& e : table.universe)
      if (table_intrinsic(table, e.id) <= game.c2 && table.apply(e.id, cmin) == base)
        narrow_ids.push_back(e.id);
  }

  double minU = kInf, maxU = -kInf, minV = kInf, maxV = -kInf;
  auto fold = [](double& lo, double& hi, const MatrixXd& M) {
    lo = std::min(lo, M.minCoeff());
    hi = std::max(hi, M.maxCoeff());
  };
  for (const int idx : conc) {
    const auto& e = table.universe[idx];
    if (!e.B) throw InvalidInput("general-sum table entry '" + e.id + "' lacks a column payoff");
    fold(minU, maxU, e.A);
    fold(minV, maxV, *e.B);
  }
  for (const auto& id : narrow_ids) {
    const auto& e = table.entry(id);
    if (!e.B) throw InvalidInput("general-sum table entry '" + id + "' lacks a column payoff");
    fold(minV, maxV, *e.B);
  }

  ReductionMapping map;
  map.m = m;
  map.k_p = (maxU > minU) ? 0.8 / (maxU - minU) : 0.8;
  map.b_p = 0.1 - map.k_p * minU;
  map.k_n = (maxV > minV) ? -0.8 / (maxV - minV) : -0.8;
  map.b_n = 1.1 - map.k_n * maxV;

  auto to_top = [&](const MatrixXd& B) {
    MatrixXd M(2 * m, n);
    M.topRows(m) = MatrixXd::Ones(m, n);
    M.bottomRows(m) = map.k_n * B.array() + map.b_n;
    return M;
  };

  auto reduced = std::make_shared<TableFamily>();
  reduced->level_cap = 2;
  std::map<std::string, std::string> canon;  // requested id -> surviving id after dedup
  auto add_entry = [&](const std::string& id, const MatrixXd& M) {
    for (const auto& e : reduced->universe) {
      if (e.A.rows() == M.rows() && (e.A - M).lpNorm<Eigen::Infinity>() == 0.0) {
        canon[id] = e.id;
        return;
      }
    }
    reduced->universe.push_back({id, M, std::nullopt});
    canon[id] = id;
  };

  add_entry("ubar", MatrixXd::Ones(2 * m, n));
  for (const auto& w : narrow_ids) add_entry("top:" + w, to_top(*table.entry(w).B));
  for (const int idx : conc) {
    const auto& z = table.universe[idx];
    MatrixXd M(2 * m, n);
    M.topRows(m) = map.k_n * z.B->array() + map.b_n;
    M.bottomRows(m).setZero();
    add_entry("cv:" + z.id, M);
  }
  for (const auto& w : narrow_ids) {
    const MatrixXd bottom = -(map.k_n * table.entry(w).B->array() + map.b_n);
    for (const int idx : conc) {
      const auto& z = table.universe[idx];
      MatrixXd M(2 * m, n);
      M.topRows(m) = map.k_p * z.A.array() + map.b_p;
      M.bottomRows(m) = bottom;
      add_entry("cu:" + w + ":" + z.id, M);
    }
  }
  const std::size_t positive_count = reduced->universe.size();
  const std::map<std::string, std::string> positive_canon = canon;
  std::vector<std::pair<std::string, MatrixXd>> negs;
  for (std::size_t i = 0; i < positive_count; ++i)
    negs.emplace_back("neg:" + reduced->universe[i].id, -reduced->universe[i].A);
  for (const auto& [id, M] : negs) add_entry(id, M);
  // a deduped positive id needs its negated alias resolved through the survivor
  for (const auto& [orig, surv] : positive_canon) canon["neg:" + orig] = canon.at("neg:" + surv);

  auto link = [&](const std::string& from, int level, const std::string& to) {
    const std::string f = canon.at(from);
    const std::string t = canon.at(to);
    auto it = reduced->level_map.find({f, level});
    if (it != reduced->level_map.end()) {
      if (it->second != t)
        throw InvalidInput("reduction needs distinguishable column payoffs per perception");
      return;
    }
    reduced->level_map[{f, level}] = t;
  };
  auto link_both = [&](const std::string& from, int level, const std::string& to) {
    link(from, level, to);
    link("neg:" + from, level, "neg:" + to);
  };
  link_both("ubar", 1, "ubar");
  link_both("ubar", 2, "ubar");
  for (const auto& w : narrow_ids) {
    link_both("top:" + w, 1, "ubar");
    link_both("top:" + w, 2, "top:" + w);
  }
  for (const int idx : conc) {
    const auto& z = table.universe[idx];
    link_both("cv:" + z.id, 1, "ubar");
    link_both("cv:" + z.id, 2, "top:" + table.apply(z.id, game.c2));
  }
  for (const auto& w : narrow_ids)
    for (const int idx : conc) {
      const auto& z = table.universe[idx];
      link_both("cu:" + w + ":" + z.id, 1, "ubar");
      link_both("cu:" + w + ":" + z.id, 2, "top:" + w);
    }

  const auto validation = validate_table_family(*reduced);
  if (!validation.valid || !validation.odd) {
    std::string msg = "reduced table fails validation";
    for (const auto& v : validation.violations) msg += "; " + v;
    throw InvalidInput(msg);
  }

  ReducedGame out;
  out.game.family = PerceptionFamily::make_table(reduced);
  out.game.u1 = MatrixXd::Ones(2 * m, n);
  out.game.v1 = -out.game.u1;
  out.game.c1 = Capability(1);
  out.game.c2 = Capability(2);
  out.game.zero_sum = true;
  out.game.perceived_id = "ubar";
  for (const auto& w : narrow_ids) map.element_map.emplace_back(w, canon.at("top:" + w));
  out.mapping = map;
  return out;
}

std::pair<VectorXd, EnumeratedResponse> map_back_equilibrium(const GameInstance& original,
                                                             const ReducedGame& reduced,
                                                             const VectorXd& x_bar_star,
                                                             const EnumeratedResponse& Ry_bar) {
  const int m = reduced.mapping.m;
  if (x_bar_star.size() != 2 * m) throw InvalidInput("reduced strategy has the wrong dimension");
  const double tail = x_bar_star.tail(m).sum();
  if (tail > 1e-6)
    throw ReductionViolation("reduced equilibrium places mass on the auxiliary rows");
  const double head = x_bar_star.head(m).sum();
  if (head <= 0.0) throw ReductionViolation("reduced equilibrium has no mass on the real rows");
  VectorXd x_star = x_bar_star.head(m) / head;

  const GameInstance orig = normalize(original);
  EnumeratedResponse Ry;
  for (const auto& e : narrow_elements(orig, 20000)) {
    std::string top_id;
    for (const auto& [w, t] : reduced.mapping.element_map)
      if (e.id && *e.id == w) top_id = t;
    if (top_id.empty()) throw InvalidInput("narrow element missing from the reduction mapping");
    NarrowElem key;
    key.id = top_id;
    key.perception = reduced.game.family.table->entry(top_id).A;
    const int idx = Ry_bar.find(key);
    if (idx < 0) throw InvalidResponseFunction("reduced response missing for " + top_id);
    Ry.elements.push_back(e);
    Ry.responses.push_back(Ry_bar.responses[idx]);
  }
  return {x_star, Ry};
}

double nash_value_p1(const GameInstance& g0, const VectorXd& x_star, const ResponseFunction& Ry) {
  const GameInstance game = normalize(g0);
  const std::vector<NarrowElem> elems = narrow_elements(game, 20000);
  const std::vector<ElemCtx> ctxs = build_contexts(game, elems);
  double v = kInf;
  for (std::size_t i = 0; i < elems.size(); ++i) {
    VectorXd y;
    if (Ry.enumerated) {
      const int idx = Ry.enumerated->find(elems[i]);
      if (idx < 0) throw InvalidResponseFunction("response missing for " + elem_name(elems[i]));
      y = Ry.enumerated->responses[idx];
    } else if (Ry.compact) {
      y = eval_compact_repr(game, *Ry.compact, elems[i]);
    } else {
      throw InvalidResponseFunction("empty response function");
    }
    v = std::min(v, ctxs[i].exact ? leader_term(ctxs[i], x_star, y)
                                  : lr_leader_term(game, elems[i], x_star, y));
  }
  return v;
}

double stackelberg_value_zero_sum(const GameInstance& g0, int x_grid_resolution,
                                  const std::vector<VectorXd>& extra_candidates) {
  const GameInstance game = normalize(g0);
  if (!game.zero_sum) throw InvalidInput("the commitment value is defined for zero-sum instances");
  const std::vector<NarrowElem> elems = narrow_elements(game, 20000);
  const std::vector<ElemCtx> ctxs = build_contexts(game, elems);
  for (const auto& c : ctxs)
    if (!c.exact) throw InvalidInput("the commitment value needs an enumerable bounded family");

  std::vector<VectorXd> xs = simplex_grid(game.rows(), x_grid_resolution);
  xs.insert(xs.end(), extra_candidates.begin(), extra_candidates.end());
  double best = -kInf;
  for (const auto& x : xs) {
    double g = kInf;
    for (const auto& ctx : ctxs) {
      // follower minimizes the upper bound; ties go to the leader
      double val = -kInf;
      for (const auto& y : follower_candidates(game, ctx, x, kTieTol))
        val = std::max(val, leader_term(ctx, x, y));
      g = std::min(g, val);
    }
    best = std::max(best, g);
  }
  return best;
}

}  // namespace olp
