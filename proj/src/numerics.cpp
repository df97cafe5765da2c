#include "olp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace olp {

VectorXd project_simplex(const VectorXd& v) {
  const int n = static_cast<int>(v.size());
  if (n < 1) throw InvalidInput("project_simplex: empty vector");
  if (!v.allFinite()) throw InvalidInput("project_simplex: non-finite input");

  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0;
  double tau = 0.0;
  int rho = 0;
  for (int i = 0; i < n; ++i) {
    css += u[i];
    const double t = (css - 1.0) / (i + 1);
    if (u[i] - t > 0.0) {
      rho = i + 1;
      tau = t;
    }
  }
  (void)rho;
  VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = std::max(0.0, v[i] - tau);
  // Guard against accumulated rounding in the threshold.
  const double s = out.sum();
  if (s > 0.0 && std::abs(s - 1.0) > 1e-15) out /= s;
  return out;
}

bool on_simplex(const VectorXd& x, double tol) {
  if (x.size() < 1 || !x.allFinite()) return false;
  if (x.minCoeff() < -tol) return false;
  return std::abs(x.sum() - 1.0) <= tol;
}

namespace {

int first_significant(const VectorXd& col, double tol) {
  for (int i = 0; i < col.size(); ++i)
    if (std::abs(col[i]) > tol) return i;
  return -1;
}

}  // namespace

SvdFactors canonical_svd(const MatrixXd& A, double tie_tol) {
  (void)tie_tol;  // ties are handled at truncation time, not here
  if (!A.allFinite()) throw InvalidInput("canonical_svd: non-finite input");
  Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  SvdFactors f;
  f.U = svd.matrixU();
  f.sigma = svd.singularValues();
  f.V = svd.matrixV();
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  const int k = std::min(m, n);
  // Paired triplets: flip so the leading significant entry of the left vector
  // is negative (lexicographically smallest column among the two sign choices).
  for (int i = 0; i < k; ++i) {
    const int p = first_significant(f.U.col(i), 1e-12);
    if (p >= 0 && f.U(p, i) > 0.0) {
      f.U.col(i) = -f.U.col(i);
      f.V.col(i) = -f.V.col(i);
    }
  }
  // Unpaired columns only fix the orthogonal completion; same rule per side.
  for (int i = k; i < m; ++i) {
    const int p = first_significant(f.U.col(i), 1e-12);
    if (p >= 0 && f.U(p, i) > 0.0) f.U.col(i) = -f.U.col(i);
  }
  for (int i = k; i < n; ++i) {
    const int p = first_significant(f.V.col(i), 1e-12);
    if (p >= 0 && f.V(p, i) > 0.0) f.V.col(i) = -f.V.col(i);
  }
  return f;
}

int numeric_rank(const VectorXd& sigma, double rank_tol) {
  if (sigma.size() == 0) return 0;
  const double cut = rank_tol * std::max(1e-300, sigma[0]);
  int r = 0;
  for (int i = 0; i < sigma.size(); ++i)
    if (sigma[i] > cut) ++r;
  return r;
}

int numeric_rank(const MatrixXd& A, double rank_tol) {
  return numeric_rank(canonical_svd(A).sigma, rank_tol);
}

std::pair<MatrixXd, MatrixXd> null_space_bases(const MatrixXd& A, double rank_tol) {
  const SvdFactors f = canonical_svd(A);
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  const int r = numeric_rank(f.sigma, rank_tol);
  MatrixXd right = f.V.rightCols(n - r);
  MatrixXd left = f.U.rightCols(m - r);
  return {right, left};
}

MatrixXd truncated_svd(const MatrixXd& A, int r, double tie_tol, double rank_tol) {
  if (r < 0) throw InvalidInput("truncated_svd: negative rank");
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  const int k = std::min(m, n);
  if (r >= k) return A;
  const SvdFactors f = canonical_svd(A);
  // A tie across the cut makes the retained subspace ambiguous, unless the
  // discarded part is numerically zero anyway.
  const double zero_cut = rank_tol * std::max(1e-300, f.sigma[0]);
  if (r >= 1 && f.sigma[r] > zero_cut && f.sigma[r - 1] - f.sigma[r] < tie_tol) {
    throw DegenerateTie("truncated_svd: singular-value tie at the cut");
  }
  if (r == 0) return MatrixXd::Zero(m, n);
  return f.U.leftCols(r) * f.sigma.head(r).asDiagonal() * f.V.leftCols(r).transpose();
}

SubgradientReport subgradient_maximize(const ConcaveObjective& objective, int dim, double tol,
                                       long max_iters, std::uint64_t seed, double initial_step) {
  if (dim < 1) throw InvalidInput("subgradient_maximize: dim must be >= 1");
  if (initial_step <= 0.0) initial_step = 1.0;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = 1.0 + 0.1 * unif(rng);
  x = project_simplex(x);

  auto eval = [&](const VectorXd& p) {
    auto vg = objective(p);
    if (!std::isfinite(vg.first) || !vg.second.allFinite())
      throw ObjectiveError("subgradient_maximize: non-finite objective value or subgradient");
    return vg;
  };

  SubgradientReport report;
  auto best = eval(x);
  report.argmax = x;
  report.value = best.first;
  report.iterations = 1;

  if (dim == 1) {
    report.certified_gap = 0.0;
    return report;
  }

  const long stage_len = std::max<long>(100, 20L * dim);
  double last_round_gain = 0.0;
  // Rounds sweep the step from initial_step down by halving; each new round
  // restarts the sweep from the incumbent. A round that gains nothing means a
  // further round would retrace it exactly, so we stop.
  while (report.iterations < max_iters) {
    const double round_start_best = report.value;
    double step = initial_step;
    while (report.iterations < max_iters && step > 1e-15 * initial_step) {
      x = report.argmax;
      auto cur = eval(x);
      for (long t = 1; t <= stage_len && report.iterations < max_iters; ++t) {
        const double g2 = cur.second.squaredNorm();
        if (g2 > 0.0) {
          x = project_simplex(x + (step / std::sqrt(static_cast<double>(t))) * cur.second);
        }
        cur = eval(x);
        ++report.iterations;
        if (cur.first > report.value) {
          report.value = cur.first;
          report.argmax = x;
        }
      }
      step *= 0.5;
    }
    last_round_gain = report.value - round_start_best;
    if (last_round_gain <= 0.01 * tol) break;
  }
  report.certified_gap = last_round_gain;
  return report;
}

ZeroSumSolution zero_sum_value(const MatrixXd& A, double tol) {
  if (!A.allFinite()) throw InvalidInput("zero_sum_value: non-finite input");
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  if (m < 1 || n < 1) throw InvalidInput("zero_sum_value: empty matrix");

  ZeroSumSolution sol;
  if (m == 1 && n == 1) {
    sol.value = A(0, 0);
    sol.x = VectorXd::Ones(1);
    sol.y = VectorXd::Ones(1);
    return sol;
  }

  const double scale = std::max(1e-12, A.cwiseAbs().maxCoeff());
  const double eta = 0.125 / scale;

  // Optimistic hedge self-play; the averaged strategies certify the value via
  // the duality gap max_i (A ybar)_i - min_j (xbar^T A)_j.
  VectorXd cum_x = VectorXd::Zero(m), cum_y = VectorXd::Zero(n);
  VectorXd gx_prev = VectorXd::Zero(m), gy_prev = VectorXd::Zero(n);
  VectorXd xbar = VectorXd::Zero(m), ybar = VectorXd::Zero(n);
  VectorXd x = VectorXd::Constant(m, 1.0 / m), y = VectorXd::Constant(n, 1.0 / n);

  auto softmax = [](const VectorXd& z) {
    VectorXd w = (z.array() - z.maxCoeff()).exp();
    return VectorXd(w / w.sum());
  };

  double best_gap = std::numeric_limits<double>::infinity();
  double best_lo = 0.0, best_hi = 0.0;
  VectorXd best_x = x, best_y = y;

  const long T = 2000000;
  for (long t = 1; t <= T; ++t) {
    x = softmax(eta * (cum_x + gx_prev));
    y = softmax(-eta * (cum_y + gy_prev));
    VectorXd gx = A * y;        // row player's payoff per pure row
    VectorXd gy = A.transpose() * x;  // column player's loss per pure column
    cum_x += gx;
    cum_y += gy;
    gx_prev = gx;
    gy_prev = gy;
    xbar += x;
    ybar += y;

    if (t % 50 == 0 || t == T) {
      auto consider = [&](const VectorXd& px, const VectorXd& py) {
        const double hi = (A * py).maxCoeff();
        const double lo = (A.transpose() * px).minCoeff();
        const double gap = hi - lo;
        if (gap < best_gap) {
          best_gap = gap;
          best_lo = lo;
          best_hi = hi;
          best_x = px;
          best_y = py;
        }
      };
      consider(VectorXd(xbar / xbar.sum()), VectorXd(ybar / ybar.sum()));
      consider(x, y);
      if (best_gap <= 0.99 * tol) break;
    }
  }

  sol.value = 0.5 * (best_lo + best_hi);
  sol.x = best_x;
  sol.y = best_y;
  return sol;
}

}  // namespace olp
