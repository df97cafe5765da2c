#include "olp/bounds.hpp"

#include <cmath>
#include <limits>

namespace olp {

namespace {

void check_strategies(const MatrixXd& v, const VectorXd& x, const VectorXd& y) {
  if (x.size() != v.rows() || y.size() != v.cols())
    throw InvalidInput("payoff bounds: strategy dimensions do not match the matrix");
  if (!on_simplex(x) || !on_simplex(y))
    throw InvalidInput("payoff bounds: strategies must lie on their simplices");
}

void check_fixed_point(const PerceptionFamily& family, const MatrixXd& v, const Capability& c) {
  const Capability intrinsic = intrinsic_capability(family, v);
  if (family.kind == PerceptionFamily::Kind::Quantized && !c.is_inf() && intrinsic.is_inf())
    throw InvalidPerceived("quantized perception at a finite level must be a finite decimal");
  const Capability level = max(intrinsic, c);
  const MatrixXd pv = perceive(family, v, level);
  bool ok;
  if (family.kind == PerceptionFamily::Kind::LimitedRank) {
    ok = (pv - v).norm() <= 1e-9 * (1.0 + v.norm());
  } else {
    ok = pv.rows() == v.rows() && pv.cols() == v.cols() && (pv.array() == v.array()).all();
  }
  if (!ok) throw InvalidPerceived("payoff bounds: v is not a fixed point at the governing level");
}

// Endpoint matrices of the per-entry payoff intervals for the bilinear
// families; for limited rank returns (v, v) and the caller adds the
// uncertainty term.
struct EndpointMatrices {
  MatrixXd lo;
  MatrixXd hi;
  bool bilinear = true;
};

EndpointMatrices endpoint_matrices(const PerceptionFamily& family, const MatrixXd& v,
                                   const Capability& c) {
  EndpointMatrices e;
  switch (family.kind) {
    case PerceptionFamily::Kind::Masked: {
      const MaskedProfile prof = masked_profile(v, c);
      e.lo = v;
      e.hi = v;
      if (!prof.singleton) {
        for (const auto& [i, j] : prof.masked) {
          e.lo(i, j) = v(i, j) - prof.theta;
          e.hi(i, j) = v(i, j) + prof.theta;
        }
      }
      return e;
    }
    case PerceptionFamily::Kind::Quantized: {
      e.lo = v;
      e.hi = v;
      if (c.is_inf()) return e;
      const Capability level = max(intrinsic_capability(family, v), c);
      const double w = std::pow(10.0, -level.value());
      for (int i = 0; i < v.rows(); ++i)
        for (int j = 0; j < v.cols(); ++j) {
          if (v(i, j) <= 0.0) e.lo(i, j) = v(i, j) - w;
          if (v(i, j) >= 0.0) e.hi(i, j) = v(i, j) + w;
        }
      return e;
    }
    default:
      e.bilinear = false;
      return e;
  }
}

struct LimitedRankCtx {
  MatrixXd W;  // left null basis
  MatrixXd N;  // right null basis
  double sigma_cut = 0.0;
};

LimitedRankCtx limited_rank_ctx(const MatrixXd& v, const Capability& c, double rank_tol) {
  LimitedRankCtx ctx;
  auto [right, left] = null_space_bases(v, rank_tol);
  ctx.N = right;
  ctx.W = left;
  const int kmax = static_cast<int>(std::min(v.rows(), v.cols()));
  if (!c.is_inf() && c.value() <= kmax) {
    const SvdFactors f = canonical_svd(v);
    const int r = numeric_rank(f.sigma, rank_tol);
    ctx.sigma_cut = (c.value() <= r) ? f.sigma[c.value() - 1] : 0.0;
  }
  return ctx;
}

}  // namespace

double expected_payoff(const MatrixXd& u, const VectorXd& x, const VectorXd& y) {
  if (x.size() != u.rows() || y.size() != u.cols())
    throw InvalidInput("expected_payoff: dimension mismatch");
  return x.dot(u * y);
}

double uncertainty_limited_rank(const MatrixXd& A, const Capability& c, const VectorXd& x,
                                const VectorXd& y, double rank_tol) {
  const LimitedRankCtx ctx = limited_rank_ctx(A, c, rank_tol);
  if (ctx.sigma_cut == 0.0) return 0.0;
  return ctx.sigma_cut * (ctx.W.transpose() * x).norm() * (ctx.N.transpose() * y).norm();
}

PayoffBounds payoff_bounds(const PerceptionFamily& family, const MatrixXd& v, const Capability& c,
                           const VectorXd& x, const VectorXd& y) {
  check_strategies(v, x, y);
  check_fixed_point(family, v, c);
  PayoffBounds b;
  switch (family.kind) {
    case PerceptionFamily::Kind::Masked:
    case PerceptionFamily::Kind::Quantized: {
      const EndpointMatrices e = endpoint_matrices(family, v, c);
      b.lower = expected_payoff(e.lo, x, y);
      b.upper = expected_payoff(e.hi, x, y);
      return b;
    }
    case PerceptionFamily::Kind::LimitedRank: {
      const double mid = expected_payoff(v, x, y);
      const double unc = uncertainty_limited_rank(v, c, x, y, family.rank_tol);
      b.lower = mid - unc;
      b.upper = mid + unc;
      return b;
    }
    case PerceptionFamily::Kind::Table: {
      const TableFamily& table = *family.table;
      const int vi = table.find_by_matrix(v);
      if (vi < 0) throw UnknownMatrix("payoff_bounds: matrix not in table universe");
      const std::vector<int> inv =
          table_concretization(table, table.universe[static_cast<std::size_t>(vi)].id, c);
      b.lower = std::numeric_limits<double>::infinity();
      b.upper = -std::numeric_limits<double>::infinity();
      for (int z : inv) {
        const double p = expected_payoff(table.universe[static_cast<std::size_t>(z)].A, x, y);
        b.lower = std::min(b.lower, p);
        b.upper = std::max(b.upper, p);
      }
      return b;
    }
  }
  throw InvalidInput("payoff_bounds: unknown family");
}

MatrixXd extremal_concretization_limited_rank(const MatrixXd& A, int r, const VectorXd& x,
                                              const VectorXd& y, double q, double rank_tol) {
  const int kmax = static_cast<int>(std::min(A.rows(), A.cols()));
  if (r < 1 || r >= kmax) throw InvalidInput("extremal concretization: need 1 <= r < min(m,n)");
  const SvdFactors f = canonical_svd(A);
  if (numeric_rank(f.sigma, rank_tol) != r)
    throw InvalidInput("extremal concretization: rank(A) != r");
  const double sigma_r = f.sigma[r - 1];
  if (std::abs(q) >= sigma_r)
    throw InvalidPerturbation("extremal concretization: |q| must be < sigma_r(A)");
  const MatrixXd W = f.U.rightCols(A.rows() - r);
  const MatrixXd N = f.V.rightCols(A.cols() - r);
  const VectorXd wx = W.transpose() * x;
  const VectorXd ny = N.transpose() * y;
  const double s = wx.norm();
  const double t = ny.norm();
  if (s <= 1e-12 || t <= 1e-12)
    throw DegenerateDirection("extremal concretization: x or y has no null-space component");
  const VectorXd xhat = (W * wx) / s;
  const VectorXd yhat = (N * ny) / t;
  return A + q * xhat * yhat.transpose();
}

PayoffBounds bounds_sampling_oracle(const PerceptionFamily& family, const MatrixXd& v,
                                    const Capability& c, const VectorXd& x, const VectorXd& y,
                                    int n, std::uint64_t seed) {
  check_strategies(v, x, y);
  PayoffBounds est;
  est.lower = std::numeric_limits<double>::infinity();
  est.upper = -std::numeric_limits<double>::infinity();
  auto absorb = [&](const MatrixXd& u) {
    const double p = expected_payoff(u, x, y);
    est.lower = std::min(est.lower, p);
    est.upper = std::max(est.upper, p);
  };

  if (family.kind == PerceptionFamily::Kind::Table) {
    const TableFamily& table = *family.table;
    const int vi = table.find_by_matrix(v);
    if (vi < 0) throw UnknownMatrix("bounds_sampling_oracle: matrix not in table universe");
    for (int z : table_concretization(table, table.universe[static_cast<std::size_t>(vi)].id, c))
      absorb(table.universe[static_cast<std::size_t>(z)].A);
    return est;
  }

  for (const MatrixXd& u : sample_concretization(family, v, c, n, seed)) absorb(u);

  // Targeted extremal fills.
  switch (family.kind) {
    case PerceptionFamily::Kind::Masked: {
      const MaskedProfile prof = masked_profile(v, c);
      if (!prof.singleton) {
        const double half = prof.theta * (1.0 - 1e-9);
        MatrixXd lo = v, hi = v;
        for (const auto& [i, j] : prof.masked) {
          lo(i, j) = -half;
          hi(i, j) = half;
        }
        absorb(lo);
        absorb(hi);
      }
      break;
    }
    case PerceptionFamily::Kind::Quantized: {
      if (!c.is_inf()) {
        const Capability level = max(intrinsic_capability(family, v), c);
        const double w = std::pow(10.0, -level.value()) * (1.0 - 1e-9);
        MatrixXd lo = v, hi = v;
        for (int i = 0; i < v.rows(); ++i)
          for (int j = 0; j < v.cols(); ++j) {
            if (v(i, j) <= 0.0) lo(i, j) = v(i, j) - w;
            if (v(i, j) >= 0.0) hi(i, j) = v(i, j) + w;
          }
        absorb(lo);
        absorb(hi);
      }
      break;
    }
    case PerceptionFamily::Kind::LimitedRank: {
      const int kmax = static_cast<int>(std::min(v.rows(), v.cols()));
      const int r = numeric_rank(v, family.rank_tol);
      if (!c.is_inf() && c.value() == r && r < kmax) {
        const double q = canonical_svd(v).sigma[r - 1] * (1.0 - 1e-9);
        try {
          absorb(extremal_concretization_limited_rank(v, r, x, y, q, family.rank_tol));
          absorb(extremal_concretization_limited_rank(v, r, x, y, -q, family.rank_tol));
        } catch (const DegenerateDirection&) {
          // payoff cannot be moved along the null directions; samples suffice
        }
      }
      break;
    }
    default:
      break;
  }
  return est;
}

std::pair<double, VectorXd> lower_bound_with_grad_x(const PerceptionFamily& family,
                                                    const MatrixXd& v, const Capability& c,
                                                    const VectorXd& x, const VectorXd& y) {
  switch (family.kind) {
    case PerceptionFamily::Kind::Masked:
    case PerceptionFamily::Kind::Quantized: {
      const EndpointMatrices e = endpoint_matrices(family, v, c);
      const VectorXd g = e.lo * y;
      return {x.dot(g), g};
    }
    case PerceptionFamily::Kind::LimitedRank: {
      const LimitedRankCtx ctx = limited_rank_ctx(v, c, family.rank_tol);
      const VectorXd vy = v * y;
      double value = x.dot(vy);
      VectorXd g = vy;
      if (ctx.sigma_cut > 0.0) {
        const VectorXd wx = ctx.W.transpose() * x;
        const double s = wx.norm();
        const double t = (ctx.N.transpose() * y).norm();
        value -= ctx.sigma_cut * s * t;
        if (s > 0.0) g -= (ctx.sigma_cut * t / s) * (ctx.W * wx);
      }
      return {value, g};
    }
    case PerceptionFamily::Kind::Table: {
      const TableFamily& table = *family.table;
      const int vi = table.find_by_matrix(v);
      if (vi < 0) throw UnknownMatrix("lower_bound_with_grad_x: matrix not in table universe");
      const std::vector<int> inv =
          table_concretization(table, table.universe[static_cast<std::size_t>(vi)].id, c);
      double best = std::numeric_limits<double>::infinity();
      for (int z : inv)
        best = std::min(best, expected_payoff(table.universe[static_cast<std::size_t>(z)].A, x, y));
      for (int z : inv) {
        const MatrixXd& A = table.universe[static_cast<std::size_t>(z)].A;
        if (expected_payoff(A, x, y) <= best + 1e-10) return {best, VectorXd(A * y)};
      }
      throw InvalidInput("lower_bound_with_grad_x: empty inverse image");
    }
  }
  throw InvalidInput("lower_bound_with_grad_x: unknown family");
}

std::pair<double, VectorXd> lower_bound_with_grad_y(const PerceptionFamily& family,
                                                    const MatrixXd& v, const Capability& c,
                                                    const VectorXd& x, const VectorXd& y) {
  switch (family.kind) {
    case PerceptionFamily::Kind::Masked:
    case PerceptionFamily::Kind::Quantized: {
      const EndpointMatrices e = endpoint_matrices(family, v, c);
      const VectorXd g = e.lo.transpose() * x;
      return {y.dot(g), g};
    }
    case PerceptionFamily::Kind::LimitedRank: {
      const LimitedRankCtx ctx = limited_rank_ctx(v, c, family.rank_tol);
      const VectorXd vtx = v.transpose() * x;
      double value = y.dot(vtx);
      VectorXd g = vtx;
      if (ctx.sigma_cut > 0.0) {
        const double s = (ctx.W.transpose() * x).norm();
        const VectorXd ny = ctx.N.transpose() * y;
        const double t = ny.norm();
        value -= ctx.sigma_cut * s * t;
        if (t > 0.0) g -= (ctx.sigma_cut * s / t) * (ctx.N * ny);
      }
      return {value, g};
    }
    case PerceptionFamily::Kind::Table: {
      const TableFamily& table = *family.table;
      const int vi = table.find_by_matrix(v);
      if (vi < 0) throw UnknownMatrix("lower_bound_with_grad_y: matrix not in table universe");
      const std::vector<int> inv =
          table_concretization(table, table.universe[static_cast<std::size_t>(vi)].id, c);
      double best = std::numeric_limits<double>::infinity();
      for (int z : inv)
        best = std::min(best, expected_payoff(table.universe[static_cast<std::size_t>(z)].A, x, y));
      for (int z : inv) {
        const MatrixXd& A = table.universe[static_cast<std::size_t>(z)].A;
        if (expected_payoff(A, x, y) <= best + 1e-10) return {best, VectorXd(A.transpose() * x)};
      }
      throw InvalidInput("lower_bound_with_grad_y: empty inverse image");
    }
  }
  throw InvalidInput("lower_bound_with_grad_y: unknown family");
}

std::pair<double, VectorXd> upper_bound_with_grad_y(const PerceptionFamily& family,
                                                    const MatrixXd& v, const Capability& c,
                                                    const VectorXd& x, const VectorXd& y) {
  switch (family.kind) {
    case PerceptionFamily::Kind::Masked:
    case PerceptionFamily::Kind::Quantized: {
      const EndpointMatrices e = endpoint_matrices(family, v, c);
      const VectorXd g = e.hi.transpose() * x;
      return {y.dot(g), g};
    }
    case PerceptionFamily::Kind::LimitedRank: {
      const LimitedRankCtx ctx = limited_rank_ctx(v, c, family.rank_tol);
      const VectorXd vtx = v.transpose() * x;
      double value = y.dot(vtx);
      VectorXd g = vtx;
      if (ctx.sigma_cut > 0.0) {
        const double s = (ctx.W.transpose() * x).norm();
        const VectorXd ny = ctx.N.transpose() * y;
        const double t = ny.norm();
        value += ctx.sigma_cut * s * t;
        if (t > 0.0) g += (ctx.sigma_cut * s / t) * (ctx.N * ny);
      }
      return {value, g};
    }
    case PerceptionFamily::Kind::Table: {
      const TableFamily& table = *family.table;
      const int vi = table.find_by_matrix(v);
      if (vi < 0) throw UnknownMatrix("upper_bound_with_grad_y: matrix not in table universe");
      const std::vector<int> inv =
          table_concretization(table, table.universe[static_cast<std::size_t>(vi)].id, c);
      double best = -std::numeric_limits<double>::infinity();
      for (int z : inv)
        best = std::max(best, expected_payoff(table.universe[static_cast<std::size_t>(z)].A, x, y));
      for (int z : inv) {
        const MatrixXd& A = table.universe[static_cast<std::size_t>(z)].A;
        if (expected_payoff(A, x, y) >= best - 1e-10) return {best, VectorXd(A.transpose() * x)};
      }
      throw InvalidInput("upper_bound_with_grad_y: empty inverse image");
    }
  }
  throw InvalidInput("upper_bound_with_grad_y: unknown family");
}

}  // namespace olp
