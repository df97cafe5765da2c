#include "olp/perception.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace olp {

namespace {

bool same_shape(const MatrixXd& a, const MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

bool exact_equal(const MatrixXd& a, const MatrixXd& b) {
  return same_shape(a, b) && (a.array() == b.array()).all();
}

double pow10i(int c) { return std::pow(10.0, c); }

}  // namespace

int TableFamily::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < universe.size(); ++i)
    if (universe[i].id == id) return static_cast<int>(i);
  return -1;
}

const TableEntry& TableFamily::entry(const std::string& id) const {
  const int i = index_of(id);
  if (i < 0) throw UnknownMatrix("table family: unknown id '" + id + "'");
  return universe[static_cast<std::size_t>(i)];
}

std::string TableFamily::apply(const std::string& id, const Capability& c) const {
  if (c.is_inf()) {
    if (index_of(id) < 0) throw UnknownMatrix("table family: unknown id '" + id + "'");
    return id;
  }
  const int level = std::min(c.value(), level_cap);
  auto it = level_map.find({id, level});
  if (it == level_map.end())
    throw UnknownMatrix("table family: no map entry for ('" + id + "', " + std::to_string(level) + ")");
  return it->second;
}

int TableFamily::find_by_matrix(const MatrixXd& u) const {
  for (std::size_t i = 0; i < universe.size(); ++i)
    if (exact_equal(universe[i].A, u)) return static_cast<int>(i);
  return -1;
}

PerceptionFamily PerceptionFamily::masked() {
  PerceptionFamily f;
  f.kind = Kind::Masked;
  return f;
}

PerceptionFamily PerceptionFamily::quantized() {
  PerceptionFamily f;
  f.kind = Kind::Quantized;
  return f;
}

PerceptionFamily PerceptionFamily::limited_rank(double tie_tol, double rank_tol) {
  PerceptionFamily f;
  f.kind = Kind::LimitedRank;
  f.tie_tol = tie_tol;
  f.rank_tol = rank_tol;
  return f;
}

PerceptionFamily PerceptionFamily::make_table(std::shared_ptr<const TableFamily> t) {
  PerceptionFamily f;
  f.kind = Kind::Table;
  f.table = std::move(t);
  return f;
}

double quantize_entry(double u, int c) {
  if (!std::isfinite(u)) throw InvalidInput("quantize_entry: non-finite value");
  const double scale = pow10i(c);
  const double p = std::abs(u) * scale;
  // Beyond exactly-representable integers the digit grid is finer than the
  // float grid; truncation is the identity there.
  if (p >= 9e15) return u;
  double f = std::floor(p);
  // Snap guard: a decimal stored as the nearest double may scale to just
  // below its integer numerator.
  double margin = 1e-9 * (1.0 + p);
  if (margin > 1e-3) margin = 1e-3;
  if (p - f > 1.0 - margin) f += 1.0;
  const double mag = f / scale;
  return u < 0.0 ? -mag : mag;
}

namespace {

MatrixXd perceive_masked(const MatrixXd& u, int c) {
  const int m = static_cast<int>(u.rows());
  const int n = static_cast<int>(u.cols());
  const int total = m * n;
  const int keep = std::min(c, total);
  std::vector<int> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    const double va = std::abs(u(a / n, a % n));
    const double vb = std::abs(u(b / n, b % n));
    if (va != vb) return va > vb;
    return a < b;  // row-major preference on tied magnitudes
  });
  MatrixXd out = MatrixXd::Zero(m, n);
  for (int t = 0; t < keep; ++t) {
    const int a = idx[static_cast<std::size_t>(t)];
    out(a / n, a % n) = u(a / n, a % n);
  }
  return out;
}

MatrixXd perceive_quantized(const MatrixXd& u, int c) {
  MatrixXd out(u.rows(), u.cols());
  for (int i = 0; i < u.rows(); ++i)
    for (int j = 0; j < u.cols(); ++j) out(i, j) = quantize_entry(u(i, j), c);
  return out;
}

}  // namespace

MatrixXd perceive(const PerceptionFamily& family, const MatrixXd& u, const Capability& c) {
  if (!u.allFinite()) throw InvalidInput("perceive: non-finite payoff matrix");
  switch (family.kind) {
    case PerceptionFamily::Kind::Masked:
      return c.is_inf() ? u : perceive_masked(u, c.value());
    case PerceptionFamily::Kind::Quantized:
      return c.is_inf() ? u : perceive_quantized(u, c.value());
    case PerceptionFamily::Kind::LimitedRank:
      return c.is_inf() ? u
                        : truncated_svd(u, std::min<int>(c.value(),
                                                         std::min(u.rows(), u.cols())),
                                        family.tie_tol, family.rank_tol);
    case PerceptionFamily::Kind::Table: {
      const int i = family.table->find_by_matrix(u);
      if (i < 0) throw UnknownMatrix("perceive: matrix not in table universe");
      const std::string img = family.table->apply(family.table->universe[i].id, c);
      return family.table->entry(img).A;
    }
  }
  throw InvalidInput("perceive: unknown family");
}

Capability intrinsic_capability(const PerceptionFamily& family, const MatrixXd& u) {
  switch (family.kind) {
    case PerceptionFamily::Kind::Masked: {
      int nnz = 0;
      for (int i = 0; i < u.rows(); ++i)
        for (int j = 0; j < u.cols(); ++j)
          if (u(i, j) != 0.0) ++nnz;
      return Capability(std::max(1, nnz));
    }
    case PerceptionFamily::Kind::Quantized: {
      for (int d = 1; d <= 15; ++d) {
        if (exact_equal(perceive_quantized(u, d), u)) return Capability(d);
      }
      return Capability::infinity();
    }
    case PerceptionFamily::Kind::LimitedRank:
      return Capability(std::max(1, numeric_rank(u, family.rank_tol)));
    case PerceptionFamily::Kind::Table: {
      const int i = family.table->find_by_matrix(u);
      if (i < 0) throw UnknownMatrix("intrinsic_capability: matrix not in table universe");
      const std::string& id = family.table->universe[i].id;
      const int cap = family.table->level_cap;
      for (int l = 1; l <= cap; ++l) {
        bool fixed = true;
        for (int l2 = l; l2 <= cap && fixed; ++l2)
          fixed = family.table->apply(id, Capability(l2)) == id;
        if (fixed) return Capability(l);
      }
      return Capability::infinity();
    }
  }
  throw InvalidInput("intrinsic_capability: unknown family");
}

MaskedProfile masked_profile(const MatrixXd& v, const Capability& c) {
  MaskedProfile p;
  const int m = static_cast<int>(v.rows());
  const int n = static_cast<int>(v.cols());
  int nnz = 0;
  double theta = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      if (v(i, j) != 0.0) {
        ++nnz;
        theta = std::min(theta, std::abs(v(i, j)));
        p.kept.emplace_back(i, j);
      }
  p.theta = nnz > 0 ? theta : 0.0;
  if (c.is_inf()) {
    p.singleton = true;
    return p;
  }
  const int level = std::max(std::max(1, nnz), c.value());
  if (level > nnz || nnz == m * n) {
    // Zeros among the kept top-`level` force every unlisted entry to be zero.
    p.singleton = true;
    return p;
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      if (v(i, j) == 0.0) p.masked.emplace_back(i, j);
  p.singleton = p.masked.empty();
  return p;
}

bool concretization_contains(const PerceptionFamily& family, const MatrixXd& v,
                             const Capability& c, const MatrixXd& u) {
  if (!same_shape(u, v)) return false;
  const Capability level = max(intrinsic_capability(family, v), c);
  const MatrixXd pu = perceive(family, u, level);
  if (family.kind == PerceptionFamily::Kind::LimitedRank) {
    return (pu - v).norm() <= 1e-9 * (1.0 + v.norm());
  }
  return exact_equal(pu, v);
}

namespace {

void require_fixed_point(const PerceptionFamily& family, const MatrixXd& v, const Capability& c) {
  const Capability intrinsic = intrinsic_capability(family, v);
  if (family.kind == PerceptionFamily::Kind::Quantized && !c.is_inf() && intrinsic.is_inf())
    throw InvalidPerceived("quantized perception at a finite level must be a finite decimal");
  const Capability level = max(intrinsic, c);
  const MatrixXd pv = perceive(family, v, level);
  bool ok;
  if (family.kind == PerceptionFamily::Kind::LimitedRank) {
    ok = (pv - v).norm() <= 1e-9 * (1.0 + v.norm());
  } else {
    ok = exact_equal(pv, v);
  }
  if (!ok) throw InvalidPerceived("sample_concretization: v is not a fixed point at the governing level");
}

// Orthonormal columns spanning a random e-dimensional subspace of R^d.
MatrixXd random_orthonormal(int d, int e, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd G(d, e);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < e; ++j) G(i, j) = gauss(rng);
  Eigen::HouseholderQR<MatrixXd> qr(G);
  MatrixXd Q = qr.householderQ() * MatrixXd::Identity(d, e);
  MatrixXd R = qr.matrixQR().topRows(e).triangularView<Eigen::Upper>();
  for (int j = 0; j < e; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  return Q;
}

}  // namespace

Capability table_intrinsic(const TableFamily& table, const std::string& id) {
  for (int l = 1; l <= table.level_cap; ++l) {
    bool fixed = true;
    for (int l2 = l; l2 <= table.level_cap && fixed; ++l2)
      fixed = table.apply(id, Capability(l2)) == id;
    if (fixed) return Capability(l);
  }
  return Capability::infinity();
}

std::vector<int> table_concretization(const TableFamily& table, const std::string& vid,
                                      const Capability& c) {
  const int vi = table.index_of(vid);
  if (vi < 0) throw UnknownMatrix("table_concretization: unknown id '" + vid + "'");
  const Capability level = max(table_intrinsic(table, vid), c);
  if (level.is_inf()) return {vi};
  std::vector<int> out;
  for (std::size_t i = 0; i < table.universe.size(); ++i)
    if (table.apply(table.universe[i].id, level) == vid) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<MatrixXd> sample_concretization(const PerceptionFamily& family, const MatrixXd& v,
                                            const Capability& c, int n, std::uint64_t seed) {
  require_fixed_point(family, v, c);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<MatrixXd> out;
  out.reserve(static_cast<std::size_t>(n));

  switch (family.kind) {
    case PerceptionFamily::Kind::Masked: {
      const MaskedProfile prof = masked_profile(v, c);
      if (prof.singleton) {
        out.assign(static_cast<std::size_t>(n), v);
        return out;
      }
      const double half = prof.theta * (1.0 - 1e-9);
      for (int s = 0; s < n; ++s) {
        MatrixXd u = v;
        for (const auto& [i, j] : prof.masked) u(i, j) = (2.0 * unif(rng) - 1.0) * half;
        out.push_back(std::move(u));
      }
      return out;
    }
    case PerceptionFamily::Kind::Quantized: {
      if (c.is_inf()) {
        out.assign(static_cast<std::size_t>(n), v);
        return out;
      }
      const Capability level = max(intrinsic_capability(family, v), c);
      const double width = std::pow(10.0, -level.value()) * (1.0 - 1e-9);
      for (int s = 0; s < n; ++s) {
        MatrixXd u = v;
        for (int i = 0; i < v.rows(); ++i)
          for (int j = 0; j < v.cols(); ++j) {
            const double a = v(i, j);
            if (a > 0.0)
              u(i, j) = a + unif(rng) * width;
            else if (a < 0.0)
              u(i, j) = a - unif(rng) * width;
            else
              u(i, j) = (2.0 * unif(rng) - 1.0) * width;
          }
        out.push_back(std::move(u));
      }
      return out;
    }
    case PerceptionFamily::Kind::LimitedRank: {
      const int m = static_cast<int>(v.rows());
      const int nn = static_cast<int>(v.cols());
      const int kmax = std::min(m, nn);
      const int r = numeric_rank(v, family.rank_tol);
      const int level = c.is_inf() ? kmax : std::max(std::max(1, r), c.value());
      if (c.is_inf() || level > r || level >= kmax) {
        out.assign(static_cast<std::size_t>(n), v);
        return out;
      }
      const SvdFactors f = canonical_svd(v);
      const double sigma_last = f.sigma[r - 1];
      const MatrixXd W = f.U.rightCols(m - r);
      const MatrixXd N = f.V.rightCols(nn - r);
      const int emax = kmax - r;
      std::uniform_int_distribution<int> extra_count(0, emax);
      for (int s = 0; s < n; ++s) {
        const int e = extra_count(rng);
        if (e == 0) {
          out.push_back(v);
          continue;
        }
        const MatrixXd Ql = random_orthonormal(m - r, e, rng);
        const MatrixXd Qr = random_orthonormal(nn - r, e, rng);
        VectorXd extra(e);
        for (int t = 0; t < e; ++t) extra[t] = unif(rng) * sigma_last * (1.0 - 1e-9);
        out.push_back(v + (W * Ql) * extra.asDiagonal() * (N * Qr).transpose());
      }
      return out;
    }
    case PerceptionFamily::Kind::Table: {
      const TableFamily& table = *family.table;
      const int vi = table.find_by_matrix(v);
      if (vi < 0) throw UnknownMatrix("sample_concretization: matrix not in table universe");
      const std::vector<int> inv =
          table_concretization(table, table.universe[static_cast<std::size_t>(vi)].id, c);
      std::uniform_int_distribution<std::size_t> pick(0, inv.size() - 1);
      for (int s = 0; s < n; ++s)
        out.push_back(table.universe[static_cast<std::size_t>(inv[pick(rng)])].A);
      return out;
    }
  }
  throw InvalidInput("sample_concretization: unknown family");
}

namespace {

// Enumerates the level-c2 refinements of a single level-c1 quantized entry.
std::vector<double> quantized_entry_refinements(double a, int c1, int c2) {
  const double scale2 = pow10i(c2);
  const long k = static_cast<long>(std::llround(std::pow(10.0, c2 - c1)));
  std::vector<double> vals;
  if (a == 0.0) {
    vals.reserve(static_cast<std::size_t>(2 * k - 1));
    for (long t = -(k - 1); t <= k - 1; ++t) vals.push_back(static_cast<double>(t) / scale2);
    return vals;
  }
  const double p = std::abs(a) * scale2;
  double f = std::floor(p);
  double margin = 1e-9 * (1.0 + p);
  if (margin > 1e-3) margin = 1e-3;
  if (p - f > 1.0 - margin) f += 1.0;
  vals.reserve(static_cast<std::size_t>(k));
  for (long t = 0; t < k; ++t) {
    const double mag = (f + static_cast<double>(t)) / scale2;
    vals.push_back(a > 0.0 ? mag : -mag);
  }
  return vals;
}

}  // namespace

NarrowSet narrow_set(const PerceptionFamily& family, const MatrixXd& v, const Capability& c1,
                     const Capability& c2, std::size_t cap) {
  NarrowSet set;
  const Capability cmin = min(c1, c2);
  const MatrixXd base = perceive(family, v, cmin);

  auto member = [family, base, cmin, c2](const MatrixXd& u) {
    if (!(intrinsic_capability(family, u) <= c2)) return false;
    const MatrixXd pu = perceive(family, u, cmin);
    if (family.kind == PerceptionFamily::Kind::LimitedRank)
      return (pu - base).norm() <= 1e-9 * (1.0 + base.norm());
    return exact_equal(pu, base);
  };
  set.contains = member;

  if (c2 <= c1) {
    set.enumerated = true;
    set.elements = {perceive(family, v, c2)};
    MatrixXd only = set.elements[0];
    set.sample = [only](int n, std::uint64_t) {
      return std::vector<MatrixXd>(static_cast<std::size_t>(n), only);
    };
    return set;
  }

  if (family.kind == PerceptionFamily::Kind::Table) {
    const TableFamily& table = *family.table;
    const int vi = table.find_by_matrix(v);
    if (vi < 0) throw UnknownMatrix("narrow_set: matrix not in table universe");
    const std::string bimg = table.apply(table.universe[static_cast<std::size_t>(vi)].id, cmin);
    set.enumerated = true;
    for (const auto& e : table.universe) {
      if (!(intrinsic_capability(family, e.A) <= c2)) continue;
      if (table.apply(e.id, cmin) == bimg) set.elements.push_back(e.A);
    }
    if (set.elements.size() > cap) throw TooLarge("narrow_set: table enumeration exceeds cap");
    auto elems = set.elements;
    set.sample = [elems](int n, std::uint64_t seed) {
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<std::size_t> pick(0, elems.size() - 1);
      std::vector<MatrixXd> out;
      for (int s = 0; s < n; ++s) out.push_back(elems[pick(rng)]);
      return out;
    };
    return set;
  }

  if (family.kind == PerceptionFamily::Kind::Quantized && !c2.is_inf()) {
    const int l1 = cmin.value();
    const int l2 = c2.value();
    std::vector<std::vector<double>> per_entry;
    std::size_t count = 1;
    for (int i = 0; i < base.rows(); ++i)
      for (int j = 0; j < base.cols(); ++j) {
        per_entry.push_back(quantized_entry_refinements(base(i, j), l1, l2));
        if (count > cap / per_entry.back().size() + 1) throw TooLarge("narrow_set: enumeration exceeds cap");
        count *= per_entry.back().size();
      }
    if (count > cap) throw TooLarge("narrow_set: enumeration exceeds cap");
    set.enumerated = true;
    set.elements.reserve(count);
    std::vector<std::size_t> digit(per_entry.size(), 0);
    while (true) {
      MatrixXd u(base.rows(), base.cols());
      std::size_t e = 0;
      for (int i = 0; i < base.rows(); ++i)
        for (int j = 0; j < base.cols(); ++j) {
          u(i, j) = per_entry[e][digit[e]];
          ++e;
        }
      set.elements.push_back(std::move(u));
      std::size_t pos = 0;
      while (pos < digit.size()) {
        if (++digit[pos] < per_entry[pos].size()) break;
        digit[pos] = 0;
        ++pos;
      }
      if (pos == digit.size()) break;
    }
    auto elems = set.elements;
    set.sample = [elems](int n, std::uint64_t seed) {
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<std::size_t> pick(0, elems.size() - 1);
      std::vector<MatrixXd> out;
      for (int s = 0; s < n; ++s) out.push_back(elems[pick(rng)]);
      return out;
    };
    return set;
  }

  // Parametric families: masked, limited-rank, quantized with infinite c2.
  set.enumerated = false;
  if (family.kind == PerceptionFamily::Kind::Masked) {
    const MaskedProfile prof = masked_profile(base, cmin);
    // Fills hide below the kept entries only when the base perception already
    // saturates level c1; otherwise masking at c1 would keep them.
    int budget = 0;
    if (static_cast<int>(prof.kept.size()) == cmin.value()) {
      budget = c2.is_inf() ? static_cast<int>(prof.masked.size())
                           : c2.value() - cmin.value();
    }
    set.sample = [family, base, prof, budget](int n, std::uint64_t seed) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      std::vector<MatrixXd> out;
      if (prof.singleton || budget == 0) {
        out.assign(static_cast<std::size_t>(n), base);
        return out;
      }
      const double half = prof.theta * (1.0 - 1e-9);
      for (int s = 0; s < n; ++s) {
        MatrixXd u = base;
        std::vector<std::pair<int, int>> pool = prof.masked;
        std::shuffle(pool.begin(), pool.end(), rng);
        const int fills = std::uniform_int_distribution<int>(
            0, std::min<int>(budget, static_cast<int>(pool.size())))(rng);
        for (int t = 0; t < fills; ++t) {
          double val = 0.0;
          while (val == 0.0) val = (2.0 * unif(rng) - 1.0) * half;
          u(pool[static_cast<std::size_t>(t)].first, pool[static_cast<std::size_t>(t)].second) = val;
        }
        out.push_back(std::move(u));
      }
      return out;
    };
    return set;
  }
  if (family.kind == PerceptionFamily::Kind::LimitedRank) {
    set.sample = [family, base, cmin, c2](int n, std::uint64_t seed) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      const int m = static_cast<int>(base.rows());
      const int nn = static_cast<int>(base.cols());
      const int kmax = std::min(m, nn);
      const int r = numeric_rank(base, family.rank_tol);
      // Extra directions stay below the level-c1 cut only when the cut sits
      // exactly at the rank.
      const int rank_budget =
          (r == cmin.value()) ? (c2.is_inf() ? kmax : std::min(kmax, c2.value())) - r : 0;
      std::vector<MatrixXd> out;
      if (rank_budget <= 0 || r == 0) {
        out.assign(static_cast<std::size_t>(n), base);
        return out;
      }
      const SvdFactors f = canonical_svd(base);
      const double sigma_last = f.sigma[r - 1];
      const MatrixXd W = f.U.rightCols(m - r);
      const MatrixXd N = f.V.rightCols(nn - r);
      std::uniform_int_distribution<int> extra_count(0, rank_budget);
      for (int s = 0; s < n; ++s) {
        const int e = extra_count(rng);
        if (e == 0) {
          out.push_back(base);
          continue;
        }
        const MatrixXd Ql = random_orthonormal(m - r, e, rng);
        const MatrixXd Qr = random_orthonormal(nn - r, e, rng);
        VectorXd extra(e);
        for (int t = 0; t < e; ++t) extra[t] = unif(rng) * sigma_last * (1.0 - 1e-9);
        out.push_back(base + (W * Ql) * extra.asDiagonal() * (N * Qr).transpose());
      }
      return out;
    };
    return set;
  }
  // Quantized with infinite opponent capability.
  set.sample = [family, base, cmin](int n, std::uint64_t seed) {
    return sample_concretization(family, base, cmin, n, seed);
  };
  return set;
}

TableValidationReport validate_table_family(const TableFamily& table) {
  TableValidationReport report;
  auto fail = [&report](const std::string& msg) {
    report.valid = false;
    report.violations.push_back(msg);
  };

  if (table.level_cap < 1) fail("level_cap must be >= 1");
  if (table.universe.empty()) fail("empty universe");

  // Shape and duplicate-id checks.
  for (std::size_t i = 0; i < table.universe.size(); ++i) {
    for (std::size_t j = i + 1; j < table.universe.size(); ++j)
      if (table.universe[i].id == table.universe[j].id)
        fail("duplicate id '" + table.universe[i].id + "'");
    if (table.universe[i].B &&
        (table.universe[i].B->rows() != table.universe[i].A.rows() ||
         table.universe[i].B->cols() != table.universe[i].A.cols()))
      fail("entry '" + table.universe[i].id + "': A/B shape mismatch");
  }
  if (!report.valid) return report;

  // Totality.
  for (const auto& e : table.universe)
    for (int l = 1; l <= table.level_cap; ++l) {
      auto it = table.level_map.find({e.id, l});
      if (it == table.level_map.end()) {
        fail("missing map entry ('" + e.id + "', " + std::to_string(l) + ")");
      } else if (table.index_of(it->second) < 0) {
        fail("map target '" + it->second + "' not in universe");
      }
    }
  if (!report.valid) return report;

  // Path independence over all level pairs.
  for (const auto& e : table.universe)
    for (int l1 = 1; l1 <= table.level_cap; ++l1)
      for (int l2 = 1; l2 <= table.level_cap; ++l2) {
        const std::string two_step = table.apply(table.apply(e.id, Capability(l1)), Capability(l2));
        const std::string direct = table.apply(e.id, Capability(std::min(l1, l2)));
        if (two_step != direct)
          fail("path independence violated at ('" + e.id + "', " + std::to_string(l1) + ", " +
               std::to_string(l2) + ")");
      }

  // Any id fixed at some level must stay fixed at level_cap.
  for (const auto& e : table.universe) {
    bool fixed_somewhere = false;
    for (int l = 1; l <= table.level_cap; ++l)
      if (table.apply(e.id, Capability(l)) == e.id) fixed_somewhere = true;
    if (fixed_somewhere && table.apply(e.id, Capability(table.level_cap)) != e.id)
      fail("id '" + e.id + "' fixed below level_cap but not at level_cap");
  }

  // Oddness: negated twin with a sign-consistent map.
  report.odd = true;
  for (const auto& e : table.universe) {
    int neg = -1;
    for (std::size_t j = 0; j < table.universe.size(); ++j) {
      const TableEntry& o = table.universe[j];
      if (!exact_equal(o.A, MatrixXd(-e.A))) continue;
      if (e.B.has_value() != o.B.has_value()) continue;
      if (e.B && !exact_equal(*o.B, MatrixXd(-*e.B))) continue;
      neg = static_cast<int>(j);
      break;
    }
    if (neg < 0) {
      report.odd = false;
      break;
    }
    for (int l = 1; l <= table.level_cap && report.odd; ++l) {
      const MatrixXd img = table.entry(table.apply(e.id, Capability(l))).A;
      const MatrixXd nimg =
          table.entry(table.apply(table.universe[static_cast<std::size_t>(neg)].id, Capability(l))).A;
      if (!exact_equal(nimg, MatrixXd(-img))) report.odd = false;
    }
    if (!report.odd) break;
  }
  return report;
}

}  // namespace olp
