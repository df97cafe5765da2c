#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "olp/capability.hpp"
#include "olp/numerics.hpp"

namespace olp {

struct TableEntry {
  std::string id;
  MatrixXd A;                 // row player's payoff
  std::optional<MatrixXd> B;  // column player's payoff; absent for zero-sum tables
};

// Finite perception family: a universe of named payoff profiles and an
// explicit abstraction map per level. Levels above level_cap act like
// level_cap; infinity is the identity.
struct TableFamily {
  std::vector<TableEntry> universe;
  std::map<std::pair<std::string, int>, std::string> level_map;  // (from, level) -> to
  int level_cap = 1;

  int index_of(const std::string& id) const;
  const TableEntry& entry(const std::string& id) const;
  // Image id under the abstraction map; identity at infinity.
  std::string apply(const std::string& id, const Capability& c) const;
  // Index of a universe entry whose A matrix equals u exactly, or -1.
  int find_by_matrix(const MatrixXd& u) const;
};

struct PerceptionFamily {
  enum class Kind { Masked, Quantized, LimitedRank, Table };
  Kind kind = Kind::Masked;
  double tie_tol = 1e-12;   // LimitedRank truncation-cut tie guard
  double rank_tol = 1e-9;   // LimitedRank numeric rank threshold
  std::shared_ptr<const TableFamily> table;

  static PerceptionFamily masked();
  static PerceptionFamily quantized();
  static PerceptionFamily limited_rank(double tie_tol = 1e-12, double rank_tol = 1e-9);
  static PerceptionFamily make_table(std::shared_ptr<const TableFamily> t);
};

// Decimal truncation towards zero at c digits, with a snap guard so that
// re-truncating a truncated value is exact in floating point.
double quantize_entry(double u, int c);

MatrixXd perceive(const PerceptionFamily& family, const MatrixXd& u, const Capability& c);

Capability intrinsic_capability(const PerceptionFamily& family, const MatrixXd& u);

// Membership in the concretization set: perceive(u, max(C(v), c)) == v.
bool concretization_contains(const PerceptionFamily& family, const MatrixXd& v,
                             const Capability& c, const MatrixXd& u);

std::vector<MatrixXd> sample_concretization(const PerceptionFamily& family, const MatrixXd& v,
                                            const Capability& c, int n, std::uint64_t seed);

struct NarrowSet {
  bool enumerated = false;
  std::vector<MatrixXd> elements;  // valid when enumerated
  std::function<bool(const MatrixXd&)> contains;
  std::function<std::vector<MatrixXd>(int, std::uint64_t)> sample;
};

// Perceptions a level-c2 opponent might hold, from the level-c1 player's view
// of v: {u : C(u) <= c2 and F(u, min(c1,c2)) = F(v, min(c1,c2))}.
NarrowSet narrow_set(const PerceptionFamily& family, const MatrixXd& v, const Capability& c1,
                     const Capability& c2, std::size_t cap = 1000000);

struct TableValidationReport {
  bool valid = true;
  bool odd = false;  // every entry has a negated twin with a consistent map
  std::vector<std::string> violations;
};

TableValidationReport validate_table_family(const TableFamily& table);

// Universe indices of the ids consistent with perceiving `vid` at level
// max(C(vid), c).
std::vector<int> table_concretization(const TableFamily& table, const std::string& vid,
                                      const Capability& c);

// Smallest level at which the table map fixes `id` (Infinity if none).
Capability table_intrinsic(const TableFamily& table, const std::string& id);

// Masked-family helpers shared with the bounds module.
struct MaskedProfile {
  std::vector<std::pair<int, int>> kept;    // positions kept at the governing level
  std::vector<std::pair<int, int>> masked;  // zeroed positions
  double theta = 0.0;                       // smallest kept magnitude (0 if none kept nonzero)
  bool singleton = false;                   // inverse image is {v}
};

// Profile of F^-1(v, c) for the masked family at the governing level
// max(C(v), c).
MaskedProfile masked_profile(const MatrixXd& v, const Capability& c);

}  // namespace olp
