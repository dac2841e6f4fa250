#pragma once

// Value supports and specificity (normalized entropy of a determining set).

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "pdep/detail/numeric.hpp"
#include "pdep/model.hpp"
#include "pdep/worlds_oracle.hpp"

namespace pdep {

struct SupportTable {
  /// Composite value -> normalized support; sums to 1.
  std::map<std::vector<Value>, double> supports;
  /// Mass before normalization.
  double total = 0.0;
  /// N in the log2(N) normalization.
  double n_effective = 0.0;
};

namespace detail {

inline void normalize(SupportTable& t) {
  for (auto& [v, s] : t.supports) s /= t.total;
}

}  // namespace detail

/// support(v) = count(v) / N over the rows of one world.
inline SupportTable support_deterministic(const DeterministicWorld& world,
                                          std::span<const std::size_t> cols) {
  if (world.rows.empty()) throw Error("undefined support: empty world");
  SupportTable t;
  for (const auto& r : world.rows) {
    std::vector<Value> key;
    for (auto c : cols) key.push_back(r.values[c]);
    t.supports[key] += 1.0;
  }
  t.total = static_cast<double>(world.rows.size());
  t.n_effective = t.total;
  detail::normalize(t);
  return t;
}

/// Probability-weighted supports over the union of all value options. N is the
/// tuple count of the relation.
inline SupportTable support_ti_union(const ProbRelation& relation,
                                     std::span<const std::size_t> cols) {
  SupportTable t;
  detail::CompensatedSum total;
  for (const auto& tuple : relation.tuples())
    for (const auto& o : tuple.options) {
      if (!o.is_value()) continue;
      std::vector<Value> key;
      for (auto c : cols) key.push_back(o.values[c]);
      t.supports[key] += o.p;
      total.add(o.p);
    }
  t.total = total.value();
  if (!(t.total > 0.0)) throw Error("undefined support: relation carries no probability mass");
  t.n_effective = static_cast<double>(relation.size());
  detail::normalize(t);
  return t;
}

/// -Σ s log2 s / log2 N, clamped to [0, 1]; 0 when N <= 1.
inline double specificity(const SupportTable& table) {
  if (table.n_effective <= 1.0) return 0.0;
  detail::CompensatedSum h;
  for (const auto& [v, s] : table.supports)
    if (s > 0.0) h.add(-s * std::log2(s));
  return std::clamp(h.value() / std::log2(table.n_effective), 0.0, 1.0);
}

inline double specificity(const ProbRelation& relation, const AttrNames& attrs) {
  return specificity(support_ti_union(relation, resolve_attrs(relation.schema(), attrs)));
}

}  // namespace pdep
