#pragma once

// Brute-force ground truth: enumerate every possible world of a small relation
// and evaluate the deterministic dependency in each one.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdep/detail/numeric.hpp"
#include "pdep/model.hpp"

namespace pdep {

struct WorldRow {
  std::string key;
  std::vector<Value> values;
  /// Row came from a VIOLATES-marked option.
  bool violates = false;
};

struct DeterministicWorld {
  std::vector<WorldRow> rows;
  double prob = 1.0;
};

struct OracleOptions {
  double world_cap = static_cast<double>(std::uint64_t{1} << 24);
};

namespace detail {

struct WorldChoice {
  const OptionAssignment* option;  // nullptr: the tuple is absent
  double p;
};

/// Per-tuple alternatives. TI tuples are present with p and absent with 1 - p.
inline std::vector<std::vector<WorldChoice>> world_choices(const ProbRelation& relation) {
  std::vector<std::vector<WorldChoice>> out;
  out.reserve(relation.size());
  for (const auto& t : relation.tuples()) {
    std::vector<WorldChoice> c;
    for (const auto& o : t.options) c.push_back({&o, o.p});
    if (relation.kind() == RelationKind::kTi && t.options.size() == 1 && t.options[0].p < 1.0)
      c.push_back({nullptr, 1.0 - t.options[0].p});
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace detail

/// Product of per-tuple alternative counts, as a double so it cannot overflow.
inline double world_count(const ProbRelation& relation) {
  double n = 1.0;
  for (const auto& c : detail::world_choices(relation)) n *= static_cast<double>(c.size());
  return n;
}

/// Streams the possible worlds of `relation` in odometer order (last tuple
/// varies fastest).
class WorldEnumerator {
 public:
  explicit WorldEnumerator(const ProbRelation& relation, OracleOptions opts = {})
      : relation_(&relation), choices_(detail::world_choices(relation)) {
    const double n = world_count(relation);
    if (n > opts.world_cap) throw WorldCapExceeded(n, opts.world_cap);
    index_.assign(choices_.size(), 0);
    for (const auto& c : choices_)
      if (c.empty()) done_ = true;
  }

  bool next(DeterministicWorld& out) {
    if (done_) return false;
    out.rows.clear();
    out.prob = 1.0;
    for (std::size_t i = 0; i < choices_.size(); ++i) {
      const auto& c = choices_[i][index_[i]];
      out.prob *= c.p;
      if (!c.option || c.option->marker == Marker::kIgnored) continue;
      out.rows.push_back({relation_->tuples()[i].key, c.option->values,
                          c.option->marker == Marker::kViolates});
    }
    std::size_t i = choices_.size();
    while (i > 0) {
      --i;
      if (++index_[i] < choices_[i].size()) return true;
      index_[i] = 0;
    }
    done_ = true;
    return true;
  }

 private:
  const ProbRelation* relation_;
  std::vector<std::vector<detail::WorldChoice>> choices_;
  std::vector<std::size_t> index_;
  bool done_ = false;
};

inline std::vector<DeterministicWorld> enumerate_worlds(const ProbRelation& relation,
                                                        OracleOptions opts = {}) {
  std::vector<DeterministicWorld> out;
  WorldEnumerator e(relation, opts);
  DeterministicWorld w;
  while (e.next(w)) out.push_back(w);
  return out;
}

namespace detail {

using ValueKey = std::vector<std::string_view>;

inline ValueKey pick(const WorldRow& r, std::span<const std::size_t> cols) {
  ValueKey k;
  k.reserve(cols.size());
  for (auto c : cols) k.emplace_back(r.values[c]);
  return k;
}

inline double afd_over(const std::vector<const WorldRow*>& rows, std::span<const std::size_t> x,
                       std::span<const std::size_t> y) {
  if (rows.empty()) return 1.0;
  std::map<ValueKey, std::map<ValueKey, std::size_t>> counts;
  for (const auto* r : rows) ++counts[pick(*r, x)][pick(*r, y)];
  std::size_t kept = 0;
  for (const auto& [xv, ys] : counts) {
    std::size_t best = 0;
    for (const auto& [yv, n] : ys) best = std::max(best, n);
    kept += best;
  }
  return static_cast<double>(kept) / static_cast<double>(rows.size());
}

inline bool fd_over(const std::vector<const WorldRow*>& rows, std::span<const std::size_t> x,
                    std::span<const std::size_t> y) {
  std::map<ValueKey, ValueKey> seen;
  for (const auto* r : rows) {
    auto [it, inserted] = seen.try_emplace(pick(*r, x), pick(*r, y));
    if (!inserted && it->second != pick(*r, y)) return false;
  }
  return true;
}

enum class RowMatch { kIgnored, kMatched, kViolates };

/// `tableau` columns must be aligned with x then y.
inline RowMatch match_row(const WorldRow& r, std::span<const std::size_t> x,
                          std::span<const std::size_t> y, const PatternTableau& tableau) {
  if (r.violates) return RowMatch::kViolates;
  bool any = false;
  for (const auto& tr : tableau.rows) {
    bool x_ok = true;
    for (std::size_t i = 0; i < x.size() && x_ok; ++i)
      x_ok = !tr[i] || *tr[i] == r.values[x[i]];
    if (!x_ok) continue;
    any = true;
    for (std::size_t j = 0; j < y.size(); ++j) {
      const auto& cell = tr[x.size() + j];
      if (cell && *cell != r.values[y[j]]) return RowMatch::kViolates;
    }
  }
  return any ? RowMatch::kMatched : RowMatch::kIgnored;
}

}  // namespace detail

/// No two rows agree on x and differ on y. A VIOLATES row fails outright.
inline bool fd_holds(const DeterministicWorld& world, std::span<const std::size_t> x,
                     std::span<const std::size_t> y) {
  std::vector<const WorldRow*> rows;
  for (const auto& r : world.rows) {
    if (r.violates) return false;
    rows.push_back(&r);
  }
  return detail::fd_over(rows, x, y);
}

/// Σ_x max_y count(x, y) / N over the non-VIOLATES rows; 1 for an empty world.
inline double afd_confidence(const DeterministicWorld& world, std::span<const std::size_t> x,
                             std::span<const std::size_t> y) {
  std::vector<const WorldRow*> rows;
  for (const auto& r : world.rows)
    if (!r.violates) rows.push_back(&r);
  return detail::afd_over(rows, x, y);
}

/// CFD check; tableau columns aligned with x then y (see PatternTableau::aligned_to).
inline bool cfd_holds(const DeterministicWorld& world, std::span<const std::size_t> x,
                      std::span<const std::size_t> y, const PatternTableau& tableau) {
  std::vector<const WorldRow*> matched;
  for (const auto& r : world.rows) {
    switch (detail::match_row(r, x, y, tableau)) {
      case detail::RowMatch::kViolates: return false;
      case detail::RowMatch::kMatched: matched.push_back(&r); break;
      case detail::RowMatch::kIgnored: break;
    }
  }
  return detail::fd_over(matched, x, y);
}

/// CAFD confidence: rows outside the tableau, and rows contradicting its Y
/// constants, are removed; the fraction is taken over the remaining matched
/// rows. 1 when nothing matches.
inline double cafd_confidence(const DeterministicWorld& world, std::span<const std::size_t> x,
                              std::span<const std::size_t> y, const PatternTableau& tableau) {
  std::vector<const WorldRow*> matched;
  for (const auto& r : world.rows)
    if (detail::match_row(r, x, y, tableau) == detail::RowMatch::kMatched) matched.push_back(&r);
  return detail::afd_over(matched, x, y);
}

inline ConfidenceReport oracle_confidence(const ProbRelation& relation, const DependencySpec& dep,
                                          OracleOptions opts = {}) {
  if (auto problems = dep.check(relation.schema()); !problems.empty()) throw Error(problems.front());
  const AttrCols x = resolve_attrs(relation.schema(), dep.x);
  const AttrCols y = resolve_attrs(relation.schema(), dep.y);
  PatternTableau tableau;
  if (dep.tableau) tableau = dep.tableau->aligned_to(dep.x, dep.y);

  detail::CompensatedSum total;
  WorldEnumerator worlds(relation, opts);
  DeterministicWorld w;
  while (worlds.next(w)) {
    double score = 0.0;
    switch (dep.kind) {
      case DependencyKind::kPfd: score = fd_holds(w, x, y) ? 1.0 : 0.0; break;
      case DependencyKind::kPafd: score = afd_confidence(w, x, y); break;
      case DependencyKind::kCpfd: score = cfd_holds(w, x, y, tableau) ? 1.0 : 0.0; break;
      case DependencyKind::kCpafd: score = cafd_confidence(w, x, y, tableau); break;
    }
    if (score != 0.0) total.add(w.prob * score);
  }
  return ConfidenceReport::make(total.value(), Method::kOracle);
}

}  // namespace pdep
