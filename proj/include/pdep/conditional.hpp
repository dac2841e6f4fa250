#pragma once

// Conditional dependencies: rewrite a relation against a pattern tableau, then
// hand it to the exact pFD search (CpFD) or to Monte Carlo (CpAFD).

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pdep/model.hpp"
#include "pdep/pafd_estimators.hpp"
#include "pdep/pfd_exact.hpp"

namespace pdep {

struct MarkedRelation {
  /// Same tuples, options and probabilities; options outside the tableau are
  /// IGNORED, options contradicting it are VIOLATES. Marked options keep their
  /// original values.
  ProbRelation relation;
  std::size_t ignored = 0;
  std::size_t violates = 0;
};

namespace detail {

/// `cells` are aligned with the tableau's X attributes then Y attributes.
inline bool x_matches(const OptionAssignment& o, std::span<const std::size_t> x_cols,
                      const PatternTableau::Row& row) {
  for (std::size_t i = 0; i < x_cols.size(); ++i)
    if (row[i] && *row[i] != o.values[x_cols[i]]) return false;
  return true;
}

inline bool y_contradicts(const OptionAssignment& o, std::span<const std::size_t> y_cols,
                          const PatternTableau::Row& row, std::size_t x_arity) {
  for (std::size_t j = 0; j < y_cols.size(); ++j) {
    const auto& cell = row[x_arity + j];
    if (cell && *cell != o.values[y_cols[j]]) return true;
  }
  return false;
}

}  // namespace detail

/// Pairs of rows that can select the same X value yet demand different Y
/// constants. A tableau with any such pair is inconsistent.
inline std::vector<std::pair<std::size_t, std::size_t>> tableau_conflicts(
    const PatternTableau& tableau) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t nx = tableau.x_attrs.size();
  for (std::size_t a = 0; a < tableau.rows.size(); ++a)
    for (std::size_t b = a + 1; b < tableau.rows.size(); ++b) {
      const auto& ra = tableau.rows[a];
      const auto& rb = tableau.rows[b];
      bool overlap = true;
      for (std::size_t i = 0; i < nx && overlap; ++i)
        overlap = !ra[i] || !rb[i] || *ra[i] == *rb[i];
      if (!overlap) continue;
      for (std::size_t j = nx; j < ra.size(); ++j)
        if (ra[j] && rb[j] && *ra[j] != *rb[j]) {
          out.emplace_back(a, b);
          break;
        }
    }
  return out;
}

inline bool tableau_consistent(const PatternTableau& tableau) {
  return tableau_conflicts(tableau).empty();
}

/// An option matching no tableau row on X becomes IGNORED; one that matches
/// some row on X but disagrees with a Y constant of any row it matches becomes
/// VIOLATES. Existing markers are kept.
inline MarkedRelation mark_tableau(const ProbRelation& relation, const AttrNames& x,
                                   const AttrNames& y, const PatternTableau& tableau) {
  const auto [x_cols, y_cols] = resolve_xy(relation.schema(), x, y);
  const PatternTableau aligned = tableau.aligned_to(x, y);

  MarkedRelation out;
  std::vector<ProbTuple> tuples = relation.tuples();
  for (auto& t : tuples)
    for (auto& o : t.options) {
      if (!o.is_value()) continue;
      bool matched = false;
      bool violates = false;
      for (const auto& row : aligned.rows) {
        if (!detail::x_matches(o, x_cols, row)) continue;
        matched = true;
        if (detail::y_contradicts(o, y_cols, row, x_cols.size())) {
          violates = true;
          break;
        }
      }
      if (!matched) {
        o.marker = Marker::kIgnored;
        ++out.ignored;
      } else if (violates) {
        o.marker = Marker::kViolates;
        ++out.violates;
      }
    }
  const RelationKind kind = relation.kind() == RelationKind::kDeterministic
                                ? ProbRelation::infer_kind(tuples)
                                : relation.kind();
  out.relation = ProbRelation(relation.schema(), std::move(tuples), kind);
  return out;
}

/// Throws InconsistentTableau when two rows contradict each other.
inline ConfidenceReport assess_cpfd(const ProbRelation& relation, const AttrNames& x,
                                    const AttrNames& y, const PatternTableau& tableau,
                                    PfdOptions opts = {}, PfdStats* stats = nullptr) {
  const PatternTableau aligned = tableau.aligned_to(x, y);
  if (auto conflicts = tableau_conflicts(aligned); !conflicts.empty())
    throw InconsistentTableau("inconsistent tableau: rows " +
                              std::to_string(conflicts.front().first) + " and " +
                              std::to_string(conflicts.front().second) +
                              " demand different Y values for overlapping X patterns");
  const MarkedRelation marked = mark_tableau(relation, x, y, aligned);
  return assess_pfd(marked.relation, x, y, opts, stats);
}

inline ConfidenceReport assess_cpafd(const ProbRelation& relation, const AttrNames& x,
                                     const AttrNames& y, const PatternTableau& tableau,
                                     const McConfig& cfg) {
  const MarkedRelation marked = mark_tableau(relation, x, y, tableau);
  return assess_pafd_mc(marked.relation, x, y, cfg);
}

}  // namespace pdep
