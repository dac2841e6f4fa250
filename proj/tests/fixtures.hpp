#pragma once

// Shared relations for the unit and acceptance tests.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "pdep/pdep.hpp"

namespace pdep::testing {

inline OptionAssignment opt(std::vector<Value> values, double p) {
  return {std::move(values), p, Marker::kNone};
}

/// Two tuples over (Color, Type), four equally likely worlds.
inline ProbRelation d1() {
  AttributeSchema schema({"Color", "Type"});
  return ProbRelation(schema, {{"t1", {opt({"Red", "Star"}, 0.5), opt({"Red", "Nebula"}, 0.5)}},
                               {"t2", {opt({"Red", "Star"}, 0.5), opt({"Blue", "Nebula"}, 0.5)}}});
}

/// 50 copies of (a1, b1, c1) and 50 rows (a1, b2, c_i) with distinct c_i.
inline ProbRelation split_world() {
  AttributeSchema schema({"A", "B", "C"});
  std::vector<ProbTuple> tuples;
  for (int i = 0; i < 50; ++i)
    tuples.push_back({"s" + std::to_string(100 + i), {opt({"a1", "b1", "c1"}, 1.0)}});
  for (int i = 0; i < 50; ++i)
    tuples.push_back({"u" + std::to_string(100 + i), {opt({"a1", "b2", "c" + std::to_string(i + 2)}, 1.0)}});
  return ProbRelation(schema, std::move(tuples));
}

inline PatternTableau row_tableau(AttrNames x, AttrNames y, std::vector<PatternTableau::Row> rows) {
  return {std::move(x), std::move(y), std::move(rows)};
}

inline constexpr std::nullopt_t _ = std::nullopt;

/// Two certain rows disagreeing on a, plus four independent copies of (b, w),
/// each present with probability 1/4. The union estimator overshoots here:
/// 2/3 against an expected confidence of 4903/7680.
inline ProbRelation union_overshoot() {
  AttributeSchema schema({"X", "Y"});
  std::vector<ProbTuple> tuples{{"t1", {opt({"a", "u"}, 1.0)}}, {"t2", {opt({"a", "v"}, 1.0)}}};
  for (int i = 3; i <= 6; ++i) tuples.push_back({"t" + std::to_string(i), {opt({"b", "w"}, 0.25)}});
  return ProbRelation(schema, std::move(tuples), RelationKind::kTi);
}

struct RandomShape {
  std::size_t max_tuples = 12;
  std::size_t max_options = 3;
  std::size_t max_attrs = 4;
  std::size_t max_domain = 4;
};

inline std::string value_name(std::uint64_t i) { return "v" + std::to_string(i); }

/// Random relation, usually TDI (at least two attributes) with the attribute names A, B, C, D.
inline ProbRelation random_tdi(SampleRng& rng, const RandomShape& shape = {}) {
  const std::size_t n_attrs = 2 + uniform_index(rng, shape.max_attrs - 1);
  const std::size_t n_tuples = 1 + uniform_index(rng, shape.max_tuples);
  const std::size_t domain = 1 + uniform_index(rng, shape.max_domain);
  AttrNames attrs;
  for (std::size_t i = 0; i < n_attrs; ++i) attrs.push_back(std::string(1, char('A' + i)));
  std::vector<ProbTuple> tuples;
  for (std::size_t t = 0; t < n_tuples; ++t) {
    ProbTuple tuple{"k" + std::to_string(10 + t), {}};
    const std::size_t n_opts = 1 + uniform_index(rng, shape.max_options);
    std::vector<double> w(n_opts);
    double sum = 0.0;
    for (auto& v : w) sum += v = 0.05 + uniform01(rng);
    for (std::size_t o = 0; o < n_opts; ++o) {
      OptionAssignment a;
      a.p = w[o] / sum;
      for (std::size_t c = 0; c < n_attrs; ++c) a.values.push_back(value_name(uniform_index(rng, domain)));
      tuple.options.push_back(std::move(a));
    }
    tuples.push_back(std::move(tuple));
  }
  return ProbRelation(AttributeSchema(attrs), std::move(tuples));
}

/// Disjoint non-empty X and Y over the relation's attributes.
inline std::pair<AttrNames, AttrNames> random_xy(SampleRng& rng, const AttributeSchema& schema) {
  const AttrNames& all = schema.value_attributes();
  while (true) {
    AttrNames x, y;
    for (const auto& a : all) {
      switch (uniform_index(rng, 3)) {
        case 0: x.push_back(a); break;
        case 1: y.push_back(a); break;
        default: break;
      }
    }
    if (!x.empty() && !y.empty()) return {x, y};
  }
}

/// Random tableau without pairwise contradictions. Constants are drawn from
/// the values present in the relation so rows actually select something.
inline PatternTableau random_tableau(SampleRng& rng, const ProbRelation& r, const AttrNames& x,
                                     const AttrNames& y) {
  auto cols = resolve_attrs(r.schema(), x);
  auto ycols = resolve_attrs(r.schema(), y);
  cols.insert(cols.end(), ycols.begin(), ycols.end());
  std::vector<const OptionAssignment*> pool;
  for (const auto& t : r.tuples())
    for (const auto& o : t.options) pool.push_back(&o);
  while (true) {
    PatternTableau tab{x, y, {}};
    const std::size_t n_rows = 1 + uniform_index(rng, 3);
    for (std::size_t i = 0; i < n_rows; ++i) {
      const auto* src = pool[uniform_index(rng, pool.size())];
      PatternTableau::Row row;
      for (auto c : cols)
        row.push_back(uniform_index(rng, 2) ? PatternTableau::Cell(src->values[c]) : std::nullopt);
      tab.rows.push_back(std::move(row));
    }
    if (tableau_consistent(tab)) return tab;
  }
}

/// Same as `random_tableau`, with Y constants dropped wherever some option
/// would contradict them, so marking never produces VIOLATES.
inline PatternTableau random_nonviolating_tableau(SampleRng& rng, const ProbRelation& r,
                                                  const AttrNames& x, const AttrNames& y) {
  PatternTableau tab = random_tableau(rng, r, x, y);
  if (mark_tableau(r, x, y, tab).violates == 0) return tab;
  for (auto& row : tab.rows)
    for (std::size_t j = x.size(); j < row.size(); ++j) row[j] = std::nullopt;
  return tab;
}

inline double oracle(const ProbRelation& r, DependencyKind kind, const AttrNames& x,
                     const AttrNames& y, std::optional<PatternTableau> tab = std::nullopt) {
  return oracle_confidence(r, {kind, x, y, std::move(tab)}).value;
}

/// Scratch file path unique to this process.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pdep_test_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace pdep::testing
