#pragma once

// Data model for tuple-disjoint / tuple-independent probabilistic relations,
// dependency descriptions and pattern tableaux.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pdep/error.hpp"

namespace pdep {

using Value = std::string;
using AttrNames = std::vector<std::string>;
/// Column indices into `AttributeSchema::value_attributes()`.
using AttrCols = std::vector<std::size_t>;

inline constexpr double kProbabilityTolerance = 1e-6;

class AttributeSchema {
 public:
  AttributeSchema() = default;
  explicit AttributeSchema(AttrNames attributes,
                           std::optional<std::string> key_attribute = std::nullopt)
      : attributes_(std::move(attributes)), key_(std::move(key_attribute)) {
    for (const auto& a : attributes_)
      if (!key_ || a != *key_) value_attributes_.push_back(a);
  }

  const AttrNames& attributes() const noexcept { return attributes_; }
  const std::optional<std::string>& key_attribute() const noexcept { return key_; }

  /// Non-key attributes in declaration order. Option values are aligned with these.
  const AttrNames& value_attributes() const noexcept { return value_attributes_; }
  std::size_t width() const noexcept { return value_attributes_.size(); }

  std::optional<std::size_t> value_index(std::string_view name) const {
    for (std::size_t i = 0; i < value_attributes_.size(); ++i)
      if (value_attributes_[i] == name) return i;
    return std::nullopt;
  }

  std::vector<std::string> check() const {
    std::vector<std::string> out;
    std::set<std::string_view> seen;
    for (const auto& a : attributes_) {
      if (a.empty()) out.emplace_back("schema: empty attribute name");
      else if (!seen.insert(a).second) out.push_back("schema: duplicate attribute '" + a + "'");
    }
    if (key_ && !seen.contains(*key_))
      out.push_back("schema: key attribute '" + *key_ + "' is not an attribute");
    return out;
  }

  friend bool operator==(const AttributeSchema&, const AttributeSchema&) = default;

 private:
  AttrNames attributes_;
  std::optional<std::string> key_;
  AttrNames value_attributes_;
};

/// IGNORED is the "does not exist" marker, VIOLATES the "contradicts the tableau" marker.
enum class Marker : std::uint8_t { kNone, kIgnored, kViolates };

struct OptionAssignment {
  /// Aligned with the schema's value attributes. Marked options keep their
  /// original values (when they had any) for diagnostics.
  std::vector<Value> values;
  double p = 0.0;
  Marker marker = Marker::kNone;

  bool is_value() const noexcept { return marker == Marker::kNone; }

  static OptionAssignment ignored(double p) { return {{}, p, Marker::kIgnored}; }

  friend bool operator==(const OptionAssignment&, const OptionAssignment&) = default;
};

struct ProbTuple {
  std::string key;
  std::vector<OptionAssignment> options;

  double mass() const {
    double s = 0.0;
    for (const auto& o : options) s += o.p;
    return s;
  }

  friend bool operator==(const ProbTuple&, const ProbTuple&) = default;
};

enum class RelationKind { kTdi, kTi, kDeterministic };

inline std::string_view to_string(RelationKind k) {
  switch (k) {
    case RelationKind::kTdi: return "TDI";
    case RelationKind::kTi: return "TI";
    case RelationKind::kDeterministic: return "DETERMINISTIC";
  }
  return "?";
}

/// Immutable after construction; share freely between readers.
class ProbRelation {
 public:
  ProbRelation() = default;
  ProbRelation(AttributeSchema schema, std::vector<ProbTuple> tuples, RelationKind kind)
      : schema_(std::move(schema)), tuples_(std::move(tuples)), kind_(kind) {}
  ProbRelation(AttributeSchema schema, std::vector<ProbTuple> tuples)
      : schema_(std::move(schema)), tuples_(std::move(tuples)), kind_(infer_kind(tuples_)) {}

  const AttributeSchema& schema() const noexcept { return schema_; }
  const std::vector<ProbTuple>& tuples() const noexcept { return tuples_; }
  RelationKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return tuples_.size(); }
  bool empty() const noexcept { return tuples_.empty(); }

  /// TDI if any tuple has several options or carries a marker, TI if all are
  /// single options and one has p < 1, DETERMINISTIC otherwise.
  static RelationKind infer_kind(const std::vector<ProbTuple>& tuples) {
    bool uncertain = false;
    for (const auto& t : tuples) {
      if (t.options.size() > 1) return RelationKind::kTdi;
      if (t.options.size() == 1 && !t.options.front().is_value()) return RelationKind::kTdi;
      if (t.options.size() == 1 && t.options.front().p < 1.0) uncertain = true;
    }
    return uncertain ? RelationKind::kTi : RelationKind::kDeterministic;
  }

  friend bool operator==(const ProbRelation&, const ProbRelation&) = default;

 private:
  AttributeSchema schema_;
  std::vector<ProbTuple> tuples_;
  RelationKind kind_ = RelationKind::kDeterministic;
};

/// Every invariant violation of `relation`; empty when well formed. Never throws
/// on malformed content.
inline std::vector<std::string> validate(const ProbRelation& relation) {
  std::vector<std::string> out = relation.schema().check();
  const std::size_t width = relation.schema().width();
  std::set<std::string_view> keys;
  bool all_certain = true;

  for (const auto& t : relation.tuples()) {
    const std::string who = "tuple '" + t.key + "': ";
    if (!keys.insert(t.key).second) out.push_back(who + "duplicate key");
    if (t.options.empty()) {
      out.push_back(who + "no options");
      all_certain = false;
      continue;
    }
    if (t.options.size() != 1 || t.options.front().p != 1.0 || !t.options.front().is_value())
      all_certain = false;
    for (std::size_t i = 0; i < t.options.size(); ++i) {
      const auto& o = t.options[i];
      const std::string which = who + "option " + std::to_string(i) + ": ";
      if (!(o.p > 0.0 && o.p <= 1.0))
        out.push_back(which + "probability " + std::to_string(o.p) + " outside (0, 1]");
      if (o.is_value() && o.values.size() != width)
        out.push_back(which + "has " + std::to_string(o.values.size()) + " values, schema has " +
                      std::to_string(width) + " non-key attributes");
      if (!o.is_value() && !o.values.empty() && o.values.size() != width)
        out.push_back(which + "marker carries a malformed value list");
    }
    const double mass = t.mass();
    switch (relation.kind()) {
      case RelationKind::kTdi:
      case RelationKind::kDeterministic:
        if (std::abs(mass - 1.0) > kProbabilityTolerance)
          out.push_back(who + "option probabilities sum to " + std::to_string(mass) +
                        ", expected 1");
        break;
      case RelationKind::kTi:
        if (t.options.size() != 1) out.push_back(who + "TI tuple must have exactly one option");
        break;
    }
  }
  if (relation.kind() == RelationKind::kDeterministic && !all_certain)
    out.emplace_back("relation: marked DETERMINISTIC but some tuple is uncertain");
  if (relation.kind() != RelationKind::kDeterministic && all_certain && !relation.empty())
    out.emplace_back("relation: every tuple is certain but the relation is not marked DETERMINISTIC");
  return out;
}

/// Resolves attribute names to value-column indices. Throws on unknown names and
/// on the key attribute, which never takes part in dependencies.
inline AttrCols resolve_attrs(const AttributeSchema& schema, const AttrNames& names) {
  AttrCols cols;
  cols.reserve(names.size());
  for (const auto& n : names) {
    if (schema.key_attribute() && n == *schema.key_attribute())
      throw Error("attribute '" + n + "' is the key attribute and cannot appear in a dependency");
    auto idx = schema.value_index(n);
    if (!idx) throw Error("unknown attribute '" + n + "'");
    cols.push_back(*idx);
  }
  return cols;
}

/// Validated column indices for a dependency X -> Y: both sides non-empty,
/// disjoint, known, and free of the key attribute.
inline std::pair<AttrCols, AttrCols> resolve_xy(const AttributeSchema& schema, const AttrNames& x,
                                                const AttrNames& y) {
  if (x.empty() || y.empty()) throw Error("dependency sides must be non-empty");
  for (const auto& a : x)
    if (std::find(y.begin(), y.end(), a) != y.end())
      throw Error("attribute '" + a + "' appears on both sides of the dependency");
  return {resolve_attrs(schema, x), resolve_attrs(schema, y)};
}

/// Number of distinct composite values of `attrs` across all value options.
inline std::size_t domain_cardinality(const ProbRelation& relation, const AttrNames& attrs) {
  const AttrCols cols = resolve_attrs(relation.schema(), attrs);
  std::set<std::vector<std::string_view>> seen;
  std::vector<std::string_view> key(cols.size());
  for (const auto& t : relation.tuples())
    for (const auto& o : t.options) {
      if (!o.is_value()) continue;
      for (std::size_t i = 0; i < cols.size(); ++i) key[i] = o.values[cols[i]];
      seen.insert(key);
    }
  return seen.size();
}

/// Pattern tableau over X ∪ Y. Each row holds the X cells followed by the Y
/// cells; `std::nullopt` is the wildcard.
struct PatternTableau {
  using Cell = std::optional<Value>;
  using Row = std::vector<Cell>;

  AttrNames x_attrs;
  AttrNames y_attrs;
  std::vector<Row> rows;

  std::size_t arity() const noexcept { return x_attrs.size() + y_attrs.size(); }

  std::vector<std::string> check() const {
    std::vector<std::string> out;
    if (x_attrs.empty() || y_attrs.empty()) out.emplace_back("tableau: X and Y must be non-empty");
    if (rows.empty()) out.emplace_back("tableau: no pattern rows");
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i].size() != arity())
        out.push_back("tableau: row " + std::to_string(i) + " has " +
                      std::to_string(rows[i].size()) + " cells, expected " +
                      std::to_string(arity()));
    return out;
  }

  /// Same tableau with columns reordered to match `x` then `y`.
  /// Throws when the attribute sets differ.
  PatternTableau aligned_to(const AttrNames& x, const AttrNames& y) const {
    if (auto problems = check(); !problems.empty()) throw Error(problems.front());
    auto same_set = [](AttrNames a, AttrNames b) {
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      return a == b;
    };
    if (!same_set(x, x_attrs) || !same_set(y, y_attrs))
      throw Error("tableau attributes do not match the dependency's X and Y");
    std::vector<std::size_t> perm;
    for (const auto& a : x)
      perm.push_back(std::find(x_attrs.begin(), x_attrs.end(), a) - x_attrs.begin());
    for (const auto& a : y)
      perm.push_back(x_attrs.size() +
                     (std::find(y_attrs.begin(), y_attrs.end(), a) - y_attrs.begin()));
    PatternTableau out{x, y, {}};
    out.rows.reserve(rows.size());
    for (const auto& r : rows) {
      Row nr;
      nr.reserve(perm.size());
      for (auto p : perm) nr.push_back(r[p]);
      out.rows.push_back(std::move(nr));
    }
    return out;
  }

  friend bool operator==(const PatternTableau&, const PatternTableau&) = default;
};

enum class DependencyKind { kPfd, kPafd, kCpfd, kCpafd };

inline bool is_conditional(DependencyKind k) {
  return k == DependencyKind::kCpfd || k == DependencyKind::kCpafd;
}

inline bool is_approximate(DependencyKind k) {
  return k == DependencyKind::kPafd || k == DependencyKind::kCpafd;
}

inline std::string_view to_string(DependencyKind k) {
  switch (k) {
    case DependencyKind::kPfd: return "pfd";
    case DependencyKind::kPafd: return "pafd";
    case DependencyKind::kCpfd: return "cpfd";
    case DependencyKind::kCpafd: return "cpafd";
  }
  return "?";
}

inline std::optional<DependencyKind> parse_kind(std::string_view s) {
  if (s == "pfd") return DependencyKind::kPfd;
  if (s == "pafd") return DependencyKind::kPafd;
  if (s == "cpfd") return DependencyKind::kCpfd;
  if (s == "cpafd") return DependencyKind::kCpafd;
  return std::nullopt;
}

struct DependencySpec {
  DependencyKind kind = DependencyKind::kPfd;
  AttrNames x;
  AttrNames y;
  std::optional<PatternTableau> tableau;

  std::vector<std::string> check(const AttributeSchema& schema) const {
    std::vector<std::string> out;
    if (x.empty()) out.emplace_back("dependency: X is empty");
    if (y.empty()) out.emplace_back("dependency: Y is empty");
    for (const auto& a : x)
      if (std::find(y.begin(), y.end(), a) != y.end())
        out.push_back("dependency: attribute '" + a + "' on both sides");
    for (const auto* side : {&x, &y})
      for (const auto& a : *side) {
        if (schema.key_attribute() && a == *schema.key_attribute())
          out.push_back("dependency: '" + a + "' is the key attribute");
        else if (!schema.value_index(a))
          out.push_back("dependency: unknown attribute '" + a + "'");
      }
    if (is_conditional(kind) && !tableau)
      out.emplace_back("dependency: conditional kinds need a pattern tableau");
    if (!is_conditional(kind) && tableau)
      out.emplace_back("dependency: tableau given for an unconditional kind");
    if (tableau)
      for (auto& p : tableau->check()) out.push_back(std::move(p));
    return out;
  }
};

enum class Method { kOracle, kExactPruned, kMc, kUnioned, kDeterministicApprox };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::kOracle: return "ORACLE";
    case Method::kExactPruned: return "EXACT_PRUNED";
    case Method::kMc: return "MC";
    case Method::kUnioned: return "UNIONED";
    case Method::kDeterministicApprox: return "DETERMINISTIC_APPROX";
  }
  return "?";
}

struct ConfidenceReport {
  double value = 0.0;
  Method method = Method::kOracle;
  std::optional<std::size_t> samples_used;
  std::optional<double> std_error;

  bool exact() const noexcept {
    return method == Method::kOracle || method == Method::kExactPruned;
  }

  static ConfidenceReport make(double value, Method method,
                               std::optional<std::size_t> samples = std::nullopt,
                               std::optional<double> std_error = std::nullopt) {
    ConfidenceReport r;
    r.value = std::clamp(value, 0.0, 1.0);
    r.method = method;
    r.samples_used = samples;
    if (method == Method::kMc) r.std_error = std_error.value_or(0.0);
    return r;
  }
};

}  // namespace pdep
