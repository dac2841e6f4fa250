#pragma once

// Exact pFD confidence over a TDI relation by branch-and-prune search over
// tuples. The search keeps the association rules (x-value -> y-value) chosen
// so far and only branches when a tuple has several options that would
// extend the rules in different ways.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pdep/detail/numeric.hpp"
#include "pdep/detail/projection.hpp"
#include "pdep/model.hpp"

namespace pdep {

/// Composite X value -> composite Y value. At most one Y per X by construction.
using RuleMap = std::map<std::vector<Value>, std::vector<Value>>;

struct SearchState {
  std::set<std::string> remaining;  // unprocessed tuple keys
  RuleMap rules;
  double acc_prob = 1.0;
};

/// VIOLATES never fits, IGNORED always fits, a value option fits when its x is
/// unbound or bound to its own y.
inline bool option_compatible(const OptionAssignment& option, const RuleMap& rules,
                              std::span<const std::size_t> x, std::span<const std::size_t> y) {
  if (option.marker == Marker::kViolates) return false;
  if (option.marker == Marker::kIgnored) return true;
  std::vector<Value> xv, yv;
  for (auto c : x) xv.push_back(option.values[c]);
  auto it = rules.find(xv);
  if (it == rules.end()) return true;
  for (auto c : y) yv.push_back(option.values[c]);
  return it->second == yv;
}

/// Skippable: every option fits and adds nothing that a later tuple could
/// contradict. Dead: no option fits. Forced: every fitting option has the same
/// effect on the rules. Branching: several distinct effects.
enum class TupleClass { kSkippable, kDead, kForced, kBranching };

struct TupleChoice {
  std::string key;
  TupleClass kind = TupleClass::kBranching;
  std::size_t branches = 0;
};

struct PfdOptions {
  /// Treat options whose x-value can never be contradicted as rule-neutral.
  /// Off gives the plain search that only skips exact rule matches.
  bool inert_skip = true;
  /// Branches whose probability drops below this contribute 0.
  double underflow = 1e-300;
};

struct PfdStats {
  std::size_t nodes = 0;
  std::size_t leaves = 0;
  std::size_t dead = 0;
  std::size_t underflow_prunes = 0;
  std::size_t skipped = 0;
  std::size_t forced = 0;
  std::size_t branch_points = 0;
};

namespace detail {

inline constexpr std::uint32_t kUnbound = kNoCode;

struct Effect {
  std::uint32_t x = kNoCode;  // kNoCode: no new rule
  std::uint32_t y = kNoCode;
  double mass = 0.0;
};

struct Classification {
  TupleClass kind = TupleClass::kBranching;
  std::vector<Effect> effects;
};

/// Per x-value facts about the remaining unbound options, used to decide
/// which options are inert.
struct XInfo {
  std::uint32_t first_y = kNoCode;
  std::uint32_t owner = kNoCode;
  bool multi_y = false;
  bool multi_owner = false;
};

class PfdSearch {
 public:
  PfdSearch(const Projection& proj, PfdOptions opts)
      : proj_(proj), opts_(opts), info_(proj.x_codec.size()) {}

  void compute_info(std::span<const std::uint32_t> remaining,
                    const std::vector<std::uint32_t>& rules) {
    std::fill(info_.begin(), info_.end(), XInfo{});
    for (auto t : remaining)
      for (const auto& o : proj_.tuples[t]) {
        if (o.marker != Marker::kNone || rules[o.x] != kUnbound) continue;
        auto& in = info_[o.x];
        if (in.first_y == kNoCode) in.first_y = o.y;
        else if (in.first_y != o.y) in.multi_y = true;
        if (in.owner == kNoCode) in.owner = t;
        else if (in.owner != t) in.multi_owner = true;
      }
  }

  Classification classify(std::uint32_t t, const std::vector<std::uint32_t>& rules) const {
    Classification c;
    double none_mass = 0.0;
    bool has_none = false;
    bool all_fit = true;
    for (const auto& o : proj_.tuples[t]) {
      if (o.marker == Marker::kViolates) {
        all_fit = false;
        continue;
      }
      if (o.marker == Marker::kIgnored) {
        none_mass += o.p;
        has_none = true;
        continue;
      }
      const auto bound = rules[o.x];
      if (bound != kUnbound) {
        if (bound == o.y) {
          none_mass += o.p;
          has_none = true;
        } else {
          all_fit = false;
        }
        continue;
      }
      const auto& in = info_[o.x];
      const bool inert = opts_.inert_skip && (!in.multi_y || !in.multi_owner);
      if (inert) {
        none_mass += o.p;
        has_none = true;
        continue;
      }
      auto it = std::find_if(c.effects.begin(), c.effects.end(),
                             [&](const Effect& e) { return e.x == o.x && e.y == o.y; });
      if (it == c.effects.end()) c.effects.push_back({o.x, o.y, o.p});
      else it->mass += o.p;
    }
    if (has_none) c.effects.insert(c.effects.begin(), Effect{kNoCode, kNoCode, none_mass});
    if (c.effects.empty()) c.kind = TupleClass::kDead;
    else if (c.effects.size() > 1) c.kind = TupleClass::kBranching;
    else if (has_none && all_fit) c.kind = TupleClass::kSkippable;
    else c.kind = TupleClass::kForced;
    return c;
  }

  /// Sum of the probabilities of all worlds, restricted to `remaining`, that
  /// keep the FD consistent with `rules`, times `prob`.
  double run(std::vector<std::uint32_t> remaining, std::vector<std::uint32_t> rules, double prob,
             PfdStats& stats) {
    struct Node {
      std::vector<std::uint32_t> remaining;
      std::vector<std::uint32_t> rules;
      double prob;
    };
    CompensatedSum total;
    std::vector<Node> stack;
    stack.push_back({std::move(remaining), std::move(rules), prob});

    while (!stack.empty()) {
      Node node = std::move(stack.back());
      stack.pop_back();
      ++stats.nodes;

      bool dead = false;
      std::uint32_t pick = kNoCode;
      Classification pick_class;
      for (bool changed = true; changed && !dead;) {
        changed = false;
        pick = kNoCode;
        compute_info(node.remaining, node.rules);
        std::size_t keep = 0;
        for (std::size_t i = 0; i < node.remaining.size(); ++i) {
          const auto t = node.remaining[i];
          Classification c = classify(t, node.rules);
          if (c.kind == TupleClass::kDead) {
            dead = true;
            break;
          }
          if (c.kind == TupleClass::kBranching) {
            if (pick == kNoCode || c.effects.size() < pick_class.effects.size()) {
              pick = t;
              pick_class = std::move(c);
            }
            node.remaining[keep++] = t;
            continue;
          }
          const Effect& e = c.effects.front();
          node.prob *= e.mass;
          if (e.x != kNoCode) node.rules[e.x] = e.y;
          ++(c.kind == TupleClass::kSkippable ? stats.skipped : stats.forced);
          changed = true;
        }
        if (dead) break;
        node.remaining.resize(keep);
        if (node.prob < opts_.underflow) {
          ++stats.underflow_prunes;
          dead = true;
        }
      }
      if (dead) {
        ++stats.dead;
        continue;
      }
      if (node.remaining.empty()) {
        ++stats.leaves;
        total.add(node.prob);
        continue;
      }

      ++stats.branch_points;
      std::vector<std::uint32_t> rest;
      rest.reserve(node.remaining.size() - 1);
      for (auto t : node.remaining)
        if (t != pick) rest.push_back(t);
      for (auto it = pick_class.effects.rbegin(); it != pick_class.effects.rend(); ++it) {
        const double p = node.prob * it->mass;
        if (p < opts_.underflow) {
          ++stats.underflow_prunes;
          continue;
        }
        Node child{rest, node.rules, p};
        if (it->x != kNoCode) child.rules[it->x] = it->y;
        stack.push_back(std::move(child));
      }
    }
    return total.value();
  }

 private:
  const Projection& proj_;
  PfdOptions opts_;
  std::vector<XInfo> info_;
};

inline std::vector<std::uint32_t> key_order(const ProbRelation& relation) {
  std::vector<std::uint32_t> order(relation.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return relation.tuples()[a].key < relation.tuples()[b].key;
  });
  return order;
}

inline void require_tdi(const ProbRelation& relation) {
  if (relation.kind() == RelationKind::kTi)
    throw Error("exact pFD assessment needs a TDI relation; convert TI input first");
}

}  // namespace detail

/// Picks the next tuple to process: a skippable tuple first, then a dead one,
/// then a forced one, else the one with the fewest branches. Ties go to the
/// smallest key.
inline TupleChoice choose_best_remaining_tuple(const SearchState& state,
                                               const ProbRelation& relation,
                                               std::span<const std::size_t> x,
                                               std::span<const std::size_t> y,
                                               PfdOptions opts = {}) {
  if (state.remaining.empty()) throw Error("no remaining tuples");
  detail::Projection proj = detail::project(relation, x, y);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> bound;
  for (const auto& [xv, yv] : state.rules)
    bound.emplace_back(proj.x_codec.intern(xv), proj.y_codec.intern(yv));
  std::vector<std::uint32_t> rules(proj.x_codec.size(), detail::kUnbound);
  for (auto [xc, yc] : bound) rules[xc] = yc;

  std::vector<std::uint32_t> remaining;
  for (auto t : detail::key_order(relation))
    if (state.remaining.contains(relation.tuples()[t].key)) remaining.push_back(t);
  if (remaining.size() != state.remaining.size()) throw Error("remaining key not in relation");

  detail::PfdSearch search(proj, opts);
  search.compute_info(remaining, rules);
  std::optional<TupleChoice> by_class[3];
  std::optional<TupleChoice> narrowest;
  for (auto t : remaining) {
    const auto c = search.classify(t, rules);
    TupleChoice tc{relation.tuples()[t].key, c.kind, c.effects.size()};
    switch (c.kind) {
      case TupleClass::kSkippable: if (!by_class[0]) by_class[0] = tc; break;
      case TupleClass::kDead: if (!by_class[1]) by_class[1] = tc; break;
      case TupleClass::kForced: if (!by_class[2]) by_class[2] = tc; break;
      case TupleClass::kBranching:
        if (!narrowest || tc.branches < narrowest->branches) narrowest = tc;
        break;
    }
  }
  for (auto& c : by_class)
    if (c) return *c;
  return *narrowest;
}

inline ConfidenceReport assess_pfd(const ProbRelation& relation, std::span<const std::size_t> x,
                                   std::span<const std::size_t> y, PfdOptions opts = {},
                                   PfdStats* stats = nullptr) {
  detail::require_tdi(relation);
  const detail::Projection proj = detail::project(relation, x, y);
  detail::PfdSearch search(proj, opts);
  PfdStats local;
  const double value = search.run(detail::key_order(relation),
                                  std::vector<std::uint32_t>(proj.x_codec.size(), detail::kUnbound),
                                  1.0, stats ? *stats : local);
  return ConfidenceReport::make(value, Method::kExactPruned);
}

inline ConfidenceReport assess_pfd(const ProbRelation& relation, const AttrNames& x,
                                   const AttrNames& y, PfdOptions opts = {},
                                   PfdStats* stats = nullptr) {
  const auto [xc, yc] = resolve_xy(relation.schema(), x, y);
  return assess_pfd(relation, xc, yc, opts, stats);
}

}  // namespace pdep
