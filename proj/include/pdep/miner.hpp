#pragma once

// pAFD mining: breadth-first over the attribute-set lattice, testing X ~> A on
// each edge (X, X ∪ {A}). Nodes whose specificity exceeds the threshold are cut
// together with their outgoing edges; candidates implied by an already found
// high-confidence X' ~> A with X' ⊆ X are skipped.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pdep/model.hpp"
#include "pdep/pafd_estimators.hpp"
#include "pdep/rng.hpp"
#include "pdep/specificity.hpp"

namespace pdep {

enum class MinerMethod { kMc, kUnioned };

struct MinerConfig {
  double confidence_threshold = 0.8;
  double specificity_threshold = 0.6;
  double high_confidence_threshold = 0.95;
  McConfig mc;
  /// Restricts the heads A that are tested. Empty: every non-key attribute.
  std::optional<AttrNames> target_attrs;
  std::optional<std::size_t> top_k;
  MinerMethod method = MinerMethod::kMc;
  /// Keep singleton attributes with specificity 1 as determiners.
  bool include_keylike = false;

  std::vector<std::string> check() const {
    std::vector<std::string> out = mc.check();
    auto in_unit = [](double v) { return v > 0.0 && v <= 1.0; };
    if (!in_unit(confidence_threshold)) out.emplace_back("miner: confidence threshold outside (0, 1]");
    if (!in_unit(specificity_threshold)) out.emplace_back("miner: specificity threshold outside (0, 1]");
    if (!in_unit(high_confidence_threshold))
      out.emplace_back("miner: high-confidence threshold outside (0, 1]");
    if (high_confidence_threshold < confidence_threshold)
      out.emplace_back("miner: high-confidence threshold below confidence threshold");
    if (top_k && *top_k == 0) out.emplace_back("miner: top_k must be positive");
    return out;
  }
};

struct LatticeNode {
  AttrNames attrs;  // sorted
  bool pruned = false;
  double specificity = 0.0;
};

struct MinedDependency {
  DependencySpec dep;  // kind pafd, one head
  ConfidenceReport report;
  double specificity = 0.0;  // of dep.x
};

struct MinerStats {
  std::size_t nodes = 0;
  std::size_t specificity_pruned = 0;
  std::size_t redundant = 0;
  std::size_t assessed = 0;
  std::size_t levels = 0;
};

/// Strictly above the threshold: a node sitting exactly on it survives.
inline bool prune_specificity(const LatticeNode& node, const MinerConfig& cfg) {
  return node.specificity > cfg.specificity_threshold;
}

struct FoundRule {
  AttrNames x;  // sorted
  std::string head;
};

inline bool prune_redundant(const AttrNames& x, const std::string& head,
                            const std::vector<FoundRule>& discovered) {
  return std::any_of(discovered.begin(), discovered.end(), [&](const FoundRule& r) {
    return r.head == head && std::includes(x.begin(), x.end(), r.x.begin(), r.x.end());
  });
}

namespace detail {

inline std::string candidate_name(const AttrNames& x, const std::string& head) {
  std::string s;
  for (const auto& a : x) {
    if (!s.empty()) s += ',';
    s += a;
  }
  return s + "~>" + head;
}

/// Each candidate gets its own seed, so its estimate does not depend on which
/// other candidates were tested.
inline std::uint64_t candidate_seed(std::uint64_t seed, const AttrNames& x,
                                    const std::string& head) {
  return splitmix64(seed ^ fnv1a64(candidate_name(x, head)));
}

}  // namespace detail

inline std::vector<MinedDependency> mine(const ProbRelation& relation, const MinerConfig& cfg,
                                         MinerStats* stats = nullptr) {
  if (auto problems = cfg.check(); !problems.empty()) throw Error(problems.front());
  const AttributeSchema& schema = relation.schema();
  if (schema.width() < 2) throw Error("mining needs at least two non-key attributes");

  AttrNames heads = cfg.target_attrs.value_or(schema.value_attributes());
  resolve_attrs(schema, heads);
  std::sort(heads.begin(), heads.end());
  heads.erase(std::unique(heads.begin(), heads.end()), heads.end());

  MinerStats local;
  MinerStats& st = stats ? *stats : local;

  auto node_for = [&](AttrNames attrs) {
    LatticeNode n{std::move(attrs), false, 0.0};
    n.specificity = specificity(relation, n.attrs);
    n.pruned = prune_specificity(n, cfg);
    ++st.nodes;
    if (n.pruned) ++st.specificity_pruned;
    return n;
  };

  std::vector<LatticeNode> level;
  AttrNames determiners;
  for (const auto& a : schema.value_attributes()) {
    LatticeNode n = node_for({a});
    if (!cfg.include_keylike && n.specificity >= 1.0 - 1e-12) {
      if (!n.pruned) ++st.specificity_pruned;
      continue;
    }
    determiners.push_back(a);
    level.push_back(std::move(n));
  }
  std::sort(determiners.begin(), determiners.end());
  std::sort(level.begin(), level.end(),
            [](const LatticeNode& a, const LatticeNode& b) { return a.attrs < b.attrs; });

  std::vector<MinedDependency> found;
  std::vector<FoundRule> discovered;
  while (!level.empty()) {
    ++st.levels;
    std::vector<FoundRule> newly;
    for (const auto& node : level) {
      if (node.pruned) continue;
      for (const auto& head : heads) {
        if (std::binary_search(node.attrs.begin(), node.attrs.end(), head)) continue;
        if (prune_redundant(node.attrs, head, discovered)) {
          ++st.redundant;
          continue;
        }
        const AttrNames y{head};
        ConfidenceReport report;
        if (cfg.method == MinerMethod::kUnioned) {
          report = assess_pafd_unioned(relation, node.attrs, y);
        } else {
          McConfig mc = cfg.mc;
          mc.seed = detail::candidate_seed(cfg.mc.seed, node.attrs, head);
          report = assess_pafd_mc(relation, node.attrs, y, mc);
        }
        ++st.assessed;
        if (report.value >= cfg.high_confidence_threshold) newly.push_back({node.attrs, head});
        if (report.value >= cfg.confidence_threshold)
          found.push_back({{DependencyKind::kPafd, node.attrs, y, std::nullopt}, report,
                           node.specificity});
      }
    }
    discovered.insert(discovered.end(), newly.begin(), newly.end());

    // A child exists as long as one of its parents survived.
    std::set<AttrNames> next;
    for (const auto& node : level) {
      if (node.pruned) continue;
      for (const auto& b : determiners) {
        if (std::binary_search(node.attrs.begin(), node.attrs.end(), b)) continue;
        AttrNames grown = node.attrs;
        grown.insert(std::upper_bound(grown.begin(), grown.end(), b), b);
        next.insert(std::move(grown));
      }
    }
    level.clear();
    for (const auto& attrs : next) level.push_back(node_for(attrs));
  }

  std::sort(found.begin(), found.end(), [](const MinedDependency& a, const MinedDependency& b) {
    if (a.report.value != b.report.value) return a.report.value > b.report.value;
    if (a.dep.x != b.dep.x) return a.dep.x < b.dep.x;
    return a.dep.y < b.dep.y;
  });
  if (cfg.top_k && found.size() > *cfg.top_k) found.resize(*cfg.top_k);
  return found;
}

}  // namespace pdep
