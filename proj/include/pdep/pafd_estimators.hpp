#pragma once

// pAFD confidence estimators: a deterministic flattening, the unioned
// (tuple-independent) approximation, and Monte Carlo over sampled worlds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "pdep/detail/numeric.hpp"
#include "pdep/detail/projection.hpp"
#include "pdep/model.hpp"
#include "pdep/rng.hpp"
#include "pdep/worlds_oracle.hpp"

namespace pdep {

struct McConfig {
  std::uint64_t seed = 0;
  std::size_t min_samples = 100;
  std::size_t max_samples = 100000;
  /// Target half-width of the 95% confidence interval.
  double epsilon = 0.005;
  /// Stability window; also the batch size between stopping checks.
  std::size_t window = 50;
  unsigned threads = 1;

  std::vector<std::string> check() const {
    std::vector<std::string> out;
    if (min_samples > max_samples) out.emplace_back("mc: min_samples exceeds max_samples");
    if (max_samples == 0) out.emplace_back("mc: max_samples must be positive");
    if (!(epsilon > 0.0)) out.emplace_back("mc: epsilon must be positive");
    if (window == 0) out.emplace_back("mc: window must be positive");
    if (threads == 0) out.emplace_back("mc: threads must be positive");
    return out;
  }
};

namespace detail {

/// Index of the option chosen by uniform draw `u`, or -1 when a TI tuple is absent.
template <typename Option>
int pick_option(std::span<const Option> options, bool ti, double u) {
  if (options.empty()) return -1;
  if (ti) return u < options.front().p ? 0 : -1;
  double total = 0.0;
  for (const auto& o : options) total += o.p;
  const double target = u * total;
  double acc = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (options[i].p <= 0.0) continue;
    acc += options[i].p;
    last = static_cast<int>(i);
    if (target < acc) return last;
  }
  return last;
}

inline bool is_ti_tuple(RelationKind kind, std::size_t n_options) {
  return kind == RelationKind::kTi && n_options == 1;
}

/// Streaming Σ_x max_y count(x, y) over one sampled world. Dense counters when
/// the code space is small, a hash table otherwise.
class AfdCounter {
 public:
  AfdCounter(std::size_t x_card, std::size_t y_card) : y_card_(y_card) {
    if (x_card * y_card <= (std::size_t{1} << 22)) {
      dense_.assign(x_card * y_card, 0);
      best_.assign(x_card, 0);
    }
  }

  void add(std::uint32_t x, std::uint32_t y) {
    ++rows_;
    std::uint32_t c;
    if (!dense_.empty()) {
      const std::size_t i = std::size_t{x} * y_card_ + y;
      if (dense_[i] == 0) touched_.push_back(i);
      c = ++dense_[i];
      if (c > best_[x]) {
        best_[x] = c;
        ++kept_;
      }
    } else {
      c = ++sparse_[(std::uint64_t{x} << 32) | y];
      auto& b = sparse_best_[x];
      if (c > b) {
        b = c;
        ++kept_;
      }
    }
  }

  double confidence() const {
    return rows_ == 0 ? 1.0 : static_cast<double>(kept_) / static_cast<double>(rows_);
  }

  void reset() {
    for (auto i : touched_) {
      dense_[i] = 0;
      best_[i / y_card_] = 0;
    }
    touched_.clear();
    sparse_.clear();
    sparse_best_.clear();
    rows_ = kept_ = 0;
  }

 private:
  std::size_t y_card_;
  std::vector<std::uint32_t> dense_;
  std::vector<std::uint32_t> best_;
  std::vector<std::size_t> touched_;
  std::unordered_map<std::uint64_t, std::uint32_t> sparse_;
  std::unordered_map<std::uint32_t, std::uint32_t> sparse_best_;
  std::size_t rows_ = 0;
  std::size_t kept_ = 0;
};

/// Samples worlds of a projected relation and scores their AFD confidence.
/// Marked options (IGNORED or VIOLATES) drop out of the world's rows.
class WorldSampler {
 public:
  WorldSampler(const Projection& proj, RelationKind kind)
      : proj_(&proj), kind_(kind), counter_(proj.x_codec.size(), proj.y_codec.size()) {}

  double sample(SampleRng& rng) {
    counter_.reset();
    for (const auto& t : proj_->tuples) {
      const int i = pick_option<CodedOption>(t, is_ti_tuple(kind_, t.size()), uniform01(rng));
      if (i < 0) continue;
      const auto& o = t[static_cast<std::size_t>(i)];
      if (o.marker == Marker::kNone) counter_.add(o.x, o.y);
    }
    return counter_.confidence();
  }

 private:
  const Projection* proj_;
  RelationKind kind_;
  AfdCounter counter_;
};

/// Monte Carlo mean of sampled-world AFD scores with the stopping rule of
/// `McConfig`. Sample i always uses stream i of the seed, and values are folded
/// in index order, so the thread count never changes the result.
inline ConfidenceReport run_monte_carlo(const Projection& proj, RelationKind kind,
                                        const McConfig& cfg) {
  if (auto problems = cfg.check(); !problems.empty()) throw Error(problems.front());
  const unsigned threads = std::max(1u, cfg.threads);
  std::vector<WorldSampler> samplers;
  for (unsigned i = 0; i < threads; ++i) samplers.emplace_back(proj, kind);

  RunningMoments moments;
  std::vector<double> batch;
  double previous_mean = 0.0;
  bool has_previous = false;
  std::size_t k = 0;
  while (true) {
    const std::size_t n = std::min(cfg.window, cfg.max_samples - k);
    batch.assign(n, 0.0);
    auto work = [&](unsigned w, std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        SampleRng rng = stream_rng(cfg.seed, k + i);
        batch[i] = samplers[w].sample(rng);
      }
    };
    if (threads == 1 || n < 2) {
      work(0, 0, n);
    } else {
      std::vector<std::thread> pool;
      const std::size_t chunk = (n + threads - 1) / threads;
      for (unsigned w = 1; w < threads && w * chunk < n; ++w)
        pool.emplace_back(work, w, w * chunk, std::min(n, (w + 1) * chunk));
      work(0, 0, std::min(n, chunk));
      for (auto& th : pool) th.join();
    }
    for (double v : batch) moments.add(v);
    k += n;

    if (k >= cfg.max_samples) break;
    if (k >= cfg.min_samples && has_previous) {
      const double half_width = 1.96 * moments.std_error();
      if (half_width < cfg.epsilon && std::abs(moments.mean() - previous_mean) < cfg.epsilon) break;
    }
    previous_mean = moments.mean();
    has_previous = true;
  }
  return ConfidenceReport::make(moments.mean(), Method::kMc, moments.count(), moments.std_error());
}

}  // namespace detail

/// Flattens every value option into its own row and ignores the probabilities.
inline ConfidenceReport assess_pafd_deterministic(const ProbRelation& relation,
                                                  std::span<const std::size_t> x,
                                                  std::span<const std::size_t> y) {
  const detail::Projection proj = detail::project(relation, x, y);
  detail::AfdCounter counter(proj.x_codec.size(), proj.y_codec.size());
  for (const auto& t : proj.tuples)
    for (const auto& o : t)
      if (o.marker == Marker::kNone) counter.add(o.x, o.y);
  return ConfidenceReport::make(counter.confidence(), Method::kDeterministicApprox);
}

/// Treats every option as an independent tuple weighted by its probability:
/// Σ_x support(x, y_max) / Σ_x support(x).
inline ConfidenceReport assess_pafd_unioned(const ProbRelation& relation,
                                            std::span<const std::size_t> x,
                                            std::span<const std::size_t> y) {
  const detail::Projection proj = detail::project(relation, x, y);
  std::vector<std::unordered_map<std::uint32_t, double>> support(proj.x_codec.size());
  detail::CompensatedSum total;
  for (const auto& t : proj.tuples)
    for (const auto& o : t)
      if (o.marker == Marker::kNone) {
        support[o.x][o.y] += o.p;
        total.add(o.p);
      }
  if (total.value() <= 0.0) return ConfidenceReport::make(1.0, Method::kUnioned);
  detail::CompensatedSum kept;
  for (const auto& ys : support) {
    double best = 0.0;
    for (const auto& [yv, mass] : ys) best = std::max(best, mass);
    kept.add(best);
  }
  return ConfidenceReport::make(kept.value() / total.value(), Method::kUnioned);
}

/// One world drawn with probability equal to its weight. The recorded `prob`
/// is the product of the chosen alternatives' probabilities.
inline DeterministicWorld sample_world(const ProbRelation& relation, SampleRng& rng) {
  DeterministicWorld w;
  for (const auto& t : relation.tuples()) {
    const bool ti = detail::is_ti_tuple(relation.kind(), t.options.size());
    const int i = detail::pick_option<OptionAssignment>(t.options, ti, uniform01(rng));
    if (i < 0) {
      w.prob *= 1.0 - t.options.front().p;
      continue;
    }
    const auto& o = t.options[static_cast<std::size_t>(i)];
    w.prob *= o.p;
    if (o.marker == Marker::kIgnored) continue;
    w.rows.push_back({t.key, o.values, o.marker == Marker::kViolates});
  }
  return w;
}

inline ConfidenceReport assess_pafd_mc(const ProbRelation& relation,
                                       std::span<const std::size_t> x,
                                       std::span<const std::size_t> y, const McConfig& cfg) {
  const detail::Projection proj = detail::project(relation, x, y);
  return detail::run_monte_carlo(proj, relation.kind(), cfg);
}

inline ConfidenceReport assess_pafd_deterministic(const ProbRelation& relation,
                                                  const AttrNames& x, const AttrNames& y) {
  const auto [xc, yc] = resolve_xy(relation.schema(), x, y);
  return assess_pafd_deterministic(relation, xc, yc);
}

inline ConfidenceReport assess_pafd_unioned(const ProbRelation& relation, const AttrNames& x,
                                            const AttrNames& y) {
  const auto [xc, yc] = resolve_xy(relation.schema(), x, y);
  return assess_pafd_unioned(relation, xc, yc);
}

inline ConfidenceReport assess_pafd_mc(const ProbRelation& relation, const AttrNames& x,
                                       const AttrNames& y, const McConfig& cfg) {
  const auto [xc, yc] = resolve_xy(relation.schema(), x, y);
  return assess_pafd_mc(relation, xc, yc, cfg);
}

}  // namespace pdep
