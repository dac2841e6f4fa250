#pragma once

// Interns composite attribute values to dense integer codes so the search and
// sampling loops compare integers instead of strings.

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pdep/model.hpp"

namespace pdep::detail {

inline constexpr std::uint32_t kNoCode = std::numeric_limits<std::uint32_t>::max();

class CompositeCodec {
 public:
  template <typename Get>
  std::uint32_t intern(std::size_t n, Get&& get) {
    encode(n, get);
    auto [it, inserted] = codes_.try_emplace(scratch_, static_cast<std::uint32_t>(decoded_.size()));
    if (inserted) {
      std::vector<Value> v;
      v.reserve(n);
      for (std::size_t i = 0; i < n; ++i) v.emplace_back(get(i));
      decoded_.push_back(std::move(v));
    }
    return it->second;
  }

  std::uint32_t intern(const std::vector<Value>& values) {
    return intern(values.size(), [&](std::size_t i) -> const Value& { return values[i]; });
  }

  std::uint32_t find(const std::vector<Value>& values) const {
    std::string key;
    for (const auto& v : values) append(key, v);
    auto it = codes_.find(key);
    return it == codes_.end() ? kNoCode : it->second;
  }

  const std::vector<Value>& decode(std::uint32_t code) const { return decoded_.at(code); }
  std::size_t size() const noexcept { return decoded_.size(); }

 private:
  // Length-prefixed concatenation: unambiguous for arbitrary value bytes.
  static void append(std::string& key, const Value& v) {
    key += std::to_string(v.size());
    key += ':';
    key += v;
  }
  template <typename Get>
  void encode(std::size_t n, Get& get) {
    scratch_.clear();
    for (std::size_t i = 0; i < n; ++i) append(scratch_, get(i));
  }

  std::unordered_map<std::string, std::uint32_t> codes_;
  std::vector<std::vector<Value>> decoded_;
  std::string scratch_;
};

struct CodedOption {
  std::uint32_t x = kNoCode;
  std::uint32_t y = kNoCode;
  double p = 0.0;
  Marker marker = Marker::kNone;
};

struct Projection {
  std::vector<std::vector<CodedOption>> tuples;
  CompositeCodec x_codec;
  CompositeCodec y_codec;
};

inline Projection project(const ProbRelation& relation, std::span<const std::size_t> x_cols,
                          std::span<const std::size_t> y_cols) {
  Projection out;
  out.tuples.reserve(relation.size());
  for (const auto& t : relation.tuples()) {
    std::vector<CodedOption> opts;
    opts.reserve(t.options.size());
    for (const auto& o : t.options) {
      CodedOption c;
      c.p = o.p;
      c.marker = o.marker;
      if (o.is_value()) {
        c.x = out.x_codec.intern(x_cols.size(),
                                 [&](std::size_t i) -> const Value& { return o.values[x_cols[i]]; });
        c.y = out.y_codec.intern(y_cols.size(),
                                 [&](std::size_t i) -> const Value& { return o.values[y_cols[i]]; });
      }
      opts.push_back(c);
    }
    out.tuples.push_back(std::move(opts));
  }
  return out;
}

}  // namespace pdep::detail
