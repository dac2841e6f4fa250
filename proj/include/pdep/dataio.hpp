#pragma once

// Relation files (line-delimited JSON, or CSV for deterministic data), pattern
// tableau files, TI -> TDI conversion and the planted-dependency generator.
//
// Relation file, one JSON object per line:
//   {"schema": {"attributes": ["id", "A", "B"], "key": "id"}}
//   {"key": "t1", "options": [{"p": 0.5, "v": {"A": "a1", "B": "b1"}},
//                             {"p": 0.5, "marker": "ignored"}]}
//
// Tableau file, tab separated, `_` is the wildcard, `#` starts a comment:
//   A	|	B
//   a1	|	_

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <iterator>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdep/model.hpp"
#include "pdep/rng.hpp"

namespace pdep {

struct LoadOptions {
  /// Drop zero-probability options and rescale TDI tuples to total mass 1
  /// instead of reporting them.
  bool normalize = false;
  /// CSV only: column holding the tuple key. Without it rows are numbered.
  std::optional<std::string> csv_key_column;
};

namespace detail {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

inline Value json_value(const Json& j, std::size_t line) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number() || j.is_boolean()) return j.dump();
  throw ParseError("attribute values must be strings, numbers or booleans", line);
}

inline bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

inline void strip_cr(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

inline AttributeSchema parse_schema(const Json& j, std::size_t line) {
  if (!j.is_object() || !j.contains("schema"))
    throw ParseError("first record must be {\"schema\": {...}}", line);
  const Json& s = j["schema"];
  if (!s.is_object() || !s.contains("attributes") || !s["attributes"].is_array())
    throw ParseError("schema needs an \"attributes\" array", line);
  AttrNames attrs;
  for (const auto& a : s["attributes"]) {
    if (!a.is_string()) throw ParseError("attribute names must be strings", line);
    attrs.push_back(a.get<std::string>());
  }
  std::optional<std::string> key;
  if (s.contains("key") && !s["key"].is_null()) {
    if (!s["key"].is_string()) throw ParseError("schema key must be a string or null", line);
    key = s["key"].get<std::string>();
  }
  AttributeSchema schema(std::move(attrs), std::move(key));
  if (auto problems = schema.check(); !problems.empty()) throw ParseError(problems.front(), line);
  return schema;
}

inline std::vector<Value> parse_values(const Json& v, const AttributeSchema& schema,
                                       std::size_t line) {
  if (!v.is_object()) throw ParseError("\"v\" must be an object", line);
  std::vector<Value> values;
  values.reserve(schema.width());
  for (const auto& a : schema.value_attributes()) {
    auto it = v.find(a);
    if (it == v.end()) throw ParseError("option misses attribute '" + a + "'", line);
    values.push_back(json_value(*it, line));
  }
  for (auto it = v.begin(); it != v.end(); ++it)
    if (!schema.value_index(it.key()))
      throw ParseError("option has unknown attribute '" + it.key() + "'", line);
  return values;
}

inline ProbTuple parse_tuple(const Json& j, const AttributeSchema& schema, std::size_t line) {
  if (!j.is_object() || !j.contains("key") || !j.contains("options"))
    throw ParseError("tuple records need \"key\" and \"options\"", line);
  ProbTuple t;
  const Json& k = j["key"];
  if (k.is_string()) t.key = k.get<std::string>();
  else if (k.is_number_integer()) t.key = k.dump();
  else throw ParseError("tuple key must be a string or integer", line);
  if (!j["options"].is_array()) throw ParseError("\"options\" must be an array", line);
  for (const auto& o : j["options"]) {
    if (!o.is_object() || !o.contains("p") || !o["p"].is_number())
      throw ParseError("every option needs a numeric \"p\"", line);
    OptionAssignment opt;
    opt.p = o["p"].get<double>();
    if (o.contains("marker")) {
      const Json& m = o["marker"];
      if (m == "ignored") opt.marker = Marker::kIgnored;
      else if (m == "violates") opt.marker = Marker::kViolates;
      else throw ParseError("unknown marker " + m.dump(), line);
      if (o.contains("v")) opt.values = parse_values(o["v"], schema, line);
    } else {
      if (!o.contains("v")) throw ParseError("option needs \"v\" or \"marker\"", line);
      opt.values = parse_values(o["v"], schema, line);
    }
    t.options.push_back(std::move(opt));
  }
  return t;
}

/// Zero-mass options go; multi-option tuples (and single options of a TDI
/// relation) are rescaled to mass 1. TI existence probabilities are kept.
inline std::vector<ProbTuple> normalized(std::vector<ProbTuple> tuples) {
  for (auto& t : tuples)
    std::erase_if(t.options, [](const OptionAssignment& o) { return o.p <= 0.0; });
  const bool tdi = std::any_of(tuples.begin(), tuples.end(),
                               [](const ProbTuple& t) { return t.options.size() > 1; });
  if (tdi)
    for (auto& t : tuples) {
      const double m = t.mass();
      if (m > 0.0)
        for (auto& o : t.options) o.p /= m;
    }
  return tuples;
}

inline ProbRelation finish(AttributeSchema schema, std::vector<ProbTuple> tuples,
                           const LoadOptions& opts) {
  if (opts.normalize) tuples = normalized(std::move(tuples));
  ProbRelation r(std::move(schema), std::move(tuples));
  if (auto problems = validate(r); !problems.empty()) throw ValidationError(std::move(problems));
  return r;
}

/// RFC 4180 fields of one record; quoted fields may not span lines.
inline std::vector<std::string> csv_fields(const std::string& line, std::size_t lineno) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", lineno);
  out.push_back(std::move(cur));
  return out;
}

inline ProbRelation read_csv(std::istream& in, const LoadOptions& opts) {
  std::string line;
  std::size_t lineno = 0;
  AttrNames header;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (blank(line)) continue;
    header = csv_fields(line, lineno);
    break;
  }
  if (header.empty()) throw ParseError("empty input", 0);
  std::optional<std::size_t> key_col;
  if (opts.csv_key_column) {
    auto it = std::find(header.begin(), header.end(), *opts.csv_key_column);
    if (it == header.end())
      throw ParseError("key column '" + *opts.csv_key_column + "' not in header", lineno);
    key_col = static_cast<std::size_t>(it - header.begin());
  }
  AttributeSchema schema(header, opts.csv_key_column);
  if (auto problems = schema.check(); !problems.empty()) throw ParseError(problems.front(), lineno);

  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (blank(line)) continue;
    auto f = csv_fields(line, lineno);
    if (f.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(f.size()),
                       lineno);
    rows.push_back(std::move(f));
  }
  const std::size_t digits = std::to_string(rows.size()).size();
  std::vector<ProbTuple> tuples;
  tuples.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    ProbTuple t;
    if (key_col) {
      t.key = rows[r][*key_col];
    } else {
      t.key = std::to_string(r + 1);
      t.key.insert(0, digits - t.key.size(), '0');
    }
    OptionAssignment o;
    o.p = 1.0;
    for (std::size_t c = 0; c < header.size(); ++c)
      if (!key_col || c != *key_col) o.values.push_back(rows[r][c]);
    t.options.push_back(std::move(o));
    tuples.push_back(std::move(t));
  }
  return finish(std::move(schema), std::move(tuples), opts);
}

inline ProbRelation read_jsonl(std::istream& in, const LoadOptions& opts) {
  std::string line;
  std::size_t lineno = 0;
  std::optional<AttributeSchema> schema;
  std::vector<ProbTuple> tuples;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    if (!schema) schema = parse_schema(j, lineno);
    else tuples.push_back(parse_tuple(j, *schema, lineno));
  }
  if (!schema) throw ParseError("empty input", 0);
  return finish(std::move(*schema), std::move(tuples), opts);
}

inline OrderedJson option_json(const OptionAssignment& o, const AttributeSchema& schema) {
  OrderedJson j;
  j["p"] = o.p;
  if (o.marker != Marker::kNone) j["marker"] = o.marker == Marker::kIgnored ? "ignored" : "violates";
  if (!o.values.empty()) {
    OrderedJson v = OrderedJson::object();
    for (std::size_t i = 0; i < o.values.size(); ++i) v[schema.value_attributes()[i]] = o.values[i];
    j["v"] = std::move(v);
  }
  return j;
}

}  // namespace detail

/// Auto-detects the format: JSON lines when the first non-blank character is '{', CSV otherwise.
inline ProbRelation read_relation(std::istream& in, const LoadOptions& opts = {}) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto first = text.find_first_not_of(" \t\r\n");
  std::istringstream s(std::move(text));
  if (first != std::string::npos && s.str()[first] == '{') return detail::read_jsonl(s, opts);
  return detail::read_csv(s, opts);
}

inline ProbRelation load(const std::string& path, const LoadOptions& opts = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_relation(in, opts);
}

inline void write_relation(const ProbRelation& relation, std::ostream& out) {
  const auto& schema = relation.schema();
  detail::OrderedJson head;
  head["schema"]["attributes"] = schema.attributes();
  head["schema"]["key"] = schema.key_attribute() ? detail::OrderedJson(*schema.key_attribute())
                                                 : detail::OrderedJson(nullptr);
  out << head.dump() << '\n';
  for (const auto& t : relation.tuples()) {
    detail::OrderedJson j;
    j["key"] = t.key;
    j["options"] = detail::OrderedJson::array();
    for (const auto& o : t.options) j["options"].push_back(detail::option_json(o, schema));
    out << j.dump() << '\n';
  }
}

inline void save(const ProbRelation& relation, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_relation(relation, out);
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline PatternTableau read_tableau(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    std::istringstream s(line);
    while (std::getline(s, cur, '\t')) {
      const auto b = cur.find_first_not_of(' ');
      const auto e = cur.find_last_not_of(' ');
      cells.push_back(b == std::string::npos ? "" : cur.substr(b, e - b + 1));
    }
    return cells;
  };

  PatternTableau t;
  bool have_header = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    detail::strip_cr(line);
    if (detail::blank(line) || line.find_first_not_of(" \t") == line.find('#')) continue;
    auto cells = split(line);
    if (!have_header) {
      auto bar = std::find(cells.begin(), cells.end(), "|");
      if (bar == cells.end() || std::count(cells.begin(), cells.end(), "|") != 1)
        throw ParseError("tableau header needs exactly one '|' between X and Y", lineno);
      t.x_attrs.assign(cells.begin(), bar);
      t.y_attrs.assign(bar + 1, cells.end());
      if (t.x_attrs.empty() || t.y_attrs.empty())
        throw ParseError("tableau header needs attributes on both sides of '|'", lineno);
      have_header = true;
      continue;
    }
    if (cells.size() == t.arity() + 1 && cells[t.x_attrs.size()] == "|")
      cells.erase(cells.begin() + static_cast<std::ptrdiff_t>(t.x_attrs.size()));
    if (cells.size() != t.arity())
      throw ParseError("tableau row has " + std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(t.arity()),
                       lineno);
    PatternTableau::Row row;
    for (auto& c : cells) row.push_back(c == "_" ? std::nullopt : PatternTableau::Cell(c));
    t.rows.push_back(std::move(row));
  }
  if (!have_header) throw ParseError("empty tableau", 0);
  if (t.rows.empty()) throw ParseError("tableau has no pattern rows", lineno);
  return t;
}

inline PatternTableau load_tableau(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_tableau(in);
}

inline void write_tableau(const PatternTableau& t, std::ostream& out) {
  auto row_out = [&](auto&& cell, std::size_t nx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      if (i) out << '\t';
      if (i == nx) out << "|\t";
      out << cell(i);
    }
    out << '\n';
  };
  const std::size_t nx = t.x_attrs.size();
  row_out([&](std::size_t i) { return i < nx ? t.x_attrs[i] : t.y_attrs[i - nx]; }, nx, t.arity());
  for (const auto& r : t.rows)
    row_out([&](std::size_t i) { return r[i] ? *r[i] : std::string("_"); }, nx, t.arity());
}

/// Each TI tuple with p < 1 gets an IGNORED alternative of mass 1 - p.
inline ProbRelation ti_to_tdi(const ProbRelation& relation) {
  if (relation.kind() == RelationKind::kTdi) throw Error("relation is already TDI");
  std::vector<ProbTuple> tuples = relation.tuples();
  for (auto& t : tuples)
    if (t.options.size() == 1 && t.options.front().p < 1.0)
      t.options.push_back(OptionAssignment::ignored(1.0 - t.options.front().p));
  return ProbRelation(relation.schema(), std::move(tuples));
}

struct GeneratorSpec {
  std::size_t n_tuples = 100;
  std::size_t options_per_tuple = 2;
  std::size_t domain_cardinality = 4;
  double noise = 0.0;
  std::uint64_t seed = 0;
  AttrNames x{"A"};
  AttrNames y{"B"};
  /// Extra attributes drawn uniformly, unrelated to X and Y.
  AttrNames independent;
  std::string key_attribute = "id";

  std::vector<std::string> check() const {
    std::vector<std::string> out;
    if (n_tuples == 0) out.emplace_back("generator: need at least one tuple");
    if (options_per_tuple == 0) out.emplace_back("generator: need at least one option per tuple");
    if (domain_cardinality == 0) out.emplace_back("generator: domain cardinality must be positive");
    if (!(noise >= 0.0 && noise <= 1.0)) out.emplace_back("generator: noise outside [0, 1]");
    if (x.empty() || y.empty()) out.emplace_back("generator: X and Y must be non-empty");
    AttrNames all{key_attribute};
    all.insert(all.end(), x.begin(), x.end());
    all.insert(all.end(), y.begin(), y.end());
    all.insert(all.end(), independent.begin(), independent.end());
    for (auto& p : AttributeSchema(all).check()) out.push_back("generator: " + p);
    return out;
  }
};

struct GeneratedRelation {
  ProbRelation relation;
  /// Options whose Y deliberately differs from the planted mapping.
  std::size_t noisy_options = 0;
  std::size_t total_options = 0;
};

/// Plants x -> f(x), where f is a seeded permutation of the composite Y domain
/// applied to the composite X index. Each option draws X uniformly and keeps
/// f(x) with probability 1 - noise, otherwise takes a uniformly drawn wrong Y.
inline GeneratedRelation generate_detailed(const GeneratorSpec& spec) {
  if (auto problems = spec.check(); !problems.empty()) throw Error(problems.front());
  SampleRng rng(splitmix64(spec.seed));
  const std::uint64_t m = spec.domain_cardinality;
  auto power = [&](std::size_t k) {
    std::uint64_t v = 1;
    for (std::size_t i = 0; i < k; ++i) v *= m;
    return v;
  };
  const std::uint64_t x_space = power(spec.x.size());
  const std::uint64_t y_space = power(spec.y.size());

  std::vector<std::uint64_t> f(y_space);
  std::iota(f.begin(), f.end(), std::uint64_t{0});
  for (std::uint64_t i = y_space; i > 1; --i) std::swap(f[i - 1], f[uniform_index(rng, i)]);

  auto digits = [&](std::uint64_t code, std::size_t n, std::vector<Value>& out) {
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back("v" + std::to_string(code % m));
      code /= m;
    }
  };

  AttrNames attrs{spec.key_attribute};
  attrs.insert(attrs.end(), spec.x.begin(), spec.x.end());
  attrs.insert(attrs.end(), spec.y.begin(), spec.y.end());
  attrs.insert(attrs.end(), spec.independent.begin(), spec.independent.end());
  AttributeSchema schema(attrs, spec.key_attribute);

  GeneratedRelation out;
  const double p = 1.0 / static_cast<double>(spec.options_per_tuple);
  const std::size_t width = std::to_string(spec.n_tuples).size();
  std::vector<ProbTuple> tuples;
  tuples.reserve(spec.n_tuples);
  for (std::size_t t = 0; t < spec.n_tuples; ++t) {
    ProbTuple tuple;
    tuple.key = std::to_string(t + 1);
    tuple.key.insert(0, width - tuple.key.size(), '0');
    tuple.key.insert(0, "t");
    for (std::size_t k = 0; k < spec.options_per_tuple; ++k) {
      const std::uint64_t xc = uniform_index(rng, x_space);
      std::uint64_t yc = f[xc % y_space];
      if (y_space > 1 && uniform01(rng) < spec.noise) {
        const std::uint64_t other = uniform_index(rng, y_space - 1);
        yc = other >= yc ? other + 1 : other;
        ++out.noisy_options;
      }
      OptionAssignment o;
      o.p = p;
      digits(xc, spec.x.size(), o.values);
      digits(yc, spec.y.size(), o.values);
      for (std::size_t i = 0; i < spec.independent.size(); ++i)
        o.values.push_back("v" + std::to_string(uniform_index(rng, m)));
      tuple.options.push_back(std::move(o));
      ++out.total_options;
    }
    tuples.push_back(std::move(tuple));
  }
  out.relation = ProbRelation(std::move(schema), std::move(tuples));
  return out;
}

inline ProbRelation generate(const GeneratorSpec& spec) {
  return generate_detailed(spec).relation;
}

}  // namespace pdep
