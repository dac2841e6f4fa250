#pragma once

// `pdep` command line: assess, mine, gen, convert, oracle.
// Exit codes: 0 ok, 1 I/O failure, 2 usage, 3 invalid data, 4 oracle cap exceeded.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pdep/conditional.hpp"
#include "pdep/dataio.hpp"
#include "pdep/miner.hpp"
#include "pdep/model.hpp"
#include "pdep/pafd_estimators.hpp"
#include "pdep/pfd_exact.hpp"
#include "pdep/rng.hpp"
#include "pdep/worlds_oracle.hpp"

namespace pdep::cli {

enum ExitCode : int { kOk = 0, kIoFailure = 1, kUsage = 2, kBadData = 3, kCapExceeded = 4 };

class UsageError : public Error {
 public:
  using Error::Error;
};

struct ParsedDep {
  AttrNames x;
  AttrNames y;
  bool approximate_arrow = false;
};

inline AttrNames split_attrs(const std::string& side) {
  AttrNames out;
  std::stringstream s(side);
  std::string item;
  while (std::getline(s, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw UsageError("empty attribute name in '" + side + "'");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

/// `A,B->C` or `A,B~>C`.
inline ParsedDep parse_dep(const std::string& text) {
  const auto fd = text.find("->");
  const auto afd = text.find("~>");
  if ((fd == std::string::npos) == (afd == std::string::npos))
    throw UsageError("--dep must contain exactly one '->' or '~>': '" + text + "'");
  const auto at = fd != std::string::npos ? fd : afd;
  ParsedDep d{split_attrs(text.substr(0, at)), split_attrs(text.substr(at + 2)),
              afd != std::string::npos};
  if (d.x.empty() || d.y.empty()) throw UsageError("--dep needs attributes on both sides");
  return d;
}

namespace detail {

using OrderedJson = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string hex_digest(std::uint64_t h) {
  std::ostringstream s;
  s << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

class Timer {
 public:
  explicit Timer(bool enabled, std::ostream& err) : enabled_(enabled), err_(err) {}
  void phase(const char* name) {
    if (!enabled_) return;
    const auto now = Clock::now();
    err_ << "time " << name << " "
         << std::chrono::duration<double, std::milli>(now - last_).count() << " ms\n";
    last_ = now;
  }

 private:
  bool enabled_;
  std::ostream& err_;
  Clock::time_point last_ = Clock::now();
};

struct DataFlags {
  std::string data;
  bool normalize = false;
  std::string key_column;
};

struct Loaded {
  ProbRelation relation;
  std::uint64_t digest;
};

inline Loaded load_input(const DataFlags& f) {
  const std::string bytes = read_file(f.data);
  LoadOptions opts;
  opts.normalize = f.normalize;
  if (!f.key_column.empty()) opts.csv_key_column = f.key_column;
  std::istringstream in(bytes);
  return {read_relation(in, opts), fnv1a64(bytes)};
}

inline void add_data_flags(CLI::App* app, DataFlags& f) {
  app->add_option("--data", f.data, "relation file (JSON lines or CSV)")->required();
  app->add_flag("--normalize", f.normalize, "rescale option masses instead of rejecting them");
  app->add_option("--key-column", f.key_column, "CSV column holding tuple keys");
}

inline OrderedJson names_json(const AttrNames& a) {
  OrderedJson j = OrderedJson::array();
  for (const auto& s : a) j.push_back(s);
  return j;
}

inline OrderedJson report_json(const ConfidenceReport& r) {
  OrderedJson j;
  j["value"] = r.value;
  j["method"] = std::string(to_string(r.method));
  j["samples_used"] = r.samples_used ? OrderedJson(*r.samples_used) : OrderedJson(nullptr);
  j["std_error"] = r.std_error ? OrderedJson(*r.std_error) : OrderedJson(nullptr);
  return j;
}

struct McFlags {
  std::uint64_t seed = 0;
  double epsilon = McConfig{}.epsilon;
  std::size_t min_samples = McConfig{}.min_samples;
  std::size_t max_samples = McConfig{}.max_samples;
  std::size_t window = McConfig{}.window;
  unsigned threads = 1;

  McConfig config() const {
    McConfig c;
    c.seed = seed;
    c.epsilon = epsilon;
    c.min_samples = min_samples;
    c.max_samples = max_samples;
    c.window = window;
    c.threads = threads;
    if (auto problems = c.check(); !problems.empty()) throw UsageError(problems.front());
    return c;
  }
};

inline void add_mc_flags(CLI::App* app, McFlags& f) {
  app->add_option("--seed", f.seed, "random seed");
  app->add_option("--epsilon", f.epsilon, "target CI half-width and stability window tolerance");
  app->add_option("--min-samples", f.min_samples, "minimum Monte Carlo samples");
  app->add_option("--max-samples", f.max_samples, "maximum Monte Carlo samples");
  app->add_option("--window", f.window, "samples between stopping checks");
  app->add_option("--threads", f.threads, "worker threads; output does not depend on it")
      ->check(CLI::PositiveNumber);
}

struct AssessFlags {
  DataFlags data;
  McFlags mc;
  std::string dep;
  std::string kind;
  std::string tableau;
  std::string method;
  double cap = OracleOptions{}.world_cap;
  bool time = false;
};

inline std::string default_method(DependencyKind k) {
  return is_approximate(k) ? "mc" : "exact";
}

inline int run_assess(const AssessFlags& f, bool oracle_only, std::ostream& out,
                      std::ostream& err) {
  const ParsedDep parsed = parse_dep(f.dep);
  DependencyKind kind;
  if (f.kind.empty()) {
    kind = parsed.approximate_arrow ? DependencyKind::kPafd : DependencyKind::kPfd;
  } else {
    kind = *parse_kind(f.kind);
    if (parsed.approximate_arrow != is_approximate(kind))
      err << "warning: --dep arrow '" << (parsed.approximate_arrow ? "~>" : "->")
          << "' does not match --kind " << f.kind << "; using --kind\n";
  }
  if (is_conditional(kind) && f.tableau.empty())
    throw UsageError("--kind " + std::string(to_string(kind)) + " needs --tableau");
  if (!is_conditional(kind) && !f.tableau.empty())
    throw UsageError("--tableau only applies to cpfd and cpafd");
  const std::string method = oracle_only ? "oracle" : f.method.empty() ? default_method(kind) : f.method;
  if (method == "exact" && is_approximate(kind))
    throw UsageError("--method exact applies to pfd and cpfd only");
  if ((method == "mc" || method == "union" || method == "det") && !is_approximate(kind))
    throw UsageError("--method " + method + " applies to pafd and cpafd only");

  Timer timer(f.time, err);
  Loaded in = load_input(f.data);
  std::uint64_t digest = in.digest;
  DependencySpec spec{kind, parsed.x, parsed.y, std::nullopt};
  if (!f.tableau.empty()) {
    const std::string bytes = read_file(f.tableau);
    std::istringstream s(bytes);
    spec.tableau = read_tableau(s);
    digest = fnv1a64(bytes, digest);
  }
  if (auto problems = spec.check(in.relation.schema()); !problems.empty())
    throw UsageError(problems.front());
  timer.phase("load");

  ConfidenceReport report;
  if (method == "oracle") {
    OracleOptions o;
    o.world_cap = f.cap;
    report = oracle_confidence(in.relation, spec, o);
  } else if (method == "exact") {
    ProbRelation tdi = in.relation.kind() == RelationKind::kTi ? ti_to_tdi(in.relation)
                                                                : in.relation;
    report = kind == DependencyKind::kCpfd ? assess_cpfd(tdi, spec.x, spec.y, *spec.tableau)
                                           : assess_pfd(tdi, spec.x, spec.y);
  } else {
    ProbRelation rel = in.relation;
    if (spec.tableau) rel = mark_tableau(rel, spec.x, spec.y, *spec.tableau).relation;
    if (method == "mc") report = assess_pafd_mc(rel, spec.x, spec.y, f.mc.config());
    else if (method == "union") report = assess_pafd_unioned(rel, spec.x, spec.y);
    else report = assess_pafd_deterministic(rel, spec.x, spec.y);
  }
  timer.phase("assess");

  OrderedJson j;
  j["kind"] = std::string(to_string(kind));
  j["x"] = names_json(spec.x);
  j["y"] = names_json(spec.y);
  j.update(report_json(report));
  j["input_digest"] = hex_digest(digest);
  out << j.dump() << '\n';
  return kOk;
}

struct MineFlags {
  DataFlags data;
  McFlags mc;
  double conf = MinerConfig{}.confidence_threshold;
  double spec = MinerConfig{}.specificity_threshold;
  double high = MinerConfig{}.high_confidence_threshold;
  std::size_t top_k = 0;
  std::string method = "mc";
  std::string targets;
  bool include_keylike = false;
  bool time = false;
};

inline int run_mine(const MineFlags& f, std::ostream& out, std::ostream& err) {
  MinerConfig cfg;
  cfg.confidence_threshold = f.conf;
  cfg.specificity_threshold = f.spec;
  cfg.high_confidence_threshold = f.high;
  cfg.mc = f.mc.config();
  if (f.top_k) cfg.top_k = f.top_k;
  cfg.method = f.method == "union" ? MinerMethod::kUnioned : MinerMethod::kMc;
  if (!f.targets.empty()) cfg.target_attrs = split_attrs(f.targets);
  cfg.include_keylike = f.include_keylike;
  if (auto problems = cfg.check(); !problems.empty()) throw UsageError(problems.front());

  Timer timer(f.time, err);
  Loaded in = load_input(f.data);
  if (cfg.target_attrs) {
    try {
      resolve_attrs(in.relation.schema(), *cfg.target_attrs);
    } catch (const Error& e) {
      throw UsageError(std::string("--targets: ") + e.what());
    }
  }
  timer.phase("load");
  MinerStats stats;
  const auto found = mine(in.relation, cfg, &stats);
  timer.phase("mine");
  if (f.time)
    err << "stats nodes=" << stats.nodes << " pruned=" << stats.specificity_pruned
        << " redundant=" << stats.redundant << " assessed=" << stats.assessed << '\n';

  const std::string digest = hex_digest(in.digest);
  for (const auto& m : found) {
    OrderedJson j;
    j["x"] = names_json(m.dep.x);
    j["head"] = m.dep.y.front();
    j["confidence"] = m.report.value;
    j["method"] = std::string(to_string(m.report.method));
    j["samples_used"] =
        m.report.samples_used ? OrderedJson(*m.report.samples_used) : OrderedJson(nullptr);
    j["specificity"] = m.specificity;
    j["input_digest"] = digest;
    out << j.dump() << '\n';
  }
  return kOk;
}

struct GenFlags {
  GeneratorSpec spec;
  std::string x = "A";
  std::string y = "B";
  std::string independent;
  std::string out;
};

inline void emit_relation(const ProbRelation& r, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") write_relation(r, out);
  else save(r, path);
}

inline int run_gen(GenFlags f, std::ostream& out) {
  f.spec.x = split_attrs(f.x);
  f.spec.y = split_attrs(f.y);
  if (!f.independent.empty()) f.spec.independent = split_attrs(f.independent);
  if (auto problems = f.spec.check(); !problems.empty()) throw UsageError(problems.front());
  emit_relation(generate(f.spec), f.out, out);
  return kOk;
}

struct ConvertFlags {
  DataFlags data;
  std::string out;
};

/// TI input becomes TDI; other input is re-emitted as JSON lines.
inline int run_convert(const ConvertFlags& f, std::ostream& out) {
  Loaded in = load_input(f.data);
  const ProbRelation r =
      in.relation.kind() == RelationKind::kTi ? ti_to_tdi(in.relation) : in.relation;
  emit_relation(r, f.out, out);
  return kOk;
}

}  // namespace detail

/// Runs one command line and returns its exit code. Reports go to `out`,
/// diagnostics to `err`.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Confidence of functional dependencies over probabilistic relations", "pdep"};
  app.require_subcommand(1);
  const std::vector<std::string> kinds{"pfd", "pafd", "cpfd", "cpafd"};

  detail::AssessFlags assess_f;
  auto* assess = app.add_subcommand("assess", "confidence of one dependency");
  detail::add_data_flags(assess, assess_f.data);
  detail::add_mc_flags(assess, assess_f.mc);
  assess->add_option("--dep", assess_f.dep, "dependency, e.g. A,B->C or A~>C")->required();
  assess->add_option("--kind", assess_f.kind, "pfd, pafd, cpfd or cpafd")
      ->check(CLI::IsMember(kinds));
  assess->add_option("--tableau", assess_f.tableau, "pattern tableau file (cpfd, cpafd)");
  assess->add_option("--method", assess_f.method, "exact, mc, union, det or oracle")
      ->check(CLI::IsMember({"exact", "mc", "union", "det", "oracle"}));
  assess->add_option("--cap", assess_f.cap, "world limit for --method oracle");
  assess->add_flag("--time", assess_f.time, "print phase timings to stderr");

  detail::AssessFlags oracle_f;
  auto* oracle = app.add_subcommand("oracle", "exact confidence by enumerating possible worlds");
  detail::add_data_flags(oracle, oracle_f.data);
  oracle->add_option("--dep", oracle_f.dep, "dependency, e.g. A,B->C or A~>C")->required();
  oracle->add_option("--kind", oracle_f.kind, "pfd, pafd, cpfd or cpafd")
      ->check(CLI::IsMember(kinds));
  oracle->add_option("--tableau", oracle_f.tableau, "pattern tableau file (cpfd, cpafd)");
  oracle->add_option("--cap", oracle_f.cap, "maximum number of worlds");
  oracle->add_flag("--time", oracle_f.time, "print phase timings to stderr");

  detail::MineFlags mine_f;
  auto* mine_cmd = app.add_subcommand("mine", "discover pAFDs X ~> A");
  detail::add_data_flags(mine_cmd, mine_f.data);
  detail::add_mc_flags(mine_cmd, mine_f.mc);
  mine_cmd->add_option("--conf-threshold", mine_f.conf, "minimum confidence to report");
  mine_cmd->add_option("--specificity-threshold", mine_f.spec,
                       "lattice nodes above this specificity are cut");
  mine_cmd->add_option("--high-conf-threshold", mine_f.high,
                       "confidence that makes supersets redundant");
  mine_cmd->add_option("--top-k", mine_f.top_k, "report only the k most confident")
      ->check(CLI::PositiveNumber);
  mine_cmd->add_option("--method", mine_f.method, "mc or union")
      ->check(CLI::IsMember({"mc", "union"}));
  mine_cmd->add_option("--targets", mine_f.targets, "comma-separated heads to test");
  mine_cmd->add_flag("--include-keylike", mine_f.include_keylike,
                     "keep key-like attributes as determiners");
  mine_cmd->add_flag("--time", mine_f.time, "print phase timings to stderr");

  detail::GenFlags gen_f;
  auto* gen = app.add_subcommand("gen", "synthetic relation with a planted dependency");
  gen->add_option("--tuples", gen_f.spec.n_tuples, "number of tuples");
  gen->add_option("--options", gen_f.spec.options_per_tuple, "options per tuple");
  gen->add_option("--domain", gen_f.spec.domain_cardinality, "values per attribute");
  gen->add_option("--noise", gen_f.spec.noise, "chance an option breaks the planted mapping");
  gen->add_option("--seed", gen_f.spec.seed, "random seed");
  gen->add_option("--x", gen_f.x, "determining attributes");
  gen->add_option("--y", gen_f.y, "dependent attributes");
  gen->add_option("--independent", gen_f.independent, "extra unrelated attributes");
  gen->add_option("--out", gen_f.out, "output file (default stdout)");

  detail::ConvertFlags convert_f;
  auto* convert = app.add_subcommand("convert", "rewrite a relation as TDI JSON lines");
  detail::add_data_flags(convert, convert_f.data);
  convert->add_option("--out", convert_f.out, "output file (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*assess) return detail::run_assess(assess_f, false, out, err);
    if (*oracle) return detail::run_assess(oracle_f, true, out, err);
    if (*mine_cmd) return detail::run_mine(mine_f, out, err);
    if (*gen) return detail::run_gen(gen_f, out);
    if (*convert) return detail::run_convert(convert_f, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const WorldCapExceeded& e) {
    err << "error: " << e.what() << '\n';
    return kCapExceeded;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kBadData;
  }
  return kUsage;
}

inline int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace pdep::cli
