// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "pdep/cli.hpp"

namespace {

using namespace pdep;
using testing::_;
using testing::row_tableau;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Instance {
  ProbRelation r;
  AttrNames x, y;
  PatternTableau tableau;
};

// Shared by criteria 1 and 4.
std::vector<Instance> random_instances() {
  std::vector<Instance> out;
  SampleRng rng(20240601);
  for (int i = 0; i < 1000; ++i) {
    auto r = testing::random_tdi(rng, {12, 3, 4, 4});
    auto [x, y] = testing::random_xy(rng, r.schema());
    auto tab = testing::random_tableau(rng, r, x, y);
    out.push_back({std::move(r), std::move(x), std::move(y), std::move(tab)});
  }
  return out;
}

// The tableau itself when marking leaves no VIOLATES option, else its Y cells wildcarded.
PatternTableau eliminating_only(const Instance& i) {
  if (mark_tableau(i.r, i.x, i.y, i.tableau).violates == 0) return i.tableau;
  PatternTableau t = i.tableau;
  for (auto& row : t.rows)
    for (std::size_t c = t.x_attrs.size(); c < row.size(); ++c) row[c] = std::nullopt;
  return t;
}

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome oracle_equivalence(const std::vector<Instance>& inst) {
  const auto t0 = Clock::now();
  double worst_pfd = 0.0, worst_cpfd = 0.0;
  for (const auto& i : inst) {
    worst_pfd = std::max(worst_pfd, std::abs(assess_pfd(i.r, i.x, i.y).value -
                                             testing::oracle(i.r, DependencyKind::kPfd, i.x, i.y)));
    worst_cpfd = std::max(
        worst_cpfd, std::abs(assess_cpfd(i.r, i.x, i.y, i.tableau).value -
                             testing::oracle(i.r, DependencyKind::kCpfd, i.x, i.y, i.tableau)));
  }
  const double secs = seconds_since(t0);
  return {worst_pfd <= 1e-9 && worst_cpfd <= 1e-9 && secs < 120.0,
          fmt("%zu instances, max |pfd-oracle| %.2e, max |cpfd-oracle| %.2e, %.1f s", inst.size(),
              worst_pfd, worst_cpfd, secs)};
}

Outcome d1_values() {
  const auto r = testing::d1();
  const AttrNames c{"Color"}, t{"Type"};
  const auto red_star = row_tableau(c, t, {{"Red", "Star"}});
  const auto red_any = row_tableau(c, t, {{"Red", _}});
  struct Check {
    const char* name;
    double got, oracle, golden;
  };
  McConfig mc;
  mc.seed = 1;
  mc.epsilon = 0.002;
  const auto pafd = assess_pafd_mc(r, c, t, mc);
  std::vector<Check> checks{
      {"pfd", assess_pfd(r, c, t).value, testing::oracle(r, DependencyKind::kPfd, c, t), 0.75},
      {"pafd", testing::oracle(r, DependencyKind::kPafd, c, t),
       testing::oracle(r, DependencyKind::kPafd, c, t), 0.875},
      {"cpfd(Red,Star)", assess_cpfd(r, c, t, red_star).value,
       testing::oracle(r, DependencyKind::kCpfd, c, t, red_star), 0.5},
      {"cpfd(Red,_)", assess_cpfd(r, c, t, red_any).value,
       testing::oracle(r, DependencyKind::kCpfd, c, t, red_any), 0.75},
  };
  bool ok = std::abs(pafd.value - 0.875) <= 3 * *pafd.std_error + 1e-12;
  std::string detail = fmt("mc pafd %.4f;", pafd.value);
  for (const auto& ch : checks) {
    ok = ok && std::abs(ch.got - ch.golden) <= 1e-12 && std::abs(ch.oracle - ch.golden) <= 1e-12;
    detail += fmt(" %s %.6f (oracle %.6f)", ch.name, ch.got, ch.oracle);
  }
  return {ok, detail};
}

Outcome split_world_regression() {
  const auto r = testing::split_world();
  const AttrNames a{"A"}, bc{"B", "C"};
  const auto tab = row_tableau(a, bc, {{_, "b2", _}});
  const double pafd = assess_pafd_mc(r, a, bc, McConfig{}).value;
  const double cpafd = assess_cpafd(r, a, bc, tab, McConfig{}).value;
  return {pafd == 0.50 && cpafd == 0.02, fmt("pafd %.17g, cpafd %.17g", pafd, cpafd)};
}

Outcome dominance(const std::vector<Instance>& inst) {
  std::size_t t1_fail = 0, t1_strict_fail = 0, t2_fail = 0, constant_counterexamples = 0,
              strict_cases = 0;
  for (const auto& i : inst) {
    const double pfd = assess_pfd(i.r, i.x, i.y).value;
    const double pafd = testing::oracle(i.r, DependencyKind::kPafd, i.x, i.y);
    if (pafd < pfd - 1e-9) ++t1_fail;
    // A failing world keeps at least one row per x group, so its AFD is >= 1/N.
    if (pfd < 1.0 - 1e-9) {
      ++strict_cases;
      if (!(pafd > pfd) || pafd - pfd < (1.0 - pfd) / double(i.r.size()) - 1e-9) ++t1_strict_fail;
    }
    const auto elim = eliminating_only(i);
    if (assess_cpfd(i.r, i.x, i.y, elim).value < pfd - 1e-9) ++t2_fail;
    if (assess_cpfd(i.r, i.x, i.y, i.tableau).value < pfd - 1e-9) ++constant_counterexamples;
  }
  return {t1_fail == 0 && t1_strict_fail == 0 && t2_fail == 0,
          fmt("pafd<pfd %zu, strictness failures %zu/%zu, cpfd<pfd (non-violating tableaux) %zu; "
              "informational: original tableaux lower cpfd below pfd on %zu instances",
              t1_fail, t1_strict_fail, strict_cases, t2_fail, constant_counterexamples)};
}

Outcome mc_convergence() {
  GeneratorSpec g;
  g.n_tuples = 10000;
  g.domain_cardinality = 8;
  g.noise = 0.1;
  g.seed = 5;
  const auto r = generate(g);
  const AttrNames a{"A"}, b{"B"};

  McConfig stop;
  stop.seed = 1;
  const auto run = assess_pafd_mc(r, a, b, stop);
  const double half = 1.96 * *run.std_error;
  const bool stabilized = half < 0.005 && *run.samples_used <= 1000;

  McConfig ref_cfg;
  ref_cfg.seed = 999;
  ref_cfg.min_samples = ref_cfg.max_samples = 50000;
  ref_cfg.threads = 4;
  const double ref = assess_pafd_mc(r, a, b, ref_cfg).value;

  // RMS error of fixed-size estimates; slope of log(error) on log(k).
  std::vector<double> lx, ly;
  for (std::size_t k = 4; k <= 256; k *= 2) {
    double sq = 0.0;
    const int reps = 40;
    for (int rep = 0; rep < reps; ++rep) {
      McConfig c;
      c.seed = 1000 * k + static_cast<std::uint64_t>(rep);
      c.min_samples = c.max_samples = k;
      c.window = std::min<std::size_t>(k, 50);
      const double e = assess_pafd_mc(r, a, b, c).value - ref;
      sq += e * e;
    }
    lx.push_back(std::log(double(k)));
    ly.push_back(0.5 * std::log(sq / reps));
  }
  const double n = double(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {stabilized && std::abs(slope + 0.5) <= 0.1,
          fmt("half-width %.5f after %zu samples (estimate %.5f, reference %.5f), log-log slope %.3f",
              half, *run.samples_used, run.value, ref, slope)};
}

Outcome pruning_trend() {
  GeneratorSpec g;
  g.n_tuples = 25;
  g.domain_cardinality = 4;
  g.noise = 0.05;
  g.seed = 2;
  const auto small = generate(g);
  const double worlds = world_count(small);
  bool capped = false;
  try {
    testing::oracle(small, DependencyKind::kPfd, {"A"}, {"B"});
  } catch (const WorldCapExceeded&) {
    capped = true;
  }
  auto t0 = Clock::now();
  const double v_small = assess_pfd(small, {"A"}, {"B"}).value;
  const double ms_small = 1000.0 * seconds_since(t0);

  // Noise-free data keeps every branch alive; noisy data dies early.
  g.n_tuples = 10000;
  g.domain_cardinality = 8;
  double s_big = 0.0;
  std::string big_detail;
  for (double noise : {0.0, 0.05}) {
    g.noise = noise;
    const auto big = generate(g);
    t0 = Clock::now();
    const double v = assess_pfd(big, {"A"}, {"B"}).value;
    const double s = seconds_since(t0);
    s_big = std::max(s_big, s);
    big_detail += fmt(" noise %.2f: %.3f s (%.3g)", noise, s, v);
  }
  return {worlds > 1e6 && capped && ms_small < 100.0 && s_big < 10.0,
          fmt("25 tuples: %.3g worlds, enumeration refused: %s, assess_pfd %.2f ms (%.3g); "
              "10^4 tuples:%s",
              worlds, capped ? "yes" : "no", ms_small, v_small, big_detail.c_str())};
}

Outcome noise_robustness() {
  const std::vector<double> levels{0.0, 0.05, 0.1, 0.2, 0.3, 0.5};
  std::vector<double> mean_pafd(levels.size(), 0.0);
  double pfd_005 = 0.0, pafd_005 = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (std::size_t l = 0; l < levels.size(); ++l) {
      GeneratorSpec g;
      g.n_tuples = 100;
      g.noise = levels[l];
      g.seed = seed;
      const auto r = generate(g);
      McConfig c;
      c.seed = seed;
      const double pafd = assess_pafd_mc(r, {"A"}, {"B"}, c).value;
      mean_pafd[l] += pafd / 5.0;
      if (levels[l] == 0.05) {
        pfd_005 += assess_pfd(r, {"A"}, {"B"}).value / 5.0;
        pafd_005 += pafd / 5.0;
      }
    }
  }
  bool monotone = true;
  std::string curve;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    if (l && mean_pafd[l] > mean_pafd[l - 1]) monotone = false;
    curve += fmt(" %.2f:%.4f", levels[l], mean_pafd[l]);
  }
  return {pfd_005 < 0.1 && pafd_005 >= 0.85 && monotone,
          fmt("noise 0.05: pfd %.4g, pafd %.4f; mean pafd by noise%s", pfd_005, pafd_005,
              curve.c_str())};
}

Outcome estimator_divergence() {
  const auto d1 = testing::d1();
  const double d1_union = assess_pafd_unioned(d1, {"Color"}, {"Type"}).value;
  const double d1_oracle = testing::oracle(d1, DependencyKind::kPafd, {"Color"}, {"Type"});
  const auto over = testing::union_overshoot();
  const double ov_union = assess_pafd_unioned(over, {"X"}, {"Y"}).value;
  const double ov_oracle = testing::oracle(over, DependencyKind::kPafd, {"X"}, {"Y"});
  const bool under = d1_oracle - d1_union > 0.05;
  const bool over_dir = ov_union > ov_oracle + 1e-12;
  return {under && over_dir,
          fmt("D1 unioned %.4f vs oracle %.4f (diff %+.4f); TI fixture unioned %.4f vs oracle %.6f "
              "(diff %+.4f)",
              d1_union, d1_oracle, d1_union - d1_oracle, ov_union, ov_oracle, ov_union - ov_oracle)};
}

bool has(const std::vector<MinedDependency>& v, const AttrNames& x, const std::string& head) {
  for (const auto& m : v)
    if (m.dep.x == x && m.dep.y == AttrNames{head}) return true;
  return false;
}

Outcome mining() {
  int good = 0, nested = 0;
  const int runs = 20;
  for (int s = 0; s < runs; ++s) {
    GeneratorSpec g;
    g.n_tuples = 200;
    g.domain_cardinality = 4;
    g.noise = 0.05;
    g.seed = 100 + static_cast<std::uint64_t>(s);
    g.independent = {"C"};
    const auto r = generate(g);
    MinerConfig cfg;
    cfg.confidence_threshold = 0.8;
    cfg.specificity_threshold = 0.6;
    cfg.mc.seed = static_cast<std::uint64_t>(s);
    const auto hi = mine(r, cfg);
    if (has(hi, {"A"}, "B") && !has(hi, {"C"}, "B")) ++good;
    cfg.specificity_threshold = 0.3;
    const auto lo = mine(r, cfg);
    bool sub = true;
    for (const auto& m : lo) sub = sub && has(hi, m.dep.x, m.dep.y.front());
    if (sub) ++nested;
  }
  return {good >= 19 && nested == runs,
          fmt("A~>B present and C~>B absent in %d/%d runs; 0.3 results within 0.6 results in %d/%d",
              good, runs, nested, runs)};
}

struct CliOut {
  int code;
  std::string out;
};

CliOut cli_run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str()};
}

Outcome determinism() {
  const auto d1 = testing::scratch("acc_d1.jsonl").string();
  save(testing::d1(), d1);
  const auto tab = testing::scratch("acc_red.tab").string();
  {
    std::ofstream f(tab);
    f << "Color\t|\tType\nRed\t|\t_\n";
  }
  const auto gen = testing::scratch("acc_gen.jsonl").string();
  std::vector<std::string> gen_args{"gen", "--tuples", "300", "--noise", "0.05", "--seed", "9",
                                    "--independent", "C"};
  if (cli_run([&] {
        auto a = gen_args;
        a.insert(a.end(), {"--out", gen});
        return a;
      }()).code != 0)
    return {false, "gen --out failed"};

  const std::vector<std::vector<std::string>> commands{
      gen_args,
      {"assess", "--data", gen, "--dep", "A~>B", "--seed", "4"},
      {"assess", "--data", gen, "--dep", "A,C~>B", "--method", "union"},
      {"assess", "--data", gen, "--dep", "A->B", "--kind", "pfd"},
      {"assess", "--data", d1, "--dep", "Color~>Type", "--kind", "cpafd", "--tableau", tab,
       "--seed", "2"},
      {"oracle", "--data", d1, "--dep", "Color->Type", "--kind", "cpfd", "--tableau", tab},
      {"mine", "--data", gen, "--seed", "5"},
      {"convert", "--data", d1},
  };
  std::size_t compared = 0;
  for (const auto& cmd : commands) {
    const auto base = cli_run(cmd);
    if (base.code != 0 || base.out.empty()) return {false, "command failed: " + cmd.front()};
    for (const char* threads : {"1", "2", "8"}) {
      auto args = cmd;
      const bool mc = cmd.front() == "mine" || (cmd.front() == "assess" && cmd.size() > 5 &&
                                                std::find(cmd.begin(), cmd.end(), "--seed") != cmd.end());
      if (mc) args.insert(args.end(), {"--threads", threads});
      const auto again = cli_run(args);
      ++compared;
      if (again.code != base.code || again.out != base.out)
        return {false, "output differs for " + cmd.front() + " with threads " + threads};
    }
  }
  return {true, fmt("%zu commands, %zu repeated runs byte-identical", commands.size(), compared)};
}

}  // namespace

int main() {
  const auto instances = random_instances();
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"oracle equivalence", [&] { return oracle_equivalence(instances); }},
      {"D1 fixture values", d1_values},
      {"split-world regression", split_world_regression},
      {"dominance properties", [&] { return dominance(instances); }},
      {"MC convergence", mc_convergence},
      {"pruning speedup trend", pruning_trend},
      {"noise robustness", noise_robustness},
      {"estimator divergence", estimator_divergence},
      {"mining", mining},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o{false, ""};
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
