// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Dataset criteria read TUDataset directories under $WLTAB_DATA_DIR.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "generators.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "wltab/cli.hpp"
#include "wltab/wltab.hpp"

using namespace wltab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli_run(std::vector<std::string> args) {
  args.insert(args.begin(), "wltab");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& tag) {
  const auto dir = fs::temp_directory_path() / ("wltab_accept_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

QuantifierSet qset(const std::string& spec) { return parse_quantifier_set(spec); }

// Dataset directory for `name`: $WLTAB_DATA_DIR/<name> or $WLTAB_DATA_DIR itself.
std::optional<std::pair<fs::path, std::string>> find_dataset(std::initializer_list<const char*> names) {
  const char* root = std::getenv("WLTAB_DATA_DIR");
  if (!root) return std::nullopt;
  for (const char* n : names)
    for (const auto& dir : {fs::path(root) / n, fs::path(root)})
      if (fs::exists(dir / (std::string(n) + "_A.txt"))) return std::make_pair(dir, std::string(n));
  return std::nullopt;
}

// ---------------------------------------------------------------------------

Outcome table3() {
  struct Row {
    std::initializer_list<const char*> names;
    const char* formula;
    double expected;
  };
  const std::vector<Row> rows{{{"AIDS"}, "!<U>(l4 | l8 | l20)", 82.9},
                              {{"BZR"}, "!<U>(l6 | <maj>l8)", 82.2},
                              {{"PTC_MM", "PTC-MM"}, "[maj,U]<><>(l6 | l8)", 67.0}};
  std::vector<std::pair<fs::path, std::string>> found;
  for (const auto& r : rows) {
    auto ds = find_dataset(r.names);
    if (!ds) return {false, std::string("dataset ") + *r.names.begin() + " not found (set WLTAB_DATA_DIR)"};
    found.push_back(*ds);
  }
  const auto dir = scratch("table3");
  std::string detail;
  bool any_base = false;
  for (long long base : {0LL, 1LL}) {
    bool ok = true;
    detail += "base " + std::to_string(base) + ":";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto t0 = Clock::now();
      const auto r = cli_run({"eval", "--dataset", found[i].first.string(), "--name", found[i].second, "--formula",
                              rows[i].formula, "--label-base", std::to_string(base), "--report",
                              (dir / "r.json").string()});
      const double secs = seconds_since(t0);
      if (r.code != 0) {
        ok = false;
        detail += " " + found[i].second + " error(" + r.err + ")";
        continue;
      }
      const double acc = json::parse(r.out)["accuracy"].get<double>();
      const bool hit = std::abs(acc - rows[i].expected) <= 0.2 + 1e-9 && secs < 10.0;
      ok = ok && hit;
      detail += " " + found[i].second + "=" + fmt("%.2f", acc) + " (" + fmt("%.2fs", secs) + ")";
    }
    detail += "; ";
    any_base = any_base || ok;
  }
  fs::remove_all(dir);
  return {any_base, detail};
}

Outcome oracle_suite() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(4201);
  const std::vector<QuantifierSet> sets{qset("exists"), qset("exists,maj"), qset("counting")};
  std::size_t pairs = 0, checks = 0, mismatches = 0, separated_count = 0;
  for (; pairs < 500; ++pairs) {
    const double p = pairs % 2 == 0 ? 0.2 : 0.5;
    auto n1 = 1 + rng() % 8, n2 = 1 + rng() % 8;
    PointedModel m1{random_graph(n1, p, 2, rng()), static_cast<NodeId>(rng() % n1)};
    PointedModel m2{random_graph(n2, p, 2, rng()), static_cast<NodeId>(rng() % n2)};
    // every fourth pair compares a model with a relabelled copy of itself
    if (pairs % 4 == 3) {
      const auto perm = random_permutation(n1, rng());
      m2 = {permuted(m1.graph, perm), perm[m1.point]};
      n2 = n1;
    }
    const LabeledGraph u = disjoint_union(m1.graph, m2.graph);
    const NodeId v = m1.point, w = static_cast<NodeId>(n1 + m2.point);
    Evaluator eval(u);
    for (std::size_t d = 0; d <= 2; ++d)
      for (const auto& q : sets) {
        const bool sep = separated(m1, m2, d, q);
        const auto phi = q_characteristic(u, w, d, q);
        mismatches += sep != !eval.check(v, phi.formula);
        separated_count += sep;
        ++checks;
      }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 60.0,
          std::to_string(pairs) + " pairs, " + std::to_string(checks) + " checks (" + std::to_string(separated_count) +
              " separated), " + std::to_string(mismatches) + " mismatches, " + fmt("%.1fs", secs)};
}

Outcome graded_types_vs_wl() {
  std::mt19937_64 rng(2101);
  std::size_t mismatches = 0, comparisons = 0;
  for (int i = 0; i < 200; ++i) {
    const auto g = gen::random_model(rng, 12, 2);
    const auto wl = oracle::direct_wl({g}, 3);
    const auto engine = refine(g, 3, qset("counting"));
    for (std::size_t d = 0; d <= 3; ++d) {
      const auto types = graded_types(g, d);
      for (NodeId u = 0; u < g.node_count(); ++u)
        for (NodeId v = 0; v < g.node_count(); ++v) {
          const bool same = types[u].formula == types[v].formula;
          mismatches += same != (wl[d][u] == wl[d][v]);
          mismatches += same != (engine.rounds[d][u] == engine.rounds[d][v]);
          ++comparisons;
        }
    }
  }
  return {mismatches == 0, std::to_string(comparisons) + " node pairs, " + std::to_string(mismatches) + " mismatches"};
}

Outcome fast_path() {
  std::mt19937_64 rng(3101);
  std::size_t mismatches = 0, rounds = 0;
  for (int i = 0; i < 200; ++i) {
    const auto g = i % 2 ? gen::random_model(rng, 14, 2) : random_graph(2 + rng() % 14, i % 4 ? 0.2 : 0.5, 2, rng());
    for (bool fast : {true, false}) {
      RefineOptions opts;
      opts.fast_paths = fast;
      opts.to_stability = true;
      const auto r = refine(g, 0, qset("counting"), opts);
      const auto wl = oracle::direct_wl({g}, r.depth() + 1);
      for (std::size_t d = 0; d <= r.depth(); ++d) {
        mismatches += !oracle::same_partition(r.rounds[d], wl[d]);
        ++rounds;
      }
      // the engine's stable round is stable for direct WL too
      mismatches += !oracle::same_partition(wl[r.depth()], wl[r.depth() + 1]);
    }
  }
  return {mismatches == 0, std::to_string(rounds) + " rounds compared, " + std::to_string(mismatches) + " mismatches"};
}

LabeledGraph star(std::size_t leaves, bool undirected) {
  std::vector<std::vector<NodeId>> out(leaves + 1);
  std::vector<LabelId> labels(leaves + 1, 1);
  labels[0] = 0;
  for (NodeId l = 1; l <= leaves; ++l) {
    out[0].push_back(l);
    if (undirected) out[l].push_back(0);
  }
  return {std::move(out), std::move(labels), 2};
}

Outcome coarseness() {
  std::mt19937_64 rng(5101);
  std::size_t violations = 0, rounds = 0;
  auto check_graphs = [&](const std::vector<LabeledGraph>& gs) {
    RefineOptions opts;
    opts.to_stability = true;
    const auto wl = refine(gs, 0, qset("counting"), opts);
    const std::size_t depth = wl.depth() + 1;
    const auto cwl = refine(gs, depth, qset("exists,maj"));
    const auto direct = oracle::direct_wl(gs, depth);
    for (std::size_t d = 0; d <= depth; ++d) {
      violations += !oracle::refines(direct[d], cwl.rounds[d]);
      ++rounds;
    }
  };
  for (int i = 0; i < 200; ++i) check_graphs({gen::random_model(rng, 12, 2)});
  std::string stars;
  for (bool undirected : {false, true}) {
    const PointedModel a{star(234, undirected), 0}, b{star(235, undirected), 0};
    check_graphs({a.graph, b.graph});
    if (!separated(a, b, 1, qset("counting"))) ++violations;
    for (std::size_t d = 0; d <= 6; ++d) violations += separated(a, b, d, qset("exists,maj"));
    stars += undirected ? " undirected" : " directed";
  }
  return {violations == 0, std::to_string(rounds) + " rounds incl. 234/235 stars (" + stars.substr(1) + "), " +
                               std::to_string(violations) + " violations"};
}

Quantifier odd_quantifier() {
  return Quantifier::unary("odd", [](std::size_t, std::size_t s) { return s % 2 == 1; });
}

Outcome pruning() {
  std::mt19937_64 rng(6101);
  const std::vector<QuantifierSet> sets{qset("exists"),   qset("maj"),       qset("exists,maj"),
                                        qset("geq:5"),    qset("counting"),  qset("pct>20,pct>90"),
                                        qset("more"),     QuantifierSet({odd_quantifier()})};
  std::size_t mismatches = 0, resampled = 0;
  std::string detail;
  RefineOptions opts;
  opts.cap = 20;
  for (const auto& q : sets) {
    std::size_t positives = 0;
    for (int pair = 0; pair < 500; ++pair) {
      const std::size_t n = 5 + rng() % 10;
      const double p = std::array{0.3, 0.5, 0.7}[rng() % 3];
      const auto g = random_graph(n, p, 2, rng());
      std::vector<int> colors;
      if (pair % 2)
        colors = oracle::direct_wl({g}, 1)[1];
      else
        for (NodeId v = 0; v < n; ++v) colors.push_back(static_cast<int>(g.label(v)));
      const NodeId v = static_cast<NodeId>(rng() % n);
      NodeId w = static_cast<NodeId>(rng() % n);
      if (pair % 3 != 0) {
        std::vector<NodeId> same;
        for (NodeId x = 0; x < n; ++x)
          if (x != v && colors[x] == colors[v]) same.push_back(x);
        if (!same.empty()) w = same[rng() % same.size()];
      }
      const std::vector<Color> engine_colors(colors.begin(), colors.end());
      bool equal = false;
      try {
        equal = node_signature(g, v, engine_colors, q, opts) == node_signature(g, w, engine_colors, q, opts);
      } catch (const SizeError&) {
        ++resampled;
        --pair;
        continue;
      }
      const bool expected = oracle::q_equivalent(g, v, w, colors, resolve(q, g.max_out_degree()).members());
      mismatches += equal != expected;
      positives += expected;
    }
    detail += " " + q.spec() + ":" + std::to_string(positives) + "/500";
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches; equivalent pairs" + detail + "; " +
                               std::to_string(resampled) + " pairs over the table cap resampled"};
}

DatasetBundle bundle_of(std::vector<LabeledGraph> graphs, std::size_t labels) {
  DatasetBundle b;
  b.name = "S";
  for (std::size_t l = 0; l < labels; ++l) b.label_alphabet.push_back(std::to_string(l));
  b.class_values = {"0", "1"};
  for (std::size_t i = 0; i < graphs.size(); ++i) b.graph_class.push_back(i % 3 == 0);
  b.graphs = std::move(graphs);
  return b;
}

Outcome determinism() {
  std::mt19937_64 rng(7101);
  std::vector<LabeledGraph> gs;
  for (int i = 0; i < 150; ++i) gs.push_back(gen::random_model(rng, 16, 3));
  const auto dir = scratch("determinism");
  write_tudataset(bundle_of(gs, 3), dir / "ds", "S");
  const std::size_t max_threads = std::max(1u, std::thread::hardware_concurrency());
  std::set<std::string> tab_outputs, refine_outputs;
  std::size_t runs = 0;
  for (int rep = 0; rep < 3; ++rep)
    for (std::size_t threads : {std::size_t{1}, std::size_t{4}, max_threads}) {
      const auto t = std::to_string(threads);
      const auto a = cli_run({"tabularize", "--dataset", (dir / "ds").string(), "--name", "S", "--depth", "3",
                              "--quantifiers", "exists,maj", "--threads", t, "--out", (dir / "t.csv").string(),
                              "--manifest", (dir / "t.json").string(), "--report", (dir / "r.json").string()});
      const auto b = cli_run({"refine", "--dataset", (dir / "ds").string(), "--name", "S", "--depth", "3",
                              "--quantifiers", "counting", "--threads", t, "--out", (dir / "c.json").string(),
                              "--report", (dir / "r.json").string()});
      if (a.code != 0 || b.code != 0) return {false, "cli failed: " + a.err + b.err};
      tab_outputs.insert(slurp(dir / "t.csv") + "\n--\n" + slurp(dir / "t.json"));
      refine_outputs.insert(slurp(dir / "c.json"));
      ++runs;
    }
  fs::remove_all(dir);

  std::size_t row_mismatches = 0;
  for (int i = 0; i < 100; ++i) {
    const auto g = gen::random_model(rng, 14, 3);
    const auto h = permuted(g, random_permutation(g.node_count(), rng()));
    for (const char* spec : {"counting", "exists,maj"}) {
      const auto t = tabularize(bundle_of({g, h}, 3), qset(spec), 3);
      row_mismatches += t.rows[0] != t.rows[1];
    }
  }
  const bool ok = tab_outputs.size() == 1 && refine_outputs.size() == 1 && row_mismatches == 0;
  return {ok, std::to_string(runs) + " runs over threads {1,4," + std::to_string(max_threads) + "}: " +
                  std::to_string(tab_outputs.size()) + " distinct tabularize outputs, " +
                  std::to_string(refine_outputs.size()) + " distinct refine outputs; " +
                  std::to_string(row_mismatches) + " permuted-row mismatches over 100 graphs"};
}

Outcome caps() {
  // feature cap: class counts per round from the direct WL oracle
  std::mt19937_64 rng(8101);
  std::vector<LabeledGraph> gs;
  for (int i = 0; i < 400; ++i) gs.push_back(random_graph(20 + rng() % 20, 0.4, 3, rng()));
  const auto bundle = bundle_of(gs, 3);
  const std::size_t depth = 6, cap = 5000;
  const auto wl = oracle::direct_wl(gs, depth);
  std::optional<std::size_t> expected;
  std::size_t total = 0, kept = 0;
  for (std::size_t r = 0; r <= depth; ++r) {
    const std::size_t classes = std::set<int>(wl[r].begin(), wl[r].end()).size();
    if (total + classes > cap) {
      expected = r;
      break;
    }
    total += classes;
    kept = r;
  }
  TabularizeOptions opts;
  opts.max_features = cap;
  const auto t = tabularize(bundle, qset("counting"), depth, opts);
  const bool cap_ok = expected && t.cap_reached_round == expected && t.columns.size() == total && t.depth == kept &&
                      t.columns.size() <= cap;
  std::string detail = "expected cap round " + (expected ? std::to_string(*expected) : std::string("none")) +
                       ", got " + (t.cap_reached_round ? std::to_string(*t.cap_reached_round) : std::string("none")) +
                       " with " + std::to_string(t.columns.size()) + " columns";

  // timeout: stars whose centres see 26 distinct leaf colours under a
  // non-monotone quantifier, so every centre needs a 2^26-entry table
  std::vector<std::vector<NodeId>> out;
  std::vector<LabelId> labels;
  const std::size_t leaves = 26;
  for (int s = 0; s < 200; ++s) {
    const NodeId centre = static_cast<NodeId>(out.size());
    out.emplace_back();
    labels.push_back(static_cast<LabelId>(leaves));
    for (std::size_t l = 0; l < leaves; ++l) {
      out[centre].push_back(static_cast<NodeId>(out.size()));
      out.emplace_back();
      labels.push_back(static_cast<LabelId>(l));
    }
  }
  const LabeledGraph heavy(std::move(out), std::move(labels), leaves + 1);
  RefineOptions ropts;
  ropts.cap = leaves;
  ropts.threads = 1;
  bool timed_out = false;
  const auto t0 = Clock::now();
  try {
    refine(heavy, 1, QuantifierSet({odd_quantifier()}), ropts);
  } catch (const TimeoutError&) {
    timed_out = true;
  }
  const double secs = seconds_since(t0);
  detail += "; pathological round " + std::string(timed_out ? "raised TimeoutError" : "finished") + " after " +
            fmt("%.1fs", secs) + " (budget " + fmt("%.0fs", ropts.round_timeout) + ")";
  return {cap_ok && timed_out, detail};
}

Outcome miner_floor() {
  const auto ds = find_dataset({"AIDS"});
  if (!ds) return {false, "dataset AIDS not found (set WLTAB_DATA_DIR)"};
  const auto dir = scratch("miner");
  const auto t0 = Clock::now();
  const auto r = cli_run({"mine", "--dataset", ds->first.string(), "--name", ds->second, "--max-size", "6",
                          "--budget", "10m", "--top", "5", "--report", (dir / "r.json").string()});
  const double secs = seconds_since(t0);
  fs::remove_all(dir);
  if (r.code != 0) return {false, "mine failed: " + r.err};
  const auto j = json::parse(r.out);
  const auto& best = j["results"][0]["formulas"][0];
  const double acc = best["accuracy"].get<double>();
  return {acc >= 82.9, "best " + best["formula"].get<std::string>() + " at " + fmt("%.2f", acc) + "% after " +
                           fmt("%.0fs", secs) + ", completed size " +
                           std::to_string(j["results"][0]["completed_size"].get<std::size_t>())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"table3_reproduction", table3},
      {"characteristic_formula_oracle", oracle_suite},
      {"graded_types_match_wl", graded_types_vs_wl},
      {"fast_path_equivalence", fast_path},
      {"cwl_coarseness", coarseness},
      {"pruning_soundness", pruning},
      {"determinism_and_invariance", determinism},
      {"caps_honored", caps},
      {"miner_floor", miner_floor},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << fmt("%.1fs", seconds_since(t0))
              << "]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
