#pragma once

#include <sys/resource.h>

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wltab/wltab.hpp"

namespace wltab::cli {

using nlohmann::ordered_json;

struct RunReport {
  std::string subcommand;
  std::vector<std::string> argv;
  std::vector<std::pair<std::string, double>> phases;
  std::vector<std::string> outputs;
  std::vector<std::string> events;

  ordered_json to_json() const {
    ordered_json j;
    j["subcommand"] = subcommand;
    j["argv"] = argv;
    ordered_json p = ordered_json::object();
    for (const auto& [name, secs] : phases) p[name] = secs;
    j["phase_seconds"] = std::move(p);
    rusage usage{};
    getrusage(RUSAGE_SELF, &usage);
    j["peak_rss_kb"] = usage.ru_maxrss;
    j["outputs"] = outputs;
    j["events"] = events;
    return j;
  }
};

class Phase {
 public:
  Phase(RunReport& report, std::string name) : report_(report), name_(std::move(name)) {}
  ~Phase() {
    report_.phases.emplace_back(
        name_, std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count());
  }

 private:
  RunReport& report_;
  std::string name_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Options {
  std::string dataset, name, quantifiers = "counting", out, manifest, summary, report, formula, ops = "exists,maj,globals",
                                   connectives, budget;
  std::size_t depth = 0, max_features = 5000, threads = 0, max_size = 6, top = 10;
  std::optional<std::size_t> max_depth, target_class;
  double round_timeout = 30.0;
  long long label_base = 0;
  bool degree_labels = false, to_stability = false;
  std::vector<std::string> graphs;
  std::vector<std::size_t> points;
};

inline LabeledGraph read_graph_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(path + ": cannot open");
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(path + ": " + e.what());
  }
  try {
    const auto labels = j.at("labels").get<std::vector<LabelId>>();
    std::vector<std::vector<NodeId>> out(labels.size());
    for (const auto& e : j.value("edges", ordered_json::array())) {
      const auto u = e.at(0).get<NodeId>(), v = e.at(1).get<NodeId>();
      if (u >= out.size() || v >= out.size()) throw Error(path + ": edge endpoint out of range");
      out[u].push_back(v);
    }
    if (j.contains("label_count")) return {std::move(out), labels, j["label_count"].get<std::size_t>()};
    return {std::move(out), labels};
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

inline DatasetBundle load(const Options& o, RunReport& report) {
  Phase p(report, "parse");
  auto bundle = parse_tudataset(o.dataset, o.name);
  if (o.degree_labels) bundle = assign_degree_labels(bundle);
  return bundle;
}

inline void emit(const ordered_json& j, const std::string& path, std::ostream& out, RunReport& report) {
  if (path.empty()) {
    out << j.dump(2) << "\n";
  } else {
    write_text(path, j.dump(2) + "\n");
    report.outputs.push_back(path);
  }
}

/// Wall-clock ("90s", "10m") or candidate-count ("5000") budget.
inline void apply_budget(MinerConfig& cfg, const std::string& text) {
  if (text.empty()) return;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    const std::string unit = text.substr(used);
    if (unit.empty())
      cfg.max_candidates = static_cast<std::size_t>(v);
    else if (unit == "s")
      cfg.max_seconds = v;
    else if (unit == "m")
      cfg.max_seconds = 60 * v;
    else
      throw std::invalid_argument("unit");
  } catch (const std::logic_error&) {
    throw CLI::ValidationError("--budget", "expected a count, or seconds/minutes such as 60s or 10m: " + text);
  }
}

inline RefineOptions refine_options(const Options& o) {
  RefineOptions r;
  r.round_timeout = o.round_timeout;
  r.threads = o.threads;
  r.to_stability = o.to_stability;
  return r;
}

inline int run_tabularize(const Options& o, RunReport& report, std::ostream& out) {
  const auto bundle = load(o, report);
  const auto q = parse_quantifier_set(o.quantifiers);
  TabularizeOptions opts;
  opts.max_features = o.max_features;
  opts.refine = refine_options(o);
  FeatureTable t;
  {
    Phase p(report, "tabularize");
    t = tabularize(bundle, q, o.depth, opts);
  }
  Phase p(report, "write");
  write_csv(t, o.out);
  report.outputs.push_back(o.out);
  if (!o.manifest.empty()) {
    write_manifest(t, o.manifest);
    report.outputs.push_back(o.manifest);
  }
  if (!o.summary.empty()) {
    write_text(o.summary, per_round_summary(t).dump(2) + "\n");
    report.outputs.push_back(o.summary);
  }
  if (t.cap_reached_round) report.events.push_back("feature cap reached at round " + std::to_string(*t.cap_reached_round));
  out << "wrote " << t.rows.size() << " rows x " << t.columns.size() << " columns, rounds 0.." << t.depth << "\n";
  return 0;
}

inline int run_refine(const Options& o, RunReport& report, std::ostream& out) {
  const auto bundle = load(o, report);
  const auto q = parse_quantifier_set(o.quantifiers);
  RefinementResult r;
  {
    Phase p(report, "refine");
    r = refine(bundle.graphs, o.depth, q, refine_options(o));
  }
  Phase p(report, "write");
  emit(refinement_json(r), o.out, out, report);
  return 0;
}

inline ordered_json mined_json(const MinedResult& m, std::size_t target) {
  ordered_json j;
  j["target_class"] = target;
  j["candidates_evaluated"] = m.candidates_evaluated;
  j["budget_exhausted"] = m.budget_exhausted;
  j["completed_size"] = m.completed_size;
  ordered_json list = ordered_json::array();
  for (const auto& f : m.ranked)
    list.push_back({{"formula", f.rendering},
                    {"accuracy", f.accuracy},
                    {"size", f.size},
                    {"predicts_target_when", f.positive_when_true}});
  j["formulas"] = std::move(list);
  return j;
}

inline int run_mine(const Options& o, RunReport& report, std::ostream& out) {
  const auto bundle = load(o, report);
  MinerConfig cfg;
  apply_operator_list(cfg, o.connectives.empty() ? o.ops : o.ops + "," + o.connectives);
  cfg.max_size = o.max_size;
  cfg.max_depth = o.max_depth.value_or(o.max_size);
  cfg.top_k = o.top;
  cfg.threads = o.threads;
  cfg.label_base = o.label_base;
  apply_budget(cfg, o.budget);
  std::vector<std::size_t> targets;
  if (o.target_class)
    targets.push_back(*o.target_class);
  else if (bundle.class_values.size() <= 2)
    targets.push_back(0);
  else
    for (std::size_t c = 0; c < bundle.class_values.size(); ++c) targets.push_back(c);
  ordered_json j;
  j["dataset"] = bundle.name;
  j["ops"] = o.ops;
  j["connectives"] = o.connectives.empty() ? "not,and,or" : o.connectives;
  j["max_size"] = cfg.max_size;
  j["max_depth"] = cfg.max_depth;
  j["label_base"] = cfg.label_base;
  ordered_json results = ordered_json::array();
  Phase p(report, "mine");
  for (std::size_t c : targets) {
    if (c >= bundle.class_values.size()) throw Error("target class " + std::to_string(c) + " out of range");
    cfg.target_class = c;
    const auto m = mine(bundle, cfg);
    if (m.budget_exhausted) report.events.push_back("budget exhausted for class " + std::to_string(c));
    results.push_back(mined_json(m, c));
  }
  j["results"] = std::move(results);
  emit(j, o.out, out, report);
  return 0;
}

inline int run_eval(const Options& o, RunReport& report, std::ostream& out) {
  const auto bundle = load(o, report);
  const Formula parsed = parse_formula(o.formula);
  const Formula bound = bind_labels(parsed, bundle.label_alphabet, o.label_base);
  const std::size_t target = o.target_class.value_or(0);
  if (target >= std::max<std::size_t>(1, bundle.class_values.size()))
    throw Error("target class " + std::to_string(target) + " out of range");
  Score s;
  {
    Phase p(report, "eval");
    s = score(bundle, bound, target);
  }
  ordered_json j;
  j["dataset"] = bundle.name;
  j["formula"] = render(parsed);
  j["label_base"] = o.label_base;
  j["bound_formula"] = render(bound, label_namer(bundle.label_alphabet, o.label_base));
  j["target_class"] = target;
  j["graphs"] = bundle.graphs.size();
  j["accuracy"] = s.accuracy;
  j["direct"] = s.direct;
  j["complemented"] = s.complemented;
  j["predicts_target_when"] = !s.complemented_better;
  emit(j, o.out, out, report);
  return 0;
}

inline int run_check_equivalence(const Options& o, RunReport& report, std::ostream& out) {
  if (o.graphs.size() != 2 || o.points.size() != 2)
    throw CLI::ValidationError("check-equivalence", "expects --graph and --point exactly twice each");
  const PointedModel m1{read_graph_json(o.graphs[0]), static_cast<NodeId>(o.points[0])};
  const PointedModel m2{read_graph_json(o.graphs[1]), static_cast<NodeId>(o.points[1])};
  if (m1.point >= m1.graph.node_count() || m2.point >= m2.graph.node_count()) throw Error("point out of range");
  const auto q = parse_quantifier_set(o.quantifiers);
  ordered_json j;
  Phase p(report, "check");
  const bool sep = separated(m1, m2, o.depth, q, refine_options(o));
  j["separated"] = sep;
  const LabeledGraph u = disjoint_union(m1.graph, m2.graph);
  try {
    const auto phi = q_characteristic(u, static_cast<NodeId>(m1.graph.node_count() + m2.point), o.depth, q);
    const bool oracle = !check(u, m1.point, phi.formula);
    j["characteristic_formula_separates"] = oracle;
    j["consistent"] = oracle == sep;
  } catch (const SizeError& e) {
    j["characteristic_formula_separates"] = nullptr;
    report.events.push_back(e.what());
  }
  emit(j, o.out, out, report);
  return 0;
}

inline int run_stats(const Options& o, RunReport& report, std::ostream& out) {
  const auto bundle = load(o, report);
  std::size_t edges = 0, symmetric = 0;
  for (const auto& g : bundle.graphs) {
    edges += g.edge_count();
    symmetric += g.is_symmetric();
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, bundle.graphs.size()));
  ordered_json j;
  j["dataset"] = bundle.name;
  j["graphs"] = bundle.graphs.size();
  j["nodes"] = bundle.node_count();
  j["mean_nodes"] = static_cast<double>(bundle.node_count()) / n;
  j["edges"] = edges;
  j["mean_edges"] = static_cast<double>(edges) / n;
  j["max_out_degree"] = bundle.max_out_degree();
  j["symmetric_graphs"] = symmetric;
  j["duplicate_edges"] = bundle.duplicate_edges;
  j["label_alphabet"] = bundle.label_alphabet;
  j["classes"] = bundle.class_values;
  std::vector<std::size_t> per_class(bundle.class_values.size(), 0);
  for (std::size_t c : bundle.graph_class) ++per_class[c];
  j["class_counts"] = per_class;
  emit(j, o.out, out, report);
  return 0;
}

/// Entry point: 0 success, 1 runtime error, 2 usage error.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Options o;
  CLI::App app{"wltab: Weisfeiler-Leman tabularization, modal types and formula mining"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "list every subcommand with all of its flags");

  auto dataset_flags = [&](CLI::App* s) {
    s->add_option("--dataset", o.dataset, "TUDataset directory")->required();
    s->add_option("--name", o.name, "dataset name (file prefix)")->required();
    s->add_flag("--degree-labels", o.degree_labels, "replace node labels by out-degrees");
  };
  auto common_flags = [&](CLI::App* s) {
    s->add_option("--threads", o.threads, "worker threads (default: $WLTAB_THREADS or all cores)");
    s->add_option("--report", o.report, "write the run report JSON here (default: stderr)");
  };
  auto refine_flags = [&](CLI::App* s) {
    s->add_option("--quantifiers", o.quantifiers, "quantifier set, e.g. counting | exists,maj | exists,pct>20")
        ->capture_default_str();
    s->add_option("--depth", o.depth, "refinement rounds")->required();
    s->add_flag("--to-stability", o.to_stability, "refine until the partition is stable");
    s->add_option("--round-timeout", o.round_timeout, "seconds per round, <= 0 for none")->capture_default_str();
  };

  auto* tab = app.add_subcommand("tabularize", "count refinement colours per graph into a CSV table");
  dataset_flags(tab);
  refine_flags(tab);
  tab->add_option("--max-features", o.max_features, "column cap")->capture_default_str();
  tab->add_option("--out", o.out, "CSV output")->required();
  tab->add_option("--manifest", o.manifest, "manifest JSON output");
  tab->add_option("--summary", o.summary, "per-round summary JSON output");
  common_flags(tab);

  auto* ref = app.add_subcommand("refine", "write per-round colours and the colour registry");
  dataset_flags(ref);
  refine_flags(ref);
  ref->add_option("--out", o.out, "colors.json output (default: stdout)");
  common_flags(ref);

  auto* mn = app.add_subcommand("mine", "enumerate global-rooted formulas as graph classifiers");
  dataset_flags(mn);
  mn->add_option("--ops", o.ops, "modal operators: exists, maj, globals, <U>, [maj,U]")->capture_default_str();
  mn->add_option("--connectives", o.connectives, "Boolean connectives: not,and,or (default all)");
  mn->add_option("--max-size", o.max_size, "largest formula size")->capture_default_str();
  mn->add_option("--max-depth", o.max_depth, "largest modal depth (default: max size)");
  mn->add_option("--budget", o.budget, "candidate count, or wall clock such as 60s / 10m");
  mn->add_option("--top", o.top, "formulas to report")->capture_default_str();
  mn->add_option("--target-class", o.target_class, "class id treated as positive (default: one-vs-rest)");
  mn->add_option("--label-base", o.label_base, "atom l<k> names raw label k - base")->capture_default_str();
  mn->add_option("--out", o.out, "JSON output (default: stdout)");
  common_flags(mn);

  auto* ev = app.add_subcommand("eval", "score a global-rooted formula on a dataset");
  dataset_flags(ev);
  ev->add_option("--formula", o.formula, "formula text, e.g. '!<U>(l4 | l8 | l20)'")->required();
  ev->add_option("--label-base", o.label_base, "atom l<k> names raw label k - base")->capture_default_str();
  ev->add_option("--target-class", o.target_class, "class id treated as positive (default 0)");
  ev->add_option("--out", o.out, "JSON output (default: stdout)");
  common_flags(ev);

  auto* eq = app.add_subcommand("check-equivalence", "decide whether Q-WL separates two pointed graphs");
  eq->add_option("--graph", o.graphs, "graph JSON {labels: [...], edges: [[u,v],...]} (twice)")->required();
  eq->add_option("--point", o.points, "node of each graph (twice)")->required();
  eq->add_option("--depth", o.depth, "refinement rounds")->required();
  eq->add_option("--quantifiers", o.quantifiers, "quantifier set")->capture_default_str();
  eq->add_option("--round-timeout", o.round_timeout, "seconds per round, <= 0 for none")->capture_default_str();
  eq->add_option("--out", o.out, "JSON output (default: stdout)");
  common_flags(eq);

  auto* st = app.add_subcommand("stats", "dataset statistics");
  dataset_flags(st);
  st->add_option("--out", o.out, "JSON output (default: stdout)");
  common_flags(st);

  RunReport report;
  for (int i = 0; i < argc; ++i) report.argv.emplace_back(argv[i]);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  CLI::App* sub = app.get_subcommands().front();
  report.subcommand = sub->get_name();
  int code = 0;
  try {
    if (sub == tab) code = run_tabularize(o, report, out);
    else if (sub == ref) code = run_refine(o, report, out);
    else if (sub == mn) code = run_mine(o, report, out);
    else if (sub == ev) code = run_eval(o, report, out);
    else if (sub == eq) code = run_check_equivalence(o, report, out);
    else code = run_stats(o, report, out);
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << sub->help();
    return 2;
  } catch (const SpecError& e) {
    err << "error: " << e.what() << "\n" << sub->help();
    return 2;
  } catch (const SyntaxError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    report.events.push_back(std::string("error: ") + e.what());
    code = 1;
  }
  try {
    if (o.report.empty())
      err << report.to_json().dump() << "\n";
    else
      write_text(o.report, report.to_json().dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return code;
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace wltab::cli
