#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "wltab/errors.hpp"
#include "wltab/graph.hpp"
#include "wltab/parallel.hpp"
#include "wltab/quantifier.hpp"
#include "wltab/refinement.hpp"

namespace wltab {

struct FeatureColumn {
  std::size_t round = 0;
  Color color = 0;
  std::string rendering;

  std::string name() const { return "r" + std::to_string(round) + "_c" + std::to_string(color); }
  bool operator==(const FeatureColumn&) const = default;
};

/// Per-graph colour counts over rounds 0..depth, one column per (round, colour)
/// realised anywhere in the dataset.
struct FeatureTable {
  std::string dataset;
  std::string quantifier_spec;
  std::size_t requested_depth = 0;
  /// Last round included; below requested_depth when the feature cap hit.
  std::size_t depth = 0;
  std::size_t max_features = 5000;
  /// First round whose columns would have pushed the total over max_features.
  std::optional<std::size_t> cap_reached_round;
  std::optional<std::size_t> stable_round;
  std::vector<std::string> label_alphabet;
  std::vector<std::string> class_values;
  std::vector<FeatureColumn> columns;
  std::vector<std::vector<std::size_t>> rows;
  std::vector<std::size_t> graph_class;

  /// Columns of round r occupy [round_begin(r), round_begin(r+1)).
  std::size_t round_begin(std::size_t r) const {
    std::size_t i = 0;
    while (i < columns.size() && columns[i].round < r) ++i;
    return i;
  }

  bool operator==(const FeatureTable&) const = default;
};

struct TabularizeOptions {
  std::size_t max_features = 5000;
  RefineOptions refine;
};

namespace tab_detail {

inline std::vector<FeatureColumn> round_columns(const RefinementResult& result, std::size_t round) {
  std::vector<FeatureColumn> cols;
  for (const auto& [color, info] : result.registry)
    if (info.round == round) cols.push_back({round, color, info.rendering});
  return cols;
}

}  // namespace tab_detail

/// Refines all graphs of the bundle jointly and counts colours per graph.
/// Round 0 is always kept; a later round is dropped (and recorded in
/// cap_reached_round) when its columns would take the total past max_features,
/// and refinement stops there.
inline FeatureTable tabularize(const DatasetBundle& bundle, const QuantifierSet& quantifiers, std::size_t depth,
                               const TabularizeOptions& opts = {}) {
  FeatureTable t;
  t.dataset = bundle.name;
  t.quantifier_spec = quantifiers.spec();
  t.requested_depth = depth;
  t.max_features = opts.max_features;
  t.label_alphabet = bundle.label_alphabet;
  t.class_values = bundle.class_values;
  t.graph_class = bundle.graph_class;

  Refiner refiner(bundle.graphs, quantifiers, opts.refine);
  t.columns = tab_detail::round_columns(refiner.result(), 0);
  if (t.columns.size() > opts.max_features) t.cap_reached_round = 0;
  auto more = [&] {
    if (t.cap_reached_round) return false;
    if (opts.refine.to_stability) return !refiner.result().stable_round;
    return refiner.round() < depth;
  };
  while (more()) {
    refiner.next_round();
    auto cols = tab_detail::round_columns(refiner.result(), refiner.round());
    if (t.columns.size() + cols.size() > opts.max_features) {
      t.cap_reached_round = refiner.round();
      refiner.pop_round();
      break;
    }
    t.columns.insert(t.columns.end(), cols.begin(), cols.end());
  }
  if (opts.refine.to_stability && !t.cap_reached_round) {
    while (refiner.round() > *refiner.result().stable_round) refiner.pop_round();
    t.columns.resize(t.round_begin(refiner.round() + 1));
  }
  t.depth = refiner.round();
  t.stable_round = refiner.result().stable_round;

  const auto& result = refiner.result();
  std::unordered_map<Color, std::size_t> column_of;
  for (std::size_t i = 0; i < t.columns.size(); ++i) column_of.emplace(t.columns[i].color, i);
  t.rows.assign(bundle.graphs.size(), std::vector<std::size_t>(t.columns.size(), 0));
  parallel_for(bundle.graphs.size(), resolve_threads(opts.refine.threads), [&](std::size_t g) {
    for (std::size_t r = 0; r <= t.depth; ++r)
      for (Color c : result.colors(r, g)) ++t.rows[g][column_of.at(c)];
  });
  return t;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path + ": cannot open for writing");
  out << text;
  out.close();
  if (!out) throw Error(path + ": write failed");
}

inline std::string csv_text(const FeatureTable& t) {
  std::string out = "graph_id,class";
  for (const auto& c : t.columns) out += "," + c.name();
  out += '\n';
  for (std::size_t g = 0; g < t.rows.size(); ++g) {
    out += std::to_string(g) + "," + std::to_string(t.graph_class.at(g));
    for (std::size_t v : t.rows[g]) out += "," + std::to_string(v);
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json manifest_json(const FeatureTable& t) {
  using nlohmann::ordered_json;
  ordered_json m;
  m["dataset"] = t.dataset;
  m["quantifiers"] = t.quantifier_spec;
  m["requested_depth"] = t.requested_depth;
  m["depth"] = t.depth;
  m["max_features"] = t.max_features;
  m["cap_reached_round"] = t.cap_reached_round ? ordered_json(*t.cap_reached_round) : ordered_json(nullptr);
  m["stable_round"] = t.stable_round ? ordered_json(*t.stable_round) : ordered_json(nullptr);
  m["label_alphabet"] = t.label_alphabet;
  m["classes"] = t.class_values;
  m["graphs"] = t.rows.size();
  ordered_json cols = ordered_json::object();
  for (const auto& c : t.columns)
    cols[c.name()] = {{"round", c.round},
                      {"color", c.color},
                      {"type_rendering", c.rendering},
                      {"quantifier_spec", t.quantifier_spec}};
  m["columns"] = std::move(cols);
  return m;
}

inline void write_csv(const FeatureTable& t, const std::string& path) { write_text(path, csv_text(t)); }

inline void write_manifest(const FeatureTable& t, const std::string& path) {
  write_text(path, manifest_json(t).dump(2) + "\n");
}

/// Colours per round plus cap and stability events.
inline nlohmann::ordered_json per_round_summary(const FeatureTable& t) {
  if (t.rows.empty()) throw Error("per_round_summary: empty table");
  using nlohmann::ordered_json;
  ordered_json rounds = ordered_json::array();
  for (std::size_t r = 0; r <= t.depth; ++r)
    rounds.push_back({{"round", r}, {"colors", t.round_begin(r + 1) - t.round_begin(r)}});
  std::size_t nodes = 0;
  for (std::size_t v : t.rows.front()) nodes += v;
  ordered_json s;
  s["dataset"] = t.dataset;
  s["quantifiers"] = t.quantifier_spec;
  s["graphs"] = t.rows.size();
  s["columns"] = t.columns.size();
  s["rounds"] = std::move(rounds);
  s["cap_reached_round"] = t.cap_reached_round ? ordered_json(*t.cap_reached_round) : ordered_json(nullptr);
  s["stable_round"] = t.stable_round ? ordered_json(*t.stable_round) : ordered_json(nullptr);
  return s;
}

/// colors.json: {rounds: [[colour per node]], registry: {colour: {round, signature_rendering}}, stable_round}
inline nlohmann::ordered_json refinement_json(const RefinementResult& r) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["quantifiers"] = r.quantifier_spec;
  j["graph_offsets"] = r.offsets;
  j["rounds"] = r.rounds;
  ordered_json reg = ordered_json::object();
  for (const auto& [color, info] : r.registry)
    reg[std::to_string(color)] = {{"round", info.round}, {"signature_rendering", info.rendering}};
  j["registry"] = std::move(reg);
  j["stable_round"] = r.stable_round ? ordered_json(*r.stable_round) : ordered_json(nullptr);
  return j;
}

}  // namespace wltab
