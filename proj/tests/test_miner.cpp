#include <gtest/gtest.h>

#include <random>

#include "generators.hpp"
#include "wltab/miner.hpp"
#include "wltab/syntax.hpp"

using namespace wltab;

namespace {

Formula p(LabelId l) { return Formula::prop(l); }
Formula gexists(Formula f) { return Formula::global(builtin("exists"), std::move(f)); }
Formula gmaj(Formula f) { return Formula::global(builtin("maj"), std::move(f)); }

LabeledGraph triangle() { return LabeledGraph({{1, 2}, {0, 2}, {0, 1}}, {0, 0, 0}, 2); }

// class "1" iff some node carries label 1
DatasetBundle planted(std::uint64_t seed, std::size_t graphs = 30) {
  std::mt19937_64 rng(seed);
  DatasetBundle b;
  b.name = "P";
  b.label_alphabet = {"0", "1"};
  b.class_values = {"0", "1"};
  for (std::size_t i = 0; i < graphs; ++i) {
    auto g = random_graph(2 + rng() % 6, 0.4, 2, rng());
    if (i % 2 == 0) g = LabeledGraph(g.adjacency(), std::vector<LabelId>(g.node_count(), 0), 2);
    bool has = false;
    for (NodeId v = 0; v < g.node_count(); ++v) has = has || g.label(v) == 1;
    b.graph_class.push_back(has ? 1 : 0);
    b.graphs.push_back(std::move(g));
  }
  return b;
}

DatasetBundle noisy(std::uint64_t seed, std::size_t graphs = 24) {
  std::mt19937_64 rng(seed);
  DatasetBundle b;
  b.name = "N";
  b.label_alphabet = {"0", "1", "2"};
  b.class_values = {"a", "b"};
  for (std::size_t i = 0; i < graphs; ++i) {
    b.graphs.push_back(gen::random_model(rng, 7, 3));
    b.graph_class.push_back(rng() % 2);
  }
  return b;
}

// Naive enumeration over a binary-connective grammar: local formulas use
// atoms, ¬, ∧, ∨, ◊, Maj; global ones wrap a local formula in ◊_U/Maj_U and
// combine with ¬, ∧, ∨. Sizes count every binary node, so each formula here has
// normalized size at most its naive size.
double naive_best(const DatasetBundle& b, std::size_t max_size, std::size_t target) {
  const LabelId labels = static_cast<LabelId>(b.label_alphabet.size());
  std::vector<std::vector<Formula>> local(max_size + 1), global(max_size + 1);
  double best = 0;
  for (std::size_t s = 1; s <= max_size; ++s) {
    if (s == 1)
      for (LabelId l = 0; l < labels; ++l) local[1].push_back(p(l));
    if (s >= 2)
      for (const auto& f : local[s - 1]) {
        local[s].push_back(Formula::negation(f));
        local[s].push_back(Formula::diamond(f));
        local[s].push_back(Formula::modal(builtin("maj"), f));
        global[s].push_back(gexists(f));
        global[s].push_back(gmaj(f));
        // negation of globals built below
      }
    if (s >= 2)
      for (const auto& g : global[s - 1]) global[s].push_back(Formula::negation(g));
    for (std::size_t a = 1; a + 1 < s; ++a) {
      const std::size_t c = s - 1 - a;
      for (const auto& x : local[a])
        for (const auto& y : local[c]) {
          local[s].push_back(Formula::conj({x, y}));
          local[s].push_back(Formula::disj({x, y}));
        }
      for (const auto& x : global[a])
        for (const auto& y : global[c]) {
          global[s].push_back(Formula::conj({x, y}));
          global[s].push_back(Formula::disj({x, y}));
        }
    }
    for (const auto& g : global[s]) best = std::max(best, score(b, g, target).accuracy);
  }
  return best;
}

}  // namespace

TEST(GraphSatisfies, Examples) {
  EXPECT_TRUE(graph_satisfies(triangle(), gexists(p(0))));
  EXPECT_TRUE(graph_satisfies(triangle(), Formula::negation(gexists(p(1)))));
  // a -> b -> c -> b, only c labelled l0: a and c reach l0 in two steps
  LabeledGraph g({{1}, {2}, {1}}, {1, 1, 0});
  const auto two_steps = Formula::diamond(Formula::diamond(p(0)));
  std::size_t count = 0;
  for (NodeId v = 0; v < 3; ++v) count += check(g, v, two_steps);
  EXPECT_EQ(count, 2u);
  EXPECT_TRUE(graph_satisfies(g, gmaj(two_steps)));
}

TEST(GraphSatisfies, RequiresGlobalRootedFormula) {
  EXPECT_THROW(graph_satisfies(triangle(), p(0)), NotGlobalRooted);
  EXPECT_THROW(graph_satisfies(triangle(), Formula::conj({gexists(p(0)), Formula::diamond(p(0))})), NotGlobalRooted);
  DatasetBundle b;
  b.graphs = {triangle()};
  b.graph_class = {0};
  EXPECT_THROW(score(b, p(0), 0), NotGlobalRooted);
}

TEST(Score, ComplementSymmetry) {
  const auto b = noisy(1);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto f = gexists(gen::random_formula(rng, 3, 3));
    const auto s = score(b, f, 0);
    EXPECT_NEAR(s.direct + s.complemented, 100.0, 1e-9);
    const auto n = score(b, Formula::negation(f), 0);
    EXPECT_NEAR(s.direct + n.direct, 100.0, 1e-9);
    EXPECT_DOUBLE_EQ(s.accuracy, n.accuracy);
    EXPECT_GE(s.accuracy, 50.0);
    EXPECT_LE(s.accuracy, 100.0);
  }
}

TEST(Score, PicksBetterOrientation) {
  const auto s = score_values({1, 1, 0, 0}, {0, 0, 0, 1}, 1);
  EXPECT_DOUBLE_EQ(s.direct, 25.0);
  EXPECT_DOUBLE_EQ(s.accuracy, 75.0);
  EXPECT_TRUE(s.complemented_better);
}

TEST(Labels, BindAndRender) {
  const std::vector<std::string> alphabet{"1", "2", "5"};
  EXPECT_EQ(bind_labels(p(5), alphabet), p(2));
  EXPECT_EQ(bind_labels(p(3), alphabet), Formula::bot());
  EXPECT_EQ(bind_labels(p(6), alphabet, 1), p(2));
  EXPECT_EQ(bind_labels(Formula::disj({p(1), p(2)}), alphabet, 1), Formula::disj({Formula::bot(), p(0)}));
  EXPECT_EQ(render(gexists(p(2)), label_namer(alphabet)), "<U>l5");
  EXPECT_EQ(render(gexists(p(2)), label_namer(alphabet, 1)), "<U>l6");
  const auto f = parse_formula("!<U>(l4 | l0)");
  EXPECT_EQ(render(bind_labels(f, alphabet, -1), label_namer(alphabet, -1)), "!<U>(l0 | l4)");
}

TEST(MinerConfig, OperatorList) {
  MinerConfig cfg;
  apply_operator_list(cfg, "exists,maj,globals");
  EXPECT_TRUE(cfg.diamond && cfg.majority && cfg.global_diamond && cfg.global_majority);
  EXPECT_TRUE(cfg.negation && cfg.conjunction && cfg.disjunction);
  apply_operator_list(cfg, "<U>, maj, <>, !, |");
  EXPECT_TRUE(cfg.global_diamond && cfg.majority && cfg.diamond && cfg.negation && cfg.disjunction);
  EXPECT_FALSE(cfg.global_majority || cfg.conjunction);
  EXPECT_THROW(apply_operator_list(cfg, "exists,xor"), SpecError);
  cfg.max_size = 0;
  EXPECT_THROW(cfg.validate(), Error);
  MinerConfig locals_only;
  apply_operator_list(locals_only, "exists,maj");
  EXPECT_THROW(locals_only.validate(), Error);
}

TEST(Mine, PlantedConcept) {
  const auto b = planted(3);
  MinerConfig cfg;
  cfg.max_size = 4;
  cfg.target_class = 1;
  const auto r = mine(b, cfg);
  ASSERT_FALSE(r.ranked.empty());
  EXPECT_EQ(r.ranked[0].rendering, "<U>l1");
  EXPECT_EQ(r.ranked[0].size, 2u);
  EXPECT_DOUBLE_EQ(r.ranked[0].accuracy, 100.0);
  EXPECT_TRUE(r.ranked[0].positive_when_true);
  EXPECT_FALSE(r.budget_exhausted);
  EXPECT_EQ(r.completed_size, 4u);
}

TEST(Mine, SingleCandidateBudget) {
  MinerConfig cfg;
  cfg.max_candidates = 1;
  const auto r = mine(noisy(4), cfg);
  EXPECT_EQ(r.candidates_evaluated, 1u);
  EXPECT_EQ(r.ranked.size(), 1u);
  EXPECT_TRUE(r.budget_exhausted);
}

TEST(Mine, RankingAndScoresAreConsistent) {
  const auto b = noisy(5);
  MinerConfig cfg;
  cfg.max_size = 5;
  cfg.top_k = 25;
  const auto r = mine(b, cfg);
  ASSERT_EQ(r.ranked.size(), 25u);
  for (std::size_t i = 0; i < r.ranked.size(); ++i) {
    const auto& m = r.ranked[i];
    EXPECT_TRUE(is_global_rooted(m.formula));
    EXPECT_LE(m.size, cfg.max_size);
    EXPECT_EQ(m.size, m.formula.size());
    EXPECT_EQ(m.rendering, render(m.formula, label_namer(b.label_alphabet)));
    const auto s = score(b, m.formula, 0);
    EXPECT_DOUBLE_EQ(m.accuracy, s.accuracy);
    EXPECT_EQ(m.positive_when_true, !s.complemented_better);
    if (i) {
      const auto& prev = r.ranked[i - 1];
      const auto key = [](const MinedFormula& x) { return std::make_tuple(-x.accuracy, x.size, x.rendering); };
      EXPECT_LT(key(prev), key(m));
    }
  }
}

TEST(Mine, AtLeastAsGoodAsNaiveEnumeration) {
  for (std::uint64_t seed : {6, 7, 8}) {
    const auto b = noisy(seed, 16);
    for (std::size_t size = 1; size <= 5; ++size) {
      MinerConfig cfg;
      cfg.max_size = size;
      const auto r = mine(b, cfg);
      const double best = r.ranked.empty() ? 0.0 : r.ranked[0].accuracy;
      EXPECT_GE(best + 1e-9, naive_best(b, size, 0)) << "seed " << seed << " size " << size;
    }
  }
}

TEST(Mine, BestAccuracyIsMonotone) {
  const auto b = noisy(9, 30);
  double previous = 0;
  for (std::size_t size = 1; size <= 6; ++size) {
    MinerConfig cfg;
    cfg.max_size = size;
    const auto r = mine(b, cfg);
    const double best = r.ranked.empty() ? 0.0 : r.ranked[0].accuracy;
    EXPECT_GE(best, previous);
    previous = best;
  }
  MinerConfig small, large;
  small.max_size = large.max_size = 5;
  apply_operator_list(small, "<U>,<>,!,|");
  apply_operator_list(large, "globals,exists,maj,!,|");
  EXPECT_GE(mine(b, large).ranked[0].accuracy, mine(b, small).ranked[0].accuracy);
}

TEST(Mine, Deterministic) {
  const auto b = noisy(10, 30);
  MinerConfig cfg;
  cfg.max_size = 5;
  cfg.top_k = 15;
  cfg.threads = 1;
  const auto a = mine(b, cfg);
  cfg.threads = 4;
  const auto c = mine(b, cfg);
  ASSERT_EQ(a.ranked.size(), c.ranked.size());
  EXPECT_EQ(a.candidates_evaluated, c.candidates_evaluated);
  for (std::size_t i = 0; i < a.ranked.size(); ++i) {
    EXPECT_EQ(a.ranked[i].rendering, c.ranked[i].rendering);
    EXPECT_EQ(a.ranked[i].accuracy, c.ranked[i].accuracy);
  }
}

TEST(Mine, MaxDepthIsRespected) {
  MinerConfig cfg;
  cfg.max_size = 5;
  cfg.max_depth = 1;
  cfg.top_k = 50;
  for (const auto& m : mine(noisy(11), cfg).ranked) EXPECT_LE(modal_depth(m.formula), 1u);
}
