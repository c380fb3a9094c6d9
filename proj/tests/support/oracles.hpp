// Reference walkers and random generators for the tests. The walkers never
// touch the diagram kernel: models and trees are interpreted directly.

#pragma once

#include <addkit/forest.hpp>
#include <addkit/model.hpp>

#include <algorithm>
#include <cstddef>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace addkit::testing {

/// Leaf id reached by walking the model on x (x[f] <= t takes the true edge).
inline std::string model_leaf(const DiagramModel& m, std::span<const double> x) {
  std::string id = m.root;
  for (;;) {
    const ModelNode& n = m.nodes.at(id);
    const auto* p = std::get_if<PredicateNode>(&n);
    if (!p) return id;
    id = x[p->feature] <= p->threshold ? p->on_true : p->on_false;
  }
}

inline std::vector<double> model_walk(const DiagramModel& m, std::span<const double> x) {
  return std::get<ResultNode>(m.nodes.at(model_leaf(m, x))).weights;
}

/// Same walk, but on a Boolean outcome per (feature, threshold) predicate.
template <class Outcome>
std::vector<double> model_walk_bits(const DiagramModel& m, Outcome outcome) {
  std::string id = m.root;
  for (;;) {
    const ModelNode& n = m.nodes.at(id);
    const auto* p = std::get_if<PredicateNode>(&n);
    if (!p) return std::get<ResultNode>(n).weights;
    id = outcome(p->feature, p->threshold) ? p->on_true : p->on_false;
  }
}

/// Per-category vote counts of the forest at x.
inline std::vector<double> forest_votes(const ForestModel& f, std::span<const double> x) {
  std::vector<double> votes(f.declaration.categories.size(), 0.0);
  for (const TreeModel& t : f.trees) {
    std::size_t i = 0;
    while (!t.nodes[i].leaf) i = x[t.nodes[i].feature] <= t.nodes[i].threshold ? t.nodes[i].on_true : t.nodes[i].on_false;
    votes[t.nodes[i].category] += 1.0;
  }
  return votes;
}

inline std::size_t first_max(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

// ---------------------------------------------------------------------------
// generators
// ---------------------------------------------------------------------------

inline Declaration make_declaration(std::size_t features, std::size_t categories) {
  Declaration d;
  for (std::size_t i = 0; i < features; ++i) d.features.push_back("f" + std::to_string(i));
  for (std::size_t i = 0; i < categories; ++i) d.categories.push_back("k" + std::to_string(i));
  return d;
}

/// Thresholds are drawn from {0.5, 1.5, ..., grid - 0.5} so that trees share
/// predicates.
struct ForestShape {
  std::size_t max_trees = 50;
  std::size_t max_depth = 8;
  std::size_t grid = 6;
  double leaf_bias = 0.3;  // chance of stopping early at each non-root level
};

inline std::size_t random_subtree(std::mt19937_64& rng, const Declaration& d, const ForestShape& s, std::size_t depth,
                                  TreeModel& t) {
  const std::size_t id = t.nodes.size();
  t.nodes.emplace_back();
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (depth == s.max_depth || (depth > 0 && coin(rng) < s.leaf_bias)) {
    t.nodes[id].category = std::uniform_int_distribution<std::size_t>(0, d.categories.size() - 1)(rng);
    return id;
  }
  const std::size_t feature = std::uniform_int_distribution<std::size_t>(0, d.features.size() - 1)(rng);
  const double threshold = 0.5 + static_cast<double>(std::uniform_int_distribution<std::size_t>(0, s.grid - 1)(rng));
  const std::size_t on_true = random_subtree(rng, d, s, depth + 1, t);
  const std::size_t on_false = random_subtree(rng, d, s, depth + 1, t);
  t.nodes[id] = TreeNode{false, 0, feature, threshold, on_true, on_false};
  return id;
}

inline ForestModel random_forest(std::mt19937_64& rng, const Declaration& d, const ForestShape& s, std::size_t trees) {
  ForestModel f;
  f.declaration = d;
  for (std::size_t i = 0; i < trees; ++i) {
    TreeModel t;
    random_subtree(rng, d, s, 0, t);
    f.trees.push_back(std::move(t));
  }
  return f;
}

/// Random input on the threshold grid's range, with some values exactly on
/// grid thresholds to exercise the `<=` boundary.
inline std::vector<double> random_input(std::mt19937_64& rng, std::size_t features, std::size_t grid) {
  std::vector<double> x(features);
  std::uniform_real_distribution<double> u(-0.5, static_cast<double>(grid) + 0.5);
  std::uniform_int_distribution<std::size_t> k(0, grid - 1);
  std::uniform_int_distribution<int> pick(0, 3);
  for (double& v : x) v = pick(rng) == 0 ? 0.5 + static_cast<double>(k(rng)) : u(rng);
  return x;
}

/// Random carrier element from a small pool, so random tables share values.
/// With `nonzero`, no component is zero (safe as a divisor).
inline Value random_value(std::mt19937_64& rng, const Algebra& a, bool nonzero = false) {
  std::uniform_int_distribution<int> small(nonzero ? 1 : 0, 4);
  std::uniform_int_distribution<int> sign(0, 1);
  auto real = [&] {
    const double v = small(rng) * 0.5;
    return sign(rng) ? -v : v;
  };
  switch (a.carrier()) {
    case Carrier::boolean:
      return Value::boolean(sign(rng) == 1);
    case Carrier::unit_interval:
      return Value::real(small(rng) * 0.25);
    case Carrier::real:
      return Value::real(real());
    case Carrier::vector: {
      std::vector<double> v(a.dimension());
      for (double& c : v) c = real();
      return Value::vector(std::move(v));
    }
  }
  return Value::boolean(false);
}

/// Diagram of a random table over a random subset of `vars`.
inline NodeRef random_diagram(std::mt19937_64& rng, Manager& m, std::span<const VarId> vars, bool nonzero = false) {
  std::vector<VarId> subset;
  for (VarId v : vars)
    if (std::uniform_int_distribution<int>(0, 3)(rng) != 0) subset.push_back(v);
  std::shuffle(subset.begin(), subset.end(), rng);
  std::vector<Value> table;
  for (std::size_t k = 0; k < (std::size_t{1} << subset.size()); ++k)
    table.push_back(random_value(rng, m.algebra(), nonzero));
  return m.build_from_table(subset, table);
}

/// Random DAG-shaped diagram model with shared successors and random weights.
inline DiagramModel random_model(std::mt19937_64& rng, const Declaration& d, const std::string& name,
                                 std::size_t predicates, std::size_t results, std::size_t grid) {
  DiagramModel m;
  m.name = name;
  m.declaration = d;
  std::uniform_int_distribution<int> weight(0, 4);
  for (std::size_t r = 0; r < results; ++r) {
    ResultNode node;
    for (std::size_t c = 0; c < d.categories.size(); ++c) node.weights.push_back(weight(rng) * 0.25);
    m.nodes.emplace("r" + std::to_string(r), std::move(node));
  }
  // p<i> may point to any p<j> with j > i or any result, so the model is acyclic.
  for (std::size_t i = predicates; i-- > 0;) {
    auto pick = [&]() -> std::string {
      const std::size_t later = predicates - 1 - i;
      const std::size_t k = std::uniform_int_distribution<std::size_t>(0, later + results - 1)(rng);
      return k < later ? "p" + std::to_string(i + 1 + k) : "r" + std::to_string(k - later);
    };
    PredicateNode p;
    p.feature = std::uniform_int_distribution<std::size_t>(0, d.features.size() - 1)(rng);
    p.threshold = 0.5 + static_cast<double>(std::uniform_int_distribution<std::size_t>(0, grid - 1)(rng));
    p.on_true = pick();
    p.on_false = pick();
    m.nodes.emplace("p" + std::to_string(i), std::move(p));
  }
  m.root = predicates ? "p0" : "r0";
  // Drop whatever the root cannot reach so the model validates.
  std::set<std::string> reached{m.root};
  std::vector<std::string> work{m.root};
  while (!work.empty()) {
    const std::string id = work.back();
    work.pop_back();
    if (const auto* p = std::get_if<PredicateNode>(&m.nodes.at(id)))
      for (const std::string& s : {p->on_true, p->on_false})
        if (reached.insert(s).second) work.push_back(s);
  }
  std::erase_if(m.nodes, [&](const auto& kv) { return !reached.contains(kv.first); });
  return m;
}

}  // namespace addkit::testing
