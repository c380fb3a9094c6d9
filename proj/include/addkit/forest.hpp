/// @file  forest.hpp
/// @brief Random Forest import, tree-to-diagram conversion, aggregation and
///        plurality-vote classification
///
/// Forest document (`*.forest.json`):
///
///     {"declaration": "iris.decl.json" | {...},
///      "trees": [tree, ...]}
///     tree := {"feature": s, "threshold": num, "true": tree, "false": tree}
///           | {"leaf": category}
///
/// Splits take the true branch iff x[feature] <= threshold, matching the
/// diagram kernel. Vote ties go to the category declared first.

#pragma once

#include <addkit/algebra.hpp>
#include <addkit/errors.hpp>
#include <addkit/manager.hpp>
#include <addkit/model.hpp>

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace addkit {

struct TreeNode {
  bool leaf = true;
  std::size_t category = 0;  // leaves
  std::size_t feature = 0;   // splits
  double threshold = 0.0;
  std::size_t on_true = 0;
  std::size_t on_false = 0;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Flat binary tree; node 0 is the root and children follow their parent.
struct TreeModel {
  std::vector<TreeNode> nodes;

  friend bool operator==(const TreeModel&, const TreeModel&) = default;
};

struct ForestModel {
  Declaration declaration;
  std::string declaration_ref;
  std::vector<TreeModel> trees;

  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

struct ClassificationResult {
  std::size_t index = 0;
  std::string category;
  std::vector<double> weights;
};

namespace detail {

inline std::size_t read_tree(const json& t, const Declaration& decl, const std::string& at, TreeModel& out) {
  if (!t.is_object()) throw ValidationError("tree node must be an object", at);
  const std::size_t id = out.nodes.size();
  out.nodes.emplace_back();
  if (auto leaf = t.find("leaf"); leaf != t.end()) {
    if (!leaf->is_string()) throw ValidationError("leaf must name a category", at + "/leaf");
    auto c = decl.category_index(leaf->get<std::string>());
    if (!c) throw ValidationError("unresolved reference: category '" + leaf->get<std::string>() + "'", at + "/leaf");
    out.nodes[id].category = *c;
    return id;
  }
  const json& feature = member(t, "feature", at);
  if (!feature.is_string()) throw ValidationError("feature must be a name", at + "/feature");
  auto f = decl.feature_index(feature.get<std::string>());
  if (!f) throw ValidationError("unresolved reference: feature '" + feature.get<std::string>() + "'", at + "/feature");
  const json& threshold = member(t, "threshold", at);
  if (!threshold.is_number() || !std::isfinite(threshold.get<double>()))
    throw ValidationError("threshold must be a finite number", at + "/threshold");
  const std::size_t on_true = read_tree(member(t, "true", at), decl, at + "/true", out);
  const std::size_t on_false = read_tree(member(t, "false", at), decl, at + "/false", out);
  TreeNode& n = out.nodes[id];
  n.leaf = false;
  n.feature = *f;
  n.threshold = threshold.get<double>();
  n.on_true = on_true;
  n.on_false = on_false;
  return id;
}

inline ordered_json write_tree(const TreeModel& tree, std::size_t id, const Declaration& decl) {
  const TreeNode& n = tree.nodes.at(id);
  ordered_json j;
  if (n.leaf) {
    j["leaf"] = decl.categories.at(n.category);
    return j;
  }
  j["feature"] = decl.features.at(n.feature);
  j["threshold"] = n.threshold;
  j["true"] = write_tree(tree, n.on_true, decl);
  j["false"] = write_tree(tree, n.on_false, decl);
  return j;
}

}  // namespace detail

inline ForestModel forest_from_json(const json& doc, const Declaration& decl) {
  if (!doc.is_object()) throw ValidationError("forest must be an object", "/");
  ForestModel f;
  f.declaration = decl;
  if (auto it = doc.find("declaration"); it != doc.end()) {
    if (it->is_string())
      f.declaration_ref = it->get<std::string>();
    else if (declaration_from_json(*it, "/declaration") != decl)
      throw ValidationError("inline declaration differs from the active declaration", "/declaration");
  }
  const json& trees = detail::member(doc, "trees", "/");
  if (!trees.is_array() || trees.empty()) throw ValidationError("trees must be a non-empty list", "/trees");
  for (std::size_t i = 0; i < trees.size(); ++i) {
    TreeModel t;
    detail::read_tree(trees[i], decl, "/trees/" + std::to_string(i), t);
    f.trees.push_back(std::move(t));
  }
  return f;
}

/// Parses a forest document. Without `decl` the document must carry an
/// inline declaration.
inline ForestModel import_forest(std::string_view text, const std::optional<Declaration>& decl = std::nullopt) {
  const json doc = parse_json(text);
  if (decl) return forest_from_json(doc, *decl);
  if (!doc.is_object() || !doc.contains("declaration") || !doc["declaration"].is_object())
    throw ValidationError("forest needs an inline declaration or an explicit one", "/declaration");
  return forest_from_json(doc, declaration_from_json(doc["declaration"], "/declaration"));
}

/// Reads a forest file, resolving a declaration path relative to the file.
inline ForestModel load_forest(const std::filesystem::path& path, const std::optional<Declaration>& decl = std::nullopt) {
  const json doc = parse_json(read_text_file(path));
  if (decl) return forest_from_json(doc, *decl);
  if (!doc.is_object() || !doc.contains("declaration"))
    throw ValidationError("no declaration given for forest", "/declaration");
  const json& ref = doc["declaration"];
  const Declaration resolved = ref.is_string() ? load_declaration(path.parent_path() / ref.get<std::string>())
                                               : declaration_from_json(ref, "/declaration");
  return forest_from_json(doc, resolved);
}

inline std::string serialize_forest(const ForestModel& f) {
  ordered_json j;
  if (f.declaration_ref.empty())
    j["declaration"] = declaration_to_json(f.declaration);
  else
    j["declaration"] = f.declaration_ref;
  ordered_json trees = ordered_json::array();
  for (const TreeModel& t : f.trees) trees.push_back(detail::write_tree(t, 0, f.declaration));
  j["trees"] = std::move(trees);
  return j.dump(2) + "\n";
}

/// Category reached by walking the tree on `x`.
inline std::size_t traverse(const TreeModel& tree, std::span<const double> x) {
  std::size_t i = 0;
  while (!tree.nodes.at(i).leaf) {
    const TreeNode& n = tree.nodes[i];
    if (n.feature >= x.size() || std::isnan(x[n.feature]))
      throw InputError("missing value for feature " + std::to_string(n.feature));
    i = x[n.feature] <= n.threshold ? n.on_true : n.on_false;
  }
  return tree.nodes[i].category;
}

/// Diagram model isomorphic to the tree, with one-hot result leaves.
/// Node ids are "n<k>" in the tree's own numbering.
inline DiagramModel tree_to_diagram(const TreeModel& tree, const Declaration& decl, std::string name,
                                    std::string declaration_ref = {}) {
  DiagramModel m;
  m.name = std::move(name);
  m.declaration = decl;
  m.declaration_ref = std::move(declaration_ref);
  m.root = "n0";
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& n = tree.nodes[i];
    if (n.leaf) {
      ResultNode r;
      r.weights.assign(decl.categories.size(), 0.0);
      r.weights.at(n.category) = 1.0;
      m.nodes.emplace("n" + std::to_string(i), std::move(r));
    } else {
      m.nodes.emplace("n" + std::to_string(i),
                      PredicateNode{n.feature, n.threshold, "n" + std::to_string(n.on_true), "n" + std::to_string(n.on_false)});
    }
  }
  return m;
}

/// Left fold of apply2("+") over the diagrams. With `prune_infeasible` the
/// running sum goes through Manager::prune_infeasible after every step; the
/// result has the same value on every feature vector, but without it sums
/// of many deep trees grow exponentially in the number of trees.
inline NodeRef aggregate(Manager& mgr, std::span<const NodeRef> diagrams, bool prune_infeasible = false) {
  if (diagrams.empty()) throw InputError("aggregate needs at least one diagram");
  NodeRef acc = diagrams.front();
  for (std::size_t i = 1; i < diagrams.size(); ++i) {
    acc = mgr.apply2("+", acc, diagrams[i]);
    if (prune_infeasible) acc = mgr.prune_infeasible(acc);
  }
  return acc;
}

/// Evaluates f on x and picks the heaviest category.
inline ClassificationResult classify(const Manager& mgr, NodeRef f, std::span<const double> x) {
  const Value v = mgr.eval_features(f, x);
  ClassificationResult r;
  r.weights = v.as_vector();
  r.index = argmax(r.weights);
  const auto& names = mgr.algebra().categories();
  r.category = r.index < names.size() ? names[r.index] : std::to_string(r.index);
  return r;
}

/// Plurality vote by direct traversal of every tree.
inline std::size_t vote_oracle(const ForestModel& forest, std::span<const double> x) {
  std::vector<std::size_t> votes(forest.declaration.categories.size(), 0);
  for (const TreeModel& t : forest.trees) ++votes.at(traverse(t, x));
  std::size_t best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c)
    if (votes[c] > votes[best]) best = c;
  return best;
}

/// Distinct split thresholds per feature, ascending.
inline std::vector<std::vector<double>> thresholds_by_feature(std::size_t feature_count,
                                                              std::span<const DiagramModel> diagrams) {
  std::vector<std::set<double>> sets(feature_count);
  for (const DiagramModel& m : diagrams)
    for (const auto& [_, node] : m.nodes)
      if (const auto* p = std::get_if<PredicateNode>(&node)) sets.at(p->feature).insert(p->threshold);
  std::vector<std::vector<double>> out;
  for (const auto& s : sets) out.emplace_back(s.begin(), s.end());
  return out;
}

/// One feature vector per feasible combination of predicate outcomes: for a
/// feature with sorted thresholds t1 < ... < tk the k+1 intervals are
/// represented by t1 - 1, t2, ..., tk, tk + 1 (boundaries satisfy `<=`).
inline std::vector<std::vector<double>> feasible_inputs(const std::vector<std::vector<double>>& thresholds) {
  std::vector<std::vector<double>> reps;
  for (const auto& ts : thresholds) {
    std::vector<double> r;
    if (ts.empty()) {
      r.push_back(0.0);
    } else {
      r.push_back(ts.front() - 1.0);
      for (std::size_t i = 1; i < ts.size(); ++i) r.push_back(ts[i]);
      r.push_back(ts.back() + 1.0);
    }
    reps.push_back(std::move(r));
  }
  std::vector<std::vector<double>> out{{}};
  for (const auto& r : reps) {
    std::vector<std::vector<double>> next;
    next.reserve(out.size() * r.size());
    for (const auto& prefix : out)
      for (double v : r) {
        next.push_back(prefix);
        next.back().push_back(v);
      }
    out = std::move(next);
  }
  return out;
}

}  // namespace addkit
