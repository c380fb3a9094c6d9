/// @file  pipeline.hpp
/// @brief Composition of named diagram models, shared by the CLI and the
///        HTTP service so that both produce identical output

#pragma once

#include <addkit/emit.hpp>
#include <addkit/forest.hpp>
#include <addkit/manager.hpp>
#include <addkit/model.hpp>

#include <charconv>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace addkit {

struct ComposeOptions {
  bool prune_infeasible = false;
};

struct Composition {
  Manager manager;
  NodeRef root;
  Declaration declaration;

  std::string graph_doc() const { return to_graph_doc(manager, root, declaration.features); }
  std::string dot() const { return to_dot(manager, root, declaration.features); }
  NodeCounts counts() const { return manager.node_count(root); }
  std::string source(Target target, std::string function_name = "dd_eval") const {
    CodegenOptions opt;
    opt.function_name = std::move(function_name);
    opt.feature_names = declaration.features;
    return codegen(manager, root, target, opt);
  }
};

using DiagramStore = std::map<std::string, DiagramModel, std::less<>>;

/// Compiles the diagrams the expression references (in name order) into a
/// fresh manager and evaluates the expression.
inline Composition compose(const Declaration& decl, const DiagramStore& diagrams, const CalcExpr& expr,
                           const ComposeOptions& options = {}) {
  Composition c{Manager(declaration_algebra(decl)), NodeRef{}, decl};
  DiagramEnv env;
  for (const std::string& name : referenced_diagrams(expr)) {
    auto it = diagrams.find(name);
    if (it == diagrams.end()) throw UnknownDiagramError(name);
    if (it->second.declaration != decl)
      throw ValidationError("diagram '" + name + "' uses a different declaration", "/declaration");
    env.emplace(name, compile_diagram(c.manager, it->second));
  }
  c.root = eval_calc(c.manager, expr, env);
  if (options.prune_infeasible) c.root = c.manager.prune_infeasible(c.root);
  return c;
}

inline Composition compose(const Declaration& decl, const DiagramStore& diagrams, std::string_view expression,
                           const ComposeOptions& options = {}) {
  return compose(decl, diagrams, parse_calc(expression), options);
}

/// Parses "name=value,name=value". Every declared feature must be present.
inline std::vector<double> parse_feature_assignments(std::string_view text, const Declaration& decl) {
  std::vector<double> x(decl.features.size(), std::nan(""));
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view item = text.substr(pos, end - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) {
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) throw InputError("expected name=value, got '" + std::string(item) + "'");
      const std::string name(item.substr(0, eq));
      const std::string_view num = item.substr(eq + 1);
      auto f = decl.feature_index(name);
      if (!f) throw InputError("unknown feature '" + name + "'");
      double v = 0;
      auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
      if (ec != std::errc{} || ptr != num.data() + num.size() || !std::isfinite(v))
        throw InputError("feature '" + name + "': '" + std::string(num) + "' is not a number");
      x[*f] = v;
    }
    pos = end + 1;
  }
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::isnan(x[i])) throw InputError("missing value for feature '" + decl.features[i] + "'");
  return x;
}

/// Reads {"feature": number, ...}. Every declared feature must be present.
inline std::vector<double> features_from_json(const json& obj, const Declaration& decl) {
  if (!obj.is_object()) throw InputError("features must be an object of name: number");
  std::vector<double> x(decl.features.size(), std::nan(""));
  for (const auto& [name, v] : obj.items()) {
    auto f = decl.feature_index(name);
    if (!f) throw InputError("unknown feature '" + name + "'");
    if (!v.is_number()) throw InputError("feature '" + name + "' must be a number");
    x[*f] = v.get<double>();
  }
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::isnan(x[i])) throw InputError("missing value for feature '" + decl.features[i] + "'");
  return x;
}

}  // namespace addkit
