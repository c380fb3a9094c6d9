/// @file  emit.hpp
/// @brief Diagram exporters: dot text, the graph interchange document, and
///        generated evaluators in C (goto program) and JavaScript

#pragma once

#include <addkit/algebra.hpp>
#include <addkit/errors.hpp>
#include <addkit/format.hpp>
#include <addkit/manager.hpp>
#include <addkit/model.hpp>

#include <cstddef>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace addkit {

/// Text for the test at a variable: "feature ≤ threshold" for predicates
/// (feature names are optional), "x<k>" (1-based) for plain variables.
inline std::string variable_label(const Manager& mgr, VarId v, std::span<const std::string> feature_names = {}) {
  const PredicateVar& p = mgr.var_info(v);
  if (!p.feature) return "x" + std::to_string(v + 1);
  const std::string feature =
      *p.feature < feature_names.size() ? feature_names[*p.feature] : "x[" + std::to_string(*p.feature) + "]";
  return feature + " ≤ " + format_real(p.threshold);
}

namespace detail {

inline std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

// Position of each reachable node in iter_nodes order.
inline std::unordered_map<NodeRef, std::size_t, NodeRefHash> number_nodes(const std::vector<NodeRef>& nodes) {
  std::unordered_map<NodeRef, std::size_t, NodeRefHash> ids;
  for (std::size_t i = 0; i < nodes.size(); ++i) ids.emplace(nodes[i], i);
  return ids;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// dot
// ---------------------------------------------------------------------------

/// Graphviz digraph. Node ids are positions in iter_nodes order, so the
/// text depends only on the diagram and shared nodes appear once. Inner nodes
/// are ellipses, terminals boxes; true edges solid, false edges dashed.
inline std::string to_dot(const Manager& mgr, NodeRef f, std::span<const std::string> feature_names = {},
                          std::string_view graph_name = "add") {
  const std::vector<NodeRef> nodes = mgr.iter_nodes(f);
  const auto ids = detail::number_nodes(nodes);
  std::ostringstream out;
  out << "digraph " << detail::dot_quote(graph_name) << " {\n";
  for (NodeRef r : nodes) {
    const bool leaf = mgr.is_terminal(r);
    const std::string label = leaf ? mgr.value(r).to_string() : variable_label(mgr, mgr.var(r), feature_names);
    out << "  n" << ids.at(r) << " [label=" << detail::dot_quote(label) << ", shape=" << (leaf ? "box" : "ellipse")
        << "];\n";
  }
  for (NodeRef r : nodes) {
    if (mgr.is_terminal(r)) continue;
    out << "  n" << ids.at(r) << " -> n" << ids.at(mgr.hi(r)) << " [style=solid];\n";
    out << "  n" << ids.at(r) << " -> n" << ids.at(mgr.lo(r)) << " [style=dashed];\n";
  }
  out << "}\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// graph interchange document
// ---------------------------------------------------------------------------

inline ordered_json value_to_json(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::boolean: return v.as_boolean();
    case Value::Kind::real: return v.as_real();
    case Value::Kind::vector: return v.as_vector();
  }
  return nullptr;
}

inline Value value_from_json(const json& j, const std::string& at) {
  if (j.is_boolean()) return Value::boolean(j.get<bool>());
  if (j.is_number()) return Value::real(j.get<double>());
  if (j.is_array()) {
    std::vector<double> v;
    for (const json& c : j) {
      if (!c.is_number()) throw ValidationError("vector components must be numbers", at);
      v.push_back(c.get<double>());
    }
    return Value::vector(std::move(v));
  }
  throw ValidationError("unsupported terminal value", at);
}

/// Deterministic JSON listing of the diagram: nodes numbered 0.. in
/// topological order (root first), each with its kind, test and children.
inline ordered_json graph_to_json(const Manager& mgr, NodeRef f, std::span<const std::string> feature_names = {}) {
  const std::vector<NodeRef> nodes = mgr.iter_nodes(f);
  const auto ids = detail::number_nodes(nodes);
  ordered_json doc;
  doc["algebra"] = mgr.algebra().name();
  if (!feature_names.empty()) doc["features"] = std::vector<std::string>(feature_names.begin(), feature_names.end());
  if (!mgr.algebra().categories().empty()) doc["categories"] = mgr.algebra().categories();
  doc["root"] = 0;
  ordered_json list = ordered_json::array();
  for (NodeRef r : nodes) {
    ordered_json n;
    n["id"] = ids.at(r);
    if (mgr.is_terminal(r)) {
      n["kind"] = "terminal";
      n["value"] = value_to_json(mgr.value(r));
    } else {
      const VarId v = mgr.var(r);
      const PredicateVar& p = mgr.var_info(v);
      if (p.feature) {
        n["kind"] = "predicate";
        if (*p.feature < feature_names.size()) n["feature"] = feature_names[*p.feature];
        n["feature_index"] = *p.feature;
        n["threshold"] = p.threshold;
      } else {
        n["kind"] = "variable";
        n["level"] = mgr.level(v);
      }
      n["true"] = ids.at(mgr.hi(r));
      n["false"] = ids.at(mgr.lo(r));
    }
    list.push_back(std::move(n));
  }
  doc["nodes"] = std::move(list);
  return doc;
}

inline std::string to_graph_doc(const Manager& mgr, NodeRef f, std::span<const std::string> feature_names = {}) {
  return graph_to_json(mgr, f, feature_names).dump(2) + "\n";
}

/// Rebuilds a graph document inside `mgr` with constant/mk. Plain variables
/// are matched by level, predicates by (feature_index, threshold).
inline NodeRef rebuild_graph(Manager& mgr, const json& doc) {
  if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array())
    throw ValidationError("graph document needs a \"nodes\" list", "/nodes");
  const json& nodes = doc["nodes"];
  const std::size_t count = nodes.size();
  std::vector<std::optional<NodeRef>> built(count);
  auto child = [&](const json& n, const char* key, const std::string& at) {
    const json& c = detail::member(n, key, at);
    if (!c.is_number_unsigned() || c.get<std::size_t>() >= count || !built[c.get<std::size_t>()])
      throw ValidationError("child id must refer to a later node", at + "/" + key);
    return *built[c.get<std::size_t>()];
  };
  for (std::size_t k = count; k-- > 0;) {
    const json& n = nodes[k];
    const std::string at = "/nodes/" + std::to_string(k);
    if (!n.is_object() || n.value("id", json()) != json(k)) throw ValidationError("node ids must be 0..n-1 in order", at);
    const std::string kind = n.value("kind", "");
    if (kind == "terminal") {
      built[k] = mgr.constant(value_from_json(detail::member(n, "value", at), at + "/value"));
      continue;
    }
    VarId v;
    if (kind == "predicate") {
      const json& fi = detail::member(n, "feature_index", at);
      const json& th = detail::member(n, "threshold", at);
      if (!fi.is_number_unsigned() || !th.is_number()) throw ValidationError("malformed predicate", at);
      v = mgr.predicate_var(fi.get<std::size_t>(), th.get<double>());
    } else if (kind == "variable") {
      const json& lv = detail::member(n, "level", at);
      if (!lv.is_number_unsigned()) throw ValidationError("malformed variable level", at);
      while (mgr.var_count() <= lv.get<std::size_t>()) mgr.new_var();
      v = mgr.var_at_level(lv.get<std::size_t>());
    } else {
      throw ValidationError("unknown node kind '" + kind + "'", at + "/kind");
    }
    try {
      built[k] = mgr.mk(v, child(n, "true", at), child(n, "false", at));
    } catch (const std::logic_error& e) {
      throw ValidationError(e.what(), at);
    }
  }
  const json& root = detail::member(doc, "root", "/");
  if (!root.is_number_unsigned() || root.get<std::size_t>() >= count) throw ValidationError("bad root id", "/root");
  return *built[root.get<std::size_t>()];
}

/// A graph document loaded into its own manager.
struct LoadedGraph {
  Manager manager;
  NodeRef root;
  std::vector<std::string> features;
};

inline LoadedGraph load_graph_doc(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) throw ValidationError("graph document must be an object", "/");
  std::vector<std::string> features = doc.value("features", std::vector<std::string>{});
  std::vector<std::string> categories = doc.value("categories", std::vector<std::string>{});
  Manager mgr(algebra_by_name(doc.value("algebra", ""), categories));
  const NodeRef root = rebuild_graph(mgr, doc);
  return LoadedGraph{std::move(mgr), root, std::move(features)};
}

// ---------------------------------------------------------------------------
// code generation
// ---------------------------------------------------------------------------

enum class Target { c, js };

inline Target target_by_name(std::string_view name) {
  if (name == "c") return Target::c;
  if (name == "js") return Target::js;
  throw ConfigError("unknown codegen target '" + std::string(name) + "'");
}

struct CodegenOptions {
  std::string function_name = "dd_eval";
  std::vector<std::string> feature_names;  // documentation only
};

class CodegenError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::string condition(const Manager& mgr, VarId v, Target t) {
  const PredicateVar& p = mgr.var_info(v);
  if (!p.feature) return "x[" + std::to_string(v) + "] != 0";
  const std::string lit = t == Target::c ? format_real_literal(p.threshold) : format_real(p.threshold);
  return "x[" + std::to_string(*p.feature) + "] <= " + lit;
}

inline std::string literal(double d, Target t) { return t == Target::c ? format_real_literal(d) : format_real(d); }

inline std::string header_comment(const Manager& mgr, const CodegenOptions& opt, const char* open, const char* line,
                                  const char* close, std::string_view style) {
  std::string s = std::string(open) + " Decision-diagram evaluator generated by addkit (" + std::string(style) + ").\n";
  s += std::string(line) + " algebra: " + mgr.algebra().name() + "\n";
  for (std::size_t i = 0; i < opt.feature_names.size(); ++i)
    s += std::string(line) + " x[" + std::to_string(i) + "] = " + opt.feature_names[i] + "\n";
  const auto& cats = mgr.algebra().categories();
  for (std::size_t i = 0; i < cats.size(); ++i) s += std::string(line) + " out[" + std::to_string(i) + "] = " + cats[i] + "\n";
  return s + close + "\n";
}

inline std::string emit_c(const Manager& mgr, NodeRef f, const CodegenOptions& opt) {
  const auto nodes = mgr.iter_nodes(f);
  const auto ids = number_nodes(nodes);
  const std::string& fn = opt.function_name;
  const Carrier carrier = mgr.algebra().carrier();
  std::ostringstream out;
  out << header_comment(mgr, opt, "/*", " *", " */", "goto program");
  out << "#include <stddef.h>\n\n";
  switch (carrier) {
    case Carrier::boolean: out << "int " << fn << "(const double *x)\n{\n"; break;
    case Carrier::unit_interval:
    case Carrier::real: out << "double " << fn << "(const double *x)\n{\n"; break;
    case Carrier::vector: out << "void " << fn << "(const double *x, double *out)\n{\n"; break;
  }
  out << "  goto n0;\n";
  for (NodeRef r : nodes) {
    out << "n" << ids.at(r) << ":\n";
    if (!mgr.is_terminal(r)) {
      out << "  if (" << condition(mgr, mgr.var(r), Target::c) << ") goto n" << ids.at(mgr.hi(r)) << ";\n";
      out << "  goto n" << ids.at(mgr.lo(r)) << ";\n";
      continue;
    }
    const Value& v = mgr.value(r);
    switch (v.kind()) {
      case Value::Kind::boolean: out << "  return " << (v.as_boolean() ? 1 : 0) << ";\n"; break;
      case Value::Kind::real: out << "  return " << literal(v.as_real(), Target::c) << ";\n"; break;
      case Value::Kind::vector:
        for (std::size_t i = 0; i < v.as_vector().size(); ++i)
          out << "  out[" << i << "] = " << literal(v.as_vector()[i], Target::c) << ";\n";
        out << "  return;\n";
        break;
    }
  }
  out << "}\n";

  const auto& cats = mgr.algebra().categories();
  if (carrier == Carrier::vector) {
    out << "\nsize_t " << fn << "_argmax(const double *w)\n{\n"
        << "  size_t best = 0;\n"
        << "  for (size_t i = 1; i < " << mgr.algebra().dimension() << "; ++i)\n"
        << "    if (w[i] > w[best]) best = i;\n"
        << "  return best;\n}\n";
    if (!cats.empty()) {
      out << "\nconst char *const " << fn << "_categories[" << cats.size() << "] = {";
      for (std::size_t i = 0; i < cats.size(); ++i) out << (i ? ", " : "") << dot_quote(cats[i]);
      out << "};\n";
    }
  }
  return out.str();
}

inline std::string emit_js(const Manager& mgr, NodeRef f, const CodegenOptions& opt) {
  const auto nodes = mgr.iter_nodes(f);
  const auto ids = number_nodes(nodes);
  const std::string& fn = opt.function_name;
  std::ostringstream out;
  out << header_comment(mgr, opt, "/*", " *", " */", "state machine");
  out << "function " << fn << "(x) {\n  let s = 0;\n  for (;;) {\n    switch (s) {\n";
  for (NodeRef r : nodes) {
    out << "      case " << ids.at(r) << ": ";
    if (!mgr.is_terminal(r)) {
      out << "s = " << condition(mgr, mgr.var(r), Target::js) << " ? " << ids.at(mgr.hi(r)) << " : "
          << ids.at(mgr.lo(r)) << "; break;\n";
      continue;
    }
    const Value& v = mgr.value(r);
    switch (v.kind()) {
      case Value::Kind::boolean: out << "return " << (v.as_boolean() ? "true" : "false") << ";\n"; break;
      case Value::Kind::real: out << "return " << literal(v.as_real(), Target::js) << ";\n"; break;
      case Value::Kind::vector: {
        out << "return [";
        for (std::size_t i = 0; i < v.as_vector().size(); ++i) out << (i ? ", " : "") << literal(v.as_vector()[i], Target::js);
        out << "];\n";
        break;
      }
    }
  }
  out << "      default: throw new Error(\"bad state \" + s);\n    }\n  }\n}\n";

  std::string exports = fn;
  if (mgr.algebra().carrier() == Carrier::vector) {
    out << "\nfunction " << fn << "_argmax(w) {\n  let best = 0;\n"
        << "  for (let i = 1; i < w.length; ++i) if (w[i] > w[best]) best = i;\n  return best;\n}\n";
    exports += ", " + fn + "_argmax";
    const auto& cats = mgr.algebra().categories();
    if (!cats.empty()) {
      out << "\nconst " << fn << "_categories = [";
      for (std::size_t i = 0; i < cats.size(); ++i) out << (i ? ", " : "") << dot_quote(cats[i]);
      out << "];\n";
      exports += ", " + fn + "_categories";
    }
  }
  out << "\nif (typeof module !== \"undefined\" && module.exports) {\n  module.exports = { " << exports << " };\n}\n";
  return out.str();
}

}  // namespace detail

/// Standalone evaluator source for `f`. Every reachable node is emitted as
/// exactly one block: a label in C, a switch case in JavaScript.
inline std::string codegen(const Manager& mgr, NodeRef f, Target target, const CodegenOptions& options = {}) {
  if (!is_identifier(options.function_name)) throw CodegenError("function name must be an identifier");
  return target == Target::c ? detail::emit_c(mgr, f, options) : detail::emit_js(mgr, f, options);
}

}  // namespace addkit
