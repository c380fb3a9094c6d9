/// @file  model.hpp
/// @brief Declaration and decision-diagram models: JSON syntax, validation,
///        and compilation into kernel diagrams
///
/// Declaration document (`*.decl.json`):
///
///     {"features": ["sepal_length", ...], "categories": ["setosa", ...]}
///
/// Diagram document (`*.dd.json`):
///
///     {"name": "Expert", "declaration": "iris.decl.json", "root": "n0",
///      "nodes": {"n0": {"kind": "predicate", "feature": "petal_length",
///                       "threshold": 2.45, "true": "n1", "false": "n2"},
///                "n1": {"kind": "result", "weights": {"setosa": 8}}, ...}}
///
/// "declaration" is either a path (relative to the diagram file) or an inline
/// declaration object. Categories omitted from a result default to 0.

#pragma once

#include <addkit/algebra.hpp>
#include <addkit/errors.hpp>
#include <addkit/manager.hpp>

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace addkit {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  if (!alpha(s[0])) return false;
  return std::all_of(s.begin() + 1, s.end(), [&](char c) { return alpha(c) || (c >= '0' && c <= '9'); });
}

/// Parses JSON text, reporting syntax errors as ParseError at "line:col".
inline json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    if (auto p = msg.find("parse error"); p != std::string::npos) msg = msg.substr(p);
    throw ParseError("malformed document: " + msg, std::to_string(line) + ":" + std::to_string(col));
  }
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
}

namespace detail {

inline const json& member(const json& obj, const char* key, const std::string& at) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(std::string("missing field \"") + key + "\"", at);
  return *it;
}

inline std::string pointer_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Declaration
// ---------------------------------------------------------------------------

struct Declaration {
  std::vector<std::string> features;
  std::vector<std::string> categories;

  std::optional<std::size_t> feature_index(std::string_view name) const {
    auto it = std::find(features.begin(), features.end(), name);
    if (it == features.end()) return std::nullopt;
    return static_cast<std::size_t>(it - features.begin());
  }
  std::optional<std::size_t> category_index(std::string_view name) const {
    auto it = std::find(categories.begin(), categories.end(), name);
    if (it == categories.end()) return std::nullopt;
    return static_cast<std::size_t>(it - categories.begin());
  }

  friend bool operator==(const Declaration&, const Declaration&) = default;
};

inline Declaration declaration_from_json(const json& doc, const std::string& at = "") {
  if (!doc.is_object()) throw ValidationError("declaration must be an object", at.empty() ? "/" : at);
  Declaration d;
  auto read_list = [&](const char* key, std::vector<std::string>& out) {
    const std::string here = at + "/" + key;
    const json& list = detail::member(doc, key, at.empty() ? "/" : at);
    if (!list.is_array()) throw ValidationError("must be a list of identifiers", here);
    if (list.empty()) throw ValidationError("must not be empty", here);
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string item_at = here + "/" + std::to_string(i);
      if (!list[i].is_string() || !is_identifier(list[i].get<std::string>()))
        throw ValidationError("not an identifier", item_at);
      auto name = list[i].get<std::string>();
      if (std::find(out.begin(), out.end(), name) != out.end())
        throw ValidationError("duplicate identifier '" + name + "'", item_at);
      out.push_back(std::move(name));
    }
  };
  read_list("features", d.features);
  read_list("categories", d.categories);
  return d;
}

inline Declaration parse_declaration(std::string_view text) { return declaration_from_json(parse_json(text)); }

inline ordered_json declaration_to_json(const Declaration& d) {
  ordered_json j;
  j["features"] = d.features;
  j["categories"] = d.categories;
  return j;
}

inline std::string serialize_declaration(const Declaration& d) { return declaration_to_json(d).dump(2) + "\n"; }

inline Declaration load_declaration(const std::filesystem::path& path) {
  return parse_declaration(read_text_file(path));
}

// ---------------------------------------------------------------------------
// Diagram models
// ---------------------------------------------------------------------------

struct PredicateNode {
  std::size_t feature = 0;
  double threshold = 0.0;
  std::string on_true;
  std::string on_false;

  friend bool operator==(const PredicateNode&, const PredicateNode&) = default;
};

struct ResultNode {
  std::vector<double> weights;  // one per declared category

  friend bool operator==(const ResultNode&, const ResultNode&) = default;
};

using ModelNode = std::variant<PredicateNode, ResultNode>;

struct DiagramModel {
  std::string name;
  Declaration declaration;
  std::string declaration_ref;  // path as written in the document; empty when inline
  std::string root;
  std::map<std::string, ModelNode> nodes;

  friend bool operator==(const DiagramModel&, const DiagramModel&) = default;
};

namespace detail {

inline void check_diagram_graph(const DiagramModel& m) {
  auto successors = [&](const std::string& id) -> std::vector<std::string> {
    if (auto* p = std::get_if<PredicateNode>(&m.nodes.at(id))) return {p->on_true, p->on_false};
    return {};
  };
  for (const auto& [id, node] : m.nodes)
    for (const std::string& s : successors(id))
      if (!m.nodes.contains(s))
        throw ValidationError("unknown node '" + s + "'", "/nodes/" + pointer_escape(id));
  if (!m.nodes.contains(m.root)) throw ValidationError("unknown node '" + m.root + "'", "/root");

  // Iterative three-colour DFS over every node, so cycles outside the
  // reachable part are reported too.
  enum Colour { white, grey, black };
  std::map<std::string, Colour> colour;
  for (const auto& [id, _] : m.nodes) colour[id] = white;
  for (const auto& [start, _] : m.nodes) {
    if (colour[start] != white) continue;
    std::vector<std::pair<std::string, std::size_t>> stack{{start, 0}};
    colour[start] = grey;
    while (!stack.empty()) {
      auto& [id, next] = stack.back();
      const auto succ = successors(id);
      if (next == succ.size()) {
        colour[id] = black;
        stack.pop_back();
        continue;
      }
      const std::string s = succ[next++];
      if (colour[s] == grey) throw ValidationError("cyclic model: node '" + s + "' reaches itself", "/nodes/" + pointer_escape(s));
      if (colour[s] == white) {
        colour[s] = grey;
        stack.emplace_back(s, 0);
      }
    }
  }

  std::set<std::string> reached{m.root};
  std::vector<std::string> work{m.root};
  while (!work.empty()) {
    const std::string id = work.back();
    work.pop_back();
    for (const std::string& s : successors(id))
      if (reached.insert(s).second) work.push_back(s);
  }
  for (const auto& [id, _] : m.nodes)
    if (!reached.contains(id)) throw ValidationError("unreachable node " + id, "/nodes/" + pointer_escape(id));
}

}  // namespace detail

/// Validates a diagram document against `decl`. An inline "declaration" must
/// equal `decl`; a path is recorded but not followed.
inline DiagramModel diagram_from_json(const json& doc, const Declaration& decl) {
  if (!doc.is_object()) throw ValidationError("diagram must be an object", "/");
  DiagramModel m;
  m.declaration = decl;

  const json& name = detail::member(doc, "name", "/");
  if (!name.is_string() || !is_identifier(name.get<std::string>()))
    throw ValidationError("diagram name must be an identifier", "/name");
  m.name = name.get<std::string>();

  if (auto it = doc.find("declaration"); it != doc.end()) {
    if (it->is_string()) {
      m.declaration_ref = it->get<std::string>();
    } else if (declaration_from_json(*it, "/declaration") != decl) {
      throw ValidationError("inline declaration differs from the active declaration", "/declaration");
    }
  }

  const json& root = detail::member(doc, "root", "/");
  if (!root.is_string()) throw ValidationError("root must be a node id", "/root");
  m.root = root.get<std::string>();

  const json& nodes = detail::member(doc, "nodes", "/");
  if (!nodes.is_object() || nodes.empty()) throw ValidationError("nodes must be a non-empty object", "/nodes");

  for (const auto& [id, n] : nodes.items()) {
    const std::string at = "/nodes/" + detail::pointer_escape(id);
    if (!n.is_object()) throw ValidationError("node must be an object", at);
    const json& kind = detail::member(n, "kind", at);
    if (kind == "predicate") {
      for (const char* edge : {"true", "false"}) {
        auto e = n.find(edge);
        if (e == n.end() || !e->is_string())
          throw ValidationError(
              "predicate node '" + id + "' must have exactly one TrueBranch and one FalseBranch successor", at);
      }
      PredicateNode p;
      const json& feature = detail::member(n, "feature", at);
      if (!feature.is_string()) throw ValidationError("feature must be a name", at + "/feature");
      auto fi = decl.feature_index(feature.get<std::string>());
      if (!fi) throw ValidationError("unresolved reference: feature '" + feature.get<std::string>() + "'", at + "/feature");
      p.feature = *fi;
      const json& threshold = detail::member(n, "threshold", at);
      if (!threshold.is_number() || !std::isfinite(threshold.get<double>()))
        throw ValidationError("threshold must be a finite number", at + "/threshold");
      p.threshold = threshold.get<double>();
      p.on_true = n["true"].get<std::string>();
      p.on_false = n["false"].get<std::string>();
      m.nodes.emplace(id, std::move(p));
    } else if (kind == "result") {
      if (n.contains("true") || n.contains("false"))
        throw ValidationError("result node '" + id + "' allows no outgoing edges", at);
      ResultNode r;
      r.weights.assign(decl.categories.size(), 0.0);
      const json& weights = detail::member(n, "weights", at);
      if (!weights.is_object()) throw ValidationError("weights must be an object", at + "/weights");
      for (const auto& [cat, w] : weights.items()) {
        const std::string wat = at + "/weights/" + detail::pointer_escape(cat);
        auto ci = decl.category_index(cat);
        if (!ci) throw ValidationError("unresolved reference: category '" + cat + "'", wat);
        if (!w.is_number() || !std::isfinite(w.get<double>()))
          throw ValidationError("weight must be a finite number", wat);
        r.weights[*ci] = w.get<double>();
      }
      m.nodes.emplace(id, std::move(r));
    } else {
      throw ValidationError("unknown node kind " + kind.dump(), at + "/kind");
    }
  }

  detail::check_diagram_graph(m);
  return m;
}

inline DiagramModel parse_diagram(std::string_view text, const Declaration& decl) {
  return diagram_from_json(parse_json(text), decl);
}

inline ordered_json diagram_to_json(const DiagramModel& m) {
  ordered_json j;
  j["name"] = m.name;
  if (m.declaration_ref.empty())
    j["declaration"] = declaration_to_json(m.declaration);
  else
    j["declaration"] = m.declaration_ref;
  j["root"] = m.root;
  ordered_json nodes = ordered_json::object();
  for (const auto& [id, node] : m.nodes) {
    ordered_json n;
    if (const auto* p = std::get_if<PredicateNode>(&node)) {
      n["kind"] = "predicate";
      n["feature"] = m.declaration.features.at(p->feature);
      n["threshold"] = p->threshold;
      n["true"] = p->on_true;
      n["false"] = p->on_false;
    } else {
      const auto& r = std::get<ResultNode>(node);
      n["kind"] = "result";
      ordered_json w = ordered_json::object();
      for (std::size_t c = 0; c < r.weights.size(); ++c) w[m.declaration.categories[c]] = r.weights[c];
      n["weights"] = std::move(w);
    }
    nodes[id] = std::move(n);
  }
  j["nodes"] = std::move(nodes);
  return j;
}

inline std::string serialize_diagram(const DiagramModel& m) { return diagram_to_json(m).dump(2) + "\n"; }

/// Reads a diagram file. Without `decl`, the document's "declaration" field
/// is resolved (a path is taken relative to the diagram file).
inline DiagramModel load_diagram(const std::filesystem::path& path, const std::optional<Declaration>& decl = std::nullopt) {
  const json doc = parse_json(read_text_file(path));
  if (decl) return diagram_from_json(doc, *decl);
  if (!doc.is_object() || !doc.contains("declaration"))
    throw ValidationError("no declaration given for diagram", "/declaration");
  const json& ref = doc["declaration"];
  const Declaration resolved =
      ref.is_string() ? load_declaration(path.parent_path() / ref.get<std::string>()) : declaration_from_json(ref, "/declaration");
  return diagram_from_json(doc, resolved);
}

/// Weight algebra over the declaration's categories.
inline Algebra declaration_algebra(const Declaration& decl) { return weight_algebra(decl.categories); }

/// Compiles a validated model into the manager. The manager must use the
/// weights algebra over the model's categories.
inline NodeRef compile_diagram(Manager& mgr, const DiagramModel& m) {
  const Algebra& a = mgr.algebra();
  if (a.carrier() != Carrier::vector || a.dimension() != m.declaration.categories.size())
    throw ConfigError("diagram '" + m.name + "' needs the weights algebra of dimension " +
                      std::to_string(m.declaration.categories.size()));

  std::unordered_map<std::string, NodeRef> done;
  // Post-order over the acyclic model; children compile before parents.
  std::vector<std::pair<const std::string*, bool>> stack{{&m.root, false}};
  while (!stack.empty()) {
    auto [id, expanded] = stack.back();
    stack.pop_back();
    if (done.contains(*id)) continue;
    const ModelNode& node = m.nodes.at(*id);
    if (const auto* r = std::get_if<ResultNode>(&node)) {
      done.emplace(*id, mgr.constant(Value::vector(r->weights)));
      continue;
    }
    const auto& p = std::get<PredicateNode>(node);
    if (!expanded) {
      stack.emplace_back(id, true);
      stack.emplace_back(&p.on_false, false);
      stack.emplace_back(&p.on_true, false);
      continue;
    }
    const VarId v = mgr.predicate_var(p.feature, p.threshold);
    done.emplace(*id, mgr.branch(v, done.at(p.on_true), done.at(p.on_false)));
  }
  return done.at(m.root);
}

// ---------------------------------------------------------------------------
// Calculation expressions
// ---------------------------------------------------------------------------

/// Composition expression over diagram names.
///
///     expr   := term (('+' | '-') term)*
///     term   := factor (('*' | '/') factor)*
///     factor := IDENT | 'norm' '(' expr ')' | '(' expr ')'
///
/// Chains of '+' or '*' collapse into one assoc node; '-' and '/' are binary
/// and associate left.
struct CalcExpr {
  enum class Kind { ref, assoc, nonassoc, norm };

  Kind kind = Kind::ref;
  char op = 0;
  std::string name;
  std::vector<CalcExpr> operands;

  static CalcExpr ref(std::string name) {
    CalcExpr e;
    e.name = std::move(name);
    return e;
  }
  static CalcExpr assoc(char op, std::vector<CalcExpr> operands) {
    CalcExpr e;
    e.kind = Kind::assoc;
    e.op = op;
    e.operands = std::move(operands);
    return e;
  }
  static CalcExpr nonassoc(char op, CalcExpr left, CalcExpr right) {
    CalcExpr e;
    e.kind = Kind::nonassoc;
    e.op = op;
    e.operands.push_back(std::move(left));
    e.operands.push_back(std::move(right));
    return e;
  }
  static CalcExpr norm(CalcExpr operand) {
    CalcExpr e;
    e.kind = Kind::norm;
    e.operands.push_back(std::move(operand));
    return e;
  }

  friend bool operator==(const CalcExpr&, const CalcExpr&) = default;
};

namespace detail {

class CalcParser {
 public:
  explicit CalcParser(std::string_view text) : text_(text) {}

  CalcExpr parse() {
    skip_space();
    CalcExpr e = expr();
    skip_space();
    if (pos_ != text_.size()) fail(peek() == ')' ? "unbalanced ')'" : "unexpected '" + std::string(1, peek()) + "'");
    return e;
  }

 private:
  static int precedence(char op) { return (op == '+' || op == '-') ? 1 : 2; }

  CalcExpr expr() { return chain('+', '-', [this] { return term(); }); }
  CalcExpr term() { return chain('*', '/', [this] { return factor(); }); }

  template <class Next>
  CalcExpr chain(char assoc_op, char binary_op, Next next) {
    CalcExpr left = next();
    bool open_assoc = false;  // `left` is an assoc node built by this chain
    for (;;) {
      skip_space();
      const char c = peek();
      if (c != assoc_op && c != binary_op) {
        if (c != 0 && c != ')' && !is_operator(c) && !std::isspace(static_cast<unsigned char>(c))) {
          if (ident_start(c) || c == '(') fail("expected an operator");
          fail("unknown operator '" + std::string(1, c) + "'");
        }
        return left;
      }
      ++pos_;
      CalcExpr right = next();
      if (c == assoc_op) {
        if (open_assoc) {
          left.operands.push_back(std::move(right));
        } else {
          left = CalcExpr::assoc(c, {std::move(left), std::move(right)});
          open_assoc = true;
        }
      } else {
        left = CalcExpr::nonassoc(c, std::move(left), std::move(right));
        open_assoc = false;
      }
    }
  }

  CalcExpr factor() {
    skip_space();
    const char c = peek();
    if (c == '(') {
      ++pos_;
      CalcExpr e = expr();
      expect(')');
      return e;
    }
    if (ident_start(c)) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
      std::string word(text_.substr(start, pos_ - start));
      if (word == "norm") {
        skip_space();
        if (peek() != '(') fail("expected '(' after norm");
        ++pos_;
        CalcExpr e = expr();
        expect(')');
        return CalcExpr::norm(std::move(e));
      }
      return CalcExpr::ref(std::move(word));
    }
    if (c == 0) fail("unexpected end of expression");
    if (is_operator(c) || c == ')') fail("expected a diagram name, 'norm' or '('");
    fail("unknown operator '" + std::string(1, c) + "'");
  }

  void expect(char c) {
    skip_space();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, "column " + std::to_string(pos_ + 1));
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  static bool is_operator(char c) { return c == '+' || c == '-' || c == '*' || c == '/'; }
  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) { return ident_start(c) || std::isdigit(static_cast<unsigned char>(c)); }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline int calc_precedence(const CalcExpr& e) {
  if (e.kind == CalcExpr::Kind::ref || e.kind == CalcExpr::Kind::norm) return 3;
  return (e.op == '+' || e.op == '-') ? 1 : 2;
}

}  // namespace detail

/// Throws ParseError located at "column N" (1-based).
inline CalcExpr parse_calc(std::string_view text) { return detail::CalcParser(text).parse(); }

/// Infix text that parses back to an equal expression.
inline std::string to_string(const CalcExpr& e) {
  using K = CalcExpr::Kind;
  auto wrap = [](const CalcExpr& c, bool paren) { return paren ? "(" + to_string(c) + ")" : to_string(c); };
  switch (e.kind) {
    case K::ref: return e.name;
    case K::norm: return "norm(" + to_string(e.operands[0]) + ")";
    case K::assoc: {
      const int p = detail::calc_precedence(e);
      std::string s;
      for (std::size_t i = 0; i < e.operands.size(); ++i) {
        const CalcExpr& c = e.operands[i];
        const int cp = detail::calc_precedence(c);
        const bool paren = i == 0 ? (cp < p || (c.kind == K::assoc && c.op == e.op)) : cp <= p;
        if (i) s += std::string(" ") + e.op + " ";
        s += wrap(c, paren);
      }
      return s;
    }
    case K::nonassoc: {
      const int p = detail::calc_precedence(e);
      return wrap(e.operands[0], detail::calc_precedence(e.operands[0]) < p) + " " + e.op + " " +
             wrap(e.operands[1], detail::calc_precedence(e.operands[1]) <= p);
    }
  }
  return {};
}

/// Distinct diagram names, sorted.
inline std::vector<std::string> referenced_diagrams(const CalcExpr& e) {
  std::set<std::string> names;
  std::vector<const CalcExpr*> work{&e};
  while (!work.empty()) {
    const CalcExpr* c = work.back();
    work.pop_back();
    if (c->kind == CalcExpr::Kind::ref) names.insert(c->name);
    for (const CalcExpr& o : c->operands) work.push_back(&o);
  }
  return {names.begin(), names.end()};
}

using DiagramEnv = std::map<std::string, NodeRef, std::less<>>;

/// Evaluates the expression with apply2 folds and apply1("norm").
inline NodeRef eval_calc(Manager& mgr, const CalcExpr& e, const DiagramEnv& env) {
  switch (e.kind) {
    case CalcExpr::Kind::ref: {
      auto it = env.find(e.name);
      if (it == env.end()) throw UnknownDiagramError(e.name);
      return it->second;
    }
    case CalcExpr::Kind::norm: return mgr.apply1("norm", eval_calc(mgr, e.operands[0], env));
    case CalcExpr::Kind::assoc:
    case CalcExpr::Kind::nonassoc: {
      const std::string op(1, e.op);
      NodeRef acc = eval_calc(mgr, e.operands[0], env);
      for (std::size_t i = 1; i < e.operands.size(); ++i) acc = mgr.apply2(op, acc, eval_calc(mgr, e.operands[i], env));
      return acc;
    }
  }
  return {};
}

}  // namespace addkit
