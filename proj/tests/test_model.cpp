#include <addkit/iris.hpp>
#include <addkit/model.hpp>

#include <support/oracles.hpp>

#include <gtest/gtest.h>

#include <random>
#include <string>

using namespace addkit;
using namespace addkit::testing;

namespace {

const Declaration kDecl{{"a", "b"}, {"x", "y"}};

std::string diagram_doc(const std::string& nodes, const std::string& root = "p") {
  return R"({"name": "D", "root": ")" + root + R"(", "nodes": {)" + nodes + "}}";
}

const std::string kLeafX = R"("lx": {"kind": "result", "weights": {"x": 1}})";
const std::string kLeafY = R"("ly": {"kind": "result", "weights": {"y": 1}})";

/// Message and location of the ValidationError thrown by parsing `text`.
std::pair<std::string, std::string> rejection(const std::string& text) {
  try {
    parse_diagram(text, kDecl);
  } catch (const ValidationError& e) {
    return {e.message(), e.location()};
  }
  ADD_FAILURE() << "accepted: " << text;
  return {};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST(Declaration, ParsesAndRoundTrips) {
  const Declaration d = parse_declaration(R"({"features": ["a", "b"], "categories": ["x", "y"]})");
  EXPECT_EQ(d, kDecl);
  EXPECT_EQ(d.feature_index("b"), 1u);
  EXPECT_FALSE(d.category_index("z").has_value());
  EXPECT_EQ(parse_declaration(serialize_declaration(d)), d);
}

TEST(Declaration, Errors) {
  auto location = [](const std::string& text) {
    try {
      parse_declaration(text);
    } catch (const LocatedError& e) {
      return e.location();
    }
    return std::string("accepted");
  };
  EXPECT_EQ(location(R"({"features": ["a"], "categories": []})"), "/categories");
  EXPECT_EQ(location(R"({"features": ["a", "a"], "categories": ["x"]})"), "/features/1");
  EXPECT_EQ(location(R"({"features": ["1a"], "categories": ["x"]})"), "/features/0");
  EXPECT_EQ(location(R"({"categories": ["x"]})"), "/");
  EXPECT_EQ(location("{\n  \"features\": [\"a\",\n}"), "3:1");
  EXPECT_THROW(parse_declaration("[1, 2"), ParseError);
}

TEST(Diagram, ParsesAndRoundTrips) {
  const std::string text = diagram_doc(R"("p": {"kind": "predicate", "feature": "b", "threshold": 1.5, "true": "lx", "false": "ly"}, )" +
                                       kLeafX + ", " + kLeafY);
  const DiagramModel m = parse_diagram(text, kDecl);
  EXPECT_EQ(m.name, "D");
  EXPECT_EQ(m.root, "p");
  const auto& p = std::get<PredicateNode>(m.nodes.at("p"));
  EXPECT_EQ(p.feature, 1u);
  EXPECT_EQ(p.threshold, 1.5);
  EXPECT_EQ(std::get<ResultNode>(m.nodes.at("ly")).weights, (std::vector{0.0, 1.0}));
  EXPECT_EQ(parse_diagram(serialize_diagram(m), kDecl), m);
}

TEST(Diagram, RejectsCycles) {
  const auto [msg, at] = rejection(diagram_doc(
      R"("p": {"kind": "predicate", "feature": "a", "threshold": 1, "true": "q", "false": "lx"},
         "q": {"kind": "predicate", "feature": "b", "threshold": 1, "true": "p", "false": "lx"}, )" + kLeafX));
  EXPECT_TRUE(contains(msg, "cyclic")) << msg;
  EXPECT_EQ(at, "/nodes/p");
}

TEST(Diagram, RejectsUnreachableNodes) {
  const auto [msg, at] = rejection(diagram_doc(
      R"("p": {"kind": "predicate", "feature": "a", "threshold": 1, "true": "lx", "false": "lx"}, )" + kLeafX + ", " + kLeafY));
  EXPECT_TRUE(contains(msg, "unreachable node ly")) << msg;
  EXPECT_EQ(at, "/nodes/ly");
}

TEST(Diagram, RejectsUnknownNodes) {
  const auto [msg, at] = rejection(diagram_doc(
      R"("p": {"kind": "predicate", "feature": "a", "threshold": 1, "true": "lx", "false": "nowhere"}, )" + kLeafX));
  EXPECT_TRUE(contains(msg, "unknown node 'nowhere'")) << msg;
  EXPECT_EQ(at, "/nodes/p");
  EXPECT_EQ(rejection(diagram_doc(kLeafX, "missing")).second, "/root");
}

TEST(Diagram, RejectsUnresolvedReferences) {
  auto [msg, at] = rejection(diagram_doc(
      R"("p": {"kind": "predicate", "feature": "c", "threshold": 1, "true": "lx", "false": "ly"}, )" + kLeafX + ", " + kLeafY));
  EXPECT_TRUE(contains(msg, "unresolved reference: feature 'c'")) << msg;
  EXPECT_EQ(at, "/nodes/p/feature");
  std::tie(msg, at) = rejection(diagram_doc(R"("lz": {"kind": "result", "weights": {"z": 1}})", "lz"));
  EXPECT_TRUE(contains(msg, "unresolved reference: category 'z'")) << msg;
  EXPECT_EQ(at, "/nodes/lz/weights/z");
}

TEST(Diagram, PredicatesNeedBothBranches) {
  const auto [msg, at] = rejection(diagram_doc(
      R"("p": {"kind": "predicate", "feature": "a", "threshold": 1, "true": "lx"}, )" + kLeafX));
  EXPECT_TRUE(contains(msg, "exactly one TrueBranch and one FalseBranch")) << msg;
  EXPECT_EQ(at, "/nodes/p");
}

TEST(Diagram, ResultsHaveNoEdges) {
  const auto [msg, at] = rejection(diagram_doc(R"("lx": {"kind": "result", "weights": {"x": 1}, "true": "lx"})", "lx"));
  EXPECT_TRUE(contains(msg, "allows no outgoing edges")) << msg;
  EXPECT_EQ(at, "/nodes/lx");
}

TEST(Diagram, InlineDeclarationMustMatch) {
  const std::string text =
      R"({"name": "D", "declaration": {"features": ["a"], "categories": ["x", "y"]}, "root": "lx", "nodes": {)" +
      kLeafX + "}}";
  EXPECT_EQ(rejection(text).second, "/declaration");
}

TEST(Diagram, MalformedJsonIsALocatedParseError) {
  try {
    parse_diagram("{\"name\": \"D\",\n \"root\": }", kDecl);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.location(), "2:10");
  }
}

TEST(Compile, MatchesTheModelWalkOnRandomModels) {
  std::mt19937_64 rng(1234);
  const Declaration d = make_declaration(3, 3);
  for (int trial = 0; trial < 30; ++trial) {
    const DiagramModel m = random_model(rng, d, "R", 4 + trial % 10, 1 + trial % 5, 4);
    Manager mgr(declaration_algebra(d));
    const NodeRef f = compile_diagram(mgr, m);
    EXPECT_TRUE(mgr.audit().empty());
    // Exhaustive over grid cells: one representative per interval per feature.
    const std::vector<double> reps{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
    for (double a : reps)
      for (double b : reps)
        for (double c : reps) {
          const std::vector x{a, b, c};
          ASSERT_EQ(mgr.eval_features(f, x).as_vector(), model_walk(m, x));
        }
    for (int i = 0; i < 1000; ++i) {
      const auto x = random_input(rng, 3, 4);
      ASSERT_EQ(mgr.eval_features(f, x).as_vector(), model_walk(m, x));
    }
  }
}

TEST(Compile, RepeatedAndOutOfOrderTestsAreHandled) {
  // b <= 2 is tested above a <= 1, and a <= 1 twice on one path.
  const std::string text = diagram_doc(
      R"("p": {"kind": "predicate", "feature": "b", "threshold": 2, "true": "q", "false": "ly"},
         "q": {"kind": "predicate", "feature": "a", "threshold": 1, "true": "r", "false": "ly"},
         "r": {"kind": "predicate", "feature": "a", "threshold": 1, "true": "lx", "false": "ly"}, )" +
      kLeafX + ", " + kLeafY);
  const DiagramModel m = parse_diagram(text, kDecl);
  Manager mgr(declaration_algebra(kDecl));
  const NodeRef f = compile_diagram(mgr, m);
  EXPECT_EQ(mgr.node_count(f).inner, 2u);
  EXPECT_EQ(mgr.level(mgr.var(f)), 0u);  // a sorts before b
  for (double a : {0.0, 1.0, 2.0})
    for (double b : {1.0, 2.0, 3.0}) EXPECT_EQ(mgr.eval_features(f, std::vector{a, b}).as_vector(), model_walk(m, std::vector{a, b}));
}

TEST(Compile, PredicateWithEqualBranchesDisappears) {
  const std::string text = diagram_doc(
      R"("p": {"kind": "predicate", "feature": "a", "threshold": 1, "true": "lx", "false": "lx2"},
         "lx2": {"kind": "result", "weights": {"x": 1}}, )" + kLeafX);
  Manager mgr(declaration_algebra(kDecl));
  const NodeRef f = compile_diagram(mgr, parse_diagram(text, kDecl));
  EXPECT_TRUE(mgr.is_terminal(f));
}

TEST(Compile, NeedsTheMatchingAlgebra) {
  Manager mgr(real_algebra());
  EXPECT_THROW(compile_diagram(mgr, parse_diagram(diagram_doc(kLeafX, "lx"), kDecl)), ConfigError);
}

TEST(Calc, Examples) {
  using E = CalcExpr;
  EXPECT_EQ(parse_calc("A"), E::ref("A"));
  EXPECT_EQ(parse_calc("A + B + C"), E::assoc('+', {E::ref("A"), E::ref("B"), E::ref("C")}));
  EXPECT_EQ(parse_calc("A - B / C"), E::nonassoc('-', E::ref("A"), E::nonassoc('/', E::ref("B"), E::ref("C"))));
  EXPECT_EQ(parse_calc("A - B - C"), E::nonassoc('-', E::nonassoc('-', E::ref("A"), E::ref("B")), E::ref("C")));
  EXPECT_EQ(parse_calc("A * (B + C)"), E::assoc('*', {E::ref("A"), E::assoc('+', {E::ref("B"), E::ref("C")})}));
  EXPECT_EQ(parse_calc("norm(T1+T2+T3)+Expert"),
            E::assoc('+', {E::norm(E::assoc('+', {E::ref("T1"), E::ref("T2"), E::ref("T3")})), E::ref("Expert")}));
  EXPECT_EQ(parse_calc(iris::kComposition), parse_calc("norm(T1+T2+T3)+Expert"));
  EXPECT_EQ(referenced_diagrams(parse_calc("B + norm(A) * B")), (std::vector<std::string>{"A", "B"}));
}

TEST(Calc, ErrorsCarryAColumn) {
  auto column = [](const std::string& text) {
    try {
      parse_calc(text);
    } catch (const ParseError& e) {
      return e.location();
    }
    return std::string("accepted");
  };
  EXPECT_EQ(column("A +"), "column 4");
  EXPECT_EQ(column("A + * B"), "column 5");
  EXPECT_EQ(column("(A + B"), "column 7");
  EXPECT_EQ(column("A B"), "column 3");
  EXPECT_EQ(column("A $ B"), "column 3");
  EXPECT_EQ(column(""), "column 1");
  EXPECT_EQ(column("norm A"), "column 6");
}

namespace {

CalcExpr random_expr(std::mt19937_64& rng, int depth) {
  const int kind = depth == 0 ? 0 : static_cast<int>(rng() % 4);
  const char* names[] = {"A", "B", "C", "D1", "norm_x"};
  const char ops[] = {'+', '-', '*', '/'};
  switch (kind) {
    case 0: return CalcExpr::ref(names[rng() % 5]);
    case 1: return CalcExpr::norm(random_expr(rng, depth - 1));
    case 2: {
      std::vector<CalcExpr> xs;
      const char op = rng() % 2 ? '+' : '*';
      for (std::size_t i = 0, n = 2 + rng() % 3; i < n; ++i) {
        CalcExpr c = random_expr(rng, depth - 1);
        if (c.kind == CalcExpr::Kind::assoc && c.op == op) c = CalcExpr::norm(std::move(c));
        xs.push_back(std::move(c));
      }
      return CalcExpr::assoc(op, std::move(xs));
    }
    default: return CalcExpr::nonassoc(ops[1 + 2 * (rng() % 2)], random_expr(rng, depth - 1), random_expr(rng, depth - 1));
  }
}

}  // namespace

TEST(Calc, PrintedFormParsesBack) {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 2000; ++i) {
    const CalcExpr e = random_expr(rng, 4);
    const std::string s = to_string(e);
    ASSERT_EQ(parse_calc(s), e) << s;
  }
}

TEST(Calc, Evaluation) {
  Manager mgr(declaration_algebra(kDecl));
  const VarId p = mgr.predicate_var(0, 1.0);
  DiagramEnv env;
  env["A"] = mgr.var_node(p, Value::vector({1, 0}), Value::vector({0, 1}));
  env["B"] = mgr.constant(Value::vector({2, 2}));
  env["Z"] = mgr.constant(Value::vector({1, 0}));
  EXPECT_EQ(eval_calc(mgr, parse_calc("A + B"), env), eval_calc(mgr, parse_calc("B + A"), env));
  EXPECT_EQ(eval_calc(mgr, parse_calc("A - A"), env), mgr.constant(Value::vector({0, 0})));
  EXPECT_EQ(eval_calc(mgr, parse_calc("norm(B)"), env), mgr.constant(Value::vector({0.5, 0.5})));
  const NodeRef r = eval_calc(mgr, parse_calc("A * B - B / B"), env);
  EXPECT_EQ(mgr.eval_features(r, std::vector{0.0, 0.0}), Value::vector({1, -1}));
  EXPECT_EQ(mgr.eval_features(r, std::vector{2.0, 0.0}), Value::vector({-1, 1}));
  EXPECT_THROW(eval_calc(mgr, parse_calc("A + Q"), env), UnknownDiagramError);
  try {
    eval_calc(mgr, parse_calc("B / Z"), env);
    FAIL();
  } catch (const ArithmeticError& e) {
    EXPECT_EQ(e.component(), 1u);
    EXPECT_TRUE(contains(e.what(), "category 'y'")) << e.what();
  }
}
