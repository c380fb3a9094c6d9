/// @file  iris.hpp
/// @brief The shipped Iris fixture: declaration, a three-tree forest, and an
///        expert diagram that forces Setosa on one path

#pragma once

#include <addkit/forest.hpp>
#include <addkit/model.hpp>
#include <addkit/pipeline.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace addkit::iris {

inline constexpr const char* kDeclaration = R"({
  "features": ["sepal_length", "sepal_width", "petal_length", "petal_width"],
  "categories": ["setosa", "versicolor", "virginica"]
})";

inline constexpr const char* kForest = R"({
  "declaration": "iris.decl.json",
  "trees": [
    {"feature": "petal_length", "threshold": 2.45,
     "true": {"leaf": "setosa"},
     "false": {"feature": "petal_width", "threshold": 1.75,
               "true": {"feature": "petal_length", "threshold": 4.95,
                        "true": {"leaf": "versicolor"},
                        "false": {"leaf": "virginica"}},
               "false": {"leaf": "virginica"}}},
    {"feature": "petal_width", "threshold": 0.8,
     "true": {"leaf": "setosa"},
     "false": {"feature": "petal_length", "threshold": 4.85,
               "true": {"feature": "sepal_length", "threshold": 4.95,
                        "true": {"leaf": "virginica"},
                        "false": {"leaf": "versicolor"}},
               "false": {"feature": "petal_width", "threshold": 1.65,
                         "true": {"leaf": "versicolor"},
                         "false": {"leaf": "virginica"}}}},
    {"feature": "petal_width", "threshold": 0.75,
     "true": {"leaf": "setosa"},
     "false": {"feature": "sepal_width", "threshold": 2.25,
               "true": {"feature": "petal_width", "threshold": 1.25,
                        "true": {"leaf": "versicolor"},
                        "false": {"leaf": "virginica"}},
               "false": {"feature": "petal_length", "threshold": 5.05,
                         "true": {"leaf": "versicolor"},
                         "false": {"leaf": "virginica"}}}}
  ]
})";

inline constexpr const char* kExpert = R"({
  "name": "Expert",
  "declaration": "iris.decl.json",
  "root": "short_petals",
  "nodes": {
    "short_petals": {"kind": "predicate", "feature": "petal_length", "threshold": 3.0,
                     "true": "short_sepals", "false": "no_opinion"},
    "short_sepals": {"kind": "predicate", "feature": "sepal_length", "threshold": 5.45,
                     "true": "setosa", "false": "no_opinion_small"},
    "setosa": {"kind": "result", "weights": {"setosa": 8, "versicolor": 0, "virginica": 0}},
    "no_opinion": {"kind": "result", "weights": {"setosa": 0, "versicolor": 0, "virginica": 0}},
    "no_opinion_small": {"kind": "result", "weights": {"setosa": 0, "versicolor": 0, "virginica": 0}}
  }
})";

inline constexpr const char* kComposition = "norm(T1 + T2 + T3) + Expert";

/// Id of the expert's weight-8 leaf.
inline constexpr const char* kExpertSetosaLeaf = "setosa";

inline Declaration declaration() { return parse_declaration(kDeclaration); }

inline ForestModel forest() { return forest_from_json(parse_json(kForest), declaration()); }

inline DiagramModel expert() { return parse_diagram(kExpert, declaration()); }

/// T1..T3 (one-hot trees) and Expert.
inline DiagramStore diagrams() {
  const Declaration decl = declaration();
  const ForestModel f = forest();
  DiagramStore out;
  for (std::size_t i = 0; i < f.trees.size(); ++i) {
    std::string name = "T" + std::to_string(i + 1);
    out.emplace(name, tree_to_diagram(f.trees[i], decl, name, "iris.decl.json"));
  }
  DiagramModel e = expert();
  out.emplace(e.name, std::move(e));
  return out;
}

/// Writes iris.decl.json, iris.forest.json, T1..T3.dd.json, Expert.dd.json
/// and iris.calc into `dir`. Returns the written paths.
inline std::vector<std::filesystem::path> write_demo(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& file, const std::string& text) {
    write_text_file(dir / file, text);
    written.push_back(dir / file);
  };
  put("iris.decl.json", serialize_declaration(declaration()));
  put("iris.forest.json", serialize_forest(forest()));
  for (const auto& [name, m] : diagrams()) put(name + ".dd.json", serialize_diagram(m));
  put("iris.calc", std::string(kComposition) + "\n");
  return written;
}

}  // namespace addkit::iris
