/// @file  cli.hpp
/// @brief The `addkit` command line: validate, compose, classify, dot,
///        codegen, demo-iris, serve
///
/// Exit status: 0 success, 1 validation/parse/input errors (reported on
/// stderr with file and location), 2 usage errors.

#pragma once

#include <addkit/emit.hpp>
#include <addkit/forest.hpp>
#include <addkit/iris.hpp>
#include <addkit/model.hpp>
#include <addkit/pipeline.hpp>
#include <addkit/service.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace addkit::cli {

namespace fs = std::filesystem;

namespace detail {

/// Where a diagram comes from: a composed graph document, or declaration +
/// diagram files + expression.
struct Source {
  std::string composed;
  std::string decl;
  std::vector<std::string> diagrams;
  std::string calc;
  std::string expression;
  bool prune = false;

  void add_options(CLI::App* app, bool allow_composed) {
    if (allow_composed) app->add_option("--composed", composed, "Graph document written by `compose`");
    app->add_option("--decl", decl, "Declaration file (*.decl.json)");
    app->add_option("--diagrams", diagrams, "Diagram files (*.dd.json)");
    app->add_option("--calc", calc, "Calculation file (*.calc)");
    app->add_option("--expression,-e", expression, "Calculation expression (instead of --calc)");
    app->add_flag("--prune-infeasible", prune, "Drop tests implied by earlier tests on the same feature");
  }
};

struct Loaded {
  std::optional<Composition> composition;
  std::optional<LoadedGraph> graph;

  const Manager& manager() const { return composition ? composition->manager : graph->manager; }
  NodeRef root() const { return composition ? composition->root : graph->root; }
  std::vector<std::string> features() const {
    return composition ? composition->declaration.features : graph->features;
  }
};

inline std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

// Runs `f`, prefixing the location of any located error with `file`.
template <class F>
auto in_file(const std::string& file, F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw ParseError(e.message(), file + ":" + e.location());
  } catch (const ValidationError& e) {
    throw ValidationError(e.message(), file + ":" + e.location());
  }
}

inline Composition compose_from(const Source& src) {
  if (src.decl.empty()) throw CLI::ValidationError("--decl", "is required");
  if (src.calc.empty() == src.expression.empty()) throw CLI::ValidationError("--calc/--expression", "give exactly one");
  const Declaration decl = in_file(src.decl, [&] { return load_declaration(src.decl); });
  DiagramStore store;
  for (const std::string& file : src.diagrams) {
    DiagramModel m = in_file(file, [&] { return load_diagram(file, decl); });
    const std::string name = m.name;
    if (!store.emplace(name, std::move(m)).second) throw InputError("diagram '" + name + "' given twice");
  }
  ComposeOptions opt;
  opt.prune_infeasible = src.prune;
  if (src.calc.empty()) return compose(decl, store, src.expression, opt);
  const CalcExpr expr = in_file(src.calc, [&] { return parse_calc(trim(read_text_file(src.calc))); });
  return compose(decl, store, expr, opt);
}

inline Loaded load(const Source& src) {
  Loaded l;
  if (!src.composed.empty()) {
    l.graph.emplace(load_graph_doc(read_text_file(src.composed)));
    if (src.prune) l.graph->root = l.graph->manager.prune_infeasible(l.graph->root);
  } else {
    l.composition.emplace(compose_from(src));
  }
  return l;
}

inline void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty())
    out << text;
  else
    write_text_file(out_path, text);
}

/// Validates one model file, chosen by suffix.
inline void validate_file(const fs::path& path, const std::optional<Declaration>& decl) {
  const std::string file = path.filename().string();
  if (file.ends_with(".decl.json")) {
    load_declaration(path);
  } else if (file.ends_with(".dd.json")) {
    const DiagramModel m = load_diagram(path, decl);
    Manager scratch(declaration_algebra(m.declaration));
    compile_diagram(scratch, m);
  } else if (file.ends_with(".forest.json")) {
    load_forest(path, decl);
  } else if (file.ends_with(".calc")) {
    parse_calc(trim(read_text_file(path)));
  } else {
    throw InputError("unknown model file type (expected .decl.json, .dd.json, .forest.json or .calc)");
  }
}

}  // namespace detail

/// Runs the CLI. `out` receives command output, `err` diagnostics.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Algebraic decision diagrams: compose, classify, export", "addkit"};
  app.require_subcommand(1);

  // validate
  std::vector<std::string> validate_files;
  std::string validate_decl;
  auto* validate = app.add_subcommand("validate", "Check model files");
  validate->add_option("files", validate_files, "Model files")->required();
  validate->add_option("--decl", validate_decl, "Declaration to resolve diagrams and forests against");

  // compose
  detail::Source compose_src;
  std::string compose_out;
  auto* compose_cmd = app.add_subcommand("compose", "Compose diagrams and write the graph document");
  compose_src.add_options(compose_cmd, false);
  compose_cmd->add_option("--out,-o", compose_out, "Output file (default: stdout)");

  // classify
  detail::Source classify_src;
  std::string classify_input;
  auto* classify_cmd = app.add_subcommand("classify", "Evaluate a composed diagram on one feature vector");
  classify_src.add_options(classify_cmd, true);
  classify_cmd->add_option("--input,-i", classify_input, "Feature values as name=value,...")->required();

  // dot
  detail::Source dot_src;
  std::string dot_out;
  auto* dot_cmd = app.add_subcommand("dot", "Export a diagram as Graphviz dot");
  dot_src.add_options(dot_cmd, true);
  dot_cmd->add_option("--out,-o", dot_out, "Output file (default: stdout)");

  // codegen
  detail::Source gen_src;
  std::string gen_target, gen_out, gen_name = "dd_eval";
  auto* gen_cmd = app.add_subcommand("codegen", "Generate a standalone evaluator");
  gen_src.add_options(gen_cmd, true);
  gen_cmd->add_option("--target,-t", gen_target, "c or js")->required()->check(CLI::IsMember({"c", "js"}));
  gen_cmd->add_option("--name", gen_name, "Function name");
  gen_cmd->add_option("--out,-o", gen_out, "Output file (default: stdout)");

  // demo-iris
  std::string demo_dir = ".";
  auto* demo_cmd = app.add_subcommand("demo-iris", "Write the Iris declaration, forest, trees and expert diagram");
  demo_cmd->add_option("--out,-o", demo_dir, "Target directory");

  // serve
  int port = 8080;
  std::string workspace = ".";
  std::string static_dir;
  std::string host = "127.0.0.1";
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API over a workspace directory");
  serve_cmd->add_option("--port,-p", port, "Port")->envname("ADDKIT_PORT");
  serve_cmd->add_option("--workspace,-w", workspace, "Workspace directory")->envname("ADDKIT_WORKSPACE");
  serve_cmd->add_option("--static", static_dir, "Directory of UI assets served at /");
  serve_cmd->add_option("--host", host, "Bind address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  }

  std::string context;
  try {
    if (*validate) {
      std::optional<Declaration> decl;
      if (!validate_decl.empty()) decl = load_declaration(validate_decl);
      int status = 0;
      for (const std::string& f : validate_files) {
        try {
          detail::validate_file(f, decl);
          out << "ok " << f << "\n";
        } catch (const LocatedError& e) {
          err << f << ":" << e.location() << ": " << e.message() << "\n";
          status = 1;
        } catch (const Error& e) {
          err << f << ": " << e.what() << "\n";
          status = 1;
        }
      }
      return status;
    }
    if (*compose_cmd) {
      context = "compose";
      const Composition c = detail::compose_from(compose_src);
      detail::emit(c.graph_doc(), compose_out, out);
      return 0;
    }
    if (*classify_cmd) {
      context = "classify";
      const detail::Loaded l = detail::load(classify_src);
      const auto& cats = l.manager().algebra().categories();
      if (cats.empty()) throw InputError("classify needs a diagram over the weights algebra");
      const Declaration decl{l.features(), cats};
      const auto x = parse_feature_assignments(classify_input, decl);
      const ClassificationResult r = classify(l.manager(), l.root(), x);
      out << r.category << "\n";
      for (std::size_t i = 0; i < r.weights.size(); ++i) out << (i ? " " : "") << cats[i] << "=" << format_real(r.weights[i]);
      out << "\n";
      return 0;
    }
    if (*dot_cmd) {
      context = "dot";
      const detail::Loaded l = detail::load(dot_src);
      detail::emit(to_dot(l.manager(), l.root(), l.features()), dot_out, out);
      return 0;
    }
    if (*gen_cmd) {
      context = "codegen";
      const detail::Loaded l = detail::load(gen_src);
      CodegenOptions opt;
      opt.function_name = gen_name;
      opt.feature_names = l.features();
      detail::emit(codegen(l.manager(), l.root(), target_by_name(gen_target), opt), gen_out, out);
      return 0;
    }
    if (*demo_cmd) {
      for (const fs::path& p : iris::write_demo(demo_dir)) out << "wrote " << p.string() << "\n";
      return 0;
    }
    if (*serve_cmd) {
      ModelStore store = ModelStore::open(workspace);
      Api api(store);
      httplib::Server server;
      mount(server, api, static_dir.empty() ? std::nullopt : std::optional<fs::path>(static_dir));
      out << "serving " << workspace << " on http://" << host << ":" << port << "\n" << std::flush;
      if (!server.listen(host, port)) {
        err << "error: cannot listen on " << host << ":" << port << "\n";
        return 1;
      }
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const LocatedError& e) {
    err << context << ": " << e.location() << ": " << e.message() << "\n";
    return 1;
  } catch (const Error& e) {
    err << context << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace addkit::cli
