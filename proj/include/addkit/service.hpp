/// @file  service.hpp
/// @brief File-backed model store and the HTTP API over it
///
/// Endpoints (JSON bodies unless noted):
///
///   GET  /api/declaration
///   GET  /api/diagrams                     -> ["Expert", "T1", ...]
///   GET  /api/diagrams/{name}              -> diagram document
///   PUT  /api/diagrams/{name}              validates, compiles, persists
///   POST /api/compose  {expression}        -> {graph, counts}
///   GET  /api/graph?expression=...         -> graph document text
///   POST /api/classify {expression, features} -> {category, weights}
///   GET  /api/dot?expression=...           -> dot text
///   POST /api/codegen  {expression, target[, name]} -> source text
///
/// Client errors answer 400 {"error", "location"?}; unknown diagrams 404.

#pragma once

#include <addkit/emit.hpp>
#include <addkit/errors.hpp>
#include <addkit/model.hpp>
#include <addkit/pipeline.hpp>

#include <httplib.h>

#include <filesystem>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

namespace addkit {

/// Declaration plus named diagrams, seeded from a workspace directory and
/// written back on every successful put. Readers share, writers exclude.
class ModelStore {
 public:
  /// Loads the single `*.decl.json` and every `*.dd.json` in `dir`.
  static ModelStore open(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw InputError("workspace '" + dir.string() + "' is not a directory");
    std::vector<fs::path> decls, dds;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string file = entry.path().filename().string();
      if (file.ends_with(".decl.json")) decls.push_back(entry.path());
      if (file.ends_with(".dd.json")) dds.push_back(entry.path());
    }
    if (decls.size() != 1)
      throw InputError("workspace must contain exactly one *.decl.json, found " + std::to_string(decls.size()));
    ModelStore store;
    store.dir_ = dir;
    store.decl_file_ = decls.front().filename().string();
    store.decl_ = load_declaration(decls.front());
    std::sort(dds.begin(), dds.end());
    for (const fs::path& p : dds) {
      DiagramModel m = load_diagram(p, store.decl_);
      const std::string name = m.name;
      store.diagrams_.insert_or_assign(name, std::move(m));
    }
    return store;
  }

  ModelStore(ModelStore&& other) noexcept
      : dir_(std::move(other.dir_)), decl_file_(std::move(other.decl_file_)), decl_(std::move(other.decl_)),
        diagrams_(std::move(other.diagrams_)) {}

  Declaration declaration() const {
    std::shared_lock lock(mutex_);
    return decl_;
  }

  std::vector<std::string> names() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [name, _] : diagrams_) out.push_back(name);
    return out;
  }

  std::optional<DiagramModel> get(std::string_view name) const {
    std::shared_lock lock(mutex_);
    auto it = diagrams_.find(name);
    if (it == diagrams_.end()) return std::nullopt;
    return it->second;
  }

  /// Copy of the declaration and all diagrams taken under one lock.
  std::pair<Declaration, DiagramStore> snapshot() const {
    std::shared_lock lock(mutex_);
    return {decl_, diagrams_};
  }

  /// Validates and compiles `text` as diagram `name`, then persists it. On
  /// any error the stored diagram is left untouched.
  DiagramModel put(const std::string& name, std::string_view text) {
    if (!is_identifier(name)) throw ValidationError("diagram name must be an identifier", "/name");
    json doc = parse_json(text);
    if (!doc.is_object()) throw ValidationError("diagram must be an object", "/");
    if (!doc.contains("name")) doc["name"] = name;
    if (doc["name"] != name) throw ValidationError("document name differs from the URL name", "/name");

    std::unique_lock lock(mutex_);
    if (!doc.contains("declaration")) doc["declaration"] = decl_file_;
    DiagramModel m = diagram_from_json(doc, decl_);
    Manager scratch(declaration_algebra(decl_));
    compile_diagram(scratch, m);

    const auto target = dir_ / (name + ".dd.json");
    const auto tmp = dir_ / (name + ".dd.json.tmp");
    write_text_file(tmp, serialize_diagram(m));
    std::filesystem::rename(tmp, target);
    diagrams_.insert_or_assign(name, m);
    return m;
  }

  const std::filesystem::path& directory() const noexcept { return dir_; }

 private:
  ModelStore() = default;

  std::filesystem::path dir_;
  std::string decl_file_;
  Declaration decl_;
  DiagramStore diagrams_;
  mutable std::shared_mutex mutex_;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Request handlers, independent of the transport.
class Api {
 public:
  explicit Api(ModelStore& store) : store_(store) {}

  ApiResponse declaration() const { return ok(declaration_to_json(store_.declaration()).dump(2) + "\n"); }

  ApiResponse list_diagrams() const {
    return guarded([&] { return ok(json(store_.names()).dump() + "\n"); });
  }

  ApiResponse get_diagram(const std::string& name) const {
    return guarded([&] {
      auto m = store_.get(name);
      if (!m) throw UnknownDiagramError(name);
      return ok(serialize_diagram(*m));
    });
  }

  ApiResponse put_diagram(const std::string& name, std::string_view body) {
    return guarded([&] { return ok(serialize_diagram(store_.put(name, body))); });
  }

  ApiResponse compose(std::string_view body) const {
    return guarded([&] {
      const json req = parse_json(body);
      const Composition c = run(expression_of(req));
      const NodeCounts n = c.counts();
      ordered_json out;
      out["graph"] = graph_to_json(c.manager, c.root, c.declaration.features);
      out["counts"] = {{"inner", n.inner}, {"terminal", n.terminal}};
      return ok(out.dump(2) + "\n");
    });
  }

  ApiResponse graph(const std::string& expression) const {
    return guarded([&] { return ok(run(expression).graph_doc()); });
  }

  ApiResponse classify(std::string_view body) const {
    return guarded([&] {
      const json req = parse_json(body);
      const Composition c = run(expression_of(req));
      if (!req.contains("features")) throw InputError("missing \"features\"");
      const auto x = features_from_json(req["features"], c.declaration);
      const ClassificationResult r = addkit::classify(c.manager, c.root, x);
      ordered_json out;
      out["category"] = r.category;
      ordered_json w = ordered_json::object();
      for (std::size_t i = 0; i < r.weights.size(); ++i) w[c.declaration.categories[i]] = r.weights[i];
      out["weights"] = std::move(w);
      return ok(out.dump(2) + "\n");
    });
  }

  ApiResponse dot(const std::string& expression) const {
    return guarded([&] {
      ApiResponse r = ok(run(expression).dot());
      r.content_type = "text/vnd.graphviz";
      return r;
    });
  }

  ApiResponse codegen(std::string_view body) const {
    return guarded([&] {
      const json req = parse_json(body);
      const Target t = target_by_name(req.value("target", ""));
      ApiResponse r = ok(run(expression_of(req)).source(t, req.value("name", "dd_eval")));
      r.content_type = t == Target::c ? "text/x-c" : "text/javascript";
      return r;
    });
  }

 private:
  static ApiResponse ok(std::string body) { return ApiResponse{200, "application/json", std::move(body)}; }

  static ApiResponse error(int status, const std::string& message, const std::string& location = {}) {
    ordered_json e;
    e["error"] = message;
    if (!location.empty()) e["location"] = location;
    return ApiResponse{status, "application/json", e.dump() + "\n"};
  }

  template <class F>
  static ApiResponse guarded(F&& f) {
    try {
      return f();
    } catch (const UnknownDiagramError& e) {
      return error(404, e.what());
    } catch (const LocatedError& e) {
      return error(400, e.message(), e.location());
    } catch (const Error& e) {
      return error(400, e.what());
    } catch (const std::exception& e) {
      return error(500, e.what());
    }
  }

  static std::string expression_of(const json& req) {
    if (!req.is_object() || !req.contains("expression") || !req["expression"].is_string())
      throw InputError("request needs a string \"expression\"");
    return req["expression"].get<std::string>();
  }

  Composition run(const std::string& expression) const {
    auto [decl, diagrams] = store_.snapshot();
    return addkit::compose(decl, diagrams, expression);
  }

  ModelStore& store_;
};

/// Registers the API routes (and optionally static UI assets) on `server`.
inline void mount(httplib::Server& server, Api& api, const std::optional<std::filesystem::path>& static_dir = {}) {
  auto send = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Get("/api/declaration", [&api, send](const httplib::Request&, httplib::Response& res) { send(res, api.declaration()); });
  server.Get("/api/diagrams", [&api, send](const httplib::Request&, httplib::Response& res) { send(res, api.list_diagrams()); });
  server.Get(R"(/api/diagrams/([^/]+))", [&api, send](const httplib::Request& req, httplib::Response& res) {
    send(res, api.get_diagram(req.matches[1]));
  });
  server.Put(R"(/api/diagrams/([^/]+))", [&api, send](const httplib::Request& req, httplib::Response& res) {
    send(res, api.put_diagram(req.matches[1], req.body));
  });
  server.Post("/api/compose", [&api, send](const httplib::Request& req, httplib::Response& res) { send(res, api.compose(req.body)); });
  server.Post("/api/classify", [&api, send](const httplib::Request& req, httplib::Response& res) { send(res, api.classify(req.body)); });
  server.Post("/api/codegen", [&api, send](const httplib::Request& req, httplib::Response& res) { send(res, api.codegen(req.body)); });
  server.Get("/api/dot", [&api, send](const httplib::Request& req, httplib::Response& res) {
    send(res, api.dot(req.get_param_value("expression")));
  });
  server.Get("/api/graph", [&api, send](const httplib::Request& req, httplib::Response& res) {
    send(res, api.graph(req.get_param_value("expression")));
  });
  if (static_dir) server.set_mount_point("/", static_dir->string());
}

}  // namespace addkit
