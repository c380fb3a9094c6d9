// Helpers for differential tests that compile and run generated code.

#pragma once

#include <addkit/emit.hpp>
#include <addkit/format.hpp>
#include <addkit/model.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace addkit::testing {

struct CommandResult {
  int status = -1;
  std::string output;
};

inline CommandResult run_command(const std::string& cmd) {
  CommandResult r;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

inline bool have_tool(const std::string& name) { return run_command("command -v " + name).status == 0; }

/// Fresh, unique scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::mt19937_64 rng{std::random_device{}()};
  auto dir = std::filesystem::temp_directory_path() / ("addkit-" + tag + "-" + std::to_string(rng()));
  std::filesystem::create_directories(dir);
  return dir;
}

/// Input file format shared by the harnesses: "<count> <arity>" then rows.
inline std::string format_inputs(const std::vector<std::vector<double>>& xs) {
  std::ostringstream out;
  out << xs.size() << " " << (xs.empty() ? 0 : xs.front().size()) << "\n";
  for (const auto& x : xs) {
    for (std::size_t i = 0; i < x.size(); ++i) out << (i ? " " : "") << format_real(x[i]);
    out << "\n";
  }
  return out.str();
}

/// Parses whitespace-separated numbers, one output row per line.
inline std::vector<std::vector<double>> parse_rows(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) row.push_back(std::strtod(tok.c_str(), nullptr));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// C harness: reads inputs, prints the evaluator's output per row with
/// round-trip precision. `dim` is 0 for scalar results.
inline std::string c_harness(const std::string& fn, std::size_t dim, bool boolean) {
  std::ostringstream h;
  h << "#include <stdio.h>\n#include <stdlib.h>\n";
  if (dim) h << "void " << fn << "(const double *x, double *out);\n";
  else if (boolean) h << "int " << fn << "(const double *x);\n";
  else h << "double " << fn << "(const double *x);\n";
  h << "int main(int argc, char **argv) {\n"
       "  FILE *in = fopen(argv[1], \"r\");\n"
       "  size_t n, k;\n"
       "  if (argc < 2 || !in || fscanf(in, \"%zu %zu\", &n, &k) != 2) return 3;\n"
       "  double *x = calloc(k + 1, sizeof *x);\n";
  if (dim) h << "  double out[" << dim << "];\n";
  h << "  for (size_t r = 0; r < n; ++r) {\n"
       "    for (size_t i = 0; i < k; ++i) if (fscanf(in, \"%lf\", &x[i]) != 1) return 4;\n";
  if (dim) {
    h << "    " << fn << "(x, out);\n"
      << "    for (size_t i = 0; i < " << dim << "; ++i) printf(i ? \" %.17g\" : \"%.17g\", out[i]);\n"
      << "    printf(\"\\n\");\n";
  } else if (boolean) {
    h << "    printf(\"%d\\n\", " << fn << "(x));\n";
  } else {
    h << "    printf(\"%.17g\\n\", " << fn << "(x));\n";
  }
  h << "  }\n  return 0;\n}\n";
  return h.str();
}

/// Node harness: loads the module, evaluates each row, prints the result.
inline std::string js_harness(const std::string& module_path, const std::string& fn) {
  std::ostringstream h;
  h << "const m = require(" << json(module_path).dump() << ");\n"
    << "const lines = require('fs').readFileSync(process.argv[2], 'utf8').trim().split('\\n');\n"
    << "const [n, k] = lines[0].split(' ').map(Number);\n"
    << "const out = [];\n"
    << "for (let r = 1; r <= n; ++r) {\n"
    << "  const x = lines[r].split(' ').map(Number);\n"
    << "  const v = m." << fn << "(x);\n"
    << "  out.push(Array.isArray(v) ? v.map(String).join(' ') : (typeof v === 'boolean' ? (v ? '1' : '0') : String(v)));\n"
    << "}\n"
    << "process.stdout.write(out.join('\\n') + '\\n');\n";
  return h.str();
}

}  // namespace addkit::testing
