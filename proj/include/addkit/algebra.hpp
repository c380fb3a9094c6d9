/// @file  algebra.hpp
/// @brief Terminal values and the pluggable algebras they live in
///
/// An Algebra is a runtime descriptor: a carrier set plus named binary and
/// unary operations and distinguished elements. Four algebras ship:
///
///   "boolean"  ({0,1}, and, or, xor, not)
///   "fuzzy"    ([0,1], and, or, not)  probabilistic fuzzy logic
///   "real"     (R, +, -, *, /, min, max, neg)
///   "weights"  (R^n, +, -, *, /, norm)  one component per category
///
/// An RGB color algebra is just `weight_algebra({"r", "g", "b"})` with
/// components kept in [0, 255] by the caller.

#pragma once

#include <addkit/errors.hpp>
#include <addkit/format.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace addkit {

// ---------------------------------------------------------------------------
// Value
// ---------------------------------------------------------------------------

/// A terminal payload: a Boolean, a real, or a fixed-dimension real vector.
///
/// Reals are finite and -0.0 is stored as +0.0, so exact bit-level equality
/// (used by the unique table) coincides with numeric equality.
class Value {
 public:
  enum class Kind { boolean, real, vector };

  Value() : payload_(false) {}

  static Value boolean(bool b) { return Value(Payload(b)); }

  static Value real(double d) { return Value(Payload(canonical(d))); }

  static Value vector(std::vector<double> v) {
    for (double& c : v) c = canonical(c);
    return Value(Payload(std::move(v)));
  }

  Kind kind() const noexcept { return static_cast<Kind>(payload_.index()); }
  bool is_boolean() const noexcept { return kind() == Kind::boolean; }
  bool is_real() const noexcept { return kind() == Kind::real; }
  bool is_vector() const noexcept { return kind() == Kind::vector; }

  bool as_boolean() const {
    if (!is_boolean()) throw DomainError("value is not a Boolean");
    return std::get<bool>(payload_);
  }
  double as_real() const {
    if (!is_real()) throw DomainError("value is not a real");
    return std::get<double>(payload_);
  }
  const std::vector<double>& as_vector() const {
    if (!is_vector()) throw DomainError("value is not a vector");
    return std::get<std::vector<double>>(payload_);
  }

  friend bool operator==(const Value& a, const Value& b) noexcept {
    if (a.payload_.index() != b.payload_.index()) return false;
    switch (a.kind()) {
      case Kind::boolean:
        return std::get<bool>(a.payload_) == std::get<bool>(b.payload_);
      case Kind::real:
        return bits(std::get<double>(a.payload_)) == bits(std::get<double>(b.payload_));
      case Kind::vector: {
        const auto& u = std::get<std::vector<double>>(a.payload_);
        const auto& v = std::get<std::vector<double>>(b.payload_);
        return std::equal(u.begin(), u.end(), v.begin(), v.end(),
                          [](double x, double y) { return bits(x) == bits(y); });
      }
    }
    return false;
  }

  std::size_t hash() const noexcept {
    std::size_t seed = payload_.index();
    auto mix = [&seed](std::uint64_t h) {
      seed ^= std::hash<std::uint64_t>{}(h) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
    };
    switch (kind()) {
      case Kind::boolean: mix(std::get<bool>(payload_)); break;
      case Kind::real: mix(bits(std::get<double>(payload_))); break;
      case Kind::vector:
        for (double c : std::get<std::vector<double>>(payload_)) mix(bits(c));
        break;
    }
    return seed;
  }

  /// "true"/"false", a shortest round-trip real, or "(a, b, c)".
  std::string to_string() const {
    switch (kind()) {
      case Kind::boolean: return std::get<bool>(payload_) ? "true" : "false";
      case Kind::real: return format_real(std::get<double>(payload_));
      case Kind::vector: {
        std::string s = "(";
        const auto& v = std::get<std::vector<double>>(payload_);
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (i) s += ", ";
          s += format_real(v[i]);
        }
        return s + ")";
      }
    }
    return {};
  }

 private:
  using Payload = std::variant<bool, double, std::vector<double>>;

  explicit Value(Payload p) : payload_(std::move(p)) {}

  static std::uint64_t bits(double d) noexcept { return std::bit_cast<std::uint64_t>(d); }

  static double canonical(double d) {
    if (!std::isfinite(d)) throw DomainError("non-finite real " + std::to_string(d));
    return d == 0.0 ? 0.0 : d;
  }

  Payload payload_;
};

struct ValueHash {
  std::size_t operator()(const Value& v) const noexcept { return v.hash(); }
};

// ---------------------------------------------------------------------------
// Carrier-level operations
// ---------------------------------------------------------------------------

namespace detail {

inline void require_unit(double a, const char* op) {
  if (!(a >= 0.0 && a <= 1.0))
    throw DomainError(std::string(op) + ": " + format_real(a) + " is outside [0, 1]");
}

inline void require_same_dim(std::span<const double> u, std::span<const double> v,
                             const char* op) {
  if (u.size() != v.size())
    throw DimensionError(std::string(op) + ": dimension " + std::to_string(u.size()) +
                         " vs " + std::to_string(v.size()));
}

template <class F>
std::vector<double> zip(std::span<const double> u, std::span<const double> v, const char* op,
                        F f) {
  require_same_dim(u, v, op);
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = f(u[i], v[i]);
  return out;
}

}  // namespace detail

inline double fuzzy_and(double a, double b) {
  detail::require_unit(a, "fuzzy_and");
  detail::require_unit(b, "fuzzy_and");
  return a * b;
}

inline double fuzzy_or(double a, double b) {
  detail::require_unit(a, "fuzzy_or");
  detail::require_unit(b, "fuzzy_or");
  return 1.0 - (1.0 - a) * (1.0 - b);
}

inline double fuzzy_not(double a) {
  detail::require_unit(a, "fuzzy_not");
  return 1.0 - a;
}

inline std::vector<double> vec_add(std::span<const double> u, std::span<const double> v) {
  return detail::zip(u, v, "vec_add", [](double a, double b) { return a + b; });
}

inline std::vector<double> vec_sub(std::span<const double> u, std::span<const double> v) {
  return detail::zip(u, v, "vec_sub", [](double a, double b) { return a - b; });
}

inline std::vector<double> vec_mul(std::span<const double> u, std::span<const double> v) {
  return detail::zip(u, v, "vec_mul", [](double a, double b) { return a * b; });
}

/// Throws ArithmeticError carrying the index of the first zero divisor.
inline std::vector<double> vec_div(std::span<const double> u, std::span<const double> v) {
  detail::require_same_dim(u, v, "vec_div");
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] == 0.0)
      throw ArithmeticError("vec_div: division by zero in component " + std::to_string(i), i);
  return detail::zip(u, v, "vec_div", [](double a, double b) { return a / b; });
}

/// Scales `v` by the reciprocal of its component sum. A zero-sum vector is
/// returned unchanged.
inline std::vector<double> vec_norm(std::span<const double> v) {
  const double sum = std::accumulate(v.begin(), v.end(), 0.0);
  std::vector<double> out(v.begin(), v.end());
  if (sum == 0.0) return out;
  for (double& c : out) c /= sum;
  return out;
}

/// Index of the largest component; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

// ---------------------------------------------------------------------------
// Algebra descriptor
// ---------------------------------------------------------------------------

enum class Carrier { boolean, unit_interval, real, vector };

/// Template category of a descriptor.
enum class Structure { group_like, ring_like, lattice_logic };

using BinaryFn = std::function<Value(const Value&, const Value&)>;
using UnaryFn = std::function<Value(const Value&)>;

class Algebra {
 public:
  Algebra(std::string name, Carrier carrier, Structure structure, std::size_t dimension = 0)
      : name_(std::move(name)), carrier_(carrier), structure_(structure), dimension_(dimension) {}

  Algebra& add_binary(std::string op, BinaryFn fn) {
    binary_.emplace_back(std::move(op), std::move(fn));
    return *this;
  }
  Algebra& add_unary(std::string op, UnaryFn fn) {
    unary_.emplace_back(std::move(op), std::move(fn));
    return *this;
  }
  Algebra& set_distinguished(std::string key, Value v) {
    require(v);
    for (auto& [k, old] : distinguished_)
      if (k == key) {
        old = std::move(v);
        return *this;
      }
    distinguished_.emplace_back(std::move(key), std::move(v));
    return *this;
  }
  Algebra& set_categories(std::vector<std::string> names) {
    if (carrier_ == Carrier::vector && names.size() != dimension_)
      throw DimensionError("algebra '" + name_ + "': " + std::to_string(names.size()) +
                           " category names for dimension " + std::to_string(dimension_));
    categories_ = std::move(names);
    return *this;
  }

  /// Lattice/logic descriptors must provide and, or, not, zero and one.
  void validate() const {
    if (structure_ != Structure::lattice_logic) return;
    for (const char* op : {"and", "or"})
      if (!binary_index(op)) throw ConfigError("algebra '" + name_ + "' lacks '" + op + "'");
    if (!unary_index("not")) throw ConfigError("algebra '" + name_ + "' lacks 'not'");
    for (const char* k : {"zero", "one"})
      if (!find_distinguished(k)) throw ConfigError("algebra '" + name_ + "' lacks '" + k + "'");
  }

  const std::string& name() const noexcept { return name_; }
  Carrier carrier() const noexcept { return carrier_; }
  Structure structure() const noexcept { return structure_; }
  std::size_t dimension() const noexcept { return dimension_; }
  const std::vector<std::string>& categories() const noexcept { return categories_; }

  bool contains(const Value& v) const noexcept {
    switch (carrier_) {
      case Carrier::boolean: return v.is_boolean();
      case Carrier::unit_interval:
        return v.is_real() && v.as_real() >= 0.0 && v.as_real() <= 1.0;
      case Carrier::real: return v.is_real();
      case Carrier::vector: return v.is_vector() && v.as_vector().size() == dimension_;
    }
    return false;
  }

  void require(const Value& v) const {
    if (!contains(v))
      throw DomainError("value " + v.to_string() + " is not in the carrier of '" + name_ + "'");
  }

  std::optional<std::size_t> binary_index(std::string_view op) const noexcept {
    for (std::size_t i = 0; i < binary_.size(); ++i)
      if (binary_[i].first == op) return i;
    return std::nullopt;
  }
  std::optional<std::size_t> unary_index(std::string_view op) const noexcept {
    for (std::size_t i = 0; i < unary_.size(); ++i)
      if (unary_[i].first == op) return i;
    return std::nullopt;
  }

  const BinaryFn& binary(std::size_t i) const { return binary_.at(i).second; }
  const UnaryFn& unary(std::size_t i) const { return unary_.at(i).second; }
  const std::string& binary_name(std::size_t i) const { return binary_.at(i).first; }
  const std::string& unary_name(std::size_t i) const { return unary_.at(i).first; }
  std::size_t binary_count() const noexcept { return binary_.size(); }
  std::size_t unary_count() const noexcept { return unary_.size(); }

  Value apply(std::string_view op, const Value& a, const Value& b) const {
    auto i = binary_index(op);
    if (!i) throw ConfigError("algebra '" + name_ + "' has no binary operation '" + std::string(op) + "'");
    return binary_[*i].second(a, b);
  }
  Value apply(std::string_view op, const Value& a) const {
    auto i = unary_index(op);
    if (!i) throw ConfigError("algebra '" + name_ + "' has no unary operation '" + std::string(op) + "'");
    return unary_[*i].second(a);
  }

  const Value* find_distinguished(std::string_view key) const noexcept {
    for (const auto& [k, v] : distinguished_)
      if (k == key) return &v;
    return nullptr;
  }
  const Value& distinguished(std::string_view key) const {
    if (const Value* v = find_distinguished(key)) return *v;
    throw ConfigError("algebra '" + name_ + "' has no element '" + std::string(key) + "'");
  }

 private:
  std::string name_;
  Carrier carrier_;
  Structure structure_;
  std::size_t dimension_;
  std::vector<std::string> categories_;
  std::vector<std::pair<std::string, BinaryFn>> binary_;
  std::vector<std::pair<std::string, UnaryFn>> unary_;
  std::vector<std::pair<std::string, Value>> distinguished_;
};

// ---------------------------------------------------------------------------
// Shipped algebras
// ---------------------------------------------------------------------------

inline Algebra boolean_algebra() {
  Algebra a("boolean", Carrier::boolean, Structure::lattice_logic);
  a.add_binary("and", [](const Value& x, const Value& y) {
     return Value::boolean(x.as_boolean() && y.as_boolean());
   })
      .add_binary("or", [](const Value& x, const Value& y) {
        return Value::boolean(x.as_boolean() || y.as_boolean());
      })
      .add_binary("xor", [](const Value& x, const Value& y) {
        return Value::boolean(x.as_boolean() != y.as_boolean());
      })
      .add_unary("not", [](const Value& x) { return Value::boolean(!x.as_boolean()); })
      .set_distinguished("zero", Value::boolean(false))
      .set_distinguished("one", Value::boolean(true));
  a.validate();
  return a;
}

inline Algebra fuzzy_algebra() {
  Algebra a("fuzzy", Carrier::unit_interval, Structure::lattice_logic);
  a.add_binary("and", [](const Value& x, const Value& y) {
     return Value::real(fuzzy_and(x.as_real(), y.as_real()));
   })
      .add_binary("or", [](const Value& x, const Value& y) {
        return Value::real(fuzzy_or(x.as_real(), y.as_real()));
      })
      .add_unary("not", [](const Value& x) { return Value::real(fuzzy_not(x.as_real())); })
      .set_distinguished("zero", Value::real(0.0))
      .set_distinguished("one", Value::real(1.0));
  a.validate();
  return a;
}

inline Algebra real_algebra() {
  Algebra a("real", Carrier::real, Structure::ring_like);
  a.add_binary("+", [](const Value& x, const Value& y) { return Value::real(x.as_real() + y.as_real()); })
      .add_binary("-", [](const Value& x, const Value& y) { return Value::real(x.as_real() - y.as_real()); })
      .add_binary("*", [](const Value& x, const Value& y) { return Value::real(x.as_real() * y.as_real()); })
      .add_binary("/", [](const Value& x, const Value& y) {
        if (y.as_real() == 0.0) throw ArithmeticError("division by zero");
        return Value::real(x.as_real() / y.as_real());
      })
      .add_binary("min", [](const Value& x, const Value& y) {
        return Value::real(std::min(x.as_real(), y.as_real()));
      })
      .add_binary("max", [](const Value& x, const Value& y) {
        return Value::real(std::max(x.as_real(), y.as_real()));
      })
      .add_unary("neg", [](const Value& x) { return Value::real(-x.as_real()); })
      .set_distinguished("zero", Value::real(0.0))
      .set_distinguished("one", Value::real(1.0));
  return a;
}

/// The weight-vector algebra over the given categories (dimension = count).
inline Algebra weight_algebra(std::vector<std::string> categories) {
  const std::size_t n = categories.size();
  if (n == 0) throw ConfigError("weight algebra needs at least one category");
  Algebra a("weights", Carrier::vector, Structure::ring_like, n);
  a.set_categories(categories);
  auto names = std::make_shared<const std::vector<std::string>>(std::move(categories));
  a.add_binary("+", [](const Value& x, const Value& y) { return Value::vector(vec_add(x.as_vector(), y.as_vector())); })
      .add_binary("-", [](const Value& x, const Value& y) { return Value::vector(vec_sub(x.as_vector(), y.as_vector())); })
      .add_binary("*", [](const Value& x, const Value& y) { return Value::vector(vec_mul(x.as_vector(), y.as_vector())); })
      .add_binary("/", [names](const Value& x, const Value& y) {
        try {
          return Value::vector(vec_div(x.as_vector(), y.as_vector()));
        } catch (const ArithmeticError& e) {
          throw ArithmeticError("division by zero weight of category '" + names->at(e.component()) + "'",
                                e.component());
        }
      })
      .add_unary("norm", [](const Value& x) { return Value::vector(vec_norm(x.as_vector())); })
      .set_distinguished("zero", Value::vector(std::vector<double>(n, 0.0)))
      .set_distinguished("one", Value::vector(std::vector<double>(n, 1.0)));
  return a;
}

/// Weight algebra with generated category names c0..c{n-1}.
inline Algebra weight_algebra(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("c" + std::to_string(i));
  return weight_algebra(std::move(names));
}

/// Selects an algebra by identifier. "weights" needs the category names.
inline Algebra algebra_by_name(std::string_view name, std::span<const std::string> categories = {}) {
  if (name == "boolean") return boolean_algebra();
  if (name == "fuzzy") return fuzzy_algebra();
  if (name == "real") return real_algebra();
  if (name == "weights") {
    if (categories.empty()) throw ConfigError("algebra 'weights' requires a declaration");
    return weight_algebra(std::vector<std::string>(categories.begin(), categories.end()));
  }
  throw ConfigError("unknown algebra '" + std::string(name) + "'");
}

}  // namespace addkit
