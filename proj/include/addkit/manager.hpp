/// @file  manager.hpp
/// @brief Hash-consed algebraic decision diagrams over an ordered variable set
///
/// A Manager owns every node it creates. Nodes are reduced (no node with equal
/// children) and unique (one stored node per (var, hi, lo) triple and per
/// terminal value), so for a fixed variable order two NodeRefs are equal iff
/// they denote the same function.
///
/// Variables are either plain Boolean inputs (`new_var`) or feature predicates
/// `x[feature] <= threshold` (`predicate_var`). Predicate variables are kept
/// in (feature, threshold) order; a predicate registered later is inserted at
/// its sorted level. Existing nodes stay valid because the relative order of
/// existing variables never changes.
///
/// The operation cache grows without bound and dead nodes are never
/// collected. This is adequate for desk-scale diagrams only.
///
/// A Manager is not thread-safe. It may be moved between threads.

#pragma once

#include <addkit/algebra.hpp>
#include <addkit/errors.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace addkit {

using VarId = std::uint32_t;

/// Opaque handle to a node. Only meaningful inside the owning Manager.
struct NodeRef {
  std::uint32_t owner = 0;
  std::uint32_t index = 0;

  friend bool operator==(NodeRef, NodeRef) = default;
};

struct NodeRefHash {
  std::size_t operator()(NodeRef r) const noexcept {
    return std::hash<std::uint64_t>{}((std::uint64_t{r.owner} << 32) | r.index);
  }
};

/// A feature predicate `x[feature] <= threshold`, or a plain variable when
/// `feature` is empty.
struct PredicateVar {
  std::optional<std::size_t> feature;
  double threshold = 0.0;
};

struct NodeCounts {
  std::size_t inner = 0;
  std::size_t terminal = 0;

  std::size_t total() const noexcept { return inner + terminal; }
  friend bool operator==(const NodeCounts&, const NodeCounts&) = default;
};

/// One bit per VarId.
using Assignment = std::vector<bool>;

class Manager {
 public:
  static constexpr std::uint32_t kTerminalLevel = std::numeric_limits<std::uint32_t>::max();

  explicit Manager(Algebra algebra) : algebra_(std::move(algebra)), owner_(next_owner()) {
    algebra_.validate();
  }

  Manager(const Manager&) = delete;
  Manager& operator=(const Manager&) = delete;
  Manager(Manager&&) noexcept = default;
  Manager& operator=(Manager&&) noexcept = default;

  const Algebra& algebra() const noexcept { return algebra_; }

  // -- variables ------------------------------------------------------------

  /// Appends a plain Boolean variable at the bottom of the order.
  VarId new_var() {
    const VarId v = static_cast<VarId>(vars_.size());
    vars_.push_back(PredicateVar{});
    level_of_.push_back(static_cast<std::uint32_t>(order_.size()));
    order_.push_back(v);
    return v;
  }

  /// Returns the variable for `x[feature] <= threshold`, registering it at its
  /// sorted position (feature first, then ascending threshold) if new.
  VarId predicate_var(std::size_t feature, double threshold) {
    if (!std::isfinite(threshold)) throw DomainError("predicate threshold must be finite");
    if (threshold == 0.0) threshold = 0.0;
    const auto key = std::make_pair(feature, threshold);
    if (auto it = predicates_.find(key); it != predicates_.end()) return it->second;

    const VarId v = static_cast<VarId>(vars_.size());
    vars_.push_back(PredicateVar{feature, threshold});
    predicates_.emplace(key, v);

    std::size_t pos = order_.size();
    for (std::size_t l = 0; l < order_.size(); ++l) {
      const PredicateVar& p = vars_[order_[l]];
      if (p.feature && std::make_pair(*p.feature, p.threshold) > key) {
        pos = l;
        break;
      }
    }
    order_.insert(order_.begin() + static_cast<std::ptrdiff_t>(pos), v);
    level_of_.push_back(0);
    for (std::size_t l = pos; l < order_.size(); ++l) level_of_[order_[l]] = static_cast<std::uint32_t>(l);
    return v;
  }

  std::optional<VarId> find_predicate(std::size_t feature, double threshold) const {
    if (threshold == 0.0) threshold = 0.0;
    auto it = predicates_.find({feature, threshold});
    if (it == predicates_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t var_count() const noexcept { return vars_.size(); }
  const PredicateVar& var_info(VarId v) const { return vars_.at(v); }
  std::uint32_t level(VarId v) const { return level_of_.at(v); }
  VarId var_at_level(std::size_t l) const { return order_.at(l); }

  // -- node construction ----------------------------------------------------

  /// Canonical terminal for `v`.
  NodeRef constant(const Value& v) {
    algebra_.require(v);
    if (auto it = terminals_.find(v); it != terminals_.end()) return ref(it->second);
    const auto idx = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(Node{kNoVar, 0, 0, static_cast<std::uint32_t>(values_.size())});
    values_.push_back(v);
    terminals_.emplace(v, idx);
    return ref(idx);
  }

  /// Reduced, unique node testing `var`: `hi` when true, `lo` when false.
  /// `var` must precede the top variables of both children.
  NodeRef mk(VarId var, NodeRef hi, NodeRef lo) {
    check_owner(hi);
    check_owner(lo);
    if (var >= vars_.size()) throw std::logic_error("mk: unknown variable " + std::to_string(var));
    const std::uint32_t l = level_of_[var];
    if (l >= top_level(hi.index) || l >= top_level(lo.index))
      throw std::logic_error("mk: variable order violated at variable " + std::to_string(var));
    return ref(make(var, hi.index, lo.index));
  }

  /// Diagram `var ? hi_value : lo_value`.
  NodeRef var_node(VarId var, const Value& hi_value, const Value& lo_value) {
    return mk(var, constant(hi_value), constant(lo_value));
  }

  /// If-then-else on a single variable with arbitrary children:
  /// result(a) = a[var] ? hi(a) : lo(a). Unlike mk, `hi` and `lo` may mention
  /// variables above or equal to `var`.
  NodeRef branch(VarId var, NodeRef hi, NodeRef lo) {
    check_owner(hi);
    check_owner(lo);
    if (var >= vars_.size()) throw InputError("branch: unknown variable " + std::to_string(var));
    return ref(branch_rec(var, hi.index, lo.index));
  }

  /// Pointwise lifting of the binary operation `op` of the algebra.
  NodeRef apply2(std::string_view op, NodeRef f, NodeRef g) {
    auto i = algebra_.binary_index(op);
    if (!i)
      throw ConfigError("algebra '" + algebra_.name() + "' has no binary operation '" + std::string(op) + "'");
    check_owner(f);
    check_owner(g);
    return ref(apply2_rec(static_cast<std::uint32_t>(*i), f.index, g.index));
  }

  /// Maps every terminal through the unary operation `op`.
  NodeRef apply1(std::string_view op, NodeRef f) {
    auto i = algebra_.unary_index(op);
    if (!i)
      throw ConfigError("algebra '" + algebra_.name() + "' has no unary operation '" + std::string(op) + "'");
    check_owner(f);
    return ref(apply1_rec(static_cast<std::uint32_t>(*i), f.index));
  }

  /// Canonical diagram of the function given by `table` over `vars`. Entry
  /// `table[k]` is the value where vars[i] is true iff bit i of k is set.
  NodeRef build_from_table(std::span<const VarId> vars, std::span<const Value> table) {
    if (vars.size() >= 31 || table.size() != (std::size_t{1} << vars.size()))
      throw InputError("build_from_table: table has " + std::to_string(table.size()) +
                       " entries, expected 2^" + std::to_string(vars.size()));
    std::vector<std::pair<std::uint32_t, std::size_t>> sorted;  // (level, bit position)
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (vars[i] >= vars_.size()) throw InputError("build_from_table: unknown variable");
      sorted.emplace_back(level_of_[vars[i]], i);
    }
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i)
      if (sorted[i].first == sorted[i - 1].first) throw InputError("build_from_table: repeated variable");
    return build_rec(vars, sorted, table, 0, 0);
  }

  // -- inspection -----------------------------------------------------------

  bool is_terminal(NodeRef f) const { return node(f).var == kNoVar; }
  VarId var(NodeRef f) const {
    const Node& n = node(f);
    if (n.var == kNoVar) throw InputError("terminal node has no variable");
    return n.var;
  }
  NodeRef hi(NodeRef f) const { return ref(inner(f).hi); }
  NodeRef lo(NodeRef f) const { return ref(inner(f).lo); }
  const Value& value(NodeRef f) const {
    const Node& n = node(f);
    if (n.var != kNoVar) throw InputError("inner node has no value");
    return values_[n.value];
  }
  /// Level of f's top variable; kTerminalLevel for terminals.
  std::uint32_t top_level(NodeRef f) const {
    check_owner(f);
    return top_level(f.index);
  }

  /// Walks hi on true, lo on false. `bits` is indexed by VarId.
  Value eval_assignment(NodeRef f, const Assignment& bits) const {
    check_owner(f);
    std::uint32_t i = f.index;
    while (nodes_[i].var != kNoVar) {
      const Node& n = nodes_[i];
      if (n.var >= bits.size())
        throw InputError("no assignment for variable " + std::to_string(n.var));
      i = bits[n.var] ? n.hi : n.lo;
    }
    return values_[nodes_[i].value];
  }

  /// Walks the diagram on a feature vector. A predicate node takes its true
  /// branch iff x[feature] <= threshold; a plain variable v is true iff
  /// x[v] != 0. NaN counts as a missing value.
  Value eval_features(NodeRef f, std::span<const double> x) const {
    check_owner(f);
    std::uint32_t i = f.index;
    while (nodes_[i].var != kNoVar) {
      const Node& n = nodes_[i];
      const PredicateVar& p = vars_[n.var];
      const std::size_t slot = p.feature ? *p.feature : n.var;
      if (slot >= x.size() || std::isnan(x[slot]))
        throw InputError("missing value for feature " + std::to_string(slot));
      const bool taken = p.feature ? x[slot] <= p.threshold : x[slot] != 0.0;
      i = taken ? n.hi : n.lo;
    }
    return values_[nodes_[i].value];
  }

  NodeCounts node_count(NodeRef f) const {
    NodeCounts c;
    for (NodeRef r : iter_nodes(f)) (is_terminal(r) ? c.terminal : c.inner)++;
    return c;
  }

  /// Reachable nodes, each once, parents before children: sorted by level,
  /// ties in depth-first (hi before lo) discovery order. Terminals come last.
  std::vector<NodeRef> iter_nodes(NodeRef f) const {
    check_owner(f);
    std::vector<std::uint32_t> found;
    std::vector<bool> seen(nodes_.size(), false);
    std::vector<std::uint32_t> stack{f.index};
    while (!stack.empty()) {
      const std::uint32_t i = stack.back();
      stack.pop_back();
      if (seen[i]) continue;
      seen[i] = true;
      found.push_back(i);
      if (nodes_[i].var != kNoVar) {
        stack.push_back(nodes_[i].lo);
        stack.push_back(nodes_[i].hi);
      }
    }
    std::stable_sort(found.begin(), found.end(), [this](std::uint32_t a, std::uint32_t b) {
      return top_level(a) < top_level(b);
    });
    std::vector<NodeRef> out;
    out.reserve(found.size());
    for (std::uint32_t i : found) out.push_back(ref(i));
    return out;
  }

  /// Distinct terminal values reachable from f.
  std::vector<Value> terminal_values(NodeRef f) const {
    std::vector<Value> out;
    for (NodeRef r : iter_nodes(f))
      if (is_terminal(r)) out.push_back(value(r));
    return out;
  }

  // -- maintenance ----------------------------------------------------------

  void clear_cache() {
    apply2_cache_.clear();
    apply1_cache_.clear();
    branch_cache_.clear();
  }

  std::size_t cache_size() const noexcept {
    return apply2_cache_.size() + apply1_cache_.size() + branch_cache_.size();
  }

  std::size_t stored_nodes() const noexcept { return nodes_.size(); }

  /// Scans the whole store for violations of the reduction, uniqueness and
  /// ordering invariants. Empty when the store is sound.
  std::vector<std::string> audit() const {
    std::vector<std::string> problems;
    std::size_t inner_count = 0;
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
      const Node& n = nodes_[i];
      if (n.var == kNoVar) continue;
      ++inner_count;
      const std::string id = "node " + std::to_string(i);
      if (n.hi == n.lo) problems.push_back(id + " has equal children");
      const std::uint32_t l = level_of_[n.var];
      if (l >= top_level(n.hi) || l >= top_level(n.lo)) problems.push_back(id + " violates the variable order");
      auto it = unique_.find(InnerKey{n.var, n.hi, n.lo});
      if (it == unique_.end() || it->second != i) problems.push_back(id + " is not the unique node for its triple");
    }
    if (inner_count != unique_.size()) problems.push_back("unique table size mismatch");
    if (terminals_.size() != values_.size()) problems.push_back("duplicate terminal values");
    return problems;
  }

  /// Removes tests whose outcome is implied by a predicate on the same feature
  /// higher up the path. The result agrees with f on every feature vector.
  NodeRef prune_infeasible(NodeRef f) {
    check_owner(f);
    std::map<std::pair<std::uint32_t, std::vector<double>>, std::uint32_t> memo;
    std::vector<double> bounds;  // per feature: exclusive lower, inclusive upper
    for (const PredicateVar& p : vars_)
      if (p.feature && 2 * (*p.feature + 1) > bounds.size()) bounds.resize(2 * (*p.feature + 1));
    for (std::size_t k = 0; k < bounds.size(); k += 2) {
      bounds[k] = -std::numeric_limits<double>::infinity();
      bounds[k + 1] = std::numeric_limits<double>::infinity();
    }
    return ref(prune_rec(f.index, bounds, memo));
  }

 private:
  static constexpr VarId kNoVar = std::numeric_limits<VarId>::max();

  struct Node {
    VarId var;
    std::uint32_t hi;
    std::uint32_t lo;
    std::uint32_t value;
  };

  struct InnerKey {
    std::uint32_t a, b, c;
    friend bool operator==(const InnerKey&, const InnerKey&) = default;
  };
  struct InnerKeyHash {
    std::size_t operator()(const InnerKey& k) const noexcept {
      std::uint64_t h = k.a;
      h = h * 0x9e3779b97f4a7c15ULL ^ k.b;
      h = h * 0x9e3779b97f4a7c15ULL ^ k.c;
      return std::hash<std::uint64_t>{}(h);
    }
  };
  using Cache = std::unordered_map<InnerKey, std::uint32_t, InnerKeyHash>;

  static std::uint32_t next_owner() {
    static std::atomic<std::uint32_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
  }

  NodeRef ref(std::uint32_t i) const noexcept { return NodeRef{owner_, i}; }

  void check_owner(NodeRef f) const {
    if (f.owner != owner_ || f.index >= nodes_.size())
      throw OwnershipError("node handle does not belong to this manager");
  }

  const Node& node(NodeRef f) const {
    check_owner(f);
    return nodes_[f.index];
  }
  const Node& inner(NodeRef f) const {
    const Node& n = node(f);
    if (n.var == kNoVar) throw InputError("terminal node has no children");
    return n;
  }

  std::uint32_t top_level(std::uint32_t i) const noexcept {
    return nodes_[i].var == kNoVar ? kTerminalLevel : level_of_[nodes_[i].var];
  }

  std::uint32_t make(VarId var, std::uint32_t hi, std::uint32_t lo) {
    if (hi == lo) return hi;
    const InnerKey key{var, hi, lo};
    if (auto it = unique_.find(key); it != unique_.end()) return it->second;
    const auto idx = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(Node{var, hi, lo, 0});
    unique_.emplace(key, idx);
    return idx;
  }

  std::uint32_t make_constant(const Value& v) { return constant(v).index; }

  // Cofactors of node i with respect to the variable at `level`.
  std::pair<std::uint32_t, std::uint32_t> cofactors(std::uint32_t i, std::uint32_t level) const {
    if (top_level(i) != level) return {i, i};
    return {nodes_[i].hi, nodes_[i].lo};
  }

  std::uint32_t apply2_rec(std::uint32_t op, std::uint32_t f, std::uint32_t g) {
    const Node& nf = nodes_[f];
    const Node& ng = nodes_[g];
    if (nf.var == kNoVar && ng.var == kNoVar)
      return make_constant(algebra_.binary(op)(values_[nf.value], values_[ng.value]));

    const InnerKey key{op, f, g};
    if (auto it = apply2_cache_.find(key); it != apply2_cache_.end()) return it->second;

    const std::uint32_t level = std::min(top_level(f), top_level(g));
    const VarId var = order_[level];
    const auto [f1, f0] = cofactors(f, level);
    const auto [g1, g0] = cofactors(g, level);
    const std::uint32_t hi = apply2_rec(op, f1, g1);
    const std::uint32_t lo = apply2_rec(op, f0, g0);
    const std::uint32_t r = make(var, hi, lo);
    apply2_cache_.emplace(key, r);
    return r;
  }

  std::uint32_t apply1_rec(std::uint32_t op, std::uint32_t f) {
    const Node nf = nodes_[f];
    if (nf.var == kNoVar) return make_constant(algebra_.unary(op)(values_[nf.value]));

    const InnerKey key{op, f, 0};
    if (auto it = apply1_cache_.find(key); it != apply1_cache_.end()) return it->second;
    const std::uint32_t hi = apply1_rec(op, nf.hi);
    const std::uint32_t lo = apply1_rec(op, nf.lo);
    const std::uint32_t r = make(nf.var, hi, lo);
    apply1_cache_.emplace(key, r);
    return r;
  }

  std::uint32_t branch_rec(VarId var, std::uint32_t hi, std::uint32_t lo) {
    const std::uint32_t vl = level_of_[var];
    if (vl < top_level(hi) && vl < top_level(lo)) return make(var, hi, lo);

    const InnerKey key{var, hi, lo};
    if (auto it = branch_cache_.find(key); it != branch_cache_.end()) return it->second;

    const std::uint32_t level = std::min(top_level(hi), top_level(lo));
    std::uint32_t r;
    if (level == vl) {
      // var itself is on top: keep only the matching cofactor of each side.
      r = make(var, cofactors(hi, vl).first, cofactors(lo, vl).second);
    } else {
      const auto [h1, h0] = cofactors(hi, level);
      const auto [l1, l0] = cofactors(lo, level);
      const std::uint32_t t = branch_rec(var, h1, l1);
      const std::uint32_t e = branch_rec(var, h0, l0);
      r = make(order_[level], t, e);
    }
    branch_cache_.emplace(key, r);
    return r;
  }

  NodeRef build_rec(std::span<const VarId> vars,
                    const std::vector<std::pair<std::uint32_t, std::size_t>>& sorted,
                    std::span<const Value> table, std::size_t depth, std::size_t index) {
    if (depth == sorted.size()) return constant(table[index]);
    const std::size_t bit = sorted[depth].second;
    const NodeRef hi = build_rec(vars, sorted, table, depth + 1, index | (std::size_t{1} << bit));
    const NodeRef lo = build_rec(vars, sorted, table, depth + 1, index);
    return ref(make(vars[bit], hi.index, lo.index));
  }

  std::uint32_t prune_rec(std::uint32_t i, std::vector<double>& bounds,
                          std::map<std::pair<std::uint32_t, std::vector<double>>, std::uint32_t>& memo) {
    const Node n = nodes_[i];
    if (n.var == kNoVar) return i;
    auto key = std::make_pair(i, bounds);
    if (auto it = memo.find(key); it != memo.end()) return it->second;

    std::uint32_t r;
    const PredicateVar p = vars_[n.var];
    if (!p.feature) {
      r = make(n.var, prune_rec(n.hi, bounds, memo), prune_rec(n.lo, bounds, memo));
    } else {
      const std::size_t k = 2 * *p.feature;
      const double lower = bounds[k];
      const double upper = bounds[k + 1];
      if (upper <= p.threshold) {
        r = prune_rec(n.hi, bounds, memo);
      } else if (lower >= p.threshold) {
        r = prune_rec(n.lo, bounds, memo);
      } else {
        bounds[k + 1] = p.threshold;
        const std::uint32_t hi = prune_rec(n.hi, bounds, memo);
        bounds[k + 1] = upper;
        bounds[k] = p.threshold;
        const std::uint32_t lo = prune_rec(n.lo, bounds, memo);
        bounds[k] = lower;
        r = make(n.var, hi, lo);
      }
    }
    memo.emplace(std::move(key), r);
    return r;
  }

  Algebra algebra_;
  std::uint32_t owner_;

  std::vector<PredicateVar> vars_;
  std::vector<std::uint32_t> level_of_;  // VarId -> level
  std::vector<VarId> order_;             // level -> VarId
  std::map<std::pair<std::size_t, double>, VarId> predicates_;

  std::vector<Node> nodes_;
  std::vector<Value> values_;
  Cache unique_;
  std::unordered_map<Value, std::uint32_t, ValueHash> terminals_;

  Cache apply2_cache_;
  Cache apply1_cache_;
  Cache branch_cache_;
};

}  // namespace addkit
