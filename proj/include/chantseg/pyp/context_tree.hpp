#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "chantseg/binary_io.hpp"
#include "chantseg/errors.hpp"
#include "chantseg/pyp/restaurant.hpp"
#include "chantseg/random.hpp"

namespace chantseg::pyp {

// Priors for per-depth hyperparameter resampling: Beta on the discount,
// Gamma(shape, rate) on the concentration.
struct HyperPrior {
  double discount_a = 1.0;
  double discount_b = 1.0;
  double concentration_shape = 1.0;
  double concentration_rate = 1.0;
};

// Hierarchy of Pitman-Yor restaurants keyed by context suffixes.
//
// A context is a span ordered oldest -> newest. The node at depth n holds the
// last n symbols; its parent is the same context with the oldest symbol
// removed, so the child of a depth-(n-1) node is keyed by context[size-n].
//
// Nodes also carry stop/pass counts for variable-order use: seating a
// customer at depth n with `count_depth` adds a stop at depth n and a pass at
// every shallower node on the path.
template <typename Key, typename Hash = std::hash<Key>>
class ContextTree {
 public:
  using Context = std::span<const Key>;
  using RestaurantT = Restaurant<Key, Hash>;

  struct Node {
    RestaurantT restaurant;
    std::unordered_map<Key, std::unique_ptr<Node>, Hash> children;
    Node* parent = nullptr;
    Key key{};
    int depth = 0;
    std::int64_t stops = 0;
    std::int64_t passes = 0;

    bool prunable() const {
      return restaurant.empty() && stops == 0 && passes == 0 && children.empty();
    }
    const Node* child(const Key& k) const {
      auto it = children.find(k);
      return it == children.end() ? nullptr : it->second.get();
    }
  };

  // Everything needed to remove exactly the customer that was added.
  struct SeatTrace {
    std::vector<Key> context;  // last `depth` symbols of the original context
    Key dish{};
    int depth = 0;
    std::uint64_t table = kNoTable;
    bool counts_depth = false;
  };

  struct AddResult {
    SeatTrace trace;
    // Id of the root table opened by this customer (a draw from the base
    // measure), or kNoTable.
    std::uint64_t new_root_table = kNoTable;
  };

  struct RemoveResult {
    std::uint64_t closed_root_table = kNoTable;
  };

  explicit ContextTree(int max_depth = 1, DepthParams init = {}, HyperPrior prior = {},
                       double stop_a = 1.0, double stop_b = 1.0)
      : max_depth_(max_depth),
        params_(static_cast<std::size_t>(max_depth) + 1, init),
        prior_(prior),
        stop_a_(stop_a),
        stop_b_(stop_b),
        root_(std::make_unique<Node>()) {}

  ContextTree(const ContextTree& other)
      : max_depth_(other.max_depth_),
        params_(other.params_),
        prior_(other.prior_),
        stop_a_(other.stop_a_),
        stop_b_(other.stop_b_),
        next_table_(other.next_table_),
        version_(other.version_),
        direct_customers_(other.direct_customers_),
        root_(clone(*other.root_, nullptr)) {}

  ContextTree& operator=(const ContextTree& other) {
    if (this != &other) {
      ContextTree tmp(other);
      *this = std::move(tmp);
    }
    return *this;
  }

  ContextTree(ContextTree&&) noexcept = default;
  ContextTree& operator=(ContextTree&&) noexcept = default;

  int max_depth() const { return max_depth_; }
  const std::vector<DepthParams>& params() const { return params_; }
  void set_params(int depth, DepthParams p) {
    params_.at(static_cast<std::size_t>(depth)) = p;
    ++version_;
  }
  const HyperPrior& prior() const { return prior_; }
  const Node& root() const { return *root_; }
  // Bumped on every mutation; used to invalidate derived caches.
  std::uint64_t version() const { return version_; }
  std::int64_t total_customers() const { return direct_customers_; }

  // Node for exactly the last `depth` symbols of ctx, or nullptr.
  const Node* find(Context ctx, int depth) const {
    const Node* node = root_.get();
    for (int n = 1; n <= depth && node; ++n) node = node->child(ctx[ctx.size() - n]);
    return node;
  }

  // p(dish | last j symbols) for j = 0..depth. Missing nodes pass their
  // parent's probability through unchanged.
  void path_probabilities(Context ctx, int depth, const Key& dish, double base,
                          std::vector<double>& out) const {
    out.assign(static_cast<std::size_t>(depth) + 1, 0.0);
    const Node* node = root_.get();
    double parent = base;
    for (int n = 0; n <= depth; ++n) {
      if (n > 0 && node) node = node->child(ctx[ctx.size() - n]);
      parent = node ? node->restaurant.predictive(dish, parent, params_[n]) : parent;
      out[n] = parent;
    }
  }

  // Fixed-order predictive at `depth`.
  double predictive(Context ctx, int depth, const Key& dish, double base) const {
    const Node* node = root_.get();
    double p = base;
    for (int n = 0; n <= depth && node; ++n) {
      if (n > 0) {
        node = node->child(ctx[ctx.size() - n]);
        if (!node) break;
      }
      p = node->restaurant.predictive(dish, p, params_[n]);
    }
    return p;
  }

  int max_order(Context ctx) const {
    return std::min<int>(static_cast<int>(ctx.size()), max_depth_);
  }

  double stop_probability(const Node* node) const {
    const double s = node ? static_cast<double>(node->stops) : 0.0;
    const double p = node ? static_cast<double>(node->passes) : 0.0;
    return (s + stop_a_) / (s + p + stop_a_ + stop_b_);
  }

  // p(n | ctx) for n = 0..max_order(ctx); the tail beyond the last order is
  // folded into it.
  void depth_distribution(Context ctx, std::vector<double>& out) const {
    const int top = max_order(ctx);
    out.assign(static_cast<std::size_t>(top) + 1, 0.0);
    const Node* node = root_.get();
    double stay = 1.0;
    for (int n = 0; n <= top; ++n) {
      if (n > 0 && node) node = node->child(ctx[ctx.size() - n]);
      if (n == top) {
        out[n] = stay;
        break;
      }
      const double q = stop_probability(node);
      out[n] = stay * q;
      stay *= 1.0 - q;
    }
  }

  // Variable-order predictive: sum over orders n of p(dish|ctx,n) p(n|ctx).
  double mixture_predictive(Context ctx, const Key& dish, double base) const {
    return mixture_at(deepest_path(ctx), dish, base);
  }

  // Nodes along the context path, root first, stopping at the first missing
  // node or at max_order(ctx).
  std::vector<const Node*> deepest_path(Context ctx) const {
    std::vector<const Node*> path{root_.get()};
    const int top = max_order(ctx);
    for (int n = 1; n <= top; ++n) {
      const Node* next = path.back()->child(ctx[ctx.size() - n]);
      if (!next) break;
      path.push_back(next);
    }
    return path;
  }

  // Mixture predictive given the existing-node path. Orders beyond the last
  // existing node predict exactly like it, so their stop probabilities only
  // matter in aggregate.
  double mixture_at(const std::vector<const Node*>& path, const Key& dish, double base) const {
    double p = base;
    double stay = 1.0;
    double result = 0.0;
    const std::size_t last = path.size() - 1;
    for (std::size_t n = 0; n <= last; ++n) {
      p = path[n]->restaurant.predictive(dish, p, params_[n]);
      if (n == last) {
        result += stay * p;
        break;
      }
      const double q = stop_probability(path[n]);
      result += stay * q * p;
      stay *= 1.0 - q;
    }
    return result;
  }

  // Seats one observed customer at the node of the given depth, creating
  // nodes on the way. New tables recursively send a proxy customer to the
  // parent restaurant.
  AddResult add_customer(Context ctx, int depth, const Key& dish, double base, Rng& rng,
                         bool count_depth = false) {
    std::vector<double> probs;
    path_probabilities(ctx, depth, dish, base, probs);
    Node* node = root_.get();
    if (count_depth && depth > 0) node->passes += 1;
    for (int n = 1; n <= depth; ++n) {
      node = &child_or_create(*node, ctx[ctx.size() - n]);
      if (count_depth && n < depth) node->passes += 1;
    }
    if (count_depth) node->stops += 1;

    AddResult result;
    result.trace.context.assign(ctx.end() - depth, ctx.end());
    result.trace.dish = dish;
    result.trace.depth = depth;
    result.trace.counts_depth = count_depth;
    result.trace.table = seat(*node, dish, probs, base, true, rng, result.new_root_table);
    direct_customers_ += 1;
    ++version_;
    return result;
  }

  // Samples the order n from p(n|ctx) p(dish|ctx,n) and seats there.
  AddResult add_customer_variable(Context ctx, const Key& dish, double base, Rng& rng) {
    const int top = max_order(ctx);
    std::vector<double> probs;
    std::vector<double> orders;
    path_probabilities(ctx, top, dish, base, probs);
    depth_distribution(ctx, orders);
    for (int n = 0; n <= top; ++n) orders[n] *= probs[n];
    std::size_t depth = rng.categorical(orders);
    if (depth >= orders.size()) depth = 0;
    return add_customer(ctx, static_cast<int>(depth), dish, base, rng, true);
  }

  RemoveResult remove_customer(const SeatTrace& trace) {
    Node* node = mutable_find(trace.context, trace.depth);
    if (!node) throw StaleTrace("context node no longer exists");
    RemoveResult result;
    Node* at = node;
    std::uint64_t table = trace.table;
    bool direct = true;
    while (true) {
      std::uint64_t parent_link = kNoTable;
      const auto outcome = at->restaurant.leave(trace.dish, table, direct, parent_link);
      if (outcome == RestaurantT::Leave::missing) {
        if (direct) throw StaleTrace("table no longer exists");
        throw Error("franchise links are inconsistent");
      }
      if (outcome == RestaurantT::Leave::stayed) break;
      if (!at->parent) {
        result.closed_root_table = table;
        break;
      }
      at = at->parent;
      table = parent_link;
      direct = false;
    }
    if (trace.counts_depth) {
      node->stops -= 1;
      for (Node* up = node->parent; up; up = up->parent) up->passes -= 1;
    }
    direct_customers_ -= 1;
    prune(node);
    ++version_;
    return result;
  }

  // Auxiliary-variable Gibbs update of per-depth (d, theta) for hierarchical
  // Pitman-Yor models. Depths without customers draw from the prior.
  void resample_hyperparameters(Rng& rng) {
    const std::size_t depths = params_.size();
    std::vector<double> sum_y(depths, 0.0), sum_1my(depths, 0.0), sum_1mz(depths, 0.0),
        sum_log_x(depths, 0.0);
    for_each_node([&](const Node& node) {
      const auto& r = node.restaurant;
      if (r.customers() < 2) return;
      const std::size_t n = static_cast<std::size_t>(node.depth);
      const DepthParams p = params_[n];
      for (std::int64_t i = 1; i < r.tables(); ++i) {
        const double y =
            rng.bernoulli(p.concentration / (p.concentration + p.discount * static_cast<double>(i)))
                ? 1.0
                : 0.0;
        sum_y[n] += y;
        sum_1my[n] += 1.0 - y;
      }
      const double x = rng.beta(p.concentration + 1.0, static_cast<double>(r.customers() - 1));
      sum_log_x[n] += std::log(std::max(x, 1e-300));
      for (const auto& [key, dish] : r.dishes()) {
        for (const Table& t : dish.tables) {
          for (std::int64_t j = 1; j < t.customers; ++j) {
            const double jj = static_cast<double>(j);
            const double z = rng.bernoulli((jj - 1.0) / (jj - p.discount)) ? 1.0 : 0.0;
            sum_1mz[n] += 1.0 - z;
          }
        }
      }
    });
    for (std::size_t n = 0; n < depths; ++n) {
      double d = rng.beta(prior_.discount_a + sum_1my[n], prior_.discount_b + sum_1mz[n]);
      double theta = rng.gamma(prior_.concentration_shape + sum_y[n],
                               prior_.concentration_rate - sum_log_x[n]);
      params_[n].discount = std::clamp(d, 1e-6, 1.0 - 1e-6);
      params_[n].concentration = std::max(theta, 1e-6);
    }
    ++version_;
  }

  template <typename F>
  void for_each_node(F&& f) const {
    std::vector<const Node*> stack{root_.get()};
    while (!stack.empty()) {
      const Node* n = stack.back();
      stack.pop_back();
      f(*n);
      for (const auto& [k, c] : n->children) stack.push_back(c.get());
    }
  }

  std::size_t node_count() const {
    std::size_t n = 0;
    for_each_node([&](const Node&) { ++n; });
    return n;
  }

  // Returns an empty string when every bookkeeping invariant holds,
  // otherwise a description of the first violation.
  std::string check_invariants() const {
    std::ostringstream err;
    std::int64_t direct_total = 0;
    for_each_node([&](const Node& node) {
      if (!err.str().empty()) return;
      const auto& r = node.restaurant;
      std::int64_t customers = 0, tables = 0;
      std::unordered_map<std::uint64_t, std::int64_t> links;
      for (const auto& [k, c] : node.children) {
        if (c->parent != &node || c->depth != node.depth + 1) err << "bad child link; ";
        if (c->prunable()) err << "unpruned empty node; ";
        for (const auto& [dk, dish] : c->restaurant.dishes())
          for (const Table& t : dish.tables) links[t.parent] += 1;
      }
      std::int64_t child_flow = 0;
      for (const auto& [k, c] : node.children) child_flow += c->stops + c->passes;
      if (child_flow != node.passes) err << "pass count mismatch at depth " << node.depth << "; ";
      for (const auto& [dk, dish] : r.dishes()) {
        std::int64_t dc = 0;
        for (const Table& t : dish.tables) {
          if (t.customers < 1 || t.direct < 0 || t.direct > t.customers)
            err << "bad table count; ";
          dc += t.customers;
          direct_total += t.direct;
          auto it = links.find(t.id);
          const std::int64_t proxies = it == links.end() ? 0 : it->second;
          if (proxies != t.customers - t.direct)
            err << "franchise violation at depth " << node.depth << "; ";
          if (it != links.end()) links.erase(it);
        }
        if (dc != dish.customers) err << "dish customer cache mismatch; ";
        if (dish.tables.empty()) err << "dish with no tables; ";
        customers += dc;
        tables += static_cast<std::int64_t>(dish.tables.size());
      }
      if (!links.empty()) err << "child table linked to missing parent table; ";
      if (customers != r.customers() || tables != r.tables())
        err << "restaurant total cache mismatch; ";
    });
    if (err.str().empty() && direct_total != direct_customers_)
      err << "direct customer total mismatch; ";
    return err.str();
  }

  // Sorted dump of all counts (table ids excluded), suitable for comparing
  // two trees for statistical identity.
  std::string canonical_statistics() const {
    std::map<std::vector<Key>, std::string> rows;
    std::vector<Key> path;
    canonical_walk(*root_, path, rows);
    std::ostringstream os;
    for (const auto& [p, s] : rows) os << s << '\n';
    for (const DepthParams& d : params_) os << d.discount << ',' << d.concentration << ';';
    return os.str();
  }

  void write(std::ostream& os) const {
    io::write_magic(os, "CTRE", 1);
    io::write_pod<std::int32_t>(os, max_depth_);
    for (const DepthParams& p : params_) {
      io::write_pod(os, p.discount);
      io::write_pod(os, p.concentration);
    }
    io::write_pod(os, prior_);
    io::write_pod(os, stop_a_);
    io::write_pod(os, stop_b_);
    io::write_pod(os, next_table_);
    io::write_pod(os, direct_customers_);
    write_node(os, *root_);
  }

  static ContextTree read(std::istream& is) {
    io::expect_magic(is, "CTRE", 1);
    const int depth = io::read_pod<std::int32_t>(is);
    if (depth < 0 || depth > 64) throw FormatError("context tree depth out of range");
    ContextTree tree(depth);
    for (DepthParams& p : tree.params_) {
      p.discount = io::read_pod<double>(is);
      p.concentration = io::read_pod<double>(is);
    }
    tree.prior_ = io::read_pod<HyperPrior>(is);
    tree.stop_a_ = io::read_pod<double>(is);
    tree.stop_b_ = io::read_pod<double>(is);
    tree.next_table_ = io::read_pod<std::uint64_t>(is);
    tree.direct_customers_ = io::read_pod<std::int64_t>(is);
    tree.read_node(is, *tree.root_);
    return tree;
  }

 private:
  static std::unique_ptr<Node> clone(const Node& src, Node* parent) {
    auto n = std::make_unique<Node>();
    n->restaurant = src.restaurant;
    n->parent = parent;
    n->key = src.key;
    n->depth = src.depth;
    n->stops = src.stops;
    n->passes = src.passes;
    for (const auto& [k, c] : src.children) n->children.emplace(k, clone(*c, n.get()));
    return n;
  }

  Node* mutable_find(const std::vector<Key>& ctx, int depth) {
    Node* node = root_.get();
    for (int n = 1; n <= depth && node; ++n) {
      auto it = node->children.find(ctx[ctx.size() - n]);
      node = it == node->children.end() ? nullptr : it->second.get();
    }
    return node;
  }

  Node& child_or_create(Node& node, const Key& k) {
    auto& slot = node.children[k];
    if (!slot) {
      slot = std::make_unique<Node>();
      slot->parent = &node;
      slot->key = k;
      slot->depth = node.depth + 1;
    }
    return *slot;
  }

  std::uint64_t seat(Node& node, const Key& dish, const std::vector<double>& probs, double base,
                     bool direct, Rng& rng, std::uint64_t& new_root_table) {
    const DepthParams& p = params_[static_cast<std::size_t>(node.depth)];
    const double parent_prob = node.depth > 0 ? probs[node.depth - 1] : base;
    auto& r = node.restaurant;
    const auto* entry = r.find(dish);
    std::vector<double> weights;
    if (entry) {
      weights.reserve(entry->tables.size() + 1);
      for (const Table& t : entry->tables)
        weights.push_back(std::max(0.0, static_cast<double>(t.customers) - p.discount));
    }
    weights.push_back((p.concentration + p.discount * static_cast<double>(r.tables())) *
                      parent_prob);
    std::size_t pick = rng.categorical(weights);
    if (pick >= weights.size()) pick = weights.size() - 1;
    if (pick + 1 < weights.size()) return r.join(dish, pick, direct);

    std::uint64_t parent_table = kNoTable;
    const std::uint64_t id = ++next_table_;
    if (node.parent) {
      parent_table = seat(*node.parent, dish, probs, base, false, rng, new_root_table);
    } else {
      new_root_table = id;
    }
    r.open_table(dish, id, direct, parent_table);
    return id;
  }

  void prune(Node* node) {
    while (node->parent && node->prunable()) {
      Node* up = node->parent;
      up->children.erase(node->key);
      node = up;
    }
  }

  void canonical_walk(const Node& node, std::vector<Key>& path,
                      std::map<std::vector<Key>, std::string>& rows) const {
    std::ostringstream os;
    for (const Key& k : path) os << k << ' ';
    os << "| s=" << node.stops << " p=" << node.passes;
    std::map<Key, std::vector<std::pair<std::int64_t, std::int64_t>>> dishes;
    for (const auto& [k, d] : node.restaurant.dishes()) {
      auto& v = dishes[k];
      for (const Table& t : d.tables) v.emplace_back(t.customers, t.direct);
      std::sort(v.begin(), v.end());
    }
    for (const auto& [k, v] : dishes) {
      os << " [" << k << ':';
      for (const auto& [c, dr] : v) os << c << '/' << dr << ',';
      os << ']';
    }
    rows[path] = os.str();
    for (const auto& [k, c] : node.children) {
      path.push_back(k);
      canonical_walk(*c, path, rows);
      path.pop_back();
    }
  }

  static void write_node(std::ostream& os, const Node& node) {
    io::write_pod(os, node.key);
    io::write_pod(os, node.stops);
    io::write_pod(os, node.passes);
    io::write_pod<std::uint64_t>(os, node.restaurant.dishes().size());
    for (const auto& [k, d] : node.restaurant.dishes()) {
      io::write_pod(os, k);
      io::write_pod<std::uint64_t>(os, d.tables.size());
      for (const Table& t : d.tables) io::write_pod(os, t);
    }
    io::write_pod<std::uint64_t>(os, node.children.size());
    for (const auto& [k, c] : node.children) write_node(os, *c);
  }

  void read_node(std::istream& is, Node& node) {
    node.key = io::read_pod<Key>(is);
    node.stops = io::read_pod<std::int64_t>(is);
    node.passes = io::read_pod<std::int64_t>(is);
    const auto n_dishes = io::read_pod<std::uint64_t>(is);
    for (std::uint64_t i = 0; i < n_dishes; ++i) {
      const Key k = io::read_pod<Key>(is);
      const auto n_tables = io::read_pod<std::uint64_t>(is);
      std::vector<Table> tables(n_tables);
      for (Table& t : tables) t = io::read_pod<Table>(is);
      node.restaurant.restore_dish(k, std::move(tables));
    }
    const auto n_children = io::read_pod<std::uint64_t>(is);
    for (std::uint64_t i = 0; i < n_children; ++i) {
      auto child = std::make_unique<Node>();
      child->parent = &node;
      child->depth = node.depth + 1;
      read_node(is, *child);
      const Key k = child->key;
      node.children.emplace(k, std::move(child));
    }
  }

  int max_depth_;
  std::vector<DepthParams> params_;
  HyperPrior prior_;
  double stop_a_;
  double stop_b_;
  std::uint64_t next_table_ = 0;
  std::uint64_t version_ = 0;
  std::int64_t direct_customers_ = 0;
  std::unique_ptr<Node> root_;
};

}  // namespace chantseg::pyp
