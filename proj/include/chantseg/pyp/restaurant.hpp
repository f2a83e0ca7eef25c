#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

namespace chantseg::pyp {

// Discount d and concentration theta shared by every restaurant at one depth.
struct DepthParams {
  double discount = 0.5;
  double concentration = 2.0;
};

inline constexpr std::uint64_t kNoTable = 0;

// One table of a restaurant. `direct` counts observed customers seated here;
// the rest are proxies sent up from child restaurants. `parent` is the table
// in the parent restaurant that received this table's proxy customer.
struct Table {
  std::uint64_t id = kNoTable;
  std::int64_t customers = 0;
  std::int64_t direct = 0;
  std::uint64_t parent = kNoTable;
};

// Explicit per-table seating for one context. Totals are cached:
// customers() is c(h), tables() is t_h; per dish c(s|h) and t_hs.
template <typename Key, typename Hash = std::hash<Key>>
class Restaurant {
 public:
  struct Dish {
    std::vector<Table> tables;
    std::int64_t customers = 0;
  };
  using DishMap = std::unordered_map<Key, Dish, Hash>;

  std::int64_t customers() const { return customers_; }
  std::int64_t tables() const { return tables_; }
  bool empty() const { return customers_ == 0; }
  const DishMap& dishes() const { return dishes_; }

  const Dish* find(const Key& dish) const {
    auto it = dishes_.find(dish);
    return it == dishes_.end() ? nullptr : &it->second;
  }

  std::int64_t customers(const Key& dish) const {
    const Dish* d = find(dish);
    return d ? d->customers : 0;
  }

  std::int64_t tables(const Key& dish) const {
    const Dish* d = find(dish);
    return d ? static_cast<std::int64_t>(d->tables.size()) : 0;
  }

  // Pitman-Yor predictive probability of `dish` given the parent's
  // probability for it.
  double predictive(const Key& dish, double parent_prob, const DepthParams& p) const {
    if (customers_ == 0) return parent_prob;
    const double denom = p.concentration + static_cast<double>(customers_);
    double own = 0.0;
    if (const Dish* d = find(dish)) {
      own = (static_cast<double>(d->customers) -
             p.discount * static_cast<double>(d->tables.size())) /
            denom;
    }
    const double backoff =
        (p.concentration + p.discount * static_cast<double>(tables_)) / denom;
    return own + backoff * parent_prob;
  }

  void open_table(const Key& dish, std::uint64_t id, bool direct, std::uint64_t parent) {
    Dish& d = dishes_[dish];
    d.tables.push_back(Table{id, 1, direct ? 1 : 0, parent});
    d.customers += 1;
    customers_ += 1;
    tables_ += 1;
  }

  // Seats one more customer at the table with index `index` of `dish`.
  std::uint64_t join(const Key& dish, std::size_t index, bool direct) {
    Dish& d = dishes_.at(dish);
    Table& t = d.tables[index];
    t.customers += 1;
    if (direct) t.direct += 1;
    d.customers += 1;
    customers_ += 1;
    return t.id;
  }

  enum class Leave { missing, stayed, closed };

  // Removes one customer from table `id`. On `closed` the table is gone and
  // `parent_out` receives its parent link.
  Leave leave(const Key& dish, std::uint64_t id, bool direct, std::uint64_t& parent_out) {
    auto it = dishes_.find(dish);
    if (it == dishes_.end()) return Leave::missing;
    Dish& d = it->second;
    auto t = std::find_if(d.tables.begin(), d.tables.end(),
                          [id](const Table& x) { return x.id == id; });
    if (t == d.tables.end()) return Leave::missing;
    if (direct && t->direct == 0) return Leave::missing;
    if (!direct && t->customers - t->direct == 0) return Leave::missing;
    t->customers -= 1;
    if (direct) t->direct -= 1;
    d.customers -= 1;
    customers_ -= 1;
    if (t->customers > 0) return Leave::stayed;
    parent_out = t->parent;
    d.tables.erase(t);
    tables_ -= 1;
    if (d.tables.empty()) dishes_.erase(it);
    return Leave::closed;
  }

  // Used by deserialization; bypasses seating.
  void restore_dish(const Key& dish, std::vector<Table> tables) {
    Dish& d = dishes_[dish];
    for (const Table& t : tables) {
      d.customers += t.customers;
      customers_ += t.customers;
    }
    tables_ += static_cast<std::int64_t>(tables.size());
    d.tables = std::move(tables);
  }

 private:
  DishMap dishes_;
  std::int64_t customers_ = 0;
  std::int64_t tables_ = 0;
};

}  // namespace chantseg::pyp
