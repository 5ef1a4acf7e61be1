#pragma once

#include "freight/geo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

namespace freight {

// Static bounding-box hierarchy over lon/lat boxes, packed bottom-up with
// sort-tile-recursive grouping. Queries use `min_distance` as the node bound,
// so nearest-neighbour searches are exact with respect to whatever leaf
// distance the caller supplies, provided that distance never falls below the
// great-circle distance to the entry's box.
class box_tree {
public:
  static constexpr std::size_t node_capacity = 16;

  box_tree() = default;

  explicit box_tree(const std::vector<geo_box>& boxes) { build(boxes); }

  std::size_t size() const { return n_entries_; }
  bool empty() const { return n_entries_ == 0; }

  struct nearest_result {
    std::size_t entry = std::numeric_limits<std::size_t>::max();
    double distance = std::numeric_limits<double>::infinity();
    bool found() const { return entry != std::numeric_limits<std::size_t>::max(); }
  };

  // Best-first search. `leaf_distance(entry)` returns the exact distance;
  // `prefer(a, b)` breaks exact ties (true if entry a should win over b).
  template <typename LeafDistance, typename Prefer>
  nearest_result nearest(lon_lat q, LeafDistance&& leaf_distance, Prefer&& prefer) const {
    nearest_result best;
    if (empty()) return best;
    using item = std::pair<double, std::size_t>; // (bound, node)
    std::priority_queue<item, std::vector<item>, std::greater<>> frontier;
    frontier.push({min_distance(q, nodes_.back().box), nodes_.size() - 1});
    while (!frontier.empty()) {
      const auto [bound, node_index] = frontier.top();
      frontier.pop();
      if (bound > slack(best.distance)) break;
      const node& nd = nodes_[node_index];
      for (std::size_t k = nd.first; k < nd.first + nd.count; ++k) {
        if (nd.leaf) {
          const std::size_t e = order_[k];
          const double d = leaf_distance(e);
          if (d < best.distance || (d == best.distance && best.found() && prefer(e, best.entry))) best = {e, d};
        } else {
          const double b = min_distance(q, nodes_[k].box);
          if (b <= slack(best.distance)) frontier.push({b, k});
        }
      }
    }
    return best;
  }

  // Calls visit(entry) for every entry whose box lies within `radius_m` of q.
  template <typename Visit>
  void within(lon_lat q, double radius_m, Visit&& visit) const {
    if (empty()) return;
    std::vector<std::size_t> stack{nodes_.size() - 1};
    while (!stack.empty()) {
      const node& nd = nodes_[stack.back()];
      stack.pop_back();
      if (min_distance(q, nd.box) > slack(radius_m)) continue;
      for (std::size_t k = nd.first; k < nd.first + nd.count; ++k) {
        if (nd.leaf) {
          if (min_distance(q, boxes_[order_[k]]) <= slack(radius_m)) visit(order_[k]);
        } else {
          stack.push_back(k);
        }
      }
    }
  }

  // Calls visit(entry) for every entry whose box contains q.
  template <typename Visit>
  void containing(lon_lat q, Visit&& visit) const {
    if (empty()) return;
    std::vector<std::size_t> stack{nodes_.size() - 1};
    while (!stack.empty()) {
      const node& nd = nodes_[stack.back()];
      stack.pop_back();
      if (!nd.box.contains(q)) continue;
      for (std::size_t k = nd.first; k < nd.first + nd.count; ++k) {
        if (nd.leaf) {
          if (boxes_[order_[k]].contains(q)) visit(order_[k]);
        } else {
          stack.push_back(k);
        }
      }
    }
  }

private:
  struct node {
    geo_box box;
    std::size_t first = 0; // leaf: offset into order_; inner: first child node
    std::size_t count = 0;
    bool leaf = true;
  };

  // Pruning tolerance for bounds computed through a different formula than
  // the leaf distances.
  static double slack(double d) { return d + 1e-9 * d + 1e-9; }

  void build(const std::vector<geo_box>& boxes) {
    boxes_ = boxes;
    n_entries_ = boxes.size();
    nodes_.clear();
    order_.resize(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) order_[i] = i;
    if (boxes.empty()) return;

    str_sort(order_.begin(), order_.end(), [this](std::size_t i) { return boxes_[i].center(); });
    std::vector<std::size_t> level;
    for (std::size_t i = 0; i < order_.size(); i += node_capacity) {
      node nd;
      nd.first = i;
      nd.count = std::min(node_capacity, order_.size() - i);
      nd.leaf = true;
      nd.box = boxes_[order_[i]];
      for (std::size_t k = i; k < i + nd.count; ++k) nd.box.expand(boxes_[order_[k]]);
      level.push_back(nodes_.size());
      nodes_.push_back(nd);
    }
    while (level.size() > 1) {
      str_sort(level.begin(), level.end(), [this](std::size_t i) { return nodes_[i].box.center(); });
      // Children of an inner node must be contiguous in nodes_, so copy them.
      std::vector<std::size_t> next;
      for (std::size_t i = 0; i < level.size(); i += node_capacity) {
        const std::size_t count = std::min(node_capacity, level.size() - i);
        const std::size_t first = nodes_.size();
        for (std::size_t k = i; k < i + count; ++k) nodes_.push_back(nodes_[level[k]]);
        node parent;
        parent.first = first;
        parent.count = count;
        parent.leaf = false;
        parent.box = nodes_[first].box;
        for (std::size_t k = first; k < first + count; ++k) parent.box.expand(nodes_[k].box);
        next.push_back(nodes_.size());
        nodes_.push_back(parent);
      }
      level = std::move(next);
    }
    // The root is the last node pushed.
    if (level.front() != nodes_.size() - 1) nodes_.push_back(nodes_[level.front()]);
  }

  template <typename It, typename Center>
  static void str_sort(It begin, It end, Center center) {
    const auto n = static_cast<std::size_t>(end - begin);
    std::sort(begin, end, [&](std::size_t a, std::size_t b) { return center(a).lon < center(b).lon; });
    const auto leaves = (n + node_capacity - 1) / node_capacity;
    const auto slices = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(leaves))));
    const std::size_t per_slice = slices * node_capacity;
    for (std::size_t s = 0; s < n; s += per_slice) {
      const auto slice_end = begin + static_cast<std::ptrdiff_t>(std::min(n, s + per_slice));
      std::sort(begin + static_cast<std::ptrdiff_t>(s), slice_end,
                [&](std::size_t a, std::size_t b) { return center(a).lat < center(b).lat; });
    }
  }

  std::vector<geo_box> boxes_;
  std::vector<node> nodes_;
  std::vector<std::size_t> order_;
  std::size_t n_entries_ = 0;
};

} // namespace freight
