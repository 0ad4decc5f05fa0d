// SPDX-License-Identifier: Apache-2.0
#include "network_simplex.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cyclic_ot::detail {
namespace {

// Relative slack on reduced costs; below this an arc is treated as optimal.
constexpr double kReducedCostEps = 1e-13;

}  // namespace

NetworkSimplex::NetworkSimplex(std::span<const std::int64_t> supply,
                               std::span<const std::int64_t> demand,
                               const Matrix& cost)
    : num_sources_(static_cast<int>(supply.size())),
      num_sinks_(static_cast<int>(demand.size())) {
  const long long arcs = static_cast<long long>(supply.size()) *
                         static_cast<long long>(demand.size());
  if (arcs + static_cast<long long>(supply.size() + demand.size()) >= INT_MAX) {
    throw std::length_error("NetworkSimplex: problem too large");
  }
  node_num_ = num_sources_ + num_sinks_;
  search_arc_num_ = static_cast<int>(arcs);
  all_arc_num_ = search_arc_num_ + node_num_;
  root_ = node_num_;

  source_.resize(all_arc_num_);
  target_.resize(all_arc_num_);
  cost_.resize(all_arc_num_);
  flow_.assign(all_arc_num_, 0);
  state_.assign(all_arc_num_, kStateLower);

  const int nodes = node_num_ + 1;
  supply_.assign(nodes, 0);
  pi_.assign(nodes, 0.0);
  parent_.assign(nodes, -1);
  pred_.assign(nodes, -1);
  thread_.assign(nodes, 0);
  rev_thread_.assign(nodes, 0);
  succ_num_.assign(nodes, 0);
  last_succ_.assign(nodes, 0);
  pred_dir_.assign(nodes, kDirUp);

  double max_cost = 0.0;
  for (int i = 0, e = 0; i < num_sources_; ++i) {
    for (int j = 0; j < num_sinks_; ++j, ++e) {
      source_[e] = i;
      target_[e] = num_sources_ + j;
      cost_[e] = cost(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      max_cost = std::max(max_cost, std::abs(cost_[e]));
    }
  }
  for (int i = 0; i < num_sources_; ++i) supply_[i] = supply[i];
  for (int j = 0; j < num_sinks_; ++j) supply_[num_sources_ + j] = -demand[j];

  block_size_ = std::max(10, static_cast<int>(std::ceil(
                                 std::sqrt(static_cast<double>(search_arc_num_)))));

  // Artificial root with one arc per node: a strongly feasible initial tree.
  const double art_cost = (max_cost + 1.0) * static_cast<double>(node_num_);
  parent_[root_] = -1;
  pred_[root_] = -1;
  thread_[root_] = 0;
  rev_thread_[0] = root_;
  succ_num_[root_] = node_num_ + 1;
  last_succ_[root_] = root_ - 1;
  pi_[root_] = 0.0;
  for (int u = 0, e = search_arc_num_; u != node_num_; ++u, ++e) {
    parent_[u] = root_;
    pred_[u] = e;
    thread_[u] = u + 1;
    rev_thread_[u + 1] = u;
    succ_num_[u] = 1;
    last_succ_[u] = u;
    state_[e] = kStateTree;
    if (supply_[u] >= 0) {
      pred_dir_[u] = kDirUp;
      pi_[u] = 0.0;
      source_[e] = u;
      target_[e] = root_;
      flow_[e] = supply_[u];
      cost_[e] = 0.0;
    } else {
      pred_dir_[u] = kDirDown;
      pi_[u] = art_cost;
      source_[e] = root_;
      target_[e] = u;
      flow_[e] = -supply_[u];
      cost_[e] = art_cost;
    }
  }
}

bool NetworkSimplex::eligible(int e, double& reduced) const {
  const double ps = pi_[source_[e]];
  const double pt = pi_[target_[e]];
  reduced = state_[e] * (cost_[e] + ps - pt);
  return reduced <
         -kReducedCostEps * (std::abs(cost_[e]) + std::abs(ps) + std::abs(pt));
}

bool NetworkSimplex::find_entering_arc() {
  double min = 0.0;
  int cnt = block_size_;
  int e;
  double c;
  for (e = next_arc_; e != search_arc_num_; ++e) {
    c = state_[e] * (cost_[e] + pi_[source_[e]] - pi_[target_[e]]);
    if (c < min && eligible(e, c)) {
      min = c;
      in_arc_ = e;
    }
    if (--cnt == 0) {
      if (min < 0) goto search_end;
      cnt = block_size_;
    }
  }
  for (e = 0; e != next_arc_; ++e) {
    c = state_[e] * (cost_[e] + pi_[source_[e]] - pi_[target_[e]]);
    if (c < min && eligible(e, c)) {
      min = c;
      in_arc_ = e;
    }
    if (--cnt == 0) {
      if (min < 0) goto search_end;
      cnt = block_size_;
    }
  }
  if (min >= 0) return false;

search_end:
  next_arc_ = e == search_arc_num_ ? 0 : e;
  return true;
}

void NetworkSimplex::find_join_node() {
  int u = source_[in_arc_];
  int v = target_[in_arc_];
  while (u != v) {
    if (succ_num_[u] < succ_num_[v]) {
      u = parent_[u];
    } else {
      v = parent_[v];
    }
  }
  join_ = u;
}

void NetworkSimplex::find_leaving_arc() {
  // Entering arcs are always at their lower bound (no capacities).
  const int first = source_[in_arc_];
  const int second = target_[in_arc_];
  delta_ = std::numeric_limits<std::int64_t>::max();
  int result = 0;

  // Arcs pointing up on the first path and down on the second path lose
  // flow. "<" then "<=" keeps the tree strongly feasible.
  for (int u = first; u != join_; u = parent_[u]) {
    if (pred_dir_[u] == kDirUp) {
      const std::int64_t d = flow_[pred_[u]];
      if (d < delta_) {
        delta_ = d;
        u_out_ = u;
        result = 1;
      }
    }
  }
  for (int u = second; u != join_; u = parent_[u]) {
    if (pred_dir_[u] == kDirDown) {
      const std::int64_t d = flow_[pred_[u]];
      if (d <= delta_) {
        delta_ = d;
        u_out_ = u;
        result = 2;
      }
    }
  }
  if (result == 0) {
    throw std::logic_error("NetworkSimplex: unbounded pivot cycle");
  }
  if (result == 1) {
    u_in_ = first;
    v_in_ = second;
  } else {
    u_in_ = second;
    v_in_ = first;
  }
}

void NetworkSimplex::change_flow() {
  if (delta_ > 0) {
    const std::int64_t val = delta_;
    flow_[in_arc_] += val;
    for (int u = source_[in_arc_]; u != join_; u = parent_[u]) {
      flow_[pred_[u]] -= pred_dir_[u] * val;
    }
    for (int u = target_[in_arc_]; u != join_; u = parent_[u]) {
      flow_[pred_[u]] += pred_dir_[u] * val;
    }
  }
  state_[in_arc_] = kStateTree;
  state_[pred_[u_out_]] = kStateLower;
}

void NetworkSimplex::update_tree_structure() {
  const int old_rev_thread = rev_thread_[u_out_];
  const int old_succ_num = succ_num_[u_out_];
  const int old_last_succ = last_succ_[u_out_];
  v_out_ = parent_[u_out_];

  if (u_in_ == u_out_) {
    parent_[u_in_] = v_in_;
    pred_[u_in_] = in_arc_;
    pred_dir_[u_in_] = u_in_ == source_[in_arc_] ? kDirUp : kDirDown;

    if (thread_[v_in_] != u_out_) {
      int after = thread_[old_last_succ];
      thread_[old_rev_thread] = after;
      rev_thread_[after] = old_rev_thread;
      after = thread_[v_in_];
      thread_[v_in_] = u_out_;
      rev_thread_[u_out_] = v_in_;
      thread_[old_last_succ] = after;
      rev_thread_[after] = old_last_succ;
    }
  } else {
    // When old_rev_thread == v_in, join and v_out coincide.
    const int thread_continue = old_rev_thread == v_in_
                                    ? thread_[old_last_succ]
                                    : thread_[v_in_];

    // Re-hang the stem (path u_in .. u_out) below v_in, fixing the thread.
    int stem = u_in_;
    int par_stem = v_in_;
    int next_stem;
    int last = last_succ_[u_in_];
    int before;
    int after = thread_[last];
    thread_[v_in_] = u_in_;
    dirty_revs_.clear();
    dirty_revs_.push_back(v_in_);
    while (stem != u_out_) {
      next_stem = parent_[stem];
      thread_[last] = next_stem;
      dirty_revs_.push_back(last);

      before = rev_thread_[stem];
      thread_[before] = after;
      rev_thread_[after] = before;

      parent_[stem] = par_stem;
      par_stem = stem;
      stem = next_stem;

      last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem]
                                                      : last_succ_[stem];
      after = thread_[last];
    }
    parent_[u_out_] = par_stem;
    thread_[last] = thread_continue;
    rev_thread_[thread_continue] = last;
    last_succ_[u_out_] = last;

    if (old_rev_thread != v_in_) {
      thread_[old_rev_thread] = after;
      rev_thread_[after] = old_rev_thread;
    }

    for (int u : dirty_revs_) rev_thread_[thread_[u]] = u;

    // Stem nodes from u_out up to u_in inherit pred arcs reversed.
    int tmp_sc = 0;
    const int tmp_ls = last_succ_[u_out_];
    for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
      pred_[u] = pred_[p];
      pred_dir_[u] = static_cast<signed char>(-pred_dir_[p]);
      tmp_sc += succ_num_[u] - succ_num_[p];
      succ_num_[u] = tmp_sc;
      last_succ_[p] = tmp_ls;
    }
    pred_[u_in_] = in_arc_;
    pred_dir_[u_in_] = u_in_ == source_[in_arc_] ? kDirUp : kDirDown;
    succ_num_[u_in_] = old_succ_num;
  }

  const int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
  const int last_succ_out = last_succ_[u_out_];
  for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) {
    last_succ_[u] = last_succ_out;
  }

  if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
    for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ;
         u = parent_[u]) {
      last_succ_[u] = old_rev_thread;
    }
  } else if (last_succ_out != old_last_succ) {
    for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ;
         u = parent_[u]) {
      last_succ_[u] = last_succ_out;
    }
  }

  for (int u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
  for (int u = v_out_; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
}

void NetworkSimplex::update_potential() {
  const double sigma =
      pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * cost_[in_arc_];
  const int end = thread_[last_succ_[u_in_]];
  for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
}

void NetworkSimplex::recompute_potentials() {
  pi_[root_] = 0.0;
  for (int u = thread_[root_]; u != root_; u = thread_[u]) {
    const int e = pred_[u];
    pi_[u] = pred_dir_[u] == kDirUp ? pi_[parent_[u]] - cost_[e]
                                    : pi_[parent_[u]] + cost_[e];
  }
}

bool NetworkSimplex::run() {
  for (;;) {
    while (find_entering_arc()) {
      find_join_node();
      find_leaving_arc();
      change_flow();
      update_tree_structure();
      update_potential();
      ++pivots_;
    }
    recompute_potentials();
    if (!find_entering_arc()) break;
  }
  for (int e = search_arc_num_; e != all_arc_num_; ++e) {
    if (flow_[e] != 0) return false;
  }
  return true;
}

}  // namespace cyclic_ot::detail
