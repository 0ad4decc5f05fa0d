// SPDX-License-Identifier: Apache-2.0
//
// Primal network simplex for the uncapacitated transportation problem on a
// complete bipartite graph. Spanning-tree bookkeeping (thread / reverse
// thread / successor counts) follows the classic LEMON design; the tree is
// kept strongly feasible so degenerate pivots cannot cycle. Flows are 64-bit
// integers, costs are doubles.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cyclic_ot/matrix.hpp"

namespace cyclic_ot::detail {

class NetworkSimplex {
 public:
  // supply and demand must have equal totals; cost is supply.size() x
  // demand.size().
  NetworkSimplex(std::span<const std::int64_t> supply,
                 std::span<const std::int64_t> demand, const Matrix& cost);

  // Returns false if some artificial arc still carries flow (infeasible).
  bool run();

  std::int64_t flow(std::size_t i, std::size_t j) const {
    return flow_[i * num_sinks_ + j];
  }
  // Node potentials with cost(i,j) + pi(i) - pi(sink j) >= 0 at optimality.
  double source_potential(std::size_t i) const { return pi_[i]; }
  double sink_potential(std::size_t j) const { return pi_[num_sources_ + j]; }
  long pivots() const noexcept { return pivots_; }

 private:
  static constexpr signed char kStateTree = 0;
  static constexpr signed char kStateLower = 1;
  static constexpr signed char kDirUp = 1;
  static constexpr signed char kDirDown = -1;

  bool find_entering_arc();
  void find_join_node();
  void find_leaving_arc();
  void change_flow();
  void update_tree_structure();
  void update_potential();
  void recompute_potentials();
  bool eligible(int e, double& reduced) const;

  int num_sources_;
  int num_sinks_;
  int node_num_;
  int search_arc_num_;
  int all_arc_num_;
  int root_;

  std::vector<int> source_;
  std::vector<int> target_;
  std::vector<double> cost_;
  std::vector<std::int64_t> flow_;
  std::vector<signed char> state_;
  std::vector<std::int64_t> supply_;

  std::vector<double> pi_;
  std::vector<int> parent_;
  std::vector<int> pred_;
  std::vector<int> thread_;
  std::vector<int> rev_thread_;
  std::vector<int> succ_num_;
  std::vector<int> last_succ_;
  std::vector<signed char> pred_dir_;
  std::vector<int> dirty_revs_;

  int block_size_ = 0;
  int next_arc_ = 0;
  long pivots_ = 0;

  // Pivot scratch.
  int in_arc_ = -1;
  int join_ = -1;
  int u_in_ = -1;
  int v_in_ = -1;
  int u_out_ = -1;
  int v_out_ = -1;
  std::int64_t delta_ = 0;
};

}  // namespace cyclic_ot::detail
