// SPDX-License-Identifier: Apache-2.0
#include "cyclic_ot/clot.hpp"

#include "cyclic_ot/lot.hpp"
#include "cyclic_ot/timer.hpp"

namespace cyclic_ot {

AggregatedCost aggregate_cost(std::span<const Matrix> blocks,
                              ExecPolicy policy) {
  if (blocks.empty()) throw InvalidInput("aggregate_cost: no blocks");
  for (const Matrix& b : blocks) {
    if (!b.same_shape(blocks.front())) {
      throw InvalidInput("aggregate_cost: unequal block shapes");
    }
  }
  AggregatedCost agg;
  agg.order = blocks.size();
  kernels::block_min(blocks, agg.min_cost, agg.argmin, policy);
  return agg;
}

std::vector<Matrix> lift_solution(const Matrix& reduced_plan,
                                  const AggregatedCost& agg) {
  if (!reduced_plan.same_shape(agg.min_cost)) {
    throw InvalidInput("lift_solution: plan shape differs from aggregated cost");
  }
  std::vector<Matrix> blocks(agg.order,
                             Matrix(reduced_plan.rows(), reduced_plan.cols()));
  for (std::size_t i = 0; i < reduced_plan.rows(); ++i) {
    for (std::size_t j = 0; j < reduced_plan.cols(); ++j) {
      const double s = reduced_plan(i, j);
      if (s != 0.0) blocks[agg.argmin_at(i, j)](i, j) = s;
    }
  }
  return blocks;
}

CyclicSolution solve_clot(const CyclicProblem& problem, ExecPolicy policy) {
  Stopwatch total;
  CyclicSolution out;
  SolveReport& report = out.report;

  Stopwatch phase;
  const AggregatedCost agg = aggregate_cost(problem.cost_blocks(), policy);
  report.phases["aggregate"] = phase.seconds();

  phase.reset();
  const LotSolution small =
      solve_lot(problem.alpha(), problem.beta(), agg.min_cost);
  report.phases["small_lot"] = phase.seconds();

  phase.reset();
  std::vector<Matrix> blocks = lift_solution(small.plan, agg);
  report.phases["lift"] = phase.seconds();
  report.wall_time = total.seconds();

  const double n = static_cast<double>(problem.order());
  report.algorithm = "clot";
  report.extras["small_objective"] = small.value;
  report.objective = n * small.value;
  report.iterations = small.report.iterations;
  report.converged = true;
  const MarginalErrors errors = block_marginal_errors(problem, blocks);
  report.marginal_error = errors.column;
  report.row_marginal_error = errors.row;
  out.plan = TransportPlan::from_blocks(std::move(blocks));
  return out;
}

CyclicSolution solve_first_block_only(const CyclicProblem& problem) {
  Stopwatch total;
  const LotSolution first =
      solve_lot(problem.alpha(), problem.beta(), problem.block(0));
  std::vector<Matrix> blocks(problem.order(),
                             Matrix(problem.block_size(), problem.block_size()));
  blocks[0] = first.plan;
  const double elapsed = total.seconds();

  CyclicSolution out;
  out.report.algorithm = "first-block";
  out.report.objective = static_cast<double>(problem.order()) * first.value;
  out.report.iterations = first.report.iterations;
  out.report.converged = true;
  const MarginalErrors errors = block_marginal_errors(problem, blocks);
  out.report.marginal_error = errors.column;
  out.report.row_marginal_error = errors.row;
  out.plan = TransportPlan::from_blocks(std::move(blocks));
  out.report.wall_time = elapsed;
  return out;
}

}  // namespace cyclic_ot
