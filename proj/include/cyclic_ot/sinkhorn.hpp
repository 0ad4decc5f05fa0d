// SPDX-License-Identifier: Apache-2.0
//
// Entropic OT by Sinkhorn scaling: the plain d x d iteration, the cyclic
// m x m iteration on the block-summed Gibbs kernel, and the two-stage
// scheme that warm-starts the full problem from the folded one.
//
// Convergence is monitored on the column marginal error, measured right
// after the row update (so row marginals are exact at every check). The
// returned plan is the state at the final check.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cyclic_ot/core.hpp"
#include "cyclic_ot/matrix.hpp"

namespace cyclic_ot {

/// Gibbs kernel K = exp(-C / lambda), or its log when built for the
/// log-domain iteration.
struct GibbsKernel {
  Matrix k;
  double lambda = 0.0;
  bool log_domain = false;
};

/// K_ij = exp(-C_ij / lambda). Throws NumericalError if a whole row or
/// column underflows to zero.
GibbsKernel build_gibbs_kernel(const Matrix& cost, double lambda,
                               ExecPolicy policy = ExecPolicy::kParallel);

/// K_ij = sum_k exp(-C_k(i,j) / lambda).
GibbsKernel build_cyclic_kernel(const CyclicProblem& problem, double lambda,
                                ExecPolicy policy = ExecPolicy::kParallel);

/// log K entries, computed with log-sum-exp over the blocks.
GibbsKernel build_log_cyclic_kernel(const CyclicProblem& problem,
                                    double lambda);

/// Scalings p, q with T = diag(p) K diag(q). In the log domain these hold
/// w = lambda log p and z = lambda log q instead.
struct ScalingState {
  std::vector<double> p;
  std::vector<double> q;
};

struct SinkhornOptions {
  double lambda = 0.1;
  double tol = 1e-9;  // on the full-scale column marginal error
  long max_iters = 100000;
  int check_every = 10;
  bool log_domain = false;
  ExecPolicy policy = ExecPolicy::kParallel;
};

struct SinkhornSolution {
  TransportPlan plan;
  SolveReport report;  // objective is the unregularized <C, T> at full scale
  ScalingState scaling;
};

/// Dense Sinkhorn on a d x d problem. `warm_start.q` (if non-empty) replaces
/// the all-ones initial column scaling.
SinkhornSolution sinkhorn(const DenseProblem& problem,
                          const SinkhornOptions& options,
                          const ScalingState& warm_start = {});

/// Sinkhorn on a prebuilt kernel; the kernel is reused rather than rebuilt.
SinkhornSolution sinkhorn(const DenseProblem& problem, const GibbsKernel& kernel,
                          const SinkhornOptions& options,
                          const ScalingState& warm_start = {});

/// Cyclic Sinkhorn: m-dimensional scalings and block plans
/// T_k = diag(p) exp(-C_k / lambda) diag(q).
SinkhornSolution cyclic_sinkhorn(const CyclicProblem& problem,
                                 const SinkhornOptions& options);

struct TwoStageOptions {
  SinkhornOptions sinkhorn;    // stage-2 settings (tol, lambda, ...)
  std::size_t order = 2;       // folding order n, must divide d
  double stage1_tol = 1e-3;    // on the folded m-dim column residual
};

/// Stage 1: cyclic Sinkhorn on the folded problem (averaged marginals, cost
/// blocks from the first block row of C). Stage 2: dense Sinkhorn started
/// from the n-fold repetition of the stage-1 scalings. The dense kernel is
/// built once and its block-row sums form the stage-1 kernel.
SinkhornSolution two_stage_sinkhorn(const DenseProblem& problem,
                                    const TwoStageOptions& options);

}  // namespace cyclic_ot
