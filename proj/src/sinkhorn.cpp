// SPDX-License-Identifier: Apache-2.0
#include "cyclic_ot/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cyclic_ot/timer.hpp"

namespace cyclic_ot {
namespace {

constexpr double kUnderflow = 1e-300;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

[[noreturn]] void underflow(const char* where) {
  throw NumericalError(std::string(where) +
                       ": Gibbs kernel underflow; increase lambda or use the "
                       "log-domain iteration (--log-domain)");
}

void check_options(const SinkhornOptions& o) {
  if (!(o.lambda > 0.0) || !std::isfinite(o.lambda)) {
    throw InvalidInput("sinkhorn: lambda must be positive and finite");
  }
  if (!(o.tol > 0.0)) throw InvalidInput("sinkhorn: tol must be positive");
  if (o.max_iters <= 0) throw InvalidInput("sinkhorn: max_iters must be positive");
  if (o.check_every <= 0) {
    throw InvalidInput("sinkhorn: check_every must be positive");
  }
}

bool should_check(long it, const SinkhornOptions& o) {
  return it == 1 || it % o.check_every == 0 || it == o.max_iters;
}

struct LoopResult {
  std::vector<double> p;
  std::vector<double> q;
  long iterations = 0;
  bool converged = false;
};

// Scaling iteration on a kernel with rows indexed by alpha, columns by beta.
// `err_scale` converts the residual of this kernel's problem to the scale
// `tol` is stated in.
LoopResult scale_loop(const Matrix& k, std::span<const double> alpha,
                      std::span<const double> beta, std::vector<double> q,
                      double tol, double err_scale, const SinkhornOptions& o) {
  const std::size_t rows = k.rows();
  const std::size_t cols = k.cols();
  if (q.empty()) q.assign(cols, 1.0);
  if (q.size() != cols) throw InvalidInput("sinkhorn: warm start has wrong size");
  for (std::size_t j = 0; j < cols; ++j) {
    if (beta[j] == 0.0) q[j] = 0.0;
  }
  std::vector<double> p(rows, 0.0);
  std::vector<double> kq(rows);
  std::vector<double> ktp(cols);

  LoopResult out;
  for (long it = 1; it <= o.max_iters; ++it) {
    kernels::matvec(k, q, kq, o.policy);
    for (std::size_t i = 0; i < rows; ++i) {
      if (alpha[i] == 0.0) {
        p[i] = 0.0;
      } else {
        if (!(kq[i] >= kUnderflow)) underflow("sinkhorn");
        p[i] = alpha[i] / kq[i];
      }
    }
    kernels::matvec_transposed(k, p, ktp, o.policy);
    out.iterations = it;
    if (should_check(it, o)) {
      double sq = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        const double r = q[j] * ktp[j] - beta[j];
        sq += r * r;
      }
      if (!std::isfinite(sq)) underflow("sinkhorn");
      if (err_scale * std::sqrt(sq) <= tol) {
        out.converged = true;
        break;
      }
      if (it == o.max_iters) break;
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (beta[j] == 0.0) {
        q[j] = 0.0;
      } else {
        if (!(ktp[j] >= kUnderflow)) underflow("sinkhorn");
        q[j] = beta[j] / ktp[j];
      }
    }
  }
  out.p = std::move(p);
  out.q = std::move(q);
  return out;
}

double log_sum_exp(const double* x, std::size_t n, std::size_t stride,
                   const double* shift, std::size_t shift_stride) {
  double mx = kNegInf;
  for (std::size_t t = 0; t < n; ++t) {
    mx = std::max(mx, x[t * stride] + shift[t * shift_stride]);
  }
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    s += std::exp(x[t * stride] + shift[t * shift_stride] - mx);
  }
  return mx + std::log(s);
}

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

// Log-domain scaling on log K. f = log p, g = log q (unitless).
LoopResult log_loop(const Matrix& logk, std::span<const double> alpha,
                    std::span<const double> beta, std::vector<double> g,
                    double tol, double err_scale, const SinkhornOptions& o) {
  const std::size_t rows = logk.rows();
  const std::size_t cols = logk.cols();
  if (g.empty()) g.assign(cols, 0.0);
  if (g.size() != cols) throw InvalidInput("sinkhorn: warm start has wrong size");
  std::vector<double> log_a(rows);
  std::vector<double> log_b(cols);
  for (std::size_t i = 0; i < rows; ++i) log_a[i] = safe_log(alpha[i]);
  for (std::size_t j = 0; j < cols; ++j) {
    log_b[j] = safe_log(beta[j]);
    if (beta[j] == 0.0) g[j] = kNegInf;
  }
  std::vector<double> f(rows, kNegInf);
  std::vector<double> s(cols);
  const bool par = o.policy == ExecPolicy::kParallel;
  const double* kd = logk.data();

  LoopResult out;
  for (long it = 1; it <= o.max_iters; ++it) {
#pragma omp parallel for schedule(static) if (par)
    for (std::size_t i = 0; i < rows; ++i) {
      f[i] = alpha[i] == 0.0
                 ? kNegInf
                 : log_a[i] - log_sum_exp(kd + i * cols, cols, 1, g.data(), 1);
    }
#pragma omp parallel for schedule(static) if (par)
    for (std::size_t j = 0; j < cols; ++j) {
      s[j] = log_sum_exp(kd + j, rows, cols, f.data(), 1);
    }
    out.iterations = it;
    if (should_check(it, o)) {
      double sq = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        const double r = (beta[j] == 0.0 ? 0.0 : std::exp(s[j] + g[j])) - beta[j];
        sq += r * r;
      }
      if (err_scale * std::sqrt(sq) <= tol) {
        out.converged = true;
        break;
      }
      if (it == o.max_iters) break;
    }
    for (std::size_t j = 0; j < cols; ++j) {
      g[j] = beta[j] == 0.0 ? kNegInf : log_b[j] - s[j];
    }
  }
  out.p = std::move(f);
  out.q = std::move(g);
  return out;
}

void check_kernel_support(const Matrix& k, const char* where) {
  for (std::size_t i = 0; i < k.rows(); ++i) {
    const auto row = k.row(i);
    if (std::none_of(row.begin(), row.end(), [](double x) { return x > 0.0; })) {
      underflow(where);
    }
  }
  std::vector<bool> hit(k.cols(), false);
  for (std::size_t i = 0; i < k.rows(); ++i) {
    const auto row = k.row(i);
    for (std::size_t j = 0; j < k.cols(); ++j) {
      if (row[j] > 0.0) hit[j] = true;
    }
  }
  if (std::find(hit.begin(), hit.end(), false) != hit.end()) underflow(where);
}

Matrix log_block_sum(const Matrix& logk, std::size_t m, std::size_t n) {
  // log of sum over s of K[i][j + m s] for i, j < m.
  Matrix out(m, m);
  std::vector<double> zeros(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = logk.data() + i * logk.cols();
    for (std::size_t j = 0; j < m; ++j) {
      out(i, j) = log_sum_exp(row + j, n, m, zeros.data(), 1);
    }
  }
  return out;
}

// T = diag(p) K diag(q), or exp(log K + f + g) in the log domain.
Matrix dense_plan(const GibbsKernel& kernel, const LoopResult& r,
                  ExecPolicy policy) {
  const Matrix& k = kernel.k;
  Matrix t(k.rows(), k.cols());
  const bool par = policy == ExecPolicy::kParallel;
  const bool log_domain = kernel.log_domain;
#pragma omp parallel for schedule(static) if (par)
  for (std::size_t i = 0; i < k.rows(); ++i) {
    const auto krow = k.row(i);
    auto trow = t.row(i);
    for (std::size_t j = 0; j < k.cols(); ++j) {
      trow[j] = log_domain ? std::exp(krow[j] + r.p[i] + r.q[j])
                           : r.p[i] * krow[j] * r.q[j];
    }
  }
  return t;
}

ScalingState export_scaling(const LoopResult& r, const SinkhornOptions& o) {
  ScalingState s{r.p, r.q};
  if (o.log_domain) {
    for (double& x : s.p) x *= o.lambda;
    for (double& x : s.q) x *= o.lambda;
  }
  return s;
}

std::vector<double> import_scaling(const ScalingState& warm,
                                   const SinkhornOptions& o) {
  std::vector<double> q = warm.q;
  if (o.log_domain) {
    for (double& x : q) x /= o.lambda;
  }
  return q;
}

void fill_dense_report(SolveReport& report, const DenseProblem& problem,
                       const Matrix& plan) {
  report.objective = objective(problem.cost(), plan);
  report.marginal_error = marginal_error(plan, problem.b().entries());
  report.row_marginal_error = row_marginal_error(plan, problem.a().entries());
}

}  // namespace

GibbsKernel build_gibbs_kernel(const Matrix& cost, double lambda,
                               ExecPolicy policy) {
  if (!(lambda > 0.0)) throw InvalidInput("gibbs kernel: lambda must be positive");
  GibbsKernel g;
  g.lambda = lambda;
  kernels::gibbs(cost, lambda, g.k, policy);
  check_kernel_support(g.k, "build_gibbs_kernel");
  return g;
}

GibbsKernel build_cyclic_kernel(const CyclicProblem& problem, double lambda,
                                ExecPolicy policy) {
  if (!(lambda > 0.0)) throw InvalidInput("gibbs kernel: lambda must be positive");
  GibbsKernel g;
  g.lambda = lambda;
  kernels::cyclic_gibbs(problem.cost_blocks(), lambda, g.k, policy);
  check_kernel_support(g.k, "build_cyclic_kernel");
  return g;
}

GibbsKernel build_log_cyclic_kernel(const CyclicProblem& problem,
                                    double lambda) {
  if (!(lambda > 0.0)) throw InvalidInput("gibbs kernel: lambda must be positive");
  const std::size_t m = problem.block_size();
  const std::size_t n = problem.order();
  GibbsKernel g;
  g.lambda = lambda;
  g.log_domain = true;
  g.k = Matrix(m, m);
  std::vector<double> terms(n);
  const std::vector<double> zeros(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        terms[k] = -problem.block(k)(i, j) / lambda;
      }
      g.k(i, j) = log_sum_exp(terms.data(), n, 1, zeros.data(), 1);
    }
  }
  return g;
}

SinkhornSolution sinkhorn(const DenseProblem& problem, const GibbsKernel& kernel,
                          const SinkhornOptions& options,
                          const ScalingState& warm_start) {
  check_options(options);
  if (kernel.log_domain != options.log_domain) {
    throw InvalidInput("sinkhorn: kernel domain does not match options");
  }
  if (kernel.k.rows() != problem.dim() || kernel.k.cols() != problem.dim()) {
    throw InvalidInput("sinkhorn: kernel shape does not match problem");
  }
  Stopwatch watch;
  SinkhornSolution out;
  Stopwatch phase;
  const auto& a = problem.a().entries();
  const auto& b = problem.b().entries();
  const LoopResult r =
      options.log_domain
          ? log_loop(kernel.k, a, b, import_scaling(warm_start, options),
                     options.tol, 1.0, options)
          : scale_loop(kernel.k, a, b, import_scaling(warm_start, options),
                       options.tol, 1.0, options);
  out.report.phases["iterate"] = phase.seconds();
  phase.reset();
  Matrix plan = dense_plan(kernel, r, options.policy);
  out.report.phases["reconstruct"] = phase.seconds();
  out.report.wall_time = watch.seconds();

  out.report.algorithm = options.log_domain ? "sinkhorn-log" : "sinkhorn";
  out.report.iterations = r.iterations;
  out.report.converged = r.converged;
  fill_dense_report(out.report, problem, plan);
  out.scaling = export_scaling(r, options);
  out.plan = TransportPlan::from_dense(std::move(plan));
  return out;
}

SinkhornSolution sinkhorn(const DenseProblem& problem,
                          const SinkhornOptions& options,
                          const ScalingState& warm_start) {
  check_options(options);
  Stopwatch watch;
  GibbsKernel kernel;
  if (options.log_domain) {
    kernel.lambda = options.lambda;
    kernel.log_domain = true;
    kernel.k = Matrix(problem.dim(), problem.dim());
    const auto src = problem.cost().values();
    auto dst = kernel.k.values();
    for (std::size_t t = 0; t < src.size(); ++t) dst[t] = -src[t] / options.lambda;
  } else {
    kernel = build_gibbs_kernel(problem.cost(), options.lambda, options.policy);
  }
  const double kernel_time = watch.seconds();
  SinkhornSolution out = sinkhorn(problem, kernel, options, warm_start);
  out.report.phases["kernel"] = kernel_time;
  out.report.wall_time += kernel_time;
  return out;
}

SinkhornSolution cyclic_sinkhorn(const CyclicProblem& problem,
                                 const SinkhornOptions& options) {
  check_options(options);
  Stopwatch watch;
  Stopwatch phase;
  const GibbsKernel kernel =
      options.log_domain
          ? build_log_cyclic_kernel(problem, options.lambda)
          : build_cyclic_kernel(problem, options.lambda, options.policy);
  SinkhornSolution out;
  out.report.phases["kernel"] = phase.seconds();

  phase.reset();
  const double err_scale = std::sqrt(static_cast<double>(problem.order()));
  const LoopResult r =
      options.log_domain
          ? log_loop(kernel.k, problem.alpha(), problem.beta(), {}, options.tol,
                     err_scale, options)
          : scale_loop(kernel.k, problem.alpha(), problem.beta(), {},
                       options.tol, err_scale, options);
  out.report.phases["iterate"] = phase.seconds();

  phase.reset();
  const std::size_t m = problem.block_size();
  std::vector<Matrix> blocks(problem.order(), Matrix(m, m));
  const bool par = options.policy == ExecPolicy::kParallel;
  const double lambda = options.lambda;
  const bool log_domain = options.log_domain;
  for (std::size_t k = 0; k < problem.order(); ++k) {
    const Matrix& c = problem.block(k);
    Matrix& t = blocks[k];
#pragma omp parallel for schedule(static) if (par)
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        t(i, j) = log_domain ? std::exp(r.p[i] + r.q[j] - c(i, j) / lambda)
                             : r.p[i] * r.q[j] * std::exp(-c(i, j) / lambda);
      }
    }
  }
  out.report.phases["reconstruct"] = phase.seconds();
  out.report.wall_time = watch.seconds();

  out.report.algorithm = log_domain ? "cyclic-sinkhorn-log" : "cyclic-sinkhorn";
  out.report.iterations = r.iterations;
  out.report.converged = r.converged;
  out.report.objective =
      static_cast<double>(problem.order()) * block_objective(problem, blocks);
  const MarginalErrors errors = block_marginal_errors(problem, blocks);
  out.report.marginal_error = errors.column;
  out.report.row_marginal_error = errors.row;
  out.scaling = export_scaling(r, options);
  out.plan = TransportPlan::from_blocks(std::move(blocks));
  return out;
}

SinkhornSolution two_stage_sinkhorn(const DenseProblem& problem,
                                    const TwoStageOptions& options) {
  const SinkhornOptions& o = options.sinkhorn;
  check_options(o);
  const std::size_t d = problem.dim();
  const std::size_t n = options.order;
  if (n == 0 || d % n != 0) {
    throw InvalidInput("two_stage_sinkhorn: order must divide the dimension");
  }
  if (!(options.stage1_tol > 0.0)) {
    throw InvalidInput("two_stage_sinkhorn: stage1_tol must be positive");
  }
  const std::size_t m = d / n;
  Stopwatch watch;
  Stopwatch phase;

  GibbsKernel kernel;
  kernel.lambda = o.lambda;
  kernel.log_domain = o.log_domain;
  Matrix folded(m, m);
  if (o.log_domain) {
    kernel.k = Matrix(d, d);
    const auto src = problem.cost().values();
    auto dst = kernel.k.values();
    for (std::size_t t = 0; t < src.size(); ++t) dst[t] = -src[t] / o.lambda;
    folded = log_block_sum(kernel.k, m, n);
  } else {
    kernel = build_gibbs_kernel(problem.cost(), o.lambda, o.policy);
    // Same k-ordered summation as the cyclic kernel built from the blocks of
    // the first block row, so the two agree bitwise.
    for (std::size_t i = 0; i < m; ++i) {
      const auto row = kernel.k.row(i);
      for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += row[j + m * k];
        folded(i, j) = s;
      }
    }
    check_kernel_support(folded, "two_stage_sinkhorn");
  }
  const double kernel_time = phase.seconds();

  phase.reset();
  const std::vector<double> alpha = fold_average(problem.a().entries(), n);
  const std::vector<double> beta = fold_average(problem.b().entries(), n);
  // n = 1 has nothing to fold; stage 2 then is exactly a cold start.
  LoopResult first;
  if (n > 1) {
    first = o.log_domain
                ? log_loop(folded, alpha, beta, {}, options.stage1_tol, 1.0, o)
                : scale_loop(folded, alpha, beta, {}, options.stage1_tol, 1.0, o);
  }
  const double stage1_time = phase.seconds();

  phase.reset();
  std::vector<double> q0 = n > 1 ? repeat(first.q, n) : std::vector<double>{};
  const auto& a = problem.a().entries();
  const auto& b = problem.b().entries();
  const LoopResult second =
      o.log_domain ? log_loop(kernel.k, a, b, std::move(q0), o.tol, 1.0, o)
                   : scale_loop(kernel.k, a, b, std::move(q0), o.tol, 1.0, o);
  const double stage2_time = phase.seconds();

  phase.reset();
  Matrix plan = dense_plan(kernel, second, o.policy);
  const double reconstruct_time = phase.seconds();

  SinkhornSolution out;
  out.report.wall_time = watch.seconds();
  out.report.phases["kernel"] = kernel_time;
  out.report.phases["stage1"] = stage1_time;
  out.report.phases["stage2"] = stage2_time;
  out.report.phases["reconstruct"] = reconstruct_time;
  out.report.algorithm = o.log_domain ? "two-stage-log" : "two-stage";
  out.report.iterations = first.iterations + second.iterations;
  out.report.extras["stage1_iterations"] = static_cast<double>(first.iterations);
  out.report.extras["stage2_iterations"] = static_cast<double>(second.iterations);
  out.report.extras["order"] = static_cast<double>(n);
  out.report.converged = second.converged;
  fill_dense_report(out.report, problem, plan);
  out.scaling = export_scaling(second, o);
  out.plan = TransportPlan::from_dense(std::move(plan));
  return out;
}

}  // namespace cyclic_ot
