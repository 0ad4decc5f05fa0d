// SPDX-License-Identifier: Apache-2.0
#include "cyclic_ot/core.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace cyclic_ot {
namespace {

double sum(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

void require_nonnegative_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0) {
      std::ostringstream msg;
      msg << what << ": entries must be finite and non-negative (got " << x
          << ")";
      throw InvalidInput(msg.str());
    }
  }
}

void require_divides(std::size_t n, std::size_t d, const char* what) {
  if (n == 0 || d % n != 0) {
    std::ostringstream msg;
    msg << what << ": order " << n << " does not divide dimension " << d;
    throw InvalidInput(msg.str());
  }
}

}  // namespace

ProbabilityVector::ProbabilityVector(std::vector<double> entries, double tol)
    : entries_(std::move(entries)) {
  if (entries_.empty()) throw InvalidInput("ProbabilityVector: empty");
  require_nonnegative_finite(entries_, "ProbabilityVector");
  const double total = sum(entries_);
  if (std::abs(total - 1.0) > tol) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "ProbabilityVector: entries sum to " << total << ", expected 1";
    throw InvalidInput(msg.str());
  }
}

CyclicProblem::CyclicProblem(std::vector<double> alpha,
                             std::vector<double> beta,
                             std::vector<Matrix> cost_blocks, double mass_tol)
    : alpha_(std::move(alpha)),
      beta_(std::move(beta)),
      blocks_(std::move(cost_blocks)) {
  const std::size_t m = alpha_.size();
  const std::size_t n = blocks_.size();
  if (m == 0 || n == 0) throw InvalidInput("CyclicProblem: empty problem");
  if (beta_.size() != m) {
    throw InvalidInput("CyclicProblem: alpha and beta differ in length");
  }
  require_nonnegative_finite(alpha_, "CyclicProblem alpha");
  require_nonnegative_finite(beta_, "CyclicProblem beta");
  for (const Matrix& block : blocks_) {
    if (block.rows() != m || block.cols() != m) {
      throw InvalidInput("CyclicProblem: cost blocks must be m x m");
    }
    require_nonnegative_finite(block.values(), "CyclicProblem cost");
  }
  const double target = 1.0 / static_cast<double>(n);
  for (const auto* v : {&alpha_, &beta_}) {
    const double total = sum(*v);
    if (std::abs(total - target) > mass_tol) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "CyclicProblem: marginal sums to " << total << ", expected 1/n = "
          << target;
      throw InvalidInput(msg.str());
    }
  }
}

DenseProblem::DenseProblem(ProbabilityVector a, ProbabilityVector b,
                           Matrix cost)
    : a_(std::move(a)), b_(std::move(b)), cost_(std::move(cost)) {
  const std::size_t d = a_.size();
  if (b_.size() != d || cost_.rows() != d || cost_.cols() != d) {
    throw InvalidInput("DenseProblem: dimension mismatch");
  }
  require_nonnegative_finite(cost_.values(), "DenseProblem cost");
}

TransportPlan TransportPlan::from_blocks(std::vector<Matrix> blocks) {
  if (blocks.empty()) throw InvalidInput("TransportPlan: no blocks");
  for (const Matrix& b : blocks) {
    if (!b.same_shape(blocks.front()) || !b.square()) {
      throw InvalidInput("TransportPlan: blocks must share a square shape");
    }
  }
  TransportPlan plan;
  plan.is_blocks_ = true;
  plan.blocks_ = std::move(blocks);
  return plan;
}

TransportPlan TransportPlan::from_dense(Matrix dense) {
  TransportPlan plan;
  plan.dense_ = std::move(dense);
  return plan;
}

std::span<const Matrix> TransportPlan::blocks() const {
  if (!is_blocks_) throw std::logic_error("TransportPlan: not in block form");
  return blocks_;
}

const Matrix& TransportPlan::dense() const {
  if (is_blocks_) throw std::logic_error("TransportPlan: in block form");
  return dense_;
}

Matrix TransportPlan::to_dense() const {
  return is_blocks_ ? expand_plan(blocks_) : dense_;
}

std::size_t TransportPlan::dim() const noexcept {
  return is_blocks_ ? blocks_.size() * blocks_.front().rows() : dense_.rows();
}

std::string describe(const SymmetryViolation& v) {
  std::ostringstream out;
  out.precision(6);
  switch (v.field) {
    case SymmetryViolation::Field::kA:
      out << "a is not periodic at index " << v.row;
      break;
    case SymmetryViolation::Field::kB:
      out << "b is not periodic at index " << v.row;
      break;
    case SymmetryViolation::Field::kCost:
      out << "cost is not block-circulant at (" << v.row << ", " << v.col
          << "), block offset " << v.block_k << ", in-block (" << v.block_i
          << ", " << v.block_j << ")";
      break;
  }
  out << ": deviation " << v.magnitude;
  return out.str();
}

ValidationResult validate_cyclic(const DenseProblem& dense, std::size_t n,
                                 double tol) {
  const std::size_t d = dense.dim();
  require_divides(n, d, "validate_cyclic");
  if (tol < 0.0) throw InvalidInput("validate_cyclic: negative tolerance");
  const std::size_t m = d / n;

  SymmetryViolation worst;
  worst.magnitude = -1.0;
  auto consider = [&](SymmetryViolation::Field field, double diff,
                      std::size_t row, std::size_t col) {
    if (diff > worst.magnitude) {
      worst.field = field;
      worst.magnitude = diff;
      worst.row = row;
      worst.col = col;
      worst.block_i = row % m;
      worst.block_j = col % m;
      worst.block_k = (col / m + n - row / m) % n;
    }
  };

  const auto a = dense.a().entries();
  const auto b = dense.b().entries();
  for (std::size_t idx = m; idx < d; ++idx) {
    consider(SymmetryViolation::Field::kA, std::abs(a[idx] - a[idx % m]), idx,
             0);
    consider(SymmetryViolation::Field::kB, std::abs(b[idx] - b[idx % m]), idx,
             0);
  }
  const Matrix& c = dense.cost();
  for (std::size_t row = m; row < d; ++row) {
    const std::size_t r = row / m;
    const std::size_t i = row % m;
    for (std::size_t col = 0; col < d; ++col) {
      const std::size_t k = (col / m + n - r) % n;
      const double reference = c(i, k * m + col % m);
      consider(SymmetryViolation::Field::kCost, std::abs(c(row, col) - reference),
               row, col);
    }
  }
  if (worst.magnitude > tol) {
    if (worst.field != SymmetryViolation::Field::kCost) {
      worst.block_j = 0;
      worst.block_k = worst.row / m;
    }
    return worst;
  }

  std::vector<double> alpha(a.begin(), a.begin() + static_cast<long>(m));
  std::vector<double> beta(b.begin(), b.begin() + static_cast<long>(m));
  std::vector<Matrix> blocks(n, Matrix(m, m));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) blocks[k](i, j) = c(i, k * m + j);
    }
  }
  // Periodicity within tol lets each block's mass drift by up to m * tol.
  const double mass_tol = kMassTolerance + static_cast<double>(m) * tol;
  return CyclicProblem(std::move(alpha), std::move(beta), std::move(blocks),
                       mass_tol);
}

std::vector<double> repeat(std::span<const double> v, std::size_t n) {
  std::vector<double> out;
  out.reserve(v.size() * n);
  for (std::size_t k = 0; k < n; ++k) out.insert(out.end(), v.begin(), v.end());
  return out;
}

DenseProblem expand(const CyclicProblem& problem, ExecPolicy policy) {
  const std::size_t n = problem.order();
  Matrix cost;
  kernels::expand_blocks(problem.cost_blocks(), cost, policy);
  // The reduced marginals sum to 1/n only up to rounding; allow the n-fold
  // accumulation of that slack.
  const double tol = kMassTolerance * static_cast<double>(n);
  return DenseProblem(ProbabilityVector(repeat(problem.alpha(), n), tol),
                      ProbabilityVector(repeat(problem.beta(), n), tol),
                      std::move(cost));
}

Matrix expand_plan(std::span<const Matrix> blocks, ExecPolicy policy) {
  if (blocks.empty()) throw InvalidInput("expand_plan: no blocks");
  for (const Matrix& b : blocks) {
    if (!b.same_shape(blocks.front()) || !b.square()) {
      throw InvalidInput("expand_plan: blocks must share a square shape");
    }
  }
  Matrix out;
  kernels::expand_blocks(blocks, out, policy);
  return out;
}

Matrix symmetrize(const Matrix& t, std::size_t n, ExecPolicy policy) {
  if (!t.square()) throw InvalidInput("symmetrize: plan must be square");
  require_divides(n, t.rows(), "symmetrize");
  Matrix out;
  kernels::symmetrize(t, n, out, policy);
  return out;
}

double objective(const Matrix& cost, const Matrix& plan) {
  if (!cost.same_shape(plan)) throw InvalidInput("objective: shape mismatch");
  const double* c = cost.data();
  const double* t = plan.data();
  double acc = 0.0;
  for (std::size_t e = 0; e < cost.size(); ++e) acc += c[e] * t[e];
  return acc;
}

double block_objective(const CyclicProblem& problem,
                       std::span<const Matrix> blocks) {
  if (blocks.size() != problem.order()) {
    throw InvalidInput("block_objective: block count differs from order");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    acc += objective(problem.block(k), blocks[k]);
  }
  return acc;
}

double marginal_error(const Matrix& plan, std::span<const double> b) {
  if (plan.cols() != b.size()) {
    throw InvalidInput("marginal_error: shape mismatch");
  }
  std::vector<double> col(plan.cols(), 0.0);
  for (std::size_t i = 0; i < plan.rows(); ++i) {
    const auto row = plan.row(i);
    for (std::size_t j = 0; j < plan.cols(); ++j) col[j] += row[j];
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < col.size(); ++j) {
    acc += (col[j] - b[j]) * (col[j] - b[j]);
  }
  return std::sqrt(acc);
}

double row_marginal_error(const Matrix& plan, std::span<const double> a) {
  if (plan.rows() != a.size()) {
    throw InvalidInput("row_marginal_error: shape mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < plan.rows(); ++i) {
    const double r = sum(plan.row(i)) - a[i];
    acc += r * r;
  }
  return std::sqrt(acc);
}

MarginalErrors block_marginal_errors(const CyclicProblem& problem,
                                     std::span<const Matrix> blocks) {
  const std::size_t m = problem.block_size();
  if (blocks.size() != problem.order()) {
    throw InvalidInput("block_marginal_errors: block count differs from order");
  }
  std::vector<double> rows(m, 0.0);
  std::vector<double> cols(m, 0.0);
  for (const Matrix& t : blocks) {
    if (t.rows() != m || t.cols() != m) {
      throw InvalidInput("block_marginal_errors: shape mismatch");
    }
    for (std::size_t i = 0; i < m; ++i) {
      const auto row = t.row(i);
      for (std::size_t j = 0; j < m; ++j) {
        rows[i] += row[j];
        cols[j] += row[j];
      }
    }
  }
  double col_sq = 0.0;
  double row_sq = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    row_sq += (rows[i] - problem.alpha()[i]) * (rows[i] - problem.alpha()[i]);
    col_sq += (cols[i] - problem.beta()[i]) * (cols[i] - problem.beta()[i]);
  }
  // Every block row of the expanded plan carries the same residual.
  const double n = static_cast<double>(problem.order());
  return {std::sqrt(n * col_sq), std::sqrt(n * row_sq)};
}

std::vector<double> fold_average(std::span<const double> v, std::size_t n) {
  require_divides(n, v.size(), "fold_average");
  const std::size_t m = v.size() / n;
  if (n == 1) return {v.begin(), v.end()};
  std::vector<double> out(m, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < m; ++i) out[i] += v[i + m * k];
  }
  for (double& x : out) x /= static_cast<double>(n);
  return out;
}

CyclicProblem refold(const CyclicProblem& problem, std::size_t new_order) {
  const std::size_t big_n = problem.order();
  const std::size_t m = problem.block_size();
  if (new_order == 0 || big_n % new_order != 0) {
    throw InvalidInput("refold: new order must divide the current order");
  }
  if (new_order == big_n) return problem;
  const std::size_t new_m = problem.dim() / new_order;
  std::vector<double> alpha(new_m);
  std::vector<double> beta(new_m);
  for (std::size_t i = 0; i < new_m; ++i) {
    alpha[i] = problem.alpha()[i % m];
    beta[i] = problem.beta()[i % m];
  }
  std::vector<Matrix> blocks(new_order, Matrix(new_m, new_m));
  for (std::size_t k = 0; k < new_order; ++k) {
    for (std::size_t i = 0; i < new_m; ++i) {
      const std::size_t r = i / m;
      for (std::size_t j = 0; j < new_m; ++j) {
        const std::size_t col = k * new_m + j;
        const std::size_t s = col / m;
        blocks[k](i, j) = problem.block((s + big_n - r) % big_n)(i % m, col % m);
      }
    }
  }
  const double mass_tol = kMassTolerance * static_cast<double>(big_n);
  return CyclicProblem(std::move(alpha), std::move(beta), std::move(blocks),
                       mass_tol);
}

std::vector<std::size_t> divisors(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t k = 1; k <= n; ++k) {
    if (n % k == 0) out.push_back(k);
  }
  return out;
}

}  // namespace cyclic_ot
