// SPDX-License-Identifier: Apache-2.0
//
// Domain types for optimal transport with n-order cyclic symmetry.
//
// A dense problem (a, b, C) of dimension d is cyclically symmetric of order n
// when d = n m, a and b are n concatenated copies of length-m vectors alpha
// and beta, and C is block-circulant with m x m blocks C_0..C_{n-1}:
//
//   C[i + m r][j + m s] = C_{(s - r) mod n}[i][j].
//
// CyclicProblem stores the reduced data (alpha, beta, C_k); DenseProblem the
// full data. Blocks are stored row-major, in order k = 0..n-1.
#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cyclic_ot/kernels.hpp"
#include "cyclic_ot/matrix.hpp"

namespace cyclic_ot {

/// Thrown when an input violates a documented precondition or invariant.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an iterative solver hits a numerical dead end (underflow,
/// vanishing denominators, bracket search exhausted).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kMassTolerance = 1e-12;
inline constexpr double kDefaultSymmetryTolerance = 1e-9;

/// Non-negative vector summing to one.
class ProbabilityVector {
 public:
  ProbabilityVector() = default;
  explicit ProbabilityVector(std::vector<double> entries,
                             double tol = kMassTolerance);

  std::span<const double> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  double operator[](std::size_t i) const noexcept { return entries_[i]; }

 private:
  std::vector<double> entries_;
};

/// Reduced representation of a cyclically symmetric problem.
class CyclicProblem {
 public:
  CyclicProblem() = default;
  /// alpha and beta must each sum to 1/n within `mass_tol`; blocks must be
  /// n square matrices of size m = alpha.size() with non-negative entries.
  CyclicProblem(std::vector<double> alpha, std::vector<double> beta,
                std::vector<Matrix> cost_blocks,
                double mass_tol = kMassTolerance);

  std::span<const double> alpha() const noexcept { return alpha_; }
  std::span<const double> beta() const noexcept { return beta_; }
  std::span<const Matrix> cost_blocks() const noexcept { return blocks_; }
  const Matrix& block(std::size_t k) const { return blocks_.at(k); }
  std::size_t order() const noexcept { return blocks_.size(); }
  std::size_t block_size() const noexcept { return alpha_.size(); }
  std::size_t dim() const noexcept { return order() * block_size(); }

 private:
  std::vector<double> alpha_;
  std::vector<double> beta_;
  std::vector<Matrix> blocks_;
};

class DenseProblem {
 public:
  DenseProblem() = default;
  DenseProblem(ProbabilityVector a, ProbabilityVector b, Matrix cost);

  const ProbabilityVector& a() const noexcept { return a_; }
  const ProbabilityVector& b() const noexcept { return b_; }
  const Matrix& cost() const noexcept { return cost_; }
  std::size_t dim() const noexcept { return a_.size(); }

 private:
  ProbabilityVector a_;
  ProbabilityVector b_;
  Matrix cost_;
};

/// A transport plan held either as circulant blocks T_0..T_{n-1} or densely.
/// Block plans are expanded only on request since that costs O(d^2) memory.
class TransportPlan {
 public:
  TransportPlan() = default;
  static TransportPlan from_blocks(std::vector<Matrix> blocks);
  static TransportPlan from_dense(Matrix dense);

  bool is_blocks() const noexcept { return is_blocks_; }
  std::span<const Matrix> blocks() const;
  const Matrix& dense() const;
  Matrix to_dense() const;
  std::size_t order() const noexcept { return is_blocks_ ? blocks_.size() : 1; }
  std::size_t dim() const noexcept;

 private:
  bool is_blocks_ = false;
  std::vector<Matrix> blocks_;
  Matrix dense_;
};

struct SolveReport {
  std::string algorithm;
  double objective = 0.0;           // full-problem transport cost <C, T>
  double marginal_error = 0.0;      // ||T^T 1 - b||_2
  double row_marginal_error = 0.0;  // ||T 1 - a||_2
  long iterations = 0;
  double wall_time = 0.0;  // seconds
  bool converged = false;
  std::map<std::string, double> phases;  // per-phase seconds
  std::map<std::string, double> extras;  // algorithm-specific scalars
};

/// Location and size of the largest deviation from cyclic symmetry.
struct SymmetryViolation {
  enum class Field { kA, kB, kCost };
  Field field = Field::kCost;
  double magnitude = 0.0;
  std::size_t row = 0;  // dense indices of the offending entry
  std::size_t col = 0;
  std::size_t block_i = 0;  // offset inside the block
  std::size_t block_j = 0;
  std::size_t block_k = 0;  // circulant offset (s - r) mod n
};

using ValidationResult = std::variant<CyclicProblem, SymmetryViolation>;

/// Human-readable one-line description of a violation.
std::string describe(const SymmetryViolation& v);

/// Folds a dense problem into its order-n reduced form when a, b are
/// n-periodic and C is block-circulant within `tol` per entry.
ValidationResult validate_cyclic(const DenseProblem& dense, std::size_t n,
                                 double tol = kDefaultSymmetryTolerance);

DenseProblem expand(const CyclicProblem& problem,
                    ExecPolicy policy = ExecPolicy::kParallel);

Matrix expand_plan(std::span<const Matrix> blocks,
                   ExecPolicy policy = ExecPolicy::kParallel);

/// n concatenated copies of v.
std::vector<double> repeat(std::span<const double> v, std::size_t n);

/// Averages t over conjugation by powers of the block shift. The result is
/// block-circulant; total mass and n-periodic marginals are preserved.
Matrix symmetrize(const Matrix& t, std::size_t n,
                  ExecPolicy policy = ExecPolicy::kParallel);

double objective(const Matrix& cost, const Matrix& plan);
/// sum_k <C_k, T_k>. The dense objective of the expanded plan is n times this.
double block_objective(const CyclicProblem& problem,
                       std::span<const Matrix> blocks);

/// ||T^T 1 - b||_2
double marginal_error(const Matrix& plan, std::span<const double> b);
/// ||T 1 - a||_2
double row_marginal_error(const Matrix& plan, std::span<const double> a);

struct MarginalErrors {
  double column = 0.0;
  double row = 0.0;
};
/// Marginal errors of the expanded plan, computed from the blocks alone.
MarginalErrors block_marginal_errors(const CyclicProblem& problem,
                                     std::span<const Matrix> blocks);

/// alpha_i = (1/n) sum_k v[i + m k]
std::vector<double> fold_average(std::span<const double> v, std::size_t n);

/// Re-expresses an order-N problem at order n for a divisor n of N.
CyclicProblem refold(const CyclicProblem& problem, std::size_t new_order);

/// Divisors of n in increasing order.
std::vector<std::size_t> divisors(std::size_t n);

}  // namespace cyclic_ot
