// SPDX-License-Identifier: Apache-2.0
//
// Strongly convex regularized OT with cyclic symmetry, solved in the dual.
//
// For a regularizer phi (phi(x) = +inf for x < 0) the reduced primal
//
//   min sum_k <C_k, T_k> + sum_{ijk} phi(T_k(i,j))
//   s.t. sum_k T_k 1 = alpha,  sum_k T_k^T 1 = beta
//
// has the 2m-variable dual
//
//   max <w, alpha> + <z, beta> - sum_{ijk} phi*(w_i + z_j - C_k(i,j))
//
// and the primal is recovered as T_k(i,j) = (phi*)'(w_i + z_j - C_k(i,j)).
// The dual is maximized by alternating exact coordinate solves in w and z.
#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "cyclic_ot/core.hpp"

namespace cyclic_ot {

/// A strongly convex phi described through its Fenchel conjugate.
class Regularizer {
 public:
  using Fn = std::function<double(double)>;

  /// `second_derivative` may be empty; Newton steps then fall back to a
  /// central difference of `conjugate_derivative`.
  Regularizer(std::string tag, Fn primal, Fn conjugate, Fn conjugate_derivative,
              Fn conjugate_second_derivative, double modulus);

  /// phi(x) = lambda x (log x - 1); phi*(y) = lambda exp(y / lambda).
  static Regularizer entropic(double lambda);
  /// phi(x) = x^2 / (2 gamma); phi*(y) = gamma max(y, 0)^2 / 2.
  static Regularizer squared(double gamma);
  /// Parses "entropic:<lambda>" or "squared:<gamma>".
  static Regularizer parse(std::string_view spec);

  double primal(double x) const { return primal_(x); }
  double conjugate(double y) const { return conjugate_(y); }
  double conjugate_derivative(double y) const { return derivative_(y); }
  double conjugate_second_derivative(double y) const;
  double modulus() const noexcept { return modulus_; }
  const std::string& tag() const noexcept { return tag_; }

 private:
  std::string tag_;
  Fn primal_;
  Fn conjugate_;
  Fn derivative_;
  Fn second_;
  double modulus_;
};

struct DualState {
  std::vector<double> w;
  std::vector<double> z;
};

double dual_objective(const DualState& state, const CyclicProblem& problem,
                      const Regularizer& reg);

/// d/dw_i of the dual: alpha_i - sum_{jk} (phi*)'(w_i + z_j - C_k(i,j)).
double partial_w(std::size_t i, const DualState& state,
                 const CyclicProblem& problem, const Regularizer& reg);
/// d/dz_j of the dual: beta_j - sum_{ik} (phi*)'(w_i + z_j - C_k(i,j)).
double partial_z(std::size_t j, const DualState& state,
                 const CyclicProblem& problem, const Regularizer& reg);

/// Root of the (monotone decreasing) partial derivative in w_i, by
/// safeguarded Newton inside an expanding bracket. Throws NumericalError if
/// no sign change is found.
double coordinate_solve_w(std::size_t i, const DualState& state,
                          const CyclicProblem& problem, const Regularizer& reg,
                          double tol);
double coordinate_solve_z(std::size_t j, const DualState& state,
                          const CyclicProblem& problem, const Regularizer& reg,
                          double tol);

std::vector<Matrix> primal_from_dual(const DualState& state,
                                     const CyclicProblem& problem,
                                     const Regularizer& reg);

/// sum_k <C_k, T_k> + sum phi(T): the reduced regularized objective.
double regularized_objective(const CyclicProblem& problem,
                             std::span<const Matrix> blocks,
                             const Regularizer& reg);

struct AlternatingOptions {
  double tol = 1e-9;          // on the reconstructed plan's marginal error
  long max_sweeps = 10000;
  double coordinate_tol = 0;  // 0 selects 1e-3 * tol
  bool record_history = false;
};

struct AlternatingResult {
  DualState state;
  TransportPlan plan;  // block form, reconstructed from `state`
  SolveReport report;
  std::vector<double> dual_history;  // dual objective after each half sweep
};

AlternatingResult alternating_minimize(const CyclicProblem& problem,
                                       const Regularizer& reg,
                                       const AlternatingOptions& options = {});

}  // namespace cyclic_ot
