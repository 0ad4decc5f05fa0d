// SPDX-License-Identifier: Apache-2.0
#include "cyclic_ot/srot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "cyclic_ot/timer.hpp"

namespace cyclic_ot {

Regularizer::Regularizer(std::string tag, Fn primal, Fn conjugate,
                         Fn conjugate_derivative,
                         Fn conjugate_second_derivative, double modulus)
    : tag_(std::move(tag)),
      primal_(std::move(primal)),
      conjugate_(std::move(conjugate)),
      derivative_(std::move(conjugate_derivative)),
      second_(std::move(conjugate_second_derivative)),
      modulus_(modulus) {
  if (!primal_ || !conjugate_ || !derivative_) {
    throw InvalidInput("Regularizer: primal, conjugate and derivative required");
  }
  if (!(modulus_ > 0.0)) {
    throw InvalidInput("Regularizer: modulus must be positive");
  }
}

double Regularizer::conjugate_second_derivative(double y) const {
  if (second_) return second_(y);
  const double h = 1e-6 * std::max(1.0, std::abs(y));
  return (derivative_(y + h) - derivative_(y - h)) / (2.0 * h);
}

Regularizer Regularizer::entropic(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidInput("entropic regularizer: lambda must be positive");
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::ostringstream tag;
  tag.precision(17);
  tag << "entropic:" << lambda;
  return Regularizer(
      tag.str(),
      [lambda, inf](double x) {
        if (x < 0.0) return inf;
        if (x == 0.0) return 0.0;
        return lambda * x * (std::log(x) - 1.0);
      },
      [lambda](double y) { return lambda * std::exp(y / lambda); },
      [lambda](double y) { return std::exp(y / lambda); },
      [lambda](double y) { return std::exp(y / lambda) / lambda; }, lambda);
}

Regularizer Regularizer::squared(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw InvalidInput("squared regularizer: gamma must be positive");
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::ostringstream tag;
  tag.precision(17);
  tag << "squared:" << gamma;
  return Regularizer(
      tag.str(),
      [gamma, inf](double x) { return x < 0.0 ? inf : x * x / (2.0 * gamma); },
      [gamma](double y) {
        const double p = std::max(y, 0.0);
        return 0.5 * gamma * p * p;
      },
      [gamma](double y) { return gamma * std::max(y, 0.0); },
      [gamma](double y) { return y > 0.0 ? gamma : 0.0; }, 1.0 / gamma);
}

Regularizer Regularizer::parse(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw InvalidInput("regularizer spec must look like 'entropic:0.5'");
  }
  const std::string_view name = spec.substr(0, colon);
  const std::string text(spec.substr(colon + 1));
  double value = 0.0;
  std::size_t used = 0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw InvalidInput("regularizer parameter is not a number: " + text);
  }
  if (name == "entropic") return entropic(value);
  if (name == "squared") return squared(value);
  throw InvalidInput("unknown regularizer: " + std::string(name));
}

namespace {

void check_state(const DualState& state, const CyclicProblem& problem) {
  if (state.w.size() != problem.block_size() ||
      state.z.size() != problem.block_size()) {
    throw InvalidInput("dual state size does not match the block size");
  }
}

// Offsets z_j - C_k(i,j) over (k, j) for a fixed row i.
void row_offsets(std::size_t i, const DualState& s, const CyclicProblem& p,
                 std::vector<double>& out) {
  const std::size_t m = p.block_size();
  out.resize(p.order() * m);
  for (std::size_t k = 0; k < p.order(); ++k) {
    const auto row = p.block(k).row(i);
    for (std::size_t j = 0; j < m; ++j) out[k * m + j] = s.z[j] - row[j];
  }
}

// Offsets w_i - C_k(i,j) over (k, i) for a fixed column j.
void column_offsets(std::size_t j, const DualState& s, const CyclicProblem& p,
                    std::vector<double>& out) {
  const std::size_t m = p.block_size();
  out.resize(p.order() * m);
  for (std::size_t k = 0; k < p.order(); ++k) {
    const Matrix& c = p.block(k);
    for (std::size_t i = 0; i < m; ++i) out[k * m + i] = s.w[i] - c(i, j);
  }
}

// Solves target = sum_t g(x + offsets[t]) for x, where g = (phi*)' is
// non-decreasing. f(x) = target - sum g(...) is therefore non-increasing.
double solve_coordinate(double target, const std::vector<double>& offsets,
                        const Regularizer& reg, double x0, double tol) {
  auto f = [&](double x) {
    double s = 0.0;
    for (double o : offsets) s += reg.conjugate_derivative(x + o);
    return target - s;
  };
  auto df = [&](double x) {
    double s = 0.0;
    for (double o : offsets) s += reg.conjugate_second_derivative(x + o);
    return -s;
  };

  double fx = f(x0);
  if (!std::isfinite(fx)) throw NumericalError("coordinate solve: non-finite residual");
  if (std::abs(fx) <= tol) return x0;

  // Bracket [lo, hi] with f(lo) > 0 > f(hi), widening by doubling.
  double lo = x0;
  double hi = x0;
  double step = 1.0;
  const bool root_above = fx > 0.0;
  for (int expand = 0;; ++expand) {
    if (expand > 2000) throw NumericalError("coordinate solve: no sign change");
    const double probe = root_above ? x0 + step : x0 - step;
    const double fp = f(probe);
    if (!std::isfinite(fp)) {
      throw NumericalError("coordinate solve: overflow while bracketing");
    }
    if (std::abs(fp) <= tol) return probe;
    if (root_above) {
      if (fp < 0.0) {
        hi = probe;
        break;
      }
      lo = probe;
    } else {
      if (fp > 0.0) {
        lo = probe;
        break;
      }
      hi = probe;
    }
    step *= 2.0;
  }

  // Newton with bisection fallback whenever the step leaves the bracket or
  // fails to halve the residual.
  double x = root_above ? lo : hi;
  fx = f(x);
  double best = x;
  double best_f = std::abs(fx);
  double dx_old = hi - lo;
  double dx = dx_old;
  for (int iter = 0; iter < 100; ++iter) {
    const double d = df(x);
    const bool outside = ((x - hi) * d - fx) * ((x - lo) * d - fx) > 0.0;
    const bool slow = std::abs(2.0 * fx) > std::abs(dx_old * d);
    dx_old = dx;
    if (d == 0.0 || outside || slow) {
      dx = 0.5 * (hi - lo);
      x = lo + dx;
    } else {
      dx = fx / d;
      x -= dx;
    }
    fx = f(x);
    if (std::abs(fx) < best_f) {
      best = x;
      best_f = std::abs(fx);
    }
    if (best_f <= tol) break;
    if (fx > 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() *
                       std::max(1.0, std::abs(x))) {
      break;
    }
  }
  // One polishing Newton step; near the root it squares the residual.
  const double d = df(best);
  if (d != 0.0) {
    const double x1 = best - f(best) / d;
    if (std::abs(f(x1)) < best_f) return x1;
  }
  return best;
}

double coordinate_tol(const AlternatingOptions& options) {
  const double t = options.coordinate_tol > 0.0 ? options.coordinate_tol
                                                : 1e-3 * options.tol;
  return std::max(t, 1e-17);
}

}  // namespace

double dual_objective(const DualState& state, const CyclicProblem& problem,
                      const Regularizer& reg) {
  check_state(state, problem);
  const std::size_t m = problem.block_size();
  double value = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    value += state.w[i] * problem.alpha()[i] + state.z[i] * problem.beta()[i];
  }
  double penalty = 0.0;
  for (std::size_t k = 0; k < problem.order(); ++k) {
    const Matrix& c = problem.block(k);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        penalty += reg.conjugate(state.w[i] + state.z[j] - c(i, j));
      }
    }
  }
  const double out = value - penalty;
  if (!std::isfinite(out)) throw NumericalError("dual objective is not finite");
  return out;
}

double partial_w(std::size_t i, const DualState& state,
                 const CyclicProblem& problem, const Regularizer& reg) {
  check_state(state, problem);
  std::vector<double> offsets;
  row_offsets(i, state, problem, offsets);
  double s = 0.0;
  for (double o : offsets) s += reg.conjugate_derivative(state.w[i] + o);
  return problem.alpha()[i] - s;
}

double partial_z(std::size_t j, const DualState& state,
                 const CyclicProblem& problem, const Regularizer& reg) {
  check_state(state, problem);
  std::vector<double> offsets;
  column_offsets(j, state, problem, offsets);
  double s = 0.0;
  for (double o : offsets) s += reg.conjugate_derivative(state.z[j] + o);
  return problem.beta()[j] - s;
}

double coordinate_solve_w(std::size_t i, const DualState& state,
                          const CyclicProblem& problem, const Regularizer& reg,
                          double tol) {
  check_state(state, problem);
  std::vector<double> offsets;
  row_offsets(i, state, problem, offsets);
  return solve_coordinate(problem.alpha()[i], offsets, reg, state.w[i], tol);
}

double coordinate_solve_z(std::size_t j, const DualState& state,
                          const CyclicProblem& problem, const Regularizer& reg,
                          double tol) {
  check_state(state, problem);
  std::vector<double> offsets;
  column_offsets(j, state, problem, offsets);
  return solve_coordinate(problem.beta()[j], offsets, reg, state.z[j], tol);
}

std::vector<Matrix> primal_from_dual(const DualState& state,
                                     const CyclicProblem& problem,
                                     const Regularizer& reg) {
  check_state(state, problem);
  const std::size_t m = problem.block_size();
  std::vector<Matrix> blocks(problem.order(), Matrix(m, m));
  for (std::size_t k = 0; k < problem.order(); ++k) {
    const Matrix& c = problem.block(k);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        blocks[k](i, j) =
            reg.conjugate_derivative(state.w[i] + state.z[j] - c(i, j));
      }
    }
  }
  return blocks;
}

double regularized_objective(const CyclicProblem& problem,
                             std::span<const Matrix> blocks,
                             const Regularizer& reg) {
  if (blocks.size() != problem.order()) {
    throw InvalidInput("regularized_objective: block count mismatch");
  }
  double value = block_objective(problem, blocks);
  for (const Matrix& t : blocks) {
    for (double x : t.values()) value += reg.primal(x);
  }
  return value;
}

AlternatingResult alternating_minimize(const CyclicProblem& problem,
                                       const Regularizer& reg,
                                       const AlternatingOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidInput("alternating_minimize: tol <= 0");
  if (options.max_sweeps <= 0) {
    throw InvalidInput("alternating_minimize: max_sweeps <= 0");
  }
  Stopwatch watch;
  const std::size_t m = problem.block_size();
  const double inner = coordinate_tol(options);

  AlternatingResult out;
  DualState& s = out.state;
  s.w.assign(m, 0.0);
  s.z.assign(m, 0.0);
  std::vector<double> offsets;
  std::vector<Matrix> blocks;
  MarginalErrors errors;

  long sweep = 0;
  bool converged = false;
  while (sweep < options.max_sweeps) {
    ++sweep;
    for (std::size_t i = 0; i < m; ++i) {
      row_offsets(i, s, problem, offsets);
      s.w[i] = solve_coordinate(problem.alpha()[i], offsets, reg, s.w[i], inner);
    }
    if (options.record_history) {
      out.dual_history.push_back(dual_objective(s, problem, reg));
    }
    blocks = primal_from_dual(s, problem, reg);
    errors = block_marginal_errors(problem, blocks);
    if (errors.column <= options.tol) {
      converged = true;
      break;
    }
    for (std::size_t j = 0; j < m; ++j) {
      column_offsets(j, s, problem, offsets);
      s.z[j] = solve_coordinate(problem.beta()[j], offsets, reg, s.z[j], inner);
    }
    if (options.record_history) {
      out.dual_history.push_back(dual_objective(s, problem, reg));
    }
  }
  if (!converged) {
    // The loop ended after a z half sweep; report the state actually returned.
    blocks = primal_from_dual(s, problem, reg);
    errors = block_marginal_errors(problem, blocks);
  }
  out.report.wall_time = watch.seconds();

  out.report.algorithm = "srot-dual";
  out.report.iterations = sweep;
  out.report.converged = converged;
  out.report.marginal_error = errors.column;
  out.report.row_marginal_error = errors.row;
  const double n = static_cast<double>(problem.order());
  out.report.objective = n * block_objective(problem, blocks);
  out.report.extras["regularized_objective"] =
      regularized_objective(problem, blocks, reg);
  out.report.extras["dual_objective"] = dual_objective(s, problem, reg);
  out.plan = TransportPlan::from_blocks(std::move(blocks));
  return out;
}

}  // namespace cyclic_ot
