// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: one PASS/FAIL line per criterion, each at its stated
// tolerance. Exit status is the number of failed criteria.
//
//   acceptance                     all criteria, timing thresholds included
//   acceptance --only 2,5          a subset
//   acceptance --mode correctness  timing figures reported, not asserted
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "cyclic_ot/clot.hpp"
#include "cyclic_ot/core.hpp"
#include "cyclic_ot/datagen.hpp"
#include "cyclic_ot/lot.hpp"
#include "cyclic_ot/sinkhorn.hpp"
#include "cyclic_ot/srot.hpp"
#include "cyclic_ot/timer.hpp"
#include "../support.hpp"

using namespace cyclic_ot;
using cyclic_ot::testing::max_abs_diff;
using cyclic_ot::testing::random_cyclic;
using cyclic_ot::testing::rel_diff;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  bool skipped = false;
};

// Wall-clock thresholds are machine dependent; the ctest registration runs
// with this off and leaves them to the benchmark mode.
bool g_timing = true;

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

SinkhornOptions serial_sinkhorn(double lambda, double tol) {
  SinkhornOptions o;
  o.lambda = lambda;
  o.tol = tol;
  o.policy = ExecPolicy::kSerial;
  return o;
}

// clot on random strictly symmetric instances against successive shortest
// paths on the expanded dense problem.
Outcome criterion1() {
  Stopwatch watch;
  std::mt19937_64 gen(20240601);
  std::uniform_int_distribution<std::size_t> pick_m(2, 8);
  std::uniform_int_distribution<std::size_t> pick_n(2, 4);
  double worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const CyclicProblem p = random_cyclic(gen, pick_m(gen), pick_n(gen));
    const DenseProblem d = expand(p);
    const double brute =
        solve_lot_oracle(d.a().entries(), d.b().entries(), d.cost()).value;
    worst = std::max(worst, std::abs(solve_clot(p).report.objective - brute));
  }
  const double secs = watch.seconds();
  return {worst <= 1e-9 && secs < 60.0,
          fmt("200 instances, max |clot - oracle| = %.3e (<= 1e-9), %.2f s (< 60 s)",
              worst, secs)};
}

// Shared by criteria 2 and 3: the d = 2000, n = 50 suite, timed serially.
struct TableRun {
  double lot_clot_rel = 0.0;
  double sinkhorn_rel = 0.0;
  double exact_marginal = 0.0;
  double sinkhorn_marginal = 0.0;
  int unconverged = 0;
  std::vector<double> t_lot, t_clot50, t_sink, t_csink50;
};

const TableRun& table_run() {
  static const TableRun run = [] {
    TableRun r;
    const std::vector<std::size_t> orders{2, 5, 10, 25, 50};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const CyclicProblem p = gen_synthetic(40, 50, seed);
      const DenseProblem d = expand(p);

      const LotSolution lot = solve_lot(d.a().entries(), d.b().entries(), d.cost());
      r.t_lot.push_back(lot.report.wall_time);
      r.exact_marginal = std::max(r.exact_marginal, lot.report.marginal_error);
      for (std::size_t n : orders) {
        const CyclicProblem q = refold(p, n);
        const CyclicSolution c = solve_clot(q, ExecPolicy::kSerial);
        r.lot_clot_rel = std::max(r.lot_clot_rel, rel_diff(c.report.objective, lot.value));
        r.exact_marginal = std::max(r.exact_marginal, c.report.marginal_error);
        if (n == 50) r.t_clot50.push_back(c.report.wall_time);
      }

      const SinkhornOptions so = serial_sinkhorn(0.5, 1e-9);
      const SinkhornSolution s = sinkhorn(d, so);
      r.t_sink.push_back(s.report.wall_time);
      r.unconverged += !s.report.converged;
      r.sinkhorn_marginal = std::max(r.sinkhorn_marginal, s.report.marginal_error);
      for (std::size_t n : orders) {
        const SinkhornSolution c = cyclic_sinkhorn(refold(p, n), so);
        r.unconverged += !c.report.converged;
        r.sinkhorn_rel = std::max(r.sinkhorn_rel, rel_diff(c.report.objective, s.report.objective));
        r.sinkhorn_marginal = std::max(r.sinkhorn_marginal, c.report.marginal_error);
        if (n == 50) r.t_csink50.push_back(c.report.wall_time);
      }
    }
    return r;
  }();
  return run;
}

Outcome criterion2() {
  const TableRun& r = table_run();
  const bool ok = r.lot_clot_rel <= 1e-6 && r.sinkhorn_rel <= 1e-5 &&
                  r.exact_marginal <= 1e-10 && r.unconverged == 0;
  return {ok, fmt("20 seeds, d=2000: LOT vs clot(n=2..50) max rel %.2e (<= 1e-6); "
                  "Sinkhorn vs cyclic max rel %.2e (<= 1e-5); exact marginal error "
                  "max %.2e (<= 1e-10); Sinkhorn marginal max %.2e, unconverged %d",
                  r.lot_clot_rel, r.sinkhorn_rel, r.exact_marginal,
                  r.sinkhorn_marginal, r.unconverged)};
}

Outcome criterion3() {
  const TableRun& r = table_run();
  const double lot_ratio = mean(r.t_clot50) / mean(r.t_lot);
  const double sink_ratio = mean(r.t_csink50) / mean(r.t_sink);
  if (!g_timing) {
    return {true, fmt("timing thresholds need benchmark mode; measured ratios %.2e, %.2e",
                      lot_ratio, sink_ratio), true};
  }
  return {lot_ratio <= 0.2 && sink_ratio <= 0.2,
          fmt("mean times: LOT %.4f s, clot(50) %.2e s, ratio %.2e (<= 0.2); "
              "Sinkhorn %.4f s, cyclic(50) %.2e s, ratio %.2e (<= 0.2)",
              mean(r.t_lot), mean(r.t_clot50), lot_ratio, mean(r.t_sink),
              mean(r.t_csink50), sink_ratio)};
}

// Per-iteration cost of cyclic Sinkhorn at m and 2m with n fixed. The
// tolerance is unreachable so every run performs exactly `iters` sweeps.
Outcome criterion4() {
  const std::size_t n = 4;
  const long iters = 400;
  auto per_iteration = [&](std::size_t m) {
    const CyclicProblem p = gen_synthetic(m, n, 7);
    SinkhornOptions so = serial_sinkhorn(0.5, 1e-300);
    so.max_iters = iters;
    double best = 1e300;
    for (int rep = 0; rep < 5; ++rep) {
      const SinkhornSolution s = cyclic_sinkhorn(p, so);
      best = std::min(best, s.report.phases.at("iterate") /
                                static_cast<double>(s.report.iterations));
    }
    return best;
  };
  if (!g_timing) return {true, "timing threshold needs benchmark mode", true};
  const double t256 = per_iteration(256);
  const double t512 = per_iteration(512);
  const double ratio = t512 / t256;
  return {ratio >= 3.0 && ratio <= 6.0,
          fmt("n=%zu, per-iteration %.3e s (m=256), %.3e s (m=512), ratio %.2f (in [3, 6])",
              n, t256, t512, ratio)};
}

// Two-stage against cold start on approximately mirror-symmetric image pairs.
Outcome criterion5() {
  const int count = 20;
  const SinkhornOptions so = serial_sinkhorn(0.5, 1e-9);
  TwoStageOptions to;
  to.sinkhorn = so;
  to.order = 2;
  double worst_rel = 0.0;
  double worst_marg = 0.0;
  int faster = 0;
  double t_cold = 0.0;
  double t_two = 0.0;
  long it_cold = 0;
  long it_two = 0;
  for (int seed = 0; seed < count; ++seed) {
    const DenseProblem d =
        gen_image_pair(32, 32, Symmetry::kMirror, GridMetric::kEuclidean, seed, 0.01);
    double best_cold = 1e300;
    double best_two = 1e300;
    SinkhornSolution cold, two;
    for (int rep = 0; rep < 3; ++rep) {
      cold = sinkhorn(d, so);
      two = two_stage_sinkhorn(d, to);
      best_cold = std::min(best_cold, cold.report.wall_time);
      best_two = std::min(best_two, two.report.wall_time);
    }
    worst_rel = std::max(worst_rel, rel_diff(two.report.objective, cold.report.objective));
    worst_marg = std::max(worst_marg, two.report.marginal_error);
    faster += best_two < best_cold;
    t_cold += best_cold;
    t_two += best_two;
    it_cold += cold.report.iterations;
    it_two += static_cast<long>(two.report.extras.at("stage2_iterations"));
  }
  const double share = static_cast<double>(faster) / count;
  return {worst_rel <= 1e-6 && worst_marg <= 1e-8 && (share >= 0.6 || !g_timing),
          fmt("%d instances 32x32 mirror, 1%% noise: objective max rel %.2e (<= 1e-6); "
              "marginal max %.2e (<= 1e-8); two-stage faster on %d/%d (>= 60%%%s); "
              "total %.3f s vs cold %.3f s; mean iterations stage2 %.1f vs cold %.1f",
              count, worst_rel, worst_marg, faster, count,
              g_timing ? "" : ", not asserted", t_two,
              t_cold, static_cast<double>(it_two) / count,
              static_cast<double>(it_cold) / count)};
}

Outcome criterion6() {
  double min_gap_ratio = 1e300;
  double worst_oracle = 0.0;
  for (double scale : {0.25, 0.5, 1.0, 2.0, 10.0}) {
    const CyclicProblem p = gen_counter_example(scale);
    const double clot = solve_clot(p).report.objective;
    const double naive = solve_first_block_only(p).report.objective;
    const DenseProblem d = expand(p);
    const double brute = solve_lot_oracle(d.a().entries(), d.b().entries(), d.cost()).value;
    worst_oracle = std::max(worst_oracle, std::abs(clot - brute));
    min_gap_ratio = std::min(min_gap_ratio, (naive - clot) / scale);
  }
  bool wider_strict = true;
  for (std::size_t m : {2u, 4u, 8u}) {
    const CyclicProblem p = gen_counter_example(1.0, m);
    wider_strict = wider_strict && solve_first_block_only(p).report.objective >
                                       solve_clot(p).report.objective;
  }
  return {min_gap_ratio >= 0.5 && worst_oracle <= 1e-12 && wider_strict,
          fmt("m=1 family: min (naive - clot) / scale = %.3f (>= 0.5); clot vs oracle "
              "max %.1e; m in {2,4,8} strictly worse: %s",
              min_gap_ratio, worst_oracle, wider_strict ? "yes" : "no")};
}

Outcome criterion7() {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  // (a) gradients against central differences.
  const double h = 1e-5;
  double worst_fd = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const Regularizer reg =
        rep % 2 == 0 ? Regularizer::entropic(0.5) : Regularizer::squared(1.0);
    const std::size_t m = 2 + rep % 5;
    const CyclicProblem p = random_cyclic(gen, m, 1 + rep % 4, 2.0);
    DualState s{std::vector<double>(m), std::vector<double>(m)};
    for (double& x : s.w) x = u(gen);
    for (double& x : s.z) x = u(gen);
    for (std::size_t i = 0; i < m; ++i) {
      for (int which = 0; which < 2; ++which) {
        DualState plus = s, minus = s;
        (which == 0 ? plus.w : plus.z)[i] += h;
        (which == 0 ? minus.w : minus.z)[i] -= h;
        const double fd =
            (dual_objective(plus, p, reg) - dual_objective(minus, p, reg)) / (2 * h);
        const double exact = which == 0 ? partial_w(i, s, p, reg) : partial_z(i, s, p, reg);
        worst_fd = std::max(worst_fd, rel_diff(exact, fd));
      }
    }
  }

  // (b) agreement with cyclic Sinkhorn; (c) monotone dual; (d) duality gap.
  double worst_plan = 0.0;
  double worst_drop = 0.0;
  double worst_gap = 0.0;
  int unconverged = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t m = 2 + rep % 7;
    const CyclicProblem p = random_cyclic(gen, m, 1 + rep % 4, 3.0);
    const double lambda = 0.3 + 0.05 * rep;
    AlternatingOptions ao;
    ao.tol = 1e-13;
    ao.record_history = true;
    const AlternatingResult a = alternating_minimize(p, Regularizer::entropic(lambda), ao);
    SinkhornSolution s = cyclic_sinkhorn(p, serial_sinkhorn(lambda, 1e-13));
    unconverged += !a.report.converged + !s.report.converged;
    for (std::size_t k = 0; k < p.order(); ++k) {
      worst_plan = std::max(worst_plan, max_abs_diff(a.plan.blocks()[k], s.plan.blocks()[k]));
    }
    for (std::size_t t = 1; t < a.dual_history.size(); ++t) {
      worst_drop = std::max(worst_drop, a.dual_history[t - 1] - a.dual_history[t]);
    }
    worst_gap = std::max(worst_gap, std::abs(a.report.extras.at("regularized_objective") -
                                             a.report.extras.at("dual_objective")));
  }
  const bool ok = worst_fd <= 1e-6 && worst_plan <= 1e-8 && worst_drop <= 1e-12 &&
                  worst_gap <= 1e-6 && unconverged == 0;
  return {ok, fmt("(a) 100 states, max rel FD error %.2e (<= 1e-6); (b) max plan diff "
                  "%.2e (<= 1e-8); (c) max dual decrease %.2e (<= 1e-12); (d) max gap "
                  "%.2e (<= 1e-6); unconverged %d",
                  worst_fd, worst_plan, worst_drop, worst_gap, unconverged)};
}

Outcome criterion8() {
  std::mt19937_64 gen(88);
  // symmetrize: idempotent, preserves the linear objective, lowers convex terms.
  double idem = 0.0;
  double lin = 0.0;
  bool convex_ok = true;
  const Regularizer ent = Regularizer::entropic(0.5);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 2 + rep % 4;
    const std::size_t m = 1 + rep % 6;
    const CyclicProblem p = random_cyclic(gen, m, n);
    const DenseProblem d = expand(p);
    const std::size_t dim = n * m;
    Matrix t(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) t(i, j) = d.a()[i] * d.b()[j];
    }
    // Zero-marginal perturbation on a random 2x2 minor.
    std::uniform_int_distribution<std::size_t> pick(0, dim - 1);
    const std::size_t i0 = pick(gen), i1 = pick(gen), j0 = pick(gen), j1 = pick(gen);
    if (i0 != i1 && j0 != j1) {
      const double eps = 0.9 * std::min(t(i0, j1), t(i1, j0));
      t(i0, j0) += eps;
      t(i1, j1) += eps;
      t(i0, j1) -= eps;
      t(i1, j0) -= eps;
    }
    const Matrix s = symmetrize(t, n);
    idem = std::max(idem, max_abs_diff(symmetrize(s, n), s));
    lin = std::max(lin, std::abs(objective(d.cost(), s) - objective(d.cost(), t)));
    double phi_t = 0.0, phi_s = 0.0;
    for (std::size_t q = 0; q < t.size(); ++q) {
      phi_t += ent.primal(t.values()[q]);
      phi_s += ent.primal(s.values()[q]);
    }
    convex_ok = convex_ok && phi_s <= phi_t + 1e-14;
  }

  // expand / validate / fold round trips.
  bool trips = true;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 1 + rep % 5;
    const CyclicProblem p = random_cyclic(gen, 1 + rep % 7, n);
    const DenseProblem d = expand(p);
    const ValidationResult v = validate_cyclic(d, n, 0.0);
    trips = trips && std::holds_alternative<CyclicProblem>(v) &&
            expand(std::get<CyclicProblem>(v)).cost() == d.cost();
    const std::vector<double> back = fold_average(d.a().entries(), n);
    for (std::size_t i = 0; i < back.size(); ++i) {
      trips = trips && std::abs(back[i] - p.alpha()[i]) <= 1e-16;
    }
  }

  // grid costs are block-circulant under both orderings.
  int grids = 0;
  int grid_fail = 0;
  auto check_grid = [&](const Matrix& c, std::size_t n) {
    ++grids;
    const std::vector<double> uni(c.rows(), 1.0 / c.rows());
    const DenseProblem d{ProbabilityVector(uni), ProbabilityVector(uni), c};
    grid_fail += !std::holds_alternative<CyclicProblem>(validate_cyclic(d, n, 1e-12));
  };
  for (GridMetric metric : {GridMetric::kManhattan, GridMetric::kEuclidean, GridMetric::kChebyshev}) {
    for (std::size_t h = 1; h <= 6; ++h) {
      for (std::size_t w = 2; w <= 6; w += 2) {
        check_grid(grid_cost(h, w, metric, PixelOrdering::mirror(h, w)), 2);
      }
    }
    for (std::size_t s = 2; s <= 6; s += 2) {
      check_grid(grid_cost(s, s, metric, PixelOrdering::rotation(s, s)), 4);
    }
  }

  // cyclic kernel equals block-row sums of the dense kernel.
  double kernel_diff = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 1 + rep % 5;
    const std::size_t m = 2 + rep;
    const CyclicProblem p = random_cyclic(gen, m, n, 5.0);
    const double lambda = 0.2 + 0.3 * rep;
    const Matrix kc = build_cyclic_kernel(p, lambda).k;
    const Matrix kd = build_gibbs_kernel(expand(p).cost(), lambda).k;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t b = 0; b < n; ++b) s += kd(i, j + m * b);
        kernel_diff = std::max(kernel_diff, std::abs(kc(i, j) - s));
      }
    }
  }

  const bool ok = idem <= 1e-14 && lin <= 1e-12 && convex_ok && trips &&
                  grid_fail == 0 && kernel_diff <= 1e-14;
  return {ok, fmt("symmetrize idempotence %.1e (<= 1e-14), linear objective change %.1e, "
                  "convex terms non-increasing: %s; round trips: %s; grid costs %d/%d "
                  "block-circulant; kernel block-row sums max diff %.1e (<= 1e-14)",
                  idem, lin, convex_ok ? "yes" : "no", trips ? "ok" : "FAILED",
                  grids - grid_fail, grids, kernel_diff)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',');
  std::string mode = "benchmark";
  app.add_option("--mode", mode, "benchmark | correctness")
      ->check(CLI::IsMember({"benchmark", "correctness"}));
  CLI11_PARSE(app, argc, argv);
  g_timing = mode == "benchmark";

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"oracle equivalence of the cyclic exact solver", criterion1},
      {"objective equality at d=2000, n up to 50", criterion2},
      {"speedup at d=2000, n=50", criterion3},
      {"per-iteration cost scales quadratically in m", criterion4},
      {"two-stage Sinkhorn on approximately symmetric images", criterion5},
      {"first-block shortcut counter-example", criterion6},
      {"dual machinery properties", criterion7},
      {"structural invariants", criterion8},
  };
  const std::set<int> wanted(only.begin(), only.end());
  int failed = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int id = static_cast<int>(c) + 1;
    if (!wanted.empty() && !wanted.count(id)) continue;
    Stopwatch watch;
    Outcome out;
    try {
      out = criteria[c].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    failed += !out.pass;
    const char* verdict = out.skipped ? "SKIP" : out.pass ? "PASS" : "FAIL";
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", verdict, id,
                criteria[c].first, out.detail.c_str(), watch.seconds());
    std::fflush(stdout);
  }
  return failed;
}
