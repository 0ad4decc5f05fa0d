// SPDX-License-Identifier: Apache-2.0
//
// cyclic-ot: generate problems, solve them, and run benchmark suites.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "cyclic_ot/bench.hpp"
#include "cyclic_ot/clot.hpp"
#include "cyclic_ot/datagen.hpp"
#include "cyclic_ot/io.hpp"
#include "cyclic_ot/lot.hpp"
#include "cyclic_ot/sinkhorn.hpp"
#include "cyclic_ot/srot.hpp"

namespace {

using namespace cyclic_ot;

struct GenArgs {
  std::string kind = "synthetic";
  std::size_t m = 8;
  std::size_t n = 2;
  std::uint64_t seed = 0;
  double scale = 1.0;
  std::size_t h = 16;
  std::size_t w = 16;
  std::string symmetry = "mirror";
  std::string metric = "euclidean";
  double noise = 0.0;
  std::string image_a;
  std::string image_b;
  bool dense = false;
  std::string out = "-";
};

struct SolveArgs {
  std::string algo;
  std::string in;
  std::string out = "-";
  double lambda = 0.5;
  double tol = 1e-9;
  long max_iters = 100000;
  double stage1_tol = 1e-3;
  bool log_domain = false;
  bool deterministic = false;
  std::string reg;
  std::size_t order = 0;
};

struct BenchArgs {
  std::string config;
  std::string out_dir = ".";
};

void emit(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
  } else {
    write_text(path, text);
  }
}

Symmetry parse_symmetry(const std::string& s) {
  if (s == "mirror") return Symmetry::kMirror;
  if (s == "rotation") return Symmetry::kRotation;
  throw InvalidInput("symmetry must be 'mirror' or 'rotation'");
}

int run_gen(const GenArgs& g) {
  if (g.kind == "synthetic" || g.kind == "counter") {
    const CyclicProblem p = g.kind == "synthetic"
                                ? gen_synthetic(g.m, g.n, g.seed)
                                : gen_counter_example(g.scale, g.m);
    emit(g.out, g.dense ? problem_to_json(expand(p), p.order())
                        : problem_to_json(p));
    return 0;
  }
  const Symmetry sym = parse_symmetry(g.symmetry);
  const std::size_t order = sym == Symmetry::kMirror ? 2 : 4;
  if (g.kind == "image-pair") {
    emit(g.out, problem_to_json(gen_image_pair(g.h, g.w, sym,
                                               parse_metric(g.metric), g.seed,
                                               g.noise),
                                order));
    return 0;
  }
  if (g.kind == "images") {
    if (g.image_a.empty() || g.image_b.empty()) {
      throw InvalidInput("--image-a and --image-b are required for kind 'images'");
    }
    const GrayImage a = read_image(g.image_a);
    const GrayImage b = read_image(g.image_b);
    if (a.height() != b.height() || a.width() != b.width()) {
      throw InvalidInput("the two images differ in size");
    }
    const PixelOrdering ord = sym == Symmetry::kMirror
                                  ? PixelOrdering::mirror(a.height(), a.width())
                                  : PixelOrdering::rotation(a.height(), a.width());
    DenseProblem p(image_to_marginal(a, ord), image_to_marginal(b, ord),
                   grid_cost(a.height(), a.width(), parse_metric(g.metric), ord));
    emit(g.out, problem_to_json(p, order));
    return 0;
  }
  throw InvalidInput("unknown kind '" + g.kind +
                     "' (synthetic, counter, image-pair, images)");
}

CyclicProblem as_cyclic(const ProblemFile& f, std::size_t order) {
  const std::size_t n = order == 0 ? f.order : order;
  if (f.cyclic) return n == f.order ? f.reduced : refold(f.reduced, n);
  ValidationResult v = validate_cyclic(f.dense, n);
  if (const auto* bad = std::get_if<SymmetryViolation>(&v)) {
    throw InvalidInput("input is not cyclically symmetric at n = " +
                       std::to_string(n) + ": " + describe(*bad) +
                       " (try 'sinkhorn' or 'two-stage')");
  }
  return std::get<CyclicProblem>(std::move(v));
}

DenseProblem as_dense(const ProblemFile& f) {
  return f.cyclic ? expand(f.reduced) : f.dense;
}

int run_solve(const SolveArgs& s) {
  const ProblemFile f = read_problem(s.in);
  const ExecPolicy policy =
      s.deterministic ? ExecPolicy::kSerial : ExecPolicy::kParallel;
  SinkhornOptions so;
  so.lambda = s.lambda;
  so.tol = s.tol;
  so.max_iters = s.max_iters;
  so.log_domain = s.log_domain;
  so.policy = policy;

  TransportPlan plan;
  SolveReport report;
  if (s.algo == "lot") {
    const DenseProblem d = as_dense(f);
    LotSolution sol = solve_lot(d.a().entries(), d.b().entries(), d.cost());
    plan = TransportPlan::from_dense(std::move(sol.plan));
    report = std::move(sol.report);
  } else if (s.algo == "clot") {
    CyclicSolution sol = solve_clot(as_cyclic(f, s.order), policy);
    plan = std::move(sol.plan);
    report = std::move(sol.report);
  } else if (s.algo == "amin") {
    std::ostringstream reg;
    reg.precision(17);
    reg << "entropic:" << s.lambda;
    AlternatingOptions ao;
    ao.tol = s.tol;
    ao.max_sweeps = s.max_iters;
    AlternatingResult sol = alternating_minimize(
        as_cyclic(f, s.order), Regularizer::parse(s.reg.empty() ? reg.str() : s.reg),
        ao);
    plan = std::move(sol.plan);
    report = std::move(sol.report);
  } else if (s.algo == "sinkhorn") {
    SinkhornSolution sol = sinkhorn(as_dense(f), so);
    plan = std::move(sol.plan);
    report = std::move(sol.report);
  } else if (s.algo == "csinkhorn") {
    SinkhornSolution sol = cyclic_sinkhorn(as_cyclic(f, s.order), so);
    plan = std::move(sol.plan);
    report = std::move(sol.report);
  } else if (s.algo == "two-stage") {
    TwoStageOptions to;
    to.sinkhorn = so;
    to.order = s.order == 0 ? f.order : s.order;
    to.stage1_tol = s.stage1_tol;
    SinkhornSolution sol = two_stage_sinkhorn(as_dense(f), to);
    plan = std::move(sol.plan);
    report = std::move(sol.report);
  } else {
    throw InvalidInput("unknown algorithm '" + s.algo + "'");
  }
  if (s.out != "-") write_text(s.out, plan_to_json(plan, report));
  std::cout << report_to_json(report) << "\n";
  return report.converged ? 0 : 3;
}

int run_bench(const BenchArgs& b) {
  std::ifstream in(b.config);
  if (!in) throw InvalidInput("cannot open config: " + b.config);
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  const BenchConfig config = BenchConfig::from_json(text);
  const SuiteResult result = run_suite(config);
  std::filesystem::create_directories(b.out_dir);
  const std::filesystem::path dir(b.out_dir);
  write_records_jsonl((dir / "records.jsonl").string(), result.records);
  write_summary_csv((dir / "summary.csv").string(), result.summary);
  std::cout << summary_to_csv(result.summary);
  bool ok = true;
  for (const SummaryRow& r : result.summary) ok = ok && r.within_tol;
  return ok ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal transport with cyclic symmetry"};
  app.require_subcommand(1);

  GenArgs g;
  CLI::App* gen = app.add_subcommand("gen", "Generate a problem file");
  gen->add_option("--kind", g.kind, "synthetic | counter | image-pair | images")
      ->capture_default_str();
  gen->add_option("--m", g.m, "Block size")->capture_default_str();
  gen->add_option("--n", g.n, "Symmetry order (synthetic)")->capture_default_str();
  gen->add_option("--seed", g.seed, "Generator seed")->capture_default_str();
  gen->add_option("--scale", g.scale, "Cost scale (counter)")->capture_default_str();
  gen->add_option("--height", g.h, "Image height")->capture_default_str();
  gen->add_option("--width", g.w, "Image width")->capture_default_str();
  gen->add_option("--symmetry", g.symmetry, "mirror | rotation")->capture_default_str();
  gen->add_option("--metric", g.metric, "manhattan | euclidean | chebyshev")
      ->capture_default_str();
  gen->add_option("--noise", g.noise, "Relative pixel noise (image-pair)")
      ->capture_default_str();
  gen->add_option("--image-a", g.image_a, "Source image (PGM or CSV)");
  gen->add_option("--image-b", g.image_b, "Target image (PGM or CSV)");
  gen->add_flag("--dense", g.dense, "Write the expanded dense problem");
  gen->add_option("--out", g.out, "Output path, '-' for stdout")->capture_default_str();

  SolveArgs s;
  CLI::App* solve = app.add_subcommand("solve", "Solve a problem file");
  solve->add_option("--algo", s.algo, "lot | clot | amin | sinkhorn | csinkhorn | two-stage")
      ->required();
  solve->add_option("--in", s.in, "Problem file")->required();
  solve->add_option("--out", s.out, "Plan output path, '-' to skip")->capture_default_str();
  solve->add_option("--lambda", s.lambda, "Entropic regularization")->capture_default_str();
  solve->add_option("--tol", s.tol, "Marginal error tolerance")->capture_default_str();
  solve->add_option("--max-iters", s.max_iters, "Iteration / sweep limit")
      ->capture_default_str();
  solve->add_option("--stage1-tol", s.stage1_tol, "Two-stage: folded residual tolerance")
      ->capture_default_str();
  solve->add_flag("--log-domain", s.log_domain, "Log-domain Sinkhorn iterations");
  solve->add_flag("--deterministic", s.deterministic, "Serial kernels");
  solve->add_option("--reg", s.reg, "amin regularizer, e.g. entropic:0.5 or squared:1");
  solve->add_option("--order", s.order, "Symmetry order to exploit (default: file's n)");

  BenchArgs b;
  CLI::App* bench = app.add_subcommand("bench", "Run a benchmark suite");
  bench->add_option("--config", b.config, "BenchConfig JSON")->required();
  bench->add_option("--out-dir", b.out_dir, "Directory for records.jsonl and summary.csv")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return run_gen(g);
    if (*solve) return run_solve(s);
    if (*bench) return run_bench(b);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
