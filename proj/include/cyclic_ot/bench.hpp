// SPDX-License-Identifier: Apache-2.0
//
// Experiment harness: generate instances, run algorithm suites on them, and
// summarize objective / marginal error / wall time as mean and standard
// deviation per (algorithm, n).
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cyclic_ot/core.hpp"
#include "cyclic_ot/datagen.hpp"

namespace cyclic_ot {

struct InstanceSpec {
  // "synthetic" | "counter_example" | "image_pair" | "file"
  std::string generator = "synthetic";
  std::vector<std::uint64_t> seeds{0};
  std::size_t m = 0;  // synthetic, counter_example
  std::size_t n = 1;  // synthetic: symmetry order
  double scale = 1.0;  // counter_example
  std::size_t h = 0;   // image_pair
  std::size_t w = 0;
  Symmetry symmetry = Symmetry::kMirror;
  GridMetric metric = GridMetric::kEuclidean;
  double noise = 0.0;
  std::vector<std::string> paths;  // file: one instance per path
};

struct AlgorithmSpec {
  // "lot" | "clot" | "first-block" | "amin" | "sinkhorn" | "csinkhorn" |
  // "two-stage"
  std::string algo;
  std::vector<std::size_t> orders;  // cyclic algorithms; empty = instance order
  double lambda = 0.5;
  double tol = 1e-9;
  long max_iters = 100000;
  double stage1_tol = 1e-3;
  std::string reg;  // amin only; empty = "entropic:<lambda>"
  bool log_domain = false;
};

struct BenchConfig {
  InstanceSpec instances;
  std::vector<AlgorithmSpec> algorithms;
  int repetitions = 1;
  int warmup = 0;
  ExecPolicy policy = ExecPolicy::kSerial;
  // > 0 enables the agreement check: every algorithm's objective must lie
  // within this relative distance of its family's reference.
  double objective_rel_tol = 0.0;

  static BenchConfig from_json(std::string_view text);
  /// Throws InvalidInput on an unusable config.
  void validate() const;
};

/// A generated or loaded problem. Cyclic instances keep the reduced form at
/// their full order; dense instances carry the order they claim.
struct BenchInstance {
  std::string id;
  bool cyclic = false;
  std::size_t order = 1;
  CyclicProblem reduced;
  DenseProblem dense;
};

std::vector<BenchInstance> make_instances(const InstanceSpec& spec);

/// Runs one algorithm once. Cyclic algorithms use order `n` (refolded for
/// cyclic instances, validated for dense ones). Preparation (refold, expand,
/// validation) is outside the timed region.
SolveReport run_algorithm(const BenchInstance& instance,
                          const AlgorithmSpec& algo, std::size_t n,
                          ExecPolicy policy);

struct BenchRecord {
  std::string instance_id;
  std::string algorithm;
  std::size_t n = 1;
  SolveReport report;             // from the first repetition
  std::vector<double> rep_times;  // wall time of every repetition
  bool deterministic = true;      // identical results across repetitions
  double reference_rel_diff = 0.0;
  std::string error;              // non-empty if the solve failed
};

struct SummaryRow {
  std::string algorithm;
  std::size_t n = 1;
  std::size_t count = 0;
  std::size_t failures = 0;
  double objective_mean = 0.0;
  double objective_std = 0.0;
  double marginal_error_mean = 0.0;
  double marginal_error_std = 0.0;
  double time_mean = 0.0;
  double time_std = 0.0;
  double max_rel_diff = 0.0;
  bool within_tol = true;
};

struct SuiteResult {
  std::vector<BenchRecord> records;
  std::vector<SummaryRow> summary;
};

/// Solver failures are recorded in BenchRecord::error, not thrown.
SuiteResult run_suite(const BenchConfig& config);

/// Runs a cyclic algorithm at every divisor of the instance order. Throws
/// InvalidInput if a dense instance fails symmetry validation at a divisor,
/// NumericalError if objectives spread by more than rel_tol.
std::vector<BenchRecord> divisor_sweep(const BenchInstance& instance,
                                       const AlgorithmSpec& algo,
                                       double rel_tol = 1e-6,
                                       ExecPolicy policy = ExecPolicy::kSerial);

std::string record_to_json(const BenchRecord& record);
std::string summary_to_csv(const std::vector<SummaryRow>& summary);
void write_records_jsonl(const std::string& path,
                         const std::vector<BenchRecord>& records);
void write_summary_csv(const std::string& path,
                       const std::vector<SummaryRow>& summary);

}  // namespace cyclic_ot
