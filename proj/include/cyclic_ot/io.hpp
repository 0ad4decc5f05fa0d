// SPDX-License-Identifier: Apache-2.0
//
// The "cyclic-ot/1" JSON problem format and plan/report output. Reals are
// written with 17 significant digits so files round-trip bit-exactly.
#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "cyclic_ot/core.hpp"

namespace cyclic_ot {

inline constexpr std::string_view kProblemFormat = "cyclic-ot/1";

/// A problem file holds either a dense problem (optionally tagged with the
/// order it is claimed to be symmetric in) or a reduced cyclic problem.
struct ProblemFile {
  bool cyclic = false;
  std::size_t order = 1;  // "n"
  DenseProblem dense;     // set when !cyclic
  CyclicProblem reduced;  // set when cyclic
};

/// Formats a double with %.17g; non-finite values become null.
std::string format_real(double x);

std::string problem_to_json(const CyclicProblem& problem);
std::string problem_to_json(const DenseProblem& problem, std::size_t order = 1);
ProblemFile parse_problem(std::string_view json);

ProblemFile read_problem(const std::string& path);
void write_text(const std::string& path, std::string_view text);

/// Single-line JSON object with every SolveReport field.
std::string report_to_json(const SolveReport& report);
/// {"report": ..., "plan": {"kind": "blocks"|"dense", ...}}
std::string plan_to_json(const TransportPlan& plan, const SolveReport& report);

}  // namespace cyclic_ot
