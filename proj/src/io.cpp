// SPDX-License-Identifier: Apache-2.0
#include "cyclic_ot/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

namespace cyclic_ot {
namespace {

using nlohmann::json;

void append_vector(std::string& out, std::span<const double> v) {
  out.push_back('[');
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(',');
    out += format_real(v[i]);
  }
  out.push_back(']');
}

void append_matrix(std::string& out, const Matrix& m) {
  out.push_back('[');
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (i) out.push_back(',');
    append_vector(out, m.row(i));
  }
  out.push_back(']');
}

void append_string(std::string& out, std::string_view s) {
  out += json(std::string(s)).dump();
}

const json& field(const json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end()) {
    throw InvalidInput(std::string("problem file: missing field '") + key + "'");
  }
  return *it;
}

std::vector<double> read_vector(const json& v, const char* key) {
  if (!v.is_array()) {
    throw InvalidInput(std::string("problem file: '") + key + "' must be an array");
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (const json& x : v) {
    if (!x.is_number()) {
      throw InvalidInput(std::string("problem file: non-numeric entry in '") +
                         key + "'");
    }
    out.push_back(x.get<double>());
  }
  return out;
}

Matrix read_matrix(const json& v, std::size_t rows, std::size_t cols,
                   const char* key) {
  if (!v.is_array() || v.size() != rows) {
    throw InvalidInput(std::string("problem file: '") + key + "' must have " +
                       std::to_string(rows) + " rows");
  }
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::vector<double> row = read_vector(v[i], key);
    if (row.size() != cols) {
      throw InvalidInput(std::string("problem file: ragged row in '") + key + "'");
    }
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return out;
}

std::size_t read_size(const json& doc, const char* key, std::size_t fallback) {
  const auto it = doc.find(key);
  if (it == doc.end()) return fallback;
  if (!it->is_number_unsigned() || it->get<std::size_t>() == 0) {
    throw InvalidInput(std::string("problem file: '") + key +
                       "' must be a positive integer");
  }
  return it->get<std::size_t>();
}

}  // namespace

std::string format_real(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string problem_to_json(const CyclicProblem& problem) {
  std::string out = "{\"format\":\"";
  out += kProblemFormat;
  out += "\",\"kind\":\"cyclic\",\"n\":" + std::to_string(problem.order()) +
         ",\"m\":" + std::to_string(problem.block_size()) + ",\"alpha\":";
  append_vector(out, problem.alpha());
  out += ",\"beta\":";
  append_vector(out, problem.beta());
  out += ",\"cost_blocks\":[";
  for (std::size_t k = 0; k < problem.order(); ++k) {
    if (k) out.push_back(',');
    append_matrix(out, problem.block(k));
  }
  out += "]}\n";
  return out;
}

std::string problem_to_json(const DenseProblem& problem, std::size_t order) {
  if (order == 0 || problem.dim() % order != 0) {
    throw InvalidInput("problem_to_json: order must divide the dimension");
  }
  std::string out = "{\"format\":\"";
  out += kProblemFormat;
  out += "\",\"kind\":\"dense\",\"n\":" + std::to_string(order) +
         ",\"m\":" + std::to_string(problem.dim() / order) + ",\"a\":";
  append_vector(out, problem.a().entries());
  out += ",\"b\":";
  append_vector(out, problem.b().entries());
  out += ",\"cost\":";
  append_matrix(out, problem.cost());
  out += "}\n";
  return out;
}

ProblemFile parse_problem(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("problem file: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidInput("problem file: expected an object");
  const json& format = field(doc, "format");
  if (!format.is_string() || format.get<std::string>() != kProblemFormat) {
    throw InvalidInput("problem file: unsupported format, expected '" +
                       std::string(kProblemFormat) + "'");
  }
  const json& kind = field(doc, "kind");
  ProblemFile out;
  if (kind == "cyclic") {
    out.cyclic = true;
    std::vector<double> alpha = read_vector(field(doc, "alpha"), "alpha");
    std::vector<double> beta = read_vector(field(doc, "beta"), "beta");
    const json& blocks_json = field(doc, "cost_blocks");
    if (!blocks_json.is_array() || blocks_json.empty()) {
      throw InvalidInput("problem file: 'cost_blocks' must be a non-empty array");
    }
    const std::size_t m = alpha.size();
    const std::size_t n = read_size(doc, "n", blocks_json.size());
    if (n != blocks_json.size() || read_size(doc, "m", m) != m) {
      throw InvalidInput("problem file: 'n'/'m' disagree with the data");
    }
    std::vector<Matrix> blocks;
    for (const json& b : blocks_json) {
      blocks.push_back(read_matrix(b, m, m, "cost_blocks"));
    }
    out.order = n;
    out.reduced =
        CyclicProblem(std::move(alpha), std::move(beta), std::move(blocks));
  } else if (kind == "dense") {
    std::vector<double> a = read_vector(field(doc, "a"), "a");
    std::vector<double> b = read_vector(field(doc, "b"), "b");
    const std::size_t d = a.size();
    Matrix cost = read_matrix(field(doc, "cost"), d, b.size(), "cost");
    out.order = read_size(doc, "n", 1);
    if (d % out.order != 0 || read_size(doc, "m", d / out.order) != d / out.order) {
      throw InvalidInput("problem file: 'n'/'m' disagree with the data");
    }
    out.dense = DenseProblem(ProbabilityVector(std::move(a)),
                             ProbabilityVector(std::move(b)), std::move(cost));
  } else {
    throw InvalidInput("problem file: 'kind' must be \"dense\" or \"cyclic\"");
  }
  return out;
}

ProblemFile read_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open problem file: " + path);
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  return parse_problem(text);
}

void write_text(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open for writing: " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw InvalidInput("write failed: " + path);
}

std::string report_to_json(const SolveReport& r) {
  std::string out = "{\"algorithm\":";
  append_string(out, r.algorithm);
  out += ",\"objective\":" + format_real(r.objective);
  out += ",\"marginal_error\":" + format_real(r.marginal_error);
  out += ",\"row_marginal_error\":" + format_real(r.row_marginal_error);
  out += ",\"iterations\":" + std::to_string(r.iterations);
  out += ",\"wall_time\":" + format_real(r.wall_time);
  out += std::string(",\"converged\":") + (r.converged ? "true" : "false");
  for (const auto* group : {&r.phases, &r.extras}) {
    out += group == &r.phases ? ",\"phases\":{" : ",\"extras\":{";
    bool first = true;
    for (const auto& [key, value] : *group) {
      if (!first) out.push_back(',');
      first = false;
      append_string(out, key);
      out += ":" + format_real(value);
    }
    out.push_back('}');
  }
  out.push_back('}');
  return out;
}

std::string plan_to_json(const TransportPlan& plan, const SolveReport& report) {
  std::string out = "{\"format\":\"";
  out += kProblemFormat;
  out += "-plan\",\"report\":" + report_to_json(report) + ",\"plan\":";
  if (plan.is_blocks()) {
    out += "{\"kind\":\"blocks\",\"n\":" + std::to_string(plan.order()) +
           ",\"blocks\":[";
    const auto blocks = plan.blocks();
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      if (k) out.push_back(',');
      append_matrix(out, blocks[k]);
    }
    out += "]}";
  } else {
    out += "{\"kind\":\"dense\",\"matrix\":";
    append_matrix(out, plan.dense());
    out += "}";
  }
  out += "}\n";
  return out;
}

}  // namespace cyclic_ot
