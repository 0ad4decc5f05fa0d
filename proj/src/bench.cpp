// SPDX-License-Identifier: Apache-2.0
#include "cyclic_ot/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "cyclic_ot/clot.hpp"
#include "cyclic_ot/io.hpp"
#include "cyclic_ot/lot.hpp"
#include "cyclic_ot/sinkhorn.hpp"
#include "cyclic_ot/srot.hpp"

namespace cyclic_ot {
namespace {

using nlohmann::json;

const std::vector<std::string>& known_algorithms() {
  static const std::vector<std::string> names = {
      "lot", "clot", "first-block", "amin", "sinkhorn", "csinkhorn", "two-stage"};
  return names;
}

bool is_cyclic_algorithm(const std::string& a) {
  return a == "clot" || a == "first-block" || a == "amin" || a == "csinkhorn";
}

// Algorithms whose objectives should coincide on strictly symmetric inputs.
std::string family(const AlgorithmSpec& a) {
  if (a.algo == "lot" || a.algo == "clot") return "exact";
  if (a.algo == "first-block") return "first-block";
  std::string reg = a.reg.empty() ? "entropic" : a.reg.substr(0, a.reg.find(':'));
  if (a.algo == "amin" && reg != "entropic") return "amin-" + a.reg;
  std::ostringstream key;
  key.precision(17);
  key << "entropic:" << (a.algo == "amin" && !a.reg.empty()
                             ? Regularizer::parse(a.reg).modulus()
                             : a.lambda);
  return key.str();
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw InvalidInput(std::string("bench config: field '") + key +
                       "' has the wrong type");
  }
}

InstanceSpec parse_instances(const json& j) {
  if (!j.is_object()) throw InvalidInput("bench config: 'instances' must be an object");
  InstanceSpec s;
  s.generator = get_or<std::string>(j, "generator", s.generator);
  if (j.contains("seeds")) {
    s.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", {});
  } else if (j.contains("seed_count")) {
    const auto count = get_or<std::size_t>(j, "seed_count", 0);
    const auto first = get_or<std::uint64_t>(j, "first_seed", 0);
    s.seeds.clear();
    for (std::size_t i = 0; i < count; ++i) s.seeds.push_back(first + i);
  }
  s.m = get_or<std::size_t>(j, "m", s.m);
  s.n = get_or<std::size_t>(j, "n", s.n);
  s.scale = get_or<double>(j, "scale", s.scale);
  s.h = get_or<std::size_t>(j, "h", s.h);
  s.w = get_or<std::size_t>(j, "w", s.w);
  const std::string sym = get_or<std::string>(j, "symmetry", "mirror");
  if (sym == "mirror") {
    s.symmetry = Symmetry::kMirror;
  } else if (sym == "rotation") {
    s.symmetry = Symmetry::kRotation;
  } else {
    throw InvalidInput("bench config: symmetry must be 'mirror' or 'rotation'");
  }
  s.metric = parse_metric(get_or<std::string>(j, "metric", "euclidean"));
  s.noise = get_or<double>(j, "noise", s.noise);
  s.paths = get_or<std::vector<std::string>>(j, "paths", {});
  return s;
}

AlgorithmSpec parse_algorithm(const json& j) {
  AlgorithmSpec a;
  if (j.is_string()) {
    a.algo = j.get<std::string>();
    return a;
  }
  if (!j.is_object()) throw InvalidInput("bench config: bad algorithm entry");
  a.algo = get_or<std::string>(j, "algo", "");
  a.orders = get_or<std::vector<std::size_t>>(j, "orders", {});
  if (j.contains("n") && a.orders.empty()) {
    a.orders = j["n"].is_array() ? get_or<std::vector<std::size_t>>(j, "n", {})
                                 : std::vector<std::size_t>{get_or<std::size_t>(j, "n", 1)};
  }
  a.lambda = get_or<double>(j, "lambda", a.lambda);
  a.tol = get_or<double>(j, "tol", a.tol);
  a.max_iters = get_or<long>(j, "max_iters", a.max_iters);
  a.stage1_tol = get_or<double>(j, "stage1_tol", a.stage1_tol);
  a.reg = get_or<std::string>(j, "reg", a.reg);
  a.log_domain = get_or<bool>(j, "log_domain", a.log_domain);
  return a;
}

CyclicProblem cyclic_view(const BenchInstance& inst, std::size_t n) {
  if (inst.cyclic) {
    if (n == 0 || inst.order % n != 0) {
      throw InvalidInput("order " + std::to_string(n) +
                         " does not divide the instance order " +
                         std::to_string(inst.order));
    }
    return refold(inst.reduced, n);
  }
  ValidationResult v = validate_cyclic(inst.dense, n);
  if (auto* bad = std::get_if<SymmetryViolation>(&v)) {
    throw InvalidInput("symmetry validation failed at n = " + std::to_string(n) +
                       ": " + describe(*bad));
  }
  return std::get<CyclicProblem>(std::move(v));
}

DenseProblem dense_view(const BenchInstance& inst, ExecPolicy policy) {
  return inst.cyclic ? expand(inst.reduced, policy) : inst.dense;
}

SinkhornOptions sinkhorn_options(const AlgorithmSpec& a, ExecPolicy policy) {
  SinkhornOptions o;
  o.lambda = a.lambda;
  o.tol = a.tol;
  o.max_iters = a.max_iters;
  o.log_domain = a.log_domain;
  o.policy = policy;
  return o;
}

std::vector<std::size_t> orders_for(const BenchInstance& inst,
                                    const AlgorithmSpec& a) {
  if (!is_cyclic_algorithm(a.algo) && a.algo != "two-stage") return {1};
  if (!a.orders.empty()) return a.orders;
  return {inst.order};
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double rel_diff(double x, double ref) {
  return std::abs(x - ref) / std::max(std::abs(ref), 1e-300);
}

BenchRecord run_record(const BenchInstance& inst, const AlgorithmSpec& algo,
                       std::size_t n, int repetitions, int warmup,
                       ExecPolicy policy) {
  BenchRecord rec;
  rec.instance_id = inst.id;
  rec.algorithm = algo.algo;
  rec.n = n;
  try {
    for (int w = 0; w < warmup; ++w) run_algorithm(inst, algo, n, policy);
    for (int r = 0; r < repetitions; ++r) {
      SolveReport rep = run_algorithm(inst, algo, n, policy);
      rec.rep_times.push_back(rep.wall_time);
      if (r == 0) {
        rec.report = std::move(rep);
      } else if (rep.objective != rec.report.objective ||
                 rep.marginal_error != rec.report.marginal_error) {
        rec.deterministic = false;
      }
    }
    rec.report.wall_time = mean(rec.rep_times);
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

}  // namespace

BenchConfig BenchConfig::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("bench config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidInput("bench config: expected an object");
  BenchConfig c;
  if (!doc.contains("instances")) {
    throw InvalidInput("bench config: missing 'instances'");
  }
  c.instances = parse_instances(doc["instances"]);
  if (!doc.contains("algorithms") || !doc["algorithms"].is_array()) {
    throw InvalidInput("bench config: 'algorithms' must be an array");
  }
  for (const json& a : doc["algorithms"]) c.algorithms.push_back(parse_algorithm(a));
  c.repetitions = get_or<int>(doc, "repetitions", c.repetitions);
  c.warmup = get_or<int>(doc, "warmup", c.warmup);
  const std::string policy = get_or<std::string>(doc, "policy", "serial");
  if (policy == "serial") {
    c.policy = ExecPolicy::kSerial;
  } else if (policy == "parallel") {
    c.policy = ExecPolicy::kParallel;
  } else {
    throw InvalidInput("bench config: policy must be 'serial' or 'parallel'");
  }
  c.objective_rel_tol = get_or<double>(doc, "objective_rel_tol", 0.0);
  c.validate();
  return c;
}

void BenchConfig::validate() const {
  if (algorithms.empty()) throw InvalidInput("bench config: no algorithms");
  if (repetitions < 1) throw InvalidInput("bench config: repetitions must be >= 1");
  if (warmup < 0) throw InvalidInput("bench config: warmup must be >= 0");
  const auto& known = known_algorithms();
  for (const AlgorithmSpec& a : algorithms) {
    if (std::find(known.begin(), known.end(), a.algo) == known.end()) {
      throw InvalidInput("bench config: unknown algorithm '" + a.algo + "'");
    }
    if (!a.reg.empty()) Regularizer::parse(a.reg);
  }
  const std::string& g = instances.generator;
  if (g == "file") {
    if (instances.paths.empty()) throw InvalidInput("bench config: no instance paths");
    return;
  }
  if (instances.seeds.empty()) throw InvalidInput("bench config: no instance seeds");
  if (g == "synthetic") {
    if (instances.m == 0 || instances.n == 0) {
      throw InvalidInput("bench config: synthetic instances need m, n >= 1");
    }
  } else if (g == "counter_example") {
    if (instances.m == 0) throw InvalidInput("bench config: counter_example needs m >= 1");
  } else if (g == "image_pair") {
    if (instances.h == 0 || instances.w == 0) {
      throw InvalidInput("bench config: image_pair needs h, w");
    }
  } else {
    throw InvalidInput("bench config: unknown generator '" + g + "'");
  }
}

std::vector<BenchInstance> make_instances(const InstanceSpec& spec) {
  std::vector<BenchInstance> out;
  if (spec.generator == "file") {
    for (const std::string& path : spec.paths) {
      ProblemFile f = read_problem(path);
      BenchInstance inst;
      inst.id = path;
      inst.cyclic = f.cyclic;
      inst.order = f.order;
      inst.reduced = std::move(f.reduced);
      inst.dense = std::move(f.dense);
      out.push_back(std::move(inst));
    }
    return out;
  }
  for (std::uint64_t seed : spec.seeds) {
    BenchInstance inst;
    inst.id = spec.generator + "-" + std::to_string(seed);
    if (spec.generator == "synthetic") {
      inst.cyclic = true;
      inst.order = spec.n;
      inst.reduced = gen_synthetic(spec.m, spec.n, seed);
    } else if (spec.generator == "counter_example") {
      inst.cyclic = true;
      inst.order = 2;
      inst.reduced = gen_counter_example(spec.scale, spec.m);
    } else if (spec.generator == "image_pair") {
      inst.order = spec.symmetry == Symmetry::kMirror ? 2 : 4;
      inst.dense = gen_image_pair(spec.h, spec.w, spec.symmetry, spec.metric,
                                  seed, spec.noise);
    } else {
      throw InvalidInput("unknown generator '" + spec.generator + "'");
    }
    out.push_back(std::move(inst));
  }
  return out;
}

SolveReport run_algorithm(const BenchInstance& inst, const AlgorithmSpec& algo,
                          std::size_t n, ExecPolicy policy) {
  const std::string& a = algo.algo;
  if (a == "lot") {
    const DenseProblem d = dense_view(inst, policy);
    return solve_lot(d.a().entries(), d.b().entries(), d.cost()).report;
  }
  if (a == "sinkhorn") {
    const DenseProblem d = dense_view(inst, policy);
    return sinkhorn(d, sinkhorn_options(algo, policy)).report;
  }
  if (a == "two-stage") {
    const DenseProblem d = dense_view(inst, policy);
    TwoStageOptions o;
    o.sinkhorn = sinkhorn_options(algo, policy);
    o.order = n;
    o.stage1_tol = algo.stage1_tol;
    return two_stage_sinkhorn(d, o).report;
  }
  const CyclicProblem p = cyclic_view(inst, n);
  if (a == "clot") return solve_clot(p, policy).report;
  if (a == "first-block") return solve_first_block_only(p).report;
  if (a == "csinkhorn") return cyclic_sinkhorn(p, sinkhorn_options(algo, policy)).report;
  if (a == "amin") {
    std::ostringstream reg;
    reg.precision(17);
    reg << "entropic:" << algo.lambda;
    const Regularizer r = Regularizer::parse(algo.reg.empty() ? reg.str() : algo.reg);
    AlternatingOptions o;
    o.tol = algo.tol;
    o.max_sweeps = algo.max_iters;
    return alternating_minimize(p, r, o).report;
  }
  throw InvalidInput("unknown algorithm '" + a + "'");
}

SuiteResult run_suite(const BenchConfig& config) {
  config.validate();
  const std::vector<BenchInstance> instances = make_instances(config.instances);
  SuiteResult out;
  for (const BenchInstance& inst : instances) {
    std::map<std::string, double> reference;  // family -> objective
    for (const AlgorithmSpec& algo : config.algorithms) {
      const std::string fam = family(algo);
      for (std::size_t n : orders_for(inst, algo)) {
        BenchRecord rec = run_record(inst, algo, n, config.repetitions,
                                     config.warmup, config.policy);
        if (rec.error.empty()) {
          const auto it = reference.try_emplace(fam, rec.report.objective).first;
          rec.reference_rel_diff = rel_diff(rec.report.objective, it->second);
        }
        out.records.push_back(std::move(rec));
      }
    }
  }

  std::vector<std::pair<std::string, std::size_t>> keys;
  for (const BenchRecord& r : out.records) {
    const std::pair<std::string, std::size_t> key{r.algorithm, r.n};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  for (const auto& [algo, n] : keys) {
    SummaryRow row;
    row.algorithm = algo;
    row.n = n;
    std::vector<double> obj, err, time;
    for (const BenchRecord& r : out.records) {
      if (r.algorithm != algo || r.n != n) continue;
      ++row.count;
      if (!r.error.empty()) {
        ++row.failures;
        continue;
      }
      obj.push_back(r.report.objective);
      err.push_back(r.report.marginal_error);
      time.push_back(r.report.wall_time);
      row.max_rel_diff = std::max(row.max_rel_diff, r.reference_rel_diff);
    }
    row.objective_mean = mean(obj);
    row.objective_std = sample_std(obj);
    row.marginal_error_mean = mean(err);
    row.marginal_error_std = sample_std(err);
    row.time_mean = mean(time);
    row.time_std = sample_std(time);
    row.within_tol = config.objective_rel_tol <= 0.0 ||
                     row.max_rel_diff <= config.objective_rel_tol;
    out.summary.push_back(row);
  }
  return out;
}

std::vector<BenchRecord> divisor_sweep(const BenchInstance& instance,
                                       const AlgorithmSpec& algo,
                                       double rel_tol, ExecPolicy policy) {
  if (!is_cyclic_algorithm(algo.algo)) {
    throw InvalidInput("divisor_sweep: '" + algo.algo + "' is not a cyclic algorithm");
  }
  std::vector<BenchRecord> out;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t n : divisors(instance.order)) {
    // Validation failures propagate: the sweep's claim is symmetry at every n.
    const CyclicProblem p = cyclic_view(instance, n);
    (void)p;
    BenchRecord rec = run_record(instance, algo, n, 1, 0, policy);
    if (!rec.error.empty()) throw NumericalError("divisor_sweep: " + rec.error);
    lo = std::min(lo, rec.report.objective);
    hi = std::max(hi, rec.report.objective);
    out.push_back(std::move(rec));
  }
  for (BenchRecord& r : out) {
    r.reference_rel_diff = rel_diff(r.report.objective, out.front().report.objective);
  }
  if (rel_diff(hi, lo) > rel_tol) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "divisor_sweep: objectives disagree across divisors (min " << lo
        << ", max " << hi << ")";
    throw NumericalError(msg.str());
  }
  return out;
}

std::string record_to_json(const BenchRecord& r) {
  std::string out = "{\"instance\":";
  out += json(r.instance_id).dump();
  out += ",\"algorithm\":" + json(r.algorithm).dump();
  out += ",\"n\":" + std::to_string(r.n);
  out += ",\"report\":" + report_to_json(r.report);
  out += ",\"rep_times\":[";
  for (std::size_t i = 0; i < r.rep_times.size(); ++i) {
    if (i) out.push_back(',');
    out += format_real(r.rep_times[i]);
  }
  out += "],\"deterministic\":";
  out += r.deterministic ? "true" : "false";
  out += ",\"reference_rel_diff\":" + format_real(r.reference_rel_diff);
  out += ",\"error\":" + json(r.error).dump() + "}";
  return out;
}

std::string summary_to_csv(const std::vector<SummaryRow>& summary) {
  std::string out =
      "algorithm,n,count,failures,objective_mean,objective_std,"
      "marginal_error_mean,marginal_error_std,time_mean,time_std,"
      "max_rel_diff,within_tol\n";
  for (const SummaryRow& r : summary) {
    out += r.algorithm + "," + std::to_string(r.n) + "," +
           std::to_string(r.count) + "," + std::to_string(r.failures) + "," +
           format_real(r.objective_mean) + "," + format_real(r.objective_std) +
           "," + format_real(r.marginal_error_mean) + "," +
           format_real(r.marginal_error_std) + "," + format_real(r.time_mean) +
           "," + format_real(r.time_std) + "," + format_real(r.max_rel_diff) +
           "," + (r.within_tol ? "true" : "false") + "\n";
  }
  return out;
}

void write_records_jsonl(const std::string& path,
                         const std::vector<BenchRecord>& records) {
  std::string text;
  for (const BenchRecord& r : records) text += record_to_json(r) + "\n";
  write_text(path, text);
}

void write_summary_csv(const std::string& path,
                       const std::vector<SummaryRow>& summary) {
  write_text(path, summary_to_csv(summary));
}

}  // namespace cyclic_ot
