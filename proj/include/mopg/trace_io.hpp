#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mopg/errors.hpp"
#include "mopg/solver.hpp"
#include "mopg/testbed.hpp"

namespace mopg::io {

using nlohmann::json;

// Shortest round-trippable decimal text for a double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// std::stod rejects subnormal text (glibc's strtod flags ERANGE for any
// subnormal result, which stod turns into out_of_range); from_chars parses
// the full double range and lets us reject trailing garbage.
inline double parse_double(const std::string& s) {
  double v = 0;
  const char* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end)
    throw IoError("malformed number: '" + s + "'");
  return v;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << body;
  if (!out) throw IoError("write failed: " + path);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> tok;
  std::stringstream ss(line);
  std::string piece;
  while (std::getline(ss, piece, ',')) tok.push_back(piece);
  return tok;
}

// ---- per-run trace -------------------------------------------------------

// Columns: k,F_1..F_m,step_norm,residual,ell,gap,inner_iters,wall_ns
inline std::string trace_csv(const IterationTrace<double>& trace) {
  std::ostringstream out;
  const Index m = trace.records.empty() ? 0 : trace.records.front().F.size();
  out << "k";
  for (Index i = 1; i <= m; ++i) out << ",F_" << i;
  out << ",step_norm,residual,ell,gap,inner_iters,wall_ns\n";
  for (const auto& rec : trace.records) {
    out << rec.k;
    for (Index i = 0; i < m; ++i) out << "," << format_double(rec.F[i]);
    out << "," << format_double(rec.step_norm) << "," << format_double(rec.residual)
        << "," << format_double(rec.ell) << "," << format_double(rec.gap) << ","
        << rec.inner_iters << "," << rec.wall_ns << "\n";
  }
  return out.str();
}

inline IterationTrace<double> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty trace");
  const auto header = split_csv_line(line);
  Index m = 0;
  while (m + 1 < static_cast<Index>(header.size()) &&
         header[static_cast<std::size_t>(m + 1)].rfind("F_", 0) == 0)
    ++m;
  if (header.size() != static_cast<std::size_t>(m) + 7)
    throw IoError(path + ": unexpected trace header");
  IterationTrace<double> trace;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tok = split_csv_line(line);
    if (tok.size() != static_cast<std::size_t>(m) + 7)
      throw IoError(path + ":" + std::to_string(lineno) + ": bad field count");
    try {
      IterationRecord<double> rec;
      rec.k = std::stoi(tok[0]);
      rec.F.resize(m);
      for (Index i = 0; i < m; ++i) rec.F[i] = parse_double(tok[static_cast<std::size_t>(1 + i)]);
      std::size_t c = static_cast<std::size_t>(1 + m);
      rec.step_norm = parse_double(tok[c++]);
      rec.residual = parse_double(tok[c++]);
      rec.ell = parse_double(tok[c++]);
      rec.gap = parse_double(tok[c++]);
      rec.inner_iters = std::stoi(tok[c++]);
      rec.wall_ns = std::stoll(tok[c++]);
      trace.records.push_back(std::move(rec));
    } catch (const std::exception&) {
      throw IoError(path + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return trace;
}

// Columns: k,x_1..x_n with the k = 0 row holding the start point.
inline std::string iterates_csv(const IterationTrace<double>& trace) {
  std::ostringstream out;
  const Index n = trace.x0.size();
  out << "k";
  for (Index j = 1; j <= n; ++j) out << ",x_" << j;
  out << "\n";
  for (int k = 0; k <= trace.iterations(); ++k) {
    out << k;
    const auto& x = trace.iterate(k);
    for (Index j = 0; j < n; ++j) out << "," << format_double(x[j]);
    out << "\n";
  }
  return out.str();
}

// Fills x0/iterates of a trace read with read_trace_csv.
inline void read_iterates_csv(const std::string& path, IterationTrace<double>& trace) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty iterates file");
  const Index n = static_cast<Index>(split_csv_line(line).size()) - 1;
  if (n < 1) throw IoError(path + ": unexpected iterates header");
  trace.iterates.clear();
  int expected_k = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tok = split_csv_line(line);
    if (tok.size() != static_cast<std::size_t>(n) + 1)
      throw IoError(path + ":" + std::to_string(lineno) + ": bad field count");
    Vector<double> x(n);
    int row_k = 0;
    try {
      row_k = std::stoi(tok[0]);
      for (Index j = 0; j < n; ++j) x[j] = parse_double(tok[static_cast<std::size_t>(j + 1)]);
    } catch (const std::exception&) {
      throw IoError(path + ":" + std::to_string(lineno) + ": malformed number");
    }
    if (row_k != expected_k)
      throw IoError(path + ":" + std::to_string(lineno) + ": rows out of order");
    if (expected_k == 0) trace.x0 = std::move(x);
    else trace.iterates.push_back(std::move(x));
    ++expected_k;
  }
  if (expected_k == 0) throw IoError(path + ": no iterate rows");
  if (static_cast<int>(trace.iterates.size()) != trace.iterations())
    throw IoError(path + ": iterate rows do not match trace length");
}

// ---- manifests -----------------------------------------------------------

inline json to_json(const ProblemSpec& spec) {
  json j{{"name", to_string(spec.name)},
         {"n", static_cast<std::int64_t>(spec.n)},
         {"g", to_string(spec.g)}};
  if (spec.box) {
    j["box"] = {{"lo", std::vector<double>(spec.box->first.data(),
                                           spec.box->first.data() + spec.box->first.size())},
                {"hi", std::vector<double>(spec.box->second.data(),
                                           spec.box->second.data() + spec.box->second.size())}};
  }
  return j;
}

inline ProblemSpec problem_spec_from_json(const json& j) {
  ProblemSpec spec;
  try {
    spec.name = problem_name_from_string(j.at("name").get<std::string>());
    spec.n = j.at("n").get<std::int64_t>();
    spec.g = g_variant_from_string(j.at("g").get<std::string>());
    if (j.contains("box")) {
      const auto lo = j["box"].at("lo").get<std::vector<double>>();
      const auto hi = j["box"].at("hi").get<std::vector<double>>();
      Vector<double> vlo(static_cast<Index>(lo.size())), vhi(static_cast<Index>(hi.size()));
      for (std::size_t i = 0; i < lo.size(); ++i) vlo[static_cast<Index>(i)] = lo[i];
      for (std::size_t i = 0; i < hi.size(); ++i) vhi[static_cast<Index>(i)] = hi[i];
      spec.box = {vlo, vhi};
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("problem spec: ") + e.what());
  }
  return spec;
}

inline json to_json(const ErrorSchedule<double>& s) {
  using Kind = ErrorSchedule<double>::Kind;
  switch (s.kind) {
    case Kind::Zero: return json{{"kind", "zero"}};
    case Kind::PowerLaw:
      return json{{"kind", "power_law"}, {"c", s.c}, {"p", s.p}};
    case Kind::Custom: return json{{"kind", "custom"}};
  }
  return json{{"kind", "zero"}};
}

inline ErrorSchedule<double> error_schedule_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "zero") return ErrorSchedule<double>::zero();
  if (kind == "power_law")
    return ErrorSchedule<double>::power_law(j.at("c").get<double>(),
                                            j.at("p").get<double>());
  throw ConfigError("error schedule kind '" + kind + "' cannot be parsed");
}

inline Algorithm algorithm_from_string(const std::string& s) {
  if (s == "SPG") return Algorithm::SPG;
  if (s == "AccSPG") return Algorithm::AccSPG;
  if (s == "FPGMOP") return Algorithm::FPGMOP;
  if (s == "InexactFPGMOP") return Algorithm::InexactFPGMOP;
  throw ConfigError("unknown algorithm: " + s);
}

inline json to_json(const SolverConfig<double>& c) {
  json j{{"algorithm", to_string(c.algorithm)},
         {"alpha", c.alpha},
         {"ell_mode", c.ell_mode == EllMode::Exact ? "exact" : "backtracking"},
         {"ell_init", c.ell_init},
         {"ell_factor", c.ell_factor},
         {"eps_stop", c.eps_stop},
         {"k_max", c.k_max},
         {"stop_rule", c.stop_rule == StopRule::StepNorm ? "step_norm" : "residual"},
         {"seed", c.seed},
         {"accspg_classical", c.accspg_classical}};
  if (c.ell) j["ell"] = *c.ell;
  if (c.error_schedule) j["error_schedule"] = to_json(*c.error_schedule);
  return j;
}

inline SolverConfig<double> solver_config_from_json(const json& j) {
  SolverConfig<double> c;
  try {
    if (j.contains("algorithm"))
      c.algorithm = algorithm_from_string(j["algorithm"].get<std::string>());
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
    if (j.contains("ell_mode")) {
      const auto mode = j["ell_mode"].get<std::string>();
      if (mode == "exact") c.ell_mode = EllMode::Exact;
      else if (mode == "backtracking") c.ell_mode = EllMode::Backtracking;
      else throw ConfigError("unknown ell_mode: " + mode);
    }
    if (j.contains("ell")) c.ell = j["ell"].get<double>();
    if (j.contains("ell_init")) c.ell_init = j["ell_init"].get<double>();
    if (j.contains("ell_factor")) c.ell_factor = j["ell_factor"].get<double>();
    if (j.contains("eps_stop")) c.eps_stop = j["eps_stop"].get<double>();
    if (j.contains("k_max")) c.k_max = j["k_max"].get<int>();
    if (j.contains("stop_rule")) {
      const auto rule = j["stop_rule"].get<std::string>();
      if (rule == "step_norm") c.stop_rule = StopRule::StepNorm;
      else if (rule == "residual") c.stop_rule = StopRule::Residual;
      else throw ConfigError("unknown stop_rule: " + rule);
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("accspg_classical"))
      c.accspg_classical = j["accspg_classical"].get<bool>();
    if (j.contains("error_schedule"))
      c.error_schedule = error_schedule_from_json(j["error_schedule"]);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("solver config: ") + e.what());
  }
  return c;
}

inline json run_manifest(const ProblemSpec& spec, const SolverConfig<double>& config,
                         const RunResult<double>& result) {
  json j{{"problem", to_json(spec)},
         {"config", to_json(config)},
         {"status", to_string(result.status)},
         {"iterations", result.iterations()},
         {"total_wall_ns", result.total_wall_ns}};
  if (!result.message.empty()) j["message"] = result.message;
  if (!result.trace.records.empty()) {
    const auto& last = result.trace.records.back();
    j["final_step_norm"] = last.step_norm;
    j["final_residual"] = last.residual;
    j["final_ell"] = last.ell;
    std::vector<double> F(last.F.data(), last.F.data() + last.F.size());
    j["final_F"] = F;
  }
  return j;
}

// Writes manifest.json, trace.csv and iterates.csv under `dir`.
inline void write_run_archive(const std::filesystem::path& dir,
                              const ProblemSpec& spec,
                              const SolverConfig<double>& config,
                              const RunResult<double>& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_text_file((dir / "manifest.json").string(),
                  run_manifest(spec, config, result).dump(2) + "\n");
  write_text_file((dir / "trace.csv").string(), trace_csv(result.trace));
  write_text_file((dir / "iterates.csv").string(), iterates_csv(result.trace));
}

struct ArchivedRun {
  ProblemSpec spec;
  SolverConfig<double> config;
  RunStatus status = RunStatus::Converged;
  IterationTrace<double> trace;
};

inline ArchivedRun read_run_archive(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("cannot open " + (dir / "manifest.json").string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("manifest.json: " + std::string(e.what()));
  }
  ArchivedRun run;
  try {
    run.spec = problem_spec_from_json(j.at("problem"));
    run.config = solver_config_from_json(j.at("config"));
    const auto status = j.at("status").get<std::string>();
    if (status == "converged") run.status = RunStatus::Converged;
    else if (status == "max_iterations") run.status = RunStatus::MaxIterations;
    else if (status == "failed") run.status = RunStatus::Failed;
    else throw ConfigError("unknown status: " + status);
  } catch (const json::exception& e) {
    throw IoError("manifest.json: " + std::string(e.what()));
  }
  run.trace = read_trace_csv((dir / "trace.csv").string());
  read_iterates_csv((dir / "iterates.csv").string(), run.trace);
  return run;
}

}  // namespace mopg::io
