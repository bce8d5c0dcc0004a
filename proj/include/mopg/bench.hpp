#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mopg/diagnostics.hpp"
#include "mopg/errors.hpp"
#include "mopg/random.hpp"
#include "mopg/solver.hpp"
#include "mopg/testbed.hpp"
#include "mopg/trace_io.hpp"

namespace mopg {

// One benchmark campaign: every algorithm runs from the same `starts`
// sampled initial points of every problem, so per-problem comparisons are
// paired.  Everything except wall-clock times is deterministic in `seed`.
struct BenchConfig {
  std::vector<ProblemSpec> problems;
  std::vector<SolverConfig<double>> algorithms;
  int starts = 100;
  std::uint64_t seed = 0;
  std::string out_dir;    // empty: no files written
  int archive_runs = 3;   // per cell, full trace archives
  int parallelism = 0;    // 0: hardware concurrency
};

struct RunSummary {
  RunStatus status = RunStatus::Converged;
  int iterations = 0;          // k_max + 1 when the run timed out
  std::int64_t wall_ns = 0;
  Vector<double> final_F;
  Vector<double> final_x;
  Vector<double> k2_F;         // objective row at k = 2 when available
};

struct CellStats {
  ProblemSpec spec;
  SolverConfig<double> config;
  std::string label;
  std::vector<RunSummary> runs;
  double mean_time_s = 0;
  double mean_iters = 0;
  int timeouts = 0;
  int failures = 0;
};

struct BenchReport {
  BenchConfig config;
  std::vector<CellStats> cells;
};

namespace detail {

inline std::string cell_label(const SolverConfig<double>& c) {
  std::string label = to_string(c.algorithm);
  if (c.algorithm == Algorithm::InexactFPGMOP && c.error_schedule) {
    const auto& s = *c.error_schedule;
    if (s.kind == ErrorSchedule<double>::Kind::PowerLaw) {
      std::ostringstream os;
      os << label << "(c=" << s.c << ",p=" << s.p << ")";
      return os.str();
    }
  }
  return label;
}

inline std::string slug(const ProblemSpec& spec) {
  std::ostringstream os;
  os << to_string(spec.name) << "_n" << spec.n << "_" << to_string(spec.g);
  return os.str();
}

// Fills in the pieces of a solver config that depend on the problem:
// exact ell = max L_i when it is known, backtracking otherwise, and the
// per-run seed for error directions.
inline SolverConfig<double> resolve_config(const MultiObjectiveProblem<double>& problem,
                                           SolverConfig<double> config,
                                           std::uint64_t run_seed) {
  config.seed = run_seed;
  if (config.algorithm != Algorithm::InexactFPGMOP &&
      config.ell_mode == EllMode::Exact && !config.ell &&
      !problem.lipschitz_max())
    config.ell_mode = EllMode::Backtracking;
  return config;
}

}  // namespace detail

// Observer invoked once per finished run (serialized by an internal
// mutex), before the full trace is discarded.  Used by callers that need
// per-run diagnostics without archiving every trace.
using RunObserver = std::function<void(const ProblemSpec&, const SolverConfig<double>&,
                                       int run_index, const RunResult<double>&)>;

inline BenchReport run_bench(const BenchConfig& config,
                             const RunObserver& observer = nullptr) {
  if (config.starts < 1) throw ConfigError("bench: starts must be >= 1");
  if (config.problems.empty()) throw ConfigError("bench: no problems");
  if (config.algorithms.empty()) throw ConfigError("bench: no algorithms");

  BenchReport report;
  report.config = config;

  struct Task {
    std::size_t cell;
    int run;
  };
  std::vector<Task> tasks;

  // Build problems and paired start sets up front.
  std::vector<MultiObjectiveProblem<double>> problems;
  std::vector<std::vector<Vector<double>>> starts;
  problems.reserve(config.problems.size());
  for (std::size_t p = 0; p < config.problems.size(); ++p) {
    problems.push_back(build_problem<double>(config.problems[p]));
    starts.push_back(sample_initial_points<double>(
        config.problems[p], config.starts,
        rng::derive_seed(config.seed, {0x5741u, static_cast<std::uint64_t>(p)})));
  }

  for (std::size_t p = 0; p < config.problems.size(); ++p) {
    for (std::size_t a = 0; a < config.algorithms.size(); ++a) {
      CellStats cell;
      cell.spec = config.problems[p];
      cell.config = config.algorithms[a];
      cell.label = detail::cell_label(config.algorithms[a]);
      cell.runs.resize(static_cast<std::size_t>(config.starts));
      report.cells.push_back(std::move(cell));
      for (int r = 0; r < config.starts; ++r)
        tasks.push_back({report.cells.size() - 1, r});
    }
  }

  const std::size_t cells_per_problem = config.algorithms.size();
  std::atomic<std::size_t> next{0};
  std::mutex observer_mutex;
  std::vector<std::string> errors;
  std::mutex errors_mutex;

  const std::filesystem::path out_root(config.out_dir);

  auto worker = [&]() {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const Task task = tasks[t];
      auto& cell = report.cells[task.cell];
      const std::size_t p = task.cell / cells_per_problem;
      const std::size_t a = task.cell % cells_per_problem;
      try {
        const std::uint64_t run_seed = rng::derive_seed(
            config.seed, {1u + static_cast<std::uint64_t>(p),
                          static_cast<std::uint64_t>(a),
                          static_cast<std::uint64_t>(task.run)});
        const auto run_config =
            detail::resolve_config(problems[p], cell.config, run_seed);
        const auto result =
            run(problems[p], run_config, starts[p][static_cast<std::size_t>(task.run)]);

        RunSummary summary;
        summary.status = result.status;
        summary.iterations = result.status == RunStatus::MaxIterations
                                 ? result.iterations() + 1
                                 : result.iterations();
        summary.wall_ns = result.total_wall_ns;
        summary.final_x = result.x;
        if (!result.trace.records.empty())
          summary.final_F = result.trace.records.back().F;
        if (result.trace.iterations() >= 2)
          summary.k2_F = result.trace.records[1].F;

        if (observer) {
          std::lock_guard<std::mutex> lock(observer_mutex);
          observer(cell.spec, run_config, task.run, result);
        }
        if (!config.out_dir.empty() && task.run < config.archive_runs) {
          io::write_run_archive(out_root / "traces" / detail::slug(cell.spec) /
                                    cell.label / ("run" + std::to_string(task.run)),
                                cell.spec, run_config, result);
        }
        cell.runs[static_cast<std::size_t>(task.run)] = std::move(summary);
      } catch (const Error& e) {
        std::lock_guard<std::mutex> lock(errors_mutex);
        errors.push_back(detail::slug(cell.spec) + "/" + cell.label + " run " +
                         std::to_string(task.run) + ": " + e.what());
        return;
      }
    }
  };

  unsigned workers = config.parallelism > 0
                         ? static_cast<unsigned>(config.parallelism)
                         : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(tasks.size()));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (!errors.empty()) throw Error("bench: " + errors.front());

  // Aggregate.
  for (auto& cell : report.cells) {
    double time_sum = 0, iter_sum = 0;
    int counted = 0;
    for (const auto& run : cell.runs) {
      if (run.status == RunStatus::Failed) {
        ++cell.failures;
        continue;
      }
      if (run.status == RunStatus::MaxIterations) ++cell.timeouts;
      time_sum += static_cast<double>(run.wall_ns) * 1e-9;
      iter_sum += run.iterations;
      ++counted;
    }
    if (counted > 0) {
      cell.mean_time_s = time_sum / counted;
      cell.mean_iters = iter_sum / counted;
    }
  }
  return report;
}

// Columns: problem,n,g,algorithm,mean_time,mean_iters,timeouts.
// mean_time is in seconds.
inline std::string report_csv(const BenchReport& report) {
  std::ostringstream out;
  out << "problem,n,g,algorithm,mean_time,mean_iters,timeouts\n";
  for (const auto& cell : report.cells) {
    out << to_string(cell.spec.name) << "," << cell.spec.n << ","
        << to_string(cell.spec.g) << "," << cell.label << ","
        << io::format_double(cell.mean_time_s) << ","
        << io::format_double(cell.mean_iters) << "," << cell.timeouts << "\n";
  }
  return out.str();
}

inline io::json bench_manifest(const BenchReport& report) {
  io::json cells = io::json::array();
  for (const auto& cell : report.cells) {
    io::json statuses = io::json::array();
    for (const auto& run : cell.runs) statuses.push_back(to_string(run.status));
    cells.push_back({{"problem", io::to_json(cell.spec)},
                     {"algorithm", cell.label},
                     {"config", io::to_json(cell.config)},
                     {"mean_time_s", cell.mean_time_s},
                     {"mean_iters", cell.mean_iters},
                     {"timeouts", cell.timeouts},
                     {"failures", cell.failures},
                     {"statuses", statuses}});
  }
  io::json problems = io::json::array();
  for (const auto& spec : report.config.problems) problems.push_back(io::to_json(spec));
  io::json algorithms = io::json::array();
  for (const auto& alg : report.config.algorithms) algorithms.push_back(io::to_json(alg));
  return io::json{{"seed", report.config.seed},
                  {"starts", report.config.starts},
                  {"archive_runs", report.config.archive_runs},
                  {"problems", problems},
                  {"algorithms", algorithms},
                  {"cells", cells}};
}

// Writes report.csv and manifest.json under config.out_dir (run archives
// are written by run_bench itself as runs finish).
inline void write_bench_outputs(const BenchReport& report) {
  if (report.config.out_dir.empty())
    throw ArgumentError("write_bench_outputs: no output directory");
  const std::filesystem::path root(report.config.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) throw IoError("cannot create " + root.string() + ": " + ec.message());
  io::write_text_file((root / "report.csv").string(), report_csv(report));
  io::write_text_file((root / "manifest.json").string(),
                      bench_manifest(report).dump(2) + "\n");
}

// ---- front export --------------------------------------------------------

struct FrontPoint {
  int run = 0;
  RunStatus status = RunStatus::Converged;
  int iterations = 0;
  Vector<double> F;     // final objective vector
  Vector<double> k2_F;  // snapshot at k = 2 (empty when unavailable)
};

// Runs one algorithm from `starts` sampled points and collects the final
// objective vectors (the approximate Pareto front).
inline std::vector<FrontPoint> compute_front(const ProblemSpec& spec,
                                             const SolverConfig<double>& algorithm,
                                             int starts, std::uint64_t seed) {
  BenchConfig bc;
  bc.problems = {spec};
  bc.algorithms = {algorithm};
  bc.starts = starts;
  bc.seed = seed;
  bc.archive_runs = 0;
  const auto report = run_bench(bc);
  std::vector<FrontPoint> front;
  front.reserve(report.cells.front().runs.size());
  int idx = 0;
  for (const auto& run : report.cells.front().runs) {
    FrontPoint fp;
    fp.run = idx++;
    fp.status = run.status;
    fp.iterations = run.iterations;
    fp.F = run.final_F;
    fp.k2_F = run.k2_F;
    front.push_back(std::move(fp));
  }
  return front;
}

inline std::string front_csv(const std::vector<FrontPoint>& front,
                             bool with_snapshot = false) {
  std::ostringstream out;
  const Index m = front.empty() ? 0 : front.front().F.size();
  out << "run,status,iterations";
  for (Index i = 1; i <= m; ++i) out << ",F_" << i;
  if (with_snapshot)
    for (Index i = 1; i <= m; ++i) out << ",k2_F_" << i;
  out << "\n";
  for (const auto& fp : front) {
    out << fp.run << "," << to_string(fp.status) << "," << fp.iterations;
    for (Index i = 0; i < m; ++i) out << "," << io::format_double(fp.F[i]);
    if (with_snapshot) {
      for (Index i = 0; i < m; ++i)
        out << ","
            << (fp.k2_F.size() == m ? io::format_double(fp.k2_F[i]) : std::string());
    }
    out << "\n";
  }
  return out.str();
}

// ---- archived-run diagnostics ---------------------------------------------

// Re-derives the convergence diagnostics of an archived run: the energy
// series against the run's own final iterate (extrapolated algorithms
// only), the rate fit of sigma_k, the weighted step sums with their
// theoretical bound, and the Cauchy tail check.
inline io::json diagnose_run(const io::ArchivedRun& run) {
  const auto problem = build_problem<double>(run.spec);
  if (run.trace.iterations() == 0)
    throw InsufficientDataError("diagnose: archived trace is empty");
  const Vector<double> z = run.trace.iterate(run.trace.iterations());

  io::json out{{"problem", io::to_json(run.spec)},
               {"algorithm", to_string(run.config.algorithm)},
               {"status", to_string(run.status)},
               {"iterations", run.trace.iterations()}};

  const bool extrapolated = run.config.algorithm == Algorithm::FPGMOP ||
                            run.config.algorithm == Algorithm::InexactFPGMOP;
  if (extrapolated) {
    const double ell = run.trace.records.back().ell;
    const auto energy =
        energy_series(problem, run.trace, run.config.alpha, ell, z);
    const double step_sum = weighted_step_sum(run.trace);
    const double step_bound =
        weighted_step_sum_bound(run.config.alpha, ell, energy.bound_M);
    out["energy"] = {{"checked", true},
                     {"ell", ell},
                     {"violations", energy.violations},
                     {"first_violation_k", energy.first_violation
                                               ? io::json(*energy.first_violation)
                                               : io::json(nullptr)},
                     {"lemma_violations", energy.lemma_violations},
                     {"max_energy", energy.max_energy},
                     {"bound_M", energy.bound_M},
                     {"bound_holds", energy.max_energy <=
                                         energy.bound_M * (1.0 + 1e-9) + 1e-12},
                     {"weighted_step_sum", step_sum},
                     {"weighted_step_sum_bound", step_bound}};
  } else {
    out["energy"] = {{"checked", false}};
  }

  const auto sig = sigma_series(problem, run.trace, z);
  try {
    const auto fit = rate_fit(sig);
    out["rate"] = {{"slope", fit.slope},
                   {"r_squared", fit.r_squared},
                   {"points", fit.points}};
  } catch (const InsufficientDataError& e) {
    out["rate"] = {{"error", e.what()}};
  }

  const auto tail = cauchy_tail_check(problem, run.trace, z);
  out["cauchy_tail"] = {{"applicable", tail.applicable},
                        {"fluctuation", tail.fluctuation},
                        {"baseline", tail.baseline},
                        {"ok", tail.ok}};

  const auto window = k2_sigma_window_check(problem, run.trace, z);
  out["k2_sigma_window"] = {{"applicable", window.applicable},
                            {"early_max", window.early_max},
                            {"late_max", window.late_max},
                            {"ok", window.ok}};
  return out;
}

}  // namespace mopg
