// Command-line front end: benchmark campaigns, Pareto front export, and
// post-hoc diagnostics of archived runs.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mopg/bench.hpp"
#include "mopg/trace_io.hpp"

namespace {

mopg::BenchConfig load_bench_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mopg::IoError("cannot open config file: " + path);
  mopg::io::json j;
  try {
    in >> j;
  } catch (const mopg::io::json::exception& e) {
    throw mopg::ConfigError(path + ": " + e.what());
  }
  mopg::BenchConfig config;
  try {
    if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("starts")) config.starts = j["starts"].get<int>();
    if (j.contains("out")) config.out_dir = j["out"].get<std::string>();
    if (j.contains("archive_runs")) config.archive_runs = j["archive_runs"].get<int>();
    if (j.contains("parallelism")) config.parallelism = j["parallelism"].get<int>();
    for (const auto& p : j.at("problems"))
      config.problems.push_back(mopg::io::problem_spec_from_json(p));
    for (const auto& a : j.at("algorithms"))
      config.algorithms.push_back(mopg::io::solver_config_from_json(a));
  } catch (const mopg::io::json::exception& e) {
    throw mopg::ConfigError(path + ": " + e.what());
  }
  return config;
}

int cmd_bench(const std::string& config_path, const std::string& out,
              std::optional<std::uint64_t> seed, std::optional<int> starts,
              std::optional<double> alpha, std::optional<int> parallel) {
  auto config = load_bench_config(config_path);
  if (!out.empty()) config.out_dir = out;
  if (seed) config.seed = *seed;
  if (starts) config.starts = *starts;
  if (parallel) config.parallelism = *parallel;
  if (alpha)
    for (auto& alg : config.algorithms) alg.alpha = *alpha;
  if (config.out_dir.empty())
    throw mopg::ConfigError("bench: no output directory (config \"out\" or --out)");

  const auto report = mopg::run_bench(config);
  mopg::write_bench_outputs(report);

  int timeouts = 0, failures = 0;
  for (const auto& cell : report.cells) {
    timeouts += cell.timeouts;
    failures += cell.failures;
  }
  std::cout << "wrote " << config.out_dir << "/report.csv (" << report.cells.size()
            << " cells, " << config.starts << " starts";
  if (timeouts > 0) std::cout << ", " << timeouts << " timeouts";
  std::cout << ")\n";
  if (failures > 0)
    std::cerr << "warning: " << failures << " runs failed; see manifest.json\n";
  return 0;
}

int cmd_front(const std::string& problem, long n, const std::string& g,
              const std::string& algorithm, double alpha, int starts,
              std::uint64_t seed, bool snapshot, const std::string& out) {
  mopg::ProblemSpec spec;
  spec.name = mopg::problem_name_from_string(problem);
  spec.n = n;
  spec.g = mopg::g_variant_from_string(g);

  mopg::SolverConfig<double> solver;
  solver.algorithm = mopg::io::algorithm_from_string(algorithm);
  solver.alpha = alpha;
  if (solver.algorithm == mopg::Algorithm::InexactFPGMOP)
    throw mopg::ConfigError("front: inexact runs need a bench config file");

  const auto front = mopg::compute_front(spec, solver, starts, seed);
  mopg::io::write_text_file(out, mopg::front_csv(front, snapshot));
  std::cout << "wrote " << out << " (" << front.size() << " points)\n";
  return 0;
}

int cmd_diagnose(const std::string& run_dir, const std::string& out) {
  const auto run = mopg::io::read_run_archive(run_dir);
  const auto report = mopg::diagnose_run(run);
  if (out.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    mopg::io::write_text_file(out, report.dump(2) + "\n");
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int cmd_list_problems() {
  std::cout << "name    m  n           g variants       default box\n"
            << "JOS1    2  any >= 1    zero, l1         [-2, 4]^n\n"
            << "TOI4    2  4           zero, l1         [-2,-0.5]x[0.5,2]x[-2,2]^2\n"
            << "TRIDIA  3  3           zero, l1         [-1, 1]^3\n"
            << "FDS     3  any >= 1    zero, l1         [-2, 2]^n   (backtracking)\n"
            << "SD      2  4           indicator        [1,3]x[sqrt(2),3]^2x[1,3]\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proximal gradient methods for composite multiobjective optimization"};
  app.require_subcommand(1);

  // bench
  auto* bench = app.add_subcommand("bench", "Run a benchmark campaign from a config file");
  std::string bench_config, bench_out;
  std::optional<std::uint64_t> bench_seed;
  std::optional<int> bench_starts, bench_parallel;
  std::optional<double> bench_alpha;
  bench->add_option("--config", bench_config, "Benchmark config (JSON)")->required();
  bench->add_option("--out", bench_out, "Output directory (overrides config)");
  bench->add_option("--seed", bench_seed, "Master seed (overrides config)");
  bench->add_option("--starts", bench_starts, "Starts per problem (overrides config)");
  bench->add_option("--alpha", bench_alpha, "Extrapolation alpha for all algorithms");
  bench->add_option("--parallel", bench_parallel, "Worker threads (0 = hardware)");

  // front
  auto* front = app.add_subcommand("front", "Export the approximate Pareto front");
  std::string front_problem, front_g = "zero", front_alg = "FPGMOP", front_out;
  long front_n = 5;
  double front_alpha = 4.0;
  int front_starts = 100;
  std::uint64_t front_seed = 0;
  bool front_snapshot = false;
  front->add_option("--problem", front_problem, "Problem name")->required();
  front->add_option("--n", front_n, "Dimension");
  front->add_option("--g", front_g, "Nonsmooth variant (zero|l1|indicator)");
  front->add_option("--algorithm", front_alg, "SPG|AccSPG|FPGMOP");
  front->add_option("--alpha", front_alpha, "Extrapolation alpha");
  front->add_option("--starts", front_starts, "Number of starts");
  front->add_option("--seed", front_seed, "Seed");
  front->add_flag("--snapshot", front_snapshot, "Also export the k = 2 objective rows");
  front->add_option("--out", front_out, "Output CSV path")->required();

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "Convergence diagnostics of an archived run");
  std::string diag_run, diag_out;
  diagnose->add_option("--run", diag_run, "Run archive directory")->required();
  diagnose->add_option("--out", diag_out, "Output JSON path (default: stdout)");

  auto* list = app.add_subcommand("list-problems", "List the built-in problems");

  CLI11_PARSE(app, argc, argv);

  try {
    if (bench->parsed())
      return cmd_bench(bench_config, bench_out, bench_seed, bench_starts,
                       bench_alpha, bench_parallel);
    if (front->parsed())
      return cmd_front(front_problem, front_n, front_g, front_alg, front_alpha,
                       front_starts, front_seed, front_snapshot, front_out);
    if (diagnose->parsed()) return cmd_diagnose(diag_run, diag_out);
    if (list->parsed()) return cmd_list_problems();
  } catch (const mopg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
