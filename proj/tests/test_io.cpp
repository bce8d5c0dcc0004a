#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "mopg/solver.hpp"
#include "mopg/testbed.hpp"
#include "mopg/trace_io.hpp"

using mopg::Algorithm;
using mopg::EllMode;
using mopg::ErrorSchedule;
using mopg::GVariant;
using mopg::ProblemName;
using mopg::ProblemSpec;
using mopg::SolverConfig;
using mopg::StopRule;
using mopg::Vector;
namespace io = mopg::io;

namespace {

// A short real run to serialize.
mopg::RunResult<double> sample_run() {
  ProblemSpec spec;
  spec.name = ProblemName::JOS1;
  spec.n = 2;
  spec.g = GVariant::L1Shifted;
  const auto problem = mopg::build_problem<double>(spec);
  SolverConfig<double> config;
  config.algorithm = Algorithm::FPGMOP;
  Vector<double> x0(2);
  x0 << 3.0, -1.5;
  return mopg::run(problem, config, x0);
}

class TempPath {
 public:
  explicit TempPath(const std::string& suffix) {
    static int counter = 0;
    path_ = (std::filesystem::temp_directory_path() /
             ("mopg_io_" + std::to_string(counter++) + suffix))
                .string();
  }
  ~TempPath() { std::filesystem::remove_all(path_); }
  const std::string& str() const { return path_; }

 private:
  std::string path_;
};

void write(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

}  // namespace

TEST_CASE("format_double survives a parse round-trip") {
  // 5e-324 is the smallest subnormal: std::stod refuses it outright, which
  // is exactly why the readers go through io::parse_double.
  for (double v : {1.0 / 3, 1e-11, -0.0, 2001.0, 6.02e23, 5e-324})
    CHECK(io::parse_double(io::format_double(v)) == v);
  CHECK_THROWS_AS(io::parse_double(""), mopg::IoError);
  CHECK_THROWS_AS(io::parse_double("1.5x"), mopg::IoError);
  CHECK_THROWS_AS(io::parse_double("1e999"), mopg::IoError);
}

TEST_CASE("trace and iterates CSV round-trip bitwise") {
  const auto result = sample_run();
  REQUIRE(result.trace.iterations() >= 2);

  TempPath trace_path(".csv");
  io::write_text_file(trace_path.str(), io::trace_csv(result.trace));
  auto trace = io::read_trace_csv(trace_path.str());
  REQUIRE(trace.records.size() == result.trace.records.size());
  for (std::size_t j = 0; j < trace.records.size(); ++j) {
    const auto& a = trace.records[j];
    const auto& b = result.trace.records[j];
    CHECK(a.k == b.k);
    CHECK((a.F - b.F).norm() == 0.0);
    CHECK(a.step_norm == b.step_norm);
    CHECK(a.residual == b.residual);
    CHECK(a.ell == b.ell);
    CHECK(a.gap == b.gap);
    CHECK(a.inner_iters == b.inner_iters);
    CHECK(a.wall_ns == b.wall_ns);
  }

  TempPath iter_path(".csv");
  io::write_text_file(iter_path.str(), io::iterates_csv(result.trace));
  io::read_iterates_csv(iter_path.str(), trace);
  CHECK((trace.x0 - result.trace.x0).norm() == 0.0);
  REQUIRE(trace.iterates.size() == result.trace.iterates.size());
  for (std::size_t j = 0; j < trace.iterates.size(); ++j)
    CHECK((trace.iterates[j] - result.trace.iterates[j]).norm() == 0.0);
}

TEST_CASE("malformed trace files raise IoError with a location") {
  TempPath p(".csv");
  CHECK_THROWS_AS(io::read_trace_csv(p.str()), mopg::IoError);  // missing

  write(p.str(), "");
  CHECK_THROWS_AS(io::read_trace_csv(p.str()), mopg::IoError);  // empty

  write(p.str(), "k,F_1,step_norm\n");
  CHECK_THROWS_AS(io::read_trace_csv(p.str()), mopg::IoError);  // bad header

  const std::string header = "k,F_1,step_norm,residual,ell,gap,inner_iters,wall_ns\n";
  write(p.str(), header + "1,0.5,0.1\n");
  CHECK_THROWS_AS(io::read_trace_csv(p.str()), mopg::IoError);  // field count

  write(p.str(), header + "1,0.5,x,0,1,0,3,9\n");
  try {
    io::read_trace_csv(p.str());
    FAIL("expected IoError");
  } catch (const mopg::IoError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }

  write(p.str(), header + "1,0.5,0.1,0,1,0,3,9\n");
  CHECK(io::read_trace_csv(p.str()).records.size() == 1);
}

TEST_CASE("malformed iterates files raise IoError") {
  mopg::IterationTrace<double> trace;
  TempPath p(".csv");

  write(p.str(), "");
  CHECK_THROWS_AS(io::read_iterates_csv(p.str(), trace), mopg::IoError);

  write(p.str(), "k,x_1\n");
  CHECK_THROWS_AS(io::read_iterates_csv(p.str(), trace), mopg::IoError);  // no rows

  write(p.str(), "k,x_1\n0,1.0\n2,3.0\n");
  CHECK_THROWS_AS(io::read_iterates_csv(p.str(), trace), mopg::IoError);  // gap in k

  write(p.str(), "k,x_1\n0,1.0\n1,oops\n");
  CHECK_THROWS_AS(io::read_iterates_csv(p.str(), trace), mopg::IoError);

  // One start row + one iterate row, but the trace claims two records.
  mopg::IterationRecord<double> rec;
  rec.k = 1;
  trace.records = {rec, rec};
  trace.records[1].k = 2;
  write(p.str(), "k,x_1\n0,1.0\n1,2.0\n");
  CHECK_THROWS_AS(io::read_iterates_csv(p.str(), trace), mopg::IoError);
}

TEST_CASE("problem specs round-trip through JSON") {
  ProblemSpec spec;
  spec.name = ProblemName::TOI4;
  spec.n = 4;
  spec.g = GVariant::L1Shifted;
  auto back = io::problem_spec_from_json(io::to_json(spec));
  CHECK(back.name == spec.name);
  CHECK(back.n == spec.n);
  CHECK(back.g == spec.g);
  CHECK(!back.box.has_value());

  Vector<double> lo(2), hi(2);
  lo << -1.0, 0.5;
  hi << 1.0, 2.5;
  spec.name = ProblemName::JOS1;
  spec.n = 2;
  spec.g = GVariant::Zero;
  spec.box = {lo, hi};
  back = io::problem_spec_from_json(io::to_json(spec));
  REQUIRE(back.box.has_value());
  CHECK((back.box->first - lo).norm() == 0.0);
  CHECK((back.box->second - hi).norm() == 0.0);

  CHECK_THROWS_AS(io::problem_spec_from_json(io::json{{"name", "JOS1"}}),
                  mopg::ConfigError);  // missing n/g
  CHECK_THROWS_AS(io::problem_spec_from_json(
                      io::json{{"name", "NOPE"}, {"n", 2}, {"g", "zero"}}),
                  mopg::ConfigError);
}

TEST_CASE("solver configs round-trip through JSON") {
  SolverConfig<double> config;
  config.algorithm = Algorithm::InexactFPGMOP;
  config.alpha = 3.1;
  config.ell_mode = EllMode::Exact;
  config.ell = 7.5;
  config.ell_init = 2.0;
  config.ell_factor = 3.0;
  config.eps_stop = 1e-9;
  config.k_max = 1234;
  config.stop_rule = StopRule::Residual;
  config.seed = 42;
  config.accspg_classical = true;
  config.error_schedule = ErrorSchedule<double>::power_law(1e-3, 3.0);

  const auto back = io::solver_config_from_json(io::to_json(config));
  CHECK(back.algorithm == config.algorithm);
  CHECK(back.alpha == config.alpha);
  CHECK(back.ell_mode == config.ell_mode);
  REQUIRE(back.ell.has_value());
  CHECK(*back.ell == 7.5);
  CHECK(back.ell_init == config.ell_init);
  CHECK(back.ell_factor == config.ell_factor);
  CHECK(back.eps_stop == config.eps_stop);
  CHECK(back.k_max == config.k_max);
  CHECK(back.stop_rule == config.stop_rule);
  CHECK(back.seed == config.seed);
  CHECK(back.accspg_classical == config.accspg_classical);
  REQUIRE(back.error_schedule.has_value());
  CHECK(back.error_schedule->kind == ErrorSchedule<double>::Kind::PowerLaw);
  CHECK(back.error_schedule->c == 1e-3);
  CHECK(back.error_schedule->p == 3.0);

  // Defaults survive an empty object; junk values do not parse.
  const auto defaults = io::solver_config_from_json(io::json::object());
  CHECK(defaults.algorithm == Algorithm::FPGMOP);
  CHECK(defaults.stop_rule == StopRule::StepNorm);
  CHECK_THROWS_AS(io::solver_config_from_json(io::json{{"algorithm", "SGD"}}),
                  mopg::ConfigError);
  CHECK_THROWS_AS(io::solver_config_from_json(io::json{{"ell_mode", "auto"}}),
                  mopg::ConfigError);
  CHECK_THROWS_AS(io::solver_config_from_json(io::json{{"stop_rule", "gap"}}),
                  mopg::ConfigError);
  CHECK_THROWS_AS(io::solver_config_from_json(io::json{{"alpha", "four"}}),
                  mopg::ConfigError);
  CHECK_THROWS_AS(
      io::error_schedule_from_json(io::json{{"kind", "custom"}}),
      mopg::ConfigError);  // custom schedules cannot be reconstructed
}

TEST_CASE("run archives round-trip spec, config and trace") {
  const auto result = sample_run();
  ProblemSpec spec;
  spec.name = ProblemName::JOS1;
  spec.n = 2;
  spec.g = GVariant::L1Shifted;
  SolverConfig<double> config;
  config.algorithm = Algorithm::FPGMOP;

  TempPath dir("");
  io::write_run_archive(dir.str(), spec, config, result);

  std::ifstream manifest_in(std::filesystem::path(dir.str()) / "manifest.json");
  const auto manifest = io::json::parse(manifest_in);
  CHECK(manifest.at("status").get<std::string>() == "converged");
  CHECK(manifest.at("iterations").get<int>() == result.iterations());
  CHECK(manifest.at("final_residual").get<double>() ==
        result.trace.records.back().residual);

  const auto run = io::read_run_archive(dir.str());
  CHECK(run.spec.name == spec.name);
  CHECK(run.spec.g == spec.g);
  CHECK(run.config.algorithm == config.algorithm);
  CHECK(run.status == mopg::RunStatus::Converged);
  CHECK(run.trace.iterations() == result.trace.iterations());
  CHECK((run.trace.iterate(run.trace.iterations()) - result.x).norm() == 0.0);

  CHECK_THROWS_AS(io::read_run_archive("/nonexistent/run0"), mopg::IoError);
}
