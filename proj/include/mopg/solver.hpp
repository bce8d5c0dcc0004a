#pragma once

#include <Eigen/Core>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mopg/errors.hpp"
#include "mopg/problem.hpp"
#include "mopg/random.hpp"
#include "mopg/subproblem.hpp"

namespace mopg {

enum class Algorithm { SPG, AccSPG, FPGMOP, InexactFPGMOP };
enum class EllMode { Exact, Backtracking };
enum class StopRule { StepNorm, Residual };
enum class RunStatus { Converged, MaxIterations, Failed };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::SPG: return "SPG";
    case Algorithm::AccSPG: return "AccSPG";
    case Algorithm::FPGMOP: return "FPGMOP";
    case Algorithm::InexactFPGMOP: return "InexactFPGMOP";
  }
  return "?";
}

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "converged";
    case RunStatus::MaxIterations: return "max_iterations";
    case RunStatus::Failed: return "failed";
  }
  return "?";
}

// Magnitude schedule ||eps_k|| for inexact runs.  PowerLaw(c, p) gives
// c / k^p; the schedule is summable in the sense required by the inexact
// convergence theory (sum_k (k + alpha - 1) ||eps_k|| < infinity) exactly
// when p > 2.
template <typename Scalar>
struct ErrorSchedule {
  enum class Kind { Zero, PowerLaw, Custom };

  Kind kind = Kind::Zero;
  Scalar c = Scalar(0);
  Scalar p = Scalar(0);
  std::function<Scalar(int)> magnitude;  // Custom only

  static ErrorSchedule zero() { return {}; }

  static ErrorSchedule power_law(Scalar c, Scalar p) {
    if (!(c >= Scalar(0))) throw ArgumentError("ErrorSchedule: c must be >= 0");
    ErrorSchedule s;
    s.kind = Kind::PowerLaw;
    s.c = c;
    s.p = p;
    return s;
  }

  static ErrorSchedule custom(std::function<Scalar(int)> fn) {
    if (!fn) throw ArgumentError("ErrorSchedule: missing callback");
    ErrorSchedule s;
    s.kind = Kind::Custom;
    s.magnitude = std::move(fn);
    return s;
  }

  Scalar magnitude_at(int k) const {
    if (k < 1) throw ArgumentError("ErrorSchedule: k must be >= 1");
    switch (kind) {
      case Kind::Zero: return Scalar(0);
      case Kind::PowerLaw: return c / std::pow(Scalar(k), p);
      case Kind::Custom: return magnitude(k);
    }
    return Scalar(0);
  }

  // Whether sum_k (k + alpha - 1) ||eps_k|| converges; unknown for Custom.
  std::optional<bool> summable() const {
    switch (kind) {
      case Kind::Zero: return true;
      case Kind::PowerLaw: return c == Scalar(0) || p > Scalar(2);
      case Kind::Custom: return std::nullopt;
    }
    return std::nullopt;
  }
};

// eps_k: a uniformly random direction scaled to the scheduled magnitude.
template <typename Scalar>
Vector<Scalar> generate_error(const ErrorSchedule<Scalar>& schedule, int k,
                              Index n, rng::Stream& stream) {
  const Scalar mag = schedule.magnitude_at(k);
  if (mag == Scalar(0)) return Vector<Scalar>::Zero(n);
  return mag * stream.template unit_vector<Scalar>(n);
}

template <typename Scalar>
struct SolverConfig {
  Algorithm algorithm = Algorithm::FPGMOP;
  Scalar alpha = Scalar(4);          // extrapolation parameter, > 3
  EllMode ell_mode = EllMode::Exact;
  std::optional<Scalar> ell;         // Exact: override (>= problem L)
  Scalar ell_init = Scalar(1);       // Backtracking start
  Scalar ell_factor = Scalar(2);     // Backtracking growth
  Scalar eps_stop = Scalar(1e-11);
  int k_max = 2000;
  StopRule stop_rule = StopRule::StepNorm;
  std::optional<ErrorSchedule<Scalar>> error_schedule;  // InexactFPGMOP only
  std::uint64_t seed = 0;            // drives the error directions
  bool accspg_classical = false;     // (t_k-1)/t_{k+1} instead of (t_k-1)/t_k
  Scalar subproblem_tol_gap = Scalar(-1);
  int subproblem_max_inner = 200;
};

// Extrapolation coefficient gamma_k used to form y^k = x^{k-1} +
// gamma_k (x^{k-1} - x^{k-2}); always in [0, 1).  The update producing
// x^{k+1} reads y^{k+1} = x^k + gamma_{k+1} (x^k - x^{k-1}) with the
// coefficient indexed by the iteration that produced x^k, so the first
// two steps carry no momentum:
//   SPG      0
//   AccSPG   (t_{k-1} - 1)/t_{k-1} with t_1 = 1,
//            t_{j+1} = sqrt(t_j^2 + 1/4) + 1/2
//            (the classical variant divides by t_k instead)
//   FPGMOP   (k - 2)/(k + alpha - 2)
// The energy decrease behind the O(1/k^2) theory telescopes only with
// this exact pairing; shifting the schedule by one step breaks it.
template <typename Scalar>
Scalar extrapolation_coefficient(Algorithm algorithm, int k, Scalar alpha,
                                 bool accspg_classical = false) {
  if (k < 1) throw ArgumentError("extrapolation_coefficient: k must be >= 1");
  switch (algorithm) {
    case Algorithm::SPG:
      return Scalar(0);
    case Algorithm::AccSPG: {
      if (k == 1) return Scalar(0);
      Scalar t = Scalar(1);  // t_1
      for (int j = 1; j < k - 1; ++j)
        t = std::sqrt(t * t + Scalar(0.25)) + Scalar(0.5);
      if (!accspg_classical) return (t - Scalar(1)) / t;
      const Scalar t_next = std::sqrt(t * t + Scalar(0.25)) + Scalar(0.5);
      return (t - Scalar(1)) / t_next;
    }
    case Algorithm::FPGMOP:
    case Algorithm::InexactFPGMOP:
      return k < 3 ? Scalar(0)
                   : Scalar(k - 2) / (Scalar(k) + alpha - Scalar(2));
  }
  throw ArgumentError("extrapolation_coefficient: unknown algorithm");
}

template <typename Scalar>
struct IterationRecord {
  int k = 0;
  Vector<Scalar> F;          // F(x^k)
  Scalar step_norm = Scalar(0);  // ||x^k - x^{k-1}||_2
  Scalar residual = Scalar(0);   // ||p - y^k||_inf
  Scalar ell = Scalar(0);
  Scalar gap = Scalar(0);
  int inner_iters = 0;
  std::int64_t wall_ns = 0;
};

template <typename Scalar>
struct IterationTrace {
  Vector<Scalar> x0;
  std::vector<IterationRecord<Scalar>> records;
  std::vector<Vector<Scalar>> iterates;  // x^1 .. x^K, aligned with records

  int iterations() const { return static_cast<int>(records.size()); }

  const Vector<Scalar>& iterate(int k) const {  // x^k, k = 0..K
    if (k < 0 || k > iterations())
      throw ArgumentError("IterationTrace: iterate index out of range");
    return k == 0 ? x0 : iterates[static_cast<std::size_t>(k - 1)];
  }
};

template <typename Scalar>
struct RunResult {
  Vector<Scalar> x;  // final iterate
  IterationTrace<Scalar> trace;
  RunStatus status = RunStatus::Converged;
  std::string message;
  std::int64_t total_wall_ns = 0;

  int iterations() const { return trace.iterations(); }
};

template <typename Scalar>
void validate_config(const MultiObjectiveProblem<Scalar>& problem,
                     const SolverConfig<Scalar>& config) {
  const bool momentum_alpha = config.algorithm == Algorithm::FPGMOP ||
                              config.algorithm == Algorithm::InexactFPGMOP;
  if (momentum_alpha && !(config.alpha > Scalar(3)))
    throw ConfigError("solver: alpha must be > 3");
  if (config.algorithm == Algorithm::InexactFPGMOP) {
    if (!config.error_schedule)
      throw ConfigError("solver: InexactFPGMOP requires an error schedule");
    if (config.ell_mode != EllMode::Exact)
      throw ConfigError("solver: inexact runs fix ell = L (Exact mode only)");
    if (!problem.lipschitz_max())
      throw ConfigError("solver: inexact runs need a known Lipschitz constant");
  } else if (config.error_schedule) {
    throw ConfigError("solver: error schedule is only valid for InexactFPGMOP");
  }
  if (!(config.eps_stop > Scalar(0)))
    throw ConfigError("solver: eps_stop must be > 0");
  if (config.k_max < 1) throw ConfigError("solver: k_max must be >= 1");
  if (config.ell_mode == EllMode::Exact) {
    const auto L = problem.lipschitz_max();
    if (!config.ell && !L)
      throw ConfigError(
          "solver: problem has no known Lipschitz constant; use Backtracking "
          "or set ell explicitly");
    if (config.ell) {
      if (!(*config.ell > Scalar(0)))
        throw ConfigError("solver: ell must be > 0");
      if (L && *config.ell < *L * (Scalar(1) - Scalar(1e-12)))
        throw ConfigError("solver: ell must be >= max_i L_i");
    }
  } else {
    if (!(config.ell_init > Scalar(0)) || !(config.ell_factor > Scalar(1)))
      throw ConfigError("solver: backtracking needs ell_init > 0, factor > 1");
  }
}

// Main iteration, shared by all four drivers:
//
//   y^k     = x^{k-1} + gamma_k (x^{k-1} - x^{k-2}),   x^{-1} := x^0
//   x^k     = argmin of the scalarized subproblem at (x^{k-1}, y^k)
//
// stopping when ||x^k - x^{k-1}|| <= eps_stop (StepNorm) or when the
// subproblem residual ||x^k - y^k||_inf <= eps_stop (Residual), or at
// k_max.  A numerical failure inside the subproblem ends the run with
// status Failed and the trace collected so far.
template <typename Scalar>
RunResult<Scalar> run(const MultiObjectiveProblem<Scalar>& problem,
                      const SolverConfig<Scalar>& config,
                      const Vector<Scalar>& x0) {
  validate(problem);
  validate_config(problem, config);
  if (x0.size() != problem.n) throw ArgumentError("run: x0 size != n");
  {
    const auto F0 = eval_F(problem, x0);
    for (const auto& Fi : F0)
      if (!Fi.is_finite())
        throw ArgumentError("run: F(x0) must be finite (start inside dom g)");
  }

  const bool inexact = config.algorithm == Algorithm::InexactFPGMOP;
  Scalar ell = Scalar(0);
  if (config.ell_mode == EllMode::Exact)
    ell = config.ell ? *config.ell : *problem.lipschitz_max();
  Scalar ell_current = config.ell_init;  // backtracking state, never decreases

  rng::Stream stream(config.seed);

  RunResult<Scalar> result;
  result.trace.x0 = x0;
  result.x = x0;
  result.status = RunStatus::MaxIterations;

  Vector<Scalar> x_prev = x0;
  Vector<Scalar> x_curr = x0;
  Scalar t_acc = Scalar(1);  // AccSPG t_{k-1}, maintained incrementally

  const auto run_start = std::chrono::steady_clock::now();
  for (int k = 1; k <= config.k_max; ++k) {
    const auto iter_start = std::chrono::steady_clock::now();

    Scalar gamma = Scalar(0);
    switch (config.algorithm) {
      case Algorithm::SPG:
        break;
      case Algorithm::AccSPG: {
        // t_acc enters iteration k holding t_{k-1} (t_1 = 1), so the
        // first advance happens after the second step.
        if (k >= 2) {
          const Scalar t_next =
              std::sqrt(t_acc * t_acc + Scalar(0.25)) + Scalar(0.5);
          gamma = (t_acc - Scalar(1)) / (config.accspg_classical ? t_next : t_acc);
          t_acc = t_next;
        }
        break;
      }
      case Algorithm::FPGMOP:
      case Algorithm::InexactFPGMOP:
        gamma = k < 3 ? Scalar(0)
                      : Scalar(k - 2) / (Scalar(k) + config.alpha - Scalar(2));
        break;
    }

    SubproblemInput<Scalar> input;
    input.x = x_curr;
    input.y = x_curr + gamma * (x_curr - x_prev);
    input.tol_gap = config.subproblem_tol_gap;
    input.max_inner = config.subproblem_max_inner;
    if (inexact)
      input.grad_perturbation =
          generate_error(*config.error_schedule, k, problem.n, stream);

    SubproblemSolution<Scalar> sol;
    Scalar ell_used = ell;
    try {
      if (config.ell_mode == EllMode::Backtracking) {
        auto [accepted, s] = backtrack_ell(problem, input, ell_current,
                                           config.ell_factor);
        ell_current = accepted;
        ell_used = accepted;
        sol = std::move(s);
      } else {
        input.ell = ell;
        sol = solve_subproblem(problem, input);
      }

      IterationRecord<Scalar> rec;
      rec.k = k;
      rec.F = eval_F_finite(problem, sol.p);
      if (!rec.F.allFinite())
        throw NumericalError("run: non-finite objective value at iterate");
      rec.step_norm = (sol.p - x_curr).norm();
      rec.residual = stationarity_residual(sol, input.y);
      rec.ell = ell_used;
      rec.gap = sol.gap;
      rec.inner_iters = sol.inner_iters;
      rec.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now() - iter_start)
                        .count();
      result.trace.records.push_back(std::move(rec));
      result.trace.iterates.push_back(sol.p);
    } catch (const NumericalError& e) {
      result.status = RunStatus::Failed;
      result.message = e.what();
      break;
    } catch (const UnsupportedError& e) {
      result.status = RunStatus::Failed;
      result.message = e.what();
      break;
    }

    x_prev = x_curr;
    x_curr = sol.p;
    result.x = x_curr;

    const auto& rec = result.trace.records.back();
    const Scalar stop_value =
        config.stop_rule == StopRule::StepNorm ? rec.step_norm : rec.residual;
    if (stop_value <= config.eps_stop) {
      result.status = RunStatus::Converged;
      break;
    }
  }
  result.total_wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                             std::chrono::steady_clock::now() - run_start)
                             .count();
  return result;
}

}  // namespace mopg
