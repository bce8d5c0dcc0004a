#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mopg/prox.hpp"
#include "mopg/subproblem.hpp"
#include "mopg/testbed.hpp"
#include "toy_instances.hpp"

using mopg::GVariant;
using mopg::Index;
using mopg::MultiObjectiveProblem;
using mopg::NonsmoothPart;
using mopg::ProblemName;
using mopg::ProblemSpec;
using mopg::SmoothPart;
using mopg::SubproblemInput;
using mopg::Vector;

namespace {

ProblemSpec spec_of(ProblemName name, Index n, GVariant g) {
  ProblemSpec s;
  s.name = name;
  s.n = n;
  s.g = g;
  return s;
}

// Affine two-objective instance with constant gradients (+1, -1) on R^1.
MultiObjectiveProblem<double> affine_pair() {
  MultiObjectiveProblem<double> problem;
  problem.name = "affine";
  problem.n = 1;
  SmoothPart<double> f1, f2;
  f1.eval = [](const Vector<double>& x) { return x[0]; };
  f1.grad = [](const Vector<double>& x) { return Vector<double>::Ones(x.size()); };
  f1.lipschitz = 0.0;
  f2.eval = [](const Vector<double>& x) { return -x[0]; };
  f2.grad = [](const Vector<double>& x) -> Vector<double> {
    return -Vector<double>::Ones(x.size());
  };
  f2.lipschitz = 0.0;
  problem.smooth = {f1, f2};
  problem.nonsmooth = {NonsmoothPart<double>::zero(), NonsmoothPart<double>::zero()};
  problem.domain_lo = Vector<double>::Constant(1, -1.0);
  problem.domain_hi = Vector<double>::Constant(1, 1.0);
  return problem;
}

}  // namespace

TEST_CASE("balanced affine pair: z = y and D = 0 at lambda = (1/2, 1/2)") {
  const auto problem = affine_pair();
  SubproblemInput<double> input;
  input.x = Vector<double>::Constant(1, 0.3);
  input.y = input.x;
  input.ell = 1.0;
  Vector<double> lambda(2);
  lambda << 0.5, 0.5;
  const auto ev = mopg::dual_value_and_primal(problem, input, lambda);
  CHECK(ev.z[0] == doctest::Approx(input.y[0]));
  CHECK(ev.dual_value == doctest::Approx(0.0));
  // The gradients cancel, so the solved subproblem also sits at y.
  const auto sol = mopg::solve_subproblem(problem, input);
  CHECK(std::abs(sol.theta) < 1e-10);
  CHECK(mopg::stationarity_residual(sol, input.y) < 1e-10);
}

TEST_CASE("m = 1 reduces to a single prox-gradient step") {
  mopg::rng::Stream stream(3);
  for (int rep = 0; rep < 10; ++rep) {
    MultiObjectiveProblem<double> problem;
    problem.n = 2;
    problem.name = "single";
    problem.smooth = {toys::random_gentle_quadratic(stream, 2)};
    problem.nonsmooth = {NonsmoothPart<double>::scaled_shifted_l1(
        stream.uniform(0.0, 1.0), stream.uniform_vector<double>(2, -1.0, 1.0))};
    problem.domain_lo = Vector<double>::Constant(2, -1.0);
    problem.domain_hi = Vector<double>::Constant(2, 1.0);

    SubproblemInput<double> input;
    input.x = stream.uniform_vector<double>(2, -1.0, 1.0);
    input.y = stream.uniform_vector<double>(2, -1.0, 1.0);
    input.ell = stream.uniform(0.5, 2.0);

    const auto sol = mopg::solve_subproblem(problem, input);
    const Vector<double> a =
        input.y - problem.smooth[0].grad(input.y) / input.ell;
    const Vector<double> expected =
        mopg::prox_single(problem.nonsmooth[0], a, 1.0 / input.ell);
    CHECK((sol.p - expected).norm() < 1e-14);
    CHECK(sol.inner_iters == 0);
    CHECK(sol.converged);
  }
}

TEST_CASE("theta is nonpositive at x = y and monotone in ell") {
  for (int idx = 0; idx < 12; ++idx) {
    auto toy = toys::make_toy_instance(99, idx);
    toy.input.y = toy.input.x;  // theta <= 0 requires the model centered at x
    auto input = toy.input;
    const auto sol = mopg::solve_subproblem(toy.problem, input);
    CHECK(sol.theta <= 1e-12);

    auto lo = input, hi = input;
    lo.ell = 0.8 * input.ell;
    hi.ell = 2.5 * input.ell;
    const auto sol_lo = mopg::solve_subproblem(toy.problem, lo);
    const auto sol_hi = mopg::solve_subproblem(toy.problem, hi);
    CHECK(sol_lo.theta <= sol.theta + 1e-10);
    CHECK(sol.theta <= sol_hi.theta + 1e-10);
  }
}

TEST_CASE("solution satisfies primal optimality against perturbations") {
  mopg::rng::Stream stream(55);
  for (int idx = 0; idx < 12; ++idx) {
    const auto toy = toys::make_toy_instance(123, idx);
    const auto sol = mopg::solve_subproblem(toy.problem, toy.input);
    CHECK(sol.converged);
    CHECK(sol.gap >= -1e-12);
    // theta equals phi at the returned point.
    CHECK(sol.theta ==
          doctest::Approx(toys::phi(toy, sol.p)).epsilon(1e-10));
    // Dual multipliers live on the simplex.
    CHECK(sol.lambda.minCoeff() >= 0.0);
    CHECK(sol.lambda.sum() == doctest::Approx(1.0));
    // No feasible perturbation improves phi.
    const double base = toys::phi(toy, sol.p);
    for (int trial = 0; trial < 40; ++trial) {
      Vector<double> z = sol.p;
      z[static_cast<Index>(stream.next_u64() % toy.problem.n)] +=
          stream.uniform(-0.3, 0.3);
      const double v = toys::phi(toy, z);
      if (std::isfinite(v)) CHECK(base <= v + 1e-9);
    }
  }
}

TEST_CASE("theta matches the dense grid oracle on toy instances") {
  // The full 50-instance sweep runs in the acceptance suite; this is a
  // fast smoke version.
  for (int idx = 0; idx < 6; ++idx) {
    const auto toy = toys::make_toy_instance(2024, idx);
    const auto sol = mopg::solve_subproblem(toy.problem, toy.input);
    const auto grid = toys::grid_theta(toy);
    CHECK(std::abs(sol.theta - grid.value) < 1e-5);
  }
}

TEST_CASE("JOS1: weakly Pareto base points are fixed points") {
  const auto problem =
      mopg::build_problem<double>(spec_of(ProblemName::JOS1, 4, GVariant::Zero));
  for (double t : {0.0, 0.5, 1.3, 2.0}) {
    SubproblemInput<double> input;
    input.x = Vector<double>::Constant(4, t);
    input.y = input.x;
    input.ell = 0.5;  // = 2/n
    const auto sol = mopg::solve_subproblem(problem, input);
    CHECK(mopg::stationarity_residual(sol, input.y) < 1e-9);
    CHECK(std::abs(sol.theta) < 1e-9);
  }
  // Off the Pareto set the residual is strictly positive and theta < 0.
  SubproblemInput<double> input;
  input.x = Vector<double>::Constant(4, 3.0);
  input.y = input.x;
  input.ell = 0.5;
  const auto sol = mopg::solve_subproblem(problem, input);
  CHECK(mopg::stationarity_residual(sol, input.y) > 1e-3);
  CHECK(sol.theta < -1e-3);
}

TEST_CASE("grad_perturbation size is validated; m = 1 shift bound") {
  const auto problem =
      mopg::build_problem<double>(spec_of(ProblemName::JOS1, 3, GVariant::Zero));
  SubproblemInput<double> input;
  input.x = Vector<double>::Constant(3, 1.0);
  input.y = input.x;
  input.ell = 1.0;
  input.grad_perturbation = Vector<double>::Ones(2);
  CHECK_THROWS_AS(mopg::solve_subproblem(problem, input), mopg::ArgumentError);

  // For a single objective the perturbed solution moves at most ||eps||/ell.
  mopg::rng::Stream stream(77);
  MultiObjectiveProblem<double> single;
  single.n = 3;
  single.name = "single";
  single.smooth = {toys::random_gentle_quadratic(stream, 3)};
  single.nonsmooth = {NonsmoothPart<double>::zero()};
  single.domain_lo = Vector<double>::Constant(3, -1.0);
  single.domain_hi = Vector<double>::Constant(3, 1.0);
  SubproblemInput<double> base;
  base.x = stream.uniform_vector<double>(3, -1.0, 1.0);
  base.y = stream.uniform_vector<double>(3, -1.0, 1.0);
  base.ell = 1.5;
  const auto clean = mopg::solve_subproblem(single, base);
  auto perturbed = base;
  perturbed.grad_perturbation = 0.01 * stream.unit_vector<double>(3);
  const auto noisy = mopg::solve_subproblem(single, perturbed);
  CHECK((noisy.p - clean.p).norm() <= 0.01 / base.ell + 1e-12);
}

TEST_CASE("infeasible incumbent x is rejected") {
  const auto problem =
      mopg::build_problem<double>(spec_of(ProblemName::SD, 4, GVariant::Indicator));
  SubproblemInput<double> input;
  input.x = Vector<double>::Constant(4, 0.0);  // outside the truss box
  input.y = Vector<double>::Constant(4, 2.0);
  input.ell = 4.0;
  CHECK_THROWS_AS(mopg::solve_subproblem(problem, input), mopg::ArgumentError);
}

TEST_CASE("backtracking accepts exactly at the curvature") {
  // f(x) = 2 x^2 has curvature 4; starting from 1 with factor 2 the
  // accepted constant is exactly 4 (the descent test holds with equality).
  MultiObjectiveProblem<double> problem;
  problem.n = 1;
  problem.name = "curved";
  SmoothPart<double> f;
  f.eval = [](const Vector<double>& x) { return 2 * x[0] * x[0]; };
  f.grad = [](const Vector<double>& x) -> Vector<double> {
    return 4 * x;
  };
  f.lipschitz = std::nullopt;
  problem.smooth = {f};
  problem.nonsmooth = {NonsmoothPart<double>::zero()};
  problem.domain_lo = Vector<double>::Constant(1, -1.0);
  problem.domain_hi = Vector<double>::Constant(1, 1.0);

  SubproblemInput<double> input;
  input.x = Vector<double>::Constant(1, 1.0);
  input.y = input.x;
  const auto [ell, sol] = mopg::backtrack_ell(problem, input, 1.0, 2.0);
  CHECK(ell == 4.0);
  CHECK(sol.p[0] == doctest::Approx(0.0));

  CHECK_THROWS_AS(mopg::backtrack_ell(problem, input, 0.0, 2.0),
                  mopg::ArgumentError);
  CHECK_THROWS_AS(mopg::backtrack_ell(problem, input, 1.0, 1.0),
                  mopg::ArgumentError);
}

TEST_CASE("KKT multipliers weight the active objectives") {
  // At the solution, the weighted gradient step must reproduce p through
  // the prox (fixed-point form of the KKT system).
  for (int idx = 0; idx < 8; ++idx) {
    const auto toy = toys::make_toy_instance(31, idx);
    const auto sol = mopg::solve_subproblem(toy.problem, toy.input);
    const auto ev = mopg::dual_value_and_primal(toy.problem, toy.input, sol.lambda);
    CHECK((ev.z - sol.p).norm() < 1e-9);
    // Complementarity: coefficients of active (positive-weight) objectives
    // reach the max bracket value within the duality gap.
    const double cmax = ev.coefficients.maxCoeff();
    for (Index i = 0; i < toy.problem.m(); ++i)
      if (sol.lambda[i] > 1e-8)
        CHECK(cmax - ev.coefficients[i] <= 1e-7 * std::max(1.0, std::abs(cmax)));
  }
}
