#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <utility>

#include "mopg/errors.hpp"
#include "mopg/problem.hpp"
#include "mopg/prox.hpp"

namespace mopg {

// Per-iteration scalarization subproblem
//
//   min_z  max_i [ <grad f_i(y) + e, z - y> + g_i(z) + f_i(y) - F_i(x) ]
//            + (ell/2) ||z - y||^2
//
// where e is an optional shared gradient perturbation (exact solves use
// e = 0).  Solved through its concave dual over the unit simplex,
//
//   max_{lambda in simplex}  D(lambda),
//   D(lambda) = sum_i lambda_i c_i(lambda) + (ell/2) ||z(lambda) - y||^2,
//
// where z(lambda) is a weighted prox step and c is a supergradient of D.
template <typename Scalar>
struct SubproblemInput {
  Vector<Scalar> x;                  // incumbent point, F(x) finite
  Vector<Scalar> y;                  // base point for the prox-gradient model
  Scalar ell = Scalar(1);            // quadratic coefficient, > 0
  Vector<Scalar> grad_perturbation;  // shared error vector; empty means zero
  Scalar tol_gap = Scalar(-1);       // duality-gap target; <= 0 -> default
  int max_inner = 200;               // conditional-gradient iteration cap
};

template <typename Scalar>
struct SubproblemSolution {
  Vector<Scalar> p;        // primal minimizer
  Scalar theta = Scalar(0);  // optimal value; <= 0, and == 0 iff y is stationary
  Vector<Scalar> lambda;   // dual weights (KKT multipliers) on the simplex
  Scalar gap = Scalar(0);  // final duality gap of the dual solve
  int inner_iters = 0;
  bool converged = false;
};

template <typename Scalar>
struct DualEvaluation {
  Scalar dual_value = Scalar(0);
  Vector<Scalar> z;             // prox point z(lambda)
  Vector<Scalar> coefficients;  // c_i(lambda); supergradient of D at lambda
  Scalar quad = Scalar(0);      // (ell/2) ||z - y||^2
};

namespace detail {

template <typename Scalar>
struct SubproblemContext {
  const MultiObjectiveProblem<Scalar>* problem;
  Vector<Scalar> y;
  Matrix<Scalar> grads;    // m x n, rows grad f_i(y)
  Vector<Scalar> eps;      // shared perturbation (zeros when absent)
  Vector<Scalar> offsets;  // f_i(y) - F_i(x)
  Scalar ell;
};

template <typename Scalar>
SubproblemContext<Scalar> make_context(const MultiObjectiveProblem<Scalar>& problem,
                                       const SubproblemInput<Scalar>& input) {
  if (input.x.size() != problem.n || input.y.size() != problem.n)
    throw ArgumentError("subproblem: x and y must have length n");
  if (!(input.ell > Scalar(0)))
    throw ArgumentError("subproblem: ell must be > 0");
  SubproblemContext<Scalar> ctx;
  ctx.problem = &problem;
  ctx.y = input.y;
  ctx.grads = eval_grads(problem, input.y);
  if (input.grad_perturbation.size() == 0) {
    ctx.eps = Vector<Scalar>::Zero(problem.n);
  } else if (input.grad_perturbation.size() == problem.n) {
    ctx.eps = input.grad_perturbation;
  } else {
    throw ArgumentError("subproblem: grad_perturbation must be empty or length n");
  }
  ctx.ell = input.ell;

  const auto Fx = eval_F(problem, input.x);
  ctx.offsets.resize(problem.m());
  for (Index i = 0; i < problem.m(); ++i) {
    if (!Fx[static_cast<std::size_t>(i)].is_finite())
      throw ArgumentError("subproblem: F(x) must be finite (x feasible)");
    const Scalar fy = problem.smooth[static_cast<std::size_t>(i)].eval(input.y);
    ctx.offsets[i] = fy - Fx[static_cast<std::size_t>(i)].value();
    if (!std::isfinite(static_cast<double>(ctx.offsets[i])))
      throw NumericalError("subproblem: non-finite objective data at y");
  }
  return ctx;
}

template <typename Scalar>
DualEvaluation<Scalar> dual_eval(const SubproblemContext<Scalar>& ctx,
                                 const Vector<Scalar>& lambda) {
  const auto& parts = ctx.problem->nonsmooth;
  const Vector<Scalar> direction = ctx.grads.transpose() * lambda + ctx.eps;
  const Vector<Scalar> a = ctx.y - direction / ctx.ell;
  DualEvaluation<Scalar> ev;
  ev.z = prox_weighted(lambda, parts, a, Scalar(1) / ctx.ell);
  const Vector<Scalar> dz = ev.z - ctx.y;
  ev.quad = Scalar(0.5) * ctx.ell * dz.squaredNorm();
  ev.coefficients.resize(lambda.size());
  const Scalar eps_dot = ctx.eps.dot(dz);
  for (Index i = 0; i < lambda.size(); ++i) {
    const auto gi = parts[static_cast<std::size_t>(i)].eval(ev.z);
    if (!gi.is_finite())
      throw NumericalError("subproblem: prox point infeasible for some g_i");
    ev.coefficients[i] =
        ctx.grads.row(i).dot(dz) + eps_dot + gi.value() + ctx.offsets[i];
  }
  ev.dual_value = lambda.dot(ev.coefficients) + ev.quad;
  if (!std::isfinite(static_cast<double>(ev.dual_value)))
    throw NumericalError("subproblem: non-finite dual value");
  return ev;
}

// Machine-precision dual solve for two or three objectives by nested
// bisection on directional derivatives of the concave dual.  Conditional
// gradient steps stall sublinearly when the dual curvature is rank
// deficient on the simplex (possible whenever n < m - 1), so on the small
// simplices this backstops the fast path.  Uses the stick-breaking
// parameterization lambda = (u, (1-u)v, (1-u)(1-v)), whose box domain
// keeps every inner problem's feasible interval independent of the outer
// variable; Danskin's theorem then makes the partially maximized dual's
// supergradient available from any inner argmax.  *solves counts the 1-D
// bisections performed.
template <typename Scalar>
Vector<Scalar> dual_bisection(const SubproblemContext<Scalar>& ctx, int* solves) {
  const Index m = ctx.grads.rows();
  auto solve1d = [&](auto&& deriv, Scalar lo, Scalar hi) -> Scalar {
    ++*solves;
    if (!(hi > lo)) return lo;
    if (deriv(lo) <= Scalar(0)) return lo;
    if (deriv(hi) >= Scalar(0)) return hi;
    for (int b = 0; b < 90; ++b) {
      const Scalar mid = Scalar(0.5) * (lo + hi);
      (deriv(mid) > Scalar(0) ? lo : hi) = mid;
    }
    return Scalar(0.5) * (lo + hi);
  };

  if (m == 2) {
    auto lam = [](Scalar u) {
      Vector<Scalar> l(2);
      l << u, Scalar(1) - u;
      return l;
    };
    auto d = [&](Scalar u) {
      const auto e = dual_eval(ctx, lam(u));
      return e.coefficients[0] - e.coefficients[1];
    };
    return lam(solve1d(d, Scalar(0), Scalar(1)));
  }

  auto lam = [](Scalar u, Scalar v) {
    Vector<Scalar> l(3);
    l << u, (Scalar(1) - u) * v, (Scalar(1) - u) * (Scalar(1) - v);
    return l;
  };
  auto inner = [&](Scalar u) {
    auto d = [&](Scalar v) {
      const auto e = dual_eval(ctx, lam(u, v));
      return e.coefficients[1] - e.coefficients[2];
    };
    return solve1d(d, Scalar(0), Scalar(1));
  };
  auto outer_d = [&](Scalar u) {
    const Scalar v = inner(u);
    const auto e = dual_eval(ctx, lam(u, v));
    return e.coefficients[0] -
           (v * e.coefficients[1] + (Scalar(1) - v) * e.coefficients[2]);
  };
  const Scalar u = solve1d(outer_d, Scalar(0), Scalar(1));
  return lam(u, inner(u));
}

}  // namespace detail

// One dual evaluation at a given multiplier (exposed for testing and for
// KKT verification): returns D(lambda), the prox point z(lambda), and the
// supergradient coefficients c_i(lambda).
template <typename Scalar>
DualEvaluation<Scalar> dual_value_and_primal(
    const MultiObjectiveProblem<Scalar>& problem,
    const SubproblemInput<Scalar>& input, const Vector<Scalar>& lambda) {
  if (lambda.size() != problem.m())
    throw ArgumentError("dual_value_and_primal: lambda size != m");
  const auto ctx = detail::make_context(problem, input);
  return detail::dual_eval(ctx, lambda);
}

// Solves the dual by conditional gradient over the simplex (pairing the
// classic step with away steps, which restore linear convergence when the
// optimum sits on a face) with an exact bisection line search, then reads
// the primal minimizer off the final prox point.  For m <= 3 a nested
// bisection fallback finishes any solve the conditional gradient leaves
// above tolerance, so those duals always come back at full precision; for
// larger m the gap and converged flag report whatever the cap allowed.
template <typename Scalar>
SubproblemSolution<Scalar> solve_subproblem(
    const MultiObjectiveProblem<Scalar>& problem,
    const SubproblemInput<Scalar>& input) {
  validate(problem);
  const auto ctx = detail::make_context(problem, input);
  const Index m = problem.m();

  Vector<Scalar> lambda = Vector<Scalar>::Constant(m, Scalar(1) / Scalar(m));
  auto ev = detail::dual_eval(ctx, lambda);

  const Scalar tol = input.tol_gap > Scalar(0)
                         ? input.tol_gap
                         : Scalar(1e-14) * std::max(Scalar(1), std::abs(ev.dual_value)) +
                               Scalar(1e-12);

  SubproblemSolution<Scalar> sol;
  sol.inner_iters = 0;

  auto fw_gap = [&](const DualEvaluation<Scalar>& e) {
    return e.coefficients.maxCoeff() - lambda.dot(e.coefficients);
  };

  // When the exact bisection fallback is available (m <= 3) there is no
  // point grinding through a long stalled conditional-gradient tail first.
  const int cg_cap = m <= 3 ? std::min(input.max_inner, 40) : input.max_inner;

  if (m > 1) {
    for (int iter = 0; iter < cg_cap; ++iter) {
      const Vector<Scalar>& c = ev.coefficients;
      Index i_fw = 0, i_away = -1;
      c.maxCoeff(&i_fw);
      Scalar c_away = std::numeric_limits<Scalar>::max();
      for (Index i = 0; i < m; ++i)
        if (lambda[i] > Scalar(0) && c[i] < c_away) {
          c_away = c[i];
          i_away = i;
        }
      const Scalar lc = lambda.dot(c);
      const Scalar gain_fw = c[i_fw] - lc;    // ascent rate toward vertex i_fw
      const Scalar gain_away = lc - c_away;   // ascent rate away from i_away
      if (gain_fw <= tol) break;

      const bool away = gain_away > gain_fw && lambda[i_away] < Scalar(1);
      Vector<Scalar> d;
      Scalar gamma_max;
      if (away) {
        d = lambda;
        d[i_away] -= Scalar(1);  // d = lambda - e_away
        gamma_max = lambda[i_away] / (Scalar(1) - lambda[i_away]);
      } else {
        d = -lambda;
        d[i_fw] += Scalar(1);  // d = e_fw - lambda
        gamma_max = Scalar(1);
      }

      // Exact line search on the concave slice gamma -> D(lambda + gamma d):
      // bisect on the directional derivative c(gamma) . d.
      Scalar gamma = gamma_max;
      auto at = [&](Scalar g) {
        return detail::dual_eval<Scalar>(ctx, (lambda + g * d).cwiseMax(Scalar(0)));
      };
      if (at(gamma_max).coefficients.dot(d) < Scalar(0)) {
        Scalar lo = Scalar(0), hi = gamma_max;
        for (int b = 0; b < 60; ++b) {
          const Scalar mid = Scalar(0.5) * (lo + hi);
          if (at(mid).coefficients.dot(d) > Scalar(0)) lo = mid;
          else hi = mid;
        }
        gamma = Scalar(0.5) * (lo + hi);
      }

      // Stable simplex update, clamping the tiny negatives rounding can
      // introduce on away steps.
      lambda = (lambda + gamma * d).cwiseMax(Scalar(0));
      lambda /= lambda.sum();
      ++sol.inner_iters;
      ev = detail::dual_eval(ctx, lambda);
    }
    if (m <= 3 && fw_gap(ev) > tol) {
      int solves = 0;
      lambda = detail::dual_bisection(ctx, &solves);
      ev = detail::dual_eval(ctx, lambda);
      sol.inner_iters += solves;
    }
  }

  sol.p = ev.z;
  sol.theta = ev.coefficients.maxCoeff() + ev.quad;
  sol.lambda = lambda;
  sol.gap = fw_gap(ev);
  sol.converged = sol.gap <= tol;
  return sol;
}

// Stationarity measure used by the residual stopping rule: the sup-norm
// step the subproblem proposes from y.
template <typename Scalar>
Scalar stationarity_residual(const SubproblemSolution<Scalar>& sol,
                             const Vector<Scalar>& y) {
  if (sol.p.size() != y.size())
    throw ArgumentError("stationarity_residual: size mismatch");
  return (sol.p - y).template lpNorm<Eigen::Infinity>();
}

// Doubles ell from ell_init until the smooth parts satisfy the descent
// inequality  f_i(p) <= f_i(y) + <grad f_i(y), p - y> + (ell/2)||p - y||^2
// at the subproblem solution p.  Returns the accepted ell and solution.
template <typename Scalar>
std::pair<Scalar, SubproblemSolution<Scalar>> backtrack_ell(
    const MultiObjectiveProblem<Scalar>& problem, SubproblemInput<Scalar> input,
    Scalar ell_init, Scalar factor) {
  if (!(ell_init > Scalar(0)) || !(factor > Scalar(1)))
    throw ArgumentError("backtrack_ell: need ell_init > 0 and factor > 1");
  Scalar ell = ell_init;
  for (int trial = 0; trial <= 60; ++trial) {
    input.ell = ell;
    auto sol = solve_subproblem(problem, input);
    const Vector<Scalar> dp = sol.p - input.y;
    const Scalar quad = Scalar(0.5) * ell * dp.squaredNorm();
    bool accepted = true;
    for (Index i = 0; i < problem.m(); ++i) {
      const auto& f = problem.smooth[static_cast<std::size_t>(i)];
      const Scalar fy = f.eval(input.y);
      const Scalar model = fy + f.grad(input.y).dot(dp) + quad;
      const Scalar slack = Scalar(1e-12) * std::max(Scalar(1), std::abs(fy));
      if (f.eval(sol.p) > model + slack) {
        accepted = false;
        break;
      }
    }
    if (accepted) return {ell, std::move(sol)};
    ell *= factor;
  }
  throw NumericalError("backtrack_ell: no acceptable ell within 60 doublings");
}

}  // namespace mopg
