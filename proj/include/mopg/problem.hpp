#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mopg/errors.hpp"
#include "mopg/extended.hpp"

namespace mopg {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Smooth component f_i: convex, continuously differentiable.  `lipschitz`
// is a Lipschitz constant of the gradient when one is known in closed
// form; std::nullopt means "unknown, use backtracking".  Zero is allowed
// (affine objectives have constant gradients).
template <typename Scalar>
struct SmoothPart {
  std::function<Scalar(const Vector<Scalar>&)> eval;
  std::function<Vector<Scalar>(const Vector<Scalar>&)> grad;
  std::optional<Scalar> lipschitz;
};

// Nonsmooth component g_i: closed proper convex, restricted to the three
// families the prox toolkit handles exactly.
//   Zero            g(x) = 0
//   ScaledShiftedL1 g(x) = scale * ||x - shift||_1,          scale >= 0
//   BoxIndicator    g(x) = 0 on [lo, hi], +infinity outside
template <typename Scalar>
struct NonsmoothPart {
  enum class Kind { Zero, ScaledShiftedL1, BoxIndicator };

  Kind kind = Kind::Zero;
  Scalar scale = Scalar(0);     // ScaledShiftedL1 only
  Vector<Scalar> shift;         // ScaledShiftedL1 only
  Vector<Scalar> lo, hi;        // BoxIndicator only

  static NonsmoothPart zero() { return NonsmoothPart{}; }

  static NonsmoothPart scaled_shifted_l1(Scalar scale, Vector<Scalar> shift) {
    if (!(scale >= Scalar(0)))
      throw ArgumentError("NonsmoothPart: l1 scale must be >= 0");
    NonsmoothPart p;
    p.kind = Kind::ScaledShiftedL1;
    p.scale = scale;
    p.shift = std::move(shift);
    return p;
  }

  static NonsmoothPart box_indicator(Vector<Scalar> lo, Vector<Scalar> hi) {
    if (lo.size() != hi.size())
      throw ArgumentError("NonsmoothPart: box bound sizes differ");
    for (Index j = 0; j < lo.size(); ++j)
      if (!(lo[j] <= hi[j]))
        throw ArgumentError("NonsmoothPart: box requires lo <= hi");
    NonsmoothPart p;
    p.kind = Kind::BoxIndicator;
    p.lo = std::move(lo);
    p.hi = std::move(hi);
    return p;
  }

  Extended<Scalar> eval(const Vector<Scalar>& x) const {
    switch (kind) {
      case Kind::Zero:
        return Scalar(0);
      case Kind::ScaledShiftedL1:
        if (shift.size() != x.size())
          throw ArgumentError("NonsmoothPart: shift size != x size");
        return scale * (x - shift).template lpNorm<1>();
      case Kind::BoxIndicator:
        if (lo.size() != x.size())
          throw ArgumentError("NonsmoothPart: box size != x size");
        for (Index j = 0; j < x.size(); ++j)
          if (x[j] < lo[j] || x[j] > hi[j]) return Extended<Scalar>::infinity();
        return Scalar(0);
    }
    throw ArgumentError("NonsmoothPart: unknown kind");
  }
};

// Composite instance  min F(x),  F_i = f_i + g_i,  i = 1..m.  The domain
// box is metadata used for sampling initial points; iterates are not
// constrained to it (constraints, when present, live in g).
template <typename Scalar>
struct MultiObjectiveProblem {
  std::string name;
  Index n = 0;
  std::vector<SmoothPart<Scalar>> smooth;
  std::vector<NonsmoothPart<Scalar>> nonsmooth;
  Vector<Scalar> domain_lo, domain_hi;

  Index m() const { return static_cast<Index>(smooth.size()); }

  // max_i L_i when every component has a known constant.
  std::optional<Scalar> lipschitz_max() const {
    Scalar L = Scalar(0);
    for (const auto& f : smooth) {
      if (!f.lipschitz) return std::nullopt;
      L = std::max(L, *f.lipschitz);
    }
    return L;
  }
};

template <typename Scalar>
void validate(const MultiObjectiveProblem<Scalar>& problem) {
  if (problem.n < 1) throw ArgumentError("problem: n must be >= 1");
  if (problem.smooth.empty())
    throw ArgumentError("problem: at least one objective required");
  if (problem.smooth.size() != problem.nonsmooth.size())
    throw ArgumentError("problem: smooth/nonsmooth counts differ");
  for (const auto& f : problem.smooth) {
    if (!f.eval || !f.grad)
      throw ArgumentError("problem: smooth part missing eval or grad");
    if (f.lipschitz && !(*f.lipschitz >= Scalar(0)))
      throw ArgumentError("problem: lipschitz constant must be >= 0");
  }
  if (problem.domain_lo.size() != problem.n ||
      problem.domain_hi.size() != problem.n)
    throw ArgumentError("problem: domain box must have length n");
  for (Index j = 0; j < problem.n; ++j)
    if (!(problem.domain_lo[j] <= problem.domain_hi[j]))
      throw ArgumentError("problem: domain box requires lo <= hi");
}

// F(x) componentwise; +infinity where x violates an indicator.
template <typename Scalar>
std::vector<Extended<Scalar>> eval_F(const MultiObjectiveProblem<Scalar>& problem,
                                     const Vector<Scalar>& x) {
  if (x.size() != problem.n) throw ArgumentError("eval_F: x size != n");
  std::vector<Extended<Scalar>> F;
  F.reserve(problem.smooth.size());
  for (std::size_t i = 0; i < problem.smooth.size(); ++i)
    F.push_back(Extended<Scalar>(problem.smooth[i].eval(x)) +
                problem.nonsmooth[i].eval(x));
  return F;
}

// Objective vector as a dense finite vector; throws if any component is
// +infinity (callers use this where finiteness is an established
// precondition, e.g. along solver iterates).
template <typename Scalar>
Vector<Scalar> finite_objective_values(const std::vector<Extended<Scalar>>& F) {
  Vector<Scalar> v(static_cast<Index>(F.size()));
  for (std::size_t i = 0; i < F.size(); ++i) {
    if (!F[i].is_finite())
      throw ArgumentError("objective value is +infinity where finiteness is required");
    v[static_cast<Index>(i)] = F[i].value();
  }
  return v;
}

template <typename Scalar>
Vector<Scalar> eval_F_finite(const MultiObjectiveProblem<Scalar>& problem,
                             const Vector<Scalar>& x) {
  return finite_objective_values(eval_F(problem, x));
}

// Jacobian of the smooth parts at y: row i holds grad f_i(y).
template <typename Scalar>
Matrix<Scalar> eval_grads(const MultiObjectiveProblem<Scalar>& problem,
                          const Vector<Scalar>& y) {
  if (y.size() != problem.n) throw ArgumentError("eval_grads: y size != n");
  Matrix<Scalar> G(problem.m(), problem.n);
  for (Index i = 0; i < problem.m(); ++i) {
    Vector<Scalar> g = problem.smooth[static_cast<std::size_t>(i)].grad(y);
    if (g.size() != problem.n)
      throw ArgumentError("eval_grads: gradient size != n");
    G.row(i) = g.transpose();
  }
  return G;
}

}  // namespace mopg
