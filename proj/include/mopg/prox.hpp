#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "mopg/errors.hpp"
#include "mopg/problem.hpp"

namespace mopg {

// Weighted sum h(x) = sum_i weights[i] * g_i(x) with weights on the unit
// simplex.  This is the nonsmooth part of the scalarized subproblem; the
// prox below is exact for the families the library supports.
template <typename Scalar>
struct WeightedNonsmoothSum {
  Vector<Scalar> weights;
  const std::vector<NonsmoothPart<Scalar>>* parts = nullptr;

  WeightedNonsmoothSum(Vector<Scalar> w,
                       const std::vector<NonsmoothPart<Scalar>>& p)
      : weights(std::move(w)), parts(&p) {
    if (static_cast<std::size_t>(weights.size()) != p.size())
      throw ArgumentError("WeightedNonsmoothSum: weights size != parts size");
    Scalar sum = Scalar(0);
    for (Index i = 0; i < weights.size(); ++i) {
      if (weights[i] < Scalar(-1e-12))
        throw ArgumentError("WeightedNonsmoothSum: negative weight");
      weights[i] = std::max(weights[i], Scalar(0));
      sum += weights[i];
    }
    if (std::abs(sum - Scalar(1)) > Scalar(1e-8))
      throw ArgumentError("WeightedNonsmoothSum: weights must sum to 1");
  }

  // Parts with zero weight do not contribute (0 * g_i == 0 by convention,
  // even when g_i is an indicator).
  Extended<Scalar> eval(const Vector<Scalar>& x) const {
    Extended<Scalar> total(Scalar(0));
    for (Index i = 0; i < weights.size(); ++i) {
      if (weights[i] == Scalar(0)) continue;
      const auto gi = (*parts)[static_cast<std::size_t>(i)].eval(x);
      if (!gi.is_finite()) return Extended<Scalar>::infinity();
      total += weights[i] * gi.value();
    }
    return total;
  }
};

namespace detail {

// Exact minimizer of  q(z) = (z - a)^2 / (2t) + sum_j w_j |z - b_j|
// with all w_j > 0, by scanning the piecewise-linear derivative over the
// sorted breakpoints.  `points` is (b_j, w_j), sorted by b_j, b's unique.
template <typename Scalar>
Scalar prox_scalar_l1(const std::vector<std::pair<Scalar, Scalar>>& points,
                      Scalar a, Scalar t) {
  const std::size_t r = points.size();
  Scalar total = Scalar(0);
  for (const auto& bw : points) total += bw.second;
  Scalar prefix = Scalar(0);
  for (std::size_t s = 0; s <= r; ++s) {
    // On segment s the derivative is (z - a)/t + (2*prefix - total).
    const Scalar z = a - t * (Scalar(2) * prefix - total);
    const bool has_left = s > 0;
    const bool has_right = s < r;
    if (has_left && z < points[s - 1].first) return points[s - 1].first;
    if (!has_right || z <= points[s].first) return z;
    prefix += points[s].second;
  }
  return points[r - 1].first;  // unreachable; loop exits via segment r
}

}  // namespace detail

// prox_{t h}(a) = argmin_z  h(z) + ||z - a||^2 / (2t)  for the weighted
// sum h above.  Supported configurations:
//   * every part Zero or ScaledShiftedL1 -> per-coordinate breakpoint scan
//   * every part BoxIndicator with identical bounds -> clamp
// Anything else throws UnsupportedError.
template <typename Scalar>
Vector<Scalar> prox_weighted(const WeightedNonsmoothSum<Scalar>& h,
                             const Vector<Scalar>& a, Scalar t) {
  if (!(t > Scalar(0))) throw ArgumentError("prox_weighted: t must be > 0");
  const auto& parts = *h.parts;
  if (parts.empty()) throw ArgumentError("prox_weighted: no parts");
  using Kind = typename NonsmoothPart<Scalar>::Kind;

  bool any_box = false, all_box = true;
  for (const auto& part : parts) {
    const bool is_box = part.kind == Kind::BoxIndicator;
    any_box = any_box || is_box;
    all_box = all_box && is_box;
  }

  if (any_box) {
    if (!all_box)
      throw UnsupportedError(
          "prox_weighted: BoxIndicator cannot be mixed with other kinds");
    for (const auto& part : parts)
      if (part.lo != parts.front().lo || part.hi != parts.front().hi)
        throw UnsupportedError("prox_weighted: boxes must be identical");
    const auto& box = parts.front();
    if (box.lo.size() != a.size())
      throw ArgumentError("prox_weighted: box size != point size");
    return a.cwiseMax(box.lo).cwiseMin(box.hi);
  }

  // Zero / ScaledShiftedL1 mix.  Collect the active (positive-weight,
  // positive-scale) terms once, then scan each coordinate.
  std::vector<Index> active;
  for (Index i = 0; i < h.weights.size(); ++i) {
    const auto& part = parts[static_cast<std::size_t>(i)];
    if (part.kind == Kind::Zero) continue;
    if (part.shift.size() != a.size())
      throw ArgumentError("prox_weighted: shift size != point size");
    if (h.weights[i] * part.scale > Scalar(0)) active.push_back(i);
  }
  if (active.empty()) return a;

  Vector<Scalar> p(a.size());
  std::vector<std::pair<Scalar, Scalar>> points;
  points.reserve(active.size());
  for (Index j = 0; j < a.size(); ++j) {
    points.clear();
    for (Index i : active)
      points.emplace_back(parts[static_cast<std::size_t>(i)].shift[j],
                          h.weights[i] * parts[static_cast<std::size_t>(i)].scale);
    std::sort(points.begin(), points.end());
    // Merge coincident breakpoints so segment bounds are strict.
    std::size_t out = 0;
    for (std::size_t s = 1; s < points.size(); ++s) {
      if (points[s].first == points[out].first) points[out].second += points[s].second;
      else points[++out] = points[s];
    }
    points.resize(out + 1);
    p[j] = detail::prox_scalar_l1(points, a[j], t);
  }
  return p;
}

// Convenience overload building the weighted view in place.
template <typename Scalar>
Vector<Scalar> prox_weighted(const Vector<Scalar>& weights,
                             const std::vector<NonsmoothPart<Scalar>>& parts,
                             const Vector<Scalar>& a, Scalar t) {
  return prox_weighted(WeightedNonsmoothSum<Scalar>(weights, parts), a, t);
}

// Prox of a single part with unit weight.
template <typename Scalar>
Vector<Scalar> prox_single(const NonsmoothPart<Scalar>& h,
                           const Vector<Scalar>& a, Scalar t) {
  std::vector<NonsmoothPart<Scalar>> parts{h};
  Vector<Scalar> w(1);
  w[0] = Scalar(1);
  return prox_weighted(WeightedNonsmoothSum<Scalar>(w, parts), a, t);
}

// Moreau envelope M_h(x) = min_z h(z) + ||z - x||^2 / 2 of a single part.
// Smooth surrogate used to sanity-check prox implementations: its gradient
// is x - prox_h(x) and is 1-Lipschitz.
template <typename Scalar>
Scalar moreau_envelope(const NonsmoothPart<Scalar>& h, const Vector<Scalar>& x) {
  const Vector<Scalar> p = prox_single(h, x, Scalar(1));
  return h.eval(p).value() + Scalar(0.5) * (x - p).squaredNorm();
}

template <typename Scalar>
Vector<Scalar> moreau_gradient(const NonsmoothPart<Scalar>& h,
                               const Vector<Scalar>& x) {
  return x - prox_single(h, x, Scalar(1));
}

}  // namespace mopg
