#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "mopg/errors.hpp"
#include "mopg/problem.hpp"
#include "mopg/solver.hpp"

namespace mopg {

// sigma(x, z) = min_i [F_i(x) - F_i(z)]: how much x is dominated by z in
// the worst objective.  Nonnegative for every x when z minimizes all
// objectives simultaneously; its supremum over z is the standard weak
// Pareto merit value at x.
template <typename Scalar>
Scalar sigma(const MultiObjectiveProblem<Scalar>& problem,
             const Vector<Scalar>& x, const Vector<Scalar>& z) {
  const Vector<Scalar> Fx = eval_F_finite(problem, x);
  const Vector<Scalar> Fz = eval_F_finite(problem, z);
  return (Fx - Fz).minCoeff();
}

// max_z-in-refs sigma(x, z): a lower bound on the merit value
// sup_z min_i [F_i(x) - F_i(z)] computed over a finite reference set.
// Zero (up to rounding) at points that are weakly Pareto relative to the
// reference set.
template <typename Scalar>
Scalar merit_lower_bound(const MultiObjectiveProblem<Scalar>& problem,
                         const Vector<Scalar>& x,
                         const std::vector<Vector<Scalar>>& reference) {
  if (reference.empty())
    throw ArgumentError("merit_lower_bound: empty reference set");
  const Vector<Scalar> Fx = eval_F_finite(problem, x);
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  for (const auto& z : reference) {
    const Vector<Scalar> Fz = eval_F_finite(problem, z);
    best = std::max(best, (Fx - Fz).minCoeff());
  }
  return best;
}

// Lyapunov energy of the alpha-extrapolated method, evaluated along a
// recorded trace against a reference point z:
//
//   u^j = ((j + alpha - 2) x^j - (j - 1) x^{j-1}) / (alpha - 1)
//   E_j = 2 (j + alpha - 2)^2 / (ell (alpha - 1)) * sigma_j(z)
//         + (alpha - 1) ||u^j - z||^2,     sigma_j(z) = min_i [F_i(x^j) - F_i(z)]
//
// The per-step descent inequality behind the O(1/k^2) theory,
//
//   E_j + 2 (alpha - 3)(j + alpha - 2) / (ell (alpha - 1)) * sigma_{j-1}(z)
//     <= E_{j-1},
//
// holds for every z in R^n on convex problems; `lemma_violations` counts
// steps that break it beyond rounding slack.  Plain monotonicity
// E_j <= E_{j-1} (and the bound E_j <= (alpha-1) ||x^0 - z||^2) follows
// only where sigma_j(z) >= 0 along the run, e.g. when z is weakly
// dominated by the whole trajectory; `violations` counts plain-monotone
// breaks for reporting.
template <typename Scalar>
struct EnergyRecord {
  int k = 0;
  Scalar sigma = Scalar(0);
  Scalar energy = Scalar(0);
};

template <typename Scalar>
struct EnergySeries {
  std::vector<EnergyRecord<Scalar>> records;
  std::optional<int> first_violation;  // first j with E_{j+1} > E_j (+slack)
  int violations = 0;
  std::optional<int> first_lemma_violation;
  int lemma_violations = 0;  // breaks of the per-step descent inequality
  Scalar max_energy = Scalar(0);
  Scalar bound_M = Scalar(0);  // 2 (alpha-1)/ell ||x^0 - z||^2
};

template <typename Scalar>
EnergySeries<Scalar> energy_series(const MultiObjectiveProblem<Scalar>& problem,
                                   const IterationTrace<Scalar>& trace,
                                   Scalar alpha, Scalar ell,
                                   const Vector<Scalar>& z) {
  if (!(alpha > Scalar(3))) throw ArgumentError("energy_series: alpha must be > 3");
  if (!(ell > Scalar(0))) throw ArgumentError("energy_series: ell must be > 0");
  if (trace.iterations() == 0)
    throw InsufficientDataError("energy_series: empty trace");
  const Vector<Scalar> Fz = eval_F_finite(problem, z);

  EnergySeries<Scalar> out;
  out.bound_M = Scalar(2) * (alpha - Scalar(1)) / ell * (trace.x0 - z).squaredNorm();
  out.records.reserve(static_cast<std::size_t>(trace.iterations()));
  for (int j = 1; j <= trace.iterations(); ++j) {
    const auto& rec = trace.records[static_cast<std::size_t>(j - 1)];
    EnergyRecord<Scalar> e;
    e.k = j;
    e.sigma = (rec.F - Fz).minCoeff();
    const Scalar w = Scalar(j) + alpha - Scalar(2);
    const Vector<Scalar> u =
        (w * trace.iterate(j) - Scalar(j - 1) * trace.iterate(j - 1)) /
        (alpha - Scalar(1));
    e.energy = Scalar(2) * w * w / (ell * (alpha - Scalar(1))) * e.sigma +
               (alpha - Scalar(1)) * (u - z).squaredNorm();
    out.records.push_back(e);
  }

  out.max_energy = out.records.front().energy;
  // What the trace can certify limits how sharp the comparison may be.
  // Three noise floors stack on the spec'd 1e-8 relative slack:
  //   - relative to the sequence scale seen so far, not the local value
  //     (tail energies sit far below the run's energy magnitude);
  //   - sigma is a difference of F evaluations, so each energy carries
  //     w_k * eps_mach * max|F| of rounding, with w_k the k^2 sigma
  //     coefficient (dominant when ell is small or k large);
  //   - the inner dual solve is certified only to its duality gap, which
  //     degrades the per-step inequality by at most ~2 w_k * gap_k.
  // A genuine violation (e.g. a misindexed momentum schedule) shows up at
  // the 0.1 * scale level and clears all three floors by orders.
  const Scalar meps = std::numeric_limits<Scalar>::epsilon();
  Scalar f_scale = eval_F_finite(problem, z).template lpNorm<Eigen::Infinity>();
  for (const auto& rec : trace.records)
    f_scale = std::max(f_scale, rec.F.template lpNorm<Eigen::Infinity>());
  Scalar scale = std::abs(out.records.front().energy);
  for (std::size_t j = 0; j + 1 < out.records.size(); ++j) {
    const Scalar prev = out.records[j].energy;
    const Scalar next = out.records[j + 1].energy;
    out.max_energy = std::max(out.max_energy, next);
    scale = std::max(scale, std::abs(prev));
    const Scalar kj = Scalar(out.records[j + 1].k) + alpha - Scalar(2);
    const Scalar wj = Scalar(2) * kj * kj / (ell * (alpha - Scalar(1)));
    const Scalar gap =
        std::max(trace.records[j + 1].gap, Scalar(0));
    const Scalar slack = Scalar(1e-8) * scale + Scalar(1e-12) +
                         wj * (Scalar(2) * gap + Scalar(4) * meps * f_scale);
    if (next > prev + slack) {
      ++out.violations;
      if (!out.first_violation) out.first_violation = static_cast<int>(j) + 1;
    }
    const Scalar coupling = Scalar(2) * (alpha - Scalar(3)) *
                            (Scalar(out.records[j + 1].k) + alpha - Scalar(2)) /
                            (ell * (alpha - Scalar(1))) * out.records[j].sigma;
    if (next + coupling > prev + slack) {
      ++out.lemma_violations;
      if (!out.first_lemma_violation)
        out.first_lemma_violation = static_cast<int>(j) + 1;
    }
  }
  return out;
}

// sigma_k(z) along a trace, read off the recorded objective rows.
template <typename Scalar>
std::vector<std::pair<int, Scalar>> sigma_series(
    const MultiObjectiveProblem<Scalar>& problem,
    const IterationTrace<Scalar>& trace, const Vector<Scalar>& z) {
  const Vector<Scalar> Fz = eval_F_finite(problem, z);
  std::vector<std::pair<int, Scalar>> out;
  out.reserve(trace.records.size());
  for (const auto& rec : trace.records)
    out.emplace_back(rec.k, (rec.F - Fz).minCoeff());
  return out;
}

// Least-squares slope of log(value) against log(k).  Values below 1e-14
// are discarded as converged noise; the fit runs over the last half of
// the surviving points and needs at least five of them.
template <typename Scalar>
struct RateFit {
  Scalar slope = Scalar(0);
  Scalar intercept = Scalar(0);
  Scalar r_squared = Scalar(0);
  int points = 0;
};

template <typename Scalar>
RateFit<Scalar> rate_fit(const std::vector<std::pair<int, Scalar>>& series) {
  std::vector<std::pair<Scalar, Scalar>> usable;  // (log k, log v)
  for (const auto& [k, v] : series) {
    if (k < 1) continue;
    if (!(v >= Scalar(1e-14)) || !std::isfinite(static_cast<double>(v))) continue;
    usable.emplace_back(std::log(Scalar(k)), std::log(v));
  }
  const std::size_t half = usable.size() / 2;
  if (usable.size() - half < 5)
    throw InsufficientDataError(
        "rate_fit: fewer than 5 usable points in the tail window");

  Scalar sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const Scalar n = Scalar(usable.size() - half);
  for (std::size_t i = half; i < usable.size(); ++i) {
    const auto [x, y] = usable[i];
    sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
  }
  const Scalar denom = n * sxx - sx * sx;
  if (std::abs(denom) < Scalar(1e-300))
    throw InsufficientDataError("rate_fit: degenerate abscissae");
  RateFit<Scalar> fit;
  fit.points = static_cast<int>(usable.size() - half);
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  Scalar ss_res = 0, ss_tot = 0;
  const Scalar mean_y = sy / n;
  for (std::size_t i = half; i < usable.size(); ++i) {
    const auto [x, y] = usable[i];
    const Scalar r = y - (fit.intercept + fit.slope * x);
    ss_res += r * r;
    ss_tot += (y - mean_y) * (y - mean_y);
  }
  fit.r_squared = ss_tot > Scalar(0) ? Scalar(1) - ss_res / ss_tot : Scalar(1);
  return fit;
}

// Partial sums sum_{k=1}^{K-1} k ||x^{k+1} - x^k||^2 from the recorded
// step norms.  The theory bounds the full series by
// 3 ell (alpha - 1) M / (alpha - 3).
template <typename Scalar>
Scalar weighted_step_sum(const IterationTrace<Scalar>& trace) {
  Scalar sum = Scalar(0);
  for (std::size_t j = 1; j < trace.records.size(); ++j) {
    const Scalar step = trace.records[j].step_norm;  // ||x^{j+1} - x^j|| at k=j+1
    sum += Scalar(trace.records[j].k - 1) * step * step;
  }
  return sum;
}

template <typename Scalar>
Scalar weighted_step_sum_bound(Scalar alpha, Scalar ell, Scalar bound_M) {
  if (!(alpha > Scalar(3))) throw ArgumentError("step_sum_bound: alpha must be > 3");
  return Scalar(3) * ell * (alpha - Scalar(1)) * bound_M / (alpha - Scalar(3));
}

// Windowed decay check for k^2 sigma_k(z).  Faster-than-1/k^2 decay of
// sigma_k makes k^2 sigma_k shrink eventually, so the maximum over the
// last half of the run [K/2, K] must not exceed the maximum over the
// preceding quarter [K/4, K/2).
template <typename Scalar>
struct WindowedDecay {
  bool applicable = false;
  Scalar early_max = Scalar(0);  // max of k^2 max(sigma_k, 0) over [K/4, K/2)
  Scalar late_max = Scalar(0);   // max of k^2 max(sigma_k, 0) over [K/2, K]
  bool ok = false;
};

template <typename Scalar>
WindowedDecay<Scalar> k2_sigma_window_check(
    const MultiObjectiveProblem<Scalar>& problem,
    const IterationTrace<Scalar>& trace, const Vector<Scalar>& z) {
  WindowedDecay<Scalar> out;
  const int K = trace.iterations();
  if (K < 8) return out;  // both windows need content
  const auto sig = sigma_series(problem, trace, z);
  const int lo = K / 4, mid = K / 2;
  // The o(1/k^2) claim concerns the nonnegative merit, so negative
  // sigma_k (the iterate already beats z in some objective) clamps to 0.
  // Once sigma has collapsed to rounding level, k^2 amplifies whatever
  // noise remains; anything 12 orders below the run's own k^2 sigma peak
  // is indistinguishable from zero and reads as such.
  Scalar peak = Scalar(0);
  for (const auto& [k, v] : sig)
    peak = std::max(peak, Scalar(k) * Scalar(k) * std::max(v, Scalar(0)));
  const Scalar floor = Scalar(1e-12) * peak;
  Scalar early = Scalar(0);
  Scalar late = Scalar(0);
  for (const auto& [k, v] : sig) {
    Scalar s = Scalar(k) * Scalar(k) * std::max(v, Scalar(0));
    if (s <= floor) s = Scalar(0);
    if (k >= lo && k < mid) early = std::max(early, s);
    if (k >= mid) late = std::max(late, s);
  }
  out.applicable = true;
  out.early_max = early;
  out.late_max = late;
  out.ok = late <= early + Scalar(1e-12) * std::max(Scalar(1), std::abs(early));
  return out;
}

// Tail stabilization check for the Cauchy-type quantity
//   q_k = k^2 ||x^{k+1} - x^k||^2 + (k+1)^2 sigma_k(z):
// over the last quarter of the run no value may rise more than 10% above
// the three-quarter mark (plus a tiny absolute floor).  The sequence is
// free to keep collapsing -- a run that terminates finitely records a
// tail still mid-decay -- but late-stage growth flags.
template <typename Scalar>
struct TailCheck {
  bool applicable = false;
  Scalar fluctuation = Scalar(0);
  Scalar baseline = Scalar(0);
  bool ok = false;
};

template <typename Scalar>
TailCheck<Scalar> cauchy_tail_check(const MultiObjectiveProblem<Scalar>& problem,
                                    const IterationTrace<Scalar>& trace,
                                    const Vector<Scalar>& z) {
  TailCheck<Scalar> out;
  const int K = trace.iterations();
  if (K < 8) return out;
  const auto sig = sigma_series(problem, trace, z);
  std::vector<Scalar> q;
  q.reserve(static_cast<std::size_t>(K - 1));
  for (int k = 1; k < K; ++k) {
    const Scalar step = trace.records[static_cast<std::size_t>(k)].step_norm;
    q.push_back(Scalar(k) * Scalar(k) * step * step +
                Scalar(k + 1) * Scalar(k + 1) * sig[static_cast<std::size_t>(k - 1)].second);
  }
  const std::size_t start = q.size() - q.size() / 4;
  if (start >= q.size()) return out;
  out.applicable = true;
  out.baseline = q[start];
  Scalar lo = q[start], hi = q[start];
  for (std::size_t i = start; i < q.size(); ++i) {
    lo = std::min(lo, q[i]);
    hi = std::max(hi, q[i]);
  }
  out.fluctuation = hi - lo;
  out.ok = hi - out.baseline <=
           Scalar(0.1) * std::abs(out.baseline) + Scalar(1e-12);
  return out;
}

}  // namespace mopg
