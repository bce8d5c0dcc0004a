#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mopg/errors.hpp"
#include "mopg/problem.hpp"
#include "mopg/random.hpp"

namespace mopg {

enum class ProblemName { JOS1, SD, TOI4, TRIDIA, FDS };
enum class GVariant { Zero, L1Shifted, Indicator };

inline const char* to_string(ProblemName p) {
  switch (p) {
    case ProblemName::JOS1: return "JOS1";
    case ProblemName::SD: return "SD";
    case ProblemName::TOI4: return "TOI4";
    case ProblemName::TRIDIA: return "TRIDIA";
    case ProblemName::FDS: return "FDS";
  }
  return "?";
}

inline const char* to_string(GVariant g) {
  switch (g) {
    case GVariant::Zero: return "zero";
    case GVariant::L1Shifted: return "l1";
    case GVariant::Indicator: return "indicator";
  }
  return "?";
}

inline ProblemName problem_name_from_string(const std::string& s) {
  if (s == "JOS1") return ProblemName::JOS1;
  if (s == "SD") return ProblemName::SD;
  if (s == "TOI4") return ProblemName::TOI4;
  if (s == "TRIDIA") return ProblemName::TRIDIA;
  if (s == "FDS") return ProblemName::FDS;
  throw ConfigError("unknown problem name: " + s);
}

inline GVariant g_variant_from_string(const std::string& s) {
  if (s == "zero" || s == "0") return GVariant::Zero;
  if (s == "l1") return GVariant::L1Shifted;
  if (s == "indicator" || s == "box") return GVariant::Indicator;
  throw ConfigError("unknown g variant: " + s);
}

// Benchmark instance selector.  The box, when set, overrides the default
// sampling box (it does not constrain iterates).
struct ProblemSpec {
  ProblemName name = ProblemName::JOS1;
  Index n = 5;
  GVariant g = GVariant::Zero;
  std::optional<std::pair<Vector<double>, Vector<double>>> box;
};

// Convex quadratic 0.5 x'A x + b'x + c.
template <typename Scalar>
struct QuadraticForm {
  Matrix<Scalar> A;
  Vector<Scalar> b;
  Scalar c = Scalar(0);
};

// Reads a list of quadratic objectives from the comma-separated format
//
//   # comment
//   m,<count>
//   n,<dimension>
//   objective,<index>
//   A,<row of n entries>      (n rows)
//   b,<n entries>
//   c,<value>
//
// used by the data files shipping the fixed-size instances.
template <typename Scalar>
std::vector<QuadraticForm<Scalar>> load_quadratic_objectives(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open data file: " + path);
  Index m = -1, n = -1;
  std::vector<QuadraticForm<Scalar>> forms;
  Index a_row = 0;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) {
    throw IoError(path + ":" + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> tok;
    std::stringstream ss(line);
    std::string piece;
    while (std::getline(ss, piece, ',')) tok.push_back(piece);
    if (tok.empty()) continue;
    try {
      if (tok[0] == "m") {
        m = std::stol(tok.at(1));
      } else if (tok[0] == "n") {
        n = std::stol(tok.at(1));
      } else if (tok[0] == "objective") {
        if (m < 1 || n < 1) fail("objective before m/n");
        if (std::stol(tok.at(1)) != static_cast<long>(forms.size()))
          fail("objectives out of order");
        if (!forms.empty() && a_row != n) fail("incomplete A block");
        QuadraticForm<Scalar> q;
        q.A = Matrix<Scalar>::Zero(n, n);
        q.b = Vector<Scalar>::Zero(n);
        forms.push_back(std::move(q));
        a_row = 0;
      } else if (tok[0] == "A") {
        if (forms.empty() || a_row >= n) fail("unexpected A row");
        if (static_cast<Index>(tok.size()) != n + 1) fail("A row needs n entries");
        for (Index j = 0; j < n; ++j)
          forms.back().A(a_row, j) = static_cast<Scalar>(std::stod(tok[static_cast<std::size_t>(j + 1)]));
        ++a_row;
      } else if (tok[0] == "b") {
        if (forms.empty()) fail("b before objective");
        if (static_cast<Index>(tok.size()) != n + 1) fail("b needs n entries");
        for (Index j = 0; j < n; ++j)
          forms.back().b[j] = static_cast<Scalar>(std::stod(tok[static_cast<std::size_t>(j + 1)]));
      } else if (tok[0] == "c") {
        if (forms.empty()) fail("c before objective");
        forms.back().c = static_cast<Scalar>(std::stod(tok.at(1)));
      } else {
        fail("unknown record '" + tok[0] + "'");
      }
    } catch (const std::invalid_argument&) {
      fail("malformed number");
    } catch (const std::out_of_range&) {
      fail("missing field");
    }
  }
  if (m < 1 || n < 1) throw IoError(path + ": missing m/n header");
  if (!forms.empty() && a_row != n)
    throw IoError(path + ": incomplete A block in the last objective");
  if (static_cast<Index>(forms.size()) != m)
    throw IoError(path + ": expected " + std::to_string(m) + " objectives");
  for (const auto& q : forms)
    if (!q.A.isApprox(q.A.transpose()))
      throw IoError(path + ": A must be symmetric");
  return forms;
}

inline std::string data_file_path(const std::string& name) {
#ifdef MOPG_DATA_DIR
  return std::string(MOPG_DATA_DIR) + "/" + name;
#else
  return "data/" + name;
#endif
}

namespace detail {

template <typename Scalar>
SmoothPart<Scalar> make_quadratic_part(const QuadraticForm<Scalar>& form) {
  auto q = std::make_shared<const QuadraticForm<Scalar>>(form);
  SmoothPart<Scalar> part;
  part.eval = [q](const Vector<Scalar>& x) {
    return Scalar(0.5) * x.dot(q->A * x) + q->b.dot(x) + q->c;
  };
  part.grad = [q](const Vector<Scalar>& x) -> Vector<Scalar> {
    return q->A * x + q->b;
  };
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(form.A,
                                                    Eigen::EigenvaluesOnly);
  part.lipschitz = eig.eigenvalues().cwiseAbs().maxCoeff();
  return part;
}

// Shifted-l1 family attached to the smooth testbed problems:
// g_i(x) = ||x - (i-1) * ones||_1 / (i * n).
template <typename Scalar>
std::vector<NonsmoothPart<Scalar>> l1_shifted_parts(Index m, Index n) {
  std::vector<NonsmoothPart<Scalar>> parts;
  parts.reserve(static_cast<std::size_t>(m));
  for (Index i = 1; i <= m; ++i)
    parts.push_back(NonsmoothPart<Scalar>::scaled_shifted_l1(
        Scalar(1) / (Scalar(i) * Scalar(n)),
        Vector<Scalar>::Constant(n, Scalar(i - 1))));
  return parts;
}

}  // namespace detail

// Builds one of the named instances.  Allowed combinations:
//   JOS1 (any n)      g in {zero, l1}
//   TOI4 (n = 4)      g in {zero, l1}
//   TRIDIA (n = 3)    g in {zero, l1}
//   FDS (any n)       g in {zero, l1}     (no closed-form Lipschitz bound)
//   SD (n = 4)        g = indicator       (truss design, box-constrained)
template <typename Scalar>
MultiObjectiveProblem<Scalar> build_problem(const ProblemSpec& spec) {
  MultiObjectiveProblem<Scalar> problem;
  problem.name = to_string(spec.name);
  problem.n = spec.n;
  const Index n = spec.n;
  if (n < 1) throw ConfigError("build_problem: n must be >= 1");

  Index m = 0;
  Vector<Scalar> lo, hi;

  switch (spec.name) {
    case ProblemName::JOS1: {
      // f_1 = (1/n) sum x_j^2, f_2 = (1/n) sum (x_j - 2)^2.
      m = 2;
      const Scalar inv_n = Scalar(1) / Scalar(n);
      SmoothPart<Scalar> f1;
      f1.eval = [inv_n](const Vector<Scalar>& x) { return inv_n * x.squaredNorm(); };
      f1.grad = [inv_n](const Vector<Scalar>& x) -> Vector<Scalar> {
        return Scalar(2) * inv_n * x;
      };
      f1.lipschitz = Scalar(2) * inv_n;
      SmoothPart<Scalar> f2;
      f2.eval = [inv_n](const Vector<Scalar>& x) {
        return inv_n * (x.array() - Scalar(2)).matrix().squaredNorm();
      };
      f2.grad = [inv_n](const Vector<Scalar>& x) -> Vector<Scalar> {
        return Scalar(2) * inv_n * (x.array() - Scalar(2)).matrix();
      };
      f2.lipschitz = Scalar(2) * inv_n;
      problem.smooth = {f1, f2};
      lo = Vector<Scalar>::Constant(n, Scalar(-2));
      hi = Vector<Scalar>::Constant(n, Scalar(4));
      break;
    }
    case ProblemName::SD: {
      // Four-bar truss design: linear volume vs. displacement
      //   f_1 = 2 x_1 + sqrt(2) x_2 + sqrt(2) x_3 + x_4
      //   f_2 = 2/x_1 + 2 sqrt(2)/x_2 + 2 sqrt(2)/x_3 + 2/x_4
      // on the box [1, 3] x [sqrt(2), 3]^2 x [1, 3].
      if (n != 4) throw ConfigError("SD is a fixed n = 4 instance");
      m = 2;
      const Scalar r2 = std::sqrt(Scalar(2));
      Vector<Scalar> w1(4), w2(4);
      w1 << Scalar(2), r2, r2, Scalar(1);
      w2 << Scalar(2), Scalar(2) * r2, Scalar(2) * r2, Scalar(2);
      SmoothPart<Scalar> f1;
      f1.eval = [w1](const Vector<Scalar>& x) { return w1.dot(x); };
      f1.grad = [w1](const Vector<Scalar>&) -> Vector<Scalar> { return w1; };
      f1.lipschitz = Scalar(0);  // affine
      SmoothPart<Scalar> f2;
      f2.eval = [w2](const Vector<Scalar>& x) {
        return (w2.array() / x.array()).sum();
      };
      f2.grad = [w2](const Vector<Scalar>& x) -> Vector<Scalar> {
        return (-w2.array() / x.array().square()).matrix();
      };
      // Largest curvature on the box: 2 w2_j / x_j^3 at the lower bounds.
      f2.lipschitz = Scalar(4);
      problem.smooth = {f1, f2};
      lo.resize(4);
      hi.resize(4);
      lo << Scalar(1), r2, r2, Scalar(1);
      hi = Vector<Scalar>::Constant(4, Scalar(3));
      break;
    }
    case ProblemName::TOI4: {
      if (n != 4) throw ConfigError("TOI4 is a fixed n = 4 instance");
      const auto forms = load_quadratic_objectives<Scalar>(data_file_path("toi4.csv"));
      m = static_cast<Index>(forms.size());
      for (const auto& q : forms) {
        if (q.A.rows() != 4) throw ConfigError("TOI4 data must be n = 4");
        problem.smooth.push_back(detail::make_quadratic_part(q));
      }
      // Starting box keeps x_1 - x_2 away from zero so every run begins on
      // the same side of the f_2 valley.
      lo.resize(4);
      hi.resize(4);
      lo << Scalar(-2), Scalar(0.5), Scalar(-2), Scalar(-2);
      hi << Scalar(-0.5), Scalar(2), Scalar(2), Scalar(2);
      break;
    }
    case ProblemName::TRIDIA: {
      if (n != 3) throw ConfigError("TRIDIA is a fixed n = 3 instance");
      const auto forms = load_quadratic_objectives<Scalar>(data_file_path("tridia.csv"));
      m = static_cast<Index>(forms.size());
      for (const auto& q : forms) {
        if (q.A.rows() != 3) throw ConfigError("TRIDIA data must be n = 3");
        problem.smooth.push_back(detail::make_quadratic_part(q));
      }
      lo = Vector<Scalar>::Constant(n, Scalar(-1));
      hi = Vector<Scalar>::Constant(n, Scalar(1));
      break;
    }
    case ProblemName::FDS: {
      // f_1 = (1/n^2) sum j (x_j - j)^4
      // f_2 = exp(sum x_j / n) + ||x||^2
      // f_3 = (1/(n(n+1))) sum j (n - j + 1) exp(-x_j)
      // Gradients have no global Lipschitz constant; solved with
      // backtracking.
      m = 3;
      const Scalar nn = Scalar(n);
      SmoothPart<Scalar> f1, f2, f3;
      f1.eval = [nn](const Vector<Scalar>& x) {
        Scalar s = 0;
        for (Index j = 0; j < x.size(); ++j) {
          const Scalar d = x[j] - Scalar(j + 1);
          s += Scalar(j + 1) * d * d * d * d;
        }
        return s / (nn * nn);
      };
      f1.grad = [nn](const Vector<Scalar>& x) -> Vector<Scalar> {
        Vector<Scalar> g(x.size());
        for (Index j = 0; j < x.size(); ++j) {
          const Scalar d = x[j] - Scalar(j + 1);
          g[j] = Scalar(4) * Scalar(j + 1) * d * d * d / (nn * nn);
        }
        return g;
      };
      f2.eval = [nn](const Vector<Scalar>& x) {
        return std::exp(x.sum() / nn) + x.squaredNorm();
      };
      f2.grad = [nn](const Vector<Scalar>& x) -> Vector<Scalar> {
        const Scalar e = std::exp(x.sum() / nn) / nn;
        return (x.array() * Scalar(2) + e).matrix();
      };
      f3.eval = [nn](const Vector<Scalar>& x) {
        Scalar s = 0;
        for (Index j = 0; j < x.size(); ++j)
          s += Scalar(j + 1) * (nn - Scalar(j)) * std::exp(-x[j]);
        return s / (nn * (nn + Scalar(1)));
      };
      f3.grad = [nn](const Vector<Scalar>& x) -> Vector<Scalar> {
        Vector<Scalar> g(x.size());
        for (Index j = 0; j < x.size(); ++j)
          g[j] = -Scalar(j + 1) * (nn - Scalar(j)) * std::exp(-x[j]) /
                 (nn * (nn + Scalar(1)));
        return g;
      };
      problem.smooth = {f1, f2, f3};
      lo = Vector<Scalar>::Constant(n, Scalar(-2));
      hi = Vector<Scalar>::Constant(n, Scalar(2));
      break;
    }
  }

  // Nonsmooth family.
  switch (spec.g) {
    case GVariant::Zero:
      if (spec.name == ProblemName::SD)
        throw ConfigError("SD requires g = indicator");
      problem.nonsmooth.assign(static_cast<std::size_t>(m),
                               NonsmoothPart<Scalar>::zero());
      break;
    case GVariant::L1Shifted:
      if (spec.name == ProblemName::SD)
        throw ConfigError("SD requires g = indicator");
      problem.nonsmooth = detail::l1_shifted_parts<Scalar>(m, n);
      break;
    case GVariant::Indicator:
      if (spec.name != ProblemName::SD)
        throw ConfigError("g = indicator is only defined for SD");
      problem.nonsmooth.assign(
          static_cast<std::size_t>(m),
          NonsmoothPart<Scalar>::box_indicator(lo, hi));
      break;
  }

  if (spec.box) {
    if (spec.box->first.size() != n || spec.box->second.size() != n)
      throw ConfigError("build_problem: box override must have length n");
    problem.domain_lo = spec.box->first.template cast<Scalar>();
    problem.domain_hi = spec.box->second.template cast<Scalar>();
  } else {
    problem.domain_lo = lo;
    problem.domain_hi = hi;
  }
  validate(problem);
  return problem;
}

// `count` starts drawn uniformly from the domain box; deterministic in
// (spec, count, seed).  Every sampled point has finite F by construction
// (for SD the sampling box and the constraint box coincide).
template <typename Scalar>
std::vector<Vector<Scalar>> sample_initial_points(const ProblemSpec& spec,
                                                  int count,
                                                  std::uint64_t seed) {
  if (count < 1) throw ArgumentError("sample_initial_points: count must be >= 1");
  const auto problem = build_problem<Scalar>(spec);
  rng::Stream stream(seed);
  std::vector<Vector<Scalar>> points;
  points.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    points.push_back(stream.template uniform_vector<Scalar>(problem.domain_lo,
                                                            problem.domain_hi));
  return points;
}

}  // namespace mopg
