#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mopg/problem.hpp"
#include "mopg/random.hpp"
#include "mopg/testbed.hpp"
#include "oracles.hpp"

using mopg::Extended;
using mopg::GVariant;
using mopg::Index;
using mopg::MultiObjectiveProblem;
using mopg::NonsmoothPart;
using mopg::ProblemName;
using mopg::ProblemSpec;
using mopg::Vector;

namespace {

ProblemSpec spec_of(ProblemName name, Index n, GVariant g) {
  ProblemSpec s;
  s.name = name;
  s.n = n;
  s.g = g;
  return s;
}

}  // namespace

TEST_CASE("Extended value semantics") {
  Extended<double> a(1.5), inf = Extended<double>::infinity();
  CHECK(a.is_finite());
  CHECK(a.value() == 1.5);
  CHECK(!inf.is_finite());
  CHECK_THROWS_AS(inf.value(), mopg::ArgumentError);
  CHECK((a + inf) == inf);
  CHECK(a < inf);
  CHECK(!(inf < a));
  CHECK(std::isinf(inf.as_ieee()));
}

TEST_CASE("JOS1 objective values and gradients at hand-computed points") {
  const auto problem =
      mopg::build_problem<double>(spec_of(ProblemName::JOS1, 2, GVariant::Zero));
  Vector<double> x(2);
  x << 0, 0;
  const auto F = mopg::eval_F(problem, x);
  CHECK(F[0].value() == doctest::Approx(0.0));
  CHECK(F[1].value() == doctest::Approx(4.0));

  Vector<double> y(2);
  y << 1, 1;
  const auto G = mopg::eval_grads(problem, y);
  CHECK(G(0, 0) == doctest::Approx(1.0));
  CHECK(G(0, 1) == doctest::Approx(1.0));
  CHECK(G(1, 0) == doctest::Approx(-1.0));
  CHECK(G(1, 1) == doctest::Approx(-1.0));
}

TEST_CASE("BoxIndicator evaluates to +infinity outside the box") {
  auto box = NonsmoothPart<double>::box_indicator(
      Vector<double>::Constant(2, -1.0), Vector<double>::Constant(2, 1.0));
  Vector<double> inside(2), outside(2);
  inside << 0.5, -1.0;
  outside << 0.5, 1.0 + 1e-12;
  CHECK(box.eval(inside).value() == 0.0);
  CHECK(!box.eval(outside).is_finite());
}

TEST_CASE("shifted l1 evaluation") {
  auto part = NonsmoothPart<double>::scaled_shifted_l1(
      0.5, Vector<double>::Constant(3, 1.0));
  Vector<double> x(3);
  x << 0, 1, 3;
  CHECK(part.eval(x).value() == doctest::Approx(0.5 * (1 + 0 + 2)));
  CHECK_THROWS_AS(
      NonsmoothPart<double>::scaled_shifted_l1(-1.0, Vector<double>::Zero(2)),
      mopg::ArgumentError);
}

TEST_CASE("dimension mismatches are rejected") {
  const auto problem =
      mopg::build_problem<double>(spec_of(ProblemName::JOS1, 3, GVariant::Zero));
  Vector<double> bad(2);
  bad << 0, 0;
  CHECK_THROWS_AS(mopg::eval_F(problem, bad), mopg::ArgumentError);
  CHECK_THROWS_AS(mopg::eval_grads(problem, bad), mopg::ArgumentError);
}

TEST_CASE("finite_objective_values rejects infinite components") {
  std::vector<Extended<double>> F{1.0, Extended<double>::infinity()};
  CHECK_THROWS_AS(mopg::finite_objective_values(F), mopg::ArgumentError);
}

TEST_CASE("gradients match finite differences across the testbed") {
  const std::vector<ProblemSpec> specs = {
      spec_of(ProblemName::JOS1, 5, GVariant::Zero),
      spec_of(ProblemName::TOI4, 4, GVariant::Zero),
      spec_of(ProblemName::TRIDIA, 3, GVariant::Zero),
      spec_of(ProblemName::FDS, 6, GVariant::Zero),
      spec_of(ProblemName::SD, 4, GVariant::Indicator),
  };
  mopg::rng::Stream stream(42);
  for (const auto& spec : specs) {
    const auto problem = mopg::build_problem<double>(spec);
    for (int rep = 0; rep < 5; ++rep) {
      const auto x = stream.uniform_vector<double>(problem.domain_lo,
                                                   problem.domain_hi);
      const auto G = mopg::eval_grads(problem, x);
      for (Index i = 0; i < problem.m(); ++i) {
        const auto& f = problem.smooth[static_cast<std::size_t>(i)];
        const auto fd = oracles::fd_gradient(f.eval, x);
        const double scale = std::max(1.0, G.row(i).norm());
        CHECK((G.row(i).transpose() - fd).norm() / scale < 1e-5);
      }
    }
  }
}

TEST_CASE("smooth parts are convex along random segments") {
  const std::vector<ProblemSpec> specs = {
      spec_of(ProblemName::JOS1, 4, GVariant::Zero),
      spec_of(ProblemName::TOI4, 4, GVariant::Zero),
      spec_of(ProblemName::TRIDIA, 3, GVariant::Zero),
      spec_of(ProblemName::FDS, 5, GVariant::Zero),
      spec_of(ProblemName::SD, 4, GVariant::Indicator),
  };
  mopg::rng::Stream stream(7);
  for (const auto& spec : specs) {
    const auto problem = mopg::build_problem<double>(spec);
    for (int rep = 0; rep < 5; ++rep) {
      const auto a = stream.uniform_vector<double>(problem.domain_lo,
                                                   problem.domain_hi);
      const auto b = stream.uniform_vector<double>(problem.domain_lo,
                                                   problem.domain_hi);
      for (const auto& f : problem.smooth)
        CHECK(oracles::convex_on_segment(f.eval, a, b));
    }
  }
}

TEST_CASE("descent lemma holds at the declared Lipschitz constants") {
  const std::vector<ProblemSpec> specs = {
      spec_of(ProblemName::JOS1, 5, GVariant::Zero),
      spec_of(ProblemName::TOI4, 4, GVariant::Zero),
      spec_of(ProblemName::TRIDIA, 3, GVariant::Zero),
      spec_of(ProblemName::SD, 4, GVariant::Indicator),
  };
  mopg::rng::Stream stream(11);
  for (const auto& spec : specs) {
    const auto problem = mopg::build_problem<double>(spec);
    for (int rep = 0; rep < 20; ++rep) {
      const auto y = stream.uniform_vector<double>(problem.domain_lo,
                                                   problem.domain_hi);
      const auto z = stream.uniform_vector<double>(problem.domain_lo,
                                                   problem.domain_hi);
      for (const auto& f : problem.smooth) {
        REQUIRE(f.lipschitz.has_value());
        const double lhs = f.eval(z);
        const double rhs = f.eval(y) + f.grad(y).dot(z - y) +
                           *f.lipschitz / 2 * (z - y).squaredNorm();
        CHECK(lhs <= rhs + 1e-9 * std::max(1.0, std::abs(rhs)));
      }
    }
  }
}

TEST_CASE("lipschitz_max aggregates component constants") {
  const auto jos1 =
      mopg::build_problem<double>(spec_of(ProblemName::JOS1, 5, GVariant::Zero));
  REQUIRE(jos1.lipschitz_max().has_value());
  CHECK(*jos1.lipschitz_max() == doctest::Approx(0.4));

  const auto fds =
      mopg::build_problem<double>(spec_of(ProblemName::FDS, 5, GVariant::Zero));
  CHECK(!fds.lipschitz_max().has_value());

  const auto sd =
      mopg::build_problem<double>(spec_of(ProblemName::SD, 4, GVariant::Indicator));
  REQUIRE(sd.lipschitz_max().has_value());
  CHECK(*sd.lipschitz_max() == doctest::Approx(4.0));
}

TEST_CASE("F is finite on the domain box intersected with dom g") {
  const std::vector<ProblemSpec> specs = {
      spec_of(ProblemName::JOS1, 5, GVariant::L1Shifted),
      spec_of(ProblemName::SD, 4, GVariant::Indicator),
      spec_of(ProblemName::FDS, 4, GVariant::L1Shifted),
  };
  mopg::rng::Stream stream(3);
  for (const auto& spec : specs) {
    const auto problem = mopg::build_problem<double>(spec);
    for (int rep = 0; rep < 50; ++rep) {
      const auto x = stream.uniform_vector<double>(problem.domain_lo,
                                                   problem.domain_hi);
      for (const auto& Fi : mopg::eval_F(problem, x)) CHECK(Fi.is_finite());
    }
  }
}
