#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "filt_snn/analysis.hpp"

using namespace filt_snn;
using doctest::Approx;

namespace {

EquilibriumProblem problem(std::vector<double> inputs, double shift) {
  EquilibriumProblem p;
  p.input_times = std::move(inputs);
  p.delta_t = shift;
  return p;
}

}  // namespace

TEST_CASE("potential change reference values") {
  const auto p = problem({0.0, 2.0}, 0.5);
  CHECK(delta_u(3.0, p) == Approx(-0.008349044199189184).epsilon(1e-12));
  CHECK(delta_u(5.0, p) == Approx(0.00936338253939385).epsilon(1e-12));
}

TEST_CASE("potential change is zero without a shift or before the first input") {
  const auto flat = problem({0.0, 2.0}, 0.0);
  for (double t = 0.05; t <= 10.0; t += 0.37) CHECK(delta_u(t, flat) == 0.0);
  const auto p = problem({1.0, 2.0}, 0.5);
  CHECK(delta_u(0.5, p) == 0.0);
  CHECK(delta_u(1.0, p) == 0.0);
}

TEST_CASE("total equals the sum of per-input contributions") {
  const auto p = problem({0.0, 2.0}, 0.5);
  for (double t = 0.01; t <= 10.0; t += 0.01) {
    const auto terms = delta_u_terms(t, p);
    REQUIRE(terms.size() == 2);
    CHECK(delta_u(t, p) == Approx(terms[0] + terms[1]).epsilon(1e-15));
  }
}

TEST_CASE("equilibrium reference values") {
  CHECK(find_t_E(problem({0.0, 2.0}, 0.5))->t_e == Approx(4.091962142651711).epsilon(1e-7));
  CHECK(find_t_E(problem({0.0}, 0.5))->t_e == Approx(3.129945399051217).epsilon(1e-7));
  CHECK(find_t_E(problem({0.0, 1.0}, 0.5))->t_e == Approx(3.6235663831066507).epsilon(1e-7));
  CHECK(find_t_E(problem({0.0}, 2.0))->t_e == Approx(3.9267376127342732).epsilon(1e-7));
}

TEST_CASE("equilibrium has the attractor sign structure") {
  for (double shift : {0.1, 0.5, 1.0, 2.0}) {
    for (double gap : {0.0, 1.0, 2.0, 3.0}) {
      const auto p = gap == 0.0 ? problem({0.0}, shift) : problem({0.0, gap}, shift);
      const auto eq = find_t_E(p);
      REQUIRE(eq.has_value());
      CHECK(std::abs(delta_u(eq->t_e, p)) < 1e-6);
      CHECK(delta_u(eq->t_e + 0.01, p) > 0.0);
      CHECK(delta_u(eq->t_e - 0.01, p) < 0.0);
    }
  }
}

TEST_CASE("no shift, no equilibrium") {
  CHECK_FALSE(find_t_E(problem({0.0, 2.0}, 0.0)).has_value());
  CHECK_FALSE(find_t_E(problem({}, 0.5)).has_value());
}

TEST_CASE("several roots: the latest attractor is reported and flagged") {
  const auto eq = find_t_E(problem({0.0, 3.0}, 0.1));
  REQUIRE(eq.has_value());
  CHECK(eq->attractor_roots == 2);
  CHECK(eq->t_e > 4.0);
}

TEST_CASE("single-input equilibrium grows with the shift") {
  double prev = 0.0;
  for (int k = 1; k <= 20; ++k) {
    const auto eq = find_t_E(problem({0.0}, 0.1 * k));
    REQUIRE(eq.has_value());
    CHECK(eq->t_e >= prev);
    prev = eq->t_e;
  }
}

TEST_CASE("problem validation") {
  CHECK_THROWS_AS(find_t_E(problem({2.0, 1.0}, 0.5)), std::invalid_argument);
  CHECK_THROWS_AS(find_t_E(problem({-1.0}, 0.5)), std::invalid_argument);
  CHECK_THROWS_AS(find_t_E(problem({0.0}, -0.5)), std::invalid_argument);
}

TEST_CASE("convergence from both sides") {
  const auto p = problem({0.0, 2.0}, 0.5);
  const double te = find_t_E(p)->t_e;
  for (double target : {te + 1.1, te - 1.0}) {
    const double w = equal_weight_for_spike(p, target);
    const auto r = convergence_run(p, {w, w}, 200);
    REQUIRE_FALSE(r.diverged);
    REQUIRE(r.spike_times.size() == 200);
    CHECK(std::abs(r.spike_times.front() - te) >= 1.0);
    CHECK(std::abs(r.spike_times.back() - te) <= p.window.dt + 0.2);
  }
}

TEST_CASE("convergence without a shift is constant") {
  const auto p = problem({0.0, 2.0}, 0.0);
  const auto r = convergence_run(p, {10.0, 10.0}, 30);
  for (double t : r.spike_times) CHECK(t == r.spike_times.front());
}

TEST_CASE("silent start is a precondition failure, silence later is divergence") {
  const auto p = problem({0.0, 2.0}, 0.5);
  CHECK_THROWS_AS(convergence_run(p, {1.0, 1.0}, 10), std::invalid_argument);
  // A huge rate overshoots into silence.
  const auto r = convergence_run(p, {20.0, 20.0}, 50, 500.0);
  CHECK(r.diverged);
  CHECK(r.spike_times.size() < 50);
}

TEST_CASE("weight search hits the requested spike time") {
  const auto p = problem({0.0, 2.0}, 0.5);
  const double w = equal_weight_for_spike(p, 5.0);
  std::vector<WeightedInput> in{{w, SpikeTrain::single(0.0)}, {w, SpikeTrain::single(2.0)}};
  CHECK(*simulate_neuron(in, p.params, p.window).first() <= 5.0);
  in[0].weight = in[1].weight = w - 1e-6;
  const auto later = simulate_neuron(in, p.params, p.window).first();
  CHECK((!later || *later > 4.95));
}

TEST_CASE("two identical trains reduce to a convergence run") {
  TwoTrainSetup s = default_two_train_setup();
  s.train_b = s.train_a;
  s.iterations = 60;
  const auto two = two_train_run(s);
  const auto one = convergence_run(problem({0.0, 2.0}, 0.5), s.initial_weights, 60);
  REQUIRE(two.steps.size() == one.spike_times.size());
  for (std::size_t i = 0; i < one.spike_times.size(); ++i) CHECK(two.steps[i].spike_time == one.spike_times[i]);
}

TEST_CASE("two-train runs are seed-deterministic and settle near each equilibrium") {
  const auto a = two_train_run(default_two_train_setup());
  const auto b = two_train_run(default_two_train_setup());
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].train == b.steps[i].train);
    CHECK(a.steps[i].spike_time == b.steps[i].spike_time);
  }
  REQUIRE(a.t_e_a);
  REQUIRE(a.t_e_b);
  CHECK(a.t_e_a->t_e == Approx(4.091962142651711).epsilon(1e-7));
  CHECK(a.t_e_b->t_e == Approx(3.6235663831066507).epsilon(1e-7));
  REQUIRE(a.steps.size() == 300);
  for (std::size_t i = 250; i < 300; ++i) {
    const double te = a.steps[i].train == 0 ? a.t_e_a->t_e : a.t_e_b->t_e;
    CHECK(std::abs(a.steps[i].spike_time - te) <= 0.5);
  }
  TwoTrainSetup other = default_two_train_setup();
  other.seed = 2;
  const auto c = two_train_run(other);
  bool differs = false;
  for (std::size_t i = 0; i < std::min(a.steps.size(), c.steps.size()); ++i) differs |= a.steps[i].train != c.steps[i].train;
  CHECK(differs);
}

TEST_CASE("two-train setup validation") {
  TwoTrainSetup s = default_two_train_setup();
  s.initial_weights = {1.0};
  CHECK_THROWS_AS(two_train_run(s), std::invalid_argument);
}

TEST_CASE("series csv") {
  std::ostringstream out;
  write_series_csv(out, {{0.5, "total", -0.25}, {1.0, "input_1", 3.0}});
  CHECK(out.str() == "x,series,value\n0.5,total,-0.25\n1,input_1,3\n");
}
