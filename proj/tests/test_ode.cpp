#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "cwc/ode.hpp"
#include "support.hpp"

using namespace cwc;

namespace {

std::vector<Rule> rules(const std::string& text) { return parse_model(text).rules; }

double decay_error(double dt) {
  OdeSystem sys = build_ode(rules("T : A =>, k=1\n"));
  auto c = integrate(sys, {1000.0}, 1.0, dt);
  return std::abs(c[0] - 1000 * std::exp(-1.0));
}

// Right-hand side of the flat toy model written out by hand.
// Order: A, B, C, A_IN, B_IN, C_IN.
using Toy = std::array<double, 6>;

Toy toy_rhs(const Toy& x) {
  Toy d{};
  const double* in[2] = {&x[0], &x[3]};
  for (int s = 0; s < 2; ++s) {
    double a = in[s][0], b = in[s][1], c = in[s][2];
    double* da = &d[3 * s];
    da[0] += a - 2 * 0.0015 * a * a - 0.002 * a * b - 0.0015 * a * c;
    da[1] += b - 2 * 0.0015 * b * b - 0.002 * a * b - 0.002 * b * c;
    da[2] += c - 2 * 0.0015 * c * c - 0.0015 * a * c - 0.002 * b * c;
  }
  d[0] += 0.01 * x[3];
  d[3] -= 0.01 * x[3];
  d[1] += 0.01 * x[4];
  d[4] -= 0.01 * x[4];
  d[5] += 0.01 * x[2];
  d[2] -= 0.01 * x[2];
  return d;
}

Toy toy_reference(double t_end, double h) {
  Toy x{0, 0, 2, 2, 2, 0};
  auto axpy = [](const Toy& a, double s, const Toy& b) {
    Toy r;
    for (int i = 0; i < 6; ++i) r[i] = a[i] + s * b[i];
    return r;
  };
  int n = static_cast<int>(std::lround(t_end / h));
  for (int i = 0; i < n; ++i) {
    Toy k1 = toy_rhs(x);
    Toy k2 = toy_rhs(axpy(x, h / 2, k1));
    Toy k3 = toy_rhs(axpy(x, h / 2, k2));
    Toy k4 = toy_rhs(axpy(x, h, k3));
    for (int j = 0; j < 6; ++j) x[j] += h / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
  }
  return x;
}

} // namespace

TEST(Ode, SystemFromRules) {
  OdeSystem sys = build_ode(rules("T : 2*A B => C, k=0.5\nT : C => A, k=2\n"));
  EXPECT_EQ(sys.species(), (std::vector<std::string>{"A", "B", "C"}));
  EXPECT_EQ(sys.stoich(0, 0), -2);
  EXPECT_EQ(sys.stoich(0, 1), -1);
  EXPECT_EQ(sys.stoich(0, 2), 1);
  EXPECT_EQ(sys.stoich(1, 0), 1);
  std::vector<double> c{3, 2, 5}, dc(3);
  EXPECT_DOUBLE_EQ(sys.rate(0, c), 0.5 * 9 * 2);
  sys.derivative(c, dc);
  EXPECT_DOUBLE_EQ(dc[0], -2 * 9 + 10);
  EXPECT_DOUBLE_EQ(dc[1], -9);
  EXPECT_DOUBLE_EQ(dc[2], 9 - 10);
}

TEST(Ode, BuildRejectsWhatItCannotModel) {
  EXPECT_THROW(build_ode(rules("labels L\nT : (~x|~X)@L => ~X, k=1\n")), Error);
  EXPECT_THROW(build_ode(rules("labels L\nT : A => B, k=1\nL : A => B, k=1\n")), Error);
  EXPECT_THROW(build_ode(rules("T : A => B, k=1\n"), {"A"}), Error);
  EXPECT_EQ(build_ode(rules("T : A => B, k=1\n"), {"Z", "A", "B"}).species_count(), 3u);
}

TEST(Ode, DecayEndpoint) {
  EXPECT_LT(decay_error(1e-2), 1e-6);
  EXPECT_EQ(substeps(1.0, 1e-2), 100u);
  EXPECT_EQ(substeps(0.005, 1e-2), 1u);
  EXPECT_EQ(substeps(1.0, 0.3), 4u);
}

TEST(Ode, FourthOrderConvergence) {
  double e1 = decay_error(0.2);
  double e2 = decay_error(0.1);
  double order = std::log2(e1 / e2);
  EXPECT_GE(order, 3.5);
  EXPECT_LE(order, 4.5);
}

TEST(Ode, DimerizationMatchesClosedForm) {
  // d[A]/dt = -2k[A]^2  →  A(t) = A0 / (1 + 2 k A0 t)
  OdeSystem sys = build_ode(rules("T : 2*A =>, k=0.001\n"));
  auto c = integrate(sys, {500.0}, 3.0, 1e-3);
  EXPECT_NEAR(c[0], 500 / (1 + 2 * 0.001 * 500 * 3), 1e-6);
}

TEST(Ode, ConservedQuantityStaysPut) {
  OdeSystem sys = build_ode(rules("T : A B => C, k=0.01\nT : C => A B, k=0.3\n"));
  auto c = integrate(sys, {100.0, 60.0, 5.0}, 20.0, 1e-2);
  EXPECT_NEAR(c[0] + c[2], 105.0, 1e-9);
  EXPECT_NEAR(c[1] + c[2], 65.0, 1e-9);
  // at equilibrium 0.01·A·B = 0.3·C
  auto eq = integrate(sys, c, 200.0, 1e-2);
  EXPECT_NEAR(0.01 * eq[0] * eq[1], 0.3 * eq[2], 1e-6);
}

TEST(Ode, FrozenComponentsDoNotMove) {
  OdeSystem sys = build_ode(rules("T : A B => C, k=0.1\n"));
  std::vector<char> frozen{0, 1, 0};
  auto c = integrate(sys, {10.0, 4.0, 0.0}, 1.0, 1e-2, frozen);
  EXPECT_EQ(c[1], 4.0);
  // A decays at rate 0.1·4, unaffected by B staying put
  EXPECT_NEAR(c[0], 10 * std::exp(-0.4), 1e-7);
  EXPECT_NEAR(c[2], 10 - c[0], 1e-9);
}

TEST(Ode, ZeroDurationIsIdentity) {
  OdeSystem sys = build_ode(rules("T : A => B, k=5\n"));
  EXPECT_EQ(integrate(sys, {3.0, 1.0}, 0.0, 1e-2), (std::vector<double>{3.0, 1.0}));
  EXPECT_THROW(integrate(sys, {3.0, 1.0}, -1.0, 1e-2), Error);
  EXPECT_THROW(integrate(sys, {3.0}, 1.0, 1e-2), Error);
}

TEST(Ode, ValuesAreClampedAtZero) {
  OdeSystem sys = build_ode(rules("T : A =>, k=100\n"));
  auto c = integrate(sys, {1.0}, 1.0, 0.05);  // h·k = 5, RK4 overshoots
  EXPECT_GE(c[0], 0.0);
}

TEST(Ode, BlowUpIsReported) {
  OdeSystem sys = build_ode(rules("T : 2*A => 3*A, k=1\n"));
  EXPECT_THROW(integrate(sys, {1e6}, 100.0, 1.0), NonFiniteState);
}

TEST(Deterministic, FlatToyMatchesHandWrittenSystem) {
  ModelFile m = support::load_model("toy_flat.cwc");
  RunOptions opt = default_options(m);
  RunResult r = run_deterministic(m, opt);
  Toy ref = toy_reference(35, 1e-3);
  const char* names[6] = {"A@top", "B@top", "C@top", "A_IN@top", "B_IN@top", "C_IN@top"};
  for (int j = 0; j < 6; ++j)
    EXPECT_NEAR(r.trajectory.final_value(names[j]), ref[j], 1e-6 * std::max(1.0, ref[j])) << names[j];
  EXPECT_EQ(r.trajectory.times.size(), 101u);
  EXPECT_EQ(r.trajectory.rows.front(), (std::vector<double>{2, 2, 0, 0, 0, 2}));
}

TEST(Deterministic, CompartmentsIntegrateSeparately) {
  ModelFile m = parse_model(
      "labels L\nL : A =>, k=1\nT : A => 2*A, k=1\nterm 10*A (|10*A)@L (|20*A)@L\n"
      "t_end 1\ndt_max 0.001\nmode deterministic\nobserve A@top A@L[0] A@L[1] A@L\n");
  RunResult r = run_deterministic(m, default_options(m));
  EXPECT_NEAR(r.trajectory.final_value("A@top"), 10 * std::exp(1.0), 1e-8);
  EXPECT_NEAR(r.trajectory.final_value("A@L[0]"), 10 * std::exp(-1.0), 1e-8);
  EXPECT_NEAR(r.trajectory.final_value("A@L[1]"), 20 * std::exp(-1.0), 1e-8);
  EXPECT_NEAR(r.trajectory.final_value("A@L"), 30 * std::exp(-1.0), 1e-8);
}

TEST(Deterministic, RejectsStructuralRules) {
  ModelFile m = support::load_model("toy.cwc");
  EXPECT_THROW(run_deterministic(m, default_options(m)), Error);
}
