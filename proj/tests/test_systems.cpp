#include <doctest.h>

#include "mfrc/systems.hpp"

using namespace mfrc;

namespace {

// bounding box of a trajectory over [t_from, end]
std::pair<Eigen::Vector3d, Eigen::Vector3d> bbox(const TimeSeries& ts, double t_from) {
  const Eigen::Index a = ts.index_of(t_from);
  Eigen::Vector3d lo, hi;
  for (int i = 0; i < 3; ++i) {
    lo[i] = ts.samples.row(i).tail(ts.size() - a).minCoeff();
    hi[i] = ts.samples.row(i).tail(ts.size() - a).maxCoeff();
  }
  return {lo, hi};
}

bool boxes_disjoint(const std::pair<Eigen::Vector3d, Eigen::Vector3d>& a,
                    const std::pair<Eigen::Vector3d, Eigen::Vector3d>& b) {
  for (int i = 0; i < 3; ++i)
    if (a.second[i] < b.first[i] || b.second[i] < a.first[i]) return true;
  return false;
}

}  // namespace

TEST_CASE("guan_rhs evaluates the vector field") {
  const GuanParams p{5, 15, 3, 12, 1.0};
  const SystemState d = guan_rhs({1, 1, 1}, p);
  // hand evaluation: (5*1 - 1*1 - 1 + 12, -15 + 1, -3 + 1)
  CHECK(d[0] == doctest::Approx(15.0).epsilon(1e-15));
  CHECK(d[1] == doctest::Approx(-14.0).epsilon(1e-15));
  CHECK(d[2] == doctest::Approx(-2.0).epsilon(1e-15));

  const SystemState at0 = guan_rhs({0, 0, 0}, p);
  CHECK(at0[0] == 12.0);
  CHECK(at0[1] == 0.0);
  CHECK(at0[2] == 0.0);
}

TEST_CASE("guan_rhs timescale multiplier scales the whole field exactly") {
  GuanParams p{5, 15, 3, 12, 1.0};
  GuanParams p2 = p;
  p2.delta = 2.0;
  for (const SystemState x : {SystemState{1, 1, 1}, SystemState{-2, 0.5, 3}}) {
    const SystemState a = guan_rhs(x, p);
    const SystemState b = guan_rhs(x, p2);
    for (int i = 0; i < 3; ++i) CHECK(b[i] == 2.0 * a[i]);
  }
}

TEST_CASE("lorenz_rhs evaluates the vector field and its equilibria") {
  const LorenzParams p;
  const SystemState at0 = lorenz_rhs({0, 0, 0}, p);
  CHECK(at0.norm() == 0.0);

  const SystemState d = lorenz_rhs({1, 1, 1}, p);
  CHECK(d[0] == doctest::Approx(0.0));
  CHECK(d[1] == doctest::Approx(26.0));
  CHECK(d[2] == doctest::Approx(1.0 - 8.0 / 3.0));

  // classic nontrivial equilibrium
  const double c = std::sqrt(p.beta * (p.rho - 1.0));
  const SystemState eq = lorenz_rhs({c, c, p.rho - 1.0}, p);
  CHECK(eq.lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("rk4_step matches the exponential for x' = -x") {
  auto rhs = [](double, const SystemState& x) { return SystemState(-x); };
  const SystemState x1 = rk4_step(rhs, SystemState{1, 1, 1}, 0.0, 0.01);
  CHECK(std::abs(x1[0] - std::exp(-0.01)) < 1e-10);

  auto zero = [](double, const SystemState&) { return SystemState(0, 0, 0); };
  const SystemState same = rk4_step(zero, SystemState{3, -1, 2}, 0.0, 0.5);
  CHECK(same == SystemState(3, -1, 2));
}

TEST_CASE("rk4 global error drops ~16x when the step is halved") {
  auto rhs = [](double, const SystemState& x) { return SystemState(-x); };
  auto global_error = [&](double dt) {
    SystemState x{1, 1, 1};
    const auto n = static_cast<int>(std::llround(1.0 / dt));
    for (int k = 0; k < n; ++k) x = rk4_step(rhs, x, k * dt, dt);
    return std::abs(x[0] - std::exp(-1.0));
  };
  const double ratio = global_error(0.02) / global_error(0.01);
  CHECK(ratio > 14.0);
  CHECK(ratio < 18.0);
}

TEST_CASE("integrate sampling contract") {
  const GuanParams p;
  const TimeSeries ts = integrate_guan(p, {1, 1, 1}, 0.0, 1.0, 0.01);
  CHECK(ts.size() == 101);
  CHECK(ts.samples.col(0) == Eigen::Vector3d(1, 1, 1));
  CHECK(ts.dt == 0.01);

  CHECK_THROWS_AS(integrate_guan(p, {1, 1, 1}, 0.0, 1.005, 0.01), ValidationError);
  CHECK_THROWS_AS(integrate_guan(p, {1, 1, 1}, 1.0, 0.5, 0.01), ValidationError);
}

TEST_CASE("integrate reports blow-up with the failure time") {
  // x' = x^2 from 1 blows up at t = 1
  auto rhs = [](double, const SystemState& x) { return SystemState(x.array().square()); };
  try {
    integrate(rhs, SystemState{1, 1, 1}, 0.0, 2.0, 0.01);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("blew up at t=") != std::string::npos);
  }
}

TEST_CASE("Case-I attractors are bounded and disjoint in state space") {
  const GuanParams p{5, 15, 3, 12, 1.0};
  const TimeSeries a1 = integrate_guan(p, {1, 1, 1}, 0.0, 600.0, 0.01);
  const TimeSeries a2 = integrate_guan(p, {1, 1, -1}, 0.0, 600.0, 0.01);
  CHECK(a1.samples.cwiseAbs().maxCoeff() < 100.0);
  CHECK(a2.samples.cwiseAbs().maxCoeff() < 100.0);
  CHECK(boxes_disjoint(bbox(a1, 200.0), bbox(a2, 200.0)));
}

TEST_CASE("Case-II double-scroll source is bounded") {
  const GuanParams p{5, 8, 2, 2, 1.0};
  const TimeSeries b1 = integrate_guan(p, {1, 1, 1}, 0.0, 600.0, 0.01);
  CHECK(b1.samples.cwiseAbs().maxCoeff() < 100.0);
}

TEST_CASE("Lorenz trajectory from (1,1,1) stays bounded over 600 time units") {
  const LorenzParams p;
  const TimeSeries l = integrate_lorenz(p, {1, 1, 1}, 0.0, 600.0, 0.01);
  CHECK(l.samples.cwiseAbs().maxCoeff() < 100.0);
}

TEST_CASE("TimeSeries segment and rebase") {
  const GuanParams p;
  const TimeSeries ts = integrate_guan(p, {1, 1, 1}, 0.0, 2.0, 0.01);
  const TimeSeries seg = ts.segment(0.5, 1.5);
  CHECK(seg.size() == 101);
  CHECK(seg.t0 == doctest::Approx(0.5));
  CHECK(seg.samples.col(0) == ts.samples.col(50));
  const TimeSeries re = seg.rebased(0.0);
  CHECK(re.t0 == 0.0);
  CHECK(re.samples == seg.samples);
  CHECK_THROWS_AS(ts.segment(0.5001, 1.0), ValidationError);
}
