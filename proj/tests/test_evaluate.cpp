#include <doctest.h>

#include "mfrc/evaluate.hpp"
#include "mfrc/systems.hpp"

using namespace mfrc;

namespace {

TimeSeries from_function(const std::function<Eigen::Vector3d(double)>& f, double t0, double t1,
                         double dt = 0.01) {
  TimeSeries ts;
  ts.t0 = t0;
  ts.dt = dt;
  const auto n = static_cast<Eigen::Index>(std::llround((t1 - t0) / dt)) + 1;
  ts.samples.resize(3, n);
  for (Eigen::Index j = 0; j < n; ++j) ts.samples.col(j) = f(t0 + static_cast<double>(j) * dt);
  return ts;
}

TimeSeries constant_series(const Eigen::Vector3d& v, double t1) {
  return from_function([&](double) { return v; }, 0.0, t1);
}

}  // namespace

TEST_CASE("nrmse: identical series give zero error") {
  auto f = [](double t) { return Eigen::Vector3d(std::sin(t), std::cos(t), std::sin(2 * t)); };
  const TimeSeries a = from_function(f, 0.0, 50.0);
  const ErrorReport rep = nrmse(a, a, 20.0, 50.0);
  CHECK(rep.avg == 0.0);
  CHECK(rep.per_var.maxCoeff() == 0.0);
}

TEST_CASE("nrmse: constant offset gives |c| over the range") {
  auto f = [](double t) {
    return Eigen::Vector3d(std::sin(t), 2.0 * std::cos(t), 5.0 + std::sin(3.0 * t));
  };
  const TimeSeries target = from_function(f, 0.0, 60.0);
  TimeSeries pred = target;
  const double c = 0.37;
  pred.samples.array() += c;
  const ErrorReport rep = nrmse(pred, target, 40.0, 60.0);
  // per-variable range over the window is 2, 4, 2 for full periods
  for (int i = 0; i < 3; ++i) {
    const double range = target.samples.row(i).tail(4001).maxCoeff() -
                         target.samples.row(i).tail(4001).minCoeff();
    CHECK(rep.per_var[i] == doctest::Approx(c / range).epsilon(1e-9));
  }
  CHECK(rep.avg == doctest::Approx(rep.per_var.mean()));
}

TEST_CASE("nrmse invariances: translation and joint scaling") {
  auto f = [](double t) {
    return Eigen::Vector3d(std::sin(1.3 * t), std::cos(0.7 * t), std::sin(t) + 0.2 * std::cos(3 * t));
  };
  const TimeSeries target = from_function(f, 0.0, 30.0);
  TimeSeries pred = target;
  pred.samples.row(0).array() += 0.1;
  pred.samples.row(2).array() -= 0.05;
  const double base = nrmse(pred, target, 10.0, 30.0).avg;

  TimeSeries pred_t = pred, target_t = target;
  pred_t.samples.array() += 13.7;
  target_t.samples.array() += 13.7;
  CHECK(std::abs(nrmse(pred_t, target_t, 10.0, 30.0).avg - base) < 1e-12);

  TimeSeries pred_s = pred, target_s = target;
  pred_s.samples *= -4.5;
  target_s.samples *= -4.5;
  CHECK(std::abs(nrmse(pred_s, target_s, 10.0, 30.0).avg - base) < 1e-12);
}

TEST_CASE("nrmse rejects degenerate normalizers and bad windows") {
  const TimeSeries c = constant_series({1.0, 2.0, 3.0}, 50.0);
  const TimeSeries s = from_function(
      [](double t) { return Eigen::Vector3d(std::sin(t), std::cos(t), t); }, 0.0, 50.0);
  CHECK_THROWS_AS(nrmse(s, c, 10.0, 50.0), NumericError);   // zero target range
  CHECK_THROWS_AS(nrmse(s, s, 100.0, 50.0), ValidationError);  // window not covered
}

TEST_CASE("epsilon_ratio") {
  CHECK(epsilon_ratio(0.1, 0.1) == 1.0);
  CHECK(epsilon_ratio(0.2, 0.1) == doctest::Approx(2.0));
  CHECK_THROWS_AS(epsilon_ratio(0.1, 0.0), NumericError);
}

TEST_CASE("detect_fixed_point: constants, oscillations, decaying transients") {
  const TimeSeries c = constant_series({1.5, -2.0, 0.25}, 30.0);
  const auto fp = detect_fixed_point(c);
  REQUIRE(fp.has_value());
  CHECK((*fp - Eigen::Vector3d(1.5, -2.0, 0.25)).norm() < 1e-12);

  const TimeSeries s = from_function(
      [](double t) { return Eigen::Vector3d(std::sin(2 * M_PI * t / 5), 1.0 + 0.5 * std::cos(t), -1.0 + std::sin(3 * t)); },
      0.0, 60.0);
  CHECK_FALSE(detect_fixed_point(s).has_value());

  // exponential decay to a known limit: detectable once the tail deviation
  // falls under the tolerance
  const Eigen::Vector3d lim(2.0, -1.0, 0.5);
  const TimeSeries d = from_function(
      [&](double t) { return Eigen::Vector3d(lim + Eigen::Vector3d::Constant(std::exp(-t))); },
      0.0, 30.0);
  const auto fpd = detect_fixed_point(d);
  REQUIRE(fpd.has_value());
  CHECK((*fpd - lim).lpNorm<Eigen::Infinity>() < 1e-4);
}

TEST_CASE("detect_periodicity: synthetic periods") {
  const TimeSeries s1 = from_function(
      [](double t) {
        const double v = std::sin(2 * M_PI * t / 5.0);
        return Eigen::Vector3d(v, v, v);
      },
      0.0, 60.0);
  const auto p1 = detect_periodicity(s1);
  REQUIRE(p1.has_value());
  CHECK(std::abs(p1->period - 5.0) < 0.05);
  CHECK(p1->distinct_maxima == 1);

  // period-2 flavor: alternating tall and short maxima, full period 10
  const TimeSeries s2 = from_function(
      [](double t) {
        const double v = std::sin(2 * M_PI * t / 5.0) + 0.3 * std::sin(M_PI * t / 5.0);
        return Eigen::Vector3d(v, v, v);
      },
      0.0, 60.0);
  const auto p2 = detect_periodicity(s2);
  REQUIRE(p2.has_value());
  CHECK(std::abs(p2->period - 10.0) < 0.1);
  CHECK(p2->distinct_maxima == 2);

  CHECK_FALSE(detect_periodicity(constant_series({1, 1, 1}, 60.0)).has_value());
}

TEST_CASE("detect_periodicity: a chaotic source signal is not periodic") {
  const GuanParams p{5, 15, 3, 12, 1.0};
  const TimeSeries a1 = integrate_guan(p, {1, 1, 1}, 0.0, 300.0, 0.01);
  CHECK_FALSE(detect_periodicity(a1.segment(250.0, 300.0).rebased(0.0)).has_value());
  CHECK_FALSE(detect_fixed_point(a1.segment(250.0, 300.0).rebased(0.0)).has_value());
}

TEST_CASE("fixed-point and periodicity detectors are mutually exclusive") {
  const TimeSeries c = constant_series({0.4, 0.4, 0.4}, 60.0);
  CHECK(detect_fixed_point(c).has_value());
  CHECK_FALSE(detect_periodicity(c).has_value());

  const TimeSeries s = from_function(
      [](double t) {
        const double v = std::sin(2 * M_PI * t / 7.0);
        return Eigen::Vector3d(v, 0.5 * v, 2.0 * v);
      },
      0.0, 60.0);
  CHECK(detect_periodicity(s).has_value());
  CHECK_FALSE(detect_fixed_point(s).has_value());
}

TEST_CASE("classify applies the five rules in order") {
  const GuanParams p{5, 15, 3, 12, 1.0};
  const TimeSeries a1 = integrate_guan(p, {1, 1, 1}, 400.0, 1000.0, 0.01).rebased(0.0);
  const TimeSeries a2 = integrate_guan(p, {1, 1, -1}, 400.0, 1000.0, 0.01).rebased(0.0);

  // an exact copy of the own target is Reconstructed (chaotic, so rules 1-2
  // fail; the other attractor is too far for rule 3)
  const BehaviorLabel own = classify(a1, a1, a2);
  CHECK(own.kind == Behavior::Reconstructed);
  CHECK(own.theta_own == 0.0);
  CHECK(own.theta_other > 0.35);

  // a constant is a fixed point
  const BehaviorLabel fp = classify(constant_series({8.0, 1.0, 6.0}, 600.0), a1, a2);
  CHECK(fp.kind == Behavior::FixedPoint);
  REQUIRE(fp.fixed_point.has_value());

  // an exact copy of the other target is Switched (rule 3 precedes rule 4)
  const BehaviorLabel sw = classify(a2, a1, a2);
  CHECK(sw.kind == Behavior::Switched);

  // a periodic tail wins over everything
  const TimeSeries lc = from_function(
      [](double t) {
        const double v = std::sin(2 * M_PI * t / 5.0);
        return Eigen::Vector3d(10 + v, 2 + v, 8 + v);
      },
      0.0, 600.0);
  const BehaviorLabel yl = classify(lc, a1, a2);
  CHECK(yl.kind == Behavior::LimitCycle);
  REQUIRE(yl.period.has_value());
  CHECK(std::abs(*yl.period - 5.0) < 0.05);
}

TEST_CASE("rule order 3 vs 4 is observable when both thresholds pass") {
  // same (chaotic) series as own and other target: both rules would fire;
  // the implemented order yields Switched, the swapped order would yield
  // Reconstructed
  const GuanParams p{5, 15, 3, 12, 1.0};
  const TimeSeries a1 = integrate_guan(p, {1, 1, 1}, 400.0, 1000.0, 0.01).rebased(0.0);
  const BehaviorLabel lab = classify(a1, a1, a1);
  CHECK(lab.kind == Behavior::Switched);
  CHECK(lab.theta_own == 0.0);
  CHECK(lab.theta_other == 0.0);
}

TEST_CASE("classify yields Unclassified when nothing matches") {
  const GuanParams p{5, 15, 3, 12, 1.0};
  const TimeSeries a1 = integrate_guan(p, {1, 1, 1}, 400.0, 1000.0, 0.01).rebased(0.0);
  const TimeSeries a2 = integrate_guan(p, {1, 1, -1}, 400.0, 1000.0, 0.01).rebased(0.0);
  // far-away aperiodic prediction: a chaotic Lorenz trace scaled out of range
  const LorenzParams lp;
  TimeSeries far = integrate_lorenz(lp, {1, 1, 1}, 400.0, 1000.0, 0.01).rebased(0.0);
  far.samples *= 30.0;
  const BehaviorLabel lab = classify(far, a1, a2);
  CHECK(lab.kind == Behavior::Unclassified);
  CHECK(lab.theta_own > 0.35);
  CHECK(lab.theta_other > 0.35);
}

TEST_CASE("classify propagates degenerate-normalizer errors") {
  // ramp: not constant in the trailing window, not periodic, compared
  // against a constant target
  const TimeSeries ramp = from_function(
      [](double t) { return Eigen::Vector3d(t, 2 * t, -t); }, 0.0, 600.0);
  const TimeSeries c = constant_series({1, 1, 1}, 600.0);
  CHECK_THROWS_AS(classify(ramp, c, c), NumericError);
}
