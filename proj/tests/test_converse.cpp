#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include <doctest.h>

#include "dppsim/error.hpp"
#include "dppsim/rate_power.hpp"
#include "dppsim/stochastic.hpp"
#include "test_util.hpp"

using namespace dppsim;

namespace {

// Independent reference: the cheapest-fraction curve rebuilt by brute force
// over deterministic transmit sets, and the shortest horizon found by
// golden-section maximization of the mixture margin at each t.
struct BruteCurve {
  std::vector<std::pair<double, double>> corners;  // (rate, fraction)
  double max_rate = 0.0;

  explicit BruteCurve(const ChannelModel& ch) {
    int m = ch.num_positive();
    for (int mask = 0; mask < (1 << m); ++mask) {
      double rate = 0.0, frac = 0.0;
      for (int k = 1; k <= m; ++k) {
        if (mask & (1 << (k - 1))) {
          rate += ch.omega(k) * ch.prob(k);
          frac += ch.prob(k);
        }
      }
      corners.emplace_back(rate, frac);
      max_rate = std::max(max_rate, rate);
    }
  }

  double power(double mu) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : corners) {
      if (std::abs(a.first - mu) <= 1e-12) best = std::min(best, a.second);
      for (const auto& b : corners) {
        if (a.first <= b.first) continue;
        double w = (mu - b.first) / (a.first - b.first);
        if (w < -1e-12 || w > 1.0 + 1e-12) continue;
        w = std::clamp(w, 0.0, 1.0);
        best = std::min(best, w * a.second + (1.0 - w) * b.second);
      }
    }
    return best;
  }
};

double mixture_margin(const BruteCurve& curve, double lambda, double epsilon, double mu0,
                      double p0, double t, double mu1) {
  double w = 1.0 / t;
  double rate = w * mu0 + (1.0 - w) * mu1 - (lambda - epsilon);
  double power = (curve.power(lambda) + epsilon) - (w * p0 + (1.0 - w) * curve.power(mu1));
  return std::min(rate, power);
}

bool oracle_feasible(const BruteCurve& curve, double lambda, double epsilon, double mu0,
                     double p0, std::uint64_t t) {
  // The margin is concave in mu1 (linear rate term, concave negated-convex
  // power term), so golden-section search converges to its maximum.
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = curve.max_rate;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double td = static_cast<double>(t);
  double f1 = mixture_margin(curve, lambda, epsilon, mu0, p0, td, x1);
  double f2 = mixture_margin(curve, lambda, epsilon, mu0, p0, td, x2);
  for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = mixture_margin(curve, lambda, epsilon, mu0, p0, td, x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = mixture_margin(curve, lambda, epsilon, mu0, p0, td, x1);
    }
  }
  return std::max(f1, f2) >= -1e-12;
}

std::uint64_t oracle_min_time(const BruteCurve& curve, double lambda, double epsilon,
                              double mu0, double p0) {
  for (std::uint64_t t = 1; t <= 100000; ++t) {
    if (oracle_feasible(curve, lambda, epsilon, mu0, p0, t)) return t;
  }
  return 0;
}

// Three-state family: rates {1,2,3} with weights {1-y-z, z, y}.
ChannelModel family_channel(double y, double z) {
  return ChannelModel::validated({1.0, 2.0, 3.0}, {1.0 - y - z, z, y});
}

struct ConverseCase {
  ChannelModel channel;
  double mu0, p0;
};

ConverseCase case_one() { return {family_channel(0.0, 0.25), 0.25, 0.125}; }
ConverseCase case_two() { return {family_channel(0.5, 0.5), 0.5, 0.25}; }

}  // namespace

TEST_CASE("shortest horizons at the reference epsilons") {
  for (const ConverseCase& cs : {case_one(), case_two()}) {
    RatePowerCurve curve = RatePowerCurve::build(cs.channel);
    CHECK(converse_min_time(curve, 1.0, 0.0078125, cs.mu0, cs.p0) == 8);
    CHECK(converse_min_time(curve, 1.0, 0.00390625, cs.mu0, cs.p0) == 16);
  }
}

TEST_CASE("halving epsilon doubles the horizon") {
  for (const ConverseCase& cs : {case_one(), case_two()}) {
    RatePowerCurve curve = RatePowerCurve::build(cs.channel);
    double eps = 0.0078125;  // 2^-7, then halved down to 2^-12
    std::uint64_t prev = 0;
    for (int step = 0; step < 6; ++step) {
      std::uint64_t t = converse_min_time(curve, 1.0, eps, cs.mu0, cs.p0);
      CHECK(eps * static_cast<double>(t) == 0.0625);
      if (prev != 0) CHECK(t == 2 * prev);
      prev = t;
      eps /= 2.0;
    }
  }
}

TEST_CASE("library horizons match the golden-section reference") {
  for (const ConverseCase& cs : {case_one(), case_two()}) {
    RatePowerCurve curve = RatePowerCurve::build(cs.channel);
    BruteCurve brute(cs.channel);
    for (double eps : {0.0078125, 0.00390625, 0.001953125, 0.001, 0.002, 0.005, 0.01}) {
      std::uint64_t got = converse_min_time(curve, 1.0, eps, cs.mu0, cs.p0);
      std::uint64_t want = oracle_min_time(brute, 1.0, eps, cs.mu0, cs.p0);
      REQUIRE(want != 0);
      CHECK(got == want);
    }
    // Off the knife edge: a different target rate and a strictly interior point.
    std::uint64_t got = converse_min_time(curve, 0.9, 0.01, cs.mu0 * 0.5, cs.p0);
    std::uint64_t want = oracle_min_time(brute, 0.9, 0.01, cs.mu0 * 0.5, cs.p0);
    CHECK(got == want);
  }
}

TEST_CASE("horizon search validation") {
  ConverseCase cs = case_one();
  RatePowerCurve curve = RatePowerCurve::build(cs.channel);
  CHECK(code_of([&] { converse_min_time(curve, 1.0, 0.02, cs.mu0, cs.p0); }) ==
        ErrorCode::EpsilonOutOfRange);
  CHECK(code_of([&] { converse_min_time(curve, 1.0, 0.0, cs.mu0, cs.p0); }) ==
        ErrorCode::EpsilonOutOfRange);
  // (0.5, 0) undershoots the minimum fraction for rate 0.5.
  CHECK(code_of([&] { converse_min_time(curve, 1.0, 0.0078125, 0.5, 0.0); }) ==
        ErrorCode::InvalidInitialPoint);
  CHECK(code_of([&] { converse_min_time(curve, 1.0, 0.0078125, 1.3, 1.0); }) ==
        ErrorCode::InvalidInitialPoint);
  CHECK(code_of([&] { converse_min_time(curve, 2.0, 0.0078125, cs.mu0, cs.p0); }) ==
        ErrorCode::LambdaOutOfRange);
  CHECK(code_of([&] { converse_min_time(curve, 1.0, 0.0078125, cs.mu0, cs.p0, 4); }) ==
        ErrorCode::InfeasibleTarget);
}
