#include "dppsim/rate_power.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "dppsim/error.hpp"

namespace dppsim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasTol = 1e-12;  // slack allowed on converse feasibility checks
}  // namespace

RatePowerCurve RatePowerCurve::build(const ChannelModel& channel) {
  RatePowerCurve curve;
  curve.channel_ = channel;
  int m = channel.num_positive();
  curve.vertices_.reserve(m + 1);
  curve.vertices_.push_back({m + 1, 0.0, 0.0});
  // Vertex k transmits in states omega_k and up; accumulate suffix sums from
  // the top state down so vertices come out in ascending mu.
  double mu = 0.0, power = 0.0;
  for (int k = m; k >= 1; --k) {
    mu += channel.omega(k) * channel.prob(k);
    power += channel.prob(k);
    curve.vertices_.push_back({k, mu, power});
  }
  return curve;
}

const VertexPoint& RatePowerCurve::vertex(int k) const {
  int m = num_thresholds();
  if (k < 1 || k > m + 1) {
    fail(ErrorCode::IndexOutOfRange, "vertex index " + std::to_string(k));
  }
  // vertices_[i] has k = m + 1 - i.
  return vertices_[m + 1 - k];
}

double RatePowerCurve::power_at(double mu) const {
  double hi = max_rate();
  // Absorb last-ulp noise at the endpoints.
  double tol = 1e-12 * std::max(1.0, hi);
  if (mu < -tol || mu > hi + tol) {
    fail(ErrorCode::RateOutOfRange,
         "rate " + std::to_string(mu) + " outside [0, " + std::to_string(hi) + "]");
  }
  mu = std::clamp(mu, 0.0, hi);
  auto it = std::lower_bound(vertices_.begin(), vertices_.end(), mu,
                             [](const VertexPoint& v, double x) { return v.mu < x; });
  if (it == vertices_.begin()) return it->power;
  const VertexPoint& b = *it;
  const VertexPoint& a = *(it - 1);
  if (b.mu == a.mu) return a.power;
  double w = (mu - a.mu) / (b.mu - a.mu);
  return a.power + w * (b.power - a.power);
}

double RatePowerCurve::rate_at_power(double p) const {
  if (p >= max_power()) return max_rate();
  if (p <= 0.0) return 0.0;
  auto it = std::lower_bound(vertices_.begin(), vertices_.end(), p,
                             [](const VertexPoint& v, double x) { return v.power < x; });
  const VertexPoint& b = *it;
  const VertexPoint& a = *(it - 1);
  if (b.power == a.power) return b.mu;
  double w = (p - a.power) / (b.power - a.power);
  return a.mu + w * (b.mu - a.mu);
}

void RatePowerCurve::write_csv(std::ostream& out) const {
  out << "k,mu,power\n";
  char line[96];
  for (const VertexPoint& v : vertices_) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g\n", v.k, v.mu, v.power);
    out << line;
  }
}

TimeshareSolution locate_segment(const RatePowerCurve& curve, double lambda) {
  double hi = curve.max_rate();
  if (!(lambda > 0.0) || !(lambda < hi)) {
    fail(ErrorCode::LambdaOutOfRange,
         "arrival rate " + std::to_string(lambda) + " not inside (0, " + std::to_string(hi) + ")");
  }
  double tol = 1e-9 * std::max(1.0, std::abs(lambda));
  for (const VertexPoint& v : curve.vertices()) {
    if (std::abs(lambda - v.mu) <= tol) {
      fail(ErrorCode::LambdaAtVertex, "arrival rate coincides with vertex rate " +
                                          std::to_string(v.mu) + " (k=" + std::to_string(v.k) + ")");
    }
  }

  const auto& verts = curve.vertices();
  // Find the segment with mu_{b+1} < lambda < mu_b; vertices ascend in mu and
  // descend in k, so the upper end of the bracketing segment names b.
  std::size_t i = 1;
  while (i < verts.size() && verts[i].mu < lambda) ++i;
  const VertexPoint& lo = verts[i - 1];
  const VertexPoint& up = verts[i];

  TimeshareSolution ts;
  ts.lambda = lambda;
  ts.b = up.k;
  ts.mu_b = up.mu;
  ts.mu_b1 = lo.mu;
  ts.power_b = up.power;
  ts.power_b1 = lo.power;
  ts.theta = (up.mu - lambda) / (up.mu - lo.mu);
  ts.p_star = ts.theta * lo.power + (1.0 - ts.theta) * up.power;
  const ChannelModel& ch = curve.channel();
  ts.omega_b = ch.omega(ts.b);
  ts.omega_b_minus1 = (ts.b > 1) ? ch.omega(ts.b - 1) : 0.0;
  ts.omega_b_plus1 = (ts.b < ch.num_positive()) ? ch.omega(ts.b + 1) : kInf;
  ts.mean_omega = ch.mean_rate();
  return ts;
}

namespace {

// Feasibility margin of horizon t at curve point mu1: the worse of the rate
// surplus and the power headroom of the (1/t, 1-1/t) mixture. Piecewise linear
// and concave in mu1, so a golden-ratio or endpoint/crossing search is exact.
double mixture_margin(const RatePowerCurve& curve, double lambda, double epsilon, double mu0,
                      double p0, double t, double mu1) {
  double w = 1.0 / t;
  double rate = w * mu0 + (1.0 - w) * mu1;
  double power = w * p0 + (1.0 - w) * curve.power_at(mu1);
  double rate_margin = rate - (lambda - epsilon);
  double power_margin = (curve.power_at(lambda) + epsilon) - power;
  return std::min(rate_margin, power_margin);
}

bool horizon_feasible(const RatePowerCurve& curve, double lambda, double epsilon, double mu0,
                      double p0, std::uint64_t t_int) {
  double t = static_cast<double>(t_int);
  if (t_int == 1) {
    return mu0 >= lambda - epsilon - kFeasTol &&
           p0 <= curve.power_at(lambda) + epsilon + kFeasTol;
  }
  double w = 1.0 / t;
  double scale = 1.0 - w;
  double hi = curve.max_rate();

  // Candidate mu1 values: both constraints are linear on each segment, so the
  // margin peaks at a vertex or where one constraint becomes active.
  double best = -kInf;
  auto consider = [&](double mu1) {
    mu1 = std::clamp(mu1, 0.0, hi);
    best = std::max(best, mixture_margin(curve, lambda, epsilon, mu0, p0, t, mu1));
  };
  for (const VertexPoint& v : curve.vertices()) consider(v.mu);
  // Rate constraint active: mu1 = (lambda - eps - mu0/t) / (1 - 1/t).
  consider((lambda - epsilon - w * mu0) / scale);
  // Power constraint active: power_at(mu1) = (h(lambda) + eps - p0/t) / (1 - 1/t).
  double p_level = (curve.power_at(lambda) + epsilon - w * p0) / scale;
  consider(curve.rate_at_power(p_level));
  return best >= -kFeasTol;
}

}  // namespace

std::uint64_t converse_min_time(const RatePowerCurve& curve, double lambda, double epsilon,
                                double mu0, double p0, std::uint64_t t_cap) {
  if (!(epsilon > 0.0) || !(epsilon < 1.0 / 64.0)) {
    fail(ErrorCode::EpsilonOutOfRange,
         "epsilon " + std::to_string(epsilon) + " outside (0, 1/64)");
  }
  double hi = curve.max_rate();
  double tol = 1e-9 * std::max(1.0, hi);
  if (mu0 < -tol || mu0 > hi + tol || p0 > 1.0 + tol ||
      p0 < curve.power_at(std::clamp(mu0, 0.0, hi)) - tol) {
    fail(ErrorCode::InvalidInitialPoint,
         "initial point (" + std::to_string(mu0) + ", " + std::to_string(p0) +
             ") outside the achievable region");
  }
  // Interior lambda so the target (lambda, h(lambda)) exists on the curve.
  if (!(lambda > 0.0) || !(lambda <= hi)) {
    fail(ErrorCode::LambdaOutOfRange, "target rate " + std::to_string(lambda));
  }

  for (std::uint64_t t = 1; t <= t_cap; ++t) {
    if (horizon_feasible(curve, lambda, epsilon, mu0, p0, t)) return t;
  }
  fail(ErrorCode::InfeasibleTarget,
       "no horizon up to " + std::to_string(t_cap) + " reaches the target band");
}

}  // namespace dppsim
