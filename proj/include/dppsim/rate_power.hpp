#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dppsim/stochastic.hpp"

namespace dppsim {

// One vertex of the minimum-power curve. Vertex k is reached by transmitting
// exactly in states omega_k and above; k = M+1 is the origin sentinel.
struct VertexPoint {
  int k;         // threshold index, M+1 for the origin
  double mu;     // expected throughput at this vertex
  double power;  // expected transmit fraction at this vertex
};

// Minimum long-run power needed to sustain a given throughput on a channel:
// piecewise linear, convex, nondecreasing, from (0,0) to (E[omega], 1 - P[omega=0]).
// The segment ending at vertex k has slope 1/omega_k.
class RatePowerCurve {
 public:
  static RatePowerCurve build(const ChannelModel& channel);

  // Vertices in ascending mu order: k = M+1 (origin), M, ..., 1.
  const std::vector<VertexPoint>& vertices() const { return vertices_; }
  const VertexPoint& vertex(int k) const;  // by threshold index, k in 1..M+1
  int num_thresholds() const { return static_cast<int>(vertices_.size()) - 1; }  // M
  double max_rate() const { return vertices_.back().mu; }
  double max_power() const { return vertices_.back().power; }
  const ChannelModel& channel() const { return channel_; }

  // Minimum power to sustain throughput mu; exact at vertices, linear between.
  double power_at(double mu) const;
  // Largest mu with power_at(mu) <= p (clamped to the curve's range).
  double rate_at_power(double p) const;

  // CSV rows (k, mu, power), ascending mu.
  void write_csv(std::ostream& out) const;

 private:
  std::vector<VertexPoint> vertices_;
  ChannelModel channel_;
};

// Decomposition of an interior target rate lambda as a time share between the
// two bracketing vertices: lambda = theta*mu_{b+1} + (1-theta)*mu_b, and the
// matching optimal power p_star = theta*h(mu_{b+1}) + (1-theta)*h(mu_b).
struct TimeshareSolution {
  double lambda;
  int b;             // segment index: mu_{b+1} < lambda < mu_b
  double theta;      // weight on the lower vertex, in (0, 1)
  double p_star;
  double mu_b, mu_b1;          // bracketing vertex rates (mu_b1 = mu_{b+1})
  double power_b, power_b1;    // bracketing vertex powers
  double omega_b;              // rate threshold of the upper vertex
  double omega_b_minus1;       // next lower threshold; 0.0 when b == 1
  double omega_b_plus1;        // next higher threshold; +inf when b == M
  double mean_omega;           // E[omega] = mu_1
};

// Finds the bracketing segment for lambda. Requires 0 < lambda < E[omega] and
// lambda not within relative tolerance 1e-9 of a vertex rate.
TimeshareSolution locate_segment(const RatePowerCurve& curve, double lambda);

// Smallest horizon t >= 1 over which an initial operating point (mu0, p0) in
// the achievable region can be averaged with a single curve point so that the
// mixture (1/t)*(mu0,p0) + (1-1/t)*(mu1,p1) has rate >= lambda - epsilon and
// power <= power_at(lambda) + epsilon. Requires 0 < epsilon < 1/64.
std::uint64_t converse_min_time(const RatePowerCurve& curve, double lambda, double epsilon,
                                double mu0, double p0, std::uint64_t t_cap = 100000000ULL);

}  // namespace dppsim
