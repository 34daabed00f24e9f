#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dppsim/ensemble.hpp"
#include "dppsim/rate_power.hpp"

namespace dppsim {

// Distance from the arrival rate to the bracketing vertex rates.
struct DriftConstants {
  double beta_left;   // lambda - mu_{b+1}: uphill pull below the threshold
  double beta_right;  // mu_b - lambda: downhill pull above it
};
DriftConstants drift_constants(const TimeshareSolution& ts);

// Geometric-decay machinery for a nonnegative process with one-step increments
// bounded by delta_max and drift at most -beta whenever the process exceeds
// theta. r solves (r*delta)^2 / (2*(1 - r*delta/3)) = r*beta/2 exactly.
struct DriftParams {
  double beta = 0.0;
  double delta_max = 0.0;
  double theta = 0.0;
  double r = 0.0;      // exponent of the Lyapunov moment
  double rho = 0.0;    // per-slot contraction factor, 1 - r*beta/2
  double d_const = 0.0;  // steady-state moment level (e^{r delta} - rho) e^{r theta} / (1 - rho)
};
DriftParams drift_params(double beta, double delta_max, double theta);

// E[e^{r Z(t)}] <= d_const + (e^{r z0} - d_const) * rho^t.
double exp_moment_bound(const DriftParams& params, double z0, std::uint64_t t);

// Time-averaged probability of {Z >= theta + c} over slots tau < t, starting
// from z0, with a settling window of big_t slots:
//   (e^{r delta} - rho) e^{-r c} / (1-rho) + big_t/t + e^{r(z0-c-theta)} rho^{big_t} / (t (1-rho)).
// With big_t = 0 and z0 <= theta this reduces to
//   e^{-r c} (e^{r delta} - rho + 1/t) / (1-rho).
double occupancy_tail_bound(const DriftParams& params, double c, std::uint64_t big_t,
                            std::uint64_t t, double z0);

// E[Q(t)] <= v/omega_b + (1/r) log(1 + (e^{r delta} - rho)/(1 - rho)), valid
// for 0 <= q0 <= v/omega_b and v >= omega_max^2.
double queue_mean_bound(double v, double omega_b, double omega_max, const DriftParams& right);

// Time-averaged occupancy of the top backlog band [v/omega_{b-1}, inf);
// zero when that band is empty (b == 1).
double interval4_time_bound(double v, const TimeshareSolution& ts, const DriftParams& right,
                            std::uint64_t t);

// Time-averaged occupancy of the bottom backlog band [0, v/omega_{b+1}),
// starting from q0 in [0, v/omega_b]. Uses a settling window proportional to v.
double interval1_time_bound(double v, const TimeshareSolution& ts, const DriftParams& left,
                            std::uint64_t t, double q0);

// Two-sided bracket on the time-averaged occupancy of band 2, from the
// occupancies of bands 1 and 4 and the backlog growth rate psi = E[Q(t)-q0]/t:
//   theta - [mu_b*occ1 - psi]/(mu_b - mu_{b+1}) <= occ2
//   occ2 <= theta + [occ4*E[omega] + psi]/(mu_b - mu_{b+1}).
struct OccupancyBracket {
  double lower;
  double upper;
};
OccupancyBracket interval2_bracket(const TimeshareSolution& ts, double occ1, double occ4,
                                   double psi);

// Decay exponent governing how fast the band-1/band-4 leakage vanishes in v:
// min[r_right*(1/omega_{b-1} - 1/omega_b), r_left*(1/omega_b - 1/omega_{b+1})]
// (the first term drops out when band 4 is empty).
double drift_gamma(const TimeshareSolution& ts, const DriftParams& left, const DriftParams& right);

// Parameter choice reaching an epsilon-optimal operating point:
// v = max[(1/gamma) ln(1/epsilon), omega_max^2], settling time ln(1/epsilon)/epsilon.
struct Tuning {
  double v;
  double t_eps;
};
Tuning tuning_for_epsilon(double epsilon, double gamma, double omega_max);

// Fully analytic ceiling on the time-averaged transmit fraction at horizon t:
// p_star plus band-leakage and backlog-growth corrections, each bounded by the
// closed forms above.
double power_bound_analytic(double v, const TimeshareSolution& ts, const DriftParams& left,
                            const DriftParams& right, std::uint64_t t, double q0);

enum class BoundSense { Upper, Lower };

struct BoundReport {
  std::string quantity;
  BoundSense sense = BoundSense::Upper;
  double analytic = 0.0;
  double empirical = 0.0;
  double std_error = 0.0;
  double slack = 0.0;  // signed margin in the bound's favor (>= 0 passes)
  bool pass = false;
};

BoundReport make_report(std::string quantity, BoundSense sense, double analytic, double empirical,
                        double std_error);

// Runs a seeded ensemble of the backlog-threshold policy and checks every
// closed-form guarantee against its Monte Carlo estimate at 3 standard errors.
std::vector<BoundReport> verify_bounds(const ChannelModel& channel, const ArrivalModel& arrivals,
                                       const DppConfig& config, std::uint64_t horizon,
                                       std::uint64_t n_runs, std::uint64_t base_seed,
                                       int jobs = 1);

// CSV rows (quantity, sense, analytic, empirical, std_error, slack, verdict).
void write_csv(const std::vector<BoundReport>& reports, std::ostream& out);

}  // namespace dppsim
