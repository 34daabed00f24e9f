#include "dppsim/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <utility>

#include "dppsim/error.hpp"

namespace dppsim {

DriftConstants drift_constants(const TimeshareSolution& ts) {
  return {ts.lambda - ts.mu_b1, ts.mu_b - ts.lambda};
}

DriftParams drift_params(double beta, double delta_max, double theta) {
  if (beta <= 0.0) fail(ErrorCode::InvalidArgument, "drift margin must be positive");
  if (delta_max <= 0.0) fail(ErrorCode::InvalidArgument, "step bound must be positive");
  if (theta < 0.0) fail(ErrorCode::InvalidArgument, "threshold must be nonnegative");
  if (beta > delta_max) fail(ErrorCode::BetaExceedsDelta, "drift margin exceeds the step bound");
  DriftParams p;
  p.beta = beta;
  p.delta_max = delta_max;
  p.theta = theta;
  p.r = beta / (delta_max * delta_max + delta_max * beta / 3.0);
  p.rho = 1.0 - p.r * beta / 2.0;
  p.d_const = (std::exp(p.r * delta_max) - p.rho) * std::exp(p.r * theta) / (1.0 - p.rho);
  return p;
}

double exp_moment_bound(const DriftParams& params, double z0, std::uint64_t t) {
  double start = std::exp(params.r * z0);
  return params.d_const + (start - params.d_const) * std::pow(params.rho, static_cast<double>(t));
}

double occupancy_tail_bound(const DriftParams& params, double c, std::uint64_t big_t,
                            std::uint64_t t, double z0) {
  if (t == 0) fail(ErrorCode::InvalidWindow, "averaging window must cover at least one slot");
  if (c < 0.0) fail(ErrorCode::InvalidArgument, "tail offset must be nonnegative");
  double dt = static_cast<double>(t);
  double steady = (std::exp(params.r * params.delta_max) - params.rho) *
                  std::exp(-params.r * c) / (1.0 - params.rho);
  double settle = static_cast<double>(big_t) / dt;
  double log_transient = params.r * (z0 - c - params.theta) +
                         static_cast<double>(big_t) * std::log(params.rho);
  double transient = std::exp(log_transient) / (dt * (1.0 - params.rho));
  return steady + settle + transient;
}

double queue_mean_bound(double v, double omega_b, double omega_max, const DriftParams& right) {
  if (v < omega_max * omega_max) {
    fail(ErrorCode::PreconditionViolated, "control weight below omega_max^2");
  }
  double excess = (std::exp(right.r * right.delta_max) - right.rho) / (1.0 - right.rho);
  return v / omega_b + std::log1p(excess) / right.r;
}

double interval4_time_bound(double v, const TimeshareSolution& ts, const DriftParams& right,
                            std::uint64_t t) {
  // omega_{b-1} = 0: the top band starts at infinity and is never occupied.
  if (ts.omega_b_minus1 == 0.0) return 0.0;
  double c = v * (1.0 / ts.omega_b_minus1 - 1.0 / ts.omega_b);
  return occupancy_tail_bound(right, c, 0, t, right.theta);
}

double interval1_time_bound(double v, const TimeshareSolution& ts, const DriftParams& left,
                            std::uint64_t t, double q0) {
  double inv_next = 1.0 / ts.omega_b_plus1;  // 0 when the bottom band is empty
  double c = v * (1.0 / ts.omega_b - inv_next);
  if (c <= 0.0) return 0.0;
  double z0 = std::max(v / ts.omega_b - q0, 0.0);
  double x = left.r / (ts.omega_b_plus1 * std::log(1.0 / left.rho));
  std::uint64_t big_t = static_cast<std::uint64_t>(std::ceil(x * v));
  return occupancy_tail_bound(left, c, big_t, t, z0);
}

OccupancyBracket interval2_bracket(const TimeshareSolution& ts, double occ1, double occ4,
                                   double psi) {
  double gap = ts.mu_b - ts.mu_b1;
  OccupancyBracket br;
  br.lower = ts.theta - (ts.mu_b * occ1 - psi) / gap;
  br.upper = ts.theta + (occ4 * ts.mean_omega + psi) / gap;
  return br;
}

double drift_gamma(const TimeshareSolution& ts, const DriftParams& left,
                   const DriftParams& right) {
  double top = right.r * (1.0 / ts.omega_b_minus1 - 1.0 / ts.omega_b);  // inf when band 4 empty
  double bottom = left.r * (1.0 / ts.omega_b - 1.0 / ts.omega_b_plus1);
  return std::min(top, bottom);
}

Tuning tuning_for_epsilon(double epsilon, double gamma, double omega_max) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    fail(ErrorCode::EpsilonOutOfRange, "epsilon must lie in (0, 1)");
  }
  if (!(gamma > 0.0)) fail(ErrorCode::GammaNonpositive, "decay exponent must be positive");
  double log_inv = std::log(1.0 / epsilon);
  Tuning tuning;
  tuning.v = std::max(log_inv / gamma, omega_max * omega_max);
  tuning.t_eps = log_inv / epsilon;
  return tuning;
}

double power_bound_analytic(double v, const TimeshareSolution& ts, const DriftParams& left,
                            const DriftParams& right, std::uint64_t t, double q0) {
  if (t == 0) fail(ErrorCode::InvalidWindow, "averaging window must cover at least one slot");
  double i1 = interval1_time_bound(v, ts, left, t, q0);
  double i4 = interval4_time_bound(v, ts, right, t);
  double gap = ts.mu_b - ts.mu_b1;
  double low_band = (ts.power_b - ts.power_b1) * (ts.mu_b * i1 + q0 / static_cast<double>(t)) / gap;
  double high_band = (1.0 - ts.power_b) * i4;
  return ts.p_star + low_band + high_band;
}

BoundReport make_report(std::string quantity, BoundSense sense, double analytic, double empirical,
                        double std_error) {
  BoundReport report;
  report.quantity = std::move(quantity);
  report.sense = sense;
  report.analytic = analytic;
  report.empirical = empirical;
  report.std_error = std_error;
  double margin = sense == BoundSense::Upper ? analytic - empirical : empirical - analytic;
  report.slack = margin + 3.0 * std_error;
  report.pass = report.slack >= 0.0;
  return report;
}

std::vector<BoundReport> verify_bounds(const ChannelModel& channel, const ArrivalModel& arrivals,
                                       const DppConfig& config, std::uint64_t horizon,
                                       std::uint64_t n_runs, std::uint64_t base_seed, int jobs) {
  double omega_max = channel.omega_max();
  if (config.v < omega_max * omega_max) {
    fail(ErrorCode::PreconditionViolated, "control weight below omega_max^2");
  }
  if (horizon == 0) fail(ErrorCode::InvalidWindow, "horizon must be >= 1");

  RatePowerCurve curve = RatePowerCurve::build(channel);
  TimeshareSolution ts = locate_segment(curve, arrivals.mean_rate());
  DriftConstants dc = drift_constants(ts);
  double delta = std::max(omega_max, arrivals.max_amount());
  DriftParams right = drift_params(dc.beta_right, delta, config.v / ts.omega_b);
  DriftParams left = drift_params(dc.beta_left, delta, 0.0);
  double q0_total = config.q_place;  // runs start with the fixed load only

  EnsembleSpec spec;
  spec.horizon = horizon;
  spec.n_runs = n_runs;
  spec.base_seed = base_seed;
  spec.jobs = jobs;
  spec.exp_moment_rs = {right.r};
  spec.tail_offsets = {10.0 * delta, 50.0 * delta};

  PhaseSchedule schedule = PhaseSchedule::single(channel, arrivals);
  EnsembleResult stats = ensemble(schedule, config, Discipline::Fifo, 0.0, spec);

  std::vector<BoundReport> reports;

  // Worst slot for the mean backlog ceiling.
  double mean_cap = queue_mean_bound(config.v, ts.omega_b, omega_max, right);
  std::uint64_t worst_q = 0;
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    if (stats.q_mean[t] > stats.q_mean[worst_q]) worst_q = t;
  }
  reports.push_back(make_report("mean_backlog", BoundSense::Upper, mean_cap,
                                stats.q_mean[worst_q], stats.q_se[worst_q]));

  // Worst slot for the exponential moment recursion.
  std::uint64_t worst_e = 0;
  double worst_margin = exp_moment_bound(right, q0_total, 0) - stats.expm_mean[0][0];
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    double margin = exp_moment_bound(right, q0_total, t) - stats.expm_mean[0][t];
    if (margin < worst_margin) {
      worst_margin = margin;
      worst_e = t;
    }
  }
  reports.push_back(make_report("exp_moment", BoundSense::Upper,
                                exp_moment_bound(right, q0_total, worst_e),
                                stats.expm_mean[0][worst_e], stats.expm_se[0][worst_e]));

  reports.push_back(make_report("interval1_share", BoundSense::Upper,
                                interval1_time_bound(config.v, ts, left, horizon, q0_total),
                                stats.occ_bar_mean[0][horizon], stats.occ_bar_se[0][horizon]));
  reports.push_back(make_report("interval4_share", BoundSense::Upper,
                                interval4_time_bound(config.v, ts, right, horizon),
                                stats.occ_bar_mean[3][horizon], stats.occ_bar_se[3][horizon]));

  OccupancyBracket bracket =
      interval2_bracket(ts, stats.occ_bar_mean[0][horizon], stats.occ_bar_mean[3][horizon],
                        stats.psi(horizon));
  reports.push_back(make_report("interval2_lower", BoundSense::Lower, bracket.lower,
                                stats.occ_bar_mean[1][horizon], stats.occ_bar_se[1][horizon]));
  reports.push_back(make_report("interval2_upper", BoundSense::Upper, bracket.upper,
                                stats.occ_bar_mean[1][horizon], stats.occ_bar_se[1][horizon]));

  // Transmit fraction against the per-band transmit probabilities.
  double decomposed = ts.power_b1 * (stats.occ_bar_mean[0][horizon] +
                                     stats.occ_bar_mean[1][horizon]) +
                      ts.power_b * stats.occ_bar_mean[2][horizon] +
                      stats.occ_bar_mean[3][horizon];
  reports.push_back(make_report("power_by_band", BoundSense::Upper, decomposed,
                                stats.p_bar_mean[horizon], stats.p_bar_se[horizon]));
  reports.push_back(make_report("power_analytic", BoundSense::Upper,
                                power_bound_analytic(config.v, ts, left, right, horizon, q0_total),
                                stats.p_bar_mean[horizon], stats.p_bar_se[horizon]));

  const char* tail_names[2] = {"tail_10delta", "tail_50delta"};
  for (std::size_t i = 0; i < spec.tail_offsets.size(); ++i) {
    double bound = occupancy_tail_bound(right, spec.tail_offsets[i], 0, horizon, q0_total);
    reports.push_back(make_report(tail_names[i], BoundSense::Upper, std::min(bound, 1.0),
                                  stats.tail_bar_mean[i][horizon], stats.tail_bar_se[i][horizon]));
  }
  return reports;
}

void write_csv(const std::vector<BoundReport>& reports, std::ostream& out) {
  out << "quantity,sense,analytic,empirical,std_error,slack,verdict\n";
  char line[256];
  for (const BoundReport& r : reports) {
    std::snprintf(line, sizeof(line), "%s,%s,%.17g,%.17g,%.17g,%.17g,%s\n", r.quantity.c_str(),
                  r.sense == BoundSense::Upper ? "upper" : "lower", r.analytic, r.empirical,
                  r.std_error, r.slack, r.pass ? "pass" : "fail");
    out << line;
  }
}

}  // namespace dppsim
