#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dppsim/policy.hpp"
#include "dppsim/queue_sim.hpp"
#include "dppsim/stochastic.hpp"

namespace dppsim {

struct EnsembleSpec {
  std::uint64_t horizon = 0;
  std::uint64_t n_runs = 1;
  std::uint64_t base_seed = 0;
  int jobs = 1;
  // Track E[exp(r * Q(t))] for each listed r.
  std::vector<double> exp_moment_rs;
  // Track time-averaged occupancy of {Q >= v/omega_b + c} for each offset c.
  std::vector<double> tail_offsets;
};

// Pointwise statistics across independent seeded runs (seed = base + index).
// "Instantaneous" arrays hold ensemble means of slot-t values; "bar" arrays
// hold ensemble means of per-run running time averages over slots tau < t.
// Standard errors are sample-sd / sqrt(n_runs) (zero when n_runs == 1).
struct EnsembleResult {
  std::uint64_t horizon = 0;
  std::uint64_t n_runs = 0;
  double q0 = 0.0;
  double q_place = 0.0;

  // Index 0..horizon (backlog exists at both ends of the window).
  std::vector<double> q_mean, q_se;
  std::vector<std::vector<double>> expm_mean, expm_se;  // per r in exp_moment_rs

  // Index 0..horizon-1: slot-level ensemble means.
  std::vector<double> mu_inst_mean, p_inst_mean;

  // Index 0..horizon; entry 0 is zero/unused for the "bar" arrays.
  std::vector<double> mu_bar_mean, mu_bar_se;
  std::vector<double> p_bar_mean, p_bar_se;
  std::vector<double> q_bar_mean;
  std::array<std::vector<double>, 4> occ_inst;             // P[Q(t) in band i]
  std::array<std::vector<double>, 4> occ_bar_mean, occ_bar_se;
  std::vector<std::vector<double>> tail_bar_mean, tail_bar_se;  // per tail offset

  // One-step backlog change conditioned on the backlog side of v/omega_b
  // (taken from the phase active at that slot). Populated when classified.
  double drift_above_mean = 0.0, drift_above_se = 0.0;
  double drift_below_mean = 0.0, drift_below_se = 0.0;
  std::uint64_t drift_above_n = 0, drift_below_n = 0;

  bool classified = false;

  // E[Q(t) - q0] / t for t >= 1.
  double psi(std::uint64_t t) const { return (q_mean[t] - (q0 + q_place)) / static_cast<double>(t); }

  // CSV rows (t, mean_mu_bar, mean_p_bar, mean_Q, se_mu, se_p, se_Q,
  // occ1..occ4), thinned to at most max_rows rows plus the final slot.
  void write_csv(std::ostream& out, std::uint64_t max_rows = 2048) const;
};

EnsembleResult ensemble(const PhaseSchedule& schedule, const PolicySpec& policy,
                        Discipline discipline, double q0, const EnsembleSpec& spec);

}  // namespace dppsim
