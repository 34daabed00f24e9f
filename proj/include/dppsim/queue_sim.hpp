#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

#include "dppsim/policy.hpp"
#include "dppsim/rate_power.hpp"
#include "dppsim/stochastic.hpp"

namespace dppsim {

enum class Discipline { Fifo, Lifo };

// A contiguous block of buffered workload that arrived in one slot.
struct Chunk {
  double amount;
  std::uint64_t arrival_slot;
};

// Queue contents between slots. total() drives transmission decisions;
// q_place is inert padding that is never transmitted.
struct QueueState {
  double q_place = 0.0;
  double real = 0.0;           // buffered transmittable workload
  std::deque<Chunk> chunks;    // populated only when delays are tracked

  double total() const { return q_place + real; }
};

struct StepRecord {
  double omega = 0.0;
  double arrival = 0.0;
  bool transmit = false;
  double mu_offered = 0.0;   // transmit * omega
  double mu_served = 0.0;    // workload actually departed
  double q_before = 0.0;     // total backlog when the decision was made
  double q_after = 0.0;
  int interval = 0;          // backlog band 1..4 relative to v (0 = not classified)
};

// Per-unit delay tally. Delays are integer slot counts; amounts are workload.
struct DelayStats {
  std::map<std::int64_t, double> delivered;  // delay -> amount
  double delivered_amount = 0.0;
  double undelivered_amount = 0.0;           // still buffered at the horizon

  double total_arrived() const { return delivered_amount + undelivered_amount; }
  // Mean delay of the fastest `trim` fraction of all arrived workload.
  // Undelivered workload counts as infinitely delayed: if the trim fraction
  // reaches into it the mean is infinite and *finite is set false.
  double trimmed_mean(double trim, bool* finite = nullptr) const;
};

// Backlog-band boundaries for a given v and segment: [0, v/omega_{b+1}),
// [v/omega_{b+1}, v/omega_b), [v/omega_b, v/omega_{b-1}), [v/omega_{b-1}, inf).
// Bands 1 and 4 can be empty (b == M, b == 1 respectively).
int classify_interval(double q, double v, const TimeshareSolution& ts);

// Advances one slot: decide-serve-admit. Old workload is served first (head or
// tail per discipline); capacity left over after draining the buffer serves
// the arriving chunk in place. The real backlog follows
// max[real + a - mu_offered, 0] exactly; q_place never moves.
StepRecord step(QueueState& state, double arrival, double omega, bool transmit,
                Discipline discipline, std::uint64_t t, DelayStats* delays);

struct RunOptions {
  bool record_steps = false;
  bool track_delays = false;
  // Per-slot records are thinned above this many slots (prefix sums stay exact).
  std::uint64_t record_cap = 10000000ULL;
};

struct Trace {
  std::uint64_t horizon = 0;
  double q0 = 0.0;       // initial real backlog
  double q_place = 0.0;
  double v = 0.0;        // 0 when the policy has no backlog threshold
  bool has_intervals = false;
  bool has_delays = false;

  // Prefix sums over slots tau < t, index 0..horizon.
  std::vector<double> cum_arrival, cum_mu_offered, cum_mu_served, cum_transmit, cum_q;
  std::array<std::vector<std::uint32_t>, 4> cum_interval;
  std::vector<double> q_path;  // total backlog at each slot start, index 0..horizon

  std::uint64_t record_stride = 1;
  std::vector<StepRecord> records;  // every record_stride-th slot when recorded

  DelayStats delays;

  double final_backlog() const { return q_path.back(); }
};

// Simulates `horizon` slots of a policy over a phase schedule. q0 is an
// initial real backlog (one chunk, arrival slot 0); DppConfig::q_place adds
// inert padding on top of it.
Trace run(const PhaseSchedule& schedule, const PolicySpec& policy, std::uint64_t horizon,
          Discipline discipline, double q0, std::uint64_t seed, const RunOptions& options = {});

struct TimeAverages {
  std::uint64_t t = 0;
  double mu_bar = 0.0;      // offered service per slot
  double p_bar = 0.0;       // transmit fraction
  double q_bar = 0.0;       // mean backlog over slot starts
  std::array<double, 4> occupancy{};  // fraction of slots in each backlog band
};

// Averages over slots tau < t; t in 1..horizon.
TimeAverages time_averages(const Trace& trace, std::uint64_t t);

struct EpsilonCheck {
  bool pass = false;
  double power_margin = 0.0;  // (p_star + epsilon) - p_bar
  double rate_margin = 0.0;   // epsilon - (lambda - mu_bar)
};

// Both margins must be nonnegative: power within epsilon above optimal, rate
// within epsilon below the arrival rate.
EpsilonCheck epsilon_check(const TimeAverages& averages, double p_star, double lambda,
                           double epsilon);

}  // namespace dppsim
