#include "dppsim/queue_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dppsim/error.hpp"
#include "dppsim/random.hpp"

namespace dppsim {

int classify_interval(double q, double v, const TimeshareSolution& ts) {
  // IEEE division gives the right empty-band sentinels: v/inf = 0 (band 1
  // empty when b == M), v/0 = inf (band 4 empty when b == 1).
  if (q < v / ts.omega_b_plus1) return 1;
  if (q < v / ts.omega_b) return 2;
  if (q < v / ts.omega_b_minus1) return 3;
  return 4;
}

namespace {

// Removes `amount` from the buffer (head or tail first) and tallies delays.
void drain_chunks(std::deque<Chunk>& chunks, double amount, Discipline discipline,
                  std::uint64_t t, DelayStats* delays) {
  while (amount > 0.0 && !chunks.empty()) {
    Chunk& c = (discipline == Discipline::Fifo) ? chunks.front() : chunks.back();
    double served = std::min(c.amount, amount);
    if (delays != nullptr && served > 0.0) {
      auto delay = static_cast<std::int64_t>(t - c.arrival_slot);
      delays->delivered[delay] += served;
      delays->delivered_amount += served;
    }
    c.amount -= served;
    amount -= served;
    if (c.amount <= 0.0) {
      if (discipline == Discipline::Fifo) {
        chunks.pop_front();
      } else {
        chunks.pop_back();
      }
    }
  }
}

}  // namespace

StepRecord step(QueueState& state, double arrival, double omega, bool transmit,
                Discipline discipline, std::uint64_t t, DelayStats* delays) {
  StepRecord rec;
  rec.omega = omega;
  rec.arrival = arrival;
  rec.transmit = transmit;
  rec.mu_offered = transmit ? omega : 0.0;
  rec.q_before = state.total();

  // Buffered workload goes first; leftover capacity serves the arriving chunk
  // in its own slot (delay 0). That keeps the real backlog exactly on
  // max[real + a - mu_offered, 0].
  double served_old = std::min(state.real, rec.mu_offered);
  double served_new = std::min(arrival, rec.mu_offered - served_old);
  rec.mu_served = served_old + served_new;

  bool tracking = !state.chunks.empty() || delays != nullptr;
  if (tracking) {
    drain_chunks(state.chunks, served_old, discipline, t, delays);
    if (delays != nullptr && served_new > 0.0) {
      delays->delivered[0] += served_new;
      delays->delivered_amount += served_new;
    }
    if (arrival - served_new > 0.0) state.chunks.push_back({arrival - served_new, t});
  }

  state.real = std::max(state.real + arrival - rec.mu_offered, 0.0);
  rec.q_after = state.total();
  return rec;
}

namespace {

struct IntervalBounds {
  bool valid = false;
  double lo1 = 0.0, lo2 = 0.0, lo3 = 0.0;  // band edges: v/omega_{b+1}, v/omega_b, v/omega_{b-1}
  int classify(double q) const {
    if (q < lo1) return 1;
    if (q < lo2) return 2;
    if (q < lo3) return 3;
    return 4;
  }
};

// Backlog-band edges for each phase, when they are well defined (threshold
// policy, arrival rate strictly inside the phase's curve, off-vertex).
std::vector<IntervalBounds> phase_bounds(const PhaseSchedule& schedule, const PolicySpec& policy) {
  std::vector<IntervalBounds> bounds(schedule.phases().size());
  const auto* dpp = std::get_if<DppConfig>(&policy);
  if (dpp == nullptr) return bounds;
  for (std::size_t i = 0; i < schedule.phases().size(); ++i) {
    const Phase& phase = schedule.phases()[i];
    try {
      RatePowerCurve curve = RatePowerCurve::build(phase.channel);
      TimeshareSolution ts = locate_segment(curve, phase.arrivals.mean_rate());
      bounds[i].valid = true;
      bounds[i].lo1 = dpp->v / ts.omega_b_plus1;
      bounds[i].lo2 = dpp->v / ts.omega_b;
      bounds[i].lo3 = dpp->v / ts.omega_b_minus1;
    } catch (const Error&) {
      bounds[i].valid = false;
    }
  }
  return bounds;
}

}  // namespace

Trace run(const PhaseSchedule& schedule, const PolicySpec& policy, std::uint64_t horizon,
          Discipline discipline, double q0, std::uint64_t seed, const RunOptions& options) {
  if (horizon == 0) fail(ErrorCode::InvalidArgument, "horizon must be >= 1");
  if (q0 < 0.0) fail(ErrorCode::InvalidArgument, "initial backlog must be >= 0");
  if (schedule.total_slots() != Phase::kOpenEnded && horizon > schedule.total_slots()) {
    fail(ErrorCode::SlotBeyondSchedule, "horizon exceeds the scheduled phases");
  }

  Trace trace;
  trace.horizon = horizon;
  trace.q0 = q0;
  const auto* dpp = std::get_if<DppConfig>(&policy);
  trace.q_place = dpp != nullptr ? dpp->q_place : 0.0;
  trace.v = dpp != nullptr ? dpp->v : 0.0;

  std::vector<IntervalBounds> bounds = phase_bounds(schedule, policy);
  trace.has_intervals =
      std::all_of(bounds.begin(), bounds.end(), [](const IntervalBounds& b) { return b.valid; });
  trace.has_delays = options.track_delays;

  QueueState state;
  state.q_place = trace.q_place;
  state.real = q0;
  if (options.track_delays && q0 > 0.0) state.chunks.push_back({q0, 0});

  std::size_t n = static_cast<std::size_t>(horizon);
  trace.cum_arrival.assign(n + 1, 0.0);
  trace.cum_mu_offered.assign(n + 1, 0.0);
  trace.cum_mu_served.assign(n + 1, 0.0);
  trace.cum_transmit.assign(n + 1, 0.0);
  trace.cum_q.assign(n + 1, 0.0);
  for (auto& arr : trace.cum_interval) arr.assign(n + 1, 0);
  trace.q_path.assign(n + 1, 0.0);

  if (options.record_steps) {
    trace.record_stride = horizon <= options.record_cap ? 1 : (horizon + options.record_cap - 1) / options.record_cap;
    trace.records.reserve(n / trace.record_stride + 1);
  }

  RandomSource rng(seed);
  std::size_t phase_i = 0;
  std::uint64_t phase_end = schedule.phases()[0].duration == Phase::kOpenEnded
                                ? Phase::kOpenEnded
                                : schedule.phases()[0].duration;

  for (std::uint64_t t = 0; t < horizon; ++t) {
    while (t >= phase_end) {
      ++phase_i;
      const Phase& next = schedule.phases()[phase_i];
      phase_end = next.duration == Phase::kOpenEnded ? Phase::kOpenEnded
                                                     : schedule.phase_start(phase_i) + next.duration;
    }
    const Phase& phase = schedule.phases()[phase_i];

    double omega = phase.channel.sample(rng);
    double arrival = phase.arrivals.sample(rng);
    bool transmit;
    if (dpp != nullptr) {
      transmit = dpp_decide(state.total(), omega, dpp->v);
    } else {
      double pr = std::get<OmegaOnlyPolicy>(policy).prob_for(omega);
      transmit = rng.uniform01() < pr;
    }

    trace.q_path[t] = state.total();
    StepRecord rec = step(state, arrival, omega, transmit, discipline, t,
                          options.track_delays ? &trace.delays : nullptr);
    if (trace.has_intervals) rec.interval = bounds[phase_i].classify(rec.q_before);

    trace.cum_arrival[t + 1] = trace.cum_arrival[t] + arrival;
    trace.cum_mu_offered[t + 1] = trace.cum_mu_offered[t] + rec.mu_offered;
    trace.cum_mu_served[t + 1] = trace.cum_mu_served[t] + rec.mu_served;
    trace.cum_transmit[t + 1] = trace.cum_transmit[t] + (transmit ? 1.0 : 0.0);
    trace.cum_q[t + 1] = trace.cum_q[t] + rec.q_before;
    for (int i = 0; i < 4; ++i) {
      trace.cum_interval[i][t + 1] = trace.cum_interval[i][t] + (rec.interval == i + 1 ? 1u : 0u);
    }
    if (options.record_steps && t % trace.record_stride == 0) trace.records.push_back(rec);
  }
  trace.q_path[n] = state.total();

  if (options.track_delays) {
    trace.delays.undelivered_amount = 0.0;
    for (const Chunk& c : state.chunks) trace.delays.undelivered_amount += c.amount;
  }
  return trace;
}

TimeAverages time_averages(const Trace& trace, std::uint64_t t) {
  if (t < 1 || t > trace.horizon) {
    fail(ErrorCode::HorizonExceeded, "window " + std::to_string(t) + " outside 1.." +
                                         std::to_string(trace.horizon));
  }
  TimeAverages avg;
  avg.t = t;
  double inv = 1.0 / static_cast<double>(t);
  avg.mu_bar = trace.cum_mu_offered[t] * inv;
  avg.p_bar = trace.cum_transmit[t] * inv;
  avg.q_bar = trace.cum_q[t] * inv;
  for (int i = 0; i < 4; ++i) avg.occupancy[i] = trace.cum_interval[i][t] * inv;
  return avg;
}

double DelayStats::trimmed_mean(double trim, bool* finite) const {
  if (!(trim > 0.0) || !(trim <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "trim fraction must be in (0, 1]");
  }
  double total = total_arrived();
  if (total <= 0.0) fail(ErrorCode::NoArrivals, "no workload arrived");
  double want = trim * total;
  if (finite != nullptr) *finite = true;
  if (want > delivered_amount) {
    // The trim fraction reaches into never-delivered workload.
    if (finite != nullptr) *finite = false;
    return std::numeric_limits<double>::infinity();
  }
  double got = 0.0, weighted = 0.0;
  for (const auto& [delay, amount] : delivered) {
    double take = std::min(amount, want - got);
    weighted += take * static_cast<double>(delay);
    got += take;
    if (got >= want) break;
  }
  return weighted / want;
}

EpsilonCheck epsilon_check(const TimeAverages& averages, double p_star, double lambda,
                           double epsilon) {
  EpsilonCheck check;
  check.power_margin = (p_star + epsilon) - averages.p_bar;
  check.rate_margin = epsilon - (lambda - averages.mu_bar);
  check.pass = check.power_margin >= 0.0 && check.rate_margin >= 0.0;
  return check;
}

}  // namespace dppsim
