#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <doctest.h>

#include "dppsim/error.hpp"
#include "dppsim/policy.hpp"
#include "dppsim/queue_sim.hpp"
#include "dppsim/rate_power.hpp"
#include "dppsim/stochastic.hpp"
#include "test_util.hpp"

using namespace dppsim;

namespace {

ChannelModel two_state() { return ChannelModel::validated({1.0, 2.0}, {0.75, 0.25}); }

PhaseSchedule two_state_sched() {
  return PhaseSchedule::single(two_state(),
                               ArrivalModel::validated({0.0, 1.0, 2.0}, {0.4, 0.2, 0.4}));
}

ChannelModel nine_state() {
  return ChannelModel::validated(
      {0, 3, 7, 11, 18, 22, 24, 36, 46},
      {0.06666666666666667, 0.06666666666666667, 0.06666666666666667, 0.2222222222222222,
       0.2222222222222222, 0.2222222222222222, 0.044444444444444446, 0.044444444444444446,
       0.044444444444444446});
}

}  // namespace

TEST_CASE("single-slot transitions by hand") {
  // Backlog 5, capacity 4: four units of old workload depart.
  {
    QueueState st;
    st.real = 5.0;
    StepRecord rec = step(st, 3.0, 4.0, true, Discipline::Fifo, 0, nullptr);
    CHECK(rec.mu_offered == 4.0);
    CHECK(rec.mu_served == 4.0);
    CHECK(rec.q_before == 5.0);
    CHECK(rec.q_after == 4.0);  // 5 + 3 - 4
    CHECK(st.real == 4.0);
  }
  // Backlog 1, capacity 4, arrival 1: the arrival rides along in its own slot.
  {
    QueueState st;
    st.real = 1.0;
    StepRecord rec = step(st, 1.0, 4.0, true, Discipline::Fifo, 0, nullptr);
    CHECK(rec.mu_served == 2.0);
    CHECK(rec.q_after == 0.0);
    CHECK(st.real == 0.0);
  }
  // No transmission: arrivals pile up.
  {
    QueueState st;
    st.real = 2.0;
    StepRecord rec = step(st, 1.5, 4.0, false, Discipline::Fifo, 3, nullptr);
    CHECK(rec.mu_offered == 0.0);
    CHECK(rec.mu_served == 0.0);
    CHECK(rec.q_after == 3.5);
  }
  // Padding is counted in the decision backlog but never departs.
  {
    QueueState st;
    st.q_place = 3.0;
    st.real = 1.0;
    StepRecord rec = step(st, 0.0, 4.0, true, Discipline::Fifo, 0, nullptr);
    CHECK(rec.q_before == 4.0);
    CHECK(rec.mu_served == 1.0);
    CHECK(st.q_place == 3.0);
    CHECK(st.real == 0.0);
    CHECK(rec.q_after == 3.0);
  }
}

TEST_CASE("same-slot delivery gets delay zero") {
  QueueState st;
  DelayStats delays;
  step(st, 1.0, 4.0, true, Discipline::Fifo, 7, &delays);
  REQUIRE(delays.delivered.count(0) == 1);
  CHECK(delays.delivered.at(0) == 1.0);
  CHECK(delays.delivered_amount == 1.0);
  CHECK(delays.undelivered_amount == 0.0);
}

TEST_CASE("workload is conserved along a trace") {
  PhaseSchedule sched = two_state_sched();
  RunOptions opts;
  opts.record_steps = true;
  Trace trace = run(sched, DppConfig::plain(40.0), 5000, Discipline::Fifo, 0.0, 31, opts);
  REQUIRE(trace.record_stride == 1);
  double q = trace.q0 + trace.q_place;
  for (std::uint64_t t = 0; t < 5000; ++t) {
    const StepRecord& rec = trace.records[t];
    CHECK(rec.q_before == trace.q_path[t]);
    // Integer workload on an integer channel: the balance holds bit for bit.
    CHECK(rec.q_after == rec.q_before + rec.arrival - rec.mu_served);
    q = rec.q_after;
    CHECK(trace.q_path[t + 1] == q);
  }
  CHECK(trace.cum_arrival[5000] - trace.cum_mu_served[5000] ==
        trace.q_path[5000] - trace.q_path[0]);
}

TEST_CASE("backlog bands relative to the threshold") {
  RatePowerCurve nine = RatePowerCurve::build(nine_state());
  TimeshareSolution ts9 = locate_segment(nine, 11.6);
  // Boundaries at v = 1000: 1000/22, 1000/18, 1000/11.
  CHECK(classify_interval(0.0, 1000.0, ts9) == 1);
  CHECK(classify_interval(45.0, 1000.0, ts9) == 1);
  CHECK(classify_interval(50.0, 1000.0, ts9) == 2);
  CHECK(classify_interval(60.0, 1000.0, ts9) == 3);
  CHECK(classify_interval(1000.0 / 18.0, 1000.0, ts9) == 3);  // left-closed band
  CHECK(classify_interval(100.0, 1000.0, ts9) == 4);

  RatePowerCurve twoc = RatePowerCurve::build(two_state());
  TimeshareSolution ts2 = locate_segment(twoc, 1.0);
  // b == 1: the top band is empty however large the backlog grows.
  CHECK(classify_interval(1e9, 40.0, ts2) == 3);
  CHECK(classify_interval(39.9, 40.0, ts2) == 2);
  CHECK(classify_interval(10.0, 40.0, ts2) == 1);
}

TEST_CASE("service totals do not depend on the discipline") {
  PhaseSchedule sched = two_state_sched();
  RunOptions opts;
  opts.track_delays = true;
  Trace fifo = run(sched, DppConfig::plain(40.0), 20000, Discipline::Fifo, 5.0, 77, opts);
  Trace lifo = run(sched, DppConfig::plain(40.0), 20000, Discipline::Lifo, 5.0, 77, opts);
  REQUIRE(fifo.q_path.size() == lifo.q_path.size());
  for (std::size_t t = 0; t < fifo.q_path.size(); ++t) {
    CHECK(fifo.q_path[t] == lifo.q_path[t]);
  }
  CHECK(fifo.cum_mu_served[20000] == lifo.cum_mu_served[20000]);
  CHECK(fifo.cum_transmit[20000] == lifo.cum_transmit[20000]);
  // The delay profiles, by contrast, must differ: LIFO front-loads fresh work.
  bool fifo_finite = false, lifo_finite = false;
  double fm = fifo.delays.trimmed_mean(0.9, &fifo_finite);
  double lm = lifo.delays.trimmed_mean(0.9, &lifo_finite);
  REQUIRE(fifo_finite);
  REQUIRE(lifo_finite);
  CHECK(fm != lm);
}

TEST_CASE("trimmed delay means by hand") {
  DelayStats stats;
  stats.delivered[0] = 50.0;
  stats.delivered[10] = 30.0;
  stats.delivered[100] = 20.0;
  stats.delivered_amount = 100.0;

  bool finite = false;
  CHECK(stats.trimmed_mean(1.0, &finite) == doctest::Approx(23.0).epsilon(1e-12));
  CHECK(finite);
  // Fastest 80 units: all of delay 0, and 30 of delay 10.
  CHECK(stats.trimmed_mean(0.8, &finite) == doctest::Approx(300.0 / 80.0).epsilon(1e-12));
  CHECK(finite);
  // Fastest 90 units reach 10 units into the delay-100 bucket.
  CHECK(stats.trimmed_mean(0.9, &finite) == doctest::Approx(1300.0 / 90.0).epsilon(1e-12));
  CHECK(finite);

  stats.undelivered_amount = 25.0;
  // Trim 0.8 of 125 = 100: exactly the delivered mass.
  CHECK(stats.trimmed_mean(0.8, &finite) == doctest::Approx(23.0).epsilon(1e-12));
  CHECK(finite);
  // Trim 0.9 of 125 = 112.5 > 100 delivered: the tail is still buffered.
  double inf_mean = stats.trimmed_mean(0.9, &finite);
  CHECK_FALSE(finite);
  CHECK(std::isinf(inf_mean));

  CHECK(code_of([&] { stats.trimmed_mean(0.0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { stats.trimmed_mean(1.5); }) == ErrorCode::InvalidArgument);
  DelayStats empty;
  CHECK(code_of([&] { empty.trimmed_mean(0.5); }) == ErrorCode::NoArrivals);
}

TEST_CASE("traces start at the configured backlog and reproduce by seed") {
  PhaseSchedule sched = two_state_sched();
  DppConfig padded = DppConfig::with_place_holder(80000.0, 2.0);
  Trace a = run(sched, padded, 500, Discipline::Fifo, 7.0, 123);
  CHECK(a.q_path[0] == doctest::Approx(7.0 + padded.q_place).epsilon(1e-12));
  CHECK(a.q_place == padded.q_place);
  CHECK(a.q0 == 7.0);

  Trace b = run(sched, padded, 500, Discipline::Fifo, 7.0, 123);
  for (std::size_t t = 0; t < a.q_path.size(); ++t) CHECK(a.q_path[t] == b.q_path[t]);
  Trace c = run(sched, padded, 500, Discipline::Fifo, 7.0, 124);
  bool all_same = true;
  for (std::size_t t = 0; t < a.q_path.size(); ++t) {
    all_same = all_same && a.q_path[t] == c.q_path[t];
  }
  CHECK_FALSE(all_same);
}

TEST_CASE("a bounded schedule refuses to run past its end") {
  std::vector<Phase> phases;
  phases.push_back(Phase{100, two_state(), ArrivalModel::validated({1.0}, {1.0})});
  PhaseSchedule sched(std::move(phases));
  CHECK(code_of([&] { run(sched, DppConfig::plain(1.0), 101, Discipline::Fifo, 0.0, 1); }) ==
        ErrorCode::SlotBeyondSchedule);
  Trace ok = run(sched, DppConfig::plain(1.0), 100, Discipline::Fifo, 0.0, 1);
  CHECK(ok.horizon == 100);
}

TEST_CASE("always-transmitting deterministic queue clears every slot") {
  // Channel constantly 2, arrivals constantly 1, threshold 0: everything
  // departs the slot it arrives.
  PhaseSchedule sched = PhaseSchedule::single(ChannelModel::validated({2.0}, {1.0}),
                                              ArrivalModel::validated({1.0}, {1.0}));
  RunOptions opts;
  opts.track_delays = true;
  Trace trace = run(sched, DppConfig::plain(0.0), 200, Discipline::Lifo, 0.0, 9, opts);
  CHECK(trace.final_backlog() == 0.0);
  REQUIRE(trace.delays.delivered.count(0) == 1);
  CHECK(trace.delays.delivered.at(0) == 200.0);
  CHECK(trace.delays.delivered.size() == 1);
  bool finite = false;
  CHECK(trace.delays.trimmed_mean(1.0, &finite) == 0.0);
  CHECK(finite);
}

TEST_CASE("windowed averages and the closeness check") {
  PhaseSchedule sched = two_state_sched();
  Trace trace = run(sched, DppConfig::plain(40.0), 200000, Discipline::Fifo, 0.0, 2718);
  TimeAverages avg = time_averages(trace, 200000);
  CHECK(avg.t == 200000);
  CHECK(avg.mu_bar == doctest::Approx(trace.cum_mu_offered[200000] / 200000.0));
  CHECK(avg.p_bar == doctest::Approx(trace.cum_transmit[200000] / 200000.0));
  CHECK(avg.q_bar == doctest::Approx(trace.cum_q[200000] / 200000.0));
  double occ_sum = avg.occupancy[0] + avg.occupancy[1] + avg.occupancy[2] + avg.occupancy[3];
  CHECK(occ_sum == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(code_of([&] { time_averages(trace, 200001); }) == ErrorCode::HorizonExceeded);
  CHECK(code_of([&] { time_averages(trace, 0); }) == ErrorCode::HorizonExceeded);

  // A long two-state run sits within a loose epsilon of the optimal corner.
  EpsilonCheck close = epsilon_check(avg, 0.75, 1.0, 0.05);
  CHECK(close.pass);
  CHECK(close.power_margin == doctest::Approx(0.75 + 0.05 - avg.p_bar));
  CHECK(close.rate_margin == doctest::Approx(0.05 - (1.0 - avg.mu_bar)));
  // Unreachable targets fail on the matching margin.
  EpsilonCheck rate_fail = epsilon_check(avg, 0.75, 2.0, 0.05);
  CHECK_FALSE(rate_fail.pass);
  CHECK(rate_fail.rate_margin < 0.0);
  EpsilonCheck power_fail = epsilon_check(avg, 0.1, 1.0, 0.05);
  CHECK_FALSE(power_fail.pass);
  CHECK(power_fail.power_margin < 0.0);
}
