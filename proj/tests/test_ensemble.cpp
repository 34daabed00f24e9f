#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "dppsim/ensemble.hpp"
#include "dppsim/error.hpp"
#include "dppsim/policy.hpp"
#include "dppsim/queue_sim.hpp"
#include "dppsim/stochastic.hpp"
#include "test_util.hpp"

using namespace dppsim;

namespace {

PhaseSchedule two_state_sched() {
  return PhaseSchedule::single(
      ChannelModel::validated({1.0, 2.0}, {0.75, 0.25}),
      ArrivalModel::validated({0.0, 1.0, 2.0}, {0.4, 0.2, 0.4}));
}

}  // namespace

TEST_CASE("a one-run ensemble replays the single trace") {
  PhaseSchedule sched = two_state_sched();
  DppConfig pol = DppConfig::plain(40.0);
  EnsembleSpec spec;
  spec.horizon = 4000;
  spec.n_runs = 1;
  spec.base_seed = 555;
  spec.exp_moment_rs = {0.06};
  spec.tail_offsets = {10.0};
  EnsembleResult ens = ensemble(sched, pol, Discipline::Fifo, 2.0, spec);
  Trace trace = run(sched, pol, 4000, Discipline::Fifo, 2.0, 555);

  REQUIRE(ens.q_mean.size() == 4001);
  for (std::uint64_t t = 0; t <= 4000; ++t) {
    CHECK(ens.q_mean[t] == trace.q_path[t]);
    CHECK(ens.q_se[t] == 0.0);
  }
  for (std::uint64_t t = 1; t <= 4000; ++t) {
    TimeAverages avg = time_averages(trace, t);
    CHECK(ens.mu_bar_mean[t] == doctest::Approx(avg.mu_bar).epsilon(1e-12));
    CHECK(ens.p_bar_mean[t] == doctest::Approx(avg.p_bar).epsilon(1e-12));
    CHECK(ens.q_bar_mean[t] == doctest::Approx(avg.q_bar).epsilon(1e-12));
    for (int i = 0; i < 4; ++i) {
      CHECK(ens.occ_bar_mean[i][t] == doctest::Approx(avg.occupancy[i]).epsilon(1e-12));
    }
  }
  for (std::uint64_t t = 0; t < 4000; ++t) {
    CHECK(ens.expm_mean[0][t] == doctest::Approx(std::exp(0.06 * trace.q_path[t])).epsilon(1e-12));
    CHECK(ens.expm_mean[0][t] >= 1.0);
  }
  CHECK(ens.classified);
  CHECK(ens.q_mean[0] == 2.0);
  CHECK(ens.q0 == 2.0);
}

TEST_CASE("worker count never changes the numbers") {
  PhaseSchedule sched = two_state_sched();
  DppConfig pol = DppConfig::plain(20.0);
  EnsembleSpec spec;
  spec.horizon = 600;
  spec.n_runs = 130;  // a ragged final chunk
  spec.base_seed = 90001;
  spec.exp_moment_rs = {0.06};
  spec.tail_offsets = {5.0, 20.0};
  spec.jobs = 1;
  EnsembleResult serial = ensemble(sched, pol, Discipline::Fifo, 0.0, spec);
  spec.jobs = 4;
  EnsembleResult parallel = ensemble(sched, pol, Discipline::Fifo, 0.0, spec);

  REQUIRE(serial.q_mean.size() == parallel.q_mean.size());
  for (std::size_t t = 0; t < serial.q_mean.size(); ++t) {
    CHECK(serial.q_mean[t] == parallel.q_mean[t]);
    CHECK(serial.q_se[t] == parallel.q_se[t]);
  }
  for (std::size_t t = 1; t <= 600; ++t) {
    CHECK(serial.p_bar_mean[t] == parallel.p_bar_mean[t]);
    CHECK(serial.p_bar_se[t] == parallel.p_bar_se[t]);
    CHECK(serial.tail_bar_mean[1][t] == parallel.tail_bar_mean[1][t]);
  }
  CHECK(serial.drift_above_mean == parallel.drift_above_mean);
  CHECK(serial.drift_below_mean == parallel.drift_below_mean);
  CHECK(serial.drift_above_n == parallel.drift_above_n);
}

TEST_CASE("small-ensemble moments match hand statistics") {
  PhaseSchedule sched = two_state_sched();
  DppConfig pol = DppConfig::plain(40.0);

  EnsembleSpec spec;
  spec.horizon = 300;
  spec.n_runs = 2;
  spec.base_seed = 4242;
  EnsembleResult two = ensemble(sched, pol, Discipline::Fifo, 0.0, spec);
  Trace r0 = run(sched, pol, 300, Discipline::Fifo, 0.0, 4242);
  Trace r1 = run(sched, pol, 300, Discipline::Fifo, 0.0, 4243);
  double a = r0.q_path[300], b = r1.q_path[300];
  CHECK(two.q_mean[300] == doctest::Approx((a + b) / 2.0).epsilon(1e-12));
  CHECK(two.q_se[300] == doctest::Approx(std::abs(a - b) / 2.0).epsilon(1e-9));

  spec.n_runs = 3;
  EnsembleResult three = ensemble(sched, pol, Discipline::Fifo, 0.0, spec);
  Trace r2 = run(sched, pol, 300, Discipline::Fifo, 0.0, 4244);
  CHECK(three.q_mean[300] ==
        doctest::Approx((a + b + r2.q_path[300]) / 3.0).epsilon(1e-12));
}

TEST_CASE("backlog drifts toward the threshold line from both sides") {
  PhaseSchedule sched = two_state_sched();
  EnsembleSpec spec;
  spec.horizon = 2000;
  spec.n_runs = 200;
  spec.base_seed = 1234;
  EnsembleResult ens = ensemble(sched, DppConfig::plain(40.0), Discipline::Fifo, 0.0, spec);
  REQUIRE(ens.classified);
  REQUIRE(ens.drift_above_n > 0);
  REQUIRE(ens.drift_below_n > 0);
  CHECK(ens.drift_above_mean + 3.0 * ens.drift_above_se < 0.0);
  CHECK(ens.drift_below_mean - 3.0 * ens.drift_below_se > 0.0);
}

TEST_CASE("padding shows up in the initial ensemble backlog") {
  PhaseSchedule sched = two_state_sched();
  DppConfig pol = DppConfig::with_place_holder(80000.0, 2.0);
  EnsembleSpec spec;
  spec.horizon = 50;
  spec.n_runs = 4;
  spec.base_seed = 8;
  EnsembleResult ens = ensemble(sched, pol, Discipline::Fifo, 1.5, spec);
  CHECK(ens.q_mean[0] == doctest::Approx(1.5 + pol.q_place).epsilon(1e-12));
  CHECK(ens.q_se[0] == 0.0);
  CHECK(ens.q_place == doctest::Approx(pol.q_place).epsilon(1e-12));
  // psi measures growth above the initial backlog.
  CHECK(ens.psi(50) ==
        doctest::Approx((ens.q_mean[50] - ens.q_mean[0]) / 50.0).epsilon(1e-12));
}

TEST_CASE("state-only policies carry no band classification") {
  PhaseSchedule sched = two_state_sched();
  RatePowerCurve curve = RatePowerCurve::build(sched.phases()[0].channel);
  OmegaOnlyPolicy pol = OmegaOnlyPolicy::design(curve, 0.9);
  EnsembleSpec spec;
  spec.horizon = 200;
  spec.n_runs = 3;
  spec.base_seed = 77;
  EnsembleResult ens = ensemble(sched, pol, Discipline::Fifo, 0.0, spec);
  CHECK_FALSE(ens.classified);
  CHECK(ens.drift_above_n == 0);
  CHECK(ens.drift_below_n == 0);
  // Occupancies stay empty rather than pretending to classify.
  CHECK(ens.occ_inst[0][10] == 0.0);
  CHECK(ens.occ_inst[3][10] == 0.0);
}

TEST_CASE("ensemble CSV thins long horizons and keeps the final slot") {
  PhaseSchedule sched = two_state_sched();
  EnsembleSpec spec;
  spec.horizon = 5000;
  spec.n_runs = 2;
  spec.base_seed = 11;
  EnsembleResult ens = ensemble(sched, DppConfig::plain(10.0), Discipline::Fifo, 0.0, spec);
  std::ostringstream out;
  ens.write_csv(out, 100);
  std::string text = out.str();
  CHECK(text.rfind("t,mean_mu_bar,mean_p_bar,mean_Q,se_mu,se_p,se_Q,occ1,occ2,occ3,occ4\n", 0) ==
        0);
  std::size_t lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  CHECK(lines <= 102);
  CHECK(lines >= 50);
  std::size_t last_nl = text.find_last_of('\n', text.size() - 2);
  CHECK(text.compare(last_nl + 1, 5, "5000,") == 0);
}

TEST_CASE("ensemble validation") {
  PhaseSchedule sched = two_state_sched();
  EnsembleSpec spec;
  spec.horizon = 0;
  spec.n_runs = 1;
  CHECK(code_of([&] { ensemble(sched, DppConfig::plain(1.0), Discipline::Fifo, 0.0, spec); }) ==
        ErrorCode::InvalidArgument);
  spec.horizon = 10;
  spec.n_runs = 0;
  CHECK(code_of([&] { ensemble(sched, DppConfig::plain(1.0), Discipline::Fifo, 0.0, spec); }) ==
        ErrorCode::InvalidArgument);
}
