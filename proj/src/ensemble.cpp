#include "dppsim/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <thread>
#include <variant>

#include "dppsim/error.hpp"
#include "dppsim/random.hpp"
#include "dppsim/rate_power.hpp"

namespace dppsim {

namespace {

constexpr std::uint64_t kChunkRuns = 64;  // fixed grouping keeps sums byte-stable for any job count

struct BandEdges {
  bool valid = false;
  double lo1 = 0.0, lo2 = 0.0, lo3 = 0.0;
  int classify(double q) const {
    if (q < lo1) return 0;
    if (q < lo2) return 1;
    if (q < lo3) return 2;
    return 3;
  }
};

struct Accumulator {
  std::vector<double> q_sum, q_sq;
  std::vector<std::vector<double>> expm_sum, expm_sq;
  std::vector<double> mu_inst_sum, p_inst_sum;
  std::vector<double> mu_bar_sum, mu_bar_sq, p_bar_sum, p_bar_sq, q_bar_sum;
  std::array<std::vector<double>, 4> occ_inst_sum;
  std::array<std::vector<double>, 4> occ_bar_sum, occ_bar_sq;
  std::vector<std::vector<double>> tail_bar_sum, tail_bar_sq;
  double drift_above = 0.0, drift_above_sq = 0.0;
  double drift_below = 0.0, drift_below_sq = 0.0;
  std::uint64_t drift_above_n = 0, drift_below_n = 0;

  void init(std::size_t n, std::size_t n_rs, std::size_t n_tails) {
    auto zero = [n](std::vector<double>& v) { v.assign(n + 1, 0.0); };
    zero(q_sum);
    zero(q_sq);
    expm_sum.resize(n_rs);
    expm_sq.resize(n_rs);
    for (auto& v : expm_sum) zero(v);
    for (auto& v : expm_sq) zero(v);
    zero(mu_inst_sum);
    zero(p_inst_sum);
    zero(mu_bar_sum);
    zero(mu_bar_sq);
    zero(p_bar_sum);
    zero(p_bar_sq);
    zero(q_bar_sum);
    for (auto& v : occ_inst_sum) zero(v);
    for (auto& v : occ_bar_sum) zero(v);
    for (auto& v : occ_bar_sq) zero(v);
    tail_bar_sum.resize(n_tails);
    tail_bar_sq.resize(n_tails);
    for (auto& v : tail_bar_sum) zero(v);
    for (auto& v : tail_bar_sq) zero(v);
    drift_above = drift_above_sq = drift_below = drift_below_sq = 0.0;
    drift_above_n = drift_below_n = 0;
  }

  void merge(const Accumulator& other) {
    auto add = [](std::vector<double>& a, const std::vector<double>& b) {
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    };
    add(q_sum, other.q_sum);
    add(q_sq, other.q_sq);
    for (std::size_t r = 0; r < expm_sum.size(); ++r) {
      add(expm_sum[r], other.expm_sum[r]);
      add(expm_sq[r], other.expm_sq[r]);
    }
    add(mu_inst_sum, other.mu_inst_sum);
    add(p_inst_sum, other.p_inst_sum);
    add(mu_bar_sum, other.mu_bar_sum);
    add(mu_bar_sq, other.mu_bar_sq);
    add(p_bar_sum, other.p_bar_sum);
    add(p_bar_sq, other.p_bar_sq);
    add(q_bar_sum, other.q_bar_sum);
    for (int i = 0; i < 4; ++i) {
      add(occ_inst_sum[i], other.occ_inst_sum[i]);
      add(occ_bar_sum[i], other.occ_bar_sum[i]);
      add(occ_bar_sq[i], other.occ_bar_sq[i]);
    }
    for (std::size_t c = 0; c < tail_bar_sum.size(); ++c) {
      add(tail_bar_sum[c], other.tail_bar_sum[c]);
      add(tail_bar_sq[c], other.tail_bar_sq[c]);
    }
    drift_above += other.drift_above;
    drift_above_sq += other.drift_above_sq;
    drift_above_n += other.drift_above_n;
    drift_below += other.drift_below;
    drift_below_sq += other.drift_below_sq;
    drift_below_n += other.drift_below_n;
  }
};

struct PhaseView {
  const Phase* phase;
  std::uint64_t end;  // first slot past this phase
  BandEdges edges;
};

// One simulated run accumulated straight into `acc`; no per-slot storage.
void accumulate_run(const std::vector<PhaseView>& phases, const PolicySpec& policy,
                    double q0, std::uint64_t seed, std::uint64_t horizon,
                    const std::vector<double>& rs, const std::vector<double>& tails,
                    const std::vector<double>& inv_t, Accumulator& acc) {
  const auto* dpp = std::get_if<DppConfig>(&policy);
  double q_place = dpp != nullptr ? dpp->q_place : 0.0;
  double real = q0;

  RandomSource rng(seed);
  std::size_t pi = 0;
  double mu_run = 0.0, p_run = 0.0, q_run = 0.0;
  std::array<double, 4> occ_run{};
  std::vector<double> tail_run(tails.size(), 0.0);

  for (std::uint64_t t = 0; t < horizon; ++t) {
    while (t >= phases[pi].end) ++pi;
    const PhaseView& pv = phases[pi];

    double q = q_place + real;
    double omega = pv.phase->channel.sample(rng);
    double arrival = pv.phase->arrivals.sample(rng);
    bool transmit;
    if (dpp != nullptr) {
      transmit = dpp_decide(q, omega, dpp->v);
    } else {
      transmit = rng.uniform01() < std::get<OmegaOnlyPolicy>(policy).prob_for(omega);
    }
    double offered = transmit ? omega : 0.0;

    acc.q_sum[t] += q;
    acc.q_sq[t] += q * q;
    for (std::size_t r = 0; r < rs.size(); ++r) {
      double e = std::exp(rs[r] * q);
      acc.expm_sum[r][t] += e;
      acc.expm_sq[r][t] += e * e;
    }
    acc.mu_inst_sum[t] += offered;
    acc.p_inst_sum[t] += transmit ? 1.0 : 0.0;

    int band = -1;
    if (pv.edges.valid) {
      band = pv.edges.classify(q);
      acc.occ_inst_sum[band][t] += 1.0;
      occ_run[band] += 1.0;
      for (std::size_t c = 0; c < tails.size(); ++c) {
        if (q >= pv.edges.lo2 + tails[c]) tail_run[c] += 1.0;
      }
    }

    real = std::max(real + arrival - offered, 0.0);
    double q_next = q_place + real;

    if (pv.edges.valid) {
      double dq = q_next - q;
      if (q >= pv.edges.lo2) {
        acc.drift_above += dq;
        acc.drift_above_sq += dq * dq;
        acc.drift_above_n += 1;
      } else {
        acc.drift_below += dq;
        acc.drift_below_sq += dq * dq;
        acc.drift_below_n += 1;
      }
    }

    mu_run += offered;
    p_run += transmit ? 1.0 : 0.0;
    q_run += q;
    double inv = inv_t[t + 1];
    double mb = mu_run * inv;
    double pb = p_run * inv;
    acc.mu_bar_sum[t + 1] += mb;
    acc.mu_bar_sq[t + 1] += mb * mb;
    acc.p_bar_sum[t + 1] += pb;
    acc.p_bar_sq[t + 1] += pb * pb;
    acc.q_bar_sum[t + 1] += q_run * inv;
    for (int i = 0; i < 4; ++i) {
      double ob = occ_run[i] * inv;
      acc.occ_bar_sum[i][t + 1] += ob;
      acc.occ_bar_sq[i][t + 1] += ob * ob;
    }
    for (std::size_t c = 0; c < tails.size(); ++c) {
      double tb = tail_run[c] * inv;
      acc.tail_bar_sum[c][t + 1] += tb;
      acc.tail_bar_sq[c][t + 1] += tb * tb;
    }
  }

  double q_final = q_place + real;
  acc.q_sum[horizon] += q_final;
  acc.q_sq[horizon] += q_final * q_final;
  for (std::size_t r = 0; r < rs.size(); ++r) {
    double e = std::exp(rs[r] * q_final);
    acc.expm_sum[r][horizon] += e;
    acc.expm_sq[r][horizon] += e * e;
  }
}

void finalize_stat(const std::vector<double>& sum, const std::vector<double>& sq, std::uint64_t n,
                   std::vector<double>& mean, std::vector<double>* se) {
  double dn = static_cast<double>(n);
  mean.resize(sum.size());
  if (se != nullptr) se->assign(sum.size(), 0.0);
  for (std::size_t i = 0; i < sum.size(); ++i) {
    double m = sum[i] / dn;
    mean[i] = m;
    if (se != nullptr && n > 1) {
      double var = (sq[i] - dn * m * m) / (dn - 1.0);
      (*se)[i] = std::sqrt(std::max(var, 0.0) / dn);
    }
  }
}

}  // namespace

EnsembleResult ensemble(const PhaseSchedule& schedule, const PolicySpec& policy,
                        Discipline /*discipline*/, double q0, const EnsembleSpec& spec) {
  if (spec.horizon == 0) fail(ErrorCode::InvalidArgument, "horizon must be >= 1");
  if (spec.n_runs == 0) fail(ErrorCode::InvalidArgument, "need at least one run");
  if (schedule.total_slots() != Phase::kOpenEnded && spec.horizon > schedule.total_slots()) {
    fail(ErrorCode::SlotBeyondSchedule, "horizon exceeds the scheduled phases");
  }

  const auto* dpp = std::get_if<DppConfig>(&policy);
  std::vector<PhaseView> phases;
  bool all_valid = true;
  for (std::size_t i = 0; i < schedule.phases().size(); ++i) {
    const Phase& phase = schedule.phases()[i];
    PhaseView pv;
    pv.phase = &phase;
    pv.end = phase.duration == Phase::kOpenEnded ? Phase::kOpenEnded
                                                 : schedule.phase_start(i) + phase.duration;
    if (dpp != nullptr) {
      try {
        RatePowerCurve curve = RatePowerCurve::build(phase.channel);
        TimeshareSolution ts = locate_segment(curve, phase.arrivals.mean_rate());
        pv.edges.valid = true;
        pv.edges.lo1 = dpp->v / ts.omega_b_plus1;
        pv.edges.lo2 = dpp->v / ts.omega_b;
        pv.edges.lo3 = dpp->v / ts.omega_b_minus1;
      } catch (const Error&) {
        all_valid = false;
      }
    } else {
      all_valid = false;
    }
    phases.push_back(pv);
  }

  std::size_t n = static_cast<std::size_t>(spec.horizon);
  std::vector<double> inv_t(n + 2, 0.0);
  for (std::size_t t = 1; t < inv_t.size(); ++t) inv_t[t] = 1.0 / static_cast<double>(t);

  Accumulator total;
  total.init(n, spec.exp_moment_rs.size(), spec.tail_offsets.size());

  std::uint64_t n_chunks = (spec.n_runs + kChunkRuns - 1) / kChunkRuns;
  int jobs = std::max(spec.jobs, 1);
  if (static_cast<std::uint64_t>(jobs) > n_chunks) jobs = static_cast<int>(n_chunks);

  auto run_chunk = [&](std::uint64_t chunk, Accumulator& acc) {
    std::uint64_t lo = chunk * kChunkRuns;
    std::uint64_t hi = std::min(lo + kChunkRuns, spec.n_runs);
    for (std::uint64_t i = lo; i < hi; ++i) {
      accumulate_run(phases, policy, q0, spec.base_seed + i, spec.horizon, spec.exp_moment_rs,
                     spec.tail_offsets, inv_t, acc);
    }
  };

  if (jobs <= 1) {
    Accumulator scratch;
    for (std::uint64_t chunk = 0; chunk < n_chunks; ++chunk) {
      scratch.init(n, spec.exp_moment_rs.size(), spec.tail_offsets.size());
      run_chunk(chunk, scratch);
      total.merge(scratch);
    }
  } else {
    // Workers claim chunks dynamically but merge strictly in chunk order, so
    // floating-point sums group identically for every job count.
    std::atomic<std::uint64_t> next_chunk{0};
    std::mutex merge_mutex;
    std::condition_variable merge_cv;
    std::uint64_t merge_next = 0;
    auto worker = [&] {
      Accumulator scratch;
      while (true) {
        std::uint64_t chunk = next_chunk.fetch_add(1);
        if (chunk >= n_chunks) break;
        scratch.init(n, spec.exp_moment_rs.size(), spec.tail_offsets.size());
        run_chunk(chunk, scratch);
        std::unique_lock<std::mutex> lock(merge_mutex);
        merge_cv.wait(lock, [&] { return merge_next == chunk; });
        total.merge(scratch);
        ++merge_next;
        merge_cv.notify_all();
      }
    };
    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (int i = 0; i < jobs; ++i) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }

  EnsembleResult result;
  result.horizon = spec.horizon;
  result.n_runs = spec.n_runs;
  result.q0 = q0;
  result.q_place = dpp != nullptr ? dpp->q_place : 0.0;
  result.classified = all_valid;

  finalize_stat(total.q_sum, total.q_sq, spec.n_runs, result.q_mean, &result.q_se);
  result.expm_mean.resize(spec.exp_moment_rs.size());
  result.expm_se.resize(spec.exp_moment_rs.size());
  for (std::size_t r = 0; r < spec.exp_moment_rs.size(); ++r) {
    finalize_stat(total.expm_sum[r], total.expm_sq[r], spec.n_runs, result.expm_mean[r],
                  &result.expm_se[r]);
  }
  finalize_stat(total.mu_inst_sum, total.mu_inst_sum, spec.n_runs, result.mu_inst_mean, nullptr);
  finalize_stat(total.p_inst_sum, total.p_inst_sum, spec.n_runs, result.p_inst_mean, nullptr);
  result.mu_inst_mean.resize(n);
  result.p_inst_mean.resize(n);
  finalize_stat(total.mu_bar_sum, total.mu_bar_sq, spec.n_runs, result.mu_bar_mean,
                &result.mu_bar_se);
  finalize_stat(total.p_bar_sum, total.p_bar_sq, spec.n_runs, result.p_bar_mean, &result.p_bar_se);
  finalize_stat(total.q_bar_sum, total.q_bar_sum, spec.n_runs, result.q_bar_mean, nullptr);
  for (int i = 0; i < 4; ++i) {
    finalize_stat(total.occ_inst_sum[i], total.occ_inst_sum[i], spec.n_runs, result.occ_inst[i],
                  nullptr);
    finalize_stat(total.occ_bar_sum[i], total.occ_bar_sq[i], spec.n_runs, result.occ_bar_mean[i],
                  &result.occ_bar_se[i]);
  }
  result.tail_bar_mean.resize(spec.tail_offsets.size());
  result.tail_bar_se.resize(spec.tail_offsets.size());
  for (std::size_t c = 0; c < spec.tail_offsets.size(); ++c) {
    finalize_stat(total.tail_bar_sum[c], total.tail_bar_sq[c], spec.n_runs,
                  result.tail_bar_mean[c], &result.tail_bar_se[c]);
  }

  auto cond_stats = [](double sum, double sq, std::uint64_t cnt, double& mean, double& se) {
    if (cnt == 0) {
      mean = se = 0.0;
      return;
    }
    double dn = static_cast<double>(cnt);
    mean = sum / dn;
    se = cnt > 1 ? std::sqrt(std::max((sq - dn * mean * mean) / (dn - 1.0), 0.0) / dn) : 0.0;
  };
  cond_stats(total.drift_above, total.drift_above_sq, total.drift_above_n, result.drift_above_mean,
             result.drift_above_se);
  cond_stats(total.drift_below, total.drift_below_sq, total.drift_below_n, result.drift_below_mean,
             result.drift_below_se);
  result.drift_above_n = total.drift_above_n;
  result.drift_below_n = total.drift_below_n;
  return result;
}

void EnsembleResult::write_csv(std::ostream& out, std::uint64_t max_rows) const {
  out << "t,mean_mu_bar,mean_p_bar,mean_Q,se_mu,se_p,se_Q,occ1,occ2,occ3,occ4\n";
  if (max_rows < 2) max_rows = 2;
  std::uint64_t stride = horizon <= max_rows ? 1 : (horizon + max_rows - 1) / max_rows;
  char line[320];
  auto emit = [&](std::uint64_t row) {
    std::snprintf(line, sizeof(line),
                  "%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<unsigned long long>(row), mu_bar_mean[row], p_bar_mean[row],
                  q_mean[row], mu_bar_se[row], p_bar_se[row], q_se[row], occ_bar_mean[0][row],
                  occ_bar_mean[1][row], occ_bar_mean[2][row], occ_bar_mean[3][row]);
    out << line;
  };
  std::uint64_t t = 1;
  for (; t + stride <= horizon; t += stride) emit(t);
  emit(horizon);
}

}  // namespace dppsim
