#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "dppsim/bounds.hpp"
#include "dppsim/ensemble.hpp"
#include "dppsim/error.hpp"
#include "dppsim/policy.hpp"
#include "dppsim/queue_sim.hpp"
#include "dppsim/rate_power.hpp"
#include "dppsim/scenario.hpp"
#include "dppsim/stochastic.hpp"

namespace {

using namespace dppsim;

struct CommonFlags {
  std::string scenario_path;
  double v = 0.0;
  std::uint64_t horizon = 0;
  std::uint64_t runs = 0;
  std::uint64_t seed = 0;
  std::string discipline;
  double trim = 0.0;
  std::string out;
  int jobs = 1;
};

void add_common(CLI::App* sub, CommonFlags& flags, bool with_scenario) {
  if (with_scenario) {
    sub->add_option("--scenario", flags.scenario_path, "scenario JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--v", flags.v, "override the policy's backlog threshold");
    sub->add_option("--horizon", flags.horizon, "override the slot count");
    sub->add_option("--runs", flags.runs, "override the run count");
    sub->add_option("--seed", flags.seed, "override the base seed");
    sub->add_option("--discipline", flags.discipline, "override the service order")
        ->check(CLI::IsMember({"fifo", "lifo"}));
    sub->add_option("--trim", flags.trim, "override the delay trim fraction");
  }
  sub->add_option("--out", flags.out, "write CSV here instead of stdout");
  sub->add_option("--jobs", flags.jobs, "worker threads for multi-run commands")
      ->check(CLI::PositiveNumber);
}

Scenario load_with_overrides(const CLI::App* sub, const CommonFlags& flags) {
  Scenario sc = Scenario::load(flags.scenario_path);
  if (sub->count("--v") != 0) sc.v = flags.v;
  if (sub->count("--horizon") != 0) sc.horizon = flags.horizon;
  if (sub->count("--runs") != 0) sc.runs = flags.runs;
  if (sub->count("--seed") != 0) sc.seed = flags.seed;
  if (sub->count("--discipline") != 0) {
    sc.discipline = flags.discipline == "lifo" ? Discipline::Lifo : Discipline::Fifo;
  }
  if (sub->count("--trim") != 0) sc.trim = flags.trim;
  if (sc.horizon == 0) fail(ErrorCode::InvalidArgument, "horizon not set (scenario or --horizon)");
  return sc;
}

// Opens --out if given, else hands back stdout.
class CsvSink {
 public:
  explicit CsvSink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) fail(ErrorCode::InvalidArgument, "cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  bool to_file() const { return file_.is_open(); }

 private:
  std::ofstream file_;
};

const char* policy_label(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Dpp: return "dpp";
    case PolicyKind::DppPlace: return "dpp-place";
    case PolicyKind::OmegaOnly: return "omega-only";
  }
  return "dpp";
}

void write_trace_csv(const Trace& trace, std::ostream& out, std::uint64_t max_rows = 2048) {
  out << "t,mu_bar,p_bar,q,occ1,occ2,occ3,occ4\n";
  std::uint64_t h = trace.horizon;
  std::uint64_t stride = h <= max_rows ? 1 : (h + max_rows - 1) / max_rows;
  char line[256];
  auto emit = [&](std::uint64_t t) {
    double inv = 1.0 / static_cast<double>(t);
    std::array<double, 4> occ{};
    if (trace.has_intervals) {
      for (int i = 0; i < 4; ++i) occ[i] = trace.cum_interval[i][t] * inv;
    }
    std::snprintf(line, sizeof(line), "%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<unsigned long long>(t), trace.cum_mu_offered[t] * inv,
                  trace.cum_transmit[t] * inv, trace.q_path[t], occ[0], occ[1], occ[2], occ[3]);
    out << line;
  };
  std::uint64_t t = 1;
  for (; t + stride <= h; t += stride) emit(t);
  emit(h);
}

int cmd_simulate(const CLI::App* sub, const CommonFlags& flags) {
  Scenario sc = load_with_overrides(sub, flags);
  if (sc.runs <= 1) {
    RunOptions options;
    options.track_delays = true;
    Trace trace =
        run(sc.schedule(), sc.policy(), sc.horizon, sc.discipline, sc.q0, sc.seed, options);
    TimeAverages avg = time_averages(trace, sc.horizon);
    std::printf("%s: %llu slots, policy %s, seed %llu\n", sc.name.c_str(),
                static_cast<unsigned long long>(sc.horizon), policy_label(sc.policy_kind),
                static_cast<unsigned long long>(sc.seed));
    std::printf("  mu_bar %.6g  p_bar %.6g  q_bar %.6g  final_q %.6g\n", avg.mu_bar, avg.p_bar,
                avg.q_bar, trace.final_backlog());
    if (trace.has_intervals) {
      std::printf("  band shares %.4f / %.4f / %.4f / %.4f\n", avg.occupancy[0], avg.occupancy[1],
                  avg.occupancy[2], avg.occupancy[3]);
    }
    bool finite = true;
    double delay = trace.delays.trimmed_mean(sc.trim, &finite);
    if (finite) {
      std::printf("  delay trimmed mean (%.2f): %.6g slots\n", sc.trim, delay);
    } else {
      std::printf("  delay trimmed mean (%.2f): unbounded (trim reaches undelivered data)\n",
                  sc.trim);
    }
    if (!flags.out.empty()) {
      CsvSink sink(flags.out);
      write_trace_csv(trace, sink.stream());
    }
    return 0;
  }

  EnsembleSpec spec;
  spec.horizon = sc.horizon;
  spec.n_runs = sc.runs;
  spec.base_seed = sc.seed;
  spec.jobs = flags.jobs;
  EnsembleResult res = ensemble(sc.schedule(), sc.policy(), sc.discipline, sc.q0, spec);
  std::uint64_t h = sc.horizon;
  std::printf("%s: %llu runs x %llu slots, policy %s\n", sc.name.c_str(),
              static_cast<unsigned long long>(sc.runs), static_cast<unsigned long long>(h),
              policy_label(sc.policy_kind));
  std::printf("  mu_bar %.6g (se %.2g)  p_bar %.6g (se %.2g)  q_bar %.6g  E[Q(T)] %.6g\n",
              res.mu_bar_mean[h], res.mu_bar_se[h], res.p_bar_mean[h], res.p_bar_se[h],
              res.q_bar_mean[h], res.q_mean[h]);
  if (res.classified) {
    std::printf("  band shares %.4f / %.4f / %.4f / %.4f\n", res.occ_bar_mean[0][h],
                res.occ_bar_mean[1][h], res.occ_bar_mean[2][h], res.occ_bar_mean[3][h]);
  }
  if (!flags.out.empty()) {
    CsvSink sink(flags.out);
    res.write_csv(sink.stream());
  }
  return 0;
}

int cmd_sweep(const CLI::App* sub, const CommonFlags& flags) {
  Scenario sc = load_with_overrides(sub, flags);
  if (sc.v_sweep.empty() && sc.delta_sweep.empty()) {
    fail(ErrorCode::InvalidArgument, "scenario lists no v_sweep or delta_sweep values");
  }
  CsvSink sink(flags.out);
  std::ostream& out = sink.stream();
  out << "algorithm,v,delta,p_bar,q_bar\n";
  char line[256];

  auto point = [&](const PolicySpec& policy, const char* label, double v, double delta) {
    EnsembleSpec spec;
    spec.horizon = sc.horizon;
    spec.n_runs = sc.runs;
    spec.base_seed = sc.seed;
    spec.jobs = flags.jobs;
    EnsembleResult res = ensemble(sc.schedule(), policy, sc.discipline, sc.q0, spec);
    std::snprintf(line, sizeof(line), "%s,%.17g,%.17g,%.17g,%.17g\n", label, v, delta,
                  res.p_bar_mean[sc.horizon], res.q_bar_mean[sc.horizon]);
    out << line;
    if (sink.to_file()) {
      std::printf("%s v=%g delta=%g: p_bar %.6g  q_bar %.6g\n", label, v, delta,
                  res.p_bar_mean[sc.horizon], res.q_bar_mean[sc.horizon]);
    }
  };

  if (!sc.v_sweep.empty() && sc.policy_kind == PolicyKind::OmegaOnly) {
    fail(ErrorCode::InvalidArgument, "v_sweep needs a backlog-threshold policy");
  }
  for (double v : sc.v_sweep) {
    Scenario at_v = sc;
    at_v.v = v;
    point(at_v.policy(), policy_label(sc.policy_kind), v, 0.0);
  }
  if (!sc.delta_sweep.empty()) {
    RatePowerCurve curve = RatePowerCurve::build(sc.phases.front().channel);
    double lambda = sc.lambda();
    for (double delta : sc.delta_sweep) {
      point(OmegaOnlyPolicy::design(curve, lambda + delta), "omega-only", 0.0, delta);
    }
  }
  return 0;
}

int cmd_verify(const CLI::App* sub, const CommonFlags& flags) {
  Scenario sc = load_with_overrides(sub, flags);
  PolicySpec policy = sc.policy();
  const auto* config = std::get_if<DppConfig>(&policy);
  if (config == nullptr) {
    fail(ErrorCode::InvalidArgument, "verify needs a backlog-threshold policy");
  }
  const Phase& phase = sc.phases.front();
  std::vector<BoundReport> reports = verify_bounds(phase.channel, phase.arrivals, *config,
                                                   sc.horizon, sc.runs, sc.seed, flags.jobs);
  CsvSink sink(flags.out);
  write_csv(reports, sink.stream());
  bool all_pass = true;
  for (const BoundReport& r : reports) {
    all_pass = all_pass && r.pass;
    if (sink.to_file()) {
      std::printf("%-16s %-5s  analytic %-12.6g empirical %-12.6g slack %.3g  %s\n",
                  r.quantity.c_str(), r.sense == BoundSense::Upper ? "upper" : "lower", r.analytic,
                  r.empirical, r.slack, r.pass ? "pass" : "FAIL");
    }
  }
  std::fprintf(sink.to_file() ? stdout : stderr, "%s: %zu checks, %s\n", sc.name.c_str(),
               reports.size(), all_pass ? "all pass" : "FAILURES");
  return all_pass ? 0 : 1;
}

int cmd_converse(const CLI::App* sub, const CommonFlags& flags, const std::vector<double>& eps_list,
                 double y, double z) {
  struct Family {
    const char* label;
    double y, z;
  };
  std::vector<Family> cases;
  if (sub->count("--y") != 0 || sub->count("--z") != 0) {
    if (y < 0.0 || z < 0.0 || y + z > 1.0) {
      fail(ErrorCode::InvalidArgument, "need y >= 0, z >= 0, y + z <= 1");
    }
    cases.push_back({"custom", y, z});
  } else {
    cases.push_back({"case1", 0.0, 0.25});
    cases.push_back({"case2", 0.5, 0.5});
  }

  CsvSink sink(flags.out);
  std::ostream& out = sink.stream();
  out << "case,y,z,epsilon,t_min,eps_times_t_min\n";
  char line[256];
  for (const Family& fam : cases) {
    ChannelModel channel =
        ChannelModel::validated({1.0, 2.0, 3.0}, {1.0 - fam.y - fam.z, fam.z, fam.y});
    RatePowerCurve curve = RatePowerCurve::build(channel);
    double mu0 = fam.z, p0 = fam.z / 2.0;  // half-rate transmission in the middle state
    for (double eps : eps_list) {
      std::uint64_t t_min = converse_min_time(curve, 1.0, eps, mu0, p0);
      std::snprintf(line, sizeof(line), "%s,%.17g,%.17g,%.17g,%llu,%.17g\n", fam.label, fam.y,
                    fam.z, eps, static_cast<unsigned long long>(t_min),
                    eps * static_cast<double>(t_min));
      out << line;
      if (sink.to_file()) {
        std::printf("%s eps=%.10g: t_min=%llu  eps*t_min=%.10g\n", fam.label, eps,
                    static_cast<unsigned long long>(t_min), eps * static_cast<double>(t_min));
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-queue transmission policy simulator and bound checker"};
  app.require_subcommand(1);

  CommonFlags sim_flags, sweep_flags, verify_flags, conv_flags;
  CLI::App* sim = app.add_subcommand("simulate", "run a scenario and report time averages");
  add_common(sim, sim_flags, true);
  CLI::App* sweep = app.add_subcommand("sweep", "trade-off curve over v or rate-slack values");
  add_common(sweep, sweep_flags, true);
  CLI::App* verify = app.add_subcommand("verify", "check closed-form guarantees by ensemble");
  add_common(verify, verify_flags, true);
  CLI::App* conv = app.add_subcommand("converse", "minimum averaging horizon per epsilon");
  add_common(conv, conv_flags, false);
  std::vector<double> eps_list = {0.0078125,     0.00390625,     0.001953125,
                                  0.0009765625,  0.00048828125,  0.000244140625};
  conv->add_option("--eps", eps_list, "epsilon values");
  double conv_y = 0.0, conv_z = 0.25;
  conv->add_option("--y", conv_y, "top-state probability of the custom family");
  conv->add_option("--z", conv_z, "middle-state probability of the custom family");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim, sim_flags);
    if (sweep->parsed()) return cmd_sweep(sweep, sweep_flags);
    if (verify->parsed()) return cmd_verify(verify, verify_flags);
    if (conv->parsed()) return cmd_converse(conv, conv_flags, eps_list, conv_y, conv_z);
  } catch (const dppsim::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
