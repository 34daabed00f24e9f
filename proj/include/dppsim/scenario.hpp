#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dppsim/policy.hpp"
#include "dppsim/queue_sim.hpp"
#include "dppsim/stochastic.hpp"

namespace dppsim {

enum class PolicyKind { Dpp, DppPlace, OmegaOnly };

// On-disk experiment description (JSON). Unknown keys are rejected so typos
// fail loudly. Numbers round-trip exactly through save/load.
struct Scenario {
  std::string name;
  std::vector<Phase> phases;

  PolicyKind policy_kind = PolicyKind::Dpp;
  double v = 0.0;                       // backlog-threshold policies
  std::optional<double> target_mu;      // omega-only: designed operating rate
  std::optional<std::vector<double>> transmit_probs;  // omega-only: explicit probs

  std::uint64_t horizon = 0;
  std::uint64_t runs = 1;
  std::uint64_t seed = 0;
  Discipline discipline = Discipline::Fifo;
  double trim = 0.98;
  double q0 = 0.0;

  std::vector<double> v_sweep;      // sweep command: threshold values
  std::vector<double> delta_sweep;  // sweep command: omega-only slack values

  PhaseSchedule schedule() const;
  // Policy instantiated against the first phase's channel.
  PolicySpec policy() const;
  // Arrival rate of the first phase.
  double lambda() const;

  static Scenario load(const std::string& path);
  void save(const std::string& path) const;
  std::string to_json() const;
  static Scenario from_json(const std::string& text);
};

}  // namespace dppsim
