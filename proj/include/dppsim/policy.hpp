#pragma once

#include <utility>
#include <variant>
#include <vector>

#include "dppsim/rate_power.hpp"
#include "dppsim/stochastic.hpp"

namespace dppsim {

// Transmit iff backlog * omega >= v (boundary inclusive).
inline bool dpp_decide(double backlog, double omega, double v) { return backlog * omega >= v; }

// Inert padding that keeps the queue-length policy in its efficient operating
// band from the start: max(v / omega_max - omega_max, 0). Positive only when
// v > omega_max^2.
double place_holder_backlog(double v, double omega_max);

// Backlog-threshold policy configuration.
struct DppConfig {
  double v = 0.0;
  double q_place = 0.0;  // inert padding counted in the decision backlog

  static DppConfig plain(double v);
  // Padding derived from the channel's top rate.
  static DppConfig with_place_holder(double v, double omega_max);
};

// Stationary randomized policy that transmits with a probability depending
// only on the current channel state.
class OmegaOnlyPolicy {
 public:
  OmegaOnlyPolicy() = default;
  // probs aligned with channel.states().
  OmegaOnlyPolicy(const ChannelModel& channel, std::vector<double> probs);

  // Transmit in states omega_k and above, k in 1..M.
  static OmegaOnlyPolicy threshold(const RatePowerCurve& curve, int k);
  // Policy achieving E[mu] = target_mu at minimum power h(target_mu): certain
  // transmission strictly above the bracketing threshold, fractional on it.
  static OmegaOnlyPolicy design(const RatePowerCurve& curve, double target_mu);

  // Transmit probability for a channel state; MissingState if unknown.
  double prob_for(double omega) const;
  const std::vector<std::pair<double, double>>& entries() const { return entries_; }

  // (E[mu], E[power]) under a channel; every channel state must be covered.
  std::pair<double, double> expectations(const ChannelModel& channel) const;

 private:
  std::vector<std::pair<double, double>> entries_;  // (state, prob), ascending state
};

using PolicySpec = std::variant<DppConfig, OmegaOnlyPolicy>;

}  // namespace dppsim
