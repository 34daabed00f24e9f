#include "dppsim/policy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dppsim/error.hpp"

namespace dppsim {

double place_holder_backlog(double v, double omega_max) {
  if (!(v >= 0.0) || !(omega_max > 0.0)) {
    fail(ErrorCode::InvalidArgument, "place-holder needs v >= 0 and omega_max > 0");
  }
  return std::max(v / omega_max - omega_max, 0.0);
}

DppConfig DppConfig::plain(double v) {
  if (!(v >= 0.0)) fail(ErrorCode::InvalidArgument, "v must be >= 0");
  return DppConfig{v, 0.0};
}

DppConfig DppConfig::with_place_holder(double v, double omega_max) {
  return DppConfig{v, place_holder_backlog(v, omega_max)};
}

OmegaOnlyPolicy::OmegaOnlyPolicy(const ChannelModel& channel, std::vector<double> probs) {
  const auto& states = channel.states();
  if (probs.size() != states.size()) {
    fail(ErrorCode::SizeMismatch, "one transmit probability per channel state");
  }
  entries_.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!(probs[i] >= 0.0) || !(probs[i] <= 1.0)) {
      fail(ErrorCode::InvalidArgument, "transmit probabilities must lie in [0, 1]");
    }
    entries_.emplace_back(states[i], probs[i]);
  }
}

OmegaOnlyPolicy OmegaOnlyPolicy::threshold(const RatePowerCurve& curve, int k) {
  int m = curve.num_thresholds();
  if (k < 1 || k > m) fail(ErrorCode::IndexOutOfRange, "threshold index " + std::to_string(k));
  const ChannelModel& ch = curve.channel();
  double cut = ch.omega(k);
  std::vector<double> probs;
  probs.reserve(ch.states().size());
  for (double s : ch.states()) probs.push_back(s >= cut ? 1.0 : 0.0);
  return OmegaOnlyPolicy(ch, std::move(probs));
}

OmegaOnlyPolicy OmegaOnlyPolicy::design(const RatePowerCurve& curve, double target_mu) {
  double hi = curve.max_rate();
  double tol = 1e-9 * std::max(1.0, hi);
  if (target_mu < -tol || target_mu > hi + tol) {
    fail(ErrorCode::RateOutOfRange, "target rate " + std::to_string(target_mu));
  }
  const ChannelModel& ch = curve.channel();
  target_mu = std::clamp(target_mu, 0.0, hi);

  // Exact vertex targets degrade to pure threshold policies.
  for (const VertexPoint& vp : curve.vertices()) {
    if (std::abs(target_mu - vp.mu) <= tol) {
      if (vp.k > curve.num_thresholds()) {  // origin: never transmit
        return OmegaOnlyPolicy(ch, std::vector<double>(ch.states().size(), 0.0));
      }
      return threshold(curve, vp.k);
    }
  }

  TimeshareSolution ts = locate_segment(curve, target_mu);
  // Mixing the two bracketing threshold policies slotwise: states at or above
  // omega_{b+1} transmit under both, the boundary state omega_b only under the
  // wider policy (weight 1 - theta).
  std::vector<double> probs;
  probs.reserve(ch.states().size());
  for (double s : ch.states()) {
    if (s >= ts.omega_b_plus1) {
      probs.push_back(1.0);
    } else if (s == ts.omega_b) {
      probs.push_back(1.0 - ts.theta);
    } else {
      probs.push_back(0.0);
    }
  }
  return OmegaOnlyPolicy(ch, std::move(probs));
}

double OmegaOnlyPolicy::prob_for(double omega) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), omega,
                             [](const std::pair<double, double>& e, double x) { return e.first < x; });
  if (it == entries_.end() || it->first != omega) {
    fail(ErrorCode::MissingState, "no transmit probability for state " + std::to_string(omega));
  }
  return it->second;
}

std::pair<double, double> OmegaOnlyPolicy::expectations(const ChannelModel& channel) const {
  double mu = 0.0, power = 0.0;
  const auto& states = channel.states();
  const auto& probs = channel.probs();
  for (std::size_t i = 0; i < states.size(); ++i) {
    double q = prob_for(states[i]);
    mu += probs[i] * states[i] * q;
    power += probs[i] * q;
  }
  return {mu, power};
}

}  // namespace dppsim
