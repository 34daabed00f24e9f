#include "dppsim/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dppsim/error.hpp"

namespace dppsim {

DiscreteDistribution DiscreteDistribution::validated(std::vector<double> values,
                                                     std::vector<double> probs,
                                                     const char* what) {
  if (values.size() != probs.size() || values.empty()) {
    fail(ErrorCode::SizeMismatch,
         std::string(what) + ": need matching, nonempty value/probability lists");
  }
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      fail(ErrorCode::NegativeRate, std::string(what) + ": values must be finite and >= 0");
    }
  }
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      fail(ErrorCode::NegativeProbability,
           std::string(what) + ": probabilities must be finite and >= 0");
    }
  }

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  DiscreteDistribution dist;
  bool any = false;
  double prev = 0.0;
  for (std::size_t idx : order) {
    if (any && values[idx] == prev) {
      fail(ErrorCode::DuplicateState, std::string(what) + ": duplicate value");
    }
    any = true;
    prev = values[idx];
    // Zero-probability entries are dropped, except an explicit zero value:
    // that one stays as declared support.
    if (probs[idx] == 0.0 && values[idx] > 0.0) continue;
    dist.values_.push_back(values[idx]);
    dist.probs_.push_back(probs[idx]);
  }

  double sum = std::accumulate(dist.probs_.begin(), dist.probs_.end(), 0.0);
  if (!(sum > 1e-12)) {
    fail(ErrorCode::NonPositiveProbabilitySum, std::string(what) + ": probabilities sum to zero");
  }
  // Near-1 sums are kept verbatim so stored probabilities survive a
  // save/load round trip bit-exactly; true weight vectors are rescaled.
  bool rescale = std::abs(sum - 1.0) > 1e-9;
  double cum = 0.0;
  dist.cdf_.resize(dist.probs_.size());
  for (std::size_t i = 0; i < dist.probs_.size(); ++i) {
    if (rescale) dist.probs_[i] /= sum;
    cum += dist.probs_[i];
    dist.cdf_[i] = cum;
    dist.mean_ += dist.values_[i] * dist.probs_[i];
  }
  dist.cdf_.back() = 1.0;  // absorb rounding so every uniform draw lands
  return dist;
}

std::size_t DiscreteDistribution::sample_index(RandomSource& rng) const {
  double u = rng.uniform01();
  std::size_t n = cdf_.size();
  if (n <= 8) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (u < cdf_[i]) return i;
    }
    return n - 1;
  }
  return static_cast<std::size_t>(
      std::lower_bound(cdf_.begin(), cdf_.end() - 1, u, [](double c, double x) { return c <= x; }) -
      cdf_.begin());
}

ChannelModel ChannelModel::validated(std::vector<double> states, std::vector<double> probs) {
  ChannelModel model;
  model.dist_ = DiscreteDistribution::validated(std::move(states), std::move(probs), "channel");
  model.zero_offset_ = (!model.dist_.values().empty() && model.dist_.values().front() == 0.0) ? 1 : 0;
  return model;
}

ArrivalModel ArrivalModel::validated(std::vector<double> amounts, std::vector<double> probs) {
  ArrivalModel model;
  model.dist_ = DiscreteDistribution::validated(std::move(amounts), std::move(probs), "arrivals");
  return model;
}

PhaseSchedule::PhaseSchedule(std::vector<Phase> phases) : phases_(std::move(phases)) {
  if (phases_.empty()) fail(ErrorCode::SizeMismatch, "schedule needs at least one phase");
  starts_.resize(phases_.size());
  std::uint64_t at = 0;
  for (std::size_t i = 0; i < phases_.size(); ++i) {
    starts_[i] = at;
    bool last = (i + 1 == phases_.size());
    if (phases_[i].duration == Phase::kOpenEnded) {
      if (!last) {
        fail(ErrorCode::InvalidArgument, "only the final phase may be open-ended");
      }
      total_ = Phase::kOpenEnded;
      return;
    }
    if (phases_[i].duration == 0) fail(ErrorCode::InvalidArgument, "phase duration must be >= 1");
    at += phases_[i].duration;
  }
  total_ = at;
}

PhaseSchedule PhaseSchedule::single(ChannelModel channel, ArrivalModel arrivals) {
  Phase phase;
  phase.channel = std::move(channel);
  phase.arrivals = std::move(arrivals);
  return PhaseSchedule({std::move(phase)});
}

std::size_t PhaseSchedule::phase_index(std::uint64_t t) const {
  if (total_ != Phase::kOpenEnded && t >= total_) {
    fail(ErrorCode::SlotBeyondSchedule,
         "slot " + std::to_string(t) + " past scheduled horizon " + std::to_string(total_));
  }
  std::size_t i = phases_.size() - 1;
  while (i > 0 && t < starts_[i]) --i;
  return i;
}

}  // namespace dppsim
