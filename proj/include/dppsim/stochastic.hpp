#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "dppsim/random.hpp"

namespace dppsim {

// Shared backbone for the two discrete i.i.d. models below: sorted support,
// probabilities renormalized to sum 1, cumulative table for inverse sampling.
class DiscreteDistribution {
 public:
  DiscreteDistribution() = default;
  // Validates and normalizes: sorts by value, rejects negatives/duplicates,
  // drops zero-probability entries except a zero value (kept as explicit
  // support), renormalizes probabilities by their sum.
  static DiscreteDistribution validated(std::vector<double> values, std::vector<double> probs,
                                        const char* what);

  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& probs() const { return probs_; }
  std::size_t size() const { return values_.size(); }
  double mean() const { return mean_; }
  double max_value() const { return values_.empty() ? 0.0 : values_.back(); }

  std::size_t sample_index(RandomSource& rng) const;
  double sample(RandomSource& rng) const { return values_[sample_index(rng)]; }

 private:
  std::vector<double> values_;
  std::vector<double> probs_;
  std::vector<double> cdf_;
  double mean_ = 0.0;
};

// Channel state distribution: rates omega_0 < omega_1 < ... < omega_M, i.i.d.
// across slots. A zero rate need not be listed; if absent its probability is 0.
// All listed positive rates carry positive probability after validation.
class ChannelModel {
 public:
  static ChannelModel validated(std::vector<double> states, std::vector<double> probs);

  const std::vector<double>& states() const { return dist_.values(); }
  const std::vector<double>& probs() const { return dist_.probs(); }

  // Number of positive-rate states.
  int num_positive() const { return static_cast<int>(dist_.size()) - zero_offset_; }
  // k in 1..num_positive(), ascending rate.
  double omega(int k) const { return dist_.values()[zero_offset_ + k - 1]; }
  double prob(int k) const { return dist_.probs()[zero_offset_ + k - 1]; }
  double prob_zero() const { return zero_offset_ ? dist_.probs()[0] : 0.0; }
  double omega_max() const { return dist_.max_value(); }
  double mean_rate() const { return dist_.mean(); }

  std::size_t sample_index(RandomSource& rng) const { return dist_.sample_index(rng); }
  double state_at(std::size_t index) const { return dist_.values()[index]; }
  double sample(RandomSource& rng) const { return dist_.sample(rng); }

 private:
  DiscreteDistribution dist_;
  int zero_offset_ = 0;  // 1 if a zero-rate state is listed explicitly
};

// Arrival distribution: nonnegative workload per slot, finite support, i.i.d.
class ArrivalModel {
 public:
  static ArrivalModel validated(std::vector<double> amounts, std::vector<double> probs);

  const std::vector<double>& amounts() const { return dist_.values(); }
  const std::vector<double>& probs() const { return dist_.probs(); }
  double mean_rate() const { return dist_.mean(); }  // lambda
  double max_amount() const { return dist_.max_value(); }
  double sample(RandomSource& rng) const { return dist_.sample(rng); }

 private:
  DiscreteDistribution dist_;
};

// Piecewise-stationary environment: a sequence of (duration, channel, arrivals)
// phases. The final phase may be open-ended.
struct Phase {
  static constexpr std::uint64_t kOpenEnded = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t duration = kOpenEnded;  // slots; kOpenEnded only on the last phase
  ChannelModel channel;
  ArrivalModel arrivals;
};

class PhaseSchedule {
 public:
  explicit PhaseSchedule(std::vector<Phase> phases);
  static PhaseSchedule single(ChannelModel channel, ArrivalModel arrivals);

  const std::vector<Phase>& phases() const { return phases_; }
  // Phase active at slot t; throws SlotBeyondSchedule past a finite schedule.
  const Phase& active_phase(std::uint64_t t) const { return phases_[phase_index(t)]; }
  std::size_t phase_index(std::uint64_t t) const;
  // First slot of phase i.
  std::uint64_t phase_start(std::size_t i) const { return starts_[i]; }
  // Total scheduled slots; kOpenEnded if the schedule never ends.
  std::uint64_t total_slots() const { return total_; }

 private:
  std::vector<Phase> phases_;
  std::vector<std::uint64_t> starts_;
  std::uint64_t total_ = Phase::kOpenEnded;
};

}  // namespace dppsim
