#include "dppsim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dppsim/error.hpp"

namespace dppsim {

namespace {

using Json = nlohmann::ordered_json;

void check_keys(const Json& obj, std::initializer_list<const char*> allowed, const char* where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      fail(ErrorCode::ParseError, "unknown key \"" + it.key() + "\" in " + where);
    }
  }
}

const Json& require(const Json& obj, const char* key, const char* where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    fail(ErrorCode::ParseError, std::string("missing key \"") + key + "\" in " + where);
  }
  return *it;
}

double as_number(const Json& value, const char* where) {
  if (!value.is_number()) fail(ErrorCode::ParseError, std::string(where) + " must be a number");
  return value.get<double>();
}

std::uint64_t as_count(const Json& value, const char* where) {
  if (!value.is_number_unsigned() &&
      !(value.is_number_integer() && value.get<std::int64_t>() >= 0)) {
    fail(ErrorCode::ParseError, std::string(where) + " must be a nonnegative integer");
  }
  return value.get<std::uint64_t>();
}

std::vector<double> as_number_array(const Json& value, const char* where) {
  if (!value.is_array()) fail(ErrorCode::ParseError, std::string(where) + " must be an array");
  std::vector<double> out;
  out.reserve(value.size());
  for (const Json& item : value) out.push_back(as_number(item, where));
  return out;
}

// Values plus probabilities, with a strict normalization gate: badly scaled
// weights in a file are treated as typos, not renormalized silently.
std::pair<std::vector<double>, std::vector<double>> parse_dist(const Json& obj,
                                                               const char* value_key,
                                                               const char* where) {
  if (!obj.is_object()) fail(ErrorCode::ParseError, std::string(where) + " must be an object");
  check_keys(obj, {value_key, "probs"}, where);
  std::vector<double> values = as_number_array(require(obj, value_key, where), where);
  std::vector<double> probs = as_number_array(require(obj, "probs", where), where);
  if (values.size() != probs.size()) {
    fail(ErrorCode::ParseError, std::string(where) + " values and probs differ in length");
  }
  double sum = 0.0;
  for (double p : probs) sum += p;
  if (std::abs(sum - 1.0) > 1e-9) {
    fail(ErrorCode::ParseError,
         std::string(where) + " probabilities sum to " + std::to_string(sum) + ", not 1");
  }
  return {std::move(values), std::move(probs)};
}

Phase parse_phase(const Json& obj, bool is_last) {
  if (!obj.is_object()) fail(ErrorCode::ParseError, "phase must be an object");
  check_keys(obj, {"duration", "channel", "arrivals"}, "phase");
  std::uint64_t duration = Phase::kOpenEnded;
  auto it = obj.find("duration");
  if (it != obj.end() && !it->is_null()) {
    duration = as_count(*it, "phase duration");
    if (duration == 0) fail(ErrorCode::ParseError, "phase duration must be >= 1");
  }
  if (duration == Phase::kOpenEnded && !is_last) {
    fail(ErrorCode::ParseError, "only the last phase may omit its duration");
  }
  auto [states, sprobs] = parse_dist(require(obj, "channel", "phase"), "states", "channel");
  auto [amounts, aprobs] = parse_dist(require(obj, "arrivals", "phase"), "amounts", "arrivals");
  return Phase{duration, ChannelModel::validated(std::move(states), std::move(sprobs)),
               ArrivalModel::validated(std::move(amounts), std::move(aprobs))};
}

const char* kind_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Dpp: return "dpp";
    case PolicyKind::DppPlace: return "dpp-place";
    case PolicyKind::OmegaOnly: return "omega-only";
  }
  return "dpp";
}

}  // namespace

PhaseSchedule Scenario::schedule() const { return PhaseSchedule(phases); }

PolicySpec Scenario::policy() const {
  if (phases.empty()) fail(ErrorCode::InvalidArgument, "scenario has no phases");
  const ChannelModel& channel = phases.front().channel;
  switch (policy_kind) {
    case PolicyKind::Dpp:
      return DppConfig::plain(v);
    case PolicyKind::DppPlace:
      return DppConfig::with_place_holder(v, channel.omega_max());
    case PolicyKind::OmegaOnly:
      if (transmit_probs.has_value()) return OmegaOnlyPolicy(channel, *transmit_probs);
      if (target_mu.has_value()) {
        return OmegaOnlyPolicy::design(RatePowerCurve::build(channel), *target_mu);
      }
      fail(ErrorCode::InvalidArgument, "omega-only policy needs target_mu or transmit_probs");
  }
  fail(ErrorCode::InvalidArgument, "unhandled policy kind");
}

double Scenario::lambda() const {
  if (phases.empty()) fail(ErrorCode::InvalidArgument, "scenario has no phases");
  return phases.front().arrivals.mean_rate();
}

Scenario Scenario::from_json(const std::string& text) {
  Json root = Json::parse(text, nullptr, false);
  if (root.is_discarded()) fail(ErrorCode::ParseError, "malformed JSON");
  if (!root.is_object()) fail(ErrorCode::ParseError, "top level must be an object");
  check_keys(root,
             {"name", "phases", "policy", "horizon", "runs", "seed", "discipline", "trim", "q0",
              "v_sweep", "delta_sweep"},
             "scenario");

  Scenario sc;
  const Json& name_node = require(root, "name", "scenario");
  if (!name_node.is_string()) fail(ErrorCode::ParseError, "name must be a string");
  sc.name = name_node.get<std::string>();

  const Json& phases = require(root, "phases", "scenario");
  if (!phases.is_array() || phases.empty()) {
    fail(ErrorCode::ParseError, "phases must be a nonempty array");
  }
  for (std::size_t i = 0; i < phases.size(); ++i) {
    sc.phases.push_back(parse_phase(phases[i], i + 1 == phases.size()));
  }

  const Json& policy = require(root, "policy", "scenario");
  if (!policy.is_object()) fail(ErrorCode::ParseError, "policy must be an object");
  const Json& kind_node = require(policy, "kind", "policy");
  if (!kind_node.is_string()) fail(ErrorCode::ParseError, "policy kind must be a string");
  std::string kind = kind_node.get<std::string>();
  if (kind == "dpp" || kind == "dpp-place") {
    check_keys(policy, {"kind", "v"}, "policy");
    sc.policy_kind = kind == "dpp" ? PolicyKind::Dpp : PolicyKind::DppPlace;
    sc.v = as_number(require(policy, "v", "policy"), "policy v");
    if (sc.v < 0.0) fail(ErrorCode::ParseError, "policy v must be nonnegative");
  } else if (kind == "omega-only") {
    check_keys(policy, {"kind", "target_mu", "transmit_probs"}, "policy");
    sc.policy_kind = PolicyKind::OmegaOnly;
    if (policy.contains("target_mu")) {
      sc.target_mu = as_number(policy["target_mu"], "policy target_mu");
    }
    if (policy.contains("transmit_probs")) {
      sc.transmit_probs = as_number_array(policy["transmit_probs"], "policy transmit_probs");
    }
    if (sc.target_mu.has_value() == sc.transmit_probs.has_value()) {
      fail(ErrorCode::ParseError, "omega-only policy needs exactly one of target_mu or transmit_probs");
    }
  } else {
    fail(ErrorCode::ParseError, "unknown policy kind \"" + kind + "\"");
  }

  if (root.contains("horizon")) sc.horizon = as_count(root["horizon"], "horizon");
  if (root.contains("runs")) {
    sc.runs = as_count(root["runs"], "runs");
    if (sc.runs == 0) fail(ErrorCode::ParseError, "runs must be >= 1");
  }
  if (root.contains("seed")) sc.seed = as_count(root["seed"], "seed");
  if (root.contains("discipline")) {
    std::string d = root["discipline"].is_string() ? root["discipline"].get<std::string>() : "";
    if (d == "fifo") {
      sc.discipline = Discipline::Fifo;
    } else if (d == "lifo") {
      sc.discipline = Discipline::Lifo;
    } else {
      fail(ErrorCode::ParseError, "discipline must be \"fifo\" or \"lifo\"");
    }
  }
  if (root.contains("trim")) {
    sc.trim = as_number(root["trim"], "trim");
    if (!(sc.trim > 0.0 && sc.trim <= 1.0)) {
      fail(ErrorCode::ParseError, "trim must lie in (0, 1]");
    }
  }
  if (root.contains("q0")) {
    sc.q0 = as_number(root["q0"], "q0");
    if (sc.q0 < 0.0) fail(ErrorCode::ParseError, "q0 must be nonnegative");
  }
  if (root.contains("v_sweep")) sc.v_sweep = as_number_array(root["v_sweep"], "v_sweep");
  if (root.contains("delta_sweep")) {
    sc.delta_sweep = as_number_array(root["delta_sweep"], "delta_sweep");
  }
  return sc;
}

std::string Scenario::to_json() const {
  Json root;
  root["name"] = name;
  Json phase_list = Json::array();
  for (const Phase& phase : phases) {
    Json p;
    if (phase.duration == Phase::kOpenEnded) {
      p["duration"] = nullptr;
    } else {
      p["duration"] = phase.duration;
    }
    p["channel"] = {{"states", phase.channel.states()}, {"probs", phase.channel.probs()}};
    p["arrivals"] = {{"amounts", phase.arrivals.amounts()}, {"probs", phase.arrivals.probs()}};
    phase_list.push_back(std::move(p));
  }
  root["phases"] = std::move(phase_list);
  Json policy;
  policy["kind"] = kind_name(policy_kind);
  if (policy_kind != PolicyKind::OmegaOnly) {
    policy["v"] = v;
  } else {
    if (target_mu.has_value()) policy["target_mu"] = *target_mu;
    if (transmit_probs.has_value()) policy["transmit_probs"] = *transmit_probs;
  }
  root["policy"] = std::move(policy);
  root["horizon"] = horizon;
  root["runs"] = runs;
  root["seed"] = seed;
  root["discipline"] = discipline == Discipline::Fifo ? "fifo" : "lifo";
  root["trim"] = trim;
  root["q0"] = q0;
  if (!v_sweep.empty()) root["v_sweep"] = v_sweep;
  if (!delta_sweep.empty()) root["delta_sweep"] = delta_sweep;
  return root.dump(2) + "\n";
}

Scenario Scenario::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

void Scenario::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::ParseError, "cannot write " + path);
  out << to_json();
  if (!out.good()) fail(ErrorCode::ParseError, "write failed for " + path);
}

}  // namespace dppsim
