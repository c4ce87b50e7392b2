#include "advbench/config_json.hpp"

#include <set>

#include "advbench/errors.hpp"

namespace advbench {

namespace {

using nlohmann::json;

/// Reads optional keys from a JSON object and rejects leftovers.
class Reader {
 public:
  Reader(const json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_null() && !j_.is_object()) throw ConfigError(context_ + ": params must be an object");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (j_.is_null() || !j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(context_ + ": bad value for '" + key + "': " + e.what());
    }
  }

  void loss(const char* key, LossKind& out) {
    std::string name = to_string(out);
    get(key, name);
    out = loss_kind_from_string(name);
  }

  void init(const char* key, InitKind& out) {
    std::string name = to_string(out);
    get(key, name);
    out = init_kind_from_string(name);
  }

  void schedule(const char* key, ScheduleKind& out) {
    std::string name = to_string(out);
    get(key, name);
    out = schedule_kind_from_string(name);
  }

  void policy(ReallocationPolicy& out) {
    std::string name = to_string(out);
    get("policy", name);
    out = reallocation_policy_from_string(name);
  }

  void init_spec(InitSpec& s) {
    init("init", s.kind);
    get("init_steps", s.steps);
    get("init_alpha_eps", s.alpha_eps);
    get("init_bias", s.bias);
  }

  void finish() const {
    if (j_.is_null()) return;
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(context_ + ": unknown parameter '" + k + "'");
    }
  }

 private:
  const json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

}  // namespace

AttackConfig attack_config_from_json(const std::string& pipeline, const nlohmann::json& params) {
  Reader r(params, pipeline);
  AttackConfig out;
  if (pipeline == "identity") {
    out = IdentityConfig{};
  } else if (pipeline == "pgd") {
    PgdConfig c;
    r.init_spec(c.init);
    r.loss("loss", c.loss);
    r.schedule("schedule", c.step.kind);
    r.get("eta_eps", c.step.scale);
    r.get("eta_min_ratio", c.step.min_ratio);
    r.get("stage_boundary", c.step.boundary);
    r.get("steps", c.steps);
    r.get("momentum", c.momentum);
    r.get("momentum_decay", c.momentum_decay);
    r.get("momentum_start", c.momentum_start);
    out = c;
  } else if (pipeline == "odi_pgd_sgdr") {
    GreenHandConfig c;
    r.get("restarts", c.restarts);
    r.get("min_iterations", c.min_iterations);
    r.get("max_iterations", c.max_iterations);
    r.init_spec(c.init);
    r.loss("loss", c.loss);
    r.get("eta_max_eps", c.eta_max_eps);
    r.get("eta_min_ratio", c.eta_min_ratio);
    r.get("filter_quantile", c.filter_quantile);
    r.policy(c.policy);
    out = c;
  } else if (pipeline == "lafeat_staged") {
    LafeatStagedConfig c;
    r.get("probe_iterations", c.probe_iterations);
    r.get("dlr_targets", c.dlr_targets);
    r.get("dlr_iterations", c.dlr_iterations);
    r.get("lafeat_targets", c.lafeat_targets);
    r.get("drop_threshold", c.drop_threshold);
    r.get("temperature", c.temperature);
    r.get("eta_eps", c.eta_eps);
    r.get("floor_fraction", c.floor_fraction);
    r.get("robust_rounds", c.robust_rounds);
    r.policy(c.policy);
    out = c;
  } else if (pipeline == "oia_pipeline") {
    OiaConfig c;
    r.get("outer_factor", c.outer_factor);
    r.get("outer_steps", c.outer_steps);
    r.get("outer_alpha_eps", c.outer_alpha_eps);
    r.loss("outer_loss", c.outer_loss);
    r.get("odi_steps", c.odi_steps);
    r.get("odi_alpha_eps", c.odi_alpha_eps);
    r.get("pgd_steps", c.pgd_steps);
    r.loss("loss", c.loss);
    r.get("eta_eps", c.eta_eps);
    r.get("eta_floor_ratio", c.eta_floor_ratio);
    r.get("max_restarts", c.max_restarts);
    r.policy(c.policy);
    out = c;
  } else if (pipeline == "rrt_mt_mim") {
    RrtMtMimConfig c;
    r.init("init", c.init);
    r.get("init_steps", c.init_steps);
    r.get("init_alpha_eps", c.init_alpha_eps);
    r.get("pgd_steps", c.pgd_steps);
    r.get("multi_target", c.multi_target);
    r.get("momentum", c.momentum);
    r.get("momentum_decay", c.momentum_decay);
    r.get("stage_boundary", c.stage_boundary);
    r.get("max_restarts", c.max_restarts);
    r.policy(c.policy);
    out = c;
  } else if (pipeline == "fr_pgd") {
    FrPgdConfig c;
    r.get("odi_steps", c.odi_steps);
    r.get("odi_alpha_eps", c.odi_alpha_eps);
    r.get("ascent_steps", c.ascent_steps);
    r.get("ascent_eta_eps", c.ascent_eta_eps);
    r.get("ratio_a", c.ratio_a);
    r.get("ratio_b", c.ratio_b);
    r.get("momentum_decay", c.momentum_decay);
    r.get("max_restarts", c.max_restarts);
    r.policy(c.policy);
    out = c;
  } else if (pipeline == "dh_attack") {
    DhConfig c;
    r.get("opening_iterations", c.opening_iterations);
    r.get("restart_iterations", c.restart_iterations);
    r.get("eta_start_eps", c.eta_start_eps);
    r.get("eta_floor_ratio", c.eta_floor_ratio);
    r.get("odi_steps", c.odi_steps);
    r.get("mt_steps", c.mt_steps);
    r.get("odi_alpha_eps", c.odi_alpha_eps);
    r.get("ema", c.ema);
    r.get("max_restarts", c.max_restarts);
    r.policy(c.policy);
    out = c;
  } else {
    throw ConfigError("unknown pipeline '" + pipeline + "'");
  }
  r.finish();
  return out;
}

namespace {

void put_init(json& j, const InitSpec& s) {
  j["init"] = to_string(s.kind);
  j["init_steps"] = s.steps;
  j["init_alpha_eps"] = s.alpha_eps;
  j["init_bias"] = s.bias;
}

struct ToJson {
  json operator()(const IdentityConfig&) const { return json::object(); }
  json operator()(const PgdConfig& c) const {
    json j;
    put_init(j, c.init);
    j["loss"] = to_string(c.loss);
    j["schedule"] = to_string(c.step.kind);
    j["eta_eps"] = c.step.scale;
    j["eta_min_ratio"] = c.step.min_ratio;
    j["stage_boundary"] = c.step.boundary;
    j["steps"] = c.steps;
    j["momentum"] = c.momentum;
    j["momentum_decay"] = c.momentum_decay;
    j["momentum_start"] = c.momentum_start;
    return j;
  }
  json operator()(const GreenHandConfig& c) const {
    json j;
    j["restarts"] = c.restarts;
    j["min_iterations"] = c.min_iterations;
    j["max_iterations"] = c.max_iterations;
    put_init(j, c.init);
    j["loss"] = to_string(c.loss);
    j["eta_max_eps"] = c.eta_max_eps;
    j["eta_min_ratio"] = c.eta_min_ratio;
    j["filter_quantile"] = c.filter_quantile;
    j["policy"] = to_string(c.policy);
    return j;
  }
  json operator()(const LafeatStagedConfig& c) const {
    json j;
    j["probe_iterations"] = c.probe_iterations;
    j["dlr_targets"] = c.dlr_targets;
    j["dlr_iterations"] = c.dlr_iterations;
    j["lafeat_targets"] = c.lafeat_targets;
    j["drop_threshold"] = c.drop_threshold;
    j["temperature"] = c.temperature;
    j["eta_eps"] = c.eta_eps;
    j["floor_fraction"] = c.floor_fraction;
    j["robust_rounds"] = c.robust_rounds;
    j["policy"] = to_string(c.policy);
    return j;
  }
  json operator()(const OiaConfig& c) const {
    json j;
    j["outer_factor"] = c.outer_factor;
    j["outer_steps"] = c.outer_steps;
    j["outer_alpha_eps"] = c.outer_alpha_eps;
    j["outer_loss"] = to_string(c.outer_loss);
    j["odi_steps"] = c.odi_steps;
    j["odi_alpha_eps"] = c.odi_alpha_eps;
    j["pgd_steps"] = c.pgd_steps;
    j["loss"] = to_string(c.loss);
    j["eta_eps"] = c.eta_eps;
    j["eta_floor_ratio"] = c.eta_floor_ratio;
    j["max_restarts"] = c.max_restarts;
    j["policy"] = to_string(c.policy);
    return j;
  }
  json operator()(const RrtMtMimConfig& c) const {
    json j;
    j["init"] = to_string(c.init);
    j["init_steps"] = c.init_steps;
    j["init_alpha_eps"] = c.init_alpha_eps;
    j["pgd_steps"] = c.pgd_steps;
    j["multi_target"] = c.multi_target;
    j["momentum"] = c.momentum;
    j["momentum_decay"] = c.momentum_decay;
    j["stage_boundary"] = c.stage_boundary;
    j["max_restarts"] = c.max_restarts;
    j["policy"] = to_string(c.policy);
    return j;
  }
  json operator()(const FrPgdConfig& c) const {
    json j;
    j["odi_steps"] = c.odi_steps;
    j["odi_alpha_eps"] = c.odi_alpha_eps;
    j["ascent_steps"] = c.ascent_steps;
    j["ascent_eta_eps"] = c.ascent_eta_eps;
    j["ratio_a"] = c.ratio_a;
    j["ratio_b"] = c.ratio_b;
    j["momentum_decay"] = c.momentum_decay;
    j["max_restarts"] = c.max_restarts;
    j["policy"] = to_string(c.policy);
    return j;
  }
  json operator()(const DhConfig& c) const {
    json j;
    j["opening_iterations"] = c.opening_iterations;
    j["restart_iterations"] = c.restart_iterations;
    j["eta_start_eps"] = c.eta_start_eps;
    j["eta_floor_ratio"] = c.eta_floor_ratio;
    j["odi_steps"] = c.odi_steps;
    j["mt_steps"] = c.mt_steps;
    j["odi_alpha_eps"] = c.odi_alpha_eps;
    j["ema"] = c.ema;
    j["max_restarts"] = c.max_restarts;
    j["policy"] = to_string(c.policy);
    return j;
  }
};

}  // namespace

nlohmann::json attack_config_to_json(const AttackConfig& cfg) { return std::visit(ToJson{}, cfg); }

}  // namespace advbench
