#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bsiv.hpp"
#include "nuisance.hpp"
#include "proximal.hpp"

namespace fusioncausal {

// Estimation settings gathered from a config file and command-line flags.
struct RunConfig {
  NuisanceConfig nuisance;
  ProximalConfig proximal;
  BsivConfig bsiv;
  CdfRule cdf_rule = CdfRule::Midpoint;
};

namespace detail {

inline void flatten(const nlohmann::json& j, const std::string& prefix, std::map<std::string, nlohmann::json>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else {
    out[prefix] = j;
  }
}

inline double as_number(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) fail(ErrorCode::InvalidConfig, "config key '" + key + "' must be a number");
  return v.get<double>();
}

inline int as_int(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer()) fail(ErrorCode::InvalidConfig, "config key '" + key + "' must be an integer");
  return v.get<int>();
}

inline std::string as_string(const nlohmann::json& v, const std::string& key) {
  if (!v.is_string()) fail(ErrorCode::InvalidConfig, "config key '" + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace detail

inline Family parse_family(const std::string& s) {
  if (s == "linear") return Family::Linear;
  if (s == "kernel") return Family::Kernel;
  fail(ErrorCode::InvalidConfig, "family must be 'linear' or 'kernel', got '" + s + "'");
}

inline CdfRule parse_cdf_rule(const std::string& s) {
  if (s == "midpoint") return CdfRule::Midpoint;
  if (s == "step") return CdfRule::Step;
  fail(ErrorCode::InvalidConfig, "cdf rule must be 'midpoint' or 'step', got '" + s + "'");
}

// Applies a JSON document; nested objects and dotted keys are equivalent.
inline void apply_config(RunConfig& rc, const nlohmann::json& doc) {
  std::map<std::string, nlohmann::json> kv;
  detail::flatten(doc, "", kv);
  for (const auto& [k, v] : kv) {
    using namespace detail;
    if (k == "nuisance.family") rc.nuisance.family = parse_family(as_string(v, k));
    else if (k == "nuisance.trim") rc.nuisance.trim = as_number(v, k);
    else if (k == "nuisance.crossfit_folds") rc.nuisance.crossfit_folds = as_int(v, k);
    else if (k == "nuisance.kernel.bandwidth") rc.nuisance.kernel_bandwidth = as_number(v, k);
    else if (k == "nuisance.kernel.landmarks") rc.nuisance.landmarks = as_int(v, k);
    else if (k == "nuisance.ridge.lambda") rc.nuisance.ridge_lambda = as_number(v, k);
    else if (k == "nuisance.max_levels") rc.nuisance.max_levels = as_int(v, k);
    else if (k == "nuisance.discrete_m") {
      if (!v.is_boolean()) fail(ErrorCode::InvalidConfig, "config key '" + k + "' must be a boolean");
      rc.nuisance.discrete_m = v.get<bool>();
    }
    else if (k == "nuisance.cdf_rule") rc.cdf_rule = parse_cdf_rule(as_string(v, k));
    else if (k == "proximal.lambda_h") rc.proximal.lambda_h = as_number(v, k);
    else if (k == "proximal.lambda_q") rc.proximal.lambda_q = as_number(v, k);
    else if (k == "proximal.lambda_f") rc.proximal.lambda_f = as_number(v, k);
    else if (k == "proximal.max_condition") rc.proximal.max_condition = as_number(v, k);
    else if (k == "proximal.kernel.bandwidth") rc.proximal.kernel_bandwidth = as_number(v, k);
    else if (k == "proximal.kernel.landmarks") rc.proximal.landmarks = as_int(v, k);
    else if (k == "bsiv.homogeneity") rc.bsiv.homogeneity = parse_homogeneity(as_string(v, k));
    else if (k == "bsiv.relevance_floor") rc.bsiv.relevance_floor = as_number(v, k);
    else if (k == "bsiv.weak_share") rc.bsiv.weak_share = as_number(v, k);
    else fail(ErrorCode::InvalidConfig, "unknown config key '" + k + "'");
  }
  if (!(rc.nuisance.trim >= 0 && rc.nuisance.trim < 0.5)) fail(ErrorCode::InvalidConfig, "nuisance.trim must lie in [0, 0.5)");
  if (rc.nuisance.crossfit_folds == 1) fail(ErrorCode::InvalidConfig, "nuisance.crossfit_folds must be 0 or at least 2");
}

inline nlohmann::json parse_config_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::InvalidConfig, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig rc;
  apply_config(rc, parse_config_text(ss.str()));
  return rc;
}

}  // namespace fusioncausal
