#pragma once

#include <string>

#include "error.hpp"

namespace fusioncausal {

enum class Estimand { Ate, Ett };

inline const char* to_string(Estimand e) { return e == Estimand::Ate ? "ate" : "ett"; }

inline Estimand parse_estimand(const std::string& s) {
  if (s == "ate") return Estimand::Ate;
  if (s == "ett") return Estimand::Ett;
  fail(ErrorCode::InvalidConfig, "estimand must be 'ate' or 'ett', got '" + s + "'");
}

// Which homogeneity assumption closes the bespoke-instrument system.
enum class Homogeneity { Effect, Bias };

inline const char* to_string(Homogeneity h) { return h == Homogeneity::Effect ? "effect" : "bias"; }

inline Homogeneity parse_homogeneity(const std::string& s) {
  if (s == "effect") return Homogeneity::Effect;
  if (s == "bias") return Homogeneity::Bias;
  fail(ErrorCode::InvalidConfig, "homogeneity must be 'effect' or 'bias', got '" + s + "'");
}

enum class ProximalStrategy { S1, S2, S3, S4 };

inline const char* to_string(ProximalStrategy s) {
  switch (s) {
    case ProximalStrategy::S1: return "s1";
    case ProximalStrategy::S2: return "s2";
    case ProximalStrategy::S3: return "s3";
    case ProximalStrategy::S4: return "s4";
  }
  return "?";
}

}  // namespace fusioncausal
