#pragma once

// nlohmann::json bindings for the domain types. Kept out of core.hpp so that
// translation units which only need the types do not pay for json.hpp.

#include <json.hpp>

#include "wimpe/core.hpp"

namespace wimpe {

void to_json(nlohmann::json& j, const ScoringPoint& p);
void from_json(const nlohmann::json& j, ScoringPoint& p);

void to_json(nlohmann::json& j, const PointAssessment& a);
void from_json(const nlohmann::json& j, PointAssessment& a);

void to_json(nlohmann::json& j, const PenaltyAssessment& a);
void from_json(const nlohmann::json& j, PenaltyAssessment& a);

void to_json(nlohmann::json& j, const InstanceEvaluation& e);
void from_json(const nlohmann::json& j, InstanceEvaluation& e);

// Serializes with a fixed key order and no insignificant whitespace, so equal
// values always produce equal bytes.
std::string dump_canonical(const nlohmann::json& j);

}  // namespace wimpe
