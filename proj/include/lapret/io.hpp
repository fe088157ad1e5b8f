#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "lapret/estimator.hpp"
#include "lapret/matching.hpp"
#include "lapret/simulation.hpp"
#include "lapret/study.hpp"

namespace lapret {

inline constexpr std::string_view kToolVersion = "lapret 0.1.0";

using Json = nlohmann::ordered_json;

std::string_view to_string(Aggregation a);
std::string_view to_string(UndetectedPolicy p);
std::string_view to_string(Transform t);
Aggregation parse_aggregation(std::string_view s);
UndetectedPolicy parse_undetected(std::string_view s);
Transform parse_transform(std::string_view s);

Json to_json(const PairLapret& p);
Json to_json(const PilotResult& r);
Json to_json(const EffectEstimate& e);
Json to_json(const StudyResult& r);
Json to_json(const HeuristicRanges& h);
Json to_json(const MatchSet& m);
Json to_json(const StudyConfig& c);
Json to_json(const StudyPlan& p);

PairLapret pair_lapret_from_json(const Json& j);
PilotResult pilot_result_from_json(const Json& j);
EffectEstimate effect_from_json(const Json& j);
StudyResult study_result_from_json(const Json& j);
HeuristicRanges heuristic_ranges_from_json(const Json& j);
MatchSet match_set_from_json(const Json& j);
StudyConfig study_config_from_json(const Json& j);
StudyPlan study_plan_from_json(const Json& j);

void write_sweep_csv(std::ostream& out, const sim::SweepResult& result);
void write_effects_csv(std::ostream& out, std::span<const EffectEstimate> effects);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Digest of a sorted id set, one id per line.
std::string unit_set_digest(const std::set<UnitId>& ids);

struct RunManifest {
  std::string subcommand;
  Json parameters = Json::object();
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_digests;
  std::string tool_version{kToolVersion};
  std::string timestamp;

  Json to_json() const;
};

/// Writes `contents` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

std::string utc_timestamp();

}  // namespace lapret
