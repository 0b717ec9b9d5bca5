#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "zccloud/availability.hpp"
#include "zccloud/market_data.hpp"
#include "zccloud/scenarios.hpp"
#include "zccloud/simulator.hpp"
#include "zccloud/stranded_power.hpp"
#include "zccloud/tco.hpp"
#include "zccloud/workload.hpp"

namespace zcc {

using Json = nlohmann::ordered_json;

// Readers are strict: unknown keys and wrongly typed values raise
// ConfigError. Missing keys keep the defaults of the target type.

Json to_json(const CostParams& p);
// Accepts an optional "profile" key; only "mira-baseline" is built in.
CostParams cost_params_from_json(const Json& j);

Json to_json(const TcoReport& r);
Json to_json(const SimResult& r);
Json to_json(const SpReport& r, bool include_intervals = false);
Json to_json(const StorageBridge& b);
Json to_json(const GenerationPoint& g);

Json to_json(const AvailabilitySchedule& s);
AvailabilitySchedule schedule_from_json(const Json& j);

Json to_json(const SynthMarketConfig& c);
SynthMarketConfig synth_market_from_json(const Json& j);

Json to_json(const SynthWorkloadConfig& c);
SynthWorkloadConfig synth_workload_from_json(const Json& j);

Json to_json(const StudySpace& s);
// An empty document is an error; "{}" is the default space.
StudySpace study_space_from_json(const Json& j);

// Parse errors and empty files become ValidationErrors naming the path.
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace zcc
