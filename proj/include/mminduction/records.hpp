#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "mminduction/attention.hpp"
#include "mminduction/dapo.hpp"
#include "mminduction/retrieval.hpp"
#include "mminduction/reward.hpp"
#include "mminduction/token_pruning.hpp"
#include "mminduction/trace.hpp"

// Structured-text (JSON) record formats shared by the CLI and the golden
// files. Field names mirror the owning types exactly.
namespace mmi::records {

nlohmann::json to_json(const pruning::RetentionPlan& plan, const pruning::DiversityReport& report);

nlohmann::json to_json(const trace::ReasoningTrace& t);
trace::ReasoningTrace trace_from_json(const nlohmann::json& j);

nlohmann::json to_json(const reward::RewardBreakdown& b);

nlohmann::json to_json(const retrieval::ContextAssembly& assembly);

reward::ContextSpec context_spec_from_json(const nlohmann::json& j);

attention::ImageSpanMap spans_from_json(const nlohmann::json& j);

nlohmann::json to_json(const dapo::RolloutGroup& group);
dapo::RolloutGroup rollout_group_from_json(const nlohmann::json& j);

// Run configuration: reward weights, DAPO and pruning parameters, seed.
// Unknown keys are rejected; absent keys take the defaults.
struct RunConfig {
    reward::RewardWeights weights;
    dapo::DapoConfig dapo;
    pruning::PruneConfig prune;
    std::uint64_t seed = 0;
};

RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

} // namespace mmi::records
