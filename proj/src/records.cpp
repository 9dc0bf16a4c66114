#include "mminduction/records.hpp"

#include <fstream>
#include <set>

#include "mminduction/error.hpp"

namespace mmi::records {

using nlohmann::json;

json to_json(const pruning::RetentionPlan& plan, const pruning::DiversityReport& report) {
    return json{{"selected", plan.selected},
                {"quotas", plan.quotas},
                {"weights", report.weights}};
}

json to_json(const trace::ReasoningTrace& t) {
    json cases = json::array();
    for (const auto& c : t.case_analyses)
        cases.push_back({{"index", c.index},
                         {"elements", c.elements},
                         {"solution_logic", c.solution_logic},
                         {"comparison", c.comparison},
                         {"judgment", c.judgment == trace::Judgment::Helpful ? "Helpful" : "Unhelpful"}});
    return json{
        {"target_analysis",
         {{"core_task", t.target_analysis.core_task},
          {"key_visuals", t.target_analysis.key_visuals},
          {"required_logic", t.target_analysis.required_logic}}},
        {"case_analyses", cases},
        {"induction",
         {{"cited_case_ids", t.induction.cited_case_ids},
          {"extracted_rule", t.induction.extracted_rule}}},
        {"answer",
         {{"application", t.answer.application},
          {"final_result", t.answer.final_result}}}};
}

trace::ReasoningTrace trace_from_json(const json& j) {
    trace::ReasoningTrace t;
    const auto& ta = j.at("target_analysis");
    t.target_analysis = {ta.at("core_task").get<std::string>(),
                         ta.at("key_visuals").get<std::string>(),
                         ta.at("required_logic").get<std::string>()};
    for (const auto& c : j.at("case_analyses")) {
        const std::string verdict = c.at("judgment").get<std::string>();
        if (verdict != "Helpful" && verdict != "Unhelpful")
            throw Error("InvalidJudgment", "judgment must be Helpful or Unhelpful");
        t.case_analyses.push_back({c.at("index").get<int>(),
                                   c.at("elements").get<std::string>(),
                                   c.at("solution_logic").get<std::string>(),
                                   c.at("comparison").get<std::string>(),
                                   verdict == "Helpful" ? trace::Judgment::Helpful
                                                        : trace::Judgment::Unhelpful});
    }
    const auto& ind = j.at("induction");
    t.induction.cited_case_ids = ind.at("cited_case_ids").get<std::set<int>>();
    t.induction.extracted_rule = ind.at("extracted_rule").get<std::string>();
    const auto& ans = j.at("answer");
    t.answer = {ans.at("application").get<std::string>(),
                ans.at("final_result").get<std::string>()};
    return t;
}

json to_json(const reward::RewardBreakdown& b) {
    return json{{"r_task", b.r_task},
                {"r_helpful", b.r_helpful},
                {"r_cite", b.r_cite},
                {"composite", b.composite}};
}

json to_json(const retrieval::ContextAssembly& assembly) {
    json slots = json::array();
    for (const auto& s : assembly.slots)
        slots.push_back({{"case_id", s.case_id}, {"is_noise", s.is_noise}});
    return json{{"slots", slots}, {"shot_count", assembly.shot_count}};
}

reward::ContextSpec context_spec_from_json(const json& j) {
    reward::ContextSpec spec;
    spec.case_count = j.at("case_count").get<int>();
    if (j.contains("noise_ids")) spec.noise_ids = j["noise_ids"].get<std::set<int>>();
    spec.gt_answer = j.at("gt_answer").get<std::string>();
    const std::string cmp = j.value("comparator", "exact");
    if (cmp == "exact") {
        spec.comparator = reward::Comparator::Exact;
    } else if (cmp == "normalized") {
        spec.comparator = reward::Comparator::Normalized;
    } else {
        throw Error("BadConfig", "unknown comparator " + cmp);
    }
    for (int id : spec.noise_ids)
        if (id < 1 || id > spec.case_count)
            throw Error("BadConfig", "noise id " + std::to_string(id) + " out of range");
    return spec;
}

attention::ImageSpanMap spans_from_json(const json& j) {
    attention::ImageSpanMap map;
    for (const auto& s : j) {
        attention::ImageSpan span;
        span.image_id = s.at("image_id").get<std::string>();
        span.start = s.at("start").get<std::size_t>();
        span.end = s.at("end").get<std::size_t>();
        span.rows = s.at("rows").get<std::size_t>();
        span.cols = s.at("cols").get<std::size_t>();
        if (span.end < span.start || span.end - span.start != span.rows * span.cols)
            throw Error("SpanLengthMismatch", "span " + span.image_id +
                        " length does not equal rows*cols");
        if (!map.spans.empty() && span.start < map.spans.back().end)
            throw Error("SpanOutOfRange", "spans overlap or are unsorted at " + span.image_id);
        map.spans.push_back(std::move(span));
    }
    return map;
}

json to_json(const dapo::RolloutGroup& group) {
    json sequences = json::array();
    for (const auto& s : group.sequences)
        sequences.push_back({{"logp_new", s.logp_new},
                             {"logp_old", s.logp_old},
                             {"logp_ref", s.logp_ref},
                             {"kl_new_ref", s.kl_new_ref},
                             {"reward", s.reward},
                             {"overlong", s.overlong}});
    return json{{"sequences", sequences}};
}

dapo::RolloutGroup rollout_group_from_json(const json& j) {
    dapo::RolloutGroup group;
    for (const auto& s : j.at("sequences")) {
        dapo::RolloutSequence seq;
        seq.logp_new = s.at("logp_new").get<std::vector<double>>();
        seq.logp_old = s.at("logp_old").get<std::vector<double>>();
        seq.logp_ref = s.at("logp_ref").get<std::vector<double>>();
        if (s.contains("kl_new_ref")) seq.kl_new_ref = s["kl_new_ref"].get<std::vector<double>>();
        seq.reward = s.at("reward").get<double>();
        seq.overlong = s.value("overlong", false);
        group.sequences.push_back(std::move(seq));
    }
    return group;
}

RunConfig run_config_from_json(const json& j) {
    static const std::set<std::string> known = {
        "alpha", "beta", "gamma",
        "eps_low", "eps_high", "kl_coef", "max_completion_length", "std_floor",
        "regions", "budget", "tau", "partition_mode", "similarity_mode",
        "seed"};
    for (const auto& [key, value] : j.items())
        if (!known.contains(key))
            throw Error("BadConfig", "unknown config key: " + key);

    RunConfig cfg;
    cfg.weights.alpha = j.value("alpha", cfg.weights.alpha);
    cfg.weights.beta = j.value("beta", cfg.weights.beta);
    cfg.weights.gamma = j.value("gamma", cfg.weights.gamma);
    cfg.dapo.eps_low = j.value("eps_low", cfg.dapo.eps_low);
    cfg.dapo.eps_high = j.value("eps_high", cfg.dapo.eps_high);
    cfg.dapo.kl_coef = j.value("kl_coef", cfg.dapo.kl_coef);
    cfg.dapo.max_completion_length = j.value("max_completion_length", cfg.dapo.max_completion_length);
    cfg.dapo.std_floor = j.value("std_floor", cfg.dapo.std_floor);
    cfg.prune.regions = j.value("regions", cfg.prune.regions);
    cfg.prune.budget = j.value("budget", cfg.prune.budget);
    cfg.prune.tau = j.value("tau", cfg.prune.tau);
    if (j.contains("partition_mode")) {
        const std::string mode = j["partition_mode"].get<std::string>();
        if (mode == "grid") cfg.prune.partition_mode = pruning::PartitionMode::Grid;
        else if (mode == "linear") cfg.prune.partition_mode = pruning::PartitionMode::Linear;
        else throw Error("BadConfig", "unknown partition_mode " + mode);
    }
    if (j.contains("similarity_mode")) {
        const std::string mode = j["similarity_mode"].get<std::string>();
        if (mode == "dot") cfg.prune.similarity_mode = pruning::SimilarityMode::Dot;
        else if (mode == "cosine") cfg.prune.similarity_mode = pruning::SimilarityMode::Cosine;
        else throw Error("BadConfig", "unknown similarity_mode " + mode);
    }
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("BadConfig", path + ": " + e.what());
    }
    return run_config_from_json(j);
}

} // namespace mmi::records
