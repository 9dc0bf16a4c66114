#include "mminduction/reward.hpp"

#include <map>

#include "mminduction/error.hpp"

namespace mmi::reward {

int task_reward(std::string_view raw_text, const ContextSpec& spec) {
    const auto parsed = trace::parse_trace(raw_text, spec.case_count);
    if (!parsed.ok()) return -1;
    const bool normalized = spec.comparator == Comparator::Normalized;
    const std::string answer = trace::extract_final_answer(*parsed.trace, normalized);
    const std::string gt = normalized ? trace::normalize_answer(spec.gt_answer)
                                      : std::string(spec.gt_answer);
    return answer == gt ? 1 : 0;
}

int helpful_reward(const trace::ReasoningTrace& t, const ContextSpec& spec) {
    for (int id : spec.noise_ids) {
        const auto& c = t.case_analyses[static_cast<std::size_t>(id - 1)];
        if (c.judgment != trace::Judgment::Unhelpful) return 0;
    }
    return 1;
}

double helpful_reward_mean(const trace::ReasoningTrace& t, const ContextSpec& spec) {
    if (spec.noise_ids.empty()) return 1.0;
    int flagged = 0;
    for (int id : spec.noise_ids)
        if (t.case_analyses[static_cast<std::size_t>(id - 1)].judgment == trace::Judgment::Unhelpful)
            ++flagged;
    return static_cast<double>(flagged) / static_cast<double>(spec.noise_ids.size());
}

int cite_reward(const trace::ReasoningTrace& t) {
    for (const auto& c : t.case_analyses)
        if (c.judgment == trace::Judgment::Helpful && !t.induction.cited_case_ids.contains(c.index))
            return 0;
    return 1;
}

double composite_reward(int r_task, int r_helpful, int r_cite, const RewardWeights& w) {
    return w.alpha * r_task + w.beta * r_helpful + w.gamma * r_cite;
}

RewardBreakdown score(std::string_view raw_text, const ContextSpec& spec,
                      const RewardWeights& weights) {
    RewardBreakdown out;
    const auto parsed = trace::parse_trace(raw_text, spec.case_count);
    if (!parsed.ok()) {
        out.r_task = -1;
    } else {
        out.r_task = task_reward(raw_text, spec);
        out.r_helpful = helpful_reward(*parsed.trace, spec);
        out.r_cite = cite_reward(*parsed.trace);
    }
    out.composite = composite_reward(out.r_task, out.r_helpful, out.r_cite, weights);
    return out;
}

double cohen_kappa(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size())
        throw Error("LengthMismatch", "label sequences differ in length");
    if (a.empty())
        throw Error("Empty", "label sequences are empty");
    const double n = static_cast<double>(a.size());

    double observed = 0;
    std::map<int, double> freq_a, freq_b;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) observed += 1;
        freq_a[a[i]] += 1;
        freq_b[b[i]] += 1;
    }
    const double p_o = observed / n;
    double p_e = 0;
    for (const auto& [label, count] : freq_a) {
        const auto it = freq_b.find(label);
        if (it != freq_b.end()) p_e += (count / n) * (it->second / n);
    }
    if (p_e >= 1.0) return 1.0; // both raters constant on the same label
    return (p_o - p_e) / (1.0 - p_e);
}

} // namespace mmi::reward
