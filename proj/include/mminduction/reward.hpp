#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mminduction/trace.hpp"

namespace mmi::reward {

enum class Comparator { Exact, Normalized };

struct ContextSpec {
    int case_count = 0;
    std::set<int> noise_ids; // subset of {1..case_count}
    std::string gt_answer;
    Comparator comparator = Comparator::Exact;
};

struct RewardWeights {
    double alpha = 1.0;
    double beta = 0.25;
    double gamma = 0.25;
};

struct RewardBreakdown {
    int r_task = 0;     // {-1, 0, 1}
    int r_helpful = 0;  // {0, 1}
    int r_cite = 0;     // {0, 1}
    double composite = 0.0;
};

// -1 on wrong format (parse failure or case-count mismatch), 1 on a correct
// final answer under the comparator, 0 otherwise.
int task_reward(std::string_view raw_text, const ContextSpec& spec);

// Strict reading: 1 iff every injected noise case is judged unhelpful
// (vacuously 1 when there is no noise).
int helpful_reward(const trace::ReasoningTrace& t, const ContextSpec& spec);

// Ablation variant: fraction of noise cases judged unhelpful (1.0 when none).
double helpful_reward_mean(const trace::ReasoningTrace& t, const ContextSpec& spec);

// 1 iff every case judged helpful is cited in the induction.
int cite_reward(const trace::ReasoningTrace& t);

double composite_reward(int r_task, int r_helpful, int r_cite, const RewardWeights& weights);

// Full breakdown for one generation. On format failure the helpful/cite
// components are 0 (there is no trace to inspect).
RewardBreakdown score(std::string_view raw_text, const ContextSpec& spec,
                      const RewardWeights& weights = {});

// Cohen's kappa over two equal-length label sequences.
double cohen_kappa(const std::vector<int>& labels_a, const std::vector<int>& labels_b);

} // namespace mmi::reward
