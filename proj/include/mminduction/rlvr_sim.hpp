#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "mminduction/dapo.hpp"
#include "mminduction/reward.hpp"
#include "mminduction/rng.hpp"
#include "mminduction/trace.hpp"

namespace mmi::sim {

// Synthetic ICL task: a shot-structured context with the noise-count rule
// (1-shot: 0, 3-shot: 1, 5-shot: 2; 2/4-shot carry 1) and a ground-truth
// answer drawn from a fixed alphabet.
struct ToyTask {
    int case_count = 3;
    std::set<int> noise_ids;
    std::vector<std::string> answer_alphabet;
    int gt_index = 0;
    std::uint64_t seed = 0;
};

// Factorized categorical policy over the template's decision slots: one
// helpful/unhelpful judgment and one cite/skip bit per case, plus the final
// answer choice. Probabilities are softmax of the logits.
struct ToyPolicy {
    std::vector<std::array<double, 2>> judgment_logits; // [case][0=unhelpful, 1=helpful]
    std::vector<std::array<double, 2>> citation_logits; // [case][0=skip, 1=cite]
    std::vector<double> answer_logits;

    static ToyPolicy zeros(int case_count, std::size_t alphabet_size);
    std::vector<double> flatten() const;
    static ToyPolicy unflatten(const std::vector<double>& params, int case_count,
                               std::size_t alphabet_size);
};

struct Rollout {
    std::vector<int> judgments; // 1 = helpful
    std::vector<int> citations; // 1 = cited
    int answer_index = 0;
    std::vector<double> logp; // per decision, under the sampling policy
    trace::ReasoningTrace trace;
    std::string text; // rendered template
};

// One template-valid rollout; decision order is judgments 1..n, citations
// 1..n, answer. Deterministic given the rng state.
Rollout sample_rollout(const ToyPolicy& policy, const ToyTask& task, Rng& rng);

// Log-probabilities of a rollout's decisions under an arbitrary policy of
// the same shape.
std::vector<double> decision_logps(const ToyPolicy& policy, const Rollout& rollout);

// Exact categorical KL(policy || ref) at each decision slot, in rollout
// decision order.
std::vector<double> decision_kls(const ToyPolicy& policy, const ToyPolicy& ref);

// DAPO objective of Eq.-style clipped surrogate over a sampled group, with
// log-probs recomputed under `policy`. Rewards are fixed (they come from the
// sampled texts, not from theta).
double evaluate_objective(const ToyPolicy& policy, const ToyPolicy& ref,
                          const std::vector<Rollout>& rollouts,
                          const std::vector<double>& rewards,
                          const dapo::DapoConfig& config);

// Analytic gradient of evaluate_objective with respect to the flattened
// policy parameters.
std::vector<double> analytic_gradient(const ToyPolicy& policy, const ToyPolicy& ref,
                                      const std::vector<Rollout>& rollouts,
                                      const std::vector<double>& rewards,
                                      const dapo::DapoConfig& config);

struct TrainRecord {
    int iter = 0;
    double mean_r_task = 0;
    double mean_r_helpful = 0;
    double mean_r_cite = 0;
    double mean_composite = 0;
    int groups_rejected = 0;
    int groups_filtered = 0;
};

struct TrainLog {
    std::vector<TrainRecord> records;
    std::string to_csv() const; // header: iter,r_task,r_helpful,r_cite,composite,rejected,filtered
};

// Task family with randomized noise placement and a fixed ground-truth
// answer, so the answer head has a learnable target.
struct TaskSampler {
    int shots = 3;
    std::vector<std::string> alphabet = {"A", "B", "C", "D"};
    int gt_index = 0;

    ToyTask sample(Rng& rng) const;
};

struct TrainConfig {
    dapo::DapoConfig dapo;
    reward::RewardWeights weights;
    std::size_t group_size = 8;
    int iterations = 500;
    // Toy-scale step size: the objective's token-mean weighting (1/sum of
    // decision counts) makes raw gradients small, so the default is sized for
    // the 500-iteration demo run to converge while staying well under a
    // second of wall time.
    double learning_rate = 0.25;
    std::uint64_t seed = 42;
    // Fraction of rollouts artificially flagged overlong, to exercise the
    // filter path (toy traces never actually exceed the length limit).
    double overlong_fraction = 0.05;
    int max_retries = 4;
};

// Single-threaded, seed-deterministic training loop: sample a group, filter
// and gate it, score with the rule-based rewards, ascend the DAPO objective.
TrainLog train(ToyPolicy policy, const TaskSampler& sampler, const TrainConfig& config);

} // namespace mmi::sim
