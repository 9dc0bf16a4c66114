#include "mminduction/rlvr_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mminduction/error.hpp"

namespace mmi::sim {

namespace {

std::vector<double> softmax(const double* logits, std::size_t n) {
    double mx = logits[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
    std::vector<double> p(n);
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

std::size_t sample_categorical(const std::vector<double>& probs, Rng& rng) {
    const double u = rng.next_double();
    double acc = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;
}

double kl_categorical(const std::vector<double>& p, const std::vector<double>& q) {
    double kl = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0) kl += p[i] * (std::log(p[i]) - std::log(q[i]));
    return kl;
}

int noise_count_for(int shots) {
    switch (shots) {
        case 1: return 0;
        case 2: return 1;
        case 3: return 1;
        case 4: return 1;
        case 5: return 2;
        default: throw Error("ShotRuleViolation", "unsupported shot count " + std::to_string(shots));
    }
}

trace::ReasoningTrace render_trace(const ToyTask& task, const std::vector<int>& judgments,
                                   const std::vector<int>& citations, int answer_index) {
    trace::ReasoningTrace t;
    t.target_analysis = {"Answer the synthetic query.", "Synthetic target canvas.",
                         "Apply the rule induced from the helpful cases."};
    for (int i = 0; i < task.case_count; ++i) {
        trace::CaseAnalysis c;
        c.index = i + 1;
        c.elements = "Synthetic case " + std::to_string(i + 1) + ".";
        c.solution_logic = "Rule lookup against the task family.";
        c.comparison = "Matched against the target's required logic.";
        c.judgment = judgments[static_cast<std::size_t>(i)] == 1 ? trace::Judgment::Helpful
                                                                 : trace::Judgment::Unhelpful;
        t.case_analyses.push_back(std::move(c));
    }
    for (int i = 0; i < task.case_count; ++i)
        if (citations[static_cast<std::size_t>(i)] == 1) t.induction.cited_case_ids.insert(i + 1);
    t.induction.extracted_rule = "Report the answer the shared family rule points to.";
    t.answer.application = "Applied the extracted rule to the target.";
    t.answer.final_result = task.answer_alphabet[static_cast<std::size_t>(answer_index)];
    return t;
}

} // namespace

ToyPolicy ToyPolicy::zeros(int case_count, std::size_t alphabet_size) {
    ToyPolicy p;
    p.judgment_logits.assign(static_cast<std::size_t>(case_count), {0.0, 0.0});
    p.citation_logits.assign(static_cast<std::size_t>(case_count), {0.0, 0.0});
    p.answer_logits.assign(alphabet_size, 0.0);
    return p;
}

std::vector<double> ToyPolicy::flatten() const {
    std::vector<double> out;
    for (const auto& j : judgment_logits) { out.push_back(j[0]); out.push_back(j[1]); }
    for (const auto& c : citation_logits) { out.push_back(c[0]); out.push_back(c[1]); }
    for (double a : answer_logits) out.push_back(a);
    return out;
}

ToyPolicy ToyPolicy::unflatten(const std::vector<double>& params, int case_count,
                               std::size_t alphabet_size) {
    const auto n = static_cast<std::size_t>(case_count);
    if (params.size() != 4 * n + alphabet_size)
        throw Error("ShapeMismatch", "parameter vector has wrong length");
    ToyPolicy p = zeros(case_count, alphabet_size);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) { p.judgment_logits[i][0] = params[k++]; p.judgment_logits[i][1] = params[k++]; }
    for (std::size_t i = 0; i < n; ++i) { p.citation_logits[i][0] = params[k++]; p.citation_logits[i][1] = params[k++]; }
    for (std::size_t i = 0; i < alphabet_size; ++i) p.answer_logits[i] = params[k++];
    return p;
}

Rollout sample_rollout(const ToyPolicy& policy, const ToyTask& task, Rng& rng) {
    const auto n = static_cast<std::size_t>(task.case_count);
    if (policy.judgment_logits.size() != n || policy.citation_logits.size() != n ||
        policy.answer_logits.size() != task.answer_alphabet.size())
        throw Error("ShapeMismatch", "policy shape does not match the task");

    Rollout r;
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = softmax(policy.judgment_logits[i].data(), 2);
        const std::size_t a = sample_categorical(p, rng);
        r.judgments.push_back(static_cast<int>(a));
        r.logp.push_back(std::log(p[a]));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = softmax(policy.citation_logits[i].data(), 2);
        const std::size_t a = sample_categorical(p, rng);
        r.citations.push_back(static_cast<int>(a));
        r.logp.push_back(std::log(p[a]));
    }
    {
        const auto p = softmax(policy.answer_logits.data(), policy.answer_logits.size());
        const std::size_t a = sample_categorical(p, rng);
        r.answer_index = static_cast<int>(a);
        r.logp.push_back(std::log(p[a]));
    }
    r.trace = render_trace(task, r.judgments, r.citations, r.answer_index);
    r.text = trace::serialize_trace(r.trace);
    return r;
}

std::vector<double> decision_logps(const ToyPolicy& policy, const Rollout& rollout) {
    const std::size_t n = rollout.judgments.size();
    std::vector<double> out;
    out.reserve(2 * n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = softmax(policy.judgment_logits[i].data(), 2);
        out.push_back(std::log(p[static_cast<std::size_t>(rollout.judgments[i])]));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = softmax(policy.citation_logits[i].data(), 2);
        out.push_back(std::log(p[static_cast<std::size_t>(rollout.citations[i])]));
    }
    const auto p = softmax(policy.answer_logits.data(), policy.answer_logits.size());
    out.push_back(std::log(p[static_cast<std::size_t>(rollout.answer_index)]));
    return out;
}

std::vector<double> decision_kls(const ToyPolicy& policy, const ToyPolicy& ref) {
    std::vector<double> out;
    for (std::size_t i = 0; i < policy.judgment_logits.size(); ++i)
        out.push_back(kl_categorical(softmax(policy.judgment_logits[i].data(), 2),
                                     softmax(ref.judgment_logits[i].data(), 2)));
    for (std::size_t i = 0; i < policy.citation_logits.size(); ++i)
        out.push_back(kl_categorical(softmax(policy.citation_logits[i].data(), 2),
                                     softmax(ref.citation_logits[i].data(), 2)));
    out.push_back(kl_categorical(softmax(policy.answer_logits.data(), policy.answer_logits.size()),
                                 softmax(ref.answer_logits.data(), ref.answer_logits.size())));
    return out;
}

namespace {

dapo::RolloutGroup build_group(const ToyPolicy& policy, const ToyPolicy& ref,
                               const std::vector<Rollout>& rollouts,
                               const std::vector<double>& rewards,
                               const dapo::DapoConfig& config) {
    dapo::RolloutGroup group;
    for (std::size_t i = 0; i < rollouts.size(); ++i) {
        dapo::RolloutSequence seq;
        seq.logp_new = decision_logps(policy, rollouts[i]);
        seq.logp_old = rollouts[i].logp;
        seq.logp_ref = decision_logps(ref, rollouts[i]);
        if (config.kl_coef != 0.0) seq.kl_new_ref = decision_kls(policy, ref);
        seq.reward = rewards[i];
        group.sequences.push_back(std::move(seq));
    }
    return group;
}

} // namespace

double evaluate_objective(const ToyPolicy& policy, const ToyPolicy& ref,
                          const std::vector<Rollout>& rollouts,
                          const std::vector<double>& rewards,
                          const dapo::DapoConfig& config) {
    return dapo::dapo_objective(build_group(policy, ref, rollouts, rewards, config), config).objective;
}

std::vector<double> analytic_gradient(const ToyPolicy& policy, const ToyPolicy& ref,
                                      const std::vector<Rollout>& rollouts,
                                      const std::vector<double>& rewards,
                                      const dapo::DapoConfig& config) {
    const std::size_t n = policy.judgment_logits.size();
    const std::size_t m = policy.answer_logits.size();
    std::vector<double> grad(4 * n + m, 0.0);

    const std::vector<double> adv = dapo::group_advantages(rewards, config.std_floor);
    std::size_t total_tokens = 0;
    for (const auto& r : rollouts) total_tokens += r.logp.size();
    const double w = 1.0 / static_cast<double>(total_tokens);

    // Slot layout in the flat parameter vector: judgments, citations, answer.
    const auto slot_logits = [&](std::size_t slot) -> std::pair<const double*, std::size_t> {
        if (slot < n) return {policy.judgment_logits[slot].data(), 2};
        if (slot < 2 * n) return {policy.citation_logits[slot - n].data(), 2};
        return {policy.answer_logits.data(), m};
    };
    const auto ref_logits = [&](std::size_t slot) -> std::pair<const double*, std::size_t> {
        if (slot < n) return {ref.judgment_logits[slot].data(), 2};
        if (slot < 2 * n) return {ref.citation_logits[slot - n].data(), 2};
        return {ref.answer_logits.data(), m};
    };
    const auto param_base = [&](std::size_t slot) -> std::size_t {
        if (slot < n) return 2 * slot;
        if (slot < 2 * n) return 2 * n + 2 * (slot - n);
        return 4 * n;
    };

    for (std::size_t i = 0; i < rollouts.size(); ++i) {
        const auto& rollout = rollouts[i];
        const double a_hat = adv[i];
        for (std::size_t slot = 0; slot < 2 * n + 1; ++slot) {
            const auto [logits, size] = slot_logits(slot);
            const std::vector<double> p = softmax(logits, size);
            std::size_t action;
            if (slot < n) action = static_cast<std::size_t>(rollout.judgments[slot]);
            else if (slot < 2 * n) action = static_cast<std::size_t>(rollout.citations[slot - n]);
            else action = static_cast<std::size_t>(rollout.answer_index);

            const double logp_new = std::log(p[action]);
            const double ratio = std::exp(logp_new - rollout.logp[slot]);
            // Clip gate: gradient flows unless the clipped branch is the
            // strict min with a saturated clip.
            const bool clipped_away = (a_hat > 0 && ratio > 1.0 + config.eps_high) ||
                                      (a_hat < 0 && ratio < 1.0 - config.eps_low);
            const std::size_t base = param_base(slot);
            if (!clipped_away) {
                for (std::size_t b = 0; b < size; ++b) {
                    const double indicator = b == action ? 1.0 : 0.0;
                    grad[base + b] += w * a_hat * ratio * (indicator - p[b]);
                }
            }
            if (config.kl_coef != 0.0) {
                const auto [rlogits, rsize] = ref_logits(slot);
                const std::vector<double> q = softmax(rlogits, rsize);
                const double kl = kl_categorical(p, q);
                for (std::size_t b = 0; b < size; ++b)
                    grad[base + b] -= w * config.kl_coef *
                                      p[b] * ((std::log(p[b]) - std::log(q[b])) - kl);
            }
        }
    }
    return grad;
}

ToyTask TaskSampler::sample(Rng& rng) const {
    ToyTask task;
    task.case_count = shots;
    task.answer_alphabet = alphabet;
    task.gt_index = gt_index;
    const int m = noise_count_for(shots);
    for (std::size_t idx : rng.sample_indices(static_cast<std::size_t>(shots),
                                              static_cast<std::size_t>(m)))
        task.noise_ids.insert(static_cast<int>(idx) + 1);
    return task;
}

std::string TrainLog::to_csv() const {
    std::ostringstream out;
    out << "iter,r_task,r_helpful,r_cite,composite,rejected,filtered\n";
    char buf[256];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g,%d,%d\n",
                      r.iter, r.mean_r_task, r.mean_r_helpful, r.mean_r_cite,
                      r.mean_composite, r.groups_rejected, r.groups_filtered);
        out << buf;
    }
    return out.str();
}

TrainLog train(ToyPolicy policy, const TaskSampler& sampler, const TrainConfig& config) {
    if (config.group_size < 2)
        throw Error("GroupTooSmall", "group size must be at least 2");

    Rng rng(config.seed);
    const ToyPolicy ref = policy;
    TrainLog log;

    for (int iter = 0; iter < config.iterations; ++iter) {
        const ToyTask task = sampler.sample(rng);
        const reward::ContextSpec spec{task.case_count, task.noise_ids,
                                       task.answer_alphabet[static_cast<std::size_t>(task.gt_index)],
                                       reward::Comparator::Exact};

        TrainRecord rec;
        rec.iter = iter;

        for (int attempt = 0; ; ++attempt) {
            std::vector<Rollout> rollouts;
            std::vector<reward::RewardBreakdown> breakdowns;
            std::vector<double> rewards;
            int filtered = 0;
            for (std::size_t g = 0; g < config.group_size; ++g) {
                Rollout r = sample_rollout(policy, task, rng);
                const bool overlong = rng.next_double() < config.overlong_fraction;
                if (overlong) { // excluded before any group statistics
                    ++filtered;
                    continue;
                }
                breakdowns.push_back(reward::score(r.text, spec, config.weights));
                rewards.push_back(breakdowns.back().composite);
                rollouts.push_back(std::move(r));
            }
            rec.groups_filtered += filtered;

            const bool usable = rollouts.size() >= 2 &&
                                dapo::dynamic_sample_gate(rewards, config.dapo.std_floor);
            if (usable) {
                double mt = 0, mh = 0, mc = 0, mr = 0;
                for (const auto& b : breakdowns) {
                    mt += b.r_task;
                    mh += b.r_helpful;
                    mc += b.r_cite;
                    mr += b.composite;
                }
                const double count = static_cast<double>(breakdowns.size());
                rec.mean_r_task = mt / count;
                rec.mean_r_helpful = mh / count;
                rec.mean_r_cite = mc / count;
                rec.mean_composite = mr / count;

                const std::vector<double> grad =
                    analytic_gradient(policy, ref, rollouts, rewards, config.dapo);
                std::vector<double> params = policy.flatten();
                for (std::size_t j = 0; j < params.size(); ++j)
                    params[j] += config.learning_rate * grad[j];
                policy = ToyPolicy::unflatten(params, task.case_count, task.answer_alphabet.size());
                break;
            }

            ++rec.groups_rejected;
            if (attempt >= config.max_retries) {
                // Skip the update; log the group's (degenerate) means so the
                // record count stays one per iteration.
                if (!breakdowns.empty()) {
                    double mt = 0, mh = 0, mc = 0, mr = 0;
                    for (const auto& b : breakdowns) {
                        mt += b.r_task; mh += b.r_helpful; mc += b.r_cite; mr += b.composite;
                    }
                    const double count = static_cast<double>(breakdowns.size());
                    rec.mean_r_task = mt / count;
                    rec.mean_r_helpful = mh / count;
                    rec.mean_r_cite = mc / count;
                    rec.mean_composite = mr / count;
                }
                break;
            }
        }
        log.records.push_back(rec);
    }
    return log;
}

} // namespace mmi::sim
