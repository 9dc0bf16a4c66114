#include "mminduction/dapo.hpp"

#include <algorithm>
#include <cmath>

#include "mminduction/error.hpp"

namespace mmi::dapo {

namespace {

double population_std(const std::vector<double>& values) {
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0;
    for (double v : values) var += (v - mean) * (v - mean);
    return std::sqrt(var / static_cast<double>(values.size()));
}

} // namespace

std::vector<double> group_advantages(const std::vector<double>& rewards, double std_floor) {
    if (rewards.size() < 2)
        throw Error("GroupTooSmall", "advantage normalization needs G >= 2");
    double mean = 0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(rewards.size());
    const double sd = population_std(rewards);
    if (sd < std_floor)
        throw Error("DegenerateGroup", "reward std below floor; no learning signal");
    std::vector<double> adv(rewards.size());
    for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / sd;
    return adv;
}

std::vector<double> token_ratios(const std::vector<double>& logp_new,
                                 const std::vector<double>& logp_old) {
    if (logp_new.size() != logp_old.size())
        throw Error("LengthMismatch", "log-prob vectors differ in length");
    std::vector<double> r(logp_new.size());
    for (std::size_t t = 0; t < r.size(); ++t) r[t] = std::exp(logp_new[t] - logp_old[t]);
    return r;
}

ObjectiveResult dapo_objective(const RolloutGroup& group, const DapoConfig& config) {
    if (group.sequences.empty())
        throw Error("EmptyGroup", "no sequences in group");

    std::vector<double> rewards;
    rewards.reserve(group.sequences.size());
    for (const auto& s : group.sequences) rewards.push_back(s.reward);
    const std::vector<double> adv = group_advantages(rewards, config.std_floor);

    std::size_t total_tokens = 0;
    for (const auto& s : group.sequences) total_tokens += s.length();
    if (total_tokens == 0)
        throw Error("EmptyGroup", "group has no tokens");

    ObjectiveResult result;
    result.per_token_terms.resize(group.sequences.size());
    double surrogate = 0;
    double kl_sum = 0;
    for (std::size_t i = 0; i < group.sequences.size(); ++i) {
        const auto& s = group.sequences[i];
        const std::vector<double> ratios = token_ratios(s.logp_new, s.logp_old);
        auto& terms = result.per_token_terms[i];
        terms.resize(ratios.size());
        for (std::size_t t = 0; t < ratios.size(); ++t) {
            const double r = ratios[t];
            const double clipped = std::clamp(r, 1.0 - config.eps_low, 1.0 + config.eps_high);
            terms[t] = std::min(r * adv[i], clipped * adv[i]);
            surrogate += terms[t];
        }
        if (config.kl_coef != 0.0)
            for (double kl : s.kl_new_ref) kl_sum += kl;
    }
    const double weight = 1.0 / static_cast<double>(total_tokens);
    result.objective = surrogate * weight - config.kl_coef * kl_sum * weight;
    return result;
}

RolloutGroup overlong_filter(const RolloutGroup& group, const DapoConfig& config) {
    RolloutGroup out;
    for (const auto& s : group.sequences)
        if (!s.overlong && s.length() <= config.max_completion_length)
            out.sequences.push_back(s);
    if (out.sequences.empty())
        throw Error("EmptyGroup", "all sequences filtered as overlong");
    return out;
}

bool dynamic_sample_gate(const std::vector<double>& rewards, double std_floor) {
    if (rewards.empty()) return false;
    return population_std(rewards) >= std_floor;
}

std::vector<double> finite_diff_gradient(const std::function<double(const std::vector<double>&)>& fn,
                                         const std::vector<double>& params, double h) {
    std::vector<double> grad(params.size());
    std::vector<double> x = params;
    for (std::size_t j = 0; j < params.size(); ++j) {
        x[j] = params[j] + h;
        const double up = fn(x);
        x[j] = params[j] - h;
        const double down = fn(x);
        x[j] = params[j];
        grad[j] = (up - down) / (2.0 * h);
    }
    return grad;
}

} // namespace mmi::dapo
