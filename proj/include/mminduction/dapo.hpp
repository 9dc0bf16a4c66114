#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace mmi::dapo {

// One sampled sequence with per-token log-probabilities (nats) under the
// current, sampling, and reference policies. kl_new_ref carries the exact
// closed-form KL(pi_theta || pi_ref) at each decision point, supplied by the
// caller who owns the categorical distributions; empty means zero KL.
struct RolloutSequence {
    std::vector<double> logp_new;
    std::vector<double> logp_old;
    std::vector<double> logp_ref;
    std::vector<double> kl_new_ref;
    double reward = 0.0;
    bool overlong = false;

    std::size_t length() const { return logp_new.size(); }
};

struct RolloutGroup {
    std::vector<RolloutSequence> sequences;
};

struct DapoConfig {
    double eps_low = 0.2;
    double eps_high = 0.28;
    double kl_coef = 0.0;
    std::size_t max_completion_length = 2048;
    double std_floor = 1e-8;
};

struct ObjectiveResult {
    double objective = 0.0;
    // per_token_terms[i][t] = min(r*A, clip(r)*A) for token t of sequence i
    std::vector<std::vector<double>> per_token_terms;
};

// Group-normalized advantages: (R_i - mean) / population std.
// Throws GroupTooSmall (G < 2) or DegenerateGroup (std below floor).
std::vector<double> group_advantages(const std::vector<double>& rewards, double std_floor);

// r_t = exp(logp_new_t - logp_old_t).
std::vector<double> token_ratios(const std::vector<double>& logp_new,
                                 const std::vector<double>& logp_old);

// Token-count-weighted clipped surrogate minus the KL penalty; higher is
// better. Summation order is fixed (sequence-major, left to right) so the
// result is bitwise reproducible.
ObjectiveResult dapo_objective(const RolloutGroup& group, const DapoConfig& config);

// Drop sequences exceeding max_completion_length (or explicitly flagged)
// before any group statistics are taken.
RolloutGroup overlong_filter(const RolloutGroup& group, const DapoConfig& config);

// Dynamic sampling: groups with reward std below the floor carry no learning
// signal. Boundary is inclusive (std == floor accepts).
bool dynamic_sample_gate(const std::vector<double>& rewards, double std_floor);

// Central-difference gradient estimate; the test oracle for analytic
// gradients.
std::vector<double> finite_diff_gradient(const std::function<double(const std::vector<double>&)>& fn,
                                         const std::vector<double>& params, double h);

} // namespace mmi::dapo
