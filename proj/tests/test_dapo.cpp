#include "doctest.h"

#include <cmath>
#include <vector>

#include "mminduction/dapo.hpp"
#include "mminduction/error.hpp"
#include "mminduction/rng.hpp"

using namespace mmi;
using namespace mmi::dapo;

namespace {

RolloutSequence random_sequence(std::size_t len, double reward, Rng& rng) {
    RolloutSequence s;
    for (std::size_t t = 0; t < len; ++t) {
        s.logp_old.push_back(-0.1 - 2.0 * rng.next_double());
        s.logp_new.push_back(s.logp_old.back() + 0.4 * (rng.next_double() - 0.5));
        s.logp_ref.push_back(s.logp_old.back());
    }
    s.reward = reward;
    return s;
}

// Straight-line re-evaluation of the objective, independent of the library's
// loop structure.
double objective_oracle(const RolloutGroup& g, const DapoConfig& c) {
    const std::size_t n = g.sequences.size();
    double mean = 0;
    for (const auto& s : g.sequences) mean += s.reward;
    mean /= double(n);
    double var = 0;
    for (const auto& s : g.sequences) var += (s.reward - mean) * (s.reward - mean);
    const double sd = std::sqrt(var / double(n));
    std::size_t tokens = 0;
    for (const auto& s : g.sequences) tokens += s.logp_new.size();
    double surrogate = 0, kl = 0;
    for (const auto& s : g.sequences) {
        const double a = (s.reward - mean) / sd;
        for (std::size_t t = 0; t < s.logp_new.size(); ++t) {
            const double r = std::exp(s.logp_new[t] - s.logp_old[t]);
            double clipped = r;
            if (clipped < 1.0 - c.eps_low) clipped = 1.0 - c.eps_low;
            if (clipped > 1.0 + c.eps_high) clipped = 1.0 + c.eps_high;
            surrogate += std::min(r * a, clipped * a);
        }
        for (double v : s.kl_new_ref) kl += v;
    }
    return surrogate / double(tokens) - c.kl_coef * kl / double(tokens);
}

} // namespace

TEST_CASE("group_advantages worked examples") {
    const double floor = 1e-8;
    SUBCASE("two-element group") {
        const auto a = group_advantages({1.0, 0.0}, floor);
        CHECK(a[0] == doctest::Approx(1.0));
        CHECK(a[1] == doctest::Approx(-1.0));
    }
    SUBCASE("hand-normalized four-element group") {
        const std::vector<double> r = {1.5, 1.25, 1.0, -1.0};
        const double mean = (1.5 + 1.25 + 1.0 - 1.0) / 4.0;
        double var = 0;
        for (double v : r) var += (v - mean) * (v - mean);
        const double sd = std::sqrt(var / 4.0);
        const auto a = group_advantages(r, floor);
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(a[i] == doctest::Approx((r[i] - mean) / sd).epsilon(1e-12));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(group_advantages({1.0}, floor), Error);
        CHECK_THROWS_AS(group_advantages({0.5, 0.5, 0.5}, floor), Error);
    }
    SUBCASE("normalization invariants on random groups") {
        Rng rng(9);
        for (int rep = 0; rep < 30; ++rep) {
            std::vector<double> r(2 + rng.next_below(8));
            for (auto& v : r) v = rng.next_double() * 3 - 1;
            std::vector<double> a;
            try {
                a = group_advantages(r, floor);
            } catch (const Error&) {
                continue;
            }
            double mean = 0, var = 0;
            for (double v : a) mean += v;
            mean /= double(a.size());
            for (double v : a) var += (v - mean) * (v - mean);
            CHECK(std::abs(mean) < 1e-9);
            CHECK(std::sqrt(var / double(a.size())) == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("token_ratios") {
    CHECK(token_ratios({-1.0, -2.0}, {-1.0, -2.0}) == std::vector<double>{1.0, 1.0});
    const auto r = token_ratios({-1.0 + std::log(2.0)}, {-1.0});
    CHECK(r[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(token_ratios({-1.0}, {-1.0, -2.0}), Error);

    Rng rng(3);
    std::vector<double> a(6), b(6);
    for (std::size_t i = 0; i < 6; ++i) {
        a[i] = -rng.next_double();
        b[i] = -rng.next_double();
    }
    const auto ratios = token_ratios(a, b);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(ratios[i] == doctest::Approx(std::exp(a[i] - b[i])).epsilon(1e-14));
        CHECK(ratios[i] > 0);
    }
}

TEST_CASE("dapo_objective") {
    const DapoConfig config;
    Rng rng(17);

    SUBCASE("theta = theta_old collapses to the token-weighted advantage mean") {
        RolloutGroup g;
        const std::vector<double> rewards = {1.5, 0.25, -1.0, 1.0};
        for (double r : rewards) {
            RolloutSequence s = random_sequence(1 + rng.next_below(5), r, rng);
            s.logp_new = s.logp_old;
            g.sequences.push_back(s);
        }
        const auto adv = group_advantages(rewards, config.std_floor);
        double expected = 0;
        std::size_t tokens = 0;
        for (std::size_t i = 0; i < g.sequences.size(); ++i) {
            expected += adv[i] * double(g.sequences[i].length());
            tokens += g.sequences[i].length();
        }
        expected /= double(tokens);
        const auto result = dapo_objective(g, config);
        CHECK(result.objective == doctest::Approx(expected).epsilon(1e-10));
    }
    SUBCASE("random instances match a straight-line oracle") {
        for (int rep = 0; rep < 40; ++rep) {
            RolloutGroup g;
            const std::size_t n = 2 + rng.next_below(6);
            for (std::size_t i = 0; i < n; ++i)
                g.sequences.push_back(random_sequence(1 + rng.next_below(5),
                                                      rng.next_double() * 2 - 0.5, rng));
            DapoConfig c = config;
            c.kl_coef = rep % 2 ? 0.3 : 0.0;
            if (c.kl_coef != 0.0)
                for (auto& s : g.sequences)
                    for (std::size_t t = 0; t < s.length(); ++t)
                        s.kl_new_ref.push_back(0.01 * rng.next_double());
            double want;
            try {
                want = objective_oracle(g, c);
            } catch (...) {
                continue;
            }
            if (!std::isfinite(want)) continue;
            const auto got = dapo_objective(g, c);
            CHECK(got.objective == doctest::Approx(want).epsilon(1e-12));
            // clipping bound on every per-token term
            double max_adv = 0;
            std::vector<double> rewards;
            for (const auto& s : g.sequences) rewards.push_back(s.reward);
            const auto adv = group_advantages(rewards, c.std_floor);
            for (double a : adv) max_adv = std::max(max_adv, std::abs(a));
            for (const auto& terms : got.per_token_terms)
                for (double term : terms)
                    CHECK(std::abs(term) <= max_adv * (1.0 + c.eps_high) + 1e-12);
        }
    }
    SUBCASE("identical policies make the KL term vanish") {
        RolloutGroup g;
        g.sequences.push_back(random_sequence(3, 1.0, rng));
        g.sequences.push_back(random_sequence(3, 0.0, rng));
        for (auto& s : g.sequences) {
            s.logp_new = s.logp_old;
            s.kl_new_ref.assign(s.length(), 0.0);
        }
        DapoConfig with_kl = config;
        with_kl.kl_coef = 5.0;
        DapoConfig without = config;
        CHECK(dapo_objective(g, with_kl).objective ==
              doctest::Approx(dapo_objective(g, without).objective).epsilon(1e-15));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(dapo_objective(RolloutGroup{}, config), Error);
        RolloutGroup degenerate;
        degenerate.sequences.push_back(random_sequence(2, 1.0, rng));
        degenerate.sequences.push_back(random_sequence(2, 1.0, rng));
        CHECK_THROWS_AS(dapo_objective(degenerate, config), Error);
    }
}

TEST_CASE("overlong_filter") {
    const DapoConfig config;
    Rng rng(23);
    RolloutGroup g;
    for (int i = 0; i < 8; ++i) g.sequences.push_back(random_sequence(4, double(i), rng));

    SUBCASE("no-op when nothing is overlong") {
        const auto out = overlong_filter(g, config);
        CHECK(out.sequences.size() == 8);
    }
    SUBCASE("flagged sequence is removed before statistics") {
        RolloutGroup marked = g;
        marked.sequences[3].overlong = true;
        const auto out = overlong_filter(marked, config);
        REQUIRE(out.sequences.size() == 7);
        // filtered statistics equal from-scratch statistics on the survivors
        std::vector<double> survivors;
        for (const auto& s : out.sequences) survivors.push_back(s.reward);
        const auto a = group_advantages(survivors, config.std_floor);
        std::vector<double> manual = {0, 1, 2, 4, 5, 6, 7};
        const auto b = group_advantages(manual, config.std_floor);
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
    }
    SUBCASE("length-based removal") {
        DapoConfig tight = config;
        tight.max_completion_length = 3;
        CHECK_THROWS_AS(overlong_filter(g, tight), Error); // every length is 4
    }
    SUBCASE("all flagged raises EmptyGroup") {
        RolloutGroup marked = g;
        for (auto& s : marked.sequences) s.overlong = true;
        CHECK_THROWS_AS(overlong_filter(marked, config), Error);
    }
}

TEST_CASE("dynamic_sample_gate") {
    const double floor = 1e-8;
    CHECK_FALSE(dynamic_sample_gate({1.5, 1.5, 1.5, 1.5}, floor));
    CHECK(dynamic_sample_gate({1.5, 1.25}, floor));
    CHECK_FALSE(dynamic_sample_gate({}, floor));
    // boundary is inclusive: spread of exactly the floor accepts
    CHECK(dynamic_sample_gate({0.0, 2e-8}, 1e-8));
}

TEST_CASE("finite_diff_gradient sanity") {
    const auto quadratic = [](const std::vector<double>& x) { return x[0] * x[0]; };
    const auto g = finite_diff_gradient(quadratic, {3.0}, 1e-4);
    CHECK(g[0] == doctest::Approx(6.0).epsilon(1e-6));

    const auto constant = [](const std::vector<double>&) { return 7.5; };
    const auto zero = finite_diff_gradient(constant, {1.0, -2.0, 0.5}, 1e-5);
    for (double v : zero) CHECK(v == 0.0);
}
