#include "mminduction/token_pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mminduction/error.hpp"

namespace mmi::pruning {

namespace {

std::size_t isqrt_exact(std::size_t z) {
    auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(z))));
    return r * r == z ? r : 0;
}

} // namespace

RegionPartition partition_regions(const TokenGrid& grid, const PruneConfig& config) {
    const std::size_t n = grid.tokens.rows;
    const std::size_t z = config.regions;
    if (z == 0 || z > n)
        throw Error("ZExceedsTokens", "regions=" + std::to_string(z) + " exceeds tokens=" + std::to_string(n));

    RegionPartition part;
    part.regions.resize(z);

    if (config.partition_mode == PartitionMode::Grid) {
        const std::size_t side = isqrt_exact(z);
        if (side == 0)
            throw Error("GridModeUnavailable", "grid mode requires a perfect-square region count");
        if (!grid.grid)
            throw Error("GridModeUnavailable", "token grid has no patch dimensions");
        const auto [rows, cols] = *grid.grid;
        if (rows * cols != n)
            throw Error("GridModeUnavailable", "patch grid dims do not cover the token sequence");
        if (rows % side != 0 || cols % side != 0)
            throw Error("GridModeUnavailable", "patch grid not divisible into " +
                        std::to_string(side) + "x" + std::to_string(side) + " blocks");
        const std::size_t block_r = rows / side;
        const std::size_t block_c = cols / side;
        for (std::size_t br = 0; br < side; ++br)
            for (std::size_t bc = 0; bc < side; ++bc) {
                auto& region = part.regions[br * side + bc];
                for (std::size_t r = 0; r < block_r; ++r)
                    for (std::size_t c = 0; c < block_c; ++c)
                        region.push_back((br * block_r + r) * cols + (bc * block_c + c));
            }
    } else {
        // Balanced contiguous chunks: the first (n mod z) regions get one extra.
        const std::size_t base = n / z;
        const std::size_t extra = n % z;
        std::size_t pos = 0;
        for (std::size_t i = 0; i < z; ++i) {
            const std::size_t len = base + (i < extra ? 1 : 0);
            auto& region = part.regions[i];
            for (std::size_t j = 0; j < len; ++j) region.push_back(pos++);
        }
    }
    return part;
}

Matrix intra_region_similarity(const Matrix& embeddings, SimilarityMode mode) {
    const std::size_t m = embeddings.rows;
    const std::size_t d = embeddings.cols;
    Matrix e = embeddings;
    if (mode == SimilarityMode::Cosine) {
        for (std::size_t i = 0; i < m; ++i) {
            double norm2 = 0;
            for (std::size_t k = 0; k < d; ++k) norm2 += e.at(i, k) * e.at(i, k);
            if (norm2 > 0) {
                // plain division (not reciprocal-multiply) so the result is
                // the correctly rounded quotient the reference arithmetic pins
                const double norm = std::sqrt(norm2);
                for (std::size_t k = 0; k < d; ++k) e.at(i, k) /= norm;
            }
        }
    }
    Matrix s(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue; // self-similarity removed
            double dot = 0;
            for (std::size_t k = 0; k < d; ++k) dot += e.at(i, k) * e.at(j, k);
            s.at(i, j) = dot;
        }
    return s;
}

std::vector<double> diversity_scores(const Matrix& similarity) {
    const std::size_t m = similarity.rows;
    std::vector<double> nu(m, 0.0);
    if (m < 2) return nu;
    for (std::size_t i = 0; i < m; ++i) {
        double mean = 0;
        for (std::size_t j = 0; j < m; ++j)
            if (j != i) mean += similarity.at(i, j);
        mean /= static_cast<double>(m - 1);
        double var = 0;
        for (std::size_t j = 0; j < m; ++j)
            if (j != i) {
                const double dlt = similarity.at(i, j) - mean;
                var += dlt * dlt;
            }
        nu[i] = var / static_cast<double>(m - 1);
    }
    return nu;
}

std::vector<double> region_weights(const std::vector<double>& region_means, double tau) {
    const std::size_t z = region_means.size();
    std::vector<double> w(z, 0.0);
    double total = 0;
    for (std::size_t i = 0; i < z; ++i) {
        w[i] = region_means[i] > 0 ? std::pow(region_means[i], tau) : 0.0;
        total += w[i];
    }
    if (total <= 0) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(z));
        return w;
    }
    for (auto& v : w) v /= total;
    return w;
}

std::vector<std::size_t> allocate_quotas(const std::vector<double>& weights,
                                         std::size_t budget,
                                         const std::vector<std::size_t>& sizes) {
    const std::size_t z = weights.size();
    const std::size_t capacity = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    if (budget > capacity)
        throw Error("BudgetExceedsTokens", "budget=" + std::to_string(budget) +
                    " exceeds token count=" + std::to_string(capacity));

    std::vector<std::size_t> q(z, 0);
    std::vector<double> remainder(z, 0.0);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < z; ++i) {
        const double exact = weights[i] * static_cast<double>(budget);
        q[i] = static_cast<std::size_t>(std::floor(exact));
        remainder[i] = exact - static_cast<double>(q[i]);
        assigned += q[i];
    }

    // Remainder ranking: descending fractional remainder, ties to the lower
    // region index. Reused for both the leftover pass and overflow
    // redistribution.
    std::vector<std::size_t> rank(z);
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
        return remainder[a] > remainder[b];
    });

    for (std::size_t i = 0; i < z && assigned < budget; ++i) {
        ++q[rank[i]];
        ++assigned;
    }

    // Capacity clamp: pull back overflow, then hand it to the ranked regions
    // that still have spare capacity, cycling until placed.
    std::size_t overflow = 0;
    for (std::size_t i = 0; i < z; ++i)
        if (q[i] > sizes[i]) {
            overflow += q[i] - sizes[i];
            q[i] = sizes[i];
        }
    while (overflow > 0) {
        bool placed = false;
        for (std::size_t i = 0; i < z && overflow > 0; ++i) {
            const std::size_t r = rank[i];
            if (q[r] < sizes[r]) {
                ++q[r];
                --overflow;
                placed = true;
            }
        }
        if (!placed) break; // capacity check above makes this unreachable
    }
    return q;
}

std::vector<std::size_t> select_tokens(const RegionPartition& partition,
                                       const std::vector<double>& nu,
                                       const std::vector<std::size_t>& quotas) {
    std::vector<std::size_t> selected;
    for (std::size_t z = 0; z < partition.regions.size(); ++z) {
        const auto& region = partition.regions[z];
        const std::size_t q = quotas[z];
        if (q > region.size())
            throw Error("QuotaExceedsRegion", "quota " + std::to_string(q) +
                        " exceeds region size " + std::to_string(region.size()));
        std::vector<std::size_t> order(region.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        // Highest diversity first; stable sort keeps lowest index on ties.
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return nu[region[a]] > nu[region[b]];
        });
        for (std::size_t i = 0; i < q; ++i) selected.push_back(region[order[i]]);
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

namespace {

PruneResult prune_impl(const TokenGrid& grid, const PruneConfig& config, bool parallel) {
    const std::size_t n = grid.tokens.rows;
    if (config.budget > n)
        throw Error("BudgetExceedsTokens", "budget=" + std::to_string(config.budget) +
                    " exceeds tokens=" + std::to_string(n));

    RegionPartition part = partition_regions(grid, config);
    const std::size_t z = part.regions.size();

    DiversityReport report;
    report.nu.assign(n, 0.0);
    report.mu.assign(n, 0.0);
    report.region_means.assign(z, 0.0);

    // Regions are independent; each iteration writes disjoint slices, so the
    // parallel and serial paths are bitwise identical.
    const auto region_pass = [&](std::size_t zi) {
        const auto& region = part.regions[zi];
        const std::size_t m = region.size();
        Matrix e(m, grid.tokens.cols);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t k = 0; k < grid.tokens.cols; ++k)
                e.at(i, k) = grid.tokens.at(region[i], k);
        Matrix s = intra_region_similarity(e, config.similarity_mode);
        std::vector<double> nu = diversity_scores(s);
        double region_sum = 0;
        for (std::size_t i = 0; i < m; ++i) {
            report.nu[region[i]] = nu[i];
            region_sum += nu[i];
            if (m >= 2) {
                double mean = 0;
                for (std::size_t j = 0; j < m; ++j)
                    if (j != i) mean += s.at(i, j);
                report.mu[region[i]] = mean / static_cast<double>(m - 1);
            }
        }
        report.region_means[zi] = region_sum / static_cast<double>(m);
    };

    if (parallel) {
#pragma omp parallel for schedule(static)
        for (long long zi = 0; zi < static_cast<long long>(z); ++zi)
            region_pass(static_cast<std::size_t>(zi));
    } else {
        for (std::size_t zi = 0; zi < z; ++zi) region_pass(zi);
    }

    report.weights = region_weights(report.region_means, config.tau);

    std::vector<std::size_t> sizes(z);
    for (std::size_t i = 0; i < z; ++i) sizes[i] = part.regions[i].size();

    RetentionPlan plan;
    plan.quotas = allocate_quotas(report.weights, config.budget, sizes);
    plan.selected = select_tokens(part, report.nu, plan.quotas);

    TokenGrid pruned;
    pruned.tokens = Matrix(plan.selected.size(), grid.tokens.cols);
    for (std::size_t i = 0; i < plan.selected.size(); ++i)
        for (std::size_t k = 0; k < grid.tokens.cols; ++k)
            pruned.tokens.at(i, k) = grid.tokens.at(plan.selected[i], k);

    return PruneResult{std::move(pruned), std::move(plan), std::move(report)};
}

} // namespace

PruneResult prune(const TokenGrid& grid, const PruneConfig& config) {
    return prune_impl(grid, config, true);
}

PruneResult prune_serial(const TokenGrid& grid, const PruneConfig& config) {
    return prune_impl(grid, config, false);
}

} // namespace mmi::pruning
