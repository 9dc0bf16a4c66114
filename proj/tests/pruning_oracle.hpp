#pragma once

// Straight-line reference implementation of similarity-guided token pruning,
// written independently of the library code path and kept deliberately
// naive: plain nested loops, no shared helpers. Tests compare the library's
// retained index set against this byte for byte.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

struct PruneInput {
    std::vector<std::vector<double>> tokens; // N rows of d values
    std::size_t regions = 4;
    std::size_t budget = 4;
    double tau = 1.0;
    bool grid_mode = false;
    std::size_t grid_rows = 0;
    std::size_t grid_cols = 0;
    bool cosine = false;
};

inline std::vector<std::vector<std::size_t>> oracle_partition(const PruneInput& in) {
    const std::size_t n = in.tokens.size();
    std::vector<std::vector<std::size_t>> regions(in.regions);
    if (in.grid_mode) {
        const auto side = static_cast<std::size_t>(std::llround(std::sqrt(double(in.regions))));
        const std::size_t br = in.grid_rows / side;
        const std::size_t bc = in.grid_cols / side;
        for (std::size_t idx = 0; idx < n; ++idx) {
            const std::size_t row = idx / in.grid_cols;
            const std::size_t col = idx % in.grid_cols;
            regions[(row / br) * side + (col / bc)].push_back(idx);
        }
    } else {
        const std::size_t base = n / in.regions;
        const std::size_t extra = n % in.regions;
        std::size_t pos = 0;
        for (std::size_t z = 0; z < in.regions; ++z) {
            const std::size_t len = base + (z < extra ? 1 : 0);
            for (std::size_t i = 0; i < len; ++i) regions[z].push_back(pos++);
        }
    }
    return regions;
}

inline std::vector<std::size_t> oracle_prune_selected(const PruneInput& in) {
    const auto regions = oracle_partition(in);
    const std::size_t z_count = regions.size();
    const std::size_t d = in.tokens.empty() ? 0 : in.tokens[0].size();

    std::vector<std::vector<double>> nu_per_region(z_count);
    std::vector<double> region_mean(z_count, 0.0);

    for (std::size_t z = 0; z < z_count; ++z) {
        const auto& region = regions[z];
        const std::size_t m = region.size();
        std::vector<std::vector<double>> rows(m, std::vector<double>(d));
        for (std::size_t i = 0; i < m; ++i) rows[i] = in.tokens[region[i]];
        if (in.cosine) {
            for (auto& row : rows) {
                double norm = 0;
                for (double v : row) norm += v * v;
                norm = std::sqrt(norm);
                if (norm > 0)
                    for (double& v : row) v /= norm;
            }
        }
        std::vector<double> nu(m, 0.0);
        if (m >= 2) {
            for (std::size_t i = 0; i < m; ++i) {
                std::vector<double> sims;
                for (std::size_t j = 0; j < m; ++j) {
                    if (j == i) continue;
                    double dot = 0;
                    for (std::size_t k = 0; k < d; ++k) dot += rows[i][k] * rows[j][k];
                    sims.push_back(dot);
                }
                double mean = 0;
                for (double s : sims) mean += s;
                mean /= double(sims.size());
                double var = 0;
                for (double s : sims) var += (s - mean) * (s - mean);
                nu[i] = var / double(sims.size());
            }
        }
        nu_per_region[z] = nu;
        double total = 0;
        for (double v : nu) total += v;
        region_mean[z] = total / double(m);
    }

    std::vector<double> w(z_count, 0.0);
    double denom = 0;
    for (std::size_t z = 0; z < z_count; ++z) {
        w[z] = region_mean[z] > 0 ? std::pow(region_mean[z], in.tau) : 0.0;
        denom += w[z];
    }
    if (denom <= 0) {
        for (auto& v : w) v = 1.0 / double(z_count);
    } else {
        for (auto& v : w) v /= denom;
    }

    std::vector<std::size_t> q(z_count);
    std::vector<double> frac(z_count);
    std::size_t assigned = 0;
    for (std::size_t z = 0; z < z_count; ++z) {
        const double exact = w[z] * double(in.budget);
        q[z] = std::size_t(std::floor(exact));
        frac[z] = exact - double(q[z]);
        assigned += q[z];
    }
    std::vector<std::size_t> ranking(z_count);
    for (std::size_t z = 0; z < z_count; ++z) ranking[z] = z;
    std::stable_sort(ranking.begin(), ranking.end(),
                     [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t i = 0; i < z_count && assigned < in.budget; ++i) {
        ++q[ranking[i]];
        ++assigned;
    }
    std::size_t overflow = 0;
    for (std::size_t z = 0; z < z_count; ++z)
        if (q[z] > regions[z].size()) {
            overflow += q[z] - regions[z].size();
            q[z] = regions[z].size();
        }
    while (overflow > 0) {
        bool moved = false;
        for (std::size_t i = 0; i < z_count && overflow > 0; ++i) {
            const std::size_t z = ranking[i];
            if (q[z] < regions[z].size()) {
                ++q[z];
                --overflow;
                moved = true;
            }
        }
        if (!moved) break;
    }

    std::vector<std::size_t> selected;
    for (std::size_t z = 0; z < z_count; ++z) {
        std::vector<std::size_t> local(regions[z].size());
        for (std::size_t i = 0; i < local.size(); ++i) local[i] = i;
        std::stable_sort(local.begin(), local.end(), [&](std::size_t a, std::size_t b) {
            return nu_per_region[z][a] > nu_per_region[z][b];
        });
        for (std::size_t i = 0; i < q[z]; ++i) selected.push_back(regions[z][local[i]]);
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

} // namespace oracle
