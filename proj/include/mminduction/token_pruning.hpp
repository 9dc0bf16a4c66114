#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mminduction/matrix.hpp"

namespace mmi::pruning {

struct TokenGrid {
    Matrix tokens; // N x d embeddings
    std::optional<std::pair<std::size_t, std::size_t>> grid; // (rows, cols), rows*cols == N
};

enum class PartitionMode { Grid, Linear };
enum class SimilarityMode { Dot, Cosine };

struct PruneConfig {
    std::size_t regions = 16;
    std::size_t budget = 128;
    double tau = 1.0;
    PartitionMode partition_mode = PartitionMode::Linear;
    SimilarityMode similarity_mode = SimilarityMode::Dot;
};

struct RegionPartition {
    // Disjoint, covering index lists into the token sequence; indices within
    // each region strictly increasing.
    std::vector<std::vector<std::size_t>> regions;
};

struct DiversityReport {
    std::vector<double> nu;           // per-token diversity, length N
    std::vector<double> mu;           // per-token mean similarity, length N
    std::vector<double> region_means; // length Z
    std::vector<double> weights;      // length Z, sums to 1
};

struct RetentionPlan {
    std::vector<std::size_t> quotas;   // length Z, sums to budget
    std::vector<std::size_t> selected; // strictly increasing, length budget
};

struct PruneResult {
    TokenGrid pruned;
    RetentionPlan plan;
    DiversityReport report;
};

// Uniform spatial partition. Grid mode carves sqrt(Z) x sqrt(Z) rectangular
// patch blocks (Z must be a perfect square, grid dims divisible by sqrt(Z));
// linear mode chunks the sequence contiguously with balanced sizes.
RegionPartition partition_regions(const TokenGrid& grid, const PruneConfig& config);

// S = (1 - I) .* (E E^T); cosine mode row-normalizes E first (zero rows stay zero).
Matrix intra_region_similarity(const Matrix& embeddings, SimilarityMode mode);

// Per-token variance of similarities to the other tokens in the region.
// Singleton regions get nu = 0 by convention.
std::vector<double> diversity_scores(const Matrix& similarity);

// w_z = m_z^tau / sum m^tau; all-zero means fall back to uniform.
std::vector<double> region_weights(const std::vector<double>& region_means, double tau);

// Largest-remainder apportionment of the token budget, with capacity
// clamping against region sizes and remainder-ranked redistribution.
std::vector<std::size_t> allocate_quotas(const std::vector<double>& weights,
                                         std::size_t budget,
                                         const std::vector<std::size_t>& sizes);

// Keep the q_z highest-diversity tokens per region (ties: lowest index);
// result sorted ascending.
std::vector<std::size_t> select_tokens(const RegionPartition& partition,
                                       const std::vector<double>& nu,
                                       const std::vector<std::size_t>& quotas);

// Full pipeline. Per-region similarity/diversity work runs under OpenMP;
// prune_serial is the single-threaded path kept for testing and benchmarks.
// Both produce bitwise-identical output.
PruneResult prune(const TokenGrid& grid, const PruneConfig& config);
PruneResult prune_serial(const TokenGrid& grid, const PruneConfig& config);

} // namespace mmi::pruning
