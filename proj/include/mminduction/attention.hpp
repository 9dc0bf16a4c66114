#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mminduction/matrix.hpp"

namespace mmi::attention {

// Post-softmax attention weights, H heads x Q queries x K keys, row-major
// with key index fastest.
struct AttentionWeights {
    std::size_t heads = 0;
    std::size_t queries = 0;
    std::size_t keys = 0;
    std::vector<double> values;

    double at(std::size_t h, std::size_t q, std::size_t k) const {
        return values[(h * queries + q) * keys + k];
    }
    double& at(std::size_t h, std::size_t q, std::size_t k) {
        return values[(h * queries + q) * keys + k];
    }
};

// Pre-softmax scores, Q x K.
using ScoreMatrix = Matrix;

struct ImageSpan {
    std::string image_id;
    std::size_t start = 0; // half-open [start, end) into the token sequence
    std::size_t end = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
};

struct ImageSpanMap {
    std::vector<ImageSpan> spans; // non-overlapping, sorted by start
};

// Per-image scale vectors u^(i), each of length tokens_per_image.
struct ModulationSet {
    std::size_t tokens_per_image = 128;
    std::vector<std::vector<double>> vectors;
};

struct Heatmap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values; // row-major, in [0,1]
};

// S_k = (1/H) sum_h max_q A[h,q,k]. Parallel over keys; the serial variant
// is kept for testing (bitwise identical).
std::vector<double> image_attention_score(const AttentionWeights& weights);
std::vector<double> image_attention_score_serial(const AttentionWeights& weights);

// Min-max normalize to [0,1] and reshape row-major; constant input maps to
// all zeros.
Heatmap normalize_heatmap(const std::vector<double>& scores, std::size_t rows, std::size_t cols);

// f_j = (u^(i))_k inside image spans, 1.0 everywhere else (text excluded).
// Images consume modulation vectors in order; extra stored vectors are unused.
std::vector<double> build_scale_factors(const ModulationSet& mods,
                                        const ImageSpanMap& spans,
                                        std::size_t seq_len);

// S' = S diag(f): scale column j by f_j, before any softmax.
ScoreMatrix modulate_scores(const ScoreMatrix& scores, const std::vector<double>& factors);

// 8-bit binary PGM (P5, maxval 255, value = round(255*x)) and raw-float CSV.
void write_pgm(const Heatmap& map, const std::string& path);
void write_csv(const Heatmap& map, const std::string& path);

} // namespace mmi::attention
