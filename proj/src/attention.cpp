#include "mminduction/attention.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cmath>
#include <fstream>

#include "mminduction/error.hpp"

namespace mmi::attention {

namespace {

double aggregate_key(const AttentionWeights& w, std::size_t k) {
    double sum = 0;
    for (std::size_t h = 0; h < w.heads; ++h) {
        double best = w.at(h, 0, k);
        for (std::size_t q = 1; q < w.queries; ++q)
            best = std::max(best, w.at(h, q, k));
        sum += best;
    }
    return sum / static_cast<double>(w.heads);
}

std::vector<double> score_impl(const AttentionWeights& w, bool parallel) {
    if (w.heads == 0 || w.queries == 0 || w.keys == 0)
        throw Error("EmptyTensor", "attention tensor has an empty axis");
    std::vector<double> out(w.keys, 0.0);
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (long long k = 0; k < static_cast<long long>(w.keys); ++k)
            out[static_cast<std::size_t>(k)] = aggregate_key(w, static_cast<std::size_t>(k));
    } else {
        for (std::size_t k = 0; k < w.keys; ++k) out[k] = aggregate_key(w, k);
    }
    return out;
}

} // namespace

std::vector<double> image_attention_score(const AttentionWeights& weights) {
    return score_impl(weights, true);
}

std::vector<double> image_attention_score_serial(const AttentionWeights& weights) {
    return score_impl(weights, false);
}

Heatmap normalize_heatmap(const std::vector<double>& scores, std::size_t rows, std::size_t cols) {
    if (rows * cols != scores.size())
        throw Error("ShapeMismatch", "rows*cols=" + std::to_string(rows * cols) +
                    " but score length=" + std::to_string(scores.size()));
    Heatmap map;
    map.rows = rows;
    map.cols = cols;
    map.values.assign(scores.size(), 0.0);
    const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi > lo) {
        const double span = hi - lo;
        for (std::size_t i = 0; i < scores.size(); ++i)
            map.values[i] = (scores[i] - lo) / span;
    }
    return map;
}

std::vector<double> build_scale_factors(const ModulationSet& mods,
                                        const ImageSpanMap& spans,
                                        std::size_t seq_len) {
    if (spans.spans.size() > mods.vectors.size())
        throw Error("TooManyImages", std::to_string(spans.spans.size()) +
                    " spans but only " + std::to_string(mods.vectors.size()) + " vectors");
    std::vector<double> f(seq_len, 1.0);
    for (std::size_t i = 0; i < spans.spans.size(); ++i) {
        const auto& span = spans.spans[i];
        if (span.end > seq_len || span.start > span.end)
            throw Error("SpanOutOfRange", "span [" + std::to_string(span.start) + "," +
                        std::to_string(span.end) + ") outside sequence of " + std::to_string(seq_len));
        const auto& u = mods.vectors[i]; // first K vectors, in order
        if (span.end - span.start != u.size())
            throw Error("SpanLengthMismatch", "span length " + std::to_string(span.end - span.start) +
                        " != vector length " + std::to_string(u.size()));
        for (std::size_t k = 0; k < u.size(); ++k) f[span.start + k] = u[k];
    }
    return f;
}

ScoreMatrix modulate_scores(const ScoreMatrix& scores, const std::vector<double>& factors) {
    if (factors.size() != scores.cols)
        throw Error("ShapeMismatch", "factor length " + std::to_string(factors.size()) +
                    " != key count " + std::to_string(scores.cols));
    ScoreMatrix out = scores;
    for (std::size_t q = 0; q < out.rows; ++q)
        for (std::size_t j = 0; j < out.cols; ++j)
            out.at(q, j) = scores.at(q, j) * factors[j];
    return out;
}

void write_pgm(const Heatmap& map, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IoError", "cannot open " + path);
    out << "P5\n" << map.cols << " " << map.rows << "\n255\n";
    for (double v : map.values) {
        const auto byte = static_cast<unsigned char>(std::lround(255.0 * v));
        out.put(static_cast<char>(byte));
    }
}

void write_csv(const Heatmap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("IoError", "cannot open " + path);
    char buf[64];
    for (std::size_t r = 0; r < map.rows; ++r) {
        for (std::size_t c = 0; c < map.cols; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", map.values[r * map.cols + c]);
            out << (c ? "," : "") << buf;
        }
        out << "\n";
    }
}

} // namespace mmi::attention
