#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "mminduction/rng.hpp"

namespace mmi::retrieval {

enum class Similarity { Cosine, Dot };

struct KbItem {
    std::string id;
    std::vector<double> embedding;
    nlohmann::json payload; // opaque metadata
};

struct KnowledgeBase {
    std::vector<KbItem> items; // ids unique, embeddings share one dimension
    std::size_t dim = 0;
};

struct RetrievalQuery {
    std::vector<double> embedding;
    std::size_t k = 0;
    std::set<std::string> exclude_ids;
};

struct ScoredItem {
    std::string id;
    double similarity = 0.0;
};

struct ContextSlot {
    std::string case_id;
    bool is_noise = false;
};

struct ContextAssembly {
    std::vector<ContextSlot> slots;
    int shot_count = 0;
};

// Cosine similarity with the zero-norm convention (similarity 0 against
// anything). Dot mode behind the flag.
double similarity(const std::vector<double>& a, const std::vector<double>& b, Similarity mode);

// Similarity of the query against every KB item, in item order. Parallel
// scan under OpenMP; the serial variant is kept for testing.
std::vector<double> scan_similarities(const KnowledgeBase& kb, const std::vector<double>& query,
                                      Similarity mode = Similarity::Cosine);
std::vector<double> scan_similarities_serial(const KnowledgeBase& kb, const std::vector<double>& query,
                                             Similarity mode = Similarity::Cosine);

// Top-k most similar items, descending similarity, ties by ascending id;
// excluded ids never appear.
std::vector<ScoredItem> topk_retrieve(const KnowledgeBase& kb, const RetrievalQuery& query,
                                      Similarity mode = Similarity::Cosine);

// The pool_size least similar item ids, ascending similarity, ties by
// ascending id.
std::vector<std::string> noise_pool(const KnowledgeBase& kb, const std::vector<double>& query,
                                    std::size_t pool_size, Similarity mode = Similarity::Cosine);

// m distinct ids drawn uniformly without replacement.
std::vector<std::string> sample_noise(const std::vector<std::string>& pool, std::size_t m, Rng& rng);

// Shot-structured context with noise cases at uniformly random slots.
// Noise counts per shot: 1->0, 2->1, 3->1, 4->1, 5->2.
ContextAssembly assemble_context(const std::vector<std::string>& helpful_ids,
                                 const std::vector<std::string>& noise_ids, Rng& rng);

// Line-delimited records: {"id": ..., "embedding": [...], "payload": {...}}.
// Inconsistent dimensions and duplicate ids are rejected with the line number.
KnowledgeBase load_kb(const std::string& path);

} // namespace mmi::retrieval
