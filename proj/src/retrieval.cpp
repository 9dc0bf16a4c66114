#include "mminduction/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "mminduction/error.hpp"

namespace mmi::retrieval {

double similarity(const std::vector<double>& a, const std::vector<double>& b, Similarity mode) {
    if (a.size() != b.size())
        throw Error("DimensionMismatch", "embedding dimensions differ");
    double dot = 0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    if (mode == Similarity::Dot) return dot;
    double na = 0, nb = 0;
    for (double v : a) na += v * v;
    for (double v : b) nb += v * v;
    if (na == 0 || nb == 0) return 0.0; // zero-norm convention
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

std::vector<double> scan_impl(const KnowledgeBase& kb, const std::vector<double>& query,
                              Similarity mode, bool parallel) {
    if (query.size() != kb.dim)
        throw Error("DimensionMismatch", "query dimension " + std::to_string(query.size()) +
                    " != kb dimension " + std::to_string(kb.dim));
    std::vector<double> sims(kb.items.size());
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(kb.items.size()); ++i)
            sims[static_cast<std::size_t>(i)] =
                similarity(kb.items[static_cast<std::size_t>(i)].embedding, query, mode);
    } else {
        for (std::size_t i = 0; i < kb.items.size(); ++i)
            sims[i] = similarity(kb.items[i].embedding, query, mode);
    }
    return sims;
}

} // namespace

std::vector<double> scan_similarities(const KnowledgeBase& kb, const std::vector<double>& query,
                                      Similarity mode) {
    return scan_impl(kb, query, mode, true);
}

std::vector<double> scan_similarities_serial(const KnowledgeBase& kb, const std::vector<double>& query,
                                             Similarity mode) {
    return scan_impl(kb, query, mode, false);
}

std::vector<ScoredItem> topk_retrieve(const KnowledgeBase& kb, const RetrievalQuery& query,
                                      Similarity mode) {
    const std::vector<double> sims = scan_similarities(kb, query.embedding, mode);
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < kb.items.size(); ++i)
        if (!query.exclude_ids.contains(kb.items[i].id)) order.push_back(i);
    if (query.k > order.size())
        throw Error("InsufficientItems", "k=" + std::to_string(query.k) + " but only " +
                    std::to_string(order.size()) + " eligible items");
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (sims[a] != sims[b]) return sims[a] > sims[b];
        return kb.items[a].id < kb.items[b].id;
    });
    std::vector<ScoredItem> out;
    for (std::size_t i = 0; i < query.k; ++i)
        out.push_back({kb.items[order[i]].id, sims[order[i]]});
    return out;
}

std::vector<std::string> noise_pool(const KnowledgeBase& kb, const std::vector<double>& query,
                                    std::size_t pool_size, Similarity mode) {
    if (pool_size > kb.items.size())
        throw Error("InsufficientItems", "pool size exceeds knowledge base");
    const std::vector<double> sims = scan_similarities(kb, query, mode);
    std::vector<std::size_t> order(kb.items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (sims[a] != sims[b]) return sims[a] < sims[b];
        return kb.items[a].id < kb.items[b].id;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < pool_size; ++i) out.push_back(kb.items[order[i]].id);
    return out;
}

std::vector<std::string> sample_noise(const std::vector<std::string>& pool, std::size_t m, Rng& rng) {
    if (m > pool.size())
        throw Error("PoolTooSmall", "cannot draw " + std::to_string(m) + " from pool of " +
                    std::to_string(pool.size()));
    std::vector<std::string> out;
    for (std::size_t idx : rng.sample_indices(pool.size(), m)) out.push_back(pool[idx]);
    return out;
}

ContextAssembly assemble_context(const std::vector<std::string>& helpful_ids,
                                 const std::vector<std::string>& noise_ids, Rng& rng) {
    const std::size_t shots = helpful_ids.size() + noise_ids.size();
    std::size_t expected_noise;
    switch (shots) {
        case 1: expected_noise = 0; break;
        case 2: expected_noise = 1; break;
        case 3: expected_noise = 1; break;
        case 4: expected_noise = 1; break;
        case 5: expected_noise = 2; break;
        default:
            throw Error("ShotRuleViolation", "unsupported shot count " + std::to_string(shots));
    }
    if (noise_ids.size() != expected_noise)
        throw Error("ShotRuleViolation", std::to_string(shots) + "-shot context requires " +
                    std::to_string(expected_noise) + " noise cases, got " +
                    std::to_string(noise_ids.size()));
    for (const auto& id : noise_ids)
        if (std::find(helpful_ids.begin(), helpful_ids.end(), id) != helpful_ids.end())
            throw Error("ShotRuleViolation", "id " + id + " is both helpful and noise");

    std::vector<std::size_t> noise_slots = rng.sample_indices(shots, noise_ids.size());
    std::sort(noise_slots.begin(), noise_slots.end());

    ContextAssembly out;
    out.shot_count = static_cast<int>(shots);
    out.slots.resize(shots);
    std::size_t h = 0, m = 0;
    for (std::size_t i = 0; i < shots; ++i) {
        if (m < noise_slots.size() && noise_slots[m] == i) {
            out.slots[i] = {noise_ids[m], true};
            ++m;
        } else {
            out.slots[i] = {helpful_ids[h], false};
            ++h;
        }
    }
    return out;
}

KnowledgeBase load_kb(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot open " + path);
    KnowledgeBase kb;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error("KbParseError", "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!record.contains("id") || !record.contains("embedding"))
            throw Error("KbParseError", "line " + std::to_string(line_no) + ": missing id or embedding");
        KbItem item;
        item.id = record["id"].get<std::string>();
        item.embedding = record["embedding"].get<std::vector<double>>();
        item.payload = record.value("payload", nlohmann::json::object());
        if (kb.items.empty()) {
            kb.dim = item.embedding.size();
        } else if (item.embedding.size() != kb.dim) {
            throw Error("KbParseError", "line " + std::to_string(line_no) +
                        ": embedding dimension " + std::to_string(item.embedding.size()) +
                        " != " + std::to_string(kb.dim));
        }
        if (!seen.insert(item.id).second)
            throw Error("KbParseError", "line " + std::to_string(line_no) + ": duplicate id " + item.id);
        kb.items.push_back(std::move(item));
    }
    if (kb.items.empty())
        throw Error("KbParseError", "knowledge base is empty");
    return kb;
}

} // namespace mmi::retrieval
