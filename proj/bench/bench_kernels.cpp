// Timing comparison between the OpenMP kernels and their serial reference
// implementations. Also asserts bitwise agreement between the two paths,
// since that contract is what lets the tests pin exact outputs.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "mminduction/attention.hpp"
#include "mminduction/retrieval.hpp"
#include "mminduction/rng.hpp"
#include "mminduction/token_pruning.hpp"

using namespace mmi;

namespace {

template <typename Fn>
double time_best_of(int reps, Fn&& fn) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto start = std::chrono::steady_clock::now();
        fn();
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (seconds < best) best = seconds;
    }
    return best;
}

void print_row(const char* name, double parallel_s, double serial_s) {
    std::printf("%-24s parallel %9.4f ms   serial %9.4f ms   speedup %5.2fx\n", name,
                parallel_s * 1e3, serial_s * 1e3, serial_s / parallel_s);
}

void bench_prune(int reps) {
    Rng rng(1);
    pruning::TokenGrid grid;
    grid.tokens = Matrix(4096, 64);
    for (auto& v : grid.tokens.data) v = rng.next_double() * 2 - 1;
    pruning::PruneConfig config;
    config.regions = 16;
    config.budget = 1024;

    const auto parallel = pruning::prune(grid, config);
    const auto serial = pruning::prune_serial(grid, config);
    if (parallel.plan.selected != serial.plan.selected ||
        parallel.report.nu != serial.report.nu) {
        std::fprintf(stderr, "prune: parallel and serial paths disagree\n");
        std::exit(1);
    }

    const double tp = time_best_of(reps, [&] { (void)pruning::prune(grid, config); });
    const double ts = time_best_of(reps, [&] { (void)pruning::prune_serial(grid, config); });
    print_row("prune 4096x64 Z=16", tp, ts);
}

void bench_attention(int reps) {
    Rng rng(2);
    attention::AttentionWeights w;
    w.heads = 16;
    w.queries = 256;
    w.keys = 4096;
    w.values.resize(w.heads * w.queries * w.keys);
    for (auto& v : w.values) v = rng.next_double();

    if (attention::image_attention_score(w) != attention::image_attention_score_serial(w)) {
        std::fprintf(stderr, "attention: parallel and serial paths disagree\n");
        std::exit(1);
    }

    const double tp = time_best_of(reps, [&] { (void)attention::image_attention_score(w); });
    const double ts =
        time_best_of(reps, [&] { (void)attention::image_attention_score_serial(w); });
    print_row("attention 16x256x4096", tp, ts);
}

void bench_retrieval(int reps) {
    Rng rng(3);
    retrieval::KnowledgeBase kb;
    kb.dim = 256;
    char buf[16];
    for (int i = 0; i < 20000; ++i) {
        retrieval::KbItem item;
        std::snprintf(buf, sizeof buf, "kb%05d", i);
        item.id = buf;
        item.embedding.resize(kb.dim);
        for (auto& v : item.embedding) v = rng.next_double() * 2 - 1;
        kb.items.push_back(std::move(item));
    }
    std::vector<double> query(kb.dim);
    for (auto& v : query) v = rng.next_double() * 2 - 1;

    if (retrieval::scan_similarities(kb, query) != retrieval::scan_similarities_serial(kb, query)) {
        std::fprintf(stderr, "retrieval: parallel and serial paths disagree\n");
        std::exit(1);
    }

    const double tp = time_best_of(reps, [&] { (void)retrieval::scan_similarities(kb, query); });
    const double ts =
        time_best_of(reps, [&] { (void)retrieval::scan_similarities_serial(kb, query); });
    print_row("retrieval 20000x256", tp, ts);
}

} // namespace

int main(int argc, char** argv) {
    const int reps = argc > 1 ? std::atoi(argv[1]) : 5;
    std::printf("best of %d runs per kernel\n", reps);
    bench_prune(reps);
    bench_attention(reps);
    bench_retrieval(reps);
    return 0;
}
