// Command-line harness binding the library modules into pipelines.
// Exit codes: 0 success, 2 validation/input error, 1 internal error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "mminduction/attention.hpp"
#include "mminduction/error.hpp"
#include "mminduction/records.hpp"
#include "mminduction/retrieval.hpp"
#include "mminduction/reward.hpp"
#include "mminduction/rlvr_sim.hpp"
#include "mminduction/tensor_file.hpp"
#include "mminduction/token_pruning.hpp"
#include "mminduction/trace.hpp"

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw mmi::Error("IoError", "cannot open " + path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Flag beats the MMINDUCTION_SEED environment variable; the variable beats
// the built-in default.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
    if (flag) return *flag;
    if (const char* env = std::getenv("MMINDUCTION_SEED"))
        return std::strtoull(env, nullptr, 10);
    return fallback;
}

int run_prune(const std::string& input, std::size_t rows, std::size_t cols,
              std::size_t regions, std::size_t budget, double tau,
              const std::string& mode, const std::string& similarity,
              const std::string& out_path, const std::string& plan_path) {
    const mmi::io::TensorFile in = mmi::io::read_tensor(input);
    if (in.dims.size() != 2)
        throw mmi::Error("MalformedTensor", "prune expects a 2-D tensor, got ndim=" +
                         std::to_string(in.dims.size()));

    mmi::pruning::TokenGrid grid;
    grid.tokens = mmi::Matrix(in.dims[0], in.dims[1]);
    for (std::size_t i = 0; i < in.data.size(); ++i) grid.tokens.data[i] = in.data[i];
    if (rows && cols) grid.grid = {rows, cols};

    mmi::pruning::PruneConfig config;
    config.regions = regions;
    config.budget = budget;
    config.tau = tau;
    if (mode == "grid") config.partition_mode = mmi::pruning::PartitionMode::Grid;
    else if (mode == "linear") config.partition_mode = mmi::pruning::PartitionMode::Linear;
    else throw mmi::Error("BadConfig", "unknown partition mode " + mode);
    if (similarity == "dot") config.similarity_mode = mmi::pruning::SimilarityMode::Dot;
    else if (similarity == "cosine") config.similarity_mode = mmi::pruning::SimilarityMode::Cosine;
    else throw mmi::Error("BadConfig", "unknown similarity mode " + similarity);

    const auto result = mmi::pruning::prune(grid, config);

    mmi::io::TensorFile out;
    out.dims = {static_cast<std::uint64_t>(result.pruned.tokens.rows),
                static_cast<std::uint64_t>(result.pruned.tokens.cols)};
    out.data.resize(result.pruned.tokens.data.size());
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = static_cast<float>(result.pruned.tokens.data[i]);
    mmi::io::write_tensor(out, out_path);

    if (!plan_path.empty()) {
        std::ofstream plan(plan_path);
        if (!plan) throw mmi::Error("IoError", "cannot open " + plan_path);
        plan << mmi::records::to_json(result.plan, result.report).dump(2) << "\n";
    }
    return 0;
}

int run_heatmap(const std::string& attn_path, const std::string& spans_path,
                const std::string& prefix) {
    const mmi::io::TensorFile attn = mmi::io::read_tensor(attn_path);
    if (attn.dims.size() != 3)
        throw mmi::Error("MalformedTensor", "heatmap expects an HxQxK tensor");
    const auto spans = mmi::records::spans_from_json(json::parse(read_file(spans_path)));
    if (spans.spans.empty())
        throw mmi::Error("SpanOutOfRange", "span list is empty");

    const std::size_t heads = attn.dims[0], queries = attn.dims[1], keys = attn.dims[2];
    for (const auto& span : spans.spans) {
        if (span.end > keys)
            throw mmi::Error("SpanOutOfRange", "span " + span.image_id + " exceeds key count");
        mmi::attention::AttentionWeights slice;
        slice.heads = heads;
        slice.queries = queries;
        slice.keys = span.end - span.start;
        slice.values.resize(heads * queries * slice.keys);
        for (std::size_t h = 0; h < heads; ++h)
            for (std::size_t q = 0; q < queries; ++q)
                for (std::size_t k = 0; k < slice.keys; ++k)
                    slice.at(h, q, k) =
                        attn.data[(h * queries + q) * keys + span.start + k];
        const auto scores = mmi::attention::image_attention_score(slice);
        const auto map = mmi::attention::normalize_heatmap(scores, span.rows, span.cols);
        mmi::attention::write_pgm(map, prefix + "_" + span.image_id + ".pgm");
        mmi::attention::write_csv(map, prefix + "_" + span.image_id + ".csv");
    }
    return 0;
}

int run_score(const std::string& trace_path, const std::string& context_path,
              const std::string& weights_path) {
    const std::string text = read_file(trace_path);
    const auto spec = mmi::records::context_spec_from_json(json::parse(read_file(context_path)));
    mmi::reward::RewardWeights weights;
    if (!weights_path.empty()) {
        const auto cfg = mmi::records::load_run_config(weights_path);
        weights = cfg.weights;
    }
    const auto breakdown = mmi::reward::score(text, spec, weights);
    std::cout << mmi::records::to_json(breakdown).dump() << "\n";
    return 0; // scoring succeeded even when rewards are 0 or -1
}

int run_train_toy(const std::string& config_path, int iters,
                  const std::optional<std::uint64_t>& seed_flag, const std::string& out_path) {
    mmi::sim::TrainConfig config;
    if (!config_path.empty()) {
        const auto run = mmi::records::load_run_config(config_path);
        config.weights = run.weights;
        config.dapo = run.dapo;
        config.seed = run.seed ? run.seed : config.seed;
    }
    config.iterations = iters;
    config.seed = resolve_seed(seed_flag, config.seed);

    mmi::sim::TaskSampler sampler;
    auto policy = mmi::sim::ToyPolicy::zeros(sampler.shots, sampler.alphabet.size());
    const auto log = mmi::sim::train(policy, sampler, config);

    std::ofstream out(out_path);
    if (!out) throw mmi::Error("IoError", "cannot open " + out_path);
    out << log.to_csv();

    const std::size_t window = std::min<std::size_t>(50, log.records.size());
    if (window > 0) {
        double task = 0, helpful = 0, cite = 0, composite = 0;
        for (std::size_t i = log.records.size() - window; i < log.records.size(); ++i) {
            task += log.records[i].mean_r_task;
            helpful += log.records[i].mean_r_helpful;
            cite += log.records[i].mean_r_cite;
            composite += log.records[i].mean_composite;
        }
        const double n = static_cast<double>(window);
        std::cout << "final-window means over " << window << " iterations:"
                  << " r_task=" << task / n << " r_helpful=" << helpful / n
                  << " r_cite=" << cite / n << " composite=" << composite / n << "\n";
    }
    return 0;
}

int run_retrieve(const std::string& kb_path, const std::string& query_path, std::size_t k,
                 std::size_t noise, std::size_t pool,
                 const std::optional<std::uint64_t>& seed_flag) {
    const auto kb = mmi::retrieval::load_kb(kb_path);
    const mmi::io::TensorFile q = mmi::io::read_tensor(query_path);
    if (q.dims.size() != 1)
        throw mmi::Error("MalformedTensor", "query must be a 1-D tensor");
    std::vector<double> embedding(q.data.begin(), q.data.end());

    mmi::retrieval::RetrievalQuery query;
    query.embedding = embedding;
    query.k = k;
    const auto ranked = mmi::retrieval::topk_retrieve(kb, query);

    json out;
    out["results"] = json::array();
    for (const auto& item : ranked)
        out["results"].push_back({{"id", item.id}, {"similarity", item.similarity}});

    if (noise > 0) {
        mmi::Rng rng(resolve_seed(seed_flag, 0));
        if (pool == 0) pool = std::min(kb.items.size(), std::max<std::size_t>(noise, kb.items.size() / 4));
        const auto pool_ids = mmi::retrieval::noise_pool(kb, embedding, pool);
        const auto noise_ids = mmi::retrieval::sample_noise(pool_ids, noise, rng);
        std::vector<std::string> helpful_ids;
        for (const auto& item : ranked) helpful_ids.push_back(item.id);
        const auto assembly = mmi::retrieval::assemble_context(helpful_ids, noise_ids, rng);
        out["assembly"] = mmi::records::to_json(assembly);
    }
    std::cout << out.dump() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MMInduction toolkit: token pruning, attention heatmaps, reasoning-trace "
                 "rewards, retrieval, and the toy RLVR trainer"};
    app.require_subcommand(1);

    // prune
    auto* prune = app.add_subcommand("prune", "Similarity-guided visual token pruning");
    std::string prune_input, prune_out, prune_plan, prune_mode = "linear", prune_sim = "dot";
    std::size_t prune_rows = 0, prune_cols = 0, prune_regions = 16, prune_budget = 128;
    double prune_tau = 1.0;
    prune->add_option("--input", prune_input, "input 2-D tensor file")->required();
    prune->add_option("--rows", prune_rows, "patch grid rows");
    prune->add_option("--cols", prune_cols, "patch grid cols");
    prune->add_option("--regions", prune_regions, "spatial region count Z (default 16)");
    prune->add_option("--budget", prune_budget, "retained token budget (default 128)");
    prune->add_option("--tau", prune_tau, "allocation sharpness (default 1.0)");
    prune->add_option("--mode", prune_mode, "partition mode: linear|grid (default linear)");
    prune->add_option("--similarity", prune_sim, "similarity mode: dot|cosine (default dot)");
    prune->add_option("--out", prune_out, "output tensor file")->required();
    prune->add_option("--plan", prune_plan, "retention plan record (JSON)");

    // heatmap
    auto* heatmap = app.add_subcommand("heatmap", "Per-image attention heatmaps (PGM + CSV)");
    std::string heat_attn, heat_spans, heat_prefix;
    heatmap->add_option("--attn", heat_attn, "HxQxK post-softmax attention tensor")->required();
    heatmap->add_option("--spans", heat_spans, "image span record (JSON)")->required();
    heatmap->add_option("--out-prefix", heat_prefix, "output path prefix")->required();

    // score
    auto* score = app.add_subcommand("score", "Rule-based rewards for a reasoning trace");
    std::string score_trace, score_context, score_weights;
    score->add_option("--trace", score_trace, "trace template text file")->required();
    score->add_option("--context", score_context, "context spec record (JSON)")->required();
    score->add_option("--weights", score_weights, "reward weight config (JSON)");

    // train-toy
    auto* train = app.add_subcommand("train-toy", "Synthetic RLVR training loop");
    std::string train_config, train_out;
    int train_iters = 500;
    std::optional<std::uint64_t> train_seed;
    train->add_option("--config", train_config, "run config (JSON)");
    train->add_option("--iters", train_iters, "iteration count (default 500)");
    train->add_option("--seed", train_seed, "RNG seed (beats MMINDUCTION_SEED)");
    train->add_option("--out", train_out, "output CSV path")->required();

    // retrieve
    auto* retrieve = app.add_subcommand("retrieve", "Top-k retrieval and context assembly");
    std::string ret_kb, ret_query;
    std::size_t ret_k = 1, ret_noise = 0, ret_pool = 0;
    std::optional<std::uint64_t> ret_seed;
    retrieve->add_option("--kb", ret_kb, "knowledge base (JSON lines)")->required();
    retrieve->add_option("--query", ret_query, "query embedding (1-D tensor)")->required();
    retrieve->add_option("--k", ret_k, "number of results")->required();
    retrieve->add_option("--noise", ret_noise, "noise cases to sample");
    retrieve->add_option("--pool", ret_pool, "noise pool size (default |kb|/4)");
    retrieve->add_option("--seed", ret_seed, "RNG seed (beats MMINDUCTION_SEED)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        if (prune->parsed())
            return run_prune(prune_input, prune_rows, prune_cols, prune_regions, prune_budget,
                             prune_tau, prune_mode, prune_sim, prune_out, prune_plan);
        if (heatmap->parsed()) return run_heatmap(heat_attn, heat_spans, heat_prefix);
        if (score->parsed()) return run_score(score_trace, score_context, score_weights);
        if (train->parsed()) return run_train_toy(train_config, train_iters, train_seed, train_out);
        if (retrieve->parsed())
            return run_retrieve(ret_kb, ret_query, ret_k, ret_noise, ret_pool, ret_seed);
    } catch (const mmi::Error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "MalformedRecord: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
