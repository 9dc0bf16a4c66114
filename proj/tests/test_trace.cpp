#include "doctest.h"

#include <string>
#include <vector>

#include "mminduction/error.hpp"
#include "mminduction/rng.hpp"
#include "mminduction/trace.hpp"
#include "test_util.hpp"
#include "trace_builders.hpp"

using namespace mmi;
using namespace mmi::trace;

namespace {

// The eight top-level tags; deleting any one must break the parse with a
// located diagnostic.
const std::vector<std::string> kTopLevelTags = {
    "<|begin_of_target_analysis|>", "<|end_of_target_analysis|>",
    "<|begin_of_reference_analysis|>", "<|end_of_reference_analysis|>",
    "<|begin_of_induction|>", "<|end_of_induction|>",
    "<|begin_of_answer|>", "<|end_of_answer|>"};

std::string erase_first(std::string text, const std::string& needle) {
    const auto pos = text.find(needle);
    REQUIRE(pos != std::string::npos);
    return text.erase(pos, needle.size());
}

// A varied corpus of structurally valid traces (≥20 entries).
std::vector<ReasoningTrace> build_corpus() {
    using J = Judgment;
    std::vector<ReasoningTrace> corpus;
    corpus.push_back(make_trace({J::Helpful}, {1}, "42", "single"));
    corpus.push_back(make_trace({J::Unhelpful}, {}, "none", "single"));
    corpus.push_back(make_trace({J::Helpful, J::Unhelpful}, {1}, "left", "pair"));
    corpus.push_back(make_trace({J::Unhelpful, J::Helpful}, {2}, "right", "pair"));
    corpus.push_back(make_trace({J::Helpful, J::Helpful}, {1, 2}, "both", "pair"));
    corpus.push_back(make_trace({J::Unhelpful, J::Unhelpful}, {}, "neither", "pair"));
    corpus.push_back(make_trace({J::Helpful, J::Unhelpful, J::Helpful}, {1, 3}, "blue", "color"));
    corpus.push_back(make_trace({J::Helpful, J::Helpful, J::Helpful}, {1, 2, 3}, "B", "choice"));
    corpus.push_back(make_trace({J::Unhelpful, J::Helpful, J::Unhelpful}, {2}, "False", "boolean"));
    corpus.push_back(make_trace({J::Helpful, J::Helpful, J::Unhelpful}, {1, 2}, "triangle", "shape"));
    // citing more than the helpful set, or fewer, is grammatically legal
    corpus.push_back(make_trace({J::Helpful, J::Unhelpful, J::Unhelpful}, {1, 2, 3}, "7", "count"));
    corpus.push_back(make_trace({J::Helpful, J::Helpful, J::Helpful}, {}, "red", "color"));
    corpus.push_back(make_trace({J::Helpful, J::Unhelpful, J::Helpful, J::Unhelpful}, {1, 3}, "D", "choice"));
    corpus.push_back(make_trace({J::Unhelpful, J::Unhelpful, J::Unhelpful, J::Unhelpful}, {}, "empty", "quad"));
    corpus.push_back(make_trace({J::Helpful, J::Helpful, J::Helpful, J::Helpful, J::Helpful},
                                {1, 2, 3, 4, 5}, "True", "five"));
    corpus.push_back(make_trace({J::Helpful, J::Unhelpful, J::Unhelpful, J::Helpful, J::Unhelpful},
                                {1, 4}, "circle", "five"));
    corpus.push_back(make_trace({J::Helpful}, {1}, "a phrase with spaces", "prose"));
    corpus.push_back(make_trace({J::Unhelpful, J::Helpful}, {2}, "answer, with punctuation.", "prose"));
    corpus.push_back(make_trace({J::Helpful, J::Helpful, J::Unhelpful}, {2}, "12.5", "numeric"));
    corpus.push_back(make_trace({J::Unhelpful, J::Helpful, J::Helpful}, {2, 3}, "yes", "binary"));
    corpus.push_back(make_trace({J::Helpful, J::Unhelpful}, {1}, "[bracketed] value", "edge"));
    corpus.push_back(make_trace({J::Helpful, J::Helpful}, {1, 2}, "multi word final result", "edge"));
    return corpus;
}

} // namespace

TEST_CASE("round-trip: parse after serialize is structural identity") {
    const auto corpus = build_corpus();
    CHECK(corpus.size() >= 20);
    for (const auto& t : corpus) {
        const std::string text = serialize_trace(t);
        const auto parsed = parse_trace(text);
        REQUIRE_MESSAGE(parsed.ok(), "parse failed on: " << text);
        CHECK(*parsed.trace == t);
        // canonical form is a fixed point
        CHECK(serialize_trace(*parsed.trace) == text);
    }
}

TEST_CASE("case-study fixtures parse with the expected final results") {
    struct Expect {
        const char* file;
        const char* final_result;
    };
    const Expect fixtures[] = {
        {"trace_vqa_blue.txt", "blue"},
        {"trace_mmiq_b.txt", "B"},
        {"trace_mami_false.txt", "False"},
    };
    for (const auto& f : fixtures) {
        const std::string text = read_fixture(f.file);
        const auto parsed = parse_trace(text);
        REQUIRE_MESSAGE(parsed.ok(), f.file << " failed to parse");
        CHECK(parsed.trace->case_analyses.size() == 3);
        CHECK(extract_final_answer(*parsed.trace) == f.final_result);
        CHECK(parsed.trace->induction.cited_case_ids == std::set<int>{1, 2, 3});
        for (const auto& c : parsed.trace->case_analyses)
            CHECK(c.judgment == Judgment::Helpful);
        // tolerant parse then strict serialize is idempotent
        const std::string canon = serialize_trace(*parsed.trace);
        const auto reparsed = parse_trace(canon);
        REQUIRE(reparsed.ok());
        CHECK(*reparsed.trace == *parsed.trace);
        CHECK(serialize_trace(*reparsed.trace) == canon);
    }
}

TEST_CASE("single-tag deletion mutants are rejected with located diagnostics") {
    const std::string text = serialize_trace(
        make_trace({Judgment::Helpful, Judgment::Unhelpful, Judgment::Helpful}, {1, 3}, "blue"));
    for (const auto& tag : kTopLevelTags) {
        const std::string mutant = erase_first(text, tag);
        const auto parsed = parse_trace(mutant);
        CHECK_FALSE(parsed.ok());
        REQUIRE_FALSE(parsed.diagnostics.empty());
        const auto& d = parsed.diagnostics.front();
        CHECK_FALSE(d.code.empty());
        CHECK(d.byte_offset <= mutant.size());
        CHECK_FALSE(d.message.empty());
    }
    // case-level tags too
    for (const std::string tag : {"<|begin_of_case_2_analysis|>", "<|end_of_case_2_analysis|>",
                                  "<|begin_of_helpful_judgment|>", "<|end_of_helpful_judgment|>"}) {
        const auto parsed = parse_trace(erase_first(text, tag));
        CHECK_FALSE(parsed.ok());
        CHECK_FALSE(parsed.diagnostics.empty());
    }
}

TEST_CASE("tolerant parsing") {
    SUBCASE("blank lines and case-insensitive judgments") {
        std::string text = serialize_trace(make_trace({Judgment::Helpful}, {1}, "x"));
        // inflate whitespace and capitalize a judgment
        const auto jpos = text.find(">helpful<");
        text.replace(jpos + 1, 7, "Helpful");
        std::string padded;
        for (char c : text) {
            padded += c;
            if (c == '\n') padded += '\n';
        }
        const auto parsed = parse_trace(padded);
        REQUIRE(parsed.ok());
        CHECK(parsed.trace->case_analyses[0].judgment == Judgment::Helpful);
    }
    SUBCASE("space-spelled citations canonicalize to underscores") {
        std::string text = serialize_trace(make_trace({Judgment::Helpful, Judgment::Helpful},
                                                      {1, 2}, "x"));
        const auto pos = text.find("<|case_1|>");
        text.replace(pos, 10, "<|case 1|>");
        const auto parsed = parse_trace(text);
        REQUIRE(parsed.ok());
        CHECK(parsed.trace->induction.cited_case_ids == std::set<int>{1, 2});
        CHECK(serialize_trace(*parsed.trace).find("<|case_1|>") != std::string::npos);
    }
}

TEST_CASE("structural diagnostics") {
    const std::string base = serialize_trace(
        make_trace({Judgment::Helpful, Judgment::Unhelpful}, {1}, "x"));

    SUBCASE("case count mismatch") {
        const auto parsed = parse_trace(base, 3);
        CHECK_FALSE(parsed.ok());
        CHECK(parsed.diagnostics.front().code == "CaseCountMismatch");
        CHECK(parse_trace(base, 2).ok());
    }
    SUBCASE("invalid judgment verdict") {
        std::string text = base;
        const auto pos = text.find("unhelpful");
        text.replace(pos, 9, "maybe");
        const auto parsed = parse_trace(text);
        CHECK_FALSE(parsed.ok());
        CHECK(parsed.diagnostics.front().code == "InvalidJudgment");
    }
    SUBCASE("duplicate case index") {
        std::string text = base;
        // relabel case 2 as another case 1
        std::size_t pos;
        while ((pos = text.find("case_2")) != std::string::npos) text.replace(pos, 6, "case_1");
        const auto parsed = parse_trace(text);
        CHECK_FALSE(parsed.ok());
        CHECK(parsed.diagnostics.front().code == "DuplicateCaseIndex");
    }
    SUBCASE("out-of-order case index") {
        std::string text = base;
        std::size_t pos;
        while ((pos = text.find("case_2")) != std::string::npos) text.replace(pos, 6, "case_3");
        const auto parsed = parse_trace(text);
        CHECK_FALSE(parsed.ok());
        CHECK(parsed.diagnostics.front().code == "OutOfOrderSection");
    }
    SUBCASE("citation outside the case range") {
        std::string text = serialize_trace(make_trace({Judgment::Helpful}, {1}, "x"));
        const auto pos = text.find("<|case_1|>");
        text.replace(pos, 10, "<|case_5|>");
        const auto parsed = parse_trace(text);
        CHECK_FALSE(parsed.ok());
        CHECK(parsed.diagnostics.front().code == "CitationOutOfRange");
    }
    SUBCASE("empty final result") {
        ReasoningTrace t = make_trace({Judgment::Helpful}, {1}, "placeholder");
        std::string text = serialize_trace(t);
        const auto pos = text.find("placeholder");
        text.replace(pos, 11, "");
        CHECK_FALSE(parse_trace(text).ok());
    }
}

TEST_CASE("serialize_trace rejects invalid structures") {
    CHECK_THROWS_AS(serialize_trace(ReasoningTrace{}), Error); // no cases
    ReasoningTrace t = make_trace({Judgment::Helpful}, {1}, "x");
    t.case_analyses[0].index = 2;
    CHECK_THROWS_AS(serialize_trace(t), Error); // non-contiguous index
    t = make_trace({Judgment::Helpful}, {3}, "x");
    CHECK_THROWS_AS(serialize_trace(t), Error); // citation out of range
    t = make_trace({Judgment::Helpful}, {1}, "  ");
    CHECK_THROWS_AS(serialize_trace(t), Error); // blank final result
}

TEST_CASE("citation extraction and answer normalization") {
    CHECK(extract_citations("<|case_1|>, <|case 3|> and <|case_3|>") == std::set<int>{1, 3});
    CHECK(extract_citations("no tags here").empty());
    CHECK(extract_citations("<|case_x|> malformed").empty());

    CHECK(normalize_answer("  Blue.  ") == "blue");
    CHECK(normalize_answer("FALSE!?") == "false");
    CHECK(normalize_answer("b") == "b");
    CHECK(normalize_answer("answer . ") == "answer");

    const auto t = make_trace({Judgment::Helpful}, {1}, "  Blue. ");
    CHECK(extract_final_answer(t) == "Blue.");
    CHECK(extract_final_answer(t, true) == "blue");
}

TEST_CASE("randomized round-trips stay stable") {
    Rng rng(101);
    for (int rep = 0; rep < 50; ++rep) {
        const int n = 1 + static_cast<int>(rng.next_below(5));
        std::vector<Judgment> judgments;
        std::set<int> cited;
        for (int i = 0; i < n; ++i) {
            judgments.push_back(rng.next_below(2) ? Judgment::Helpful : Judgment::Unhelpful);
            if (rng.next_below(2)) cited.insert(i + 1);
        }
        const auto t = make_trace(judgments, cited, "r" + std::to_string(rep));
        const std::string text = serialize_trace(t);
        const auto parsed = parse_trace(text, n);
        REQUIRE(parsed.ok());
        CHECK(*parsed.trace == t);
        CHECK(serialize_trace(*parsed.trace) == text);
    }
}
