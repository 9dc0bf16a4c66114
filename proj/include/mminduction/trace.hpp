#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mmi::trace {

enum class Judgment { Helpful, Unhelpful };

struct TargetAnalysis {
    std::string core_task;
    std::string key_visuals;
    std::string required_logic;
    bool operator==(const TargetAnalysis&) const = default;
};

struct CaseAnalysis {
    int index = 0; // 1-based, contiguous in order
    std::string elements;
    std::string solution_logic;
    std::string comparison;
    Judgment judgment = Judgment::Helpful;
    bool operator==(const CaseAnalysis&) const = default;
};

struct Induction {
    std::set<int> cited_case_ids;
    std::string extracted_rule;
    bool operator==(const Induction&) const = default;
};

struct Answer {
    std::string application;
    std::string final_result; // nonempty
    bool operator==(const Answer&) const = default;
};

// Structured parse of the three-stage reasoning template: target analysis,
// per-case judgments, rule induction with citations, final answer.
struct ReasoningTrace {
    TargetAnalysis target_analysis;
    std::vector<CaseAnalysis> case_analyses;
    Induction induction;
    Answer answer;
    bool operator==(const ReasoningTrace&) const = default;
};

struct Diagnostic {
    std::string code;
    std::size_t byte_offset = 0;
    std::string message;
};

struct ParseResult {
    std::optional<ReasoningTrace> trace;
    std::vector<Diagnostic> diagnostics; // nonempty iff parse failed
    bool ok() const { return trace.has_value(); }
};

// Tolerant parse: arbitrary whitespace between sections, case-insensitive
// judgments, both "<|case N|>" and "<|case_N|>" citation spellings.
// Sections must appear in template order.
ParseResult parse_trace(std::string_view text, std::optional<int> expected_case_count = std::nullopt);

// Canonical template text: single-newline separators, underscore citations,
// lowercase judgments. parse_trace(serialize_trace(t)) reconstructs t.
// Throws Error("InvariantViolation", ...) on an invalid trace.
std::string serialize_trace(const ReasoningTrace& trace);

// Case ids cited via "<|case_N|>" / "<|case N|>" tags; unrecognized text
// yields the empty set.
std::set<int> extract_citations(std::string_view text);

std::string extract_final_answer(const ReasoningTrace& trace, bool normalize = false);

// Trim, lowercase, strip trailing punctuation. Used by the normalized
// answer comparator.
std::string normalize_answer(std::string_view text);

} // namespace mmi::trace
