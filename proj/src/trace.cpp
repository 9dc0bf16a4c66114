#include "mminduction/trace.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>

#include "mminduction/error.hpp"

namespace mmi::trace {

namespace {

constexpr std::string_view kBeginTarget = "<|begin_of_target_analysis|>";
constexpr std::string_view kEndTarget = "<|end_of_target_analysis|>";
constexpr std::string_view kBeginReference = "<|begin_of_reference_analysis|>";
constexpr std::string_view kEndReference = "<|end_of_reference_analysis|>";
constexpr std::string_view kBeginInduction = "<|begin_of_induction|>";
constexpr std::string_view kEndInduction = "<|end_of_induction|>";
constexpr std::string_view kBeginAnswer = "<|begin_of_answer|>";
constexpr std::string_view kEndAnswer = "<|end_of_answer|>";
constexpr std::string_view kBeginJudgment = "<|begin_of_helpful_judgment|>";
constexpr std::string_view kEndJudgment = "<|end_of_helpful_judgment|>";

std::string_view trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

struct Parser {
    std::string_view text;
    std::vector<Diagnostic> diags;

    void fail(std::string code, std::size_t offset, std::string message) {
        diags.push_back({std::move(code), offset, std::move(message)});
    }

    // Locate the eight top-level section tags and check template order.
    // Returns false (with a diagnostic) on the first missing or misplaced tag.
    bool locate(const std::vector<std::string_view>& tags,
                const std::vector<std::string>& names,
                std::vector<std::size_t>& pos) {
        pos.resize(tags.size());
        for (std::size_t i = 0; i < tags.size(); ++i) {
            const auto p = text.find(tags[i]);
            if (p == std::string_view::npos) {
                fail("MissingSection", text.size(), "missing tag " + std::string(tags[i]) +
                     " (" + names[i] + ")");
                return false;
            }
            pos[i] = p;
            if (i > 0 && pos[i] < pos[i - 1] + tags[i - 1].size()) {
                fail("OutOfOrderSection", p, std::string(tags[i]) + " appears before " +
                     std::string(tags[i - 1]));
                return false;
            }
        }
        return true;
    }

    // Ordered known fields within a section body; value runs to the next
    // known label (unknown bracketed text stays inside the previous value).
    bool parse_fields(std::string_view body, std::size_t body_offset,
                      const std::vector<std::string>& labels,
                      std::vector<std::string>& values) {
        std::vector<std::size_t> starts(labels.size());
        std::size_t cursor = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const auto p = body.find(labels[i], cursor);
            if (p == std::string_view::npos) {
                fail("MissingSection", body_offset + cursor, "missing field " + labels[i]);
                return false;
            }
            starts[i] = p;
            cursor = p + labels[i].size();
        }
        values.resize(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const std::size_t vbegin = starts[i] + labels[i].size();
            const std::size_t vend = i + 1 < labels.size() ? starts[i + 1] : body.size();
            values[i] = std::string(trim(body.substr(vbegin, vend - vbegin)));
        }
        return true;
    }
};

} // namespace

std::set<int> extract_citations(std::string_view text) {
    static const std::regex pattern(R"(<\|case[ _](\d+)\|>)");
    std::set<int> ids;
    auto begin = std::cregex_iterator(text.data(), text.data() + text.size(), pattern);
    for (auto it = begin; it != std::cregex_iterator(); ++it)
        ids.insert(std::stoi((*it)[1].str()));
    return ids;
}

ParseResult parse_trace(std::string_view text, std::optional<int> expected_case_count) {
    Parser p{text, {}};
    ParseResult result;

    std::vector<std::size_t> pos;
    const std::vector<std::string_view> tags = {
        kBeginTarget, kEndTarget, kBeginReference, kEndReference,
        kBeginInduction, kEndInduction, kBeginAnswer, kEndAnswer};
    const std::vector<std::string> names = {
        "target_analysis", "target_analysis", "reference_analysis", "reference_analysis",
        "induction", "induction", "answer", "answer"};
    if (!p.locate(tags, names, pos)) {
        result.diagnostics = std::move(p.diags);
        return result;
    }

    ReasoningTrace trace;

    // Target analysis
    {
        const std::size_t begin = pos[0] + kBeginTarget.size();
        std::string_view body = text.substr(begin, pos[1] - begin);
        std::vector<std::string> values;
        if (!p.parse_fields(body, begin, {"[Core Task]:", "[Key Visuals]:", "[Required Logic]:"}, values)) {
            result.diagnostics = std::move(p.diags);
            return result;
        }
        trace.target_analysis = {values[0], values[1], values[2]};
    }

    // Reference analysis: case blocks, indices 1..n contiguous in order.
    {
        const std::size_t ref_begin = pos[2] + kBeginReference.size();
        std::string_view body = text.substr(ref_begin, pos[3] - ref_begin);
        std::size_t cursor = 0;
        int next_index = 1;
        while (true) {
            const auto bpos = body.find("<|begin_of_case_", cursor);
            if (bpos == std::string_view::npos) break;
            std::size_t dpos = bpos + 16;
            std::size_t dend = dpos;
            while (dend < body.size() && std::isdigit(static_cast<unsigned char>(body[dend]))) ++dend;
            if (dend == dpos || body.compare(dend, 11, "_analysis|>") != 0) {
                p.fail("MissingSection", ref_begin + bpos, "malformed case begin tag");
                break;
            }
            const int index = std::stoi(std::string(body.substr(dpos, dend - dpos)));
            if (index < next_index) {
                p.fail("DuplicateCaseIndex", ref_begin + bpos,
                       "case index " + std::to_string(index) + " repeats or goes backward");
                break;
            }
            if (index > next_index) {
                p.fail("OutOfOrderSection", ref_begin + bpos,
                       "expected case " + std::to_string(next_index) + ", found " + std::to_string(index));
                break;
            }
            const std::string end_tag = "<|end_of_case_" + std::to_string(index) + "_analysis|>";
            const std::size_t block_begin = dend + 11;
            const auto epos = body.find(end_tag, block_begin);
            if (epos == std::string_view::npos) {
                p.fail("MissingSection", ref_begin + bpos, "missing " + end_tag);
                break;
            }
            std::string_view block = body.substr(block_begin, epos - block_begin);

            // Judgment tags come after the three text fields; carve them out
            // first so field values stop at the judgment.
            const auto jb = block.find(kBeginJudgment);
            const auto je = block.find(kEndJudgment);
            if (jb == std::string_view::npos || je == std::string_view::npos || je < jb) {
                p.fail("MissingSection", ref_begin + block_begin,
                       "case " + std::to_string(index) + " lacks a helpful judgment");
                break;
            }
            std::string_view fields_part = block.substr(0, jb);
            std::vector<std::string> values;
            if (!p.parse_fields(fields_part, ref_begin + block_begin,
                                {"[Elements]:", "[Solution Logic]:", "[Comparison]:"}, values))
                break;

            const std::size_t jcontent = jb + kBeginJudgment.size();
            const std::string verdict = lower(trim(block.substr(jcontent, je - jcontent)));
            Judgment judgment;
            if (verdict == "helpful") {
                judgment = Judgment::Helpful;
            } else if (verdict == "unhelpful") {
                judgment = Judgment::Unhelpful;
            } else {
                p.fail("InvalidJudgment", ref_begin + block_begin + jcontent,
                       "judgment \"" + verdict + "\" is neither helpful nor unhelpful");
                break;
            }
            trace.case_analyses.push_back({index, values[0], values[1], values[2], judgment});
            ++next_index;
            cursor = epos + end_tag.size();
        }
        if (!p.diags.empty()) {
            result.diagnostics = std::move(p.diags);
            return result;
        }
        if (trace.case_analyses.empty()) {
            result.diagnostics.push_back({"MissingSection", ref_begin, "no case analyses found"});
            return result;
        }
    }

    const int case_count = static_cast<int>(trace.case_analyses.size());
    if (expected_case_count && *expected_case_count != case_count) {
        result.diagnostics.push_back({"CaseCountMismatch", pos[2],
                                      "expected " + std::to_string(*expected_case_count) +
                                      " cases, found " + std::to_string(case_count)});
        return result;
    }

    // Induction
    {
        const std::size_t begin = pos[4] + kBeginInduction.size();
        std::string_view body = text.substr(begin, pos[5] - begin);
        std::vector<std::string> values;
        if (!p.parse_fields(body, begin, {"[Helpful Cases Cited]:", "[Extracted Rule]:"}, values)) {
            result.diagnostics = std::move(p.diags);
            return result;
        }
        trace.induction.cited_case_ids = extract_citations(values[0]);
        trace.induction.extracted_rule = values[1];
        for (int id : trace.induction.cited_case_ids)
            if (id < 1 || id > case_count) {
                result.diagnostics.push_back({"CitationOutOfRange", begin,
                                              "cited case " + std::to_string(id) +
                                              " outside 1.." + std::to_string(case_count)});
                return result;
            }
    }

    // Answer
    {
        const std::size_t begin = pos[6] + kBeginAnswer.size();
        std::string_view body = text.substr(begin, pos[7] - begin);
        std::vector<std::string> values;
        if (!p.parse_fields(body, begin, {"[Step-by-step Application]:", "[Final Result]:"}, values)) {
            result.diagnostics = std::move(p.diags);
            return result;
        }
        if (values[1].empty()) {
            result.diagnostics.push_back({"MissingSection", begin, "empty final result"});
            return result;
        }
        trace.answer = {values[0], values[1]};
    }

    result.trace = std::move(trace);
    return result;
}

std::string serialize_trace(const ReasoningTrace& trace) {
    if (trace.case_analyses.empty())
        throw Error("InvariantViolation", "trace has no case analyses");
    for (std::size_t i = 0; i < trace.case_analyses.size(); ++i)
        if (trace.case_analyses[i].index != static_cast<int>(i) + 1)
            throw Error("InvariantViolation", "case indices must be 1..n contiguous");
    const int n = static_cast<int>(trace.case_analyses.size());
    for (int id : trace.induction.cited_case_ids)
        if (id < 1 || id > n)
            throw Error("InvariantViolation", "cited case " + std::to_string(id) + " out of range");
    if (std::string(trim(trace.answer.final_result)).empty())
        throw Error("InvariantViolation", "final result must be nonempty");

    std::ostringstream out;
    out << kBeginTarget << "\n"
        << "[Core Task]: " << trace.target_analysis.core_task << "\n"
        << "[Key Visuals]: " << trace.target_analysis.key_visuals << "\n"
        << "[Required Logic]: " << trace.target_analysis.required_logic << "\n"
        << kEndTarget << "\n"
        << kBeginReference << "\n";
    for (const auto& c : trace.case_analyses) {
        out << "<|begin_of_case_" << c.index << "_analysis|>\n"
            << "[Elements]: " << c.elements << "\n"
            << "[Solution Logic]: " << c.solution_logic << "\n"
            << "[Comparison]: " << c.comparison << "\n"
            << kBeginJudgment << (c.judgment == Judgment::Helpful ? "helpful" : "unhelpful")
            << kEndJudgment << "\n"
            << "<|end_of_case_" << c.index << "_analysis|>\n";
    }
    out << kEndReference << "\n"
        << kBeginInduction << "\n"
        << "[Helpful Cases Cited]:";
    bool first = true;
    for (int id : trace.induction.cited_case_ids) {
        out << (first ? " " : ", ") << "<|case_" << id << "|>";
        first = false;
    }
    out << "\n"
        << "[Extracted Rule]: " << trace.induction.extracted_rule << "\n"
        << kEndInduction << "\n"
        << kBeginAnswer << "\n"
        << "[Step-by-step Application]: " << trace.answer.application << "\n"
        << "[Final Result]: " << trace.answer.final_result << "\n"
        << kEndAnswer << "\n";
    return out.str();
}

std::string normalize_answer(std::string_view text) {
    std::string s = lower(trim(text));
    while (!s.empty()) {
        const char c = s.back();
        if (c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':')
            s.pop_back();
        else
            break;
    }
    // strip again in case punctuation hid trailing spaces
    return std::string(trim(s));
}

std::string extract_final_answer(const ReasoningTrace& trace, bool normalize) {
    std::string value(trim(trace.answer.final_result));
    return normalize ? normalize_answer(value) : value;
}

} // namespace mmi::trace
