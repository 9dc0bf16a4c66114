#pragma once

// Programmatic reasoning-trace construction shared by the grammar, reward,
// and acceptance tests.

#include <set>
#include <string>
#include <vector>

#include "mminduction/trace.hpp"

inline mmi::trace::ReasoningTrace make_trace(const std::vector<mmi::trace::Judgment>& judgments,
                                             const std::set<int>& cited,
                                             const std::string& final_result,
                                             const std::string& flavor = "synthetic") {
    mmi::trace::ReasoningTrace t;
    t.target_analysis = {"Determine the " + flavor + " target property.",
                         "A " + flavor + " scene with the relevant object highlighted.",
                         "Compare against the reference cases and apply the shared rule."};
    for (std::size_t i = 0; i < judgments.size(); ++i) {
        mmi::trace::CaseAnalysis c;
        c.index = static_cast<int>(i) + 1;
        c.elements = "Case " + std::to_string(i + 1) + " shows a " + flavor + " instance.";
        c.solution_logic = "Reads the property off the depicted object directly.";
        c.comparison = "Shares the question form with the target.";
        c.judgment = judgments[i];
        t.case_analyses.push_back(std::move(c));
    }
    t.induction.cited_case_ids = cited;
    t.induction.extracted_rule = "Report the property the helpful cases agree on.";
    t.answer.application = "Applying the rule to the target scene.";
    t.answer.final_result = final_result;
    return t;
}
