// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "mtr/json_text.hpp"
#include "mtr/trace.hpp"

namespace mtr {

/// Unwraps \boxed{...} and \text{...} (repeatedly, braces balanced).
std::string strip_latex_wrappers(std::string_view text);

/// Lowercase, unwrap LaTeX, drop ASCII punctuation, drop the articles
/// a/an/the, collapse whitespace. Idempotent.
std::string normalize(std::string_view text);

enum class AnswerSource { AnswerTag, SummarizerArgument, FinalAnswerMarker };

std::string_view source_name(AnswerSource source) noexcept;

struct ExtractedAnswers {
    std::optional<std::string> final_answer;         // a_f
    std::optional<std::string> intermediate_answer;  // a_i
    std::optional<AnswerSource> final_source;
    std::optional<AnswerSource> intermediate_source;
};

ExtractedAnswers extract_answers(const Trace& trace);

namespace tier {
inline constexpr double kConsistent = 1.0;
inline constexpr double kFinalOnly = 0.8;
inline constexpr double kIntermediateOnly = 0.6;
inline constexpr double kInconsistent = 0.3;
inline constexpr double kNone = 0.0;
} // namespace tier

/// Tiered answer score over final, intermediate and gold answers, compared
/// after normalization. Absent answers never equal gold.
double answer_score(const std::optional<std::string>& final_answer,
                    const std::optional<std::string>& intermediate_answer, std::string_view gold);

inline constexpr double kDefaultLoopPenalty = 0.1;

struct RewardBreakdown {
    ExtractedAnswers answers;
    double r_ans = 0.0;
    int n_loops = 0;
    double r_efficiency = 0.0;
    double total = 0.0;
};

RewardBreakdown trace_reward(const Trace& trace, std::string_view gold,
                             double loop_penalty = kDefaultLoopPenalty);

int exact_match(std::string_view prediction, std::string_view gold);
/// Token F1 over normalized text. One empty side scores 0, two empty sides 1.
double f1_score(std::string_view prediction, std::string_view gold);

/// One row of the score report.
json score_row(const Trace& trace, std::string_view gold, const RewardBreakdown& reward);

} // namespace mtr
