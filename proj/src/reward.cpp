// SPDX-License-Identifier: Apache-2.0
#include "mtr/reward.hpp"

#include <cctype>
#include <map>
#include <sstream>
#include <vector>

namespace mtr {

namespace {

constexpr std::string_view kFinalAnswerMarker = "**Final Answer:**";

// Position of the brace closing the one at `open`, or npos.
std::size_t matching_brace(std::string_view text, std::size_t open)
{
    int depth = 0;
    for (std::size_t i = open; i < text.size(); ++i) {
        if (text[i] == '{')
            ++depth;
        else if (text[i] == '}' && --depth == 0)
            return i;
    }
    return std::string_view::npos;
}

std::vector<std::string> tokens(std::string_view normalized)
{
    std::vector<std::string> out;
    std::istringstream in{std::string(normalized)};
    std::string tok;
    while (in >> tok)
        out.push_back(tok);
    return out;
}

} // namespace

std::string strip_latex_wrappers(std::string_view text)
{
    std::string out(text);
    std::size_t from = 0;
    while (true) {
        std::size_t at = std::string::npos;
        std::size_t head = 0;
        for (std::string_view wrapper : {std::string_view("\\boxed{"), std::string_view("\\text{")}) {
            auto found = out.find(wrapper, from);
            if (found < at) {
                at = found;
                head = wrapper.size();
            }
        }
        if (at == std::string::npos)
            break;
        auto close = matching_brace(out, at + head - 1);
        if (close == std::string::npos) {
            from = at + 1;
            continue;
        }
        out = out.substr(0, at) + out.substr(at + head, close - at - head) + out.substr(close + 1);
        from = at;
    }
    return out;
}

std::string normalize(std::string_view text)
{
    auto unwrapped = strip_latex_wrappers(text);
    std::string cleaned;
    cleaned.reserve(unwrapped.size());
    for (char c : unwrapped) {
        auto u = static_cast<unsigned char>(c);
        if (u < 0x80 && std::ispunct(u))
            continue;
        cleaned.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : c);
    }
    std::string out;
    for (const auto& tok : tokens(cleaned)) {
        if (tok == "a" || tok == "an" || tok == "the")
            continue;
        if (!out.empty())
            out.push_back(' ');
        out += tok;
    }
    return out;
}

std::string_view source_name(AnswerSource source) noexcept
{
    switch (source) {
    case AnswerSource::AnswerTag: return "answer_tag";
    case AnswerSource::SummarizerArgument: return "summarizer_argument";
    case AnswerSource::FinalAnswerMarker: return "final_answer_marker";
    }
    return "answer_tag";
}

ExtractedAnswers extract_answers(const Trace& trace)
{
    ExtractedAnswers out;
    std::optional<std::string> summarizer;
    std::optional<std::string> marker;
    for (const auto& step : trace.steps) {
        if (const auto* answer = std::get_if<FinalAnswer>(&step)) {
            out.final_answer = trim(strip_latex_wrappers(answer->raw));
            out.final_source = AnswerSource::AnswerTag;
        } else if (const auto* call = std::get_if<ToolCall>(&step)) {
            if (call->name != kAnswerSummarizer || call->malformed())
                continue;
            auto it = call->args->find("final_answer");
            if (it != call->args->end() && it->is_string())
                summarizer = it->get<std::string>();
        } else if (const auto* reply = std::get_if<ToolResponse>(&step)) {
            auto at = reply->content.rfind(kFinalAnswerMarker);
            if (at == std::string::npos)
                continue;
            auto rest = std::string_view(reply->content).substr(at + kFinalAnswerMarker.size());
            auto line = trim(rest.substr(0, rest.find('\n')));
            if (!line.empty())
                marker = std::move(line);
        }
    }
    if (summarizer) {
        out.intermediate_answer = std::move(summarizer);
        out.intermediate_source = AnswerSource::SummarizerArgument;
    } else if (marker) {
        out.intermediate_answer = std::move(marker);
        out.intermediate_source = AnswerSource::FinalAnswerMarker;
    }
    return out;
}

double answer_score(const std::optional<std::string>& final_answer,
                    const std::optional<std::string>& intermediate_answer, std::string_view gold)
{
    auto target = normalize(gold);
    auto norm_f = final_answer ? std::optional(normalize(*final_answer)) : std::nullopt;
    auto norm_i = intermediate_answer ? std::optional(normalize(*intermediate_answer)) : std::nullopt;

    bool final_ok = norm_f && *norm_f == target;
    bool inter_ok = norm_i && *norm_i == target;
    bool consistent = norm_f && norm_i && *norm_f == *norm_i;

    if (final_ok && inter_ok)
        return tier::kConsistent;
    if (final_ok)
        return tier::kFinalOnly;
    if (inter_ok)
        return tier::kIntermediateOnly;
    // Shadowed by the two tiers above under exact matching; kept in order.
    if ((final_ok || inter_ok) && !consistent)
        return tier::kInconsistent;
    return tier::kNone;
}

RewardBreakdown trace_reward(const Trace& trace, std::string_view gold, double loop_penalty)
{
    RewardBreakdown out;
    out.answers = extract_answers(trace);
    out.r_ans = answer_score(out.answers.final_answer, out.answers.intermediate_answer, gold);
    out.n_loops = compute_stats(trace).n_loops;
    out.r_efficiency = out.n_loops > 0 ? -loop_penalty * out.n_loops : 0.0;
    out.total = out.r_ans + out.r_efficiency;
    return out;
}

int exact_match(std::string_view prediction, std::string_view gold)
{
    return normalize(prediction) == normalize(gold) ? 1 : 0;
}

double f1_score(std::string_view prediction, std::string_view gold)
{
    auto pred = tokens(normalize(prediction));
    auto ref = tokens(normalize(gold));
    if (pred.empty() || ref.empty())
        return pred.empty() && ref.empty() ? 1.0 : 0.0;
    std::map<std::string, int> remaining;
    for (const auto& tok : ref)
        ++remaining[tok];
    int common = 0;
    for (const auto& tok : pred) {
        auto it = remaining.find(tok);
        if (it != remaining.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0)
        return 0.0;
    double precision = static_cast<double>(common) / static_cast<double>(pred.size());
    double recall = static_cast<double>(common) / static_cast<double>(ref.size());
    return 2.0 * precision * recall / (precision + recall);
}

json score_row(const Trace& trace, std::string_view gold, const RewardBreakdown& reward)
{
    const auto& a = reward.answers;
    json row = json::object();
    row["trace_id"] = trace_id(trace);
    row["a_f"] = a.final_answer ? json(*a.final_answer) : json(nullptr);
    row["a_i"] = a.intermediate_answer ? json(*a.intermediate_answer) : json(nullptr);
    row["gold"] = gold;
    row["r_ans"] = reward.r_ans;
    row["n_loops"] = reward.n_loops;
    row["r_efficiency"] = reward.r_efficiency;
    row["total"] = reward.total;
    row["em"] = a.final_answer ? exact_match(*a.final_answer, gold) : 0;
    row["f1"] = a.final_answer ? f1_score(*a.final_answer, gold) : 0.0;
    return row;
}

} // namespace mtr
