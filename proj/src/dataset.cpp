// SPDX-License-Identifier: Apache-2.0
#include "mtr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "mtr/error.hpp"
#include "mtr/reward.hpp"

namespace mtr {

bool normalized_em_verifier(std::string_view answer, std::string_view gold)
{
    return exact_match(answer, gold) == 1;
}

void check_filter_criteria(const FilterCriteria& criteria)
{
    if (criteria.min_tool_calls < 1 || criteria.min_tool_calls > criteria.max_tool_calls)
        throw Error(Errc::Config, "filter bounds must satisfy 1 <= min <= max");
    if (!criteria.verifier)
        throw Error(Errc::Config, "filter verifier is empty");
}

std::string_view verdict_name(Verdict verdict) noexcept
{
    switch (verdict) {
    case Verdict::Retained: return "retained";
    case Verdict::NoAnswer: return "no-answer";
    case Verdict::WrongAnswer: return "wrong-answer";
    case Verdict::ValidationError: return "validation-error";
    case Verdict::TooShort: return "too-short";
    case Verdict::TooLong: return "too-long";
    }
    return "retained";
}

std::size_t FilterReport::count(Verdict verdict) const
{
    return static_cast<std::size_t>(std::count(verdicts.begin(), verdicts.end(), verdict));
}

json FilterReport::to_json(std::span<const GoldTrace> input) const
{
    json out = json::object();
    out["total"] = total;
    out["retained"] = retained;
    out["retention_rate"] = retention_rate();
    json by_reason = json::object();
    for (auto v : {Verdict::NoAnswer, Verdict::WrongAnswer, Verdict::ValidationError, Verdict::TooShort,
                   Verdict::TooLong})
        by_reason[std::string(verdict_name(v))] = count(v);
    out["rejected_by_reason"] = std::move(by_reason);
    json rows = json::array();
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        json row = json::object();
        row["trace_id"] = i < input.size() ? trace_id(input[i].trace) : std::to_string(i);
        row["verdict"] = verdict_name(verdicts[i]);
        rows.push_back(std::move(row));
    }
    out["verdicts"] = std::move(rows);
    return out;
}

namespace {

bool has_validation_error(const Trace& trace)
{
    return std::any_of(trace.steps.begin(), trace.steps.end(), [](const TraceStep& step) {
        if (const auto* reply = std::get_if<ToolResponse>(&step))
            return !reply->valid;
        if (const auto* call = std::get_if<ToolCall>(&step))
            return call->malformed();
        return false;
    });
}

} // namespace

Verdict judge_trace(const Trace& trace, std::string_view gold, const FilterCriteria& criteria)
{
    auto answers = extract_answers(trace);
    if (!answers.final_answer)
        return Verdict::NoAnswer;
    if (!criteria.verifier(*answers.final_answer, gold))
        return Verdict::WrongAnswer;
    if (criteria.require_no_validation_errors && has_validation_error(trace))
        return Verdict::ValidationError;
    auto calls = compute_stats(trace).n_tool_calls;
    if (calls < criteria.min_tool_calls)
        return Verdict::TooShort;
    if (calls > criteria.max_tool_calls)
        return Verdict::TooLong;
    return Verdict::Retained;
}

FilterResult filter_traces(std::span<const GoldTrace> traces, const FilterCriteria& criteria)
{
    check_filter_criteria(criteria);
    FilterResult result;
    result.report.total = traces.size();
    result.report.verdicts.reserve(traces.size());
    for (const auto& item : traces) {
        auto verdict = judge_trace(item.trace, item.gold, criteria);
        result.report.verdicts.push_back(verdict);
        if (verdict == Verdict::Retained) {
            ++result.report.retained;
            result.retained.push_back(item);
        }
    }
    return result;
}

json sft_row(const Trace& trace)
{
    json row = json::object();
    row["query"] = trace.query;
    json tools = json::array();
    for (const auto& tool : trace.tools)
        tools.push_back(tool_to_json(tool));
    row["tools"] = std::move(tools);
    row["target"] = serialize_trace(trace);
    return row;
}

void export_sft(std::span<const Trace> corpus, const std::filesystem::path& path)
{
    std::vector<json> rows;
    rows.reserve(corpus.size());
    for (const auto& trace : corpus)
        rows.push_back(sft_row(trace));
    write_file_atomic(path, to_jsonl(rows));
}

std::vector<Trace> import_sft(const std::filesystem::path& path)
{
    std::vector<Trace> corpus;
    for (const auto& row : read_jsonl(path)) {
        if (!row.is_object() || !row.contains("target") || !row["target"].is_string())
            throw Error(Errc::MalformedJson, "SFT row lacks a string \"target\"");
        auto trace = parse_trace(row["target"].get<std::string>());
        trace.query = row.value("query", trace.query);
        if (auto tools = row.find("tools"); tools != row.end() && tools->is_array()) {
            for (const auto& t : *tools)
                trace.tools.push_back(tool_from_json(t));
        }
        corpus.push_back(std::move(trace));
    }
    return corpus;
}

std::vector<double> group_weights(std::span<const double> rewards)
{
    std::vector<double> weights(rewards.size(), 0.0);
    if (rewards.empty())
        return weights;
    if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards.front(); }))
        return weights;
    double n = static_cast<double>(rewards.size());
    double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    double sq = 0.0;
    for (double r : rewards)
        sq += (r - mean) * (r - mean);
    double stddev = std::sqrt(sq / n);
    for (std::size_t i = 0; i < rewards.size(); ++i)
        weights[i] = (rewards[i] - mean) / (stddev + kWeightEpsilon);
    return weights;
}

json GroupBatch::to_json() const
{
    json out = json::object();
    out["query_id"] = query_id;
    out["rewards"] = rewards;
    out["policy_logprobs"] = policy_logprobs;
    out["reference_logprobs"] = reference_logprobs;
    out["weights"] = weights;
    out["beta"] = beta;
    out["kl"] = kl;
    out["weighted_likelihood"] = weighted_likelihood;
    out["objective"] = objective;
    return out;
}

GroupBatch group_objective(std::span<const double> rewards, std::span<const double> policy_logprobs,
                           std::span<const double> reference_logprobs, double beta)
{
    if (rewards.empty() || rewards.size() != policy_logprobs.size() ||
        rewards.size() != reference_logprobs.size())
        throw Error(Errc::LengthMismatch, "rewards/policy/reference lengths " + std::to_string(rewards.size()) +
                                              "/" + std::to_string(policy_logprobs.size()) + "/" +
                                              std::to_string(reference_logprobs.size()));
    GroupBatch batch;
    batch.rewards.assign(rewards.begin(), rewards.end());
    batch.policy_logprobs.assign(policy_logprobs.begin(), policy_logprobs.end());
    batch.reference_logprobs.assign(reference_logprobs.begin(), reference_logprobs.end());
    batch.weights = group_weights(rewards);
    batch.beta = beta;

    double log_ratio = 0.0;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        batch.weighted_likelihood += batch.weights[i] * policy_logprobs[i];
        log_ratio += policy_logprobs[i] - reference_logprobs[i];
    }
    batch.kl = log_ratio / static_cast<double>(rewards.size());
    batch.objective = batch.weighted_likelihood - beta * batch.kl;
    return batch;
}

RankFrequencyFit fit_rank_frequency(std::span<const std::uint64_t> descending_counts)
{
    std::size_t n = 0;
    for (auto c : descending_counts) {
        if (c == 0)
            break;
        ++n;
    }
    if (n < kMinFitRanks)
        throw Error(Errc::EmptyFit, "rank-frequency fit needs at least " + std::to_string(kMinFitRanks) +
                                        " ranks, got " + std::to_string(n));

    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::log(static_cast<double>(i + 1));
        y[i] = std::log(static_cast<double>(descending_counts[i]));
    }
    double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mean_x) * (x[i] - mean_x);
        sxy += (x[i] - mean_x) * (y[i] - mean_y);
        syy += (y[i] - mean_y) * (y[i] - mean_y);
    }
    double slope = sxy / sxx;
    RankFrequencyFit fit;
    fit.alpha = -slope;
    fit.intercept = mean_y - slope * mean_x;
    fit.ranks = n;
    if (syy == 0.0) {
        fit.r2 = 1.0;
    } else {
        double ss_res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double resid = y[i] - (fit.intercept + slope * x[i]);
            ss_res += resid * resid;
        }
        fit.r2 = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    }
    return fit;
}

json ToolStats::to_json() const
{
    json rows = json::array();
    for (std::size_t i = 0; i < table.size(); ++i) {
        json row = json::object();
        row["rank"] = i + 1;
        row["name"] = table[i].name;
        row["count"] = table[i].count;
        rows.push_back(std::move(row));
    }
    json out = json::object();
    out["table"] = std::move(rows);
    out["alpha"] = fit.alpha;
    out["r2"] = fit.r2;
    return out;
}

std::vector<ToolFrequency> tool_frequency_table(std::span<const std::string> invocations)
{
    if (invocations.empty())
        throw Error(Errc::EmptyCorpus, "no tool invocations to count");
    std::map<std::string, std::uint64_t> counts;
    for (const auto& name : invocations)
        ++counts[name];
    std::vector<ToolFrequency> table;
    table.reserve(counts.size());
    for (auto& [name, count] : counts)
        table.push_back({name, count});
    std::stable_sort(table.begin(), table.end(),
                     [](const ToolFrequency& a, const ToolFrequency& b) { return a.count > b.count; });
    return table;
}

ToolStats tool_stats_from_log(std::span<const std::string> invocations)
{
    ToolStats stats;
    stats.table = tool_frequency_table(invocations);
    std::vector<std::uint64_t> counts;
    counts.reserve(stats.table.size());
    for (const auto& row : stats.table)
        counts.push_back(row.count);
    stats.fit = fit_rank_frequency(counts);
    return stats;
}

ToolStats tool_stats(std::span<const Trace> corpus)
{
    std::vector<std::string> invocations;
    for (const auto& trace : corpus) {
        for (const auto& step : trace.steps) {
            const auto* call = std::get_if<ToolCall>(&step);
            if (call && !call->malformed() && !call->name.empty())
                invocations.push_back(call->name);
        }
    }
    return tool_stats_from_log(invocations);
}

} // namespace mtr
