// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtr/json_text.hpp"
#include "mtr/trace.hpp"

namespace mtr {

// ---------------------------------------------------------------------------
// SFT-quality filtering

using AnswerVerifier = std::function<bool(std::string_view answer, std::string_view gold)>;

/// Normalized exact match.
bool normalized_em_verifier(std::string_view answer, std::string_view gold);

struct FilterCriteria {
    int min_tool_calls = 2;
    int max_tool_calls = 12;
    bool require_no_validation_errors = true;
    AnswerVerifier verifier = normalized_em_verifier;
};

void check_filter_criteria(const FilterCriteria& criteria);

enum class Verdict { Retained, NoAnswer, WrongAnswer, ValidationError, TooShort, TooLong };

std::string_view verdict_name(Verdict verdict) noexcept;

struct GoldTrace {
    Trace trace;
    std::string gold;
};

struct FilterReport {
    std::vector<Verdict> verdicts;  // aligned with the input
    std::size_t total = 0;
    std::size_t retained = 0;

    double retention_rate() const { return total ? static_cast<double>(retained) / total : 0.0; }
    std::size_t count(Verdict verdict) const;
    json to_json(std::span<const GoldTrace> input) const;
};

/// Answer checks run first (no-answer, wrong-answer), then validation
/// errors, then tool-call count bounds. One reason per rejected trace.
Verdict judge_trace(const Trace& trace, std::string_view gold, const FilterCriteria& criteria);

struct FilterResult {
    FilterReport report;
    std::vector<GoldTrace> retained;
};

FilterResult filter_traces(std::span<const GoldTrace> traces, const FilterCriteria& criteria);

// ---------------------------------------------------------------------------
// Training-file export

/// {query, tools, target} with target the serialized trace text.
json sft_row(const Trace& trace);
void export_sft(std::span<const Trace> corpus, const std::filesystem::path& path);
std::vector<Trace> import_sft(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Group-relative objective numerics

inline constexpr double kWeightEpsilon = 1e-8;
inline constexpr double kDefaultKlBeta = 0.01;

/// Group-standardized advantages (population std). All-equal rewards give
/// all-zero weights.
std::vector<double> group_weights(std::span<const double> rewards);

struct GroupBatch {
    std::string query_id;
    std::vector<double> rewards;
    std::vector<double> policy_logprobs;
    std::vector<double> reference_logprobs;
    std::vector<double> weights;
    double beta = kDefaultKlBeta;
    double kl = 0.0;
    double weighted_likelihood = 0.0;
    double objective = 0.0;

    json to_json() const;
};

/// objective = sum_i w_i * logpi_i - beta * mean_i(logpi_i - logref_i).
/// Throws LengthMismatch unless all three inputs share a length >= 1.
GroupBatch group_objective(std::span<const double> rewards, std::span<const double> policy_logprobs,
                           std::span<const double> reference_logprobs, double beta = kDefaultKlBeta);

// ---------------------------------------------------------------------------
// Tool-ecosystem statistics

struct ToolFrequency {
    std::string name;
    std::uint64_t count = 0;
};

struct RankFrequencyFit {
    double alpha = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::size_t ranks = 0;
};

inline constexpr std::size_t kMinFitRanks = 3;

/// Least squares on log(freq) = c - alpha * log(rank) over ranks 1..n of a
/// descending frequency list. Throws EmptyFit below kMinFitRanks ranks.
RankFrequencyFit fit_rank_frequency(std::span<const std::uint64_t> descending_counts);

struct ToolStats {
    std::vector<ToolFrequency> table;  // descending count, then name
    RankFrequencyFit fit;

    json to_json() const;
};

/// Frequency table from a flat invocation log. Throws EmptyCorpus.
std::vector<ToolFrequency> tool_frequency_table(std::span<const std::string> invocations);

/// Counts well-formed tool calls across traces and fits the rank-frequency law.
ToolStats tool_stats(std::span<const Trace> corpus);
ToolStats tool_stats_from_log(std::span<const std::string> invocations);

} // namespace mtr
