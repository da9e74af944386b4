// SPDX-License-Identifier: Apache-2.0
// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line; the
// exit status is non-zero if any fails.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "generators.hpp"
#include "mtr/cli.hpp"
#include "mtr/dataset.hpp"
#include "mtr/error.hpp"
#include "mtr/json_text.hpp"
#include "mtr/reward.hpp"

using namespace mtr;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = MTR_FIXTURES;

// Tolerances
constexpr double kWeightTol = 1e-6;
constexpr double kObjectiveTol = 1e-12;
constexpr double kF1Tol = 1e-12;
constexpr double kAlphaLo = 0.66, kAlphaHi = 0.76, kMinR2 = 0.95;
constexpr double kTierBudgetSeconds = 1.0, kFitBudgetSeconds = 5.0;

struct Outcome {
    bool ok = true;
    std::string detail;

    void fail(const std::string& why)
    {
        if (ok)
            detail = why;
        ok = false;
    }
};

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Trace chess_trace()
{
    auto trace = parse_trace(read_file(kFixtures / "appendix_f.txt"));
    trace.query = "Who is the number one ranked chess player?";
    trace.metadata.query_id = "chess";
    return trace;
}

fs::path scratch(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("mtr_accept_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run(std::vector<std::string> args)
{
    args.insert(args.begin(), "mtr");
    std::ostringstream out, err;
    int code = run_cli(args, out, err);
    if (code != kExitOk)
        std::cerr << err.str();
    return code;
}

// ---------------------------------------------------------------------------

Outcome tier_table()
{
    // Three answer symbols, each with surface forms that normalize to the
    // same canonical id; the reference tier is computed on the ids.
    const std::vector<std::vector<std::string>> symbols{
        {"magnus carlsen", "Magnus Carlsen", "\\boxed{\\text{Magnus Carlsen}}", "the MAGNUS carlsen."},
        {"hikaru nakamura", "Hikaru Nakamura!", "\\text{hikaru  nakamura}"},
        {"ding liren", "Ding, Liren", "a Ding Liren"},
    };
    struct Surface {
        int id;  // -1 = absent
        std::optional<std::string> text;
    };
    std::vector<Surface> answers{{-1, std::nullopt}};
    for (int id = 0; id < static_cast<int>(symbols.size()); ++id) {
        for (const auto& s : symbols[static_cast<std::size_t>(id)])
            answers.push_back({id, s});
    }

    auto reference = [](int f, int i, int g) {
        bool f_ok = f >= 0 && f == g;
        bool i_ok = i >= 0 && i == g;
        bool same = f >= 0 && i >= 0 && f == i;
        if (f_ok && i_ok)
            return 1.0;
        if (f_ok && !i_ok)
            return 0.8;
        if (!f_ok && i_ok)
            return 0.6;
        if ((f_ok || i_ok) && !same)
            return 0.3;
        return 0.0;
    };

    Outcome out;
    auto start = std::chrono::steady_clock::now();
    std::size_t cases = 0;
    std::map<double, std::size_t> reached;
    for (const auto& f : answers) {
        for (const auto& i : answers) {
            for (int g = 0; g < static_cast<int>(symbols.size()); ++g) {
                for (const auto& gold : symbols[static_cast<std::size_t>(g)]) {
                    ++cases;
                    double expected = reference(f.id, i.id, g);
                    double got = answer_score(f.text, i.text, gold);
                    ++reached[got];
                    if (got != expected)
                        out.fail("a_f=" + f.text.value_or("<none>") + " a_i=" + i.text.value_or("<none>") +
                                 " gold=" + gold);
                }
            }
        }
    }
    double elapsed = seconds_since(start);
    if (elapsed >= kTierBudgetSeconds)
        out.fail("took " + std::to_string(elapsed) + "s");
    for (double t : {1.0, 0.8, 0.6, 0.0}) {
        if (!reached.count(t))
            out.fail("tier " + std::to_string(t) + " never reached");
    }
    if (out.ok) {
        std::ostringstream d;
        d << cases << " cases, tiers 1.0/0.8/0.6/0.0 all reached, 0.3 shadowed as expected, " << elapsed << "s";
        out.detail = d.str();
    }
    return out;
}

Outcome chess_fixture()
{
    Outcome out;
    auto trace = chess_trace();
    auto stats = compute_stats(trace);
    auto answers = extract_answers(trace);
    auto reward = trace_reward(trace, "Magnus Carlsen");
    auto verdict = judge_trace(trace, "Magnus Carlsen", FilterCriteria{});
    if (stats.n_tool_calls != 2)
        out.fail("n_tool_calls=" + std::to_string(stats.n_tool_calls));
    if (stats.n_loops != 0)
        out.fail("n_loops=" + std::to_string(stats.n_loops));
    if (!answers.final_answer || normalize(*answers.final_answer) != "magnus carlsen")
        out.fail("final answer normalizes to '" + normalize(answers.final_answer.value_or("")) + "'");
    if (reward.total != 0.8 || reward.r_ans != 0.8)
        out.fail("reward " + std::to_string(reward.total));
    if (verdict != Verdict::Retained)
        out.fail("filter verdict " + std::string(verdict_name(verdict)));
    if (out.ok)
        out.detail = "2 calls, 0 loops, a_f -> \"magnus carlsen\", reward 0.8 exact, retained";
    return out;
}

Outcome validation_oracle()
{
    Outcome out;
    gen::Rng rng(20240601);
    int valid = 0, disagreements = 0;
    for (int n = 0; n < 1000; ++n) {
        auto schema = gen::random_schema(rng, 0, true);
        auto tool = make_tool("probe", "", parse_schema(schema));
        auto args = gen::random_value(rng, schema);
        bool expected = gen::conforms(schema, args);
        bool got = validate_args(tool, args).valid();
        valid += got;
        if (got != expected) {
            ++disagreements;
            out.fail("schema " + schema.dump() + " args " + args.dump());
        }
    }
    if (out.ok)
        out.detail = "1000 pairs, 0 disagreements (" + std::to_string(valid) + " valid)";
    else
        out.detail = std::to_string(disagreements) + " disagreements; first: " + out.detail;
    return out;
}

Outcome round_trips()
{
    Outcome out;
    gen::Rng rng(777);
    std::vector<GoldTrace> items;
    for (int n = 0; n < 1000; ++n) {
        auto trace = gen::random_trace(rng);
        auto text = serialize_trace(trace);
        if (!same_text_structure(parse_trace(text), trace)) {
            out.fail("text round-trip differs for trace " + std::to_string(n));
            continue;
        }
        if (!(trace_from_json(json::parse(trace_to_json(trace).dump())) == trace))
            out.fail("JSONL round-trip differs for trace " + std::to_string(n));
        std::string gold = "Paris";
        for (const auto& step : trace.steps) {
            if (auto* a = std::get_if<FinalAnswer>(&step); a && rng.chance(0.7))
                gold = a->raw;
        }
        items.push_back({std::move(trace), gold});
    }

    auto filtered = filter_traces(items, FilterCriteria{});
    std::vector<Trace> corpus;
    for (const auto& r : filtered.retained)
        corpus.push_back(r.trace);
    auto dir = scratch("roundtrip");
    export_sft(corpus, dir / "sft.jsonl");
    auto back = import_sft(dir / "sft.jsonl");
    if (back.size() != corpus.size())
        out.fail("imported " + std::to_string(back.size()) + " of " + std::to_string(corpus.size()));
    for (std::size_t k = 0; k < std::min(back.size(), corpus.size()); ++k) {
        if (!same_text_structure(back[k], corpus[k]) || !(back[k].tools == corpus[k].tools))
            out.fail("export/import differs at row " + std::to_string(k));
    }
    fs::remove_all(dir);
    if (corpus.empty())
        out.fail("filter retained nothing; export path not exercised");
    if (out.ok)
        out.detail = "1000 traces round-trip; " + std::to_string(corpus.size()) + " retained traces survive export/import";
    return out;
}

Outcome group_numerics()
{
    Outcome out;
    gen::Rng rng(31337);
    constexpr std::size_t n = 8;
    int flat_groups = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> r(n), lp(n), ref(n);
        for (std::size_t k = 0; k < n; ++k) {
            r[k] = rng.real(-0.5, 1.0);
            lp[k] = rng.real(-80.0, -1.0);
            ref[k] = rng.real(-80.0, -1.0);
        }
        if (trial % 10 == 0) {
            std::fill(r.begin(), r.end(), r[0]);
            ++flat_groups;
        }
        auto w = group_weights(r);

        // naive recomputation
        double mean = 0.0;
        for (double v : r)
            mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : r)
            var += (v - mean) * (v - mean);
        var /= n;
        bool flat = std::all_of(r.begin(), r.end(), [&](double v) { return v == r[0]; });
        std::vector<double> naive_w(n, 0.0);
        if (!flat) {
            for (std::size_t k = 0; k < n; ++k)
                naive_w[k] = (r[k] - mean) / (std::sqrt(var) + 1e-8);
        }

        if (flat) {
            if (!std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; }))
                out.fail("zero-variance group got non-zero weights");
        } else {
            double wm = std::accumulate(w.begin(), w.end(), 0.0) / n;
            double wv = 0.0;
            for (double v : w)
                wv += (v - wm) * (v - wm);
            double wstd = std::sqrt(wv / n);
            if (std::abs(wm) > kWeightTol || std::abs(wstd - 1.0) > kWeightTol)
                out.fail("weights mean " + std::to_string(wm) + " std " + std::to_string(wstd));
        }

        double beta = 0.01;
        auto batch = group_objective(r, lp, ref, beta);
        double naive_kl = 0.0, naive_j = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            naive_kl += lp[k] - ref[k];
            naive_j += naive_w[k] * lp[k];
        }
        naive_kl /= n;
        naive_j -= beta * naive_kl;
        if (std::abs(batch.objective - naive_j) > kObjectiveTol || std::abs(batch.kl - naive_kl) > kObjectiveTol)
            out.fail("objective " + std::to_string(batch.objective) + " vs naive " + std::to_string(naive_j));

        double b2 = rng.real(0.0, 2.0);
        auto other = group_objective(r, lp, ref, b2);
        double slope = (other.objective - batch.objective) / (b2 - beta);
        if (std::abs(slope + batch.kl) > 1e-9 * std::max(1.0, std::abs(batch.kl)))
            out.fail("slope " + std::to_string(slope) + " vs -kl " + std::to_string(-batch.kl));
    }
    if (out.ok)
        out.detail = "1000 groups of 8 (" + std::to_string(flat_groups) +
                     " zero-variance): mean 0 / std 1 within 1e-6, objective within 1e-12, slope -kl";
    return out;
}

Outcome zipf_fit()
{
    Outcome out;
    constexpr std::size_t ranks = 1000;
    constexpr std::size_t draws = 400000;
    constexpr double alpha = 0.71;
    std::vector<double> weights(ranks);
    for (std::size_t r = 0; r < ranks; ++r)
        weights[r] = std::pow(static_cast<double>(r + 1), -alpha);
    std::discrete_distribution<std::size_t> zipf(weights.begin(), weights.end());
    std::mt19937_64 rng(71);

    auto start = std::chrono::steady_clock::now();
    std::vector<std::string> log;
    log.reserve(draws);
    for (std::size_t k = 0; k < draws; ++k)
        log.push_back("tool_" + std::to_string(zipf(rng)));
    auto stats = tool_stats_from_log(log);
    double elapsed = seconds_since(start);

    if (stats.fit.ranks < ranks)
        out.fail("only " + std::to_string(stats.fit.ranks) + " ranks observed");
    if (stats.fit.alpha < kAlphaLo || stats.fit.alpha > kAlphaHi)
        out.fail("alpha " + std::to_string(stats.fit.alpha));
    if (!(stats.fit.r2 > kMinR2))
        out.fail("r2 " + std::to_string(stats.fit.r2));
    if (elapsed >= kFitBudgetSeconds)
        out.fail("took " + std::to_string(elapsed) + "s");
    std::ostringstream d;
    d << stats.fit.ranks << " ranks, alpha " << stats.fit.alpha << ", r2 " << stats.fit.r2 << ", " << elapsed << "s";
    if (out.ok)
        out.detail = d.str();
    else
        out.detail += " (" + d.str() + ")";
    return out;
}

Outcome determinism()
{
    Outcome out;
    auto dir = scratch("determinism");
    std::vector<std::string> outputs;
    json config = json::object();
    config["backend"] = json{{"kind", "scripted"}, {"script", (kFixtures / "script10.json").string()}};
    config["paths"] = json{{"questions", (kFixtures / "questions10.jsonl").string()}};
    write_file_atomic(dir / "config.json", config.dump(2));
    for (const char* name : {"a", "b"}) {
        auto out_dir = dir / name;
        if (run({"--config", (dir / "config.json").string(), "--out", out_dir.string(), "gen-traces", "--n", "8"}) !=
            kExitOk)
            out.fail(std::string("gen-traces run ") + name + " failed");
        outputs.push_back(fs::exists(out_dir / "traces.jsonl") ? read_file(out_dir / "traces.jsonl") : "");
    }
    auto rows = std::count(outputs[0].begin(), outputs[0].end(), '\n');
    if (rows != 80)
        out.fail(std::to_string(rows) + " traces instead of 80");
    if (outputs[0] != outputs[1])
        out.fail("traces.jsonl differs between runs");

    // self-correction fixture
    json sc = json::object();
    sc["backend"] = json{{"kind", "scripted"}, {"script", (kFixtures / "self_correction.json").string()}};
    sc["paths"] = json{{"questions", (kFixtures / "self_correction_questions.jsonl").string()},
                       {"output_dir", (dir / "sc").string()}};
    write_file_atomic(dir / "sc.json", sc.dump(2));
    int corrections = 0;
    if (run({"--config", (dir / "sc.json").string(), "gen-traces", "--n", "1"}) != kExitOk) {
        out.fail("self-correction run failed");
    } else {
        auto trace = trace_from_json(read_jsonl(dir / "sc" / "traces.jsonl").at(0));
        const auto& s = trace.steps;
        for (std::size_t k = 1; k < s.size(); ++k) {
            auto* bad = std::get_if<ToolResponse>(&s[k]);
            if (!bad || bad->valid)
                continue;
            auto err = parse_structured_error(bad->content);
            auto* failed_call = std::get_if<ToolCall>(&s[k - 1]);
            if (!err || !failed_call) {
                out.fail("invalid tool_response is not a StructuredError");
                continue;
            }
            // next call must target the same tool
            for (std::size_t j = k + 1; j < s.size(); ++j) {
                if (auto* next = std::get_if<ToolCall>(&s[j])) {
                    if (next->name == failed_call->name)
                        ++corrections;
                    break;
                }
            }
        }
        bool ends_valid = false;
        for (std::size_t k = 1; k < s.size(); ++k) {
            auto* resp = std::get_if<ToolResponse>(&s[k]);
            auto* call = std::get_if<ToolCall>(&s[k - 1]);
            if (resp && resp->valid && call && call->name == "demographics_search")
                ends_valid = true;
        }
        if (corrections < 2 || !ends_valid)
            out.fail("expected two StructuredError responses followed by a corrected valid call");
    }
    fs::remove_all(dir);
    if (out.ok)
        out.detail = "80 traces byte-identical across runs; " + std::to_string(corrections) +
                     " StructuredError responses each followed by a corrected call";
    return out;
}

Outcome em_f1_suite()
{
    struct Case {
        const char* prediction;
        const char* gold;
        int em;
        double f1;
    };
    const std::vector<Case> cases{
        {"barack obama", "obama", 0, 2.0 / 3.0},
        {"\\boxed{\\text{Magnus Carlsen}}", "Magnus Carlsen", 1, 1.0},
        {"The Eiffel Tower!", "eiffel tower", 1, 1.0},
        {"Paris", "London", 0, 0.0},
        {"", "Paris", 0, 0.0},
        {"New York City", "new york", 0, 0.8},
        {"a cat", "the cat", 1, 1.0},
        {"George Washington Carver", "George Washington", 0, 0.8},
        {"1989", "1989.", 1, 1.0},
        {"Albert Einstein", "Einstein, Albert", 0, 1.0},
        {"Jupiter", "Saturn", 0, 0.0},
        {"U.S.A.", "USA", 1, 1.0},
        {"Vincent van Gogh", "van gogh", 0, 0.8},
        {"Amazon", "Amazon River", 0, 2.0 / 3.0},
        {"red red blue", "red blue blue", 0, 2.0 / 3.0},
        {"Japanese yen", "yen", 0, 2.0 / 3.0},
        {"An apple a day", "apple day", 1, 1.0},
        {"Mount Everest in Nepal", "Everest Nepal", 0, 2.0 / 3.0},
        {"Rock-and-roll", "rock and roll", 0, 0.0},
        {"it was 42 years", "42", 0, 0.4},
    };
    Outcome out;
    for (const auto& c : cases) {
        int em = exact_match(c.prediction, c.gold);
        double f1 = f1_score(c.prediction, c.gold);
        if (em != c.em || std::abs(f1 - c.f1) > kF1Tol) {
            std::ostringstream d;
            d << "(\"" << c.prediction << "\", \"" << c.gold << "\") EM " << em << " F1 " << f1;
            out.fail(d.str());
        }
    }
    if (out.ok)
        out.detail = std::to_string(cases.size()) + " pairs exact (F1 within 1e-12), F1(\"barack obama\",\"obama\")=2/3";
    return out;
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 answer-score tier table vs reference", tier_table},
        {"2 chess transcript fixture", chess_fixture},
        {"3 validate_args vs reference checker", validation_oracle},
        {"4 trace and export round-trips", round_trips},
        {"5 group weights and objective", group_numerics},
        {"6 power-law fit on synthetic Zipf", zipf_fit},
        {"7 scripted gen-traces determinism and self-correction", determinism},
        {"8 EM/F1 normalization suite", em_f1_suite},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome outcome;
        try {
            outcome = check();
        } catch (const std::exception& e) {
            outcome.ok = false;
            outcome.detail = std::string("threw: ") + e.what();
        }
        failed += !outcome.ok;
        std::cout << (outcome.ok ? "PASS " : "FAIL ") << name << ": " << outcome.detail << "\n";
    }
    std::cout << (failed ? "acceptance: " + std::to_string(failed) + " failing" : std::string("acceptance: all passed"))
              << "\n";
    return failed ? 1 : 0;
}
