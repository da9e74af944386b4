// SPDX-License-Identifier: Apache-2.0
#include "mtr/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "mtr/agents.hpp"
#include "mtr/config.hpp"
#include "mtr/dataset.hpp"
#include "mtr/error.hpp"
#include "mtr/reward.hpp"

namespace mtr {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config_path;
    std::string out_dir;
    std::string questions;
    std::string input;
    std::string tools;
    std::string format = "sft";
    int rollouts = 0;
    int workers = 0;
    std::uint64_t seed = 0;
};

std::string id_string(const json& value)
{
    if (value.is_string())
        return value.get<std::string>();
    if (value.is_number())
        return dump_compact(value);
    return {};
}

std::vector<QueryItem> load_questions(const fs::path& path)
{
    if (path.empty())
        throw Error(Errc::Io, "no questions file given (--questions or paths.questions)");
    std::vector<QueryItem> items;
    for (const auto& row : read_jsonl(path)) {
        QueryItem item;
        item.id = id_string(row.value("id", json()));
        item.question = row.value("question", std::string());
        if (item.id.empty() || item.question.empty())
            throw Error(Errc::MalformedJson, path.string() + ": each row needs \"id\" and \"question\"");
        if (auto g = row.find("gold"); g != row.end() && g->is_string())
            item.gold = g->get<std::string>();
        item.classification.task_type = row.value("task_type", item.classification.task_type);
        item.classification.complexity = row.value("complexity", item.classification.complexity);
        item.classification.domain = row.value("domain", item.classification.domain);
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<Trace> load_traces(const fs::path& path)
{
    std::vector<Trace> traces;
    for (const auto& row : read_jsonl(path))
        traces.push_back(trace_from_json(row));
    return traces;
}

std::vector<json> traces_to_rows(const std::vector<Trace>& traces)
{
    std::vector<json> rows;
    rows.reserve(traces.size());
    for (const auto& t : traces)
        rows.push_back(trace_to_json(t));
    return rows;
}

std::string utc_now()
{
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

class Pipeline {
public:
    Pipeline(const Options& opts, std::ostream& out) : opts_(opts), out_(out)
    {
        if (!opts.config_path.empty())
            config_ = load_config(opts.config_path);
        else
            apply_environment(config_);
        if (!opts.out_dir.empty())
            config_.paths.output_dir = opts.out_dir;
        if (!opts.questions.empty())
            config_.paths.questions = opts.questions;
        if (opts.rollouts > 0)
            config_.orchestrator.rollouts = opts.rollouts;
        if (opts.workers > 0)
            config_.orchestrator.workers = opts.workers;
    }

    int gen_tools()
    {
        auto factory = open_backend();
        auto items = load_questions(config_.paths.questions);
        auto records = generate_tools(items, *factory, config_.orchestrator);
        std::vector<json> rows;
        std::size_t failed = 0;
        for (std::size_t i = 0; i < items.size(); ++i) {
            json row = json::object();
            row["id"] = items[i].id;
            row["question"] = items[i].question;
            if (records[i].error) {
                ++failed;
                row["error"] = *records[i].error;
            } else {
                json tools = json::array();
                for (const auto& t : records[i].tools)
                    tools.push_back(tool_to_json(t));
                row["tools"] = std::move(tools);
            }
            rows.push_back(std::move(row));
        }
        write_file_atomic(output("tools.jsonl"), to_jsonl(rows));
        out_ << "queries " << items.size() << "  tool sets " << items.size() - failed << "  failed " << failed
             << "\n";
        return kExitOk;
    }

    int gen_traces()
    {
        auto factory = open_backend();
        auto items = load_questions(config_.paths.questions);
        attach_tools(items);
        auto orch = config_.orchestrator;
        if (!factory->deterministic())
            orch.clock = utc_now;
        auto batch = generate_batch(items, *factory, orch);

        std::vector<json> failures;
        for (const auto* f : batch.failures())
            failures.push_back(f->failure_json());
        auto traces = batch.traces();
        write_file_atomic(output("traces.jsonl"), to_jsonl(traces_to_rows(traces)));
        write_file_atomic(output("failures.jsonl"), to_jsonl(failures));
        out_ << "queries " << items.size() << "  rollouts " << orch.rollouts << "  traces " << traces.size()
             << "  failures " << failures.size() << "\n";
        return kExitOk;
    }

    int score()
    {
        auto traces = load_traces(input_or("traces.jsonl"));
        auto golds = gold_lookup();
        std::vector<json> rows;
        double reward_sum = 0.0, em_sum = 0.0, f1_sum = 0.0;
        for (const auto& trace : traces) {
            auto gold = gold_for(trace, golds);
            auto reward = trace_reward(trace, gold, config_.reward.loop_penalty);
            auto row = score_row(trace, gold, reward);
            reward_sum += reward.total;
            em_sum += row["em"].get<double>();
            f1_sum += row["f1"].get<double>();
            rows.push_back(std::move(row));
        }
        write_file_atomic(output("scores.jsonl"), to_jsonl(rows));
        print_summary(rows.size(), rows.empty() ? 0.0 : reward_sum / rows.size(), em_sum, f1_sum, true);
        return kExitOk;
    }

    int filter()
    {
        auto traces = load_traces(input_or("traces.jsonl"));
        auto golds = gold_lookup();
        std::vector<GoldTrace> items;
        for (auto& trace : traces) {
            auto gold = gold_for(trace, golds);
            items.push_back({std::move(trace), std::move(gold)});
        }
        auto result = filter_traces(items, config_.filter);
        std::vector<Trace> retained;
        for (const auto& r : result.retained)
            retained.push_back(r.trace);
        write_file_atomic(output("retained.jsonl"), to_jsonl(traces_to_rows(retained)));
        write_file_atomic(output("filter_report.json"), result.report.to_json(items).dump(2) + "\n");
        out_ << "total " << result.report.total << "  retained " << result.report.retained << "  retention "
             << std::fixed << std::setprecision(3) << result.report.retention_rate() << "\n";
        return kExitOk;
    }

    int export_corpus()
    {
        if (opts_.format == "sft") {
            auto traces = load_traces(input_or("retained.jsonl"));
            export_sft(traces, output("sft.jsonl"));
            out_ << "sft rows " << traces.size() << "\n";
            return kExitOk;
        }
        if (opts_.format != "grpo")
            throw Error(Errc::Config, "--format must be sft or grpo");

        auto traces = load_traces(input_or("traces.jsonl"));
        auto golds = gold_lookup();
        std::vector<std::string> order;
        std::map<std::string, std::vector<const Trace*>> groups;
        for (const auto& t : traces) {
            if (!groups.count(t.metadata.query_id))
                order.push_back(t.metadata.query_id);
            groups[t.metadata.query_id].push_back(&t);
        }
        std::vector<json> rows;
        for (const auto& qid : order) {
            const auto& group = groups[qid];
            std::vector<RewardBreakdown> rewards;
            std::vector<double> totals;
            for (const auto* t : group) {
                rewards.push_back(trace_reward(*t, gold_for(*t, golds), config_.reward.loop_penalty));
                totals.push_back(rewards.back().total);
            }
            auto weights = group_weights(totals);
            json rollouts = json::array();
            for (std::size_t i = 0; i < group.size(); ++i) {
                json reward = json::object();
                reward["r_ans"] = rewards[i].r_ans;
                reward["n_loops"] = rewards[i].n_loops;
                reward["r_efficiency"] = rewards[i].r_efficiency;
                reward["total"] = rewards[i].total;
                json entry = json::object();
                entry["trace"] = trace_to_json(*group[i]);
                entry["reward"] = std::move(reward);
                entry["weight"] = weights[i];
                rollouts.push_back(std::move(entry));
            }
            json row = json::object();
            row["query_id"] = qid;
            row["query"] = group.front()->query;
            row["rollouts"] = std::move(rollouts);
            rows.push_back(std::move(row));
        }
        write_file_atomic(output("grpo.jsonl"), to_jsonl(rows));
        out_ << "grpo groups " << rows.size() << "\n";
        return kExitOk;
    }

    int eval()
    {
        auto rows = read_jsonl(input_or("scores.jsonl"));
        std::vector<json> report;
        double em_sum = 0.0, f1_sum = 0.0;
        for (const auto& row : rows) {
            std::string prediction;
            if (auto p = row.find("prediction"); p != row.end() && p->is_string())
                prediction = p->get<std::string>();
            else if (auto a = row.find("a_f"); a != row.end() && a->is_string())
                prediction = a->get<std::string>();
            auto gold = row.value("gold", std::string());
            json out = json::object();
            out["id"] = row.contains("id") ? id_string(row["id"]) : row.value("trace_id", std::string());
            out["prediction"] = prediction;
            out["gold"] = gold;
            int em = exact_match(prediction, gold);
            double f1 = f1_score(prediction, gold);
            out["em"] = em;
            out["f1"] = f1;
            em_sum += em;
            f1_sum += f1;
            report.push_back(std::move(out));
        }
        write_file_atomic(output("eval.jsonl"), to_jsonl(report));
        print_summary(report.size(), 0.0, em_sum, f1_sum, false);
        return kExitOk;
    }

    int toolstats()
    {
        auto traces = load_traces(input_or("traces.jsonl"));
        auto stats = tool_stats(traces);
        write_file_atomic(output("toolstats.json"), stats.to_json().dump(2) + "\n");
        out_ << "tools " << stats.table.size() << "  alpha " << std::fixed << std::setprecision(4)
             << stats.fit.alpha << "  r2 " << stats.fit.r2 << "\n";
        return kExitOk;
    }

    void validate(bool with_backend) const { config_.validate(with_backend); }

private:
    fs::path output(const char* name) const { return config_.paths.output_dir / name; }

    fs::path input_or(const char* default_name) const
    {
        return opts_.input.empty() ? output(default_name) : fs::path(opts_.input);
    }

    std::unique_ptr<BackendFactory> open_backend() const
    {
        return make_backend_factory(config_.backend, opts_.seed);
    }

    void attach_tools(std::vector<QueryItem>& items) const
    {
        fs::path tools_path = opts_.tools.empty() ? output("tools.jsonl") : fs::path(opts_.tools);
        if (!fs::exists(tools_path)) {
            if (!opts_.tools.empty())
                throw Error(Errc::Io, "missing " + tools_path.string());
            return;
        }
        std::map<std::string, std::vector<ToolInterface>> by_id;
        for (const auto& row : read_jsonl(tools_path)) {
            auto tools = row.find("tools");
            if (tools == row.end() || !tools->is_array())
                continue;
            std::vector<ToolInterface> parsed;
            for (const auto& t : *tools)
                parsed.push_back(tool_from_json(t));
            by_id[id_string(row.value("id", json()))] = std::move(parsed);
        }
        for (auto& item : items) {
            if (auto it = by_id.find(item.id); it != by_id.end())
                item.tools = it->second;
        }
    }

    std::map<std::string, std::string> gold_lookup() const
    {
        std::map<std::string, std::string> golds;
        if (config_.paths.questions.empty() || !fs::exists(config_.paths.questions))
            return golds;
        for (const auto& item : load_questions(config_.paths.questions)) {
            if (item.gold)
                golds[item.id] = *item.gold;
        }
        return golds;
    }

    static std::string gold_for(const Trace& trace, const std::map<std::string, std::string>& golds)
    {
        if (trace.metadata.gold)
            return *trace.metadata.gold;
        if (auto it = golds.find(trace.metadata.query_id); it != golds.end())
            return it->second;
        throw Error(Errc::Io, "no gold answer for trace " + trace_id(trace));
    }

    void print_summary(std::size_t count, double mean_reward, double em_sum, double f1_sum, bool with_reward)
    {
        double n = count ? static_cast<double>(count) : 1.0;
        out_ << std::left << std::setw(8) << "count";
        if (with_reward)
            out_ << std::setw(14) << "mean_reward";
        out_ << std::setw(8) << "EM" << "F1\n";
        out_ << std::setw(8) << count << std::fixed;
        if (with_reward)
            out_ << std::setw(14) << std::setprecision(4) << mean_reward;
        out_ << std::setprecision(1) << std::setw(8) << 100.0 * em_sum / n << 100.0 * f1_sum / n << "\n";
    }

    Options opts_;
    std::ostream& out_;
    PipelineConfig config_;
};

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    Options opts;
    CLI::App app{"Simulated tool-use trace generation, scoring and export"};
    app.require_subcommand(1);
    app.add_option("--config", opts.config_path, "Pipeline config file (JSON)");
    app.add_option("--out", opts.out_dir, "Output directory (overrides paths.output_dir)");

    auto* gen_tools = app.add_subcommand("gen-tools", "Generate a tool set per question");
    auto* gen_traces = app.add_subcommand("gen-traces", "Generate n rollouts per question");
    auto* score = app.add_subcommand("score", "Score traces against gold answers");
    auto* filter = app.add_subcommand("filter", "Keep SFT-grade traces");
    auto* exporter = app.add_subcommand("export", "Write SFT or GRPO training files");
    auto* eval = app.add_subcommand("eval", "EM/F1 over a prediction report");
    auto* toolstats = app.add_subcommand("toolstats", "Tool frequency table and power-law fit");

    for (auto* sub : {gen_tools, gen_traces})
        sub->add_option("--questions", opts.questions, "Questions JSONL {id, question, gold}");
    gen_traces->add_option("--tools", opts.tools, "tools.jsonl from gen-tools");
    gen_traces->add_option("--n", opts.rollouts, "Rollouts per question")->check(CLI::PositiveNumber);
    for (auto* sub : {gen_tools, gen_traces}) {
        sub->add_option("--workers", opts.workers, "Concurrent rollouts")->check(CLI::PositiveNumber);
        sub->add_option("--seed", opts.seed, "Variant selection seed (scripted backend only)");
    }
    for (auto* sub : {score, filter, exporter, eval, toolstats}) {
        sub->add_option("--input", opts.input, "Input file (defaults to the previous stage's output)");
        sub->add_option("--questions", opts.questions, "Questions JSONL supplying gold answers");
    }
    exporter->add_option("--format", opts.format, "sft or grpo")->check(CLI::IsMember({"sft", "grpo"}));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty())
        reversed.pop_back();
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        auto code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        Pipeline pipeline(opts, out);
        bool needs_backend = gen_tools->parsed() || gen_traces->parsed();
        pipeline.validate(needs_backend);
        if (gen_tools->parsed())
            return pipeline.gen_tools();
        if (gen_traces->parsed())
            return pipeline.gen_traces();
        if (score->parsed())
            return pipeline.score();
        if (filter->parsed())
            return pipeline.filter();
        if (exporter->parsed())
            return pipeline.export_corpus();
        if (eval->parsed())
            return pipeline.eval();
        if (toolstats->parsed())
            return pipeline.toolstats();
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.code() == Errc::Config ? kExitConfig : kExitFatal;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFatal;
    }
    return kExitFatal;
}

} // namespace mtr
