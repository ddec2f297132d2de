#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "memvqa/adapters.hpp"
#include "memvqa/annotation.hpp"
#include "memvqa/config.hpp"
#include "memvqa/dataset.hpp"
#include "memvqa/error.hpp"
#include "memvqa/exporter.hpp"
#include "memvqa/http_backend.hpp"
#include "memvqa/metrics.hpp"
#include "memvqa/pipeline.hpp"
#include "memvqa/retrieval.hpp"
#include "memvqa/scripted_backend.hpp"
#include "memvqa/text.hpp"
#include "memvqa/trace.hpp"

namespace fs = std::filesystem;

namespace memvqa::cli {
namespace {

// Options shared by every subcommand. Values given on the command line are collected as
// key/value pairs so they can be layered over the config file and the environment.
struct Options {
    std::string config_file;
    std::string train_samples;
    std::string test_samples;
    KeyValues flags;
};

struct Context {
    RunConfig config;
    KeyValues merged;  // file < environment < flags
    Options* options = nullptr;
};

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config_file, "key = value configuration file")->check(CLI::ExistingFile);
    auto kv = [sub, &o](const std::string& flag, const std::string& key, const std::string& help) {
        sub->add_option_function<std::string>(
            flag, [&o, key](const std::string& v) { o.flags.set(key, v); }, help);
    };
    kv("--dataset", "dataset", "endovis18 | endovis17 | cholec80");
    kv("--out", "out", "output directory");
    kv("--k", "k", "hints per question");
    kv("--m", "m", "selected indirect memory entries (0 disables stage 2)");
    kv("--n", "n", "minimum question frequency for indirect memory");
    kv("--seed", "seed", "export sampling seed");
    sub->add_option("--train", o.train_samples, "training split as samples JSONL");
    sub->add_option("--test", o.test_samples, "test split as samples JSONL");
    sub->add_option_function<std::vector<std::string>>(
        "--set",
        [&o](const std::vector<std::string>& pairs) {
            for (const auto& p : pairs) {
                const auto eq = p.find('=');
                if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--set", "expected KEY=VALUE: " + p);
                o.flags.set(text::trim(p.substr(0, eq)), text::trim(p.substr(eq + 1)));
            }
        },
        "override any configuration key (KEY=VALUE, repeatable)");
}

KeyValues known_environment_keys() {
    KeyValues keys = RunConfig().to_key_values();
    for (auto id : {DatasetId::EndoVis18, DatasetId::EndoVis17, DatasetId::Cholec80}) {
        for (const char* suffix : {".root", ".train", ".test", ".qa_dir", ".qa_suffix", ".image"}) {
            keys.set(std::string(to_string(id)) + suffix, "");
        }
    }
    return keys;
}

Context resolve(Options& o, std::optional<DatasetId> fallback = std::nullopt) {
    Context ctx;
    ctx.options = &o;
    if (!o.config_file.empty()) ctx.merged = KeyValues::read(o.config_file);
    ctx.merged.merge(environment_overrides(known_environment_keys()));
    ctx.merged.merge(o.flags);

    DatasetId id;
    if (auto d = ctx.merged.get("dataset")) {
        id = parse_dataset_id(*d);
    } else if (fallback) {
        id = *fallback;
    } else {
        throw ConfigError("no dataset given (use --dataset or a `dataset` key)");
    }
    ctx.config = RunConfig::defaults_for(id);
    ctx.config.apply(ctx.merged);
    ctx.config.validate();
    return ctx;
}

SampleSet load_split(const Context& ctx, Split split) {
    const auto& path = split == Split::Train ? ctx.options->train_samples : ctx.options->test_samples;
    const auto ds = ctx.config.dataset;
    if (!path.empty()) {
        auto set = read_samples_jsonl(fs::path(path));
        if (!set.empty() && set[0].dataset != ds) {
            throw ConfigError(path + " holds " + std::string(to_string(set[0].dataset)) + " samples, expected " +
                              std::string(to_string(ds)));
        }
        if (!set.empty() && set.split() != split) {
            throw ConfigError(path + " holds the " + std::string(to_string(set.split())) + " split");
        }
        return set;
    }
    if (ctx.merged.contains(std::string(to_string(ds)) + ".root")) {
        return load_dataset(DatasetSource::from_config(ctx.merged, ds), split);
    }
    throw ConfigError("no " + std::string(to_string(split)) + " samples: pass --" + std::string(to_string(split)) +
                      " or set " + std::string(to_string(ds)) + ".root in the config file");
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FileLayoutError("cannot write " + path.string());
    return out;
}

// The effective configuration of this invocation, written next to every artifact.
void echo_config(const Context& ctx, const std::string& command) {
    KeyValues kv = ctx.config.to_key_values();
    const std::string prefix = std::string(to_string(ctx.config.dataset)) + ".";
    for (const auto& [key, value] : ctx.merged.values()) {
        if (key.rfind(prefix, 0) == 0) kv.set(key, value);
    }
    if (!ctx.options->train_samples.empty()) kv.set("train_samples", ctx.options->train_samples);
    if (!ctx.options->test_samples.empty()) kv.set("test_samples", ctx.options->test_samples);
    auto out = open_out(ctx.config.out_dir / "config.txt");
    out << "# memvqa " << command << '\n';
    kv.write(out);
}

PipelineConfig pipeline_config(const RunConfig& c) {
    PipelineConfig p = PipelineConfig::defaults_for(c.dataset);
    p.k = c.k;
    p.m = c.m;
    p.dm_decoding = c.dm_decoding;
    p.im_decoding = c.im_decoding;
    p.answer_decoding = c.answer_decoding;
    p.image_root = c.image_root;
    return p;
}

Split parse_split_or_usage(const std::string& s) { return parse_split(s); }

void write_json(const fs::path& path, const nlohmann::json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

// ---- stats ---------------------------------------------------------------------------------

int cmd_stats(Options& o, const std::string& split_name, const std::string& memory, bool as_json, std::ostream& out) {
    auto ctx = resolve(o);
    const auto split = parse_split_or_usage(split_name);
    const auto set = load_split(ctx, split);
    std::optional<IndirectMemoryStore> store;
    if (!memory.empty()) store = IndirectMemoryStore::read_jsonl(fs::path(memory));
    const auto s = compute_stats(set, store ? &*store : nullptr);

    if (as_json) {
        nlohmann::json j{{"dataset", to_string(ctx.config.dataset)},
                         {"split", to_string(split)},
                         {"n_videos", s.n_videos},
                         {"n_frames", s.n_frames},
                         {"n_qa", s.n_qa},
                         {"n_questions", s.n_questions},
                         {"n_labels", s.n_labels},
                         {"qa_per_frame", s.qa_per_frame},
                         {"answers_per_question", s.answers_per_question}};
        if (s.mem_per_frame) j["mem_per_frame"] = *s.mem_per_frame;
        for (const auto& [type, count] : s.per_type) j["per_type"][std::string(to_string(type))] = count;
        out << j.dump(2) << '\n';
        return kExitOk;
    }
    out << "dataset " << to_string(ctx.config.dataset) << ", split " << to_string(split) << '\n';
    out << std::left << std::setw(22) << "n_videos" << s.n_videos << '\n'
        << std::setw(22) << "n_frames" << s.n_frames << '\n'
        << std::setw(22) << "n_qa" << s.n_qa << '\n'
        << std::setw(22) << "n_questions" << s.n_questions << '\n'
        << std::setw(22) << "n_labels" << s.n_labels << '\n'
        << std::fixed << std::setprecision(2) << std::setw(22) << "qa_per_frame" << s.qa_per_frame << '\n'
        << std::setw(22) << "answers_per_question" << s.answers_per_question << '\n';
    if (s.mem_per_frame) out << std::setw(22) << "mem_per_frame" << *s.mem_per_frame << '\n';
    for (const auto& [type, count] : s.per_type) {
        out << std::setw(22) << ("type." + std::string(to_string(type))) << count << '\n';
    }
    return kExitOk;
}

// ---- ingest --------------------------------------------------------------------------------

int cmd_ingest(Options& o, const std::vector<std::string>& splits, std::ostream& out) {
    auto ctx = resolve(o);
    for (const auto& name : splits) {
        const auto split = parse_split_or_usage(name);
        const auto set = load_dataset(DatasetSource::from_config(ctx.merged, ctx.config.dataset), split);
        const auto path = ctx.config.out_dir / ("samples_" + std::string(to_string(split)) + ".jsonl");
        auto f = open_out(path);
        write_samples_jsonl(set, f);
        out << "wrote " << set.size() << " samples to " << path.string() << '\n';
    }
    echo_config(ctx, "ingest");
    return kExitOk;
}

// ---- annotate ------------------------------------------------------------------------------

int cmd_annotate(Options& o, const std::vector<std::string>& splits, bool emit_oracle, std::ostream& out) {
    auto ctx = resolve(o);
    const auto& c = ctx.config;
    const auto train = load_split(ctx, Split::Train);
    const auto table = build_frequency_table(train);

    IndirectMemoryStore store;
    std::string dm_text;
    nlohmann::json oracle_entries = nlohmann::json::array();
    std::size_t dm_count = 0;
    for (const auto& name : splits) {
        const auto split = parse_split_or_usage(name);
        const auto set = split == Split::Train ? train : load_split(ctx, split);
        const auto split_store = annotate_indirect_memory(set, table, c.n, c.k);
        for (const auto& [frame, entries] : split_store.frames()) {
            if (store.find(frame) != nullptr) {
                throw ConfigError("frame " + to_string(frame) + " appears in more than one split");
            }
            store.set(frame, entries);
        }
        const auto dm = annotate_direct_memories(set, table, c.k);
        dm_count += dm.size();
        std::ostringstream dm_stream;
        dm.write_jsonl(dm_stream);
        dm_text += dm_stream.str();
        if (emit_oracle) {
            auto doc = mock_from_annotations(set, split_store, dm).to_json();
            for (auto& e : doc.at("entries")) {
                oracle_entries.push_back(std::move(e));
            }
        }
    }

    {
        auto f = open_out(c.out_dir / "memory.jsonl");
        store.write_jsonl(f);
    }
    {
        auto f = open_out(c.out_dir / "dm.jsonl");
        f << dm_text;
    }
    out << "indirect memory: " << store.frames().size() << " frames, " << store.total_entries() << " entries\n";
    out << "direct memory: " << dm_count << " questions\n";
    if (emit_oracle) {
        MockScript oracle;
        oracle.backend_id = "oracle";
        auto doc = oracle.to_json();
        doc["entries"] = std::move(oracle_entries);
        const auto script = MockScript::from_json(doc);
        script.write(c.out_dir / "oracle.json");
        out << "oracle script: " << script.size() << " responses\n";
    }
    echo_config(ctx, "annotate");
    return kExitOk;
}

// ---- select --------------------------------------------------------------------------------

int cmd_select(Options& o, const std::string& split_name, const std::string& memory, std::ostream& out) {
    auto ctx = resolve(o);
    const auto split = parse_split_or_usage(split_name);
    const auto set = load_split(ctx, split);
    const auto store = IndirectMemoryStore::read_jsonl(fs::path(memory));
    auto f = open_out(ctx.config.out_dir / "selection.jsonl");
    std::size_t selected_total = 0;
    std::size_t missing = 0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& s = set[i];
        const auto* entries = store.find(s.frame_key());
        nlohmann::json j{{"index", i}, {"video", s.video}, {"frame", s.frame}, {"question", s.question}};
        j["selected"] = nlohmann::json::array();
        if (entries == nullptr) {
            ++missing;
        } else {
            for (const auto& sel : select_indirect_memory(s.question, *entries, ctx.config.m)) {
                const auto& e = (*entries)[sel.index];
                j["selected"].push_back({{"q", e.question}, {"hints", e.hints.hints()}, {"score", sel.score}});
                ++selected_total;
            }
        }
        f << j.dump() << '\n';
    }
    out << set.size() << " questions, " << selected_total << " entries selected (M=" << ctx.config.m << ")";
    if (missing > 0) out << ", " << missing << " without a memory record";
    out << '\n';
    echo_config(ctx, "select");
    return kExitOk;
}

// ---- infer ---------------------------------------------------------------------------------

struct InferArgs {
    std::string split = "test";
    bool resume = false;
    bool dry_run = false;
    std::size_t stop_after = 0;
};

std::unique_ptr<Backend> make_backend(const RunConfig& c) {
    if (c.backend == "http" || !c.backend_url.empty()) {
        if (c.backend_url.empty()) throw ConfigError("backend http needs backend_url");
        HttpBackendConfig hc;
        hc.url = c.backend_url;
        hc.model = c.backend_model;
        if (const char* key = std::getenv(c.api_key_env.c_str())) hc.api_key = key;
        hc.timeout = std::chrono::milliseconds(c.timeout_ms);
        return std::make_unique<HttpBackend>(hc);
    }
    if (c.backend != "mock") throw ConfigError("unknown backend '" + c.backend + "'");
    if (c.mock_script.empty()) throw ConfigError("backend mock needs --mock-script");
    return std::make_unique<ScriptedBackend>(MockScript::read(c.mock_script));
}

int cmd_infer(Options& o, const InferArgs& a, std::ostream& out, std::ostream& err) {
    auto ctx = resolve(o);
    const auto& c = ctx.config;
    const auto split = parse_split_or_usage(a.split);
    const auto set = load_split(ctx, split);
    const auto pc = pipeline_config(c);

    if (a.dry_run) {
        std::size_t dm_calls = 0;
        for (const auto& s : set.samples()) {
            const bool skip = s.dataset == DatasetId::Cholec80 &&
                              classify_question(s.question, s.dataset) == QuestionType::Binary;
            if (!skip) ++dm_calls;
        }
        const std::size_t im_calls = c.m > 0 ? set.frames().size() : 0;
        out << "plan: infer " << to_string(c.dataset) << '/' << to_string(split) << '\n'
            << "  samples          " << set.size() << '\n'
            << "  frames           " << set.frames().size() << '\n'
            << "  dm calls         " << dm_calls << " (" << c.dm_decoding.describe() << ", "
            << c.dm_decoding.max_new_tokens << " tokens)\n"
            << "  im calls         " << im_calls << " (" << c.im_decoding.describe() << ", "
            << c.im_decoding.max_new_tokens << " tokens)\n"
            << "  answer calls     " << set.size() << '\n'
            << "  backend calls    " << dm_calls + im_calls + set.size() << " (before retries)\n"
            << "  backend          " << (c.backend_url.empty() ? "mock " + c.mock_script : "http " + c.backend_url)
            << '\n'
            << "  parallelism      " << c.parallelism << '\n'
            << "  output           " << c.out_dir.string() << '\n';
        return kExitOk;
    }

    auto inner = make_backend(c);
    RetryingBackend backend(*inner, RetryPolicy{c.retries, std::chrono::milliseconds(c.backoff_ms)});
    fs::create_directories(c.out_dir);
    TraceSink trace(c.out_dir / "trace.jsonl", a.resume);

    RunOptions options;
    options.parallelism = c.parallelism;
    options.failure_threshold = c.failure_threshold;
    options.checkpoint = c.out_dir / "checkpoint.jsonl";
    options.resume = a.resume;
    if (a.stop_after > 0) options.stop_after = a.stop_after;

    const auto result = run_split(set, backend, pc, options, &trace);
    echo_config(ctx, "infer");
    if (result.stopped_early) {
        err << "stopped after " << result.predictions.size() << " of " << set.size()
            << " samples; rerun with --resume to continue\n";
        return kExitRunFailure;
    }
    write_predictions_jsonl(result.predictions, c.out_dir / "predictions.jsonl");
    out << result.predictions.size() << " predictions (" << result.resumed << " resumed), " << result.failures
        << " failed, " << result.im_backend_calls << " indirect-memory calls\n";
    if (result.exceeded_threshold()) {
        err << "failure ratio " << result.failure_ratio() << " exceeds threshold " << c.failure_threshold << '\n';
        return kExitRunFailure;
    }
    return kExitOk;
}

// ---- eval / report -------------------------------------------------------------------------

int cmd_eval(Options& o, const std::string& predictions_path, bool report_mode, std::ostream& out) {
    const auto predictions = read_predictions_jsonl(fs::path(predictions_path));
    if (predictions.empty()) throw EvalError("no predictions in " + predictions_path);
    auto ctx = resolve(o, predictions.front().sample.dataset);
    const auto& vocab = LabelVocab::for_dataset(ctx.config.dataset);
    const auto report = evaluate(predictions, vocab);

    write_json(ctx.config.out_dir / "metrics.json", report.to_json(vocab));
    report.print_table(out, vocab);
    if (report_mode) {
        auto csv = open_out(ctx.config.out_dir / "per_type.csv");
        report.write_type_csv(csv);
        out << "wrote " << (ctx.config.out_dir / "per_type.csv").string() << '\n';
    }
    echo_config(ctx, report_mode ? "report" : "eval");
    return kExitOk;
}

// ---- export --------------------------------------------------------------------------------

int cmd_export(Options& o, const std::string& memory, std::ostream& out, std::ostream& err) {
    auto ctx = resolve(o);
    const auto& c = ctx.config;
    const auto train = load_split(ctx, Split::Train);
    const auto table = build_frequency_table(train);
    const auto store = memory.empty() ? annotate_indirect_memory(train, table, c.n, c.k)
                                      : IndirectMemoryStore::read_jsonl(fs::path(memory));

    ExportSummary summary;
    const auto records = export_training_records(train, table, store, {c.dataset, c.k, c.m, c.n, c.seed}, &summary);
    {
        auto f = open_out(c.out_dir / "records.jsonl");
        write_records_jsonl(records, f);
    }
    write_json(c.out_dir / "export_summary.json",
               {{"dm_records", summary.dm_records},
                {"im_records", summary.im_records},
                {"mvqa_records", summary.mvqa_records},
                {"dm_excluded", summary.dm_excluded},
                {"mvqa_excluded", summary.mvqa_excluded},
                {"mvqa_without_memory", summary.mvqa_without_memory},
                {"seed", c.seed},
                {"rng", "mt19937_64"}});
    echo_config(ctx, "export");
    out << records.size() << " records: " << summary.im_records << " im, " << summary.dm_records << " dm, "
        << summary.mvqa_records << " mvqa\n";

    const auto validation = validate_records(records, c.m);
    if (!validation.ok()) {
        err << validation.violations.size() << " invalid records\n";
        for (std::size_t i = 0; i < validation.violations.size() && i < 10; ++i) {
            err << "  record " << validation.violations[i].index << ": " << validation.violations[i].message << '\n';
        }
        return kExitRunFailure;
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"memvqa: memory-augmented visual question answering pipeline", "memvqa"};
    app.require_subcommand(1);

    Options o;
    std::string split = "train";
    std::string memory;
    std::string predictions = "out/predictions.jsonl";
    std::vector<std::string> splits{"train", "test"};
    bool as_json = false;
    bool emit_oracle = false;
    InferArgs infer;

    auto* stats = app.add_subcommand("stats", "dataset statistics for one split");
    add_common(stats, o);
    stats->add_option("--split", split, "train | test")->capture_default_str();
    stats->add_option("--memory", memory, "memory.jsonl for the per-frame memory count");
    stats->add_flag("--json", as_json, "print JSON");

    auto* ingest = app.add_subcommand("ingest", "convert native dataset layouts into samples JSONL");
    add_common(ingest, o);
    ingest->add_option("--split", splits, "splits to convert")->capture_default_str();

    auto* annotate = app.add_subcommand("annotate", "build direct and indirect memory from the training split");
    add_common(annotate, o);
    annotate->add_option("--split", splits, "splits whose frames get memory records")->capture_default_str();
    annotate->add_flag("--emit-oracle", emit_oracle, "also write oracle.json, a mock script replaying the annotations");

    auto* select = app.add_subcommand("select", "top-M indirect memory selection for every question");
    add_common(select, o);
    std::string select_split = "test";
    select->add_option("--split", select_split, "train | test")->capture_default_str();
    select->add_option("--memory", memory, "memory.jsonl")->required();

    auto* inf = app.add_subcommand("infer", "run the three-stage pipeline over a split");
    add_common(inf, o);
    inf->add_option("--split", infer.split, "train | test")->capture_default_str();
    inf->add_option_function<std::string>(
        "--mock-script", [&o](const std::string& v) { o.flags.set("mock_script", v); }, "scripted backend JSON");
    inf->add_option_function<std::string>(
        "--backend-url", [&o](const std::string& v) { o.flags.set("backend_url", v); },
        "chat-completions endpoint (selects the http backend)");
    inf->add_option_function<std::string>(
        "--parallelism", [&o](const std::string& v) { o.flags.set("parallelism", v); }, "concurrent samples");
    inf->add_flag("--resume", infer.resume, "continue from the checkpoint in the output directory");
    inf->add_flag("--dry-run", infer.dry_run, "print the plan and exit");
    inf->add_option("--stop-after", infer.stop_after, "stop after this many samples (partial run)");

    auto* eval = app.add_subcommand("eval", "score a predictions file");
    add_common(eval, o);
    eval->add_option("--predictions", predictions, "predictions.jsonl")->capture_default_str();

    auto* report = app.add_subcommand("report", "eval plus per-question-type CSV");
    add_common(report, o);
    report->add_option("--predictions", predictions, "predictions.jsonl")->capture_default_str();

    auto* exp = app.add_subcommand("export", "write instruction-tuning records");
    add_common(exp, o);
    exp->add_option("--memory", memory, "memory.jsonl (default: annotate the training split)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (stats->parsed()) return cmd_stats(o, split, memory, as_json, out);
        if (ingest->parsed()) return cmd_ingest(o, splits, out);
        if (annotate->parsed()) return cmd_annotate(o, splits, emit_oracle, out);
        if (select->parsed()) return cmd_select(o, select_split, memory, out);
        if (inf->parsed()) return cmd_infer(o, infer, out, err);
        if (eval->parsed()) return cmd_eval(o, predictions, false, out);
        if (report->parsed()) return cmd_eval(o, predictions, true, out);
        if (exp->parsed()) return cmd_export(o, memory, out, err);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRunFailure;
    }
    return kExitUsage;
}

}  // namespace memvqa::cli
