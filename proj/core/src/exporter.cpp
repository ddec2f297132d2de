#include "memvqa/exporter.hpp"

#include <functional>
#include <istream>
#include <ostream>
#include <random>

#include "jsonl.hpp"
#include "memvqa/error.hpp"
#include "memvqa/prompting.hpp"
#include "memvqa/retrieval.hpp"
#include "memvqa/text.hpp"

namespace memvqa {

std::string_view to_string(RecordTask task) {
    switch (task) {
        case RecordTask::DM: return "dm";
        case RecordTask::IM: return "im";
        case RecordTask::MVQA: return "mvqa";
    }
    return "?";
}

namespace {

RecordTask parse_record_task(std::string_view name) {
    if (name == "dm") return RecordTask::DM;
    if (name == "im") return RecordTask::IM;
    if (name == "mvqa") return RecordTask::MVQA;
    throw ExportError("unknown record task '" + std::string(name) + "'");
}

}  // namespace

std::vector<TrainingRecord> export_training_records(const SampleSet& train, const AnswerFrequencyTable& table,
                                                    const IndirectMemoryStore& store, const ExportConfig& config,
                                                    ExportSummary* summary) {
    if (config.m == 0) throw ExportError("M must be at least 1 for memory-augmented records");

    std::vector<std::string> missing;
    for (const auto& frame : train.frames()) {
        if (store.find(frame) == nullptr) missing.push_back(to_string(frame));
    }
    if (!missing.empty()) {
        std::string msg = "frames without indirect memory: ";
        for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg += (i ? ", " : "") + missing[i];
        if (missing.size() > 10) msg += " (+" + std::to_string(missing.size() - 10) + " more)";
        throw ExportError(msg);
    }

    ExportSummary local;
    ExportSummary& s = summary != nullptr ? *summary : local;
    s = {};
    std::mt19937_64 rng(config.seed);
    std::vector<TrainingRecord> records;

    for (const auto& frame : train.frames()) {
        const auto& entries = *store.find(frame);
        const auto& indices = train.frame_samples(frame);
        const std::string image = indices.empty() ? std::string() : train.samples()[indices.front()].image;

        records.push_back({RecordTask::IM, image, render_prompt(PromptTask::IndirectMemoryGen, {}, frame).rendered_text,
                           render_target(IndirectMemoryStore::serialize_entries(entries))});
        ++s.im_records;

        for (const auto idx : indices) {
            const Sample& sample = train.samples()[idx];
            const auto flags = annotation_exclusions(sample, table);
            const HintSet hints = flags.skip_direct_memory
                                      ? HintSet::null_sentinel()
                                      : annotate_direct_memory(sample.question, sample.answer, table, config.k);
            if (flags.skip_direct_memory) {
                ++s.dm_excluded;
            } else {
                PromptInputs in;
                in.question = sample.question;
                records.push_back({RecordTask::DM, sample.image,
                                   render_prompt(PromptTask::DirectMemoryGen, in, frame).rendered_text,
                                   render_target(hints.serialize())});
                ++s.dm_records;
            }

            if (flags.skip_memory_vqa) {
                ++s.mvqa_excluded;
                continue;
            }
            const auto selected = select_indirect_memory(sample.question, entries, config.m);
            if (selected.empty()) {
                ++s.mvqa_without_memory;
                continue;
            }
            const std::size_t c = 1 + static_cast<std::size_t>(rng() % config.m);
            PromptInputs in;
            in.question = sample.question;
            in.hints = hints;
            for (std::size_t i = 0; i < selected.size() && i < c; ++i) in.memory.push_back(entries[selected[i].index]);
            s.memory_counts.push_back(in.memory.size());
            records.push_back({RecordTask::MVQA, sample.image,
                               render_prompt(PromptTask::MemoryAugmentedVQA, in, frame).rendered_text,
                               render_target(sample.answer)});
            ++s.mvqa_records;
        }
    }
    return records;
}

void write_records_jsonl(const std::vector<TrainingRecord>& records, std::ostream& out) {
    for (const auto& r : records) {
        nlohmann::json j;
        j["task"] = to_string(r.task);
        j["image"] = r.image;
        j["prompt"] = r.prompt;
        j["target"] = r.target;
        out << detail::dump_line(j) << '\n';
    }
}

std::vector<TrainingRecord> read_records_jsonl(std::istream& in, const std::string& source_name) {
    std::vector<TrainingRecord> records;
    detail::for_each_jsonl(in, source_name, [&](const nlohmann::json& j, std::size_t line) {
        try {
            records.push_back({parse_record_task(j.at("task").get<std::string>()), j.at("image").get<std::string>(),
                               j.at("prompt").get<std::string>(), j.at("target").get<std::string>()});
        } catch (const ExportError& e) {
            throw RecordError(source_name, line, e.what());
        }
    });
    return records;
}

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

void check_mvqa(const TrainingRecord& r, std::size_t m, const std::function<void(std::string)>& fail) {
    static constexpr std::string_view kMemory = "Memory:\n";
    static constexpr std::string_view kQuestion = "Question:\n";
    const auto mem_pos = r.prompt.find(kMemory);
    const auto q_pos = r.prompt.find(kQuestion, mem_pos == std::string::npos ? 0 : mem_pos);
    if (mem_pos == std::string::npos || q_pos == std::string::npos) {
        fail("prompt lacks Memory/Question sections");
        return;
    }
    const auto block = std::string_view(r.prompt).substr(mem_pos + kMemory.size(), q_pos - mem_pos - kMemory.size());
    const auto memory = parse_indirect_memory(block);
    if (memory.skipped_lines > 0) fail("memory block has " + std::to_string(memory.skipped_lines) + " unparsable lines");
    if (memory.entries.empty() || memory.entries.size() > m) {
        fail("memory block holds " + std::to_string(memory.entries.size()) + " entries, expected 1.." +
             std::to_string(m));
    }

    auto question_line = std::string_view(r.prompt).substr(q_pos + kQuestion.size());
    question_line = question_line.substr(0, question_line.find(kEndMarker));
    const auto open = question_line.rfind('[');
    if (open == std::string_view::npos) {
        fail("question line has no hint list");
        return;
    }
    const auto hints = parse_hint_list(question_line.substr(open));
    if (hints.malformed || hints.lenient) fail("question hints are malformed");
    const auto gold = strip_end_marker(r.target);
    if (!hints.hints.is_null() && !hints.hints.contains(gold)) fail("gold answer '" + gold + "' missing from hints");
}

}  // namespace

ValidationReport validate_records(const std::vector<TrainingRecord>& records, std::size_t m) {
    ValidationReport report;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        auto fail = [&report, i](std::string message) { report.violations.push_back({i, std::move(message)}); };
        ++report.checked;
        if (!ends_with(r.target, kEndMarker)) fail("target does not end with the end marker");
        if (!ends_with(r.prompt, "<|assistant|>\n")) fail("prompt does not end with the assistant turn");
        switch (r.task) {
            case RecordTask::DM: {
                const auto parsed = parse_hint_list(strip_end_marker(r.target));
                if (parsed.malformed || parsed.lenient) fail("hint target is not a well-formed list");
                break;
            }
            case RecordTask::IM: {
                const auto parsed = parse_indirect_memory(strip_end_marker(r.target));
                if (parsed.skipped_lines > 0) {
                    fail("indirect memory target has " + std::to_string(parsed.skipped_lines) + " unparsable lines");
                }
                break;
            }
            case RecordTask::MVQA: check_mvqa(r, m, fail); break;
        }
    }
    return report;
}

}  // namespace memvqa
