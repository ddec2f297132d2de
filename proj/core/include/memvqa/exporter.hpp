#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "memvqa/annotation.hpp"
#include "memvqa/dataset.hpp"

namespace memvqa {

enum class RecordTask { DM, IM, MVQA };

std::string_view to_string(RecordTask task);

/// One instruction-tuning example. Only `target` is loss-bearing; `prompt` is the user turn
/// exactly as rendered at inference time.
struct TrainingRecord {
    RecordTask task = RecordTask::DM;
    std::string image;
    std::string prompt;
    std::string target;  // assistant turn including the trailing `<|end|>`
    bool operator==(const TrainingRecord&) const = default;
};

struct ExportConfig {
    DatasetId dataset = DatasetId::EndoVis18;
    std::size_t k = 2;
    std::size_t m = 3;
    std::size_t n = 500;
    std::uint64_t seed = 0;
};

struct ExportSummary {
    std::size_t dm_records = 0;
    std::size_t im_records = 0;
    std::size_t mvqa_records = 0;
    std::size_t dm_excluded = 0;           // binary questions
    std::size_t mvqa_excluded = 0;         // single-answer questions
    std::size_t mvqa_without_memory = 0;   // no selectable indirect memory in the frame
    std::vector<std::size_t> memory_counts;  // sampled entry count of each MVQA record, in order
};

/// Per frame: one IM record, then for each of its samples a DM record (unless binary Cholec80)
/// and an MVQA record (unless single-answer, or the frame offers no selectable memory).
/// MVQA memory size c is drawn per record as `1 + (mt19937_64(seed)() mod M)` in emission order
/// and the record uses the top-c entries from select_indirect_memory.
/// Throws ExportError (listing offenders) when a frame lacks indirect memory or M == 0.
std::vector<TrainingRecord> export_training_records(const SampleSet& train, const AnswerFrequencyTable& table,
                                                    const IndirectMemoryStore& store, const ExportConfig& config,
                                                    ExportSummary* summary = nullptr);

/// JSONL with fields task, image, prompt, target.
void write_records_jsonl(const std::vector<TrainingRecord>& records, std::ostream& out);
std::vector<TrainingRecord> read_records_jsonl(std::istream& in, const std::string& source_name = "<stream>");

struct RecordViolation {
    std::size_t index = 0;
    std::string message;
};

struct ValidationReport {
    std::size_t checked = 0;
    std::vector<RecordViolation> violations;
    bool ok() const { return violations.empty(); }
};

/// Re-parses every record through the prompt parsers: hint targets must be well-formed bracket
/// lists, IM targets must parse without skipped lines, MVQA memory blocks must hold 1..M entries
/// and the gold answer must appear in the Question line's hints (unless `[NULL]`).
ValidationReport validate_records(const std::vector<TrainingRecord>& records, std::size_t m);

}  // namespace memvqa
