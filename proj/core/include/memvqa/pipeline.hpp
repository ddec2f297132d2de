#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memvqa/annotation.hpp"
#include "memvqa/backend.hpp"
#include "memvqa/dataset.hpp"
#include "memvqa/retrieval.hpp"

namespace memvqa {

class TraceSink;

struct PipelineConfig {
    DatasetId dataset = DatasetId::EndoVis18;
    std::size_t k = 2;  // hints requested per question (informational at inference)
    std::size_t m = 3;  // selected indirect memory entries; 0 disables stage 2
    DecodingParams dm_decoding{12, DecodingStrategy::Greedy, 1};
    DecodingParams im_decoding{160, DecodingStrategy::Beam, 3};
    DecodingParams answer_decoding{16, DecodingStrategy::Greedy, 1};
    std::filesystem::path image_root;

    static PipelineConfig defaults_for(DatasetId id);
};

struct SelectedMemory {
    IndirectMemoryEntry entry;
    double score = 0.0;
    bool operator==(const SelectedMemory&) const = default;
};

struct MemoryTrace {
    DirectMemory dm;
    std::vector<IndirectMemoryEntry> im_generated;
    std::vector<SelectedMemory> im_selected;
    bool dm_skipped = false;       // binary question answered with the `[NULL]` sentinel
    bool dm_malformed = false;
    bool dm_lenient = false;
    bool im_skipped = false;       // M == 0
    std::size_t im_skipped_lines = 0;
    bool operator==(const MemoryTrace&) const = default;
};

struct Prediction {
    std::size_t index = 0;  // position in the evaluated SampleSet
    Sample sample;
    std::string answer_text;  // the final-stage backend text, verbatim
    MemoryTrace trace;
    double latency_ms = 0.0;  // sum of backend-reported latencies
    std::optional<std::string> error;

    bool malformed() const { return trace.dm_malformed || trace.im_skipped_lines > 0; }
    bool operator==(const Prediction&) const = default;
};

/// Generated indirect memory of one frame (stage 2 output before selection).
struct FrameMemory {
    std::vector<IndirectMemoryEntry> entries;
    std::size_t skipped_lines = 0;
    double latency_ms = 0.0;
};

/// Stage 2 provider; run_split plugs in a per-frame cache here.
using FrameMemoryProvider = std::function<FrameMemory(const Sample&)>;

/// Three-stage inference for one sample: direct memory, indirect memory with Top-M selection,
/// then the memory-augmented answer. Malformed memory degrades to empty memory and is flagged.
/// Backend RunError propagates with the sample identity in the message.
Prediction infer_sample(const Sample& sample, std::size_t index, Backend& backend, const PipelineConfig& config,
                        TraceSink* trace = nullptr, const FrameMemoryProvider& frame_memory = {});

/// Stage 2 on its own: render the IM prompt, call the backend, parse.
FrameMemory generate_frame_memory(const Sample& sample, Backend& backend, const PipelineConfig& config,
                                  TraceSink* trace = nullptr);

struct RunOptions {
    std::size_t parallelism = 1;
    /// Abort threshold on the fraction of failed samples (strictly greater fails the run).
    double failure_threshold = 0.05;
    /// JSONL of completed predictions, appended as samples finish. With `resume`, successful
    /// records are replayed (failed ones run again) and the file is rewritten before new work.
    std::optional<std::filesystem::path> checkpoint;
    bool resume = false;
    /// Stop scheduling new samples once this many have completed in this invocation (for
    /// interruption tests and partial runs).
    std::optional<std::size_t> stop_after;
};

struct RunResult {
    std::vector<Prediction> predictions;  // input order; complete unless stopped early
    std::size_t failures = 0;
    std::size_t resumed = 0;         // predictions taken from the checkpoint
    std::size_t im_backend_calls = 0;
    bool stopped_early = false;

    double failure_threshold = 0.05;

    double failure_ratio() const {
        return predictions.empty() ? 0.0 : static_cast<double>(failures) / static_cast<double>(predictions.size());
    }
    /// The run counts as failed when the failed-sample ratio is strictly above the threshold.
    bool exceeded_threshold() const { return failure_ratio() > failure_threshold; }
};

/// Runs every sample with at most `parallelism` concurrent backend calls. Indirect memory is
/// generated once per frame and shared by that frame's questions. Output order equals input
/// order. Per-sample failures are recorded on the prediction, never thrown; check
/// RunResult::exceeded_threshold(). Throws ConfigError for invalid options or a checkpoint that
/// belongs to a different sample set.
RunResult run_split(const SampleSet& set, Backend& backend, const PipelineConfig& config, const RunOptions& options,
                    TraceSink* trace = nullptr);

// PredictionSet JSONL, one object per line in input order. Fields: index, dataset, video, frame,
// question, gold, answer_text, dm, dm_null, im_selected, im_generated, flags, latency_ms, error.
nlohmann::json prediction_to_json(const Prediction& prediction);
Prediction prediction_from_json(const nlohmann::json& j);
void write_predictions_jsonl(const std::vector<Prediction>& predictions, std::ostream& out);
void write_predictions_jsonl(const std::vector<Prediction>& predictions, const std::filesystem::path& path);
std::vector<Prediction> read_predictions_jsonl(std::istream& in, const std::string& source_name = "<stream>");
std::vector<Prediction> read_predictions_jsonl(const std::filesystem::path& path);

}  // namespace memvqa
