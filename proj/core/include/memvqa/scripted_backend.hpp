#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <tuple>

#include <nlohmann/json.hpp>

#include "memvqa/annotation.hpp"
#include "memvqa/backend.hpp"
#include "memvqa/dataset.hpp"
#include "memvqa/prompting.hpp"

namespace memvqa {

/// Deterministic fault injection for robustness runs. Decisions hash the request identity,
/// so they do not depend on call order or thread scheduling.
struct ChaosOptions {
    double malformed_line_rate = 0.0;  // per memory line (DM and IM responses)
    double transport_fault_rate = 0.0; // per attempt
    std::uint64_t seed = 0;

    bool enabled() const { return malformed_line_rate > 0.0 || transport_fault_rate > 0.0; }
};

/// Canned responses keyed by (task, frame, normalized question). IM responses use an empty question.
///
/// JSON form:
/// `{"backend_id": "...", "latency_ms": 0, "chaos": {...}, "entries": [{"task": "dm", "video": ...,
///   "frame": ..., "question": ..., "response": ...}, ...]}`
class MockScript {
public:
    void set(PromptTask task, const FrameKey& frame, std::string_view question, std::string response);
    const std::string* find(PromptTask task, const FrameKey& frame, std::string_view question) const;
    std::size_t size() const noexcept { return responses_.size(); }

    std::string backend_id = "scripted";
    double latency_ms = 0.0;
    ChaosOptions chaos;

    nlohmann::json to_json() const;
    static MockScript from_json(const nlohmann::json& doc);
    static MockScript read(const std::filesystem::path& path);
    void write(const std::filesystem::path& path) const;

private:
    using Key = std::tuple<PromptTask, FrameKey, std::string>;
    std::map<Key, std::string> responses_;
};

/// Replays a MockScript. Sleeps `latency_ms` per call and reports exactly that latency.
/// Unknown requests raise MockMissError.
class ScriptedBackend final : public Backend {
public:
    explicit ScriptedBackend(MockScript script);

    BackendResponse complete(const BackendRequest& request) override;
    std::string id() const override { return script_.backend_id; }
    bool needs_image_bytes() const override { return false; }

    const MockScript& script() const noexcept { return script_; }

private:
    MockScript script_;
    std::mutex mutex_;
    std::map<std::string, std::size_t> attempts_;
};

/// Script answering DM prompts with the annotated hints, IM prompts with the frame's annotated
/// store and answer prompts with the gold label. Throws MockMissError if a frame of `samples`
/// has no indirect memory record or a sample has no direct memory annotation.
MockScript mock_from_annotations(const SampleSet& samples, const IndirectMemoryStore& store,
                                 const DirectMemoryAnnotations& dm);

}  // namespace memvqa
