#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "memvqa/backend.hpp"

namespace memvqa {

struct TraceRecord {
    std::string request_id;
    FrameKey frame;
    std::string task;
    std::string prompt_hash;  // FNV-1a 64 of the rendered prompt, hex
    std::string response_text;
    double latency_ms = 0.0;
    std::size_t attempts = 1;
    std::string decoding;     // requested strategy; servers may ignore beam settings
    std::optional<std::string> error;
};

/// Thread-safe JSONL sink for request/response pairs. Also keeps records in memory for tests.
class TraceSink {
public:
    TraceSink() = default;
    explicit TraceSink(const std::filesystem::path& path, bool append = false);

    void record(TraceRecord record);
    std::vector<TraceRecord> records() const;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::ofstream out_;
    std::vector<TraceRecord> records_;
};

}  // namespace memvqa
