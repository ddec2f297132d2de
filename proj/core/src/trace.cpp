#include "memvqa/trace.hpp"

#include <nlohmann/json.hpp>

#include "jsonl.hpp"

namespace memvqa {

TraceSink::TraceSink(const std::filesystem::path& path, bool append) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
    if (!out_) throw FileLayoutError("cannot write trace " + path.string());
}

void TraceSink::record(TraceRecord record) {
    nlohmann::ordered_json j;
    j["request_id"] = record.request_id;
    j["frame"] = to_string(record.frame);
    j["task"] = record.task;
    j["prompt_hash"] = record.prompt_hash;
    j["response_text"] = record.response_text;
    j["latency_ms"] = record.latency_ms;
    j["attempts"] = record.attempts;
    j["decoding"] = record.decoding;
    if (record.error) j["error"] = *record.error;
    std::lock_guard lock(mutex_);
    if (out_.is_open()) {
        out_ << detail::dump_line(j) << '\n';
        out_.flush();
    }
    records_.push_back(std::move(record));
}

std::vector<TraceRecord> TraceSink::records() const {
    std::lock_guard lock(mutex_);
    return records_;
}

std::size_t TraceSink::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

}  // namespace memvqa
