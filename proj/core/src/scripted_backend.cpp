#include "memvqa/scripted_backend.hpp"

#include <chrono>
#include <fstream>
#include <thread>

#include "jsonl.hpp"
#include "memvqa/error.hpp"
#include "memvqa/text.hpp"

namespace memvqa {

void MockScript::set(PromptTask task, const FrameKey& frame, std::string_view question, std::string response) {
    responses_[{task, frame, normalize_question(question)}] = std::move(response);
}

const std::string* MockScript::find(PromptTask task, const FrameKey& frame, std::string_view question) const {
    const auto it = responses_.find({task, frame, normalize_question(question)});
    return it == responses_.end() ? nullptr : &it->second;
}

nlohmann::json MockScript::to_json() const {
    nlohmann::ordered_json doc;
    doc["backend_id"] = backend_id;
    doc["latency_ms"] = latency_ms;
    if (chaos.enabled()) {
        doc["chaos"] = {{"malformed_line_rate", chaos.malformed_line_rate},
                        {"transport_fault_rate", chaos.transport_fault_rate},
                        {"seed", chaos.seed}};
    }
    auto entries = nlohmann::ordered_json::array();
    for (const auto& [key, response] : responses_) {
        const auto& [task, frame, question] = key;
        nlohmann::ordered_json e;
        e["task"] = to_string(task);
        e["video"] = frame.video;
        e["frame"] = frame.frame;
        e["question"] = question;
        e["response"] = response;
        entries.push_back(std::move(e));
    }
    doc["entries"] = std::move(entries);
    return doc;
}

MockScript MockScript::from_json(const nlohmann::json& doc) {
    MockScript script;
    try {
        script.backend_id = doc.value("backend_id", std::string("scripted"));
        script.latency_ms = doc.value("latency_ms", 0.0);
        if (doc.contains("chaos")) {
            const auto& c = doc.at("chaos");
            script.chaos.malformed_line_rate = c.value("malformed_line_rate", 0.0);
            script.chaos.transport_fault_rate = c.value("transport_fault_rate", 0.0);
            script.chaos.seed = c.value("seed", std::uint64_t{0});
        }
        for (const auto& e : doc.at("entries")) {
            script.set(parse_prompt_task(e.at("task").get<std::string>()),
                       {e.at("video").get<std::string>(), e.at("frame").get<std::string>()},
                       e.value("question", std::string()), e.at("response").get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid mock script: ") + e.what());
    }
    return script;
}

MockScript MockScript::read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open mock script " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid mock script " + path.string() + ": " + e.what());
    }
    return from_json(doc);
}

void MockScript::write(const std::filesystem::path& path) const {
    auto out = detail::open_output(path);
    out << to_json().dump(1) << '\n';
}

ScriptedBackend::ScriptedBackend(MockScript script) : script_(std::move(script)) {}

namespace {

// Maps a hash to [0, 1).
// FNV-1a barely moves the high bits when only the last byte differs, so mix before mapping.
double unit_interval(std::uint64_t h) {
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebULL;
    h ^= h >> 31;
    return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

std::string corrupt_lines(const std::string& text, const std::string& identity, const ChaosOptions& chaos) {
    auto lines = text::split(text, '\n');
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto h = text::fnv1a64(identity + "#line" + std::to_string(i), text::fnv1a64("malformed", chaos.seed));
        if (unit_interval(h) >= chaos.malformed_line_rate) continue;
        // drop the hint brackets: DM parses leniently, IM lines fail the grammar
        std::string corrupted;
        for (char c : lines[i]) {
            if (c != '[' && c != ']') corrupted.push_back(c);
        }
        lines[i] = std::move(corrupted);
    }
    return text::join(lines, "\n");
}

}  // namespace

BackendResponse ScriptedBackend::complete(const BackendRequest& request) {
    const std::string identity = std::string(to_string(request.task)) + "|" + to_string(request.frame) + "|" +
                                 normalize_question(request.question);
    std::size_t attempt = 0;
    {
        std::lock_guard lock(mutex_);
        attempt = ++attempts_[identity];
    }
    if (script_.latency_ms > 0.0) {
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(script_.latency_ms));
    }
    const auto& chaos = script_.chaos;
    if (chaos.transport_fault_rate > 0.0) {
        const auto h = text::fnv1a64(identity + "#attempt" + std::to_string(attempt), text::fnv1a64("fault", chaos.seed));
        if (unit_interval(h) < chaos.transport_fault_rate) {
            throw RetryableError("injected transport fault for " + request.request_id);
        }
    }

    const std::string* text = script_.find(request.task, request.frame, request.question);
    if (text == nullptr) {
        throw MockMissError("no scripted response for " + std::string(to_string(request.task)) + " at " +
                            to_string(request.frame) + (request.question.empty() ? "" : " '" + request.question + "'"));
    }
    BackendResponse response;
    response.text = *text;
    if (chaos.malformed_line_rate > 0.0 &&
        (request.task == PromptTask::DirectMemoryGen || request.task == PromptTask::IndirectMemoryGen)) {
        response.text = corrupt_lines(response.text, identity, chaos);
    }
    response.latency_ms = script_.latency_ms;
    response.backend_id = script_.backend_id;
    response.raw = response.text;
    return response;
}

MockScript mock_from_annotations(const SampleSet& samples, const IndirectMemoryStore& store,
                                 const DirectMemoryAnnotations& dm) {
    MockScript script;
    script.backend_id = "oracle";
    for (const auto& frame : samples.frames()) {
        const auto* entries = store.find(frame);
        if (entries == nullptr) throw MockMissError("no indirect memory annotation for frame " + to_string(frame));
        script.set(PromptTask::IndirectMemoryGen, frame, "", IndirectMemoryStore::serialize_entries(*entries));
    }
    for (const auto& s : samples.samples()) {
        const auto* hints = dm.find(s.frame_key(), s.question);
        if (hints == nullptr) {
            throw MockMissError("no direct memory annotation for " + to_string(s.frame_key()) + " '" + s.question + "'");
        }
        script.set(PromptTask::DirectMemoryGen, s.frame_key(), s.question, hints->serialize());
        script.set(PromptTask::MemoryAugmentedVQA, s.frame_key(), s.question, s.answer);
        script.set(PromptTask::VanillaVQA, s.frame_key(), s.question, s.answer);
    }
    return script;
}

}  // namespace memvqa
