#include "memvqa/pipeline.hpp"

#include <atomic>
#include <fstream>
#include <future>
#include <mutex>
#include <sstream>
#include <thread>

#include "jsonl.hpp"
#include "memvqa/error.hpp"
#include "memvqa/prompting.hpp"
#include "memvqa/text.hpp"
#include "memvqa/trace.hpp"

namespace memvqa {

PipelineConfig PipelineConfig::defaults_for(DatasetId id) {
    PipelineConfig config;
    config.dataset = id;
    config.m = id == DatasetId::Cholec80 ? 1 : 3;
    config.dm_decoding = default_dm_decoding(id);
    config.im_decoding = default_im_decoding();
    return config;
}

namespace {

std::string media_type_for(const std::string& path) {
    const auto ext = text::to_lower_ascii(std::filesystem::path(path).extension().string());
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".bmp") return "image/bmp";
    if (ext == ".webp") return "image/webp";
    return "image/png";
}

std::string load_image(const Sample& sample, const Backend& backend, const PipelineConfig& config) {
    if (!backend.needs_image_bytes()) return sample.image.empty() ? to_string(sample.frame_key()) : sample.image;
    const auto path = config.image_root / sample.image;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RunError("cannot read image " + path.string());
    std::ostringstream bytes;
    bytes << in.rdbuf();
    auto data = bytes.str();
    if (data.empty()) throw RunError("empty image " + path.string());
    return data;
}

BackendResponse call_backend(Backend& backend, BackendRequest& request, TraceSink* trace) {
    TraceRecord record;
    if (trace != nullptr) {
        record.request_id = request.request_id;
        record.frame = request.frame;
        record.task = std::string(to_string(request.task));
        record.prompt_hash = text::hex64(text::fnv1a64(request.prompt));
        record.decoding = request.params.describe();
    }
    try {
        auto response = backend.complete(request);
        if (trace != nullptr) {
            record.response_text = response.text;
            record.latency_ms = response.latency_ms;
            record.attempts = response.attempts;
            trace->record(std::move(record));
        }
        return response;
    } catch (const std::exception& e) {
        if (trace != nullptr) {
            record.error = e.what();
            trace->record(std::move(record));
        }
        throw;
    }
}

std::string sample_label(const Sample& sample, std::size_t index) {
    return "sample " + std::to_string(index) + " (" + to_string(sample.frame_key()) + " '" + sample.question + "')";
}

}  // namespace

FrameMemory generate_frame_memory(const Sample& sample, Backend& backend, const PipelineConfig& config,
                                  TraceSink* trace) {
    BackendRequest request;
    request.request_id = "f:" + to_string(sample.frame_key()) + ":im";
    request.image_bytes = load_image(sample, backend, config);
    request.media_type = media_type_for(sample.image);
    request.prompt = render_prompt(PromptTask::IndirectMemoryGen, {}, sample.frame_key()).rendered_text;
    request.params = config.im_decoding;
    request.task = PromptTask::IndirectMemoryGen;
    request.frame = sample.frame_key();

    const auto response = call_backend(backend, request, trace);
    auto parsed = parse_indirect_memory(response.text);
    return {std::move(parsed.entries), parsed.skipped_lines, response.latency_ms};
}

Prediction infer_sample(const Sample& sample, std::size_t index, Backend& backend, const PipelineConfig& config,
                        TraceSink* trace, const FrameMemoryProvider& frame_memory) {
    Prediction prediction;
    prediction.index = index;
    prediction.sample = sample;
    auto& memory = prediction.trace;
    memory.dm.question = sample.question;

    try {
        const std::string image = load_image(sample, backend, config);
        const std::string media_type = media_type_for(sample.image);
        auto make_request = [&](PromptTask task, std::string prompt, const DecodingParams& params) {
            BackendRequest request;
            request.request_id = "s" + std::to_string(index) + ":" + std::string(to_string(task));
            request.image_bytes = image;
            request.media_type = media_type;
            request.prompt = std::move(prompt);
            request.params = params;
            request.task = task;
            request.frame = sample.frame_key();
            request.question = sample.question;
            return request;
        };

        // Stage 1: direct memory. Binary Cholec80 questions carry no hints.
        if (sample.dataset == DatasetId::Cholec80 &&
            classify_question(sample.question, sample.dataset) == QuestionType::Binary) {
            memory.dm.hints = HintSet::null_sentinel();
            memory.dm_skipped = true;
        } else {
            PromptInputs inputs;
            inputs.question = sample.question;
            auto request = make_request(PromptTask::DirectMemoryGen,
                                        render_prompt(PromptTask::DirectMemoryGen, inputs, sample.frame_key()).rendered_text,
                                        config.dm_decoding);
            const auto response = call_backend(backend, request, trace);
            prediction.latency_ms += response.latency_ms;
            auto parsed = parse_hint_list(response.text);
            memory.dm_malformed = parsed.malformed;
            memory.dm_lenient = parsed.lenient;
            memory.dm.hints = std::move(parsed.hints);
        }

        // Stage 2: indirect memory, generated per frame, then Top-M selection.
        if (config.m == 0) {
            memory.im_skipped = true;
        } else {
            FrameMemory generated = frame_memory ? frame_memory(sample) : generate_frame_memory(sample, backend, config, trace);
            prediction.latency_ms += generated.latency_ms;
            memory.im_skipped_lines = generated.skipped_lines;
            memory.im_generated = std::move(generated.entries);
            for (const auto& sel : select_indirect_memory(sample.question, memory.im_generated, config.m, true)) {
                memory.im_selected.push_back({memory.im_generated[sel.index], sel.score});
            }
        }

        // Stage 3: memory-augmented answer.
        PromptInputs inputs;
        inputs.question = sample.question;
        inputs.hints = memory.dm.hints;
        for (const auto& sel : memory.im_selected) inputs.memory.push_back(sel.entry);
        auto request = make_request(PromptTask::MemoryAugmentedVQA,
                                    render_prompt(PromptTask::MemoryAugmentedVQA, inputs, sample.frame_key()).rendered_text,
                                    config.answer_decoding);
        const auto response = call_backend(backend, request, trace);
        prediction.latency_ms += response.latency_ms;
        prediction.answer_text = response.text;
    } catch (const Error& e) {
        throw RunError(sample_label(sample, index) + ": " + e.what());
    }
    return prediction;
}

// --- PredictionSet I/O ---------------------------------------------------------

namespace {

nlohmann::ordered_json entry_to_json(const IndirectMemoryEntry& e) {
    nlohmann::ordered_json j;
    j["q"] = e.question;
    j["hints"] = e.hints.hints();
    return j;
}

IndirectMemoryEntry entry_from_json(const nlohmann::json& j) {
    return {j.at("q").get<std::string>(), HintSet(j.at("hints").get<std::vector<std::string>>())};
}

}  // namespace

nlohmann::json prediction_to_json(const Prediction& p) {
    nlohmann::ordered_json j;
    j["index"] = p.index;
    j["dataset"] = to_string(p.sample.dataset);
    j["video"] = p.sample.video;
    j["frame"] = p.sample.frame;
    j["image"] = p.sample.image;
    j["question"] = p.sample.question;
    j["gold"] = p.sample.answer;
    j["answer_text"] = p.answer_text;
    j["dm"] = p.trace.dm.hints.hints();
    j["dm_null"] = p.trace.dm.hints.is_null();
    auto selected = nlohmann::ordered_json::array();
    for (const auto& s : p.trace.im_selected) {
        auto e = entry_to_json(s.entry);
        e["score"] = s.score;
        selected.push_back(std::move(e));
    }
    j["im_selected"] = std::move(selected);
    auto generated = nlohmann::ordered_json::array();
    for (const auto& e : p.trace.im_generated) generated.push_back(entry_to_json(e));
    j["im_generated"] = std::move(generated);
    j["flags"] = {{"dm_skipped", p.trace.dm_skipped},
                  {"dm_malformed", p.trace.dm_malformed},
                  {"dm_lenient", p.trace.dm_lenient},
                  {"im_skipped", p.trace.im_skipped},
                  {"im_skipped_lines", p.trace.im_skipped_lines}};
    j["latency_ms"] = p.latency_ms;
    j["error"] = p.error ? nlohmann::ordered_json(*p.error) : nlohmann::ordered_json(nullptr);
    return j;
}

Prediction prediction_from_json(const nlohmann::json& j) {
    Prediction p;
    p.index = j.at("index").get<std::size_t>();
    p.sample.dataset = parse_dataset_id(j.at("dataset").get<std::string>());
    p.sample.video = j.at("video").get<std::string>();
    p.sample.frame = j.at("frame").get<std::string>();
    p.sample.image = j.value("image", std::string());
    p.sample.question = j.at("question").get<std::string>();
    p.sample.answer = j.at("gold").get<std::string>();
    p.answer_text = j.at("answer_text").get<std::string>();
    p.trace.dm.question = p.sample.question;
    p.trace.dm.hints = j.value("dm_null", false) ? HintSet::null_sentinel()
                                                 : HintSet(j.at("dm").get<std::vector<std::string>>());
    for (const auto& e : j.at("im_selected")) p.trace.im_selected.push_back({entry_from_json(e), e.at("score").get<double>()});
    if (j.contains("im_generated")) {
        for (const auto& e : j.at("im_generated")) p.trace.im_generated.push_back(entry_from_json(e));
    }
    const auto& flags = j.at("flags");
    p.trace.dm_skipped = flags.value("dm_skipped", false);
    p.trace.dm_malformed = flags.value("dm_malformed", false);
    p.trace.dm_lenient = flags.value("dm_lenient", false);
    p.trace.im_skipped = flags.value("im_skipped", false);
    p.trace.im_skipped_lines = flags.value("im_skipped_lines", std::size_t{0});
    p.latency_ms = j.value("latency_ms", 0.0);
    if (j.contains("error") && !j.at("error").is_null()) p.error = j.at("error").get<std::string>();
    return p;
}

void write_predictions_jsonl(const std::vector<Prediction>& predictions, std::ostream& out) {
    for (const auto& p : predictions) out << detail::dump_line(prediction_to_json(p)) << '\n';
}

void write_predictions_jsonl(const std::vector<Prediction>& predictions, const std::filesystem::path& path) {
    auto out = detail::open_output(path);
    write_predictions_jsonl(predictions, out);
}

std::vector<Prediction> read_predictions_jsonl(std::istream& in, const std::string& source_name) {
    std::vector<Prediction> predictions;
    detail::for_each_jsonl(in, source_name,
                           [&](const nlohmann::json& j, std::size_t) { predictions.push_back(prediction_from_json(j)); });
    return predictions;
}

std::vector<Prediction> read_predictions_jsonl(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    return read_predictions_jsonl(in, path.string());
}

// --- run_split -------------------------------------------------------------------

namespace {

// Replays a checkpoint. A torn final line (interrupted write) is ignored.
std::vector<Prediction> read_checkpoint(const std::filesystem::path& path) {
    std::vector<Prediction> out;
    std::ifstream in(path, std::ios::binary);
    if (!in) return out;
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!text::trim(line).empty()) lines.push_back(line);
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            out.push_back(prediction_from_json(nlohmann::json::parse(lines[i])));
        } catch (const std::exception& e) {
            if (i + 1 == lines.size()) break;
            throw RecordError(path.string(), i + 1, std::string("corrupt checkpoint record: ") + e.what());
        }
    }
    return out;
}

class FrameMemoryCache {
public:
    FrameMemoryCache(Backend& backend, const PipelineConfig& config, TraceSink* trace)
        : backend_(backend), config_(config), trace_(trace) {}

    // The first requester of a frame computes; concurrent requesters wait for its result.
    FrameMemory get(const Sample& sample) {
        std::shared_future<FrameMemory> future;
        std::promise<FrameMemory> promise;
        bool owner = false;
        {
            std::lock_guard lock(mutex_);
            auto it = cache_.find(sample.frame_key());
            if (it == cache_.end()) {
                future = promise.get_future().share();
                cache_.emplace(sample.frame_key(), future);
                owner = true;
            } else {
                future = it->second;
            }
        }
        if (owner) {
            calls_.fetch_add(1);
            try {
                promise.set_value(generate_frame_memory(sample, backend_, config_, trace_));
            } catch (...) {
                promise.set_exception(std::current_exception());
            }
        }
        return future.get();
    }

    std::size_t calls() const { return calls_.load(); }

private:
    Backend& backend_;
    const PipelineConfig& config_;
    TraceSink* trace_;
    std::mutex mutex_;
    std::map<FrameKey, std::shared_future<FrameMemory>> cache_;
    std::atomic<std::size_t> calls_{0};
};

bool same_sample(const Sample& a, const Sample& b) {
    return a.dataset == b.dataset && a.video == b.video && a.frame == b.frame && a.question == b.question;
}

}  // namespace

RunResult run_split(const SampleSet& set, Backend& backend, const PipelineConfig& config, const RunOptions& options,
                    TraceSink* trace) {
    if (options.parallelism < 1) throw ConfigError("parallelism must be >= 1");
    config.dm_decoding.validate();
    config.im_decoding.validate();
    config.answer_decoding.validate();

    const std::size_t n = set.size();
    std::vector<std::optional<Prediction>> results(n);
    RunResult result;
    result.failure_threshold = options.failure_threshold;

    if (options.resume && options.checkpoint) {
        for (auto& p : read_checkpoint(*options.checkpoint)) {
            if (p.index >= n || !same_sample(p.sample, set[p.index])) {
                throw ConfigError("checkpoint " + options.checkpoint->string() + " does not match the sample set (index " +
                                  std::to_string(p.index) + ")");
            }
            if (p.error) continue;  // failed samples are retried
            const auto idx = p.index;
            if (!results[idx]) ++result.resumed;
            results[idx] = std::move(p);
        }
    }

    // Rewritten on resume so that a torn tail does not end up in the middle of the file.
    std::ofstream checkpoint;
    if (options.checkpoint) {
        if (options.checkpoint->has_parent_path()) std::filesystem::create_directories(options.checkpoint->parent_path());
        checkpoint.open(*options.checkpoint, std::ios::binary | std::ios::trunc);
        if (!checkpoint) throw FileLayoutError("cannot write checkpoint " + options.checkpoint->string());
        for (const auto& r : results) {
            if (r) checkpoint << detail::dump_line(prediction_to_json(*r)) << '\n';
        }
        checkpoint.flush();
    }

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < n; ++i) {
        if (!results[i]) pending.push_back(i);
    }

    FrameMemoryCache cache(backend, config, trace);
    const FrameMemoryProvider provider = [&cache](const Sample& s) { return cache.get(s); };
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> completed{0};
    std::mutex write_mutex;

    auto worker = [&] {
        while (true) {
            if (options.stop_after && completed.load() >= *options.stop_after) return;
            const std::size_t slot = next.fetch_add(1);
            if (slot >= pending.size()) return;
            const std::size_t idx = pending[slot];
            Prediction prediction;
            try {
                prediction = infer_sample(set[idx], idx, backend, config, trace, provider);
            } catch (const std::exception& e) {
                prediction = Prediction{};
                prediction.index = idx;
                prediction.sample = set[idx];
                prediction.trace.dm.question = set[idx].question;
                prediction.error = e.what();
            }
            {
                std::lock_guard lock(write_mutex);
                if (checkpoint.is_open()) {
                    checkpoint << detail::dump_line(prediction_to_json(prediction)) << '\n';
                    checkpoint.flush();
                }
                results[idx] = std::move(prediction);
            }
            completed.fetch_add(1);
        }
    };

    const std::size_t workers = std::min(options.parallelism, std::max<std::size_t>(pending.size(), 1));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
    }

    result.im_backend_calls = cache.calls();
    result.predictions.reserve(n);
    for (auto& r : results) {
        if (!r) {
            result.stopped_early = true;
            continue;
        }
        if (r->error) ++result.failures;
        result.predictions.push_back(std::move(*r));
    }
    return result;
}

}  // namespace memvqa
