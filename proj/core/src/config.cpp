#include "memvqa/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "memvqa/error.hpp"
#include "memvqa/text.hpp"

namespace memvqa {

KeyValues KeyValues::parse(std::istream& in, const std::string& source_name) {
    KeyValues kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = text::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos) throw RecordError(source_name, line_no, "expected 'key = value'");
        auto key = text::trim(std::string_view(trimmed).substr(0, eq));
        if (key.empty()) throw RecordError(source_name, line_no, "empty key");
        kv.set(std::move(key), text::trim(std::string_view(trimmed).substr(eq + 1)));
    }
    return kv;
}

KeyValues KeyValues::read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse(in, path.string());
}

std::optional<std::string> KeyValues::get(std::string_view key) const {
    const auto it = values_.find(std::string(key));
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string KeyValues::get_or(std::string_view key, std::string fallback) const {
    auto v = get(key);
    return v ? *v : std::move(fallback);
}

void KeyValues::merge(const KeyValues& other) {
    for (const auto& [k, v] : other.values_) values_[k] = v;
}

void KeyValues::write(std::ostream& out) const {
    for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
}

namespace {

std::size_t parse_size(std::string_view key, const std::string& value) {
    std::size_t out = 0;
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError("invalid value for " + std::string(key) + ": '" + value + "'");
    }
    return out;
}

double parse_double(std::string_view key, const std::string& value) {
    std::istringstream in(value);
    in.imbue(std::locale::classic());
    double out = 0.0;
    if (!(in >> out) || !(in >> std::ws).eof()) {
        throw ConfigError("invalid value for " + std::string(key) + ": '" + value + "'");
    }
    return out;
}

std::string format_double(double v) {
    std::ostringstream out;
    out.imbue(std::locale::classic());
    out << v;
    return out.str();
}

}  // namespace

RunConfig RunConfig::defaults_for(DatasetId id) {
    RunConfig config;
    config.dataset = id;
    config.m = id == DatasetId::Cholec80 ? 1 : 3;
    config.dm_decoding = default_dm_decoding(id);
    config.im_decoding = default_im_decoding();
    return config;
}

void RunConfig::apply(const KeyValues& values) {
    if (auto v = values.get("dataset")) {
        // switching dataset resets dataset-dependent defaults before the remaining keys apply
        const auto id = parse_dataset_id(*v);
        if (id != dataset) {
            const auto fresh = defaults_for(id);
            dataset = id;
            m = fresh.m;
            dm_decoding = fresh.dm_decoding;
        }
    }
    if (auto v = values.get("k")) k = parse_size("k", *v);
    if (auto v = values.get("m")) m = parse_size("m", *v);
    if (auto v = values.get("n")) n = parse_size("n", *v);
    if (auto v = values.get("dm_max_tokens")) dm_decoding.max_new_tokens = parse_size("dm_max_tokens", *v);
    if (auto v = values.get("im_max_tokens")) im_decoding.max_new_tokens = parse_size("im_max_tokens", *v);
    if (auto v = values.get("im_beam")) {
        im_decoding.beam_width = parse_size("im_beam", *v);
        im_decoding.strategy = im_decoding.beam_width > 1 ? DecodingStrategy::Beam : DecodingStrategy::Greedy;
    }
    if (auto v = values.get("answer_max_tokens")) answer_decoding.max_new_tokens = parse_size("answer_max_tokens", *v);
    if (auto v = values.get("backend")) backend = *v;
    if (auto v = values.get("backend_url")) backend_url = *v;
    if (auto v = values.get("backend_model")) backend_model = *v;
    if (auto v = values.get("api_key_env")) api_key_env = *v;
    if (auto v = values.get("mock_script")) mock_script = *v;
    if (auto v = values.get("retries")) retries = parse_size("retries", *v);
    if (auto v = values.get("backoff_ms")) backoff_ms = parse_size("backoff_ms", *v);
    if (auto v = values.get("timeout_ms")) timeout_ms = parse_size("timeout_ms", *v);
    if (auto v = values.get("parallelism")) parallelism = parse_size("parallelism", *v);
    if (auto v = values.get("failure_threshold")) failure_threshold = parse_double("failure_threshold", *v);
    if (auto v = values.get("seed")) seed = parse_size("seed", *v);
    if (auto v = values.get("out")) out_dir = *v;
    if (auto v = values.get("image_root")) image_root = *v;
}

KeyValues RunConfig::to_key_values() const {
    KeyValues kv;
    kv.set("dataset", std::string(to_string(dataset)));
    kv.set("k", std::to_string(k));
    kv.set("m", std::to_string(m));
    kv.set("n", std::to_string(n));
    kv.set("dm_max_tokens", std::to_string(dm_decoding.max_new_tokens));
    kv.set("dm_decoding", dm_decoding.describe());
    kv.set("im_max_tokens", std::to_string(im_decoding.max_new_tokens));
    kv.set("im_beam", std::to_string(im_decoding.beam_width));
    kv.set("answer_max_tokens", std::to_string(answer_decoding.max_new_tokens));
    kv.set("backend", backend);
    kv.set("backend_url", backend_url);
    kv.set("backend_model", backend_model);
    kv.set("api_key_env", api_key_env);
    kv.set("mock_script", mock_script);
    kv.set("retries", std::to_string(retries));
    kv.set("backoff_ms", std::to_string(backoff_ms));
    kv.set("timeout_ms", std::to_string(timeout_ms));
    kv.set("parallelism", std::to_string(parallelism));
    kv.set("failure_threshold", format_double(failure_threshold));
    kv.set("seed", std::to_string(seed));
    kv.set("out", out_dir.string());
    kv.set("image_root", image_root.string());
    return kv;
}

void RunConfig::validate() const {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (n < 1) throw ConfigError("n must be >= 1");
    dm_decoding.validate();
    im_decoding.validate();
    answer_decoding.validate();
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (retries < 1) throw ConfigError("retries must be >= 1");
    if (!(failure_threshold >= 0.0 && failure_threshold <= 1.0)) {
        throw ConfigError("failure_threshold must lie in [0, 1]");
    }
    if (backend != "mock" && backend != "http") throw ConfigError("backend must be 'mock' or 'http'");
}

KeyValues environment_overrides(const KeyValues& known_keys) {
    KeyValues kv;
    for (const auto& [key, unused] : known_keys.values()) {
        std::string name = "MEMVQA_";
        for (char c : key) {
            name.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        }
        if (const char* value = std::getenv(name.c_str())) kv.set(key, value);
    }
    return kv;
}

}  // namespace memvqa
