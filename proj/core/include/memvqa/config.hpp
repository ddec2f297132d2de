#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "memvqa/backend.hpp"
#include "memvqa/dataset.hpp"

namespace memvqa {

/// Ordered `key = value` pairs. Lines starting with '#' and blank lines are ignored.
class KeyValues {
public:
    static KeyValues parse(std::istream& in, const std::string& source_name = "<stream>");
    static KeyValues read(const std::filesystem::path& path);

    void set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }
    bool contains(std::string_view key) const { return values_.find(std::string(key)) != values_.end(); }
    std::optional<std::string> get(std::string_view key) const;
    std::string get_or(std::string_view key, std::string fallback) const;
    void merge(const KeyValues& other);  // `other` wins

    const std::map<std::string, std::string>& values() const noexcept { return values_; }
    void write(std::ostream& out) const;

private:
    std::map<std::string, std::string> values_;
};

/// Every tunable of a run. Per-dataset defaults come from defaults_for().
struct RunConfig {
    DatasetId dataset = DatasetId::EndoVis18;
    std::size_t k = 2;
    std::size_t m = 3;
    std::size_t n = 500;
    DecodingParams dm_decoding{12, DecodingStrategy::Greedy, 1};
    DecodingParams im_decoding{160, DecodingStrategy::Beam, 3};
    DecodingParams answer_decoding{16, DecodingStrategy::Greedy, 1};

    std::string backend = "mock";  // "mock" or "http"
    std::string backend_url;
    std::string backend_model = "default";
    std::string api_key_env = "MEMVQA_API_KEY";
    std::string mock_script;
    std::size_t retries = 3;  // attempts per request
    std::size_t backoff_ms = 200;
    std::size_t timeout_ms = 60000;

    std::size_t parallelism = 1;
    double failure_threshold = 0.05;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "out";
    std::filesystem::path image_root;

    static RunConfig defaults_for(DatasetId id);

    /// Applies keys k, m, n, dm_max_tokens, im_max_tokens, im_beam, answer_max_tokens, backend,
    /// backend_url, backend_model, api_key_env, mock_script, retries, backoff_ms, timeout_ms,
    /// parallelism, failure_threshold, seed, out, image_root. Unknown keys are ignored so that
    /// one file can also carry dataset adapter settings. Throws ConfigError on bad values.
    void apply(const KeyValues& values);

    /// Inverse of apply(): the effective configuration, echoed into every output directory.
    KeyValues to_key_values() const;

    /// Throws ConfigError on violated invariants (k >= 1, decoding params, parallelism >= 1, ...).
    void validate() const;
};

/// Collects `MEMVQA_<KEY>` environment variables (upper-case, '.' -> '_') for the given keys.
KeyValues environment_overrides(const KeyValues& known_keys);

}  // namespace memvqa
