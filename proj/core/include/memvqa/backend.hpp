#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "memvqa/dataset.hpp"

namespace memvqa {

enum class PromptTask;

enum class DecodingStrategy { Greedy, Beam };

struct DecodingParams {
    std::size_t max_new_tokens = 16;
    DecodingStrategy strategy = DecodingStrategy::Greedy;
    std::size_t beam_width = 1;

    /// Throws ConfigError unless max_new_tokens >= 1 and beam_width >= 1.
    void validate() const;
    /// "greedy" or "beam(<width>)".
    std::string describe() const;
    bool operator==(const DecodingParams&) const = default;
};

/// Default decoding for direct memory generation: 12, 12 and 16 new tokens, greedy.
DecodingParams default_dm_decoding(DatasetId id);
/// Default decoding for indirect memory generation: 160 new tokens, beam 3.
DecodingParams default_im_decoding();

struct BackendRequest {
    std::string request_id;
    std::string image_bytes;
    std::string media_type = "image/png";
    std::string prompt;
    DecodingParams params;

    // Routing metadata; scripted backends key on it, HTTP backends ignore it.
    PromptTask task{};
    FrameKey frame;
    std::string question;
};

struct BackendResponse {
    std::string text;
    double latency_ms = 0.0;
    std::string backend_id;
    std::string raw;            // wire payload, kept for audit
    std::size_t attempts = 1;   // filled in by RetryingBackend
};

/// An opaque model service: image + prompt + decoding params in, text out.
/// Implementations must be safe to call from several threads at once.
class Backend {
public:
    virtual ~Backend() = default;
    virtual BackendResponse complete(const BackendRequest& request) = 0;
    virtual std::string id() const = 0;
    /// False when the backend never looks at pixels, so callers may skip reading images.
    virtual bool needs_image_bytes() const { return true; }
};

struct RetryPolicy {
    std::size_t max_attempts = 3;
    std::chrono::milliseconds base_backoff{200};
};

/// Retries RetryableError with exponential backoff (base, 2*base, 4*base, ...) and converts
/// exhaustion into RunError. Other errors pass through untouched.
class RetryingBackend final : public Backend {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    RetryingBackend(Backend& inner, RetryPolicy policy, Sleeper sleeper = {});

    BackendResponse complete(const BackendRequest& request) override;
    std::string id() const override { return inner_.id(); }
    bool needs_image_bytes() const override { return inner_.needs_image_bytes(); }

private:
    Backend& inner_;
    RetryPolicy policy_;
    Sleeper sleeper_;
};

}  // namespace memvqa
