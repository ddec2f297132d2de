#pragma once

#include <chrono>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "memvqa/backend.hpp"

namespace memvqa {

struct HttpBackendConfig {
    /// Full endpoint, e.g. `http://127.0.0.1:8000/v1/chat/completions`.
    std::string url;
    std::string model = "default";
    /// Bearer token; empty disables the Authorization header.
    std::string api_key;
    std::chrono::milliseconds timeout{60000};
};

/// Chat-completions style client. One user message carries a base64 data-URL image part and
/// a text part; decoding params map to `max_tokens` plus best-effort beam fields.
///
/// Errors: connection failures, timeouts, 429 and 5xx raise RetryableError; other 4xx and
/// malformed URLs raise ConfigError; a 2xx body without a completion raises RunError.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    ~HttpBackend() override;

    BackendResponse complete(const BackendRequest& request) override;
    std::string id() const override;

    nlohmann::ordered_json build_request_body(const BackendRequest& request) const;
    /// Extracts `choices[0].message.content` (string or list of text parts).
    static std::string parse_response_text(const nlohmann::json& body);

private:
    struct Endpoint;
    HttpBackendConfig config_;
    std::unique_ptr<Endpoint> endpoint_;
};

}  // namespace memvqa
