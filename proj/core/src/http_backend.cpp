#include "memvqa/http_backend.hpp"

#include <chrono>
#include <regex>
#include <tuple>
#include <utility>

#include <httplib.h>

#include "memvqa/error.hpp"
#include "memvqa/text.hpp"

namespace memvqa {

struct HttpBackend::Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

namespace {

std::pair<std::string, std::string> parse_url(const std::string& url) {
    static const std::regex kUrl(R"(^(https?)://([^/\s]+)(/[^\s]*)?$)", std::regex::icase);
    std::smatch m;
    if (!std::regex_match(url, m, kUrl)) throw ConfigError("invalid backend URL '" + url + "'");
    return {m[1].str() + "://" + m[2].str(), m[3].matched ? m[3].str() : std::string("/v1/chat/completions")};
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config)
    : config_(std::move(config)), endpoint_(std::make_unique<Endpoint>()) {
    std::tie(endpoint_->origin, endpoint_->path) = parse_url(config_.url);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (text::starts_with_icase(endpoint_->origin, "https")) {
        throw ConfigError("this build has no TLS support; use an http:// endpoint");
    }
#endif
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::id() const {
    return "http:" + config_.model;
}

nlohmann::ordered_json HttpBackend::build_request_body(const BackendRequest& request) const {
    nlohmann::ordered_json image_part;
    image_part["type"] = "image_url";
    image_part["image_url"]["url"] = "data:" + request.media_type + ";base64," + text::base64_encode(request.image_bytes);
    nlohmann::ordered_json text_part;
    text_part["type"] = "text";
    text_part["text"] = request.prompt;

    nlohmann::ordered_json body;
    body["model"] = config_.model;
    body["messages"] = nlohmann::ordered_json::array(
        {{{"role", "user"}, {"content", nlohmann::ordered_json::array({image_part, text_part})}}});
    body["max_tokens"] = request.params.max_new_tokens;
    body["temperature"] = 0;
    if (request.params.strategy == DecodingStrategy::Beam) {
        // Honoured by servers with beam-search support (e.g. vLLM); others ignore unknown fields.
        body["use_beam_search"] = true;
        body["best_of"] = request.params.beam_width;
    }
    return body;
}

std::string HttpBackend::parse_response_text(const nlohmann::json& body) {
    const auto& choices = body.at("choices");
    if (!choices.is_array() || choices.empty()) throw RunError("response has no choices");
    const auto& content = choices.at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    if (content.is_null()) return {};
    std::string out;
    for (const auto& part : content) {
        if (part.value("type", "") == "text") out += part.value("text", "");
    }
    return out;
}

BackendResponse HttpBackend::complete(const BackendRequest& request) {
    const auto start = std::chrono::steady_clock::now();
    httplib::Client client(endpoint_->origin);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                                  static_cast<long>(timeout.count() % 1000000));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                            static_cast<long>(timeout.count() % 1000000));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                             static_cast<long>(timeout.count() % 1000000));
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    const auto payload = build_request_body(request).dump();
    auto result = client.Post(endpoint_->path, headers, payload, "application/json");
    if (!result) {
        throw RetryableError("transport error for " + request.request_id + ": " + httplib::to_string(result.error()));
    }
    const int status = result->status;
    if (status == 429 || status >= 500) {
        throw RetryableError("HTTP " + std::to_string(status) + " for " + request.request_id);
    }
    if (status >= 400) {
        throw ConfigError("HTTP " + std::to_string(status) + " for " + request.request_id + ": " + result->body);
    }

    BackendResponse response;
    response.raw = result->body;
    response.backend_id = id();
    try {
        response.text = parse_response_text(nlohmann::json::parse(result->body));
    } catch (const nlohmann::json::exception& e) {
        throw RunError("unparseable response for " + request.request_id + ": " + e.what());
    }
    response.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return response;
}

}  // namespace memvqa
