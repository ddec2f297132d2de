#include "memvqa/backend.hpp"

#include <thread>

#include "memvqa/error.hpp"

namespace memvqa {

void DecodingParams::validate() const {
    if (max_new_tokens < 1) throw ConfigError("max_new_tokens must be >= 1");
    if (beam_width < 1) throw ConfigError("beam width must be >= 1");
}

std::string DecodingParams::describe() const {
    if (strategy == DecodingStrategy::Greedy) return "greedy";
    return "beam(" + std::to_string(beam_width) + ")";
}

DecodingParams default_dm_decoding(DatasetId id) {
    return {id == DatasetId::Cholec80 ? std::size_t{16} : std::size_t{12}, DecodingStrategy::Greedy, 1};
}

DecodingParams default_im_decoding() {
    return {160, DecodingStrategy::Beam, 3};
}

RetryingBackend::RetryingBackend(Backend& inner, RetryPolicy policy, Sleeper sleeper)
    : inner_(inner), policy_(policy), sleeper_(std::move(sleeper)) {
    if (policy_.max_attempts == 0) throw ConfigError("retry policy needs at least one attempt");
    if (!sleeper_) {
        sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
}

BackendResponse RetryingBackend::complete(const BackendRequest& request) {
    std::string last_error;
    auto backoff = policy_.base_backoff;
    for (std::size_t attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
        try {
            auto response = inner_.complete(request);
            response.attempts = attempt;
            return response;
        } catch (const RetryableError& e) {
            last_error = e.what();
        }
        if (attempt < policy_.max_attempts) {
            sleeper_(backoff);
            backoff *= 2;
        }
    }
    throw RunError("request " + request.request_id + " failed after " + std::to_string(policy_.max_attempts) +
                   " attempts: " + last_error);
}

}  // namespace memvqa
