#pragma once

// Chat-completions HTTP client. The bearer token comes from the
// environment only (STRETCHBOT_API_KEY); it is never read from config files.

#include <cstdlib>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "stretchbot/reasoner.hpp"

namespace stretchbot::net {

inline constexpr const char* kApiKeyEnv = "STRETCHBOT_API_KEY";

/// "https://host:port/prefix" -> ("https://host:port", "/prefix").
inline std::pair<std::string, std::string> splitBaseUrl(std::string_view url) {
  const auto scheme = url.find("://");
  const auto hostStart = scheme == std::string_view::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', hostStart);
  if (slash == std::string_view::npos) return {std::string(url), ""};
  std::string path(url.substr(slash));
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {std::string(url.substr(0, slash)), path};
}

class ChatCompletionsClient final : public reasoner::ReasonerClient {
 public:
  ChatCompletionsClient(std::string baseUrl, std::string model, double temperature = 0.2)
      : model_(std::move(model)), temperature_(temperature) {
    std::tie(origin_, prefix_) = splitBaseUrl(baseUrl);
    if (const char* key = std::getenv(kApiKeyEnv)) token_ = key;
  }

  Expected<std::string> complete(const reasoner::CompletionRequest& request, reasoner::Clock&) override {
    httplib::Client http(origin_);
    const auto timeout = std::chrono::duration<double>(request.timeoutSeconds);
    http.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    http.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    http.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    if (!token_.empty()) http.set_bearer_token_auth(token_);

    nlohmann::json body{{"model", model_},
                        {"temperature", temperature_},
                        {"messages",
                         {{{"role", "system"}, {"content", request.systemPrompt}},
                          {{"role", "user"}, {"content", request.userMessage}}}}};
    auto res = http.Post(prefix_ + "/chat/completions", body.dump(), "application/json");
    if (!res) {
      const auto err = res.error();
      const bool timedOut = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout;
      return fail(timedOut ? ErrorCode::kTimeout : ErrorCode::kNetwork, httplib::to_string(err));
    }
    if (res->status != 200)
      return fail(ErrorCode::kNetwork, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    try {
      auto doc = nlohmann::json::parse(res->body);
      const auto& choices = doc.at("choices");
      if (choices.empty()) return fail(ErrorCode::kEmptyCompletion, "no choices");
      const auto& content = choices[0].at("message").at("content");
      if (!content.is_string() || text::trim(content.get<std::string>()).empty())
        return fail(ErrorCode::kEmptyCompletion, "empty message content");
      return content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      return fail(ErrorCode::kNetwork, std::string("unexpected response body: ") + e.what());
    }
  }

 private:
  std::string origin_;
  std::string prefix_;
  std::string model_;
  double temperature_;
  std::string token_;
};

}  // namespace stretchbot::net
