#pragma once

// Live commonsense fallback against a ConceptNet-compatible REST service,
// with an on-disk cache so repeated sessions stay offline-friendly.

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "stretchbot/knowledge.hpp"
#include "stretchbot/net/openai_client.hpp"

namespace stretchbot::net {

class ConceptNetClient final : public kg::FallbackClient {
 public:
  explicit ConceptNetClient(std::string baseUrl = "https://api.conceptnet.io", std::filesystem::path cacheDir = {},
                            double timeoutSeconds = 5.0, int limit = 50)
      : cacheDir_(std::move(cacheDir)), timeout_(timeoutSeconds), limit_(limit) {
    std::tie(origin_, prefix_) = splitBaseUrl(baseUrl);
  }

  Expected<std::vector<kg::FallbackEdge>> query(std::string_view term) override {
    const auto key = kg::fallbackTerm(term);
    if (auto cached = readCache(key)) return parse(*cached, key);

    httplib::Client http(origin_);
    const auto t = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::duration<double>(timeout_));
    http.set_connection_timeout(t);
    http.set_read_timeout(t);
    auto res = http.Get(prefix_ + "/c/en/" + key + "?limit=" + std::to_string(limit_));
    if (!res) return fail(ErrorCode::kFallbackUnavailable, httplib::to_string(res.error()));
    if (res->status != 200) return fail(ErrorCode::kFallbackUnavailable, "HTTP " + std::to_string(res->status));
    auto edges = parse(res->body, key);
    if (edges) writeCache(key, res->body);
    return edges;
  }

 private:
  /// Keeps edges whose start node is the queried English term.
  static Expected<std::vector<kg::FallbackEdge>> parse(const std::string& body, const std::string& key) {
    try {
      auto doc = nlohmann::json::parse(body);
      std::vector<kg::FallbackEdge> out;
      const std::string node = "/c/en/" + key;
      for (const auto& e : doc.value("edges", nlohmann::json::array())) {
        const auto start = e.at("start").value("@id", "");
        if (start != node && !start.starts_with(node + "/")) continue;
        if (e.at("end").value("language", "en") != "en") continue;
        out.push_back({e.at("rel").value("label", ""), e.at("end").value("label", "")});
      }
      return out;
    } catch (const nlohmann::json::exception& ex) {
      return fail(ErrorCode::kFallbackUnavailable, std::string("unexpected response: ") + ex.what());
    }
  }

  std::optional<std::string> readCache(const std::string& key) const {
    if (cacheDir_.empty()) return std::nullopt;
    std::lock_guard lock(mutex_);
    std::ifstream in(cacheDir_ / (key + ".json"), std::ios::binary);
    if (!in) return std::nullopt;
    return std::string(std::istreambuf_iterator<char>(in), {});
  }

  void writeCache(const std::string& key, const std::string& body) const {
    if (cacheDir_.empty()) return;
    std::lock_guard lock(mutex_);
    std::error_code ec;
    std::filesystem::create_directories(cacheDir_, ec);
    std::ofstream(cacheDir_ / (key + ".json"), std::ios::binary) << body;
  }

  std::string origin_;
  std::string prefix_;
  std::filesystem::path cacheDir_;
  double timeout_;
  int limit_;
  mutable std::mutex mutex_;
};

}  // namespace stretchbot::net
