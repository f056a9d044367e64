#pragma once

// HTTP API over live sessions. Handlers only post messages to session
// actors; they never touch session state directly.
//
//   POST   /sessions                      {"seed"?, "mock"?: [{"reply", "delay"}], "realtime"?}
//   GET    /sessions
//   DELETE /sessions/{id}
//   POST   /sessions/{id}/utterance       {"text": "..."}
//   POST   /sessions/{id}/perception      {"objects"?, "emotion"?: {"channels", "weights"?}, "landmarks"?: {"generator", "duration"}}
//   GET    /sessions/{id}/state
//   GET    /sessions/{id}/metrics
//   GET    /sessions/{id}/log             line-delimited event records
//   GET    /sessions/{id}/events          server-sent events from sequence 0 (?follow=0 closes after the backlog)

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "stretchbot/live.hpp"
#include "stretchbot/scenario.hpp"

namespace stretchbot {

struct ServiceOptions {
  SessionConfig config;
  std::shared_ptr<const kg::KnowledgeGraph> graph;
  std::shared_ptr<kg::FallbackClient> fallback;
  /// Builds the reasoner for a new session from the create request body.
  std::function<std::shared_ptr<reasoner::ReasonerClient>(const nlohmann::json&)> clientFactory;
  bool realtimeFrames = true;
};

class Service {
 public:
  explicit Service(ServiceOptions options) : options_(std::move(options)) { routes(); }

  ~Service() { stop(); }

  bool listen(const std::string& host, int port) { return server_.listen(host, port); }
  int bindToAnyPort(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listenAfterBind() { return server_.listen_after_bind(); }
  void waitUntilReady() { server_.wait_until_ready(); }
  void stop() {
    stopping_ = true;
    if (server_.is_running()) server_.stop();
  }

  std::shared_ptr<LiveSession> session(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

 private:
  struct BadRequest {
    std::string field;
    std::string message;
  };

  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void badRequest(httplib::Response& res, const BadRequest& e) {
    reply(res, 400, {{"error", "bad_request"}, {"field", e.field}, {"message", e.message}});
  }

  static nlohmann::json parseBody(const httplib::Request& req, bool allowEmpty) {
    if (text::trim(req.body).empty()) {
      if (allowEmpty) return nlohmann::json::object();
      throw BadRequest{"", "request body must be a JSON object"};
    }
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception& e) {
      throw BadRequest{"", std::string("invalid JSON: ") + e.what()};
    }
    if (!body.is_object()) throw BadRequest{"", "request body must be a JSON object"};
    return body;
  }

  /// Wraps a per-session handler with lookup and error mapping.
  template <typename Fn>
  httplib::Server::Handler withSession(Fn fn) {
    return [this, fn](const httplib::Request& req, httplib::Response& res) {
      const auto id = req.path_params.at("id");
      auto s = session(id);
      if (!s) return reply(res, 404, {{"error", "not_found"}, {"message", "unknown session '" + id + "'"}});
      try {
        fn(*s, req, res);
      } catch (const BadRequest& e) {
        badRequest(res, e);
      }
    };
  }

  static void ack(httplib::Response& res, const LiveSession::Ack& a) {
    if (!a) {
      const int status = a.error().code == ErrorCode::kSessionStopped ? 409 : 400;
      return reply(res, status, {{"error", std::string(to_string(a.error().code))}, {"message", a.error().message}});
    }
    reply(res, 202, {{"accepted", true}, {"decision_started", *a}});
  }

  void routes() {
    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) { reply(res, 200, {{"status", "ok"}}); });

    server_.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        auto body = parseBody(req, true);
        LiveOptions live{options_.config, options_.graph, options_.fallback, nullptr, 0, options_.realtimeFrames};
        if (body.contains("seed")) {
          if (!body["seed"].is_number_unsigned()) throw BadRequest{"seed", "expected a non-negative integer"};
          live.seed = body["seed"].get<std::uint64_t>();
        }
        if (body.contains("realtime")) {
          if (!body["realtime"].is_boolean()) throw BadRequest{"realtime", "expected a boolean"};
          live.realtimeFrames = body["realtime"].get<bool>();
        }
        if (body.contains("mock")) {
          if (!body["mock"].is_array()) throw BadRequest{"mock", "expected a list of {reply, delay}"};
          try {
            live.client = std::make_shared<reasoner::MockReasoner>(reasoner::MockReasoner::fromJson(body["mock"].dump()));
          } catch (const std::exception& e) {
            throw BadRequest{"mock", e.what()};
          }
        } else if (options_.clientFactory) {
          live.client = options_.clientFactory(body);
        }
        std::string id;
        {
          std::lock_guard lock(mutex_);
          id = "s" + std::to_string(++nextId_);
        }
        auto s = std::make_shared<LiveSession>(id, std::move(live));
        {
          std::lock_guard lock(mutex_);
          sessions_[id] = s;
        }
        reply(res, 201, {{"id", id}});
      } catch (const BadRequest& e) {
        badRequest(res, e);
      }
    });

    server_.Get("/sessions", [this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json ids = nlohmann::json::array();
      std::lock_guard lock(mutex_);
      for (const auto& [id, _] : sessions_) ids.push_back(id);
      reply(res, 200, {{"sessions", ids}});
    });

    server_.Delete("/sessions/:id", [this](const httplib::Request& req, httplib::Response& res) {
      std::shared_ptr<LiveSession> removed;
      {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(req.path_params.at("id"));
        if (it != sessions_.end()) {
          removed = it->second;
          sessions_.erase(it);
        }
      }
      if (!removed) return reply(res, 404, {{"error", "not_found"}, {"message", "unknown session"}});
      reply(res, 200, {{"deleted", req.path_params.at("id")}});
    });

    server_.Post("/sessions/:id/utterance",
                 withSession([](LiveSession& s, const httplib::Request& req, httplib::Response& res) {
                   auto body = parseBody(req, false);
                   if (!body.contains("text") || !body["text"].is_string())
                     throw BadRequest{"text", "required string"};
                   const auto textIn = body["text"].get<std::string>();
                   if (text::trim(textIn).empty()) throw BadRequest{"text", "must not be empty"};
                   ack(res, s.utterance(textIn));
                 }));

    server_.Post("/sessions/:id/perception",
                 withSession([this](LiveSession& s, const httplib::Request& req, httplib::Response& res) {
                   perception(s, parseBody(req, false), res);
                 }));

    server_.Get("/sessions/:id/state", withSession([](LiveSession& s, const httplib::Request&, httplib::Response& res) {
                  reply(res, 200, toJson(s.snapshot()));
                }));

    server_.Get("/sessions/:id/metrics",
                withSession([](LiveSession& s, const httplib::Request&, httplib::Response& res) {
                  reply(res, 200, toJson(s.snapshot().metrics));
                }));

    server_.Get("/sessions/:id/log", withSession([](LiveSession& s, const httplib::Request&, httplib::Response& res) {
                  res.set_content(serializeLog(s.log()), "application/x-ndjson");
                }));

    server_.Get("/sessions/:id/events", [this](const httplib::Request& req, httplib::Response& res) {
      const auto id = req.path_params.at("id");
      auto s = session(id);
      if (!s) return reply(res, 404, {{"error", "not_found"}, {"message", "unknown session '" + id + "'"}});
      const bool follow = req.get_param_value("follow") != "0";
      auto next = std::make_shared<std::size_t>(0);
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider("text/event-stream", [this, s, next, follow](std::size_t, httplib::DataSink& sink) {
        while (!stopping_.load()) {
          auto batch = s->feed().waitFrom(*next, std::chrono::milliseconds(follow ? 200 : 0));
          for (std::size_t i = 0; i < batch.records.size(); ++i) {
            const auto seq = batch.first + i;
            std::string chunk = "id: " + std::to_string(seq) + "\nevent: " + batch.types[i] + "\ndata: " +
                                batch.records[i] + "\n\n";
            if (!sink.write(chunk.data(), chunk.size())) return false;
          }
          *next += batch.records.size();
          if (!follow || (batch.closed && s->feed().size() == *next)) {
            sink.done();
            return true;
          }
          if (!batch.records.empty()) return true;  // let httplib flush, then resume
          if (!sink.is_writable()) return false;
        }
        sink.done();
        return true;
      });
    });
  }

  void perception(LiveSession& s, const nlohmann::json& body, httplib::Response& res) {
    if (!body.contains("objects") && !body.contains("emotion") && !body.contains("landmarks"))
      throw BadRequest{"", "expected at least one of objects, emotion, landmarks"};
    std::vector<std::string> objects;
    std::vector<affect::ChannelPrediction> channels;
    std::optional<affect::ReliabilityWeights> weights;
    std::optional<gen::Generator> generator;
    double duration = 0.0;

    // Validate everything before applying anything.
    if (body.contains("objects")) {
      if (!body["objects"].is_array()) throw BadRequest{"objects", "expected a list of names"};
      for (const auto& o : body["objects"]) {
        if (!o.is_string()) throw BadRequest{"objects", "entries must be strings"};
        objects.push_back(o.get<std::string>());
      }
    }
    if (body.contains("emotion")) {
      const auto& e = body["emotion"];
      if (!e.is_object() || !e.contains("channels")) throw BadRequest{"emotion.channels", "required"};
      try {
        channels = detail::parse_channels(e["channels"], 0);
      } catch (const StretchbotError& ex) {
        throw BadRequest{"emotion.channels", ex.error().message};
      }
      if (e.contains("weights")) {
        try {
          weights = e["weights"].get<affect::ReliabilityWeights>();
        } catch (const std::exception& ex) {
          throw BadRequest{"emotion.weights", ex.what()};
        }
        for (const auto& [c, w] : weights->weights)
          if (w < 0) throw BadRequest{"emotion.weights." + std::string(affect::to_string(c)), "must be >= 0"};
      }
    }
    if (body.contains("landmarks")) {
      const auto& l = body["landmarks"];
      if (!l.is_object() || !l.contains("generator") || !l["generator"].is_string())
        throw BadRequest{"landmarks.generator", "required string"};
      generator = gen::generator_from_string(l["generator"].get<std::string>());
      if (!generator) throw BadRequest{"landmarks.generator", "unknown generator"};
      if (!l.contains("duration") || !l["duration"].is_number() || l["duration"].get<double>() <= 0)
        throw BadRequest{"landmarks.duration", "required positive number (seconds)"};
      duration = l["duration"].get<double>();
    }

    LiveSession::Ack result = false;
    if (body.contains("objects")) result = s.objects(std::move(objects));
    if (result && body.contains("emotion")) result = s.emotion(std::move(channels), weights);
    if (result && generator) result = s.landmarks(*generator, duration);
    ack(res, result);
  }

  ServiceOptions options_;
  httplib::Server server_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<LiveSession>> sessions_;
  std::uint64_t nextId_ = 0;
  std::atomic<bool> stopping_{false};
};

}  // namespace stretchbot
