#include <gtest/gtest.h>

#include <cstdlib>
#include <thread>

#include "stretchbot/net/conceptnet_client.hpp"
#include "stretchbot/net/openai_client.hpp"
#include "stretchbot/service.hpp"
#include "support.hpp"

using namespace stretchbot;
using namespace std::chrono_literals;

namespace {

/// httplib server on an ephemeral loopback port, stopped on destruction.
class FakeServer {
 public:
  explicit FakeServer(const std::function<void(httplib::Server&)>& setup) {
    setup(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

std::string completion(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

LiveOptions liveOptions(std::vector<reasoner::MockTurn> turns) {
  LiveOptions o;
  o.config = support::shippedConfig();
  o.graph = support::shippedGraph();
  o.fallback = support::shippedFallback();
  o.client = std::make_shared<reasoner::MockReasoner>(std::move(turns));
  o.realtimeFrames = false;
  return o;
}

template <typename T>
std::size_t count(const std::vector<Event>& log) {
  std::size_t n = 0;
  for (const auto& e : log) n += e.as<T>() != nullptr;
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------
// Chat-completions client against a local stand-in

TEST(ChatCompletionsClient, SendsPromptAndReturnsContent) {
  nlohmann::json seen;
  std::string auth;
  FakeServer fake([&](httplib::Server& s) {
    s.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
      seen = nlohmann::json::parse(req.body);
      auth = req.get_header_value("Authorization");
      res.set_content(completion("Reasoning: ok\nOutput: Hello!"), "application/json");
    });
  });
  ::setenv(net::kApiKeyEnv, "test-token", 1);
  net::ChatCompletionsClient client(fake.url() + "/v1", "some-model");
  ::unsetenv(net::kApiKeyEnv);
  reasoner::SteadyClock clock;
  auto r = client.complete({"SYSTEM", "USER", 5.0}, clock);
  ASSERT_TRUE(r) << r.error().describe();
  EXPECT_EQ(*r, "Reasoning: ok\nOutput: Hello!");
  EXPECT_EQ(seen["model"], "some-model");
  EXPECT_EQ(seen["messages"][0]["content"], "SYSTEM");
  EXPECT_EQ(seen["messages"][1]["content"], "USER");
  EXPECT_EQ(auth, "Bearer test-token");
}

TEST(ChatCompletionsClient, ErrorMapping) {
  FakeServer fake([](httplib::Server& s) {
    s.Post("/fail/chat/completions", [](const httplib::Request&, httplib::Response& res) {
      res.status = 500;
      res.set_content("boom", "text/plain");
    });
    s.Post("/empty/chat/completions", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(completion("  "), "application/json");
    });
    s.Post("/slow/chat/completions", [](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(1500ms);
      res.set_content(completion("late"), "application/json");
    });
  });
  reasoner::SteadyClock clock;
  EXPECT_EQ(net::ChatCompletionsClient(fake.url() + "/fail", "m").complete({"s", "u", 5}, clock).error().code,
            ErrorCode::kNetwork);
  EXPECT_EQ(net::ChatCompletionsClient(fake.url() + "/empty", "m").complete({"s", "u", 5}, clock).error().code,
            ErrorCode::kEmptyCompletion);
  EXPECT_EQ(net::ChatCompletionsClient(fake.url() + "/slow", "m").complete({"s", "u", 0.3}, clock).error().code,
            ErrorCode::kTimeout);
}

TEST(ChatCompletionsClient, UnreachableEndpointIsNetworkError) {
  // nothing listens on port 1, so the connection is refused immediately
  reasoner::SteadyClock clock;
  auto r = net::ChatCompletionsClient("http://127.0.0.1:1", "m").complete({"s", "u", 2}, clock);
  ASSERT_FALSE(r);
  EXPECT_EQ(r.error().code, ErrorCode::kNetwork);
}

TEST(SplitBaseUrl, OriginAndPrefix) {
  EXPECT_EQ(net::splitBaseUrl("https://api.example.com/v1/"), std::make_pair(std::string("https://api.example.com"),
                                                                             std::string("/v1")));
  EXPECT_EQ(net::splitBaseUrl("http://localhost:8080"), std::make_pair(std::string("http://localhost:8080"),
                                                                       std::string("")));
}

// ---------------------------------------------------------------------------
// ConceptNet-compatible client against a local stand-in

TEST(ConceptNetClient, FiltersEdgesAndCaches) {
  int hits = 0;
  FakeServer fake([&](httplib::Server& s) {
    s.Get("/c/en/pillow", [&](const httplib::Request&, httplib::Response& res) {
      ++hits;
      nlohmann::json edges = nlohmann::json::array();
      edges.push_back({{"start", {{"@id", "/c/en/pillow"}}}, {"rel", {{"label", "UsedFor"}}},
                       {"end", {{"label", "resting"}, {"language", "en"}}}});
      edges.push_back({{"start", {{"@id", "/c/en/pillow/n"}}}, {"rel", {{"label", "AtLocation"}}},
                       {"end", {{"label", "bed"}, {"language", "en"}}}});
      edges.push_back({{"start", {{"@id", "/c/en/bed"}}}, {"rel", {{"label", "RelatedTo"}}},
                       {"end", {{"label", "pillow"}, {"language", "en"}}}});
      edges.push_back({{"start", {{"@id", "/c/en/pillow"}}}, {"rel", {{"label", "Synonym"}}},
                       {"end", {{"label", "kissen"}, {"language", "de"}}}});
      res.set_content(nlohmann::json{{"edges", edges}}.dump(), "application/json");
    });
  });
  const auto cache = std::filesystem::temp_directory_path() / ("sb-cn-cache-" + std::to_string(::getpid()));
  std::filesystem::remove_all(cache);
  net::ConceptNetClient client(fake.url(), cache);
  auto edges = client.query("Pillow").value();
  ASSERT_EQ(edges.size(), 2u);
  EXPECT_EQ(edges[0].relation, "UsedFor");
  EXPECT_EQ(edges[1].target, "bed");
  EXPECT_EQ(client.query("pillow").value().size(), 2u);
  EXPECT_EQ(hits, 1);
  EXPECT_TRUE(std::filesystem::exists(cache / "pillow.json"));

  const std::vector<std::string> mentions{"pillow"};
  auto results = kg::retrieveRelations(*support::shippedGraph(), mentions, &client);
  EXPECT_EQ(kg::serializeForPrompt(results), "pillow --UsedFor--> resting\npillow --AtLocation--> bed");
  std::filesystem::remove_all(cache);
}

TEST(ConceptNetClient, MissingTermIsUnavailable) {
  FakeServer fake([](httplib::Server&) {});
  net::ConceptNetClient client(fake.url());
  auto r = client.query("nothing");
  ASSERT_FALSE(r);
  EXPECT_EQ(r.error().code, ErrorCode::kFallbackUnavailable);
}

// ---------------------------------------------------------------------------
// Live sessions

TEST(LiveSession, UtteranceStartsDecisionAndRoutine) {
  LiveSession s("live", liveOptions({{"Output: NEXT_EXERCISE: Raise your arms above your head.", 0.05, {}}}));
  auto ack = s.utterance("I'm ready");
  ASSERT_TRUE(ack);
  EXPECT_TRUE(*ack);
  ASSERT_TRUE(s.waitIdle(5s));
  const auto state = s.snapshot();
  EXPECT_EQ(state.phase, Phase::kInExercise);
  EXPECT_EQ(state.index, 0u);
  EXPECT_EQ(foldLog(s.log()), s.snapshot());
}

TEST(LiveSession, FramesKeepFlowingWhileReasonerIsBusy) {
  LiveSession s("live", liveOptions({{"Output: NEXT_EXERCISE: Raise your arms above your head.", 0.05, {}},
                                     {"Output: About five seconds, keep holding!", 0.8, {}}}));
  ASSERT_TRUE(s.utterance("I'm ready"));
  ASSERT_TRUE(s.waitIdle(5s));
  ASSERT_TRUE(s.utterance("How long do I hold?"));
  ASSERT_TRUE(s.landmarks(gen::Generator::kValidArmsOverhead, 3.0));
  ASSERT_TRUE(s.waitIdle(5s));
  std::this_thread::sleep_for(100ms);  // let the feeder drain

  const auto log = s.log();
  std::uint64_t frames = 0;
  bool progressWhileBusy = false, busy = false;
  for (const auto& e : log) {
    if (const auto* d = e.as<events::DecisionStarted>(); d && d->cycle == 2) busy = true;
    if (const auto* d = e.as<events::DecisionFinished>(); d && d->cycle == 2) busy = false;
    if (const auto* h = e.as<events::HoldProgress>()) {
      frames += h->frames;
      progressWhileBusy = progressWhileBusy || busy;
    }
  }
  EXPECT_EQ(frames, 90u);
  EXPECT_TRUE(progressWhileBusy);
  EXPECT_EQ(count<events::DecisionFinished>(log), 2u);
}

TEST(LiveSession, StopRejectsFurtherInput) {
  LiveSession s("live", liveOptions({{"Output: STOP_ROUTINE Okay, let's stop here.", 0.01, {}}}));
  ASSERT_TRUE(s.utterance("I want to stop"));
  ASSERT_TRUE(s.waitIdle(5s));
  EXPECT_TRUE(s.stopped());
  auto again = s.utterance("hello?");
  ASSERT_FALSE(again);
  EXPECT_EQ(again.error().code, ErrorCode::kSessionStopped);
  auto batch = s.feed().waitFrom(0, 0ms);
  EXPECT_TRUE(batch.closed);
  EXPECT_EQ(batch.types.front(), "session_started");
}

// ---------------------------------------------------------------------------
// HTTP API

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ServiceOptions opts{support::shippedConfig(), support::shippedGraph(), support::shippedFallback(), nullptr, false};
    service_ = std::make_unique<Service>(std::move(opts));
    port_ = service_->bindToAnyPort("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { service_->listenAfterBind(); });
    service_->waitUntilReady();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(10s);
  }
  void TearDown() override {
    service_->stop();
    thread_.join();
  }

  std::string create(const nlohmann::json& body) {
    auto res = client_->Post("/sessions", body.dump(), "application/json");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, 201);
    return nlohmann::json::parse(res->body)["id"];
  }
  httplib::Result post(const std::string& path, const std::string& body) {
    return client_->Post(path, body, "application/json");
  }
  void idle(const std::string& id) { ASSERT_TRUE(service_->session(id)->waitIdle(5s)); }

  std::unique_ptr<Service> service_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(ServiceTest, UtteranceDrivesDecisionVisibleInEventStream) {
  const auto id = create({{"mock", {{{"reply", "Output: NEXT_EXERCISE: Raise your arms above your head."},
                                     {"delay", 0.05}}}}});
  auto res = post("/sessions/" + id + "/utterance", R"({"text":"I'm ready"})");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 202);
  EXPECT_EQ(nlohmann::json::parse(res->body)["decision_started"], true);
  idle(id);

  auto events = client_->Get("/sessions/" + id + "/events?follow=0");
  ASSERT_TRUE(events);
  EXPECT_EQ(events->status, 200);
  EXPECT_TRUE(events->body.starts_with("id: 0\nevent: session_started\ndata: {"));
  EXPECT_NE(events->body.find("event: decision_started"), std::string::npos);
  EXPECT_NE(events->body.find("event: exercise_started"), std::string::npos);
  EXPECT_EQ(events->get_header_value("Content-Type"), "text/event-stream");

  auto state = nlohmann::json::parse(client_->Get("/sessions/" + id + "/state")->body);
  EXPECT_EQ(state["phase"], "in_exercise");
}

TEST_F(ServiceTest, StateEqualsFoldOfServedLog) {
  const auto id = create({{"mock", {{{"reply", "Output: Hello! How are you today?"}, {"delay", 0.01}}}}});
  ASSERT_EQ(post("/sessions/" + id + "/perception", R"({"objects":["banana","chair"]})")->status, 202);
  ASSERT_EQ(post("/sessions/" + id + "/utterance", R"({"text":"hi there"})")->status, 202);
  idle(id);
  const auto log = parseLog(client_->Get("/sessions/" + id + "/log")->body);
  const auto state = nlohmann::json::parse(client_->Get("/sessions/" + id + "/state")->body);
  EXPECT_EQ(toJson(foldLog(log)), state);
  const auto metrics = nlohmann::json::parse(client_->Get("/sessions/" + id + "/metrics")->body);
  EXPECT_EQ(metrics, toJson(foldLog(log).metrics));
  EXPECT_GE(metrics["kg_internal_hits"].get<int>(), 2);
}

TEST_F(ServiceTest, ValidationErrorsNameTheField) {
  const auto id = create(nlohmann::json::object());
  auto missing = post("/sessions/" + id + "/utterance", R"({"txt":"hi"})");
  EXPECT_EQ(missing->status, 400);
  EXPECT_EQ(nlohmann::json::parse(missing->body)["field"], "text");

  auto badJson = post("/sessions/" + id + "/utterance", "{nope");
  EXPECT_EQ(badJson->status, 400);

  auto badGen = post("/sessions/" + id + "/perception", R"({"landmarks":{"generator":"moonwalk","duration":2}})");
  EXPECT_EQ(badGen->status, 400);
  EXPECT_EQ(nlohmann::json::parse(badGen->body)["field"], "landmarks.generator");

  auto badWeight = post("/sessions/" + id + "/perception",
                        R"({"emotion":{"channels":{"voice":{"tired":0.5}},"weights":{"voice":-1}}})");
  EXPECT_EQ(badWeight->status, 400);
  EXPECT_EQ(nlohmann::json::parse(badWeight->body)["field"], "emotion.weights.voice");

  auto badCreate = post("/sessions", R"({"seed":-4})");
  EXPECT_EQ(badCreate->status, 400);
  EXPECT_EQ(nlohmann::json::parse(badCreate->body)["field"], "seed");
}

TEST_F(ServiceTest, UnknownSessionIs404) {
  EXPECT_EQ(client_->Get("/sessions/nope/state")->status, 404);
  EXPECT_EQ(client_->Get("/sessions/nope/events?follow=0")->status, 404);
  EXPECT_EQ(post("/sessions/nope/utterance", R"({"text":"hi"})")->status, 404);
}

TEST_F(ServiceTest, StoppedSessionRejectsInputWith409) {
  const auto id = create({{"mock", {{{"reply", "Output: STOP_ROUTINE Okay, we'll stop."}, {"delay", 0.01}}}}});
  ASSERT_EQ(post("/sessions/" + id + "/utterance", R"({"text":"please stop"})")->status, 202);
  idle(id);
  auto res = post("/sessions/" + id + "/utterance", R"({"text":"hello?"})");
  EXPECT_EQ(res->status, 409);
  // a stopped session's stream ends by itself even when following
  auto events = client_->Get("/sessions/" + id + "/events");
  ASSERT_TRUE(events);
  EXPECT_NE(events->body.find("event: routine_stopped"), std::string::npos);
}

TEST_F(ServiceTest, ListAndDelete) {
  const auto id = create(nlohmann::json::object());
  auto list = nlohmann::json::parse(client_->Get("/sessions")->body);
  EXPECT_EQ(list["sessions"], nlohmann::json::array({id}));
  EXPECT_EQ(client_->Delete("/sessions/" + id)->status, 200);
  EXPECT_EQ(client_->Delete("/sessions/" + id)->status, 404);
  EXPECT_EQ(client_->Get("/health")->status, 200);
}
