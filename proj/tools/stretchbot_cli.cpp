// stretchbot: replay scenarios, run an interactive text session, serve the
// HTTP API, or summarize a recorded event log.

#include <atomic>
#include <cstdio>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "stretchbot/net/conceptnet_client.hpp"
#include "stretchbot/net/openai_client.hpp"
#include "stretchbot/service.hpp"
#include "stretchbot/stretchbot.hpp"

namespace fs = std::filesystem;
using namespace stretchbot;

namespace {

struct Common {
  std::string config;
  std::string kg;
  std::string fallback;
  std::string conceptnet;
  std::string cacheDir;
  std::string latency;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "session config (JSON); default: data/config/default.json");
    app->add_option("--kg", kg, "knowledge graph (JSON); default: data/kg/stretching_kg.json");
    app->add_option("--fallback", fallback, "offline commonsense fixture; default: data/kg/fallback_fixture.json");
    app->add_option("--conceptnet", conceptnet, "query a ConceptNet-compatible service instead of the fixture");
    app->add_option("--cache-dir", cacheDir, "on-disk cache for --conceptnet responses");
    app->add_option("--latency", latency, "injected reasoner latency: off, <s>, <lo>-<hi> or low-budget");
  }

  SessionConfig loadSessionConfig() const {
    auto cfg = loadConfig(config.empty() ? dataDir() / "config" / "default.json" : fs::path(config));
    if (!latency.empty()) {
      auto m = reasoner::LatencyModel::parse(latency);
      if (!m) throw StretchbotError(ErrorCode::kInvalidConfig, "--latency: cannot parse '" + latency + "'");
      cfg.latency = *m;
    }
    return cfg;
  }

  std::shared_ptr<const kg::KnowledgeGraph> loadGraph() const {
    const fs::path path = kg.empty() ? dataDir() / "kg" / "stretching_kg.json" : fs::path(kg);
    return std::make_shared<const kg::KnowledgeGraph>(kg::loadKnowledgeGraph(readTextFile(path)));
  }

  std::shared_ptr<kg::FallbackClient> loadFallback() const {
    if (!conceptnet.empty()) return std::make_shared<net::ConceptNetClient>(conceptnet, cacheDir);
    const fs::path path = fallback.empty() ? dataDir() / "kg" / "fallback_fixture.json" : fs::path(fallback);
    return std::make_shared<kg::FixtureFallback>(kg::FixtureFallback::fromJson(readTextFile(path)));
  }
};

std::shared_ptr<reasoner::ReasonerClient> makeClient(const std::string& mock, const std::string& endpoint,
                                                     const std::string& model, const SessionConfig& cfg) {
  if (!mock.empty())
    return std::make_shared<reasoner::MockReasoner>(reasoner::MockReasoner::fromJson(readTextFile(mock)));
  const auto url = endpoint.empty() ? cfg.endpoint : endpoint;
  const auto id = model.empty() ? cfg.model : model;
  if (url.empty()) return nullptr;
  return std::make_shared<net::ChatCompletionsClient>(url, id);
}

void printMetrics(const SessionMetrics& m, std::ostream& out) {
  auto row = [&](std::string_view k, const auto& v) { out << "  " << std::left << std::setw(28) << k << v << "\n"; };
  const auto j = toJson(m);
  row("decision cycles", m.decisionCycles);
  row("approved decisions", m.approvedDecisions);
  for (const auto& [cls, n] : m.verifierEdits) row("edits: " + cls, n);
  row("reasoner failures", m.reasonerFailures);
  row("rejected replies", m.rejectedReplies);
  row("fallback utterances", m.fallbackUtterances);
  row("queued triggers", m.queuedTriggers);
  row("kg internal hits", m.kgInternalHits);
  row("kg fallbacks", m.kgFallbacks);
  row("kg warnings", m.kgWarnings);
  row("exercises completed", m.exercisesCompleted);
  row("corrective resets", m.correctiveResets);
  row("points", m.points);
  std::ostringstream lat;
  lat << std::fixed << std::setprecision(3) << j["latency_mean"].get<double>() << " s mean, "
      << j["latency_max"].get<double>() << " s max over " << m.decisionLatencies.size();
  row("reasoner latency", lat.str());
}

/// One human-readable line for events a console user cares about.
std::optional<std::string> narrate(const nlohmann::json& record) {
  const auto type = record.at("type").get<std::string>();
  const auto& d = record.at("data");
  std::ostringstream out;
  out << "[" << std::fixed << std::setprecision(2) << record.at("t").get<double>() << "s] ";
  if (type == "spoke") out << "StretchBot (" << d.at("source").get<std::string>() << "): " << d.at("text").get<std::string>();
  else if (type == "exercise_started") out << "-> exercise " << d.at("name").get<std::string>();
  else if (type == "exercise_success") out << "** " << d.at("name").get<std::string>() << " held long enough";
  else if (type == "point_started") out << "(pointing at " << d.at("object").get<std::string>() << ")";
  else if (type == "routine_stopped") out << "routine stopped: " << d.at("reason").get<std::string>();
  else if (type == "paused") out << "(paused)";
  else if (type == "reasoner_failed") out << "reasoner failed: " << d.at("error").get<std::string>();
  else if (type == "reply_rejected") out << "reply rejected: " << d.at("error").get<std::string>();
  else if (type == "decision_queued") out << "(decision queued)";
  else return std::nullopt;
  return out.str();
}

int cmdReplay(const Common& common, const std::string& scenarioPath, const std::string& outPath, bool json) {
  ReplayOptions opts{common.loadSessionConfig(), common.loadGraph(), common.loadFallback(), nullptr};
  const auto scenario = parseScenario(readTextFile(scenarioPath));
  const auto result = replayScenario(scenario, opts);
  if (!outPath.empty()) std::ofstream(outPath, std::ios::binary) << result.serializedLog;
  if (json) {
    std::cout << nlohmann::json{{"scenario", result.scenario},
                                {"digest", result.digest},
                                {"events", result.log.size()},
                                {"phase", result.state.phase},
                                {"metrics", toJson(result.metrics())}}
                     .dump(2)
              << "\n";
    return 0;
  }
  std::cout << "scenario  " << result.scenario << "\n"
            << "events    " << result.log.size() << "\n"
            << "phase     " << to_string(result.state.phase) << "\n"
            << "digest    " << result.digest << "\n"
            << "metrics\n";
  printMetrics(result.metrics(), std::cout);
  return 0;
}

int cmdMetrics(const std::string& logPath) {
  const auto log = parseLog(readTextFile(logPath));
  const auto state = foldLog(log);
  std::cout << "session   " << state.sessionId << "\n"
            << "events    " << log.size() << "\n"
            << "phase     " << to_string(state.phase) << "\n"
            << "metrics\n";
  printMetrics(state.metrics, std::cout);
  return 0;
}

/// "voice:tired=0.7,neutral=0.3 facial:tired=0.6"
Expected<std::vector<affect::ChannelPrediction>> parseEmotionArg(std::string_view spec) {
  std::vector<affect::ChannelPrediction> out;
  std::istringstream in{std::string(spec)};
  std::string chunk;
  while (in >> chunk) {
    const auto colon = chunk.find(':');
    if (colon == std::string::npos) return fail(ErrorCode::kInvalidScore, "expected channel:label=score,...");
    auto channel = affect::channel_from_string(chunk.substr(0, colon));
    if (!channel) return fail(ErrorCode::kInvalidScore, "unknown channel " + chunk.substr(0, colon));
    affect::ChannelPrediction p{*channel, {}};
    std::istringstream pairs(chunk.substr(colon + 1));
    std::string pair;
    while (std::getline(pairs, pair, ',')) {
      const auto eq = pair.find('=');
      if (eq == std::string::npos) return fail(ErrorCode::kInvalidScore, pair);
      try {
        p.scores[pair.substr(0, eq)] = std::stod(pair.substr(eq + 1));
      } catch (const std::exception&) {
        return fail(ErrorCode::kInvalidScore, pair);
      }
    }
    out.push_back(std::move(p));
  }
  if (out.empty()) return fail(ErrorCode::kEmptyPredictions);
  return out;
}

constexpr const char* kRunHelp = R"(Type to talk to StretchBot. Commands:
  /objects chair, water bottle      set detected objects (empty clears)
  /emotion voice:tired=0.7,neutral=0.3 facial:tired=0.6
  /pose <generator> <seconds>       feed synthetic landmarks (valid-arms-overhead,
                                    valid-toe-touch, lean-left, lean-right, invalid-slouch)
  /state  /metrics  /log <path>  /quit)";

int cmdRun(const Common& common, const std::string& mock, const std::string& endpoint, const std::string& model,
           std::uint64_t seed, bool verbose) {
  auto cfg = common.loadSessionConfig();
  auto client = makeClient(mock, endpoint, model, cfg);
  if (!client) {
    std::cerr << "no reasoner: pass --mock SCRIPT or --endpoint URL --model ID\n";
    return 2;
  }
  LiveSession session("console", {cfg, common.loadGraph(), common.loadFallback(), client, seed, true});
  std::atomic<bool> done{false};
  std::jthread printer([&session, &done, verbose](std::stop_token st) {
    std::size_t next = 0;
    while (!st.stop_requested()) {
      auto batch = session.feed().waitFrom(next, std::chrono::milliseconds(100));
      for (const auto& r : batch.records) {
        auto j = nlohmann::json::parse(r);
        if (verbose) std::cout << r << "\n";
        else if (auto line = narrate(j)) std::cout << *line << "\n";
      }
      std::cout.flush();
      next += batch.records.size();
      if (batch.closed && session.feed().size() == next) {
        done = true;
        return;
      }
    }
  });

  std::cout << kRunHelp << "\n";
  std::string line;
  while (!done && std::getline(std::cin, line)) {
    const auto trimmed = std::string(text::trim(line));
    if (trimmed.empty()) continue;
    LiveSession::Ack ack = false;
    if (trimmed == "/quit") break;
    if (trimmed == "/state") {
      std::cout << toJson(session.snapshot()).dump(2) << "\n";
      continue;
    }
    if (trimmed == "/metrics") {
      printMetrics(session.snapshot().metrics, std::cout);
      continue;
    }
    if (trimmed.starts_with("/log ")) {
      std::ofstream(trimmed.substr(5), std::ios::binary) << serializeLog(session.log());
      continue;
    }
    if (trimmed.starts_with("/objects")) {
      std::vector<std::string> objs;
      std::istringstream in(trimmed.substr(8));
      std::string o;
      while (std::getline(in, o, ','))
        if (!text::trim(o).empty()) objs.emplace_back(text::trim(o));
      ack = session.objects(std::move(objs));
    } else if (trimmed.starts_with("/emotion")) {
      auto channels = parseEmotionArg(trimmed.substr(8));
      if (!channels) {
        std::cout << "! " << channels.error().describe() << "\n";
        continue;
      }
      ack = session.emotion(std::move(*channels), std::nullopt);
    } else if (trimmed.starts_with("/pose")) {
      std::istringstream in(trimmed.substr(5));
      std::string name;
      double seconds = 0;
      in >> name >> seconds;
      auto g = gen::generator_from_string(name);
      if (!g || seconds <= 0) {
        std::cout << "! usage: /pose <generator> <seconds>\n";
        continue;
      }
      ack = session.landmarks(*g, seconds);
    } else if (trimmed.starts_with("/")) {
      std::cout << kRunHelp << "\n";
      continue;
    } else {
      ack = session.utterance(trimmed);
    }
    if (!ack) std::cout << "! " << ack.error().describe() << "\n";
  }
  session.waitIdle(std::chrono::seconds(static_cast<long>(cfg.timeoutSeconds) + 5));
  printer.request_stop();
  return 0;
}

Service* gService = nullptr;

int cmdServe(const Common& common, const std::string& host, int port, const std::string& mock,
             const std::string& endpoint, const std::string& model, bool fastFrames) {
  auto cfg = common.loadSessionConfig();
  ServiceOptions opts{cfg, common.loadGraph(), common.loadFallback(), nullptr, !fastFrames};
  opts.clientFactory = [mock, endpoint, model, cfg](const nlohmann::json&) { return makeClient(mock, endpoint, model, cfg); };
  Service service(std::move(opts));
  gService = &service;
  std::signal(SIGINT, [](int) {
    if (gService) gService->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (gService) gService->stop();
  });
  std::cerr << "listening on http://" << host << ":" << port << "\n";
  const bool ok = service.listen(host, port);
  gService = nullptr;
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"StretchBot session engine"};
  app.require_subcommand(1);
  Common common;

  auto* replay = app.add_subcommand("replay", "replay a scenario deterministically and print its digest");
  common.attach(replay);
  std::string scenarioPath, outPath;
  bool json = false;
  replay->add_option("--scenario,scenario", scenarioPath, "scenario file (JSONL)")->required()->check(CLI::ExistingFile);
  replay->add_option("--out", outPath, "write the event log here");
  replay->add_flag("--json", json, "machine-readable summary");

  auto* run = app.add_subcommand("run", "interactive text session on stdin");
  std::string mock, endpoint, model;
  std::uint64_t seed = 0;
  bool verbose = false;
  common.attach(run);
  run->add_option("--mock", mock, "scripted replies (JSONL or JSON array)")->check(CLI::ExistingFile);
  run->add_option("--endpoint", endpoint, "chat-completions base URL (token from STRETCHBOT_API_KEY)");
  run->add_option("--model", model, "model id for --endpoint");
  run->add_option("--seed", seed, "session seed");
  run->add_flag("--verbose,-v", verbose, "print every event record");

  auto* serve = app.add_subcommand("serve", "serve the HTTP API and event stream");
  std::string host = "127.0.0.1";
  int port = 8080;
  bool fastFrames = false;
  common.attach(serve);
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port");
  serve->add_option("--mock", mock, "scripted replies used by every new session")->check(CLI::ExistingFile);
  serve->add_option("--endpoint", endpoint, "chat-completions base URL (token from STRETCHBOT_API_KEY)");
  serve->add_option("--model", model, "model id for --endpoint");
  serve->add_flag("--fast-frames", fastFrames, "feed landmark segments without real-time pacing");

  auto* metrics = app.add_subcommand("metrics", "fold an event log and print its metrics");
  std::string logPath;
  metrics->add_option("--log,log", logPath, "event log (JSONL)")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*replay) return cmdReplay(common, scenarioPath, outPath, json);
    if (*run) return cmdRun(common, mock, endpoint, model, seed, verbose);
    if (*serve) return cmdServe(common, host, port, mock, endpoint, model, fastFrames);
    if (*metrics) return cmdMetrics(logPath);
  } catch (const StretchbotError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
