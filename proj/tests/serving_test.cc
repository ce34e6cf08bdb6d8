// Copyright 2026 The Sentigraph Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <atomic>
#include <fstream>
#include <future>
#include <thread>

#include "doctest.h"
#include "sentigraph/serving.h"
#include "sentigraph/trainer.h"
#include "support.h"
// After Eigen: resolv.h defines _res.
#include "httplib.h"

namespace sentigraph {
namespace {

using nlohmann::json;
using testing::ThrownCode;

std::shared_ptr<const ResponseGenerator> TinyGenerator(
    std::shared_ptr<const CommonsenseProvider> commonsense = nullptr) {
  RunConfig c = testing::TinyRunConfig();
  c.model.decoder.d_model = 16;
  c.model.graph_dim = 8;
  Providers p = Providers::Mock(c.model.graph_dim);
  if (commonsense) p.commonsense = commonsense;
  auto labeled = PseudoLabelCorpus(testing::OverfitDialogues(2), *p.commonsense, *p.classifier);
  auto model = std::make_shared<ResponseModel>(c.model, BuildVocabulary(labeled), 5);
  return std::make_shared<ResponseGenerator>(model, p, AblationFlags{true, true});
}

ServiceOptions Options(const std::filesystem::path &dir) {
  ServiceOptions o;
  o.store_dir = dir;
  o.decode.max_tokens = 6;
  return o;
}

SurveyResponse Survey(const std::string &id, int rating, Hallucination h = Hallucination::kNone) {
  return {id, rating, rating, rating, rating, h};
}

std::vector<json> StoreRecords(const std::filesystem::path &path) {
  std::vector<json> out;
  std::ifstream in(path);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

TEST_CASE("chat lifecycle with a memorized model") {
  auto dialogues = testing::OverfitDialogues();
  RunConfig config = testing::TinyRunConfig();
  Providers providers = Providers::Mock(config.model.graph_dim);
  TrainedModel m = TrainModel(dialogues, config, providers);
  auto gen = std::make_shared<ResponseGenerator>(m.model, providers, AblationFlags{true, true});
  auto dir = testing::TempDir("lifecycle");
  ServiceOptions options = Options(dir);
  options.decode = DecodeConfig{};
  ChatService service(gen, options);

  const Dialogue &d = dialogues[3];
  ChatSession s = service.CreateSession();
  CHECK(s.id.size() == 32);
  PostResult first = service.PostMessage(s.id, "  " + d.utterances[0].text + "\n");
  CHECK(first.reply == d.utterances[1].text);
  PostResult second = service.PostMessage(s.id, d.utterances[2].text);
  CHECK(second.reply == d.utterances[3].text);
  service.PostMessage(s.id, "thanks");
  ChatSession after = service.GetSession(s.id);
  REQUIRE(after.history.size() == 6);
  CHECK(after.history[0].speaker == SpeakerRole::kClient);
  CHECK(after.history[1].speaker == SpeakerRole::kTherapist);
  CHECK(after.history[0].text == d.utterances[0].text);
  for (size_t i = 0; i < after.history.size(); ++i) CHECK(after.history[i].index == int(i));

  service.SubmitFeedback(Survey(s.id, 5));
  FeedbackSummary summary = service.Summary();
  CHECK(summary.responses == 1);
  CHECK(summary.effectiveness == 100.0);
  CHECK(summary.hallucination_observed == 0.0);
}

TEST_CASE("session and input errors") {
  ChatService service(TinyGenerator(), Options(""));
  ChatSession s = service.CreateSession();
  CHECK(ThrownCode([&] { service.PostMessage(s.id, " \t\n"); }) == ErrorCode::kEmptyMessage);
  CHECK(service.GetSession(s.id).history.empty());
  CHECK(ThrownCode([&] { service.PostMessage("abc123", "hi"); }) == ErrorCode::kSessionNotFound);
  CHECK(ThrownCode([&] { service.GetSession("nope"); }) == ErrorCode::kSessionNotFound);
  CHECK(ThrownCode([&] { service.SubmitFeedback(Survey(s.id, 6)); }) == ErrorCode::kInvalidRating);
  CHECK(ThrownCode([&] { service.SubmitFeedback(Survey(s.id, 0)); }) == ErrorCode::kInvalidRating);
  CHECK(ThrownCode([&] { service.SubmitFeedback(Survey("missing", 3)); }) ==
        ErrorCode::kSessionNotFound);
  CHECK(ThrownCode([] { ParseHallucination("sometimes"); }) == ErrorCode::kInvalidRating);
  CHECK(service.Responses().empty());
  CHECK(service.store_path().empty());
}

TEST_CASE("survey json") {
  SurveyResponse flat = SurveyFromJson("s", json{{"effectiveness", 5}, {"satisfaction", 4},
                                                {"continued_usage", 3}, {"recommend", 2},
                                                {"hallucination_observed", "minor"}});
  CHECK(flat.satisfaction == 4);
  CHECK(flat.hallucination_observed == Hallucination::kMinor);
  SurveyResponse nested = SurveyFromJson(
      "s", json{{"ratings", {{"effectiveness", 5}, {"satisfaction", 4}, {"continued_usage", 3},
                             {"recommend", 2}}},
                {"hallucination_observed", "none"}});
  CHECK(nested.recommend == 2);
  CHECK(ThrownCode([] {
          SurveyFromJson("s", json{{"effectiveness", 5}, {"satisfaction", 4},
                                   {"continued_usage", 3}, {"recommend", 2},
                                   {"hallucination_observed", "none"}, {"email", "x@y"}});
        }) == ErrorCode::kMalformedInput);
  CHECK(ThrownCode([] { SurveyFromJson("s", json{{"effectiveness", 5}}); }) ==
        ErrorCode::kInvalidRating);
  CHECK(ThrownCode([] {
          SurveyFromJson("s", json{{"effectiveness", 4.5}, {"satisfaction", 4},
                                   {"continued_usage", 3}, {"recommend", 2},
                                   {"hallucination_observed", "none"}});
        }) == ErrorCode::kInvalidRating);
}

TEST_CASE("feedback aggregation") {
  CHECK(Summarize({}).responses == 0);
  CHECK_FALSE(Summarize({}).effectiveness.has_value());
  json empty = ToJson(Summarize({}));
  CHECK(empty["effectiveness"].is_null());
  CHECK(empty["hallucination_observed"].is_null());

  auto dir = testing::TempDir("feedback");
  ChatService service(TinyGenerator(), Options(dir));
  ChatSession a = service.CreateSession(), b = service.CreateSession();
  service.SubmitFeedback(Survey(a.id, 1, Hallucination::kMajor));
  service.SubmitFeedback(Survey(a.id, 5));  // latest wins
  service.SubmitFeedback(Survey(b.id, 2, Hallucination::kMinor));
  FeedbackSummary s = service.Summary();
  CHECK(s.responses == 2);
  CHECK(*s.effectiveness == doctest::Approx(50.0));
  CHECK(*s.recommend == doctest::Approx(50.0));
  CHECK(*s.hallucination_observed == doctest::Approx(50.0));

  // Recount straight from the store, latest record per session.
  std::map<std::string, json> latest;
  for (const json &r : StoreRecords(service.store_path()))
    if (r["type"] == "feedback") latest[r["session"]] = r;
  size_t high = 0, seen = 0;
  for (auto &[id, r] : latest) {
    high += r["satisfaction"].get<int>() >= 4;
    seen += r["hallucination_observed"] != "none";
  }
  CHECK(*s.satisfaction == doctest::Approx(100.0 * high / latest.size()));
  CHECK(*s.hallucination_observed == doctest::Approx(100.0 * seen / latest.size()));
}

TEST_CASE("store holds no identifying fields and survives restart") {
  auto dir = testing::TempDir("restart");
  std::string id;
  {
    ChatService service(TinyGenerator(), Options(dir));
    id = service.CreateSession().id;
    service.PostMessage(id, "i feel low today");
    service.SubmitFeedback(Survey(id, 4));
  }
  const std::set<std::string> banned = {"name", "email", "ip", "address", "user", "phone"};
  std::function<void(const json &)> audit = [&](const json &j) {
    if (!j.is_object()) return;
    for (auto &[k, v] : j.items()) {
      CHECK_MESSAGE(!banned.count(k), k);
      audit(v);
    }
  };
  auto records = StoreRecords(dir / "store.ndjson");
  CHECK(records.size() == 4);
  for (const json &r : records) audit(r);

  ChatService reopened(TinyGenerator(), Options(dir));
  ChatSession s = reopened.GetSession(id);
  REQUIRE(s.history.size() == 2);
  CHECK(s.history[0].text == "i feel low today");
  CHECK(reopened.Summary().responses == 1);

  {
    std::ofstream out(dir / "store.ndjson", std::ios::app);
    out << "{not json\n";
  }
  CHECK(ThrownCode([&] { ChatService(TinyGenerator(), Options(dir)); }) ==
        ErrorCode::kStoreFailure);

  auto blocker = testing::TempDir("blocked");
  { std::ofstream(blocker / "file") << "x"; }
  ChatService unwritable(TinyGenerator(), Options(blocker / "file" / "store"));
  CHECK(ThrownCode([&] { unwritable.CreateSession(); }) == ErrorCode::kStoreFailure);
}

TEST_CASE("idle sessions expire") {
  std::atomic<int64_t> now{1000};
  ServiceOptions o = Options("");
  o.idle_ttl_seconds = 60;
  o.clock = [&] { return now.load(); };
  ChatService service(TinyGenerator(), o);
  ChatSession s = service.CreateSession();
  ChatSession t = service.CreateSession();
  now = 1050;
  service.PostMessage(t.id, "hello");
  now = 1061;
  CHECK(ThrownCode([&] { service.GetSession(s.id); }) == ErrorCode::kSessionNotFound);
  CHECK(service.GetSession(t.id).history.size() == 2);
  now = 2000;
  CHECK(service.ExpireIdle() >= 1);
  CHECK(ThrownCode([&] { service.GetSession(t.id); }) == ErrorCode::kSessionNotFound);
}

class GatedProvider : public CommonsenseProvider {
 public:
  std::vector<std::string> Infer(std::string_view text, Relation r, int k) const override {
    if (fail) throw Error(ErrorCode::kProviderFailure, "down");
    if (!armed) return MockInfer(text, r, k);
    entered.store(true);
    release.wait();
    return MockInfer(text, r, k);
  }
  bool fail = false;
  bool armed = false;
  mutable std::atomic<bool> entered{false};
  std::shared_future<void> release;
};

TEST_CASE("bounded queue and generation failures") {
  auto provider = std::make_shared<GatedProvider>();
  std::promise<void> open;
  provider->release = open.get_future().share();
  ServiceOptions o = Options("");
  o.queue_capacity = 0;
  ChatService service(TinyGenerator(provider), o);
  ChatSession a = service.CreateSession(), b = service.CreateSession();
  provider->armed = true;
  auto pending = std::async(std::launch::async, [&] { return service.PostMessage(a.id, "first"); });
  while (!provider->entered.load()) std::this_thread::yield();
  CHECK(ThrownCode([&] { service.PostMessage(b.id, "second"); }) == ErrorCode::kServiceBusy);
  open.set_value();
  pending.get();
  CHECK(service.GetSession(b.id).history.empty());

  provider->fail = true;
  CHECK(ThrownCode([&] { service.PostMessage(b.id, "third"); }) == ErrorCode::kGenerationFailure);
  CHECK(service.GetSession(b.id).history.empty());
}

TEST_CASE("http routes") {
  ChatService service(TinyGenerator(), Options(testing::TempDir("http")));
  httplib::Server server;
  MountRoutes(server, service);
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread loop([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);

  auto created = client.Post("/sessions", "", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  CHECK(created->get_header_value("Access-Control-Allow-Origin") == "*");
  std::string id = json::parse(created->body)["id"];

  auto msg = client.Post("/sessions/" + id + "/messages", R"({"text":"i feel stuck"})",
                         "application/json");
  REQUIRE(msg);
  CHECK(msg->status == 200);
  json body = json::parse(msg->body);
  CHECK(body.contains("reply"));
  CHECK(body["client_sentiment"].is_string());

  auto status = [&](const std::string &path, const std::string &payload) {
    auto r = client.Post(path, payload, "application/json");
    return r ? std::make_pair(r->status, json::parse(r->body).value("code", "")) : std::make_pair(0, std::string());
  };
  CHECK(status("/sessions/" + id + "/messages", R"({"text":"   "})") ==
        std::make_pair(400, std::string("EMPTY_MESSAGE")));
  CHECK(status("/sessions/abc/messages", R"({"text":"hi"})") ==
        std::make_pair(404, std::string("SESSION_NOT_FOUND")));
  CHECK(status("/sessions/" + id + "/messages", R"({"text":"hi","name":"x"})").first == 400);
  CHECK(status("/sessions/" + id + "/messages", "not json").first == 400);
  CHECK(status("/sessions/" + id + "/feedback",
               R"({"effectiveness":9,"satisfaction":4,"continued_usage":4,"recommend":4,"hallucination_observed":"none"})") ==
        std::make_pair(400, std::string("INVALID_RATING")));
  auto fb = client.Post("/sessions/" + id + "/feedback",
                        R"({"ratings":{"effectiveness":5,"satisfaction":4,"continued_usage":2,"recommend":4},"hallucination_observed":"minor"})",
                        "application/json");
  REQUIRE(fb);
  CHECK(fb->status == 200);

  auto summary = client.Get("/feedback/summary");
  REQUIRE(summary);
  json s = json::parse(summary->body);
  CHECK(s["responses"] == 1);
  CHECK(s["continued_usage"] == 0.0);
  CHECK(s["hallucination_observed"] == 100.0);
  auto disclaimer = client.Get("/disclaimer");
  REQUIRE(disclaimer);
  CHECK(json::parse(disclaimer->body)["text"] == kDisclaimer);
  auto preflight = client.Options("/sessions");
  REQUIRE(preflight);
  CHECK(preflight->status / 100 == 2);

  CHECK(HttpStatusFor(ErrorCode::kServiceBusy) == 503);
  CHECK(HttpStatusFor(ErrorCode::kGenerationFailure) == 502);
  CHECK(HttpStatusFor(ErrorCode::kStoreFailure) == 500);

  server.stop();
  loop.join();
}

}  // namespace
}  // namespace sentigraph
