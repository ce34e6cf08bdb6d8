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

#include "sentigraph/serving.h"

#include <chrono>
#include <fstream>
#include <random>
#include <set>

#include "httplib.h"
#include "sentigraph/error.h"
#include "sentigraph/hash.h"
#include "sentigraph/sentiment.h"

namespace sentigraph {

using nlohmann::json;

const char *HallucinationName(Hallucination h) {
  switch (h) {
    case Hallucination::kNone: return "none";
    case Hallucination::kMinor: return "minor";
    case Hallucination::kMajor: return "major";
  }
  return "none";
}

Hallucination ParseHallucination(std::string_view name) {
  if (name == "none") return Hallucination::kNone;
  if (name == "minor") return Hallucination::kMinor;
  if (name == "major") return Hallucination::kMajor;
  throw Error(ErrorCode::kInvalidRating,
              "hallucination_observed must be none, minor or major");
}

FeedbackSummary Summarize(const std::vector<SurveyResponse> &responses) {
  FeedbackSummary s;
  s.responses = responses.size();
  if (responses.empty()) return s;
  double n = static_cast<double>(responses.size());
  auto pct = [&](int SurveyResponse::*field) {
    size_t hits = 0;
    for (const auto &r : responses) hits += (r.*field >= 4);
    return 100.0 * hits / n;
  };
  s.effectiveness = pct(&SurveyResponse::effectiveness);
  s.satisfaction = pct(&SurveyResponse::satisfaction);
  s.continued_usage = pct(&SurveyResponse::continued_usage);
  s.recommend = pct(&SurveyResponse::recommend);
  size_t seen = 0;
  for (const auto &r : responses) {
    seen += r.hallucination_observed != Hallucination::kNone;
  }
  s.hallucination_observed = 100.0 * seen / n;
  return s;
}

json ToJson(const FeedbackSummary &s) {
  auto opt = [](const std::optional<double> &v) {
    return v ? json(*v) : json(nullptr);
  };
  return {{"responses", s.responses},
          {"effectiveness", opt(s.effectiveness)},
          {"satisfaction", opt(s.satisfaction)},
          {"continued_usage", opt(s.continued_usage)},
          {"recommend", opt(s.recommend)},
          {"hallucination_observed", opt(s.hallucination_observed)}};
}

namespace {

const char *const kRatingKeys[] = {"effectiveness", "satisfaction",
                                   "continued_usage", "recommend"};

std::string NewSessionId() {
  std::random_device rd;
  uint64_t hi = (static_cast<uint64_t>(rd()) << 32) | rd();
  uint64_t lo = (static_cast<uint64_t>(rd()) << 32) | rd();
  return HexString(hi) + HexString(lo);
}

void CheckRating(const char *name, int value) {
  if (value < 1 || value > 5) {
    throw Error(ErrorCode::kInvalidRating,
                std::string(name) + " must be in 1..5, got " +
                    std::to_string(value));
  }
}

void CheckSurvey(const SurveyResponse &s) {
  CheckRating("effectiveness", s.effectiveness);
  CheckRating("satisfaction", s.satisfaction);
  CheckRating("continued_usage", s.continued_usage);
  CheckRating("recommend", s.recommend);
}

json SurveyRecord(const SurveyResponse &s, int64_t at) {
  return {{"type", "feedback"},
          {"session", s.session_id},
          {"effectiveness", s.effectiveness},
          {"satisfaction", s.satisfaction},
          {"continued_usage", s.continued_usage},
          {"recommend", s.recommend},
          {"hallucination_observed", HallucinationName(s.hallucination_observed)},
          {"at", at}};
}

json TurnRecord(const std::string &session, const Utterance &u, int64_t at) {
  json r = {{"type", "turn"},
            {"session", session},
            {"index", u.index},
            {"speaker", RoleCode(u.speaker)},
            {"text", u.text},
            {"at", at}};
  if (u.sentiment) r["sentiment"] = SentimentName(*u.sentiment);
  return r;
}

}  // namespace

SurveyResponse SurveyFromJson(const std::string &session_id, const json &body) {
  if (!body.is_object()) {
    throw Error(ErrorCode::kMalformedInput, "feedback body must be an object");
  }
  // Ratings may be flat or grouped under "ratings".
  const json *ratings = &body;
  for (auto it = body.begin(); it != body.end(); ++it) {
    const std::string &key = it.key();
    bool known = key == "hallucination_observed" || key == "ratings";
    for (const char *k : kRatingKeys) known |= key == k;
    if (!known) {
      throw Error(ErrorCode::kMalformedInput, "unexpected field '" + key + "'");
    }
  }
  if (body.contains("ratings")) {
    ratings = &body["ratings"];
    if (!ratings->is_object()) {
      throw Error(ErrorCode::kMalformedInput, "ratings must be an object");
    }
    for (auto it = ratings->begin(); it != ratings->end(); ++it) {
      bool known = false;
      for (const char *k : kRatingKeys) known |= it.key() == k;
      if (!known) {
        throw Error(ErrorCode::kMalformedInput,
                    "unexpected rating '" + it.key() + "'");
      }
    }
  }
  auto rating = [&](const char *key) {
    if (!ratings->contains(key)) {
      throw Error(ErrorCode::kInvalidRating, std::string("missing ") + key);
    }
    const json &v = (*ratings)[key];
    if (!v.is_number_integer()) {
      throw Error(ErrorCode::kInvalidRating,
                  std::string(key) + " must be an integer");
    }
    int64_t x = v.get<int64_t>();
    if (x < 1 || x > 5) {
      throw Error(ErrorCode::kInvalidRating,
                  std::string(key) + " must be in 1..5, got " +
                      std::to_string(x));
    }
    return static_cast<int>(x);
  };
  SurveyResponse s;
  s.session_id = session_id;
  s.effectiveness = rating("effectiveness");
  s.satisfaction = rating("satisfaction");
  s.continued_usage = rating("continued_usage");
  s.recommend = rating("recommend");
  auto h = body.find("hallucination_observed");
  if (h == body.end() || !h->is_string()) {
    throw Error(ErrorCode::kInvalidRating,
                "hallucination_observed must be none, minor or major");
  }
  s.hallucination_observed = ParseHallucination(h->get<std::string>());
  return s;
}

// Admission to the model: `workers` run at once, at most `queue_capacity`
// wait, anything beyond is turned away.
class ChatService::WorkSlot {
 public:
  explicit WorkSlot(ChatService &service) : s_(service) {
    std::unique_lock<std::mutex> lock(s_.work_mu_);
    if (s_.running_ >= s_.options_.workers) {
      if (s_.waiting_ >= s_.options_.queue_capacity) {
        throw Error(ErrorCode::kServiceBusy, "generation queue is full");
      }
      ++s_.waiting_;
      s_.work_cv_.wait(lock,
                       [&] { return s_.running_ < s_.options_.workers; });
      --s_.waiting_;
    }
    ++s_.running_;
  }
  ~WorkSlot() {
    {
      std::lock_guard<std::mutex> lock(s_.work_mu_);
      --s_.running_;
    }
    s_.work_cv_.notify_one();
  }

 private:
  ChatService &s_;
};

ChatService::ChatService(std::shared_ptr<const ResponseGenerator> generator,
                         ServiceOptions options)
    : generator_(std::move(generator)), options_(std::move(options)) {
  if (options_.workers < 1) options_.workers = 1;
  if (options_.queue_capacity < 0) options_.queue_capacity = 0;
  if (!options_.store_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(options_.store_dir, ec);
    // A missing directory surfaces as STORE_FAILURE on the first write.
    if (std::filesystem::exists(store_path(), ec)) Replay();
  }
}

ChatService::~ChatService() = default;

std::filesystem::path ChatService::store_path() const {
  if (options_.store_dir.empty()) return {};
  return options_.store_dir / "store.ndjson";
}

int64_t ChatService::Now() const {
  if (options_.clock) return options_.clock();
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void ChatService::Append(const json &record) {
  if (options_.store_dir.empty()) return;
  std::string lines;
  if (record.is_array()) {
    for (const auto &r : record) lines += r.dump() + "\n";
  } else {
    lines = record.dump() + "\n";
  }
  std::lock_guard<std::mutex> lock(store_mu_);
  std::ofstream out(store_path(), std::ios::app | std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::kStoreFailure,
                "cannot open " + store_path().string());
  }
  out << lines;
  out.flush();
  if (!out) {
    throw Error(ErrorCode::kStoreFailure,
                "write failed on " + store_path().string());
  }
}

void ChatService::Replay() {
  std::ifstream in(store_path(), std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kStoreFailure,
                "cannot read " + store_path().string());
  }
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json r = json::parse(line);
      const std::string type = r.at("type");
      if (type == "session") {
        auto state = std::make_shared<SessionState>();
        state->session.id = r.at("id");
        state->session.created_at = r.at("at");
        state->session.last_active = state->session.created_at;
        sessions_[state->session.id] = state;
      } else if (type == "turn") {
        auto it = sessions_.find(r.at("session").get<std::string>());
        if (it == sessions_.end()) continue;
        Utterance u;
        u.index = r.at("index");
        u.speaker = ParseRole(r.at("speaker").get<std::string>());
        u.text = r.at("text");
        if (r.contains("sentiment")) {
          u.sentiment = ParseSentiment(r["sentiment"].get<std::string>());
        }
        it->second->session.history.push_back(std::move(u));
        it->second->session.last_active = r.at("at");
      } else if (type == "feedback") {
        SurveyResponse s;
        s.session_id = r.at("session");
        s.effectiveness = r.at("effectiveness");
        s.satisfaction = r.at("satisfaction");
        s.continued_usage = r.at("continued_usage");
        s.recommend = r.at("recommend");
        s.hallucination_observed =
            ParseHallucination(r.at("hallucination_observed").get<std::string>());
        feedback_[s.session_id] = s;
      }
    } catch (const std::exception &e) {
      throw Error(ErrorCode::kStoreFailure,
                  store_path().string() + ":" + std::to_string(lineno) + ": " +
                      e.what());
    }
  }
}

ChatSession ChatService::CreateSession() {
  auto state = std::make_shared<SessionState>();
  state->session.id = NewSessionId();
  state->session.created_at = state->session.last_active = Now();
  Append({{"type", "session"},
          {"id", state->session.id},
          {"at", state->session.created_at}});
  std::lock_guard<std::mutex> lock(mu_);
  sessions_[state->session.id] = state;
  return state->session;
}

std::shared_ptr<ChatService::SessionState> ChatService::Find(
    const std::string &id) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) {
    throw Error(ErrorCode::kSessionNotFound, "no session '" + id + "'");
  }
  return it->second;
}

namespace {

bool Expired(const ChatSession &s, int64_t now, int64_t ttl) {
  return ttl > 0 && now - s.last_active > ttl;
}

}  // namespace

ChatSession ChatService::GetSession(const std::string &id) {
  auto state = Find(id);
  std::lock_guard<std::mutex> lock(state->mu);
  if (Expired(state->session, Now(), options_.idle_ttl_seconds)) {
    throw Error(ErrorCode::kSessionNotFound, "session '" + id + "' expired");
  }
  return state->session;
}

PostResult ChatService::PostMessage(const std::string &id,
                                    const std::string &text) {
  std::string message(TrimWhitespace(text));
  if (message.empty()) {
    throw Error(ErrorCode::kEmptyMessage, "message text is empty");
  }
  auto state = Find(id);
  // Messages within one session are handled strictly in order.
  std::lock_guard<std::mutex> session_lock(state->mu);
  ChatSession &session = state->session;
  if (Expired(session, Now(), options_.idle_ttl_seconds)) {
    throw Error(ErrorCode::kSessionNotFound, "session '" + id + "' expired");
  }

  Utterance client{static_cast<int>(session.history.size()),
                   SpeakerRole::kClient, message, std::nullopt};
  Utterance therapist{client.index + 1, SpeakerRole::kTherapist, "",
                      std::nullopt};
  {
    WorkSlot slot(*this);
    const Providers &p = generator_->providers();
    try {
      client.sentiment = LabelText(message, *p.commonsense, *p.classifier);
      int window = generator_->model().config().window;
      std::vector<Utterance> context;
      size_t n = session.history.size();
      size_t keep = window > 1 ? static_cast<size_t>(window - 1) : 0;
      size_t begin = n > keep ? n - keep : 0;
      context.assign(session.history.begin() + begin, session.history.end());
      context.push_back(client);
      GenerationResult result = generator_->Generate(context, options_.decode);
      therapist.text = result.text;
      if (!TrimWhitespace(therapist.text).empty()) {
        therapist.sentiment =
            LabelText(therapist.text, *p.commonsense, *p.classifier);
      }
    } catch (const std::exception &e) {
      throw Error(ErrorCode::kGenerationFailure, e.what());
    }
  }

  int64_t now = Now();
  Append(json::array({TurnRecord(id, client, now),
                      TurnRecord(id, therapist, now)}));
  session.history.push_back(client);
  session.history.push_back(therapist);
  session.last_active = now;
  return {therapist.text, *client.sentiment};
}

void ChatService::SubmitFeedback(const SurveyResponse &survey) {
  CheckSurvey(survey);
  auto state = Find(survey.session_id);
  std::lock_guard<std::mutex> session_lock(state->mu);
  int64_t now = Now();
  if (Expired(state->session, now, options_.idle_ttl_seconds)) {
    throw Error(ErrorCode::kSessionNotFound,
                "session '" + survey.session_id + "' expired");
  }
  Append(SurveyRecord(survey, now));
  std::lock_guard<std::mutex> lock(mu_);
  feedback_[survey.session_id] = survey;
}

std::vector<SurveyResponse> ChatService::Responses() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<SurveyResponse> out;
  for (const auto &[id, s] : feedback_) out.push_back(s);
  return out;
}

FeedbackSummary ChatService::Summary() const { return Summarize(Responses()); }

size_t ChatService::ExpireIdle() {
  int64_t now = Now();
  std::lock_guard<std::mutex> lock(mu_);
  size_t removed = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    bool expired;
    {
      std::lock_guard<std::mutex> session_lock(it->second->mu);
      expired = Expired(it->second->session, now, options_.idle_ttl_seconds);
    }
    if (expired) {
      it = sessions_.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  return removed;
}

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSessionNotFound: return 404;
    case ErrorCode::kEmptyMessage:
    case ErrorCode::kInvalidRating:
    case ErrorCode::kMalformedInput: return 400;
    case ErrorCode::kServiceBusy: return 503;
    case ErrorCode::kGenerationFailure: return 502;
    default: return 500;
  }
}

namespace {

void SendJson(httplib::Response &res, int status, const json &body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void SendError(httplib::Response &res, const Error &e) {
  SendJson(res, HttpStatusFor(e.code()),
           {{"code", std::string(ErrorCodeName(e.code()))},
            {"message", e.detail()}});
}

json ParseBody(const httplib::Request &req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kMalformedInput, e.what());
  }
}

template <typename F>
httplib::Server::Handler Guarded(F f) {
  return [f](const httplib::Request &req, httplib::Response &res) {
    try {
      f(req, res);
    } catch (const Error &e) {
      SendError(res, e);
    } catch (const std::exception &e) {
      SendJson(res, 500, {{"code", "INTERNAL"}, {"message", e.what()}});
    }
  };
}

}  // namespace

void MountRoutes(httplib::Server &server, ChatService &service) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods",
                               "GET, POST, OPTIONS"}});
  server.Options(".*", [](const httplib::Request &, httplib::Response &res) {
    res.status = 204;
  });

  server.Post("/sessions", Guarded([&service](const httplib::Request &req,
                                              httplib::Response &res) {
    json body = ParseBody(req);
    if (!body.is_object() || !body.empty()) {
      throw Error(ErrorCode::kMalformedInput, "session creation takes no fields");
    }
    ChatSession s = service.CreateSession();
    SendJson(res, 201, {{"id", s.id}});
  }));

  server.Post(R"(/sessions/([0-9a-f]+)/messages)",
              Guarded([&service](const httplib::Request &req,
                                 httplib::Response &res) {
                json body = ParseBody(req);
                if (!body.is_object()) {
                  throw Error(ErrorCode::kMalformedInput,
                              "body must be an object");
                }
                for (auto it = body.begin(); it != body.end(); ++it) {
                  if (it.key() != "text") {
                    throw Error(ErrorCode::kMalformedInput,
                                "unexpected field '" + it.key() + "'");
                  }
                }
                auto text = body.find("text");
                if (text == body.end() || !text->is_string()) {
                  throw Error(ErrorCode::kEmptyMessage, "text is required");
                }
                PostResult r =
                    service.PostMessage(req.matches[1], text->get<std::string>());
                SendJson(res, 200,
                         {{"reply", r.reply},
                          {"client_sentiment", SentimentName(r.client_sentiment)}});
              }));

  server.Post(R"(/sessions/([0-9a-f]+)/feedback)",
              Guarded([&service](const httplib::Request &req,
                                 httplib::Response &res) {
                SurveyResponse s = SurveyFromJson(req.matches[1], ParseBody(req));
                service.SubmitFeedback(s);
                SendJson(res, 200, {{"status", "ok"}});
              }));

  server.Get("/feedback/summary",
             Guarded([&service](const httplib::Request &,
                                httplib::Response &res) {
               SendJson(res, 200, ToJson(service.Summary()));
             }));

  server.Get("/disclaimer", [](const httplib::Request &,
                               httplib::Response &res) {
    SendJson(res, 200, {{"text", kDisclaimer}});
  });
}

}  // namespace sentigraph
