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

#ifndef SENTIGRAPH_SERVING_H_
#define SENTIGRAPH_SERVING_H_

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sentigraph/error.h"
#include "sentigraph/generator.h"

namespace httplib {
class Server;
}

namespace sentigraph {

// Sessions carry no user-identifying fields by construction.
struct ChatSession {
  std::string id;  // 128 random bits, hex
  std::vector<Utterance> history;
  int64_t created_at = 0;
  int64_t last_active = 0;
};

enum class Hallucination { kNone, kMinor, kMajor };
const char *HallucinationName(Hallucination h);
// Throws INVALID_RATING.
Hallucination ParseHallucination(std::string_view name);

struct SurveyResponse {
  std::string session_id;
  int effectiveness = 0;
  int satisfaction = 0;
  int continued_usage = 0;
  int recommend = 0;
  Hallucination hallucination_observed = Hallucination::kNone;
};

// Percentages of responses rating >= 4, and of responses reporting any
// hallucination. All null when there are no responses.
struct FeedbackSummary {
  size_t responses = 0;
  std::optional<double> effectiveness;
  std::optional<double> satisfaction;
  std::optional<double> continued_usage;
  std::optional<double> recommend;
  std::optional<double> hallucination_observed;
};
FeedbackSummary Summarize(const std::vector<SurveyResponse> &responses);
nlohmann::json ToJson(const FeedbackSummary &summary);

struct PostResult {
  std::string reply;
  SentimentLabel client_sentiment = SentimentLabel::kPositive;
};

struct ServiceOptions {
  // Directory holding the append-only "store.ndjson". Empty keeps
  // everything in memory.
  std::filesystem::path store_dir;
  int64_t idle_ttl_seconds = 24 * 60 * 60;
  // Concurrent generations, and how many more may wait for a slot.
  int workers = 1;
  int queue_capacity = 16;
  DecodeConfig decode;
  // Seconds since the epoch; injectable for tests.
  std::function<int64_t()> clock;
};

inline constexpr const char *kDisclaimer =
    "This assistant is a research prototype and not a substitute for a "
    "licensed mental health professional. It cannot respond to "
    "emergencies. If you are in crisis or thinking about harming yourself, "
    "contact your local emergency number or a crisis line now.";

class ChatService {
 public:
  // Replays an existing store. Throws STORE_FAILURE on a corrupt store.
  ChatService(std::shared_ptr<const ResponseGenerator> generator,
              ServiceOptions options);
  ~ChatService();

  // Throws STORE_FAILURE.
  ChatSession CreateSession();
  // Throws SESSION_NOT_FOUND (also for sessions idle past the TTL).
  ChatSession GetSession(const std::string &id);
  // Labels the client turn, generates from the windowed history and
  // appends both turns. Throws EMPTY_MESSAGE, SESSION_NOT_FOUND,
  // SERVICE_BUSY, GENERATION_FAILURE or STORE_FAILURE.
  PostResult PostMessage(const std::string &id, const std::string &text);
  // Latest submission per session wins. Throws SESSION_NOT_FOUND or
  // INVALID_RATING.
  void SubmitFeedback(const SurveyResponse &survey);
  FeedbackSummary Summary() const;
  std::vector<SurveyResponse> Responses() const;
  // Drops sessions idle past the TTL; returns how many.
  size_t ExpireIdle();

  std::filesystem::path store_path() const;

 private:
  struct SessionState {
    std::mutex mu;
    ChatSession session;
  };
  class WorkSlot;

  int64_t Now() const;
  std::shared_ptr<SessionState> Find(const std::string &id);
  void Append(const nlohmann::json &record);
  void Replay();

  std::shared_ptr<const ResponseGenerator> generator_;
  ServiceOptions options_;

  mutable std::mutex mu_;  // sessions_ and feedback_
  std::map<std::string, std::shared_ptr<SessionState>> sessions_;
  std::map<std::string, SurveyResponse> feedback_;

  std::mutex store_mu_;

  std::mutex work_mu_;
  std::condition_variable work_cv_;
  int running_ = 0;
  int waiting_ = 0;
};

// Throws INVALID_RATING or MALFORMED_INPUT (unknown keys).
SurveyResponse SurveyFromJson(const std::string &session_id,
                              const nlohmann::json &body);

// Registers the HTTP/JSON routes on `server`:
//   POST /sessions                  -> {"id"}
//   POST /sessions/{id}/messages    {"text"} -> {"reply", "client_sentiment"}
//   POST /sessions/{id}/feedback    ratings + hallucination_observed
//   GET  /feedback/summary
//   GET  /disclaimer
// Errors are {"code", "message"} with a 4xx or 5xx status.
void MountRoutes(httplib::Server &server, ChatService &service);

int HttpStatusFor(ErrorCode code);

}  // namespace sentigraph

#endif  // SENTIGRAPH_SERVING_H_
