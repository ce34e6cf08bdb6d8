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

#include "support.h"

#include <unistd.h>

#include <atomic>
#include <cmath>

namespace sentigraph::testing {
namespace {

const char *const kFeelings[] = {
    "anxious", "tired", "lonely", "hopeful", "stressed", "calm", "angry",
    "sad", "excited", "nervous", "bored", "proud", "confused", "restless",
    "grateful", "worried", "numb", "scared", "relieved", "overwhelmed"};
const char *const kTopics[] = {
    "job", "sister", "exams", "landlord", "marriage", "sleep", "diet",
    "friends", "father", "debt", "moving", "garden", "team", "neighbor",
    "music", "car", "health", "school", "church", "dog"};
const char *const kSteps[] = {
    "journaling", "walking", "breathing", "stretching", "painting",
    "reading", "cooking", "swimming", "planning", "resting", "calling",
    "singing", "drawing", "cycling", "knitting", "gardening", "praying",
    "running", "baking", "meditating"};

}  // namespace

std::vector<Dialogue> OverfitDialogues(int count) {
  std::vector<Dialogue> out;
  for (int i = 0; i < count; ++i) {
    std::string feeling = kFeelings[i % 20];
    std::string topic = kTopics[i % 20];
    std::string step = kSteps[i % 20];
    Dialogue d;
    d.id = "synthetic-" + std::to_string(100 + i);
    d.utterances = {
        {0, SpeakerRole::kClient, "i feel " + feeling + " about my " + topic, {}},
        {1, SpeakerRole::kTherapist, "tell me more about your " + topic + ".", {}},
        {2, SpeakerRole::kClient, "the " + topic + " keeps me " + feeling, {}},
        {3, SpeakerRole::kTherapist, "maybe try " + step + " when you feel " + feeling + ".", {}},
    };
    out.push_back(std::move(d));
  }
  return out;
}

RunConfig TinyRunConfig() {
  RunConfig c;
  c.model.decoder.d_model = 32;
  c.model.decoder.layers = 2;
  c.model.decoder.heads = 4;
  c.model.decoder.max_positions = 64;
  c.model.graph_dim = 32;
  c.model.attention_heads = 4;
  c.train.learning_rate = 1e-3;
  c.train.batch_size = 8;
  c.train.epochs = 100;
  c.train.seed = 7;
  return c;
}

Dialogue RandomDialogue(SplitMix64 &rng, int t) {
  Dialogue d;
  d.id = "random-" + std::to_string(rng.Next() % 1000000);
  for (int i = 0; i < t; ++i) {
    SpeakerRole role =
        rng.Below(2) ? SpeakerRole::kClient : SpeakerRole::kTherapist;
    std::string text = RandomSentence(rng, 6, 30);
    if (text.empty()) text = "ok";
    std::optional<SentimentLabel> s;
    if (rng.Below(2)) s = SentimentLabel::kPositive;
    else s = SentimentLabel::kNegative;
    d.utterances.push_back({i, role, text, s});
  }
  return d;
}

std::string RandomSentence(SplitMix64 &rng, int max_words, int vocabulary) {
  int n = static_cast<int>(rng.Below(max_words + 1));
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += "w" + std::to_string(rng.Below(vocabulary));
  }
  return out;
}

double GradCheckError(const std::vector<nn::Tensor> &params,
                      const std::function<nn::Tensor()> &loss, double step) {
  std::vector<nn::Tensor> ps = params;
  for (auto &p : ps) p.ZeroGrad();
  loss().Backward();
  double diff = 0.0, norm_a = 0.0, norm_n = 0.0;
  for (auto &p : ps) {
    nn::Matrix analytic = p.grad();
    nn::Matrix &value = p.mutable_value();
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      double saved = value.data()[i];
      value.data()[i] = saved + step;
      double plus = loss().value()(0, 0);
      value.data()[i] = saved - step;
      double minus = loss().value()(0, 0);
      value.data()[i] = saved;
      double numeric = (plus - minus) / (2.0 * step);
      double a = analytic.data()[i];
      diff += (a - numeric) * (a - numeric);
      norm_a += a * a;
      norm_n += numeric * numeric;
    }
  }
  double denom = std::sqrt(norm_a) + std::sqrt(norm_n);
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

nn::Matrix RandomMatrix(SplitMix64 &rng, int rows, int cols, double scale) {
  nn::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.Normal();
  return m;
}

std::filesystem::path TempDir(const std::string &tag) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("sentigraph-" + tag + "-" + std::to_string(::getpid()) + "-" +
              std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace sentigraph::testing
