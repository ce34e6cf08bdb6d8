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

#include <algorithm>
#include <fstream>

#include "doctest.h"
#include "sentigraph/config.h"
#include "sentigraph/trainer.h"
#include "support.h"

namespace sentigraph {
namespace {

using testing::ThrownCode;

RunConfig QuickConfig() {
  RunConfig c = testing::TinyRunConfig();
  c.model.decoder.d_model = 16;
  c.model.graph_dim = 8;
  c.train.epochs = 2;
  c.train.batch_size = 4;
  return c;
}

struct Setup {
  RunConfig config = QuickConfig();
  std::vector<Dialogue> dialogues = testing::OverfitDialogues(6);
  Providers providers = Providers::Mock(config.model.graph_dim);
  Vocabulary vocab;
  std::vector<PreparedExample> examples;
  Setup() {
    auto labeled = PseudoLabelCorpus(dialogues, *providers.commonsense, *providers.classifier);
    vocab = BuildVocabulary(labeled);
    examples = PrepareTrainingSet(labeled, vocab, config.model, providers);
  }
};

Trainer MakeTrainer(ResponseModel &model, const Setup &s, const TrainConfig &tc) {
  ResponseModel *m = &model;
  AblationFlags flags{tc.use_sc, tc.use_sgcr};
  return Trainer(m->Parameters(), [m, flags](const PreparedExample &ex) { return m->Loss(ex, flags); },
                 s.examples, tc, [m] { m->ClampGates(); });
}

TEST_CASE("config parsing") {
  RunConfig c = ParseRunConfig(R"(
    # comment
    learning_rate = 1e-3
    batch_size = 4
    epochs = 3
    seed = 18446744073709551615
    use_sc = false
    use_sgcr = true
    d_model = 32
    block_placement = top_layer
    knowledge.allow_empty = false
    loss.aux_sentiment_weight = 0.5
    provider = comet
    provider_endpoint = http://localhost:9000
    ablate.data = corpus/   # trailing comment
  )");
  CHECK(c.train.learning_rate == 1e-3);
  CHECK(c.train.batch_size == 4);
  CHECK(c.train.epochs == 3);
  CHECK(c.train.seed == 18446744073709551615ULL);
  CHECK_FALSE(c.train.use_sc);
  CHECK(c.train.use_sgcr);
  CHECK(c.model.decoder.d_model == 32);
  CHECK(c.model.placement == BlockPlacement::kTopLayer);
  CHECK_FALSE(c.model.allow_empty_knowledge);
  CHECK(c.model.aux_sentiment_weight == 0.5);
  CHECK(c.model.provider == "comet");
  CHECK(c.extra.at("ablate.data") == "corpus/");

  RunConfig defaults = ParseRunConfig("");
  CHECK(defaults.train.learning_rate == 2e-6);
  CHECK(defaults.train.batch_size == 8);
  CHECK(defaults.train.epochs == 20);
  CHECK(defaults.model.top_k == 5);
  CHECK(defaults.model.window == 8);

  CHECK(ThrownCode([] { ParseRunConfig("batch_size = many"); }) == ErrorCode::kBadConfig);
  CHECK(ThrownCode([] { ParseRunConfig("no equals sign"); }) == ErrorCode::kBadConfig);
  CHECK(ThrownCode([] { ParseRunConfig("batch_size = 0"); }) == ErrorCode::kBadConfig);
  CHECK(ThrownCode([] { ParseRunConfig("d_model = 30\nheads = 4"); }) == ErrorCode::kBadConfig);

  CHECK(ModelConfigFromJson(ToJson(c.model)).decoder.d_model == 32);
  CHECK(TrainConfigFromJson(ToJson(c.train)).seed == c.train.seed);
}

TEST_CASE("every epoch visits each example once") {
  Setup s;
  ResponseModel model(s.config.model, s.vocab, 1);
  Trainer t = MakeTrainer(model, s, s.config.train);
  for (int64_t epoch = 0; epoch < 3; ++epoch) {
    std::vector<size_t> seen;
    for (int64_t b = 0; b < t.steps_per_epoch(); ++b) {
      auto idx = t.BatchIndices(epoch * t.steps_per_epoch() + b);
      seen.insert(seen.end(), idx.begin(), idx.end());
    }
    std::sort(seen.begin(), seen.end());
    CHECK(seen.size() == s.examples.size());
    for (size_t i = 0; i < seen.size(); ++i) CHECK(seen[i] == i);
  }
}

TEST_CASE("zero learning rate leaves every parameter unchanged") {
  Setup s;
  ResponseModel model(s.config.model, s.vocab, 2);
  std::vector<nn::Matrix> before;
  for (auto &[name, p] : model.Parameters()) before.push_back(p.value());
  TrainConfig tc = s.config.train;
  tc.learning_rate = 0.0;
  Trainer t = MakeTrainer(model, s, tc);
  t.Run();
  CHECK(t.step() == t.total_steps());
  size_t i = 0;
  for (auto &[name, p] : model.Parameters()) {
    CHECK_MESSAGE((p.value().array() == before[i].array()).all(), name);
    ++i;
  }
}

TEST_CASE("empty data and non-finite loss") {
  Setup s;
  CHECK(ThrownCode([&] { TrainModel(std::vector<Dialogue>{}, s.config, s.providers); }) ==
        ErrorCode::kEmptyDataset);
  ResponseModel model(s.config.model, s.vocab, 3);
  for (auto &[name, p] : model.Parameters())
    if (name == "backbone.head") p.mutable_value()(0, 0) = std::nan("");
  Trainer t = MakeTrainer(model, s, s.config.train);
  CHECK(ThrownCode([&] { t.Step(); }) == ErrorCode::kNonFiniteLoss);
}

TEST_CASE("checkpoint round trip restores identical behavior") {
  Setup s;
  auto dir = testing::TempDir("ckpt");
  RunConfig c = s.config;
  c.train.max_steps = 3;
  TrainedModel trained = TrainModel(s.dialogues, c, s.providers);
  SaveCheckpoint(dir / "m.ckpt", *trained.model, c.train, &trained.optimizer, trained.loss_trace);
  Checkpoint back = LoadCheckpoint(dir / "m.ckpt");
  CHECK(back.loss_trace == trained.loss_trace);
  CHECK(back.train_config.max_steps == 3);
  REQUIRE(back.optimizer.has_value());
  CHECK(back.optimizer->step == 3);
  auto a = trained.model->Parameters();
  auto b = back.model->Parameters();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    CHECK((a[i].second.value().array() == b[i].second.value().array()).all());
  }
  for (const auto &ex : trained.examples) {
    auto la = trained.model->Forward(ex, {true, true}).logits.value();
    auto lb = back.model->Forward(ex, {true, true}).logits.value();
    CHECK((la.array() == lb.array()).all());
  }

  // Corruption is reported, not crashed on.
  {
    std::ofstream bad(dir / "bad.ckpt", std::ios::binary);
    bad << "NOPE";
  }
  CHECK(ThrownCode([&] { LoadCheckpoint(dir / "bad.ckpt"); }) == ErrorCode::kBadCheckpoint);
  std::filesystem::copy_file(dir / "m.ckpt", dir / "cut.ckpt");
  std::filesystem::resize_file(dir / "cut.ckpt", std::filesystem::file_size(dir / "m.ckpt") - 100);
  CHECK(ThrownCode([&] { LoadCheckpoint(dir / "cut.ckpt"); }) == ErrorCode::kBadCheckpoint);
  CHECK(ThrownCode([&] { LoadCheckpoint(dir / "missing.ckpt"); }) == ErrorCode::kBadCheckpoint);
}

TEST_CASE("resuming from a checkpoint continues the same trajectory") {
  Setup s;
  auto dir = testing::TempDir("resume");
  TrainConfig tc = s.config.train;
  tc.epochs = 3;

  ResponseModel straight(s.config.model, s.vocab, tc.seed);
  Trainer full = MakeTrainer(straight, s, tc);
  full.Run();
  const int64_t cut = full.steps_per_epoch() + 1;  // mid-epoch

  ResponseModel first(s.config.model, s.vocab, tc.seed);
  Trainer part = MakeTrainer(first, s, tc);
  for (int64_t i = 0; i < cut; ++i) part.Step();
  SaveCheckpoint(dir / "mid.ckpt", first, tc, &part.optimizer_state(), part.loss_trace());

  Checkpoint ckpt = LoadCheckpoint(dir / "mid.ckpt");
  Trainer resumed = MakeTrainer(*ckpt.model, s, ckpt.train_config);
  resumed.RestoreState(*ckpt.optimizer, ckpt.loss_trace);
  while (!resumed.finished()) resumed.Step();
  REQUIRE(resumed.loss_trace().size() == full.loss_trace().size());
  CHECK(std::abs(resumed.loss_trace()[cut] - full.loss_trace()[cut]) < 1e-6);
  for (size_t i = 0; i < full.loss_trace().size(); ++i)
    CHECK(std::abs(resumed.loss_trace()[i] - full.loss_trace()[i]) < 1e-6);
}

TEST_CASE("graphs off trains exactly like the plain backbone") {
  Setup s;
  RunConfig c = s.config;
  c.train.use_sc = c.train.use_sgcr = false;
  c.train.max_steps = 4;
  TrainedModel graphs_off = TrainModel(s.dialogues, c, s.providers);
  TrainedBackbone vanilla = TrainVanilla(s.dialogues, c, s.providers);
  CHECK(graphs_off.loss_trace == vanilla.loss_trace);
  auto a = graphs_off.model->backbone().NamedParameters();
  auto b = vanilla.backbone->NamedParameters();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i)
    CHECK((a[i].second.value().array() == b[i].second.value().array()).all());
}

TEST_CASE("overfit fixture") {
  auto dialogues = testing::OverfitDialogues();
  RunConfig config = testing::TinyRunConfig();
  Providers providers = Providers::Mock(config.model.graph_dim);
  TrainedModel m = TrainModel(dialogues, config, providers);
  REQUIRE(m.loss_trace.size() <= 500);
  CHECK(m.loss_trace.back() < 0.1 * m.loss_trace.front());
  // Best-so-far loss improves within every window of 100 steps.
  double best = m.loss_trace.front();
  for (size_t start = 0; start + 100 <= m.loss_trace.size(); start += 100) {
    double window_best = *std::min_element(m.loss_trace.begin() + start + 1,
                                           m.loss_trace.begin() + start + 101);
    CHECK(window_best < best);
    best = std::min(best, window_best);
  }
  ResponseGenerator gen(m.model, providers, {true, true});
  int exact = 0, total = 0;
  for (const auto &d : dialogues)
    for (const auto &ex : BuildExamples(d)) {
      ++total;
      exact += gen.Generate(ex.context).text == ex.target.text;
    }
  CHECK(exact * 10 >= total * 9);
}

}  // namespace
}  // namespace sentigraph
