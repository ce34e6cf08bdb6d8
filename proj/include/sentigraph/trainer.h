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

#ifndef SENTIGRAPH_TRAINER_H_
#define SENTIGRAPH_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "sentigraph/config.h"
#include "sentigraph/generator.h"

namespace sentigraph {

struct AdamState {
  std::vector<nn::Matrix> first_moment;
  std::vector<nn::Matrix> second_moment;
  int64_t step = 0;
};

using ExampleLoss = std::function<nn::Tensor(const PreparedExample &)>;

// Mini-batch Adam over a fixed list of examples. Step s covers batch
// (s mod steps_per_epoch) of epoch s / steps_per_epoch; the epoch's order is
// a seeded shuffle of (seed, epoch), so resuming only needs the step count
// and the moments.
class Trainer {
 public:
  Trainer(NamedParameters parameters, ExampleLoss loss,
          std::span<const PreparedExample> data, const TrainConfig &config,
          std::function<void()> after_step = {});

  int64_t steps_per_epoch() const { return steps_per_epoch_; }
  int64_t total_steps() const { return total_steps_; }
  int64_t step() const { return state_.step; }
  bool finished() const { return state_.step >= total_steps_; }

  // Runs one optimizer step and returns the batch's mean loss. Throws
  // NON_FINITE_LOSS naming the offending example.
  double Step();

  // Steps until finished; `progress` sees (step, loss) after each one.
  std::vector<double> Run(
      const std::function<void(int64_t, double)> &progress = {});

  const std::vector<double> &loss_trace() const { return loss_trace_; }
  const AdamState &optimizer_state() const { return state_; }
  void RestoreState(AdamState state, std::vector<double> loss_trace);

  // Indices of the examples in batch `step`.
  std::vector<size_t> BatchIndices(int64_t step) const;

 private:
  NamedParameters parameters_;
  ExampleLoss loss_;
  std::span<const PreparedExample> data_;
  TrainConfig config_;
  std::function<void()> after_step_;
  int64_t steps_per_epoch_ = 0;
  int64_t total_steps_ = 0;
  AdamState state_;
  std::vector<double> loss_trace_;
};

// Everything a training run produces.
struct TrainedModel {
  std::shared_ptr<ResponseModel> model;
  std::vector<PreparedExample> examples;
  std::vector<double> loss_trace;
  AdamState optimizer;
};

// Labels the dialogues, extracts examples (window from the config), builds
// the vocabulary, prepares graphs ahead of training and trains every
// parameter jointly with the flags from config.train. Throws EMPTY_DATASET.
TrainedModel TrainModel(std::span<const Dialogue> dialogues,
                        const RunConfig &config, const Providers &providers);

// The pieces TrainModel uses, for callers that need to interleave.
std::vector<PreparedExample> PrepareTrainingSet(
    std::span<const Dialogue> dialogues, const Vocabulary &vocabulary,
    const ModelConfig &config, const Providers &providers);
Vocabulary BuildVocabulary(std::span<const Dialogue> dialogues);

struct TrainedBackbone {
  std::shared_ptr<TinyDecoder> backbone;
  std::vector<double> loss_trace;
};

// The same data, order, initialization and optimizer applied to the plain
// backbone alone.
TrainedBackbone TrainVanilla(std::span<const Dialogue> dialogues,
                             const RunConfig &config,
                             const Providers &providers);

struct Checkpoint {
  ModelConfig model_config;
  TrainConfig train_config;
  std::shared_ptr<ResponseModel> model;
  std::optional<AdamState> optimizer;
  std::vector<double> loss_trace;
};

// Binary layout: "SGCK", u32 version, u64 header length, JSON header
// (configs, vocabulary, parameter manifest, optimizer step, loss trace),
// then little-endian float64 blobs: parameters, then Adam moments.
void SaveCheckpoint(const std::filesystem::path &path, const ResponseModel &model,
                    const TrainConfig &train_config,
                    const AdamState *optimizer = nullptr,
                    std::span<const double> loss_trace = {});

// Throws BAD_CHECKPOINT.
Checkpoint LoadCheckpoint(const std::filesystem::path &path);

}  // namespace sentigraph

#endif  // SENTIGRAPH_TRAINER_H_
