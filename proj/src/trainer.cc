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

#include "sentigraph/trainer.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "sentigraph/error.h"
#include "sentigraph/hash.h"

namespace sentigraph {
namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEpsilon = 1e-8;
constexpr char kMagic[4] = {'S', 'G', 'C', 'K'};
constexpr uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written in native little-endian order");

void WriteBlob(std::ofstream &out, const nn::Matrix &m) {
  out.write(reinterpret_cast<const char *>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void ReadBlob(std::ifstream &in, nn::Matrix &m) {
  in.read(reinterpret_cast<char *>(m.data()),
          static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in) throw Error(ErrorCode::kBadCheckpoint, "truncated parameter data");
}

}  // namespace

Trainer::Trainer(NamedParameters parameters, ExampleLoss loss,
                 std::span<const PreparedExample> data, const TrainConfig &config,
                 std::function<void()> after_step)
    : parameters_(std::move(parameters)),
      loss_(std::move(loss)),
      data_(data),
      config_(config),
      after_step_(std::move(after_step)) {
  ValidateTrainConfig(config_);
  if (data_.empty()) throw Error(ErrorCode::kEmptyDataset, "no training examples");
  const auto n = static_cast<int64_t>(data_.size());
  steps_per_epoch_ = (n + config_.batch_size - 1) / config_.batch_size;
  total_steps_ = steps_per_epoch_ * config_.epochs;
  if (config_.max_steps > 0) total_steps_ = std::min<int64_t>(total_steps_, config_.max_steps);
  for (const auto &[name, p] : parameters_) {
    state_.first_moment.push_back(nn::Matrix::Zero(p.rows(), p.cols()));
    state_.second_moment.push_back(nn::Matrix::Zero(p.rows(), p.cols()));
  }
}

std::vector<size_t> Trainer::BatchIndices(int64_t step) const {
  const int64_t epoch = step / steps_per_epoch_;
  const int64_t batch = step % steps_per_epoch_;
  std::vector<size_t> order(data_.size());
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(config_.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(epoch + 1)));
  for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.Below(i)]);
  const size_t begin = static_cast<size_t>(batch) * config_.batch_size;
  const size_t end = std::min(order.size(), begin + config_.batch_size);
  return {order.begin() + begin, order.begin() + end};
}

double Trainer::Step() {
  if (finished()) throw Error(ErrorCode::kBadConfig, "training already finished");
  for (auto &[name, p] : parameters_) p.ZeroGrad();

  const auto batch = BatchIndices(state_.step);
  const double weight = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (size_t idx : batch) {
    const nn::Tensor loss = loss_(data_[idx]);
    const double value = loss.value()(0, 0);
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::kNonFiniteLoss,
                  "step " + std::to_string(state_.step) + ", example " +
                      std::to_string(idx) + " of dialogue '" +
                      data_[idx].dialogue_id + "': loss " + std::to_string(value));
    }
    total += value;
    nn::Scale(loss, weight).Backward();
  }

  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double correction1 = 1.0 - std::pow(kBeta1, t);
  const double correction2 = 1.0 - std::pow(kBeta2, t);
  const double lr = config_.learning_rate;
  for (size_t i = 0; i < parameters_.size(); ++i) {
    nn::Tensor &p = parameters_[i].second;
    const nn::Matrix g = p.grad();
    nn::Matrix &m = state_.first_moment[i];
    nn::Matrix &v = state_.second_moment[i];
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseProduct(g);
    const nn::Matrix update =
        (m / correction1).array() / ((v / correction2).array().sqrt() + kEpsilon);
    p.mutable_value() -= lr * update;
  }
  if (after_step_) after_step_();
  const double mean = total * weight;
  loss_trace_.push_back(mean);
  return mean;
}

std::vector<double> Trainer::Run(
    const std::function<void(int64_t, double)> &progress) {
  while (!finished()) {
    const double loss = Step();
    if (progress) progress(state_.step, loss);
  }
  return loss_trace_;
}

void Trainer::RestoreState(AdamState state, std::vector<double> loss_trace) {
  if (state.first_moment.size() != parameters_.size() ||
      state.second_moment.size() != parameters_.size()) {
    throw Error(ErrorCode::kBadCheckpoint, "optimizer state does not match parameters");
  }
  for (size_t i = 0; i < parameters_.size(); ++i) {
    const auto &p = parameters_[i].second;
    if (state.first_moment[i].rows() != p.rows() ||
        state.first_moment[i].cols() != p.cols() ||
        state.second_moment[i].rows() != p.rows() ||
        state.second_moment[i].cols() != p.cols()) {
      throw Error(ErrorCode::kBadCheckpoint,
                  "optimizer moment shape differs for " + parameters_[i].first);
    }
  }
  state_ = std::move(state);
  loss_trace_ = std::move(loss_trace);
}

Vocabulary BuildVocabulary(std::span<const Dialogue> dialogues) {
  Vocabulary vocab;
  for (const auto &d : dialogues) {
    for (const auto &u : d.utterances) vocab.AddText(u.text);
  }
  return vocab;
}

std::vector<PreparedExample> PrepareTrainingSet(
    std::span<const Dialogue> dialogues, const Vocabulary &vocabulary,
    const ModelConfig &config, const Providers &providers) {
  std::vector<PreparedExample> out;
  for (const auto &d : dialogues) {
    for (const auto &ex : BuildExamples(d, config.window)) {
      out.push_back(PrepareExample(ex, vocabulary, config, providers));
    }
  }
  return out;
}

TrainedModel TrainModel(std::span<const Dialogue> dialogues,
                        const RunConfig &config, const Providers &providers) {
  const auto labeled =
      PseudoLabelCorpus(dialogues, *providers.commonsense, *providers.classifier);
  const Vocabulary vocab = BuildVocabulary(labeled);
  TrainedModel result;
  result.examples = PrepareTrainingSet(labeled, vocab, config.model, providers);
  if (result.examples.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "no therapist turns with context");
  }
  result.model = std::make_shared<ResponseModel>(config.model, vocab, config.train.seed);
  const AblationFlags flags{config.train.use_sc, config.train.use_sgcr};
  ResponseModel *model = result.model.get();
  Trainer trainer(
      model->Parameters(),
      [model, flags](const PreparedExample &ex) { return model->Loss(ex, flags); },
      result.examples, config.train, [model] { model->ClampGates(); });
  result.loss_trace = trainer.Run();
  result.optimizer = trainer.optimizer_state();
  return result;
}

TrainedBackbone TrainVanilla(std::span<const Dialogue> dialogues,
                             const RunConfig &config, const Providers &providers) {
  const auto labeled =
      PseudoLabelCorpus(dialogues, *providers.commonsense, *providers.classifier);
  const Vocabulary vocab = BuildVocabulary(labeled);
  const auto examples = PrepareTrainingSet(labeled, vocab, config.model, providers);
  if (examples.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "no therapist turns with context");
  }
  TrainedBackbone result;
  result.backbone =
      std::make_shared<TinyDecoder>(vocab, config.model.decoder, config.train.seed);
  const TinyDecoder *backbone = result.backbone.get();
  Trainer trainer(
      backbone->NamedParameters(),
      [backbone](const PreparedExample &ex) { return VanillaLoss(*backbone, ex); },
      examples, config.train);
  result.loss_trace = trainer.Run();
  return result;
}

void SaveCheckpoint(const std::filesystem::path &path, const ResponseModel &model,
                    const TrainConfig &train_config, const AdamState *optimizer,
                    std::span<const double> loss_trace) {
  const NamedParameters params = model.Parameters();
  nlohmann::json header;
  header["model_config"] = ToJson(model.config());
  header["train_config"] = ToJson(train_config);
  header["vocabulary"] = model.backbone().vocabulary().ToJson();
  auto manifest = nlohmann::json::array();
  for (const auto &[name, p] : params) {
    manifest.push_back({{"name", name}, {"rows", p.rows()}, {"cols", p.cols()}});
  }
  header["parameters"] = std::move(manifest);
  header["optimizer"] = optimizer ? nlohmann::json{{"step", optimizer->step}}
                                  : nlohmann::json(nullptr);
  header["loss_trace"] = std::vector<double>(loss_trace.begin(), loss_trace.end());
  if (optimizer && (optimizer->first_moment.size() != params.size() ||
                    optimizer->second_moment.size() != params.size())) {
    throw Error(ErrorCode::kBadCheckpoint, "optimizer state does not match model");
  }

  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kBadCheckpoint, "cannot write " + path.string());
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char *>(&kVersion), sizeof(kVersion));
  const uint64_t length = text.size();
  out.write(reinterpret_cast<const char *>(&length), sizeof(length));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto &[name, p] : params) WriteBlob(out, p.value());
  if (optimizer) {
    for (const auto &m : optimizer->first_moment) WriteBlob(out, m);
    for (const auto &v : optimizer->second_moment) WriteBlob(out, v);
  }
  if (!out) throw Error(ErrorCode::kBadCheckpoint, "write failed for " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kBadCheckpoint, "cannot read " + path.string());
  char magic[4];
  uint32_t version = 0;
  uint64_t length = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char *>(&version), sizeof(version));
  in.read(reinterpret_cast<char *>(&length), sizeof(length));
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(ErrorCode::kBadCheckpoint, path.string() + " is not a checkpoint");
  }
  if (version != kVersion) {
    throw Error(ErrorCode::kBadCheckpoint, "unsupported checkpoint version");
  }
  if (length > (uint64_t{1} << 32)) {
    throw Error(ErrorCode::kBadCheckpoint, "implausible header length");
  }
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw Error(ErrorCode::kBadCheckpoint, "truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kBadCheckpoint, e.what());
  }
  Checkpoint ckpt;
  ckpt.model_config = ModelConfigFromJson(header.at("model_config"));
  ckpt.train_config = TrainConfigFromJson(header.at("train_config"));
  ckpt.model = std::make_shared<ResponseModel>(
      ckpt.model_config, Vocabulary::FromJson(header.at("vocabulary")),
      ckpt.train_config.seed);
  ckpt.loss_trace = header.value("loss_trace", std::vector<double>{});

  NamedParameters params = ckpt.model->Parameters();
  const auto &manifest = header.at("parameters");
  if (manifest.size() != params.size()) {
    throw Error(ErrorCode::kBadCheckpoint, "parameter count differs from model");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    auto &[name, p] = params[i];
    if (manifest[i].at("name") != name || manifest[i].at("rows") != p.rows() ||
        manifest[i].at("cols") != p.cols()) {
      throw Error(ErrorCode::kBadCheckpoint, "parameter mismatch at " + name);
    }
    ReadBlob(in, p.mutable_value());
  }
  if (!header.at("optimizer").is_null()) {
    AdamState state;
    state.step = header["optimizer"].at("step").get<int64_t>();
    for (auto *moments : {&state.first_moment, &state.second_moment}) {
      for (const auto &[name, p] : params) {
        nn::Matrix m(p.rows(), p.cols());
        ReadBlob(in, m);
        moments->push_back(std::move(m));
      }
    }
    ckpt.optimizer = std::move(state);
  }
  return ckpt;
}

}  // namespace sentigraph
