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

// Command-line front end: label, extract, split, train, generate, evaluate,
// ablate, serve.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sentigraph/config.h"
#include "sentigraph/corpus.h"
#include "sentigraph/error.h"
#include "sentigraph/eval.h"
#include "sentigraph/generator.h"
#include "sentigraph/knowledge.h"
#include "sentigraph/remote.h"
#include "sentigraph/sentiment.h"
#include "sentigraph/serving.h"
#include "sentigraph/trainer.h"

// After Eigen: <resolv.h> defines a _res macro that clashes with it.
#include "httplib.h"

namespace sg = sentigraph;
using nlohmann::json;

namespace {

void WriteText(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::unique_ptr<sg::TokenEmbedder> MakeEmbedder(const std::string &spec,
                                                int dim) {
  if (spec == "hash") return std::make_unique<sg::HashTokenEmbedder>(dim);
  if (spec == "onehot") return std::make_unique<sg::OneHotTokenEmbedder>(dim);
  if (spec.rfind("table:", 0) == 0) {
    return std::make_unique<sg::TableTokenEmbedder>(
        sg::TableTokenEmbedder::LoadText(spec.substr(6)));
  }
  throw sg::Error(sg::ErrorCode::kBadConfig, "unknown embedder " + spec);
}

std::vector<double> ParseRatios(const std::string &text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(std::stod(part));
  if (out.size() != 3) {
    throw sg::Error(sg::ErrorCode::kBadRatios, "expected three ratios");
  }
  return out;
}

std::vector<sg::AblationFlags> ParseVariants(const std::string &text) {
  std::vector<sg::AblationFlags> out;
  std::stringstream ss(text);
  std::string v;
  while (std::getline(ss, v, ',')) {
    v = std::string(sg::TrimWhitespace(v));
    if (v == "full") {
      out.push_back({true, true});
    } else if (v == "-sc") {
      out.push_back({false, true});
    } else if (v == "-sgcr") {
      out.push_back({true, false});
    } else if (v == "-both") {
      out.push_back({false, false});
    } else {
      throw sg::Error(sg::ErrorCode::kBadConfig, "unknown variant " + v);
    }
  }
  return out;
}

std::string Extra(const sg::RunConfig &c, const std::string &key,
                  const std::string &fallback) {
  auto it = c.extra.find(key);
  return it == c.extra.end() ? fallback : it->second;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Sentiment- and commonsense-guided response generation"};
  app.require_subcommand(1);

  // label
  std::string label_in, label_out, classifier = "stub", provider = "mock";
  std::string provider_endpoint, classifier_endpoint;
  int threads = 1;
  auto *label = app.add_subcommand("label", "Pseudo-label client/therapist turns");
  label->add_option("--in", label_in, "Transcript file or directory")->required();
  label->add_option("--out", label_out, "Output JSON_V1 file")->required();
  label->add_option("--classifier", classifier)
      ->check(CLI::IsMember({"stub", "encoder"}));
  label->add_option("--provider", provider)->check(CLI::IsMember({"mock", "comet"}));
  label->add_option("--provider-endpoint", provider_endpoint);
  label->add_option("--classifier-endpoint", classifier_endpoint);
  label->add_option("--threads", threads)->check(CLI::PositiveNumber);

  // extract
  std::string extract_in, extract_out;
  int k = sg::kDefaultTopK;
  bool strict = false;
  auto *extract = app.add_subcommand("extract", "Sentiment-conditioned commonsense");
  extract->add_option("--in", extract_in, "Labeled transcripts")->required();
  extract->add_option("--out", extract_out, "Knowledge JSON")->required();
  extract->add_option("--provider", provider)->check(CLI::IsMember({"mock", "comet"}));
  extract->add_option("--provider-endpoint", provider_endpoint);
  extract->add_option("--k", k)->check(CLI::PositiveNumber);
  extract->add_flag("--strict", strict, "Fail on empty knowledge instead of \"none\"");

  // split
  std::string split_in, split_dir, ratios = "0.8,0.1,0.1";
  uint64_t split_seed = 0;
  auto *split = app.add_subcommand("split", "Dialogue-level train/validation/test split");
  split->add_option("--in", split_in)->required();
  split->add_option("--out-dir", split_dir)->required();
  split->add_option("--ratios", ratios);
  split->add_option("--seed", split_seed);

  // train
  std::string train_data, train_config, train_out;
  auto *train = app.add_subcommand("train", "Train a model and write a checkpoint");
  train->add_option("--data", train_data, "Transcript file or directory")->required();
  train->add_option("--config", train_config, "key = value config file");
  train->add_option("--out", train_out, "Checkpoint path")->required();

  // generate
  std::string gen_ckpt, gen_transcript;
  sg::DecodeConfig decode;
  bool gen_json = false;
  auto *generate = app.add_subcommand("generate", "Generate the next therapist turn");
  generate->add_option("--ckpt", gen_ckpt)->required();
  generate->add_option("--transcript", gen_transcript)->required();
  generate->add_option("--max-tokens", decode.max_tokens);
  generate->add_option("--top-p", decode.top_p);
  generate->add_option("--temperature", decode.temperature);
  generate->add_option("--seed", decode.seed);
  generate->add_flag("--json", gen_json, "Print context, knowledge and reply as JSON");

  // evaluate
  std::string pred, ref, eval_out, embedder_spec = "hash";
  int embed_dim = 64;
  auto *evaluate = app.add_subcommand("evaluate", "Score predictions against references");
  evaluate->add_option("--pred", pred)->required();
  evaluate->add_option("--ref", ref)->required();
  evaluate->add_option("--out", eval_out, "report.json or report.md");
  evaluate->add_option("--embedder", embedder_spec, "hash | onehot | table:<file>");
  evaluate->add_option("--embed-dim", embed_dim);

  // ablate
  std::string ablate_config, ablate_out;
  auto *ablate = app.add_subcommand("ablate", "Train and evaluate graph ablations");
  ablate->add_option("--config", ablate_config)->required();
  ablate->add_option("--out", ablate_out, "report.json or report.md");

  // serve
  std::string serve_ckpt, store_dir, host = "127.0.0.1";
  int port = 8080, queue = 16;
  double ttl_hours = 24.0;
  auto *serve = app.add_subcommand("serve", "HTTP chat service");
  serve->add_option("--ckpt", serve_ckpt)->required();
  serve->add_option("--port", port);
  serve->add_option("--store", store_dir)->required();
  serve->add_option("--host", host);
  serve->add_option("--ttl-hours", ttl_hours);
  serve->add_option("--queue", queue);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*label) {
      sg::ModelConfig mc;
      mc.provider = provider;
      mc.classifier = classifier;
      mc.provider_endpoint = provider_endpoint;
      mc.classifier_endpoint = classifier_endpoint;
      sg::Providers p = sg::MakeProviders(mc);
      auto dialogues = sg::LoadTranscripts(label_in);
      auto labeled = sg::PseudoLabelCorpus(dialogues, *p.commonsense,
                                           *p.classifier, {threads});
      sg::WriteTranscripts(label_out, labeled);
      std::cerr << "labeled " << labeled.size() << " dialogues\n";
    } else if (*extract) {
      sg::ModelConfig mc;
      mc.provider = provider;
      mc.provider_endpoint = provider_endpoint;
      sg::Providers p = sg::MakeProviders(mc);
      sg::ExtractOptions opts;
      opts.k = k;
      opts.allow_empty = !strict;
      json out = json::array();
      for (const auto &d : sg::LoadTranscripts(extract_in)) {
        for (const auto &u : d.utterances) {
          json b = sg::BundleToJson(sg::ExtractKnowledge(u, *p.commonsense, opts));
          b["dialogue_id"] = d.id;
          out.push_back(std::move(b));
        }
      }
      WriteText(extract_out, out.dump(2) + "\n");
    } else if (*split) {
      auto r = ParseRatios(ratios);
      auto parts = sg::SplitCorpus(sg::LoadTranscripts(split_in),
                                   {r[0], r[1], r[2]}, split_seed);
      std::filesystem::create_directories(split_dir);
      std::filesystem::path dir(split_dir);
      sg::WriteTranscripts(dir / "train.jsonl", parts.train);
      sg::WriteTranscripts(dir / "validation.jsonl", parts.validation);
      sg::WriteTranscripts(dir / "test.jsonl", parts.test);
      std::cerr << parts.train.size() << "/" << parts.validation.size() << "/"
                << parts.test.size() << " dialogues\n";
    } else if (*train) {
      sg::RunConfig config;
      if (!train_config.empty()) config = sg::LoadRunConfig(train_config);
      sg::Providers p = sg::MakeProviders(config.model);
      auto dialogues = sg::LoadTranscripts(train_data);
      sg::TrainedModel trained = sg::TrainModel(dialogues, config, p);
      sg::SaveCheckpoint(train_out, *trained.model, config.train,
                         &trained.optimizer, trained.loss_trace);
      if (!trained.loss_trace.empty()) {
        std::cerr << "steps " << trained.loss_trace.size() << ", loss "
                  << trained.loss_trace.front() << " -> "
                  << trained.loss_trace.back() << "\n";
      }
    } else if (*generate) {
      sg::Checkpoint ckpt = sg::LoadCheckpoint(gen_ckpt);
      sg::Providers p = sg::MakeProviders(ckpt.model_config);
      sg::AblationFlags flags{ckpt.train_config.use_sc,
                              ckpt.train_config.use_sgcr};
      sg::ResponseGenerator generator(ckpt.model, p, flags);
      auto dialogues = sg::LoadTranscripts(gen_transcript);
      if (dialogues.empty()) {
        throw sg::Error(sg::ErrorCode::kEmptyDialogue, "no transcript");
      }
      const auto &utts = dialogues.front().utterances;
      size_t window = static_cast<size_t>(ckpt.model_config.window);
      std::vector<sg::Utterance> context(
          utts.end() - std::min(utts.size(), window), utts.end());
      sg::GenerationResult r = generator.Generate(context, decode);
      if (gen_json) {
        json doc;
        doc["reply"] = r.text;
        doc["context"] = json::array();
        for (const auto &u : r.context) {
          doc["context"].push_back(
              {{"speaker", std::string(sg::RoleCode(u.speaker))},
               {"text", u.text},
               {"sentiment", u.sentiment ? json(sg::SentimentName(*u.sentiment))
                                         : json(nullptr)}});
        }
        doc["knowledge"] = json::array();
        for (const auto &b : r.knowledge) doc["knowledge"].push_back(sg::BundleToJson(b));
        std::cout << doc.dump(2) << "\n";
      } else {
        std::cout << r.text << "\n";
      }
    } else if (*evaluate) {
      auto embedder = MakeEmbedder(embedder_spec, embed_dim);
      auto predictions = sg::ReadLines(pred);
      auto references = sg::ReadLines(ref);
      sg::EvalReport report = sg::EvaluateRun(predictions, references, *embedder);
      report.label = "run";
      std::vector<sg::EvalReport> rows{report};
      std::cout << sg::RenderMarkdown(rows);
      if (!eval_out.empty()) {
        if (std::filesystem::path(eval_out).extension() == ".json") {
          WriteText(eval_out, sg::ReportToJson(report).dump(2) + "\n");
        } else {
          WriteText(eval_out, sg::RenderMarkdown(rows));
        }
      }
    } else if (*ablate) {
      sg::RunConfig config = sg::LoadRunConfig(ablate_config);
      std::string data = Extra(config, "ablate.data", "");
      if (data.empty()) {
        throw sg::Error(sg::ErrorCode::kBadConfig, "ablate.data is required");
      }
      auto r = ParseRatios(Extra(config, "ablate.split", "0.8,0.1,0.1"));
      auto parts = sg::SplitCorpus(sg::LoadTranscripts(data), {r[0], r[1], r[2]},
                                   config.train.seed);
      sg::AblationData ad{parts.train, parts.test};
      auto variants =
          ParseVariants(Extra(config, "ablate.variants", "full,-sc,-sgcr,-both"));
      auto embedder = MakeEmbedder(Extra(config, "ablate.embedder", "hash"),
                                   std::stoi(Extra(config, "ablate.embed_dim", "64")));
      sg::Providers p = sg::MakeProviders(config.model);
      auto rows = sg::RunAblation(variants, ad, config, p, *embedder);
      if (Extra(config, "ablate.vanilla", "true") == "true") {
        rows.push_back(sg::EvaluateVanillaBaseline(ad, config, p, *embedder));
      }
      std::cout << sg::RenderMarkdown(rows);
      if (!ablate_out.empty()) {
        if (std::filesystem::path(ablate_out).extension() == ".json") {
          json doc = json::array();
          for (const auto &row : rows) doc.push_back(sg::ReportToJson(row));
          WriteText(ablate_out, doc.dump(2) + "\n");
        } else {
          WriteText(ablate_out, sg::RenderMarkdown(rows));
        }
      }
    } else if (*serve) {
      sg::Checkpoint ckpt = sg::LoadCheckpoint(serve_ckpt);
      sg::Providers p = sg::MakeProviders(ckpt.model_config);
      auto generator = std::make_shared<sg::ResponseGenerator>(
          ckpt.model, p,
          sg::AblationFlags{ckpt.train_config.use_sc, ckpt.train_config.use_sgcr});
      sg::ServiceOptions opts;
      opts.store_dir = store_dir;
      opts.idle_ttl_seconds = static_cast<int64_t>(ttl_hours * 3600);
      opts.queue_capacity = queue;
      sg::ChatService service(generator, opts);
      httplib::Server server;
      sg::MountRoutes(server, service);
      std::cerr << "listening on " << host << ":" << port << "\n";
      if (!server.listen(host, port)) {
        throw std::runtime_error("cannot listen on " + host + ":" +
                                 std::to_string(port));
      }
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
