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

// One PASS/FAIL line per acceptance criterion; exit status is non-zero if
// any criterion fails or overruns its time budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "sentigraph/eval.h"
#include "sentigraph/graph.h"
#include "sentigraph/knowledge.h"
#include "sentigraph/sentiment.h"
#include "sentigraph/serving.h"
#include "sentigraph/trainer.h"
#include "support.h"

namespace sentigraph {
namespace {

using nlohmann::json;
using nn::Matrix;
using nn::Tensor;
using testing::RandomMatrix;

// Collects the first few failures of a criterion.
class Failures {
 public:
  void Expect(bool ok, const std::string &what) {
    if (ok) return;
    if (messages_.size() < 3) messages_.push_back(what);
    ++count_;
  }
  bool ok() const { return count_ == 0; }
  std::string Summary() const {
    std::string s = std::to_string(count_) + " failed check(s)";
    for (const auto &m : messages_) s += "; " + m;
    return s;
  }

 private:
  std::vector<std::string> messages_;
  int count_ = 0;
};

// Trained once, shared by the overfit and serving criteria.
struct OverfitModel {
  std::vector<Dialogue> dialogues = testing::OverfitDialogues();
  RunConfig config = testing::TinyRunConfig();
  Providers providers = Providers::Mock(config.model.graph_dim);
  TrainedModel trained;
};

OverfitModel &Overfit() {
  static OverfitModel m = [] {
    OverfitModel m;
    m.trained = TrainModel(m.dialogues, m.config, m.providers);
    return m;
  }();
  return m;
}

void AblationIdentity(Failures &f) {
  ModelConfig c;
  c.decoder.d_model = 16;
  c.decoder.layers = 2;
  c.decoder.heads = 2;
  c.decoder.max_positions = 64;
  c.graph_dim = 8;
  c.attention_heads = 2;
  auto dialogues = testing::OverfitDialogues(6);
  Providers providers = Providers::Mock(c.graph_dim);
  Vocabulary vocab = BuildVocabulary(dialogues);
  SplitMix64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    uint64_t seed = rng.Next();
    ResponseModel model(c, vocab, seed);
    // Open the gates so the identity depends on the flags alone.
    for (auto &[name, p] : model.Parameters())
      if (name.find("gate") != std::string::npos) p.mutable_value().setConstant(0.5);
    TinyDecoder vanilla(vocab, c.decoder, seed);
    auto examples = BuildExamples(dialogues[rng.Below(dialogues.size())]);
    PreparedExample ex =
        PrepareExample(examples[rng.Below(examples.size())], vocab, c, providers);
    Matrix expected = vanilla.Forward(ex.tokens).logits.value();
    Matrix off = model.Forward(ex, {false, false}).logits.value();
    f.Expect((off.array() == expected.array()).all(),
             "logits differ on trial " + std::to_string(trial));
  }
}

void RelationTable(Failures &f) {
  using R = Relation;
  auto pos = SelectRelations(SentimentLabel::kPositive);
  auto neg = SelectRelations(SentimentLabel::kNegative);
  f.Expect(pos == std::vector<R>{R::kXReact, R::kXWant, R::kXIntent}, "positive set");
  f.Expect(neg == std::vector<R>{R::kOReact, R::kOWant}, "negative set");
  for (R a : pos)
    for (R b : neg) f.Expect(a != b, "sets overlap");
}

void GraphInvariants(Failures &f) {
  SplitMix64 rng(2024);
  MockCommonsenseProvider mock;
  for (int trial = 0; trial < 500; ++trial) {
    int t = 1 + static_cast<int>(rng.Below(50));
    Dialogue d = testing::RandomDialogue(rng, t);
    std::set<SpeakerRole> roles;
    std::vector<KnowledgeBundle> bundles;
    for (auto &u : d.utterances) {
      roles.insert(u.speaker);
      bundles.push_back(ExtractKnowledge(u, mock));
    }
    DialogueGraph sc = BuildScGraph(d.utterances);
    DialogueGraph sg = BuildSgcrGraph(d.utterances, bundles);
    std::string tag = "t=" + std::to_string(t);
    for (const DialogueGraph *g : {&sc, &sg}) {
      f.Expect(g->num_nodes() == t + roles.size(), "node count " + tag);
      f.Expect(g->edges.size() == static_cast<size_t>(2 * t - 1), "edge count " + tag);
    }
    std::set<std::pair<int, int>> a(sc.edges.begin(), sc.edges.end());
    std::set<std::pair<int, int>> b(sg.edges.begin(), sg.edges.end());
    f.Expect(a == b, "edge sets differ " + tag);
    for (size_t i = 0; i < sc.num_nodes() && i < sg.num_nodes(); ++i) {
      f.Expect((sc.nodes[i].kind == NodeKind::kSpeaker) == (sg.nodes[i].kind == NodeKind::kSpeaker),
               "node kinds differ " + tag);
      f.Expect(sc.nodes[i].source == sg.nodes[i].source, "node sources differ " + tag);
    }
  }
}

// softmax(Q K^T / sqrt(d_head)) V per head with explicit loops.
Matrix DenseOracle(const Matrix &h, const Matrix &mem, const KnowledgeAttentionParams &p) {
  Matrix q = h * p.w_q.value(), k = mem * p.w_k.value(), v = mem * p.w_v.value();
  int d = static_cast<int>(h.cols()), dh = d / p.heads;
  Matrix payload = Matrix::Zero(h.rows(), d);
  for (int head = 0; head < p.heads; ++head)
    for (int i = 0; i < h.rows(); ++i) {
      std::vector<double> s(mem.rows());
      double mx = -1e300;
      for (int j = 0; j < mem.rows(); ++j) {
        double dot = 0;
        for (int c = 0; c < dh; ++c) dot += q(i, head * dh + c) * k(j, head * dh + c);
        s[j] = dot / std::sqrt(double(dh));
        mx = std::max(mx, s[j]);
      }
      double z = 0;
      for (double &x : s) z += (x = std::exp(x - mx));
      for (int j = 0; j < mem.rows(); ++j)
        for (int c = 0; c < dh; ++c) payload(i, head * dh + c) += s[j] / z * v(j, head * dh + c);
    }
  return h + p.gate.value()(0, 0) * payload;
}

void NumericalCorrectness(Failures &f) {
  SplitMix64 rng(99);
  MockCommonsenseProvider mock;
  int instances = 0;
  for (int trial = 0; trial < 24; ++trial) {
    Dialogue d = testing::RandomDialogue(rng, 1 + rng.Below(6));
    std::vector<KnowledgeBundle> bundles;
    for (auto &u : d.utterances) bundles.push_back(ExtractKnowledge(u, mock));
    DialogueGraph g = trial % 2 ? BuildScGraph(d.utterances) : BuildSgcrGraph(d.utterances, bundles);
    const int dim = 4;
    int n = static_cast<int>(g.num_nodes());
    GatParams p = InitGatParams(dim, rng);
    p.score.mutable_value() = RandomMatrix(rng, 1, 2 * dim);
    Tensor features = Tensor::Parameter(RandomMatrix(rng, n, dim));
    Tensor weights = Tensor::Constant(RandomMatrix(rng, n, dim));
    double err = testing::GradCheckError({p.weight, p.score, features}, [&] {
      return nn::Sum(nn::Hadamard(GatForward(g, features, p).hidden, weights));
    });
    f.Expect(err < 1e-4, "gradient error " + std::to_string(err));
    ++instances;
    GatResult r = GatForward(g, features, p);
    for (int v = 0; v < n; ++v)
      f.Expect(std::abs(r.attention.row(v).sum() - 1.0) < 1e-6, "attention row sum");
  }
  f.Expect(instances >= 20, "too few gradient instances");

  for (int heads : {1, 2}) {
    for (int trial = 0; trial < 10; ++trial) {
      KnowledgeAttentionParams p;
      p.w_q = Tensor::Parameter(RandomMatrix(rng, 4, 4, 0.5));
      p.w_k = Tensor::Parameter(RandomMatrix(rng, 4, 4, 0.5));
      p.w_v = Tensor::Parameter(RandomMatrix(rng, 4, 4, 0.5));
      p.gate = Tensor::Parameter(Matrix::Constant(1, 1, 0.7));
      p.heads = heads;
      Matrix h = RandomMatrix(rng, 1 + rng.Below(3), 4);
      Matrix mem = RandomMatrix(rng, 1 + rng.Below(4), 4);
      MemoryMatrix m;
      m.rows = Tensor::Constant(mem);
      for (Eigen::Index i = 0; i < mem.rows(); ++i) m.origin.push_back({MemorySource::kSc, int(i)});
      auto r = KnowledgeAwareAttention(Tensor::Constant(h), m, p);
      f.Expect((r.output.value() - DenseOracle(h, mem, p)).cwiseAbs().maxCoeff() < 1e-6,
               "knowledge attention differs from the dense oracle");
      for (auto &w : r.weights)
        for (int i = 0; i < w.rows(); ++i)
          f.Expect(std::abs(w.row(i).sum() - 1.0) < 1e-6, "knowledge attention row sum");
    }
  }
}

void OverfitOracle(Failures &f) {
  OverfitModel &m = Overfit();
  const auto &trace = m.trained.loss_trace;
  f.Expect(trace.size() <= 500, "more than 500 steps");
  f.Expect(trace.back() < 0.1 * trace.front(),
           "final loss " + std::to_string(trace.back()) + " vs initial " + std::to_string(trace.front()));
  ResponseGenerator gen(m.trained.model, m.providers, {true, true});
  int exact = 0, total = 0;
  for (const auto &d : m.dialogues)
    for (const auto &ex : BuildExamples(d)) {
      ++total;
      exact += gen.Generate(ex.context).text == ex.target.text;
    }
  f.Expect(exact * 10 >= total * 9,
           "regenerated " + std::to_string(exact) + "/" + std::to_string(total));
}

std::vector<std::string> Words(const std::string &s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

void MetricOracles(Failures &f) {
  SplitMix64 rng(11);
  auto sentence = [&] {
    std::string s;
    for (int i = static_cast<int>(rng.Below(13)); i > 0; --i) s += "w" + std::to_string(rng.Below(6)) + " ";
    return s;
  };
  for (int trial = 0; trial < 200; ++trial) {
    std::string c = sentence(), r = sentence();
    auto wc = Words(c), wr = Words(r);
    for (int n = 1; n <= 2; ++n) {
      std::map<std::vector<std::string>, int> gc, gr;
      for (size_t i = 0; i + n <= wc.size(); ++i) ++gc[{wc.begin() + i, wc.begin() + i + n}];
      for (size_t i = 0; i + n <= wr.size(); ++i) ++gr[{wr.begin() + i, wr.begin() + i + n}];
      int tc = 0, tr = 0, overlap = 0;
      for (auto &[k, v] : gc) tc += v;
      for (auto &[k, v] : gr) {
        tr += v;
        if (gc.count(k)) overlap += std::min(v, gc[k]);
      }
      MetricTriple got = RougeN(c, r, n);
      f.Expect(got.precision == (tc ? double(overlap) / tc : 0.0), "rouge precision");
      f.Expect(got.recall == (tr ? double(overlap) / tr : 0.0), "rouge recall");
    }
    std::vector<std::vector<int>> lcs(wc.size() + 1, std::vector<int>(wr.size() + 1, 0));
    for (size_t i = wc.size(); i-- > 0;)
      for (size_t j = wr.size(); j-- > 0;)
        lcs[i][j] = wc[i] == wr[j] ? 1 + lcs[i + 1][j + 1] : std::max(lcs[i + 1][j], lcs[i][j + 1]);
    MetricTriple l = RougeL(c, r);
    f.Expect(l.precision == (wc.empty() ? 0.0 : double(lcs[0][0]) / wc.size()), "rouge-l precision");
    f.Expect(l.recall == (wr.empty() ? 0.0 : double(lcs[0][0]) / wr.size()), "rouge-l recall");
  }
  f.Expect(std::abs(Meteor("the cat sat", "the cat sat") - 0.98148) < 1e-5, "meteor self-score");
  f.Expect(Meteor("hello", "hello") == 0.5, "meteor single token");
  HashTokenEmbedder hash(64);
  OneHotTokenEmbedder onehot(16);
  f.Expect(BertScore("same words here", "same words here", hash) == 1.0, "bertscore identical");
  f.Expect(BertScore("alpha beta", "gamma delta", onehot) == 0.0, "bertscore orthogonal");
}

void PseudoLabeling(Failures &f) {
  SplitMix64 rng(5);
  std::vector<Dialogue> corpus;
  for (int d = 0; d < 100; ++d) {
    Dialogue dia = testing::RandomDialogue(rng, 10);
    for (auto &u : dia.utterances) u.sentiment.reset();
    corpus.push_back(dia);
  }
  MockCommonsenseProvider mock;
  LexiconClassifier clf;
  auto one = PseudoLabelCorpus(corpus, mock, clf, {1});
  auto four = PseudoLabelCorpus(corpus, mock, clf, {4});
  size_t labeled = 0;
  for (size_t d = 0; d < one.size(); ++d)
    for (size_t i = 0; i < one[d].utterances.size(); ++i) {
      labeled += one[d].utterances[i].sentiment.has_value();
      f.Expect(one[d].utterances[i].text == corpus[d].utterances[i].text, "text changed");
    }
  f.Expect(labeled == 1000, "labeled " + std::to_string(labeled) + " of 1000");
  f.Expect(one == four, "thread count changes labels");
  f.Expect(PseudoLabelCorpus(corpus, mock, clf) == one, "labels differ between runs");
}

void ServingContract(Failures &f) {
  OverfitModel &m = Overfit();
  auto gen = std::make_shared<ResponseGenerator>(m.trained.model, m.providers, AblationFlags{true, true});
  auto dir = testing::TempDir("acceptance-serving");
  ServiceOptions options;
  options.store_dir = dir;
  ChatService service(gen, options);
  const Dialogue &d = m.dialogues[0];
  ChatSession s = service.CreateSession();
  f.Expect(service.PostMessage(s.id, d.utterances[0].text).reply == d.utterances[1].text,
           "first reply is not the memorized turn");
  f.Expect(service.PostMessage(s.id, d.utterances[2].text).reply == d.utterances[3].text,
           "second reply is not the memorized turn");
  service.PostMessage(s.id, "thank you");
  f.Expect(service.GetSession(s.id).history.size() == 6, "history length");
  ChatSession other = service.CreateSession();
  service.SubmitFeedback({s.id, 5, 4, 3, 5, Hallucination::kNone});
  service.SubmitFeedback({other.id, 2, 4, 1, 3, Hallucination::kMinor});
  FeedbackSummary summary = service.Summary();

  std::map<std::string, json> latest;
  std::ifstream in(service.store_path());
  const std::set<std::string> banned = {"name", "email", "ip", "address", "phone", "user"};
  for (std::string line; std::getline(in, line);) {
    json r = json::parse(line);
    for (auto &[k, v] : r.items()) f.Expect(!banned.count(k), "identity field " + k);
    if (r["type"] == "feedback") latest[r["session"]] = r;
  }
  auto pct = [&](const char *key) {
    size_t hits = 0;
    for (auto &[id, r] : latest) hits += r[key].get<int>() >= 4;
    return 100.0 * hits / latest.size();
  };
  size_t seen = 0;
  for (auto &[id, r] : latest) seen += r["hallucination_observed"] != "none";
  f.Expect(summary.responses == latest.size(), "response count");
  f.Expect(summary.effectiveness == pct("effectiveness"), "effectiveness recount");
  f.Expect(summary.satisfaction == pct("satisfaction"), "satisfaction recount");
  f.Expect(summary.continued_usage == pct("continued_usage"), "continued usage recount");
  f.Expect(summary.recommend == pct("recommend"), "recommend recount");
  f.Expect(summary.hallucination_observed == 100.0 * seen / latest.size(), "hallucination recount");
}

struct Criterion {
  const char *name;
  double budget_seconds;
  std::function<void(Failures &)> run;
};

}  // namespace
}  // namespace sentigraph

int main() {
  using namespace sentigraph;
  const Criterion criteria[] = {
      {"ablation identity", 60, AblationIdentity},
      {"relation selection table", 5, RelationTable},
      {"graph invariants", 60, GraphInvariants},
      {"numerical correctness", 120, NumericalCorrectness},
      {"overfit oracle", 600, OverfitOracle},
      {"metric oracles", 60, MetricOracles},
      {"pseudo-labeling totality and determinism", 30, PseudoLabeling},
      {"serving api contract", 60, ServingContract},
  };
  int failed = 0;
  for (const auto &c : criteria) {
    Failures f;
    auto start = std::chrono::steady_clock::now();
    try {
      c.run(f);
    } catch (const std::exception &e) {
      f.Expect(false, std::string("exception: ") + e.what());
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    f.Expect(seconds < c.budget_seconds, "over time budget");
    if (f.ok()) {
      std::printf("PASS %s (%.2fs)\n", c.name, seconds);
    } else {
      ++failed;
      std::printf("FAIL %s (%.2fs): %s\n", c.name, seconds, f.Summary().c_str());
    }
  }
  return failed == 0 ? 0 : 1;
}
