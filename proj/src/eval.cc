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

#include "sentigraph/eval.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "sentigraph/error.h"
#include "sentigraph/hash.h"
#include "sentigraph/text.h"
#include "sentigraph/trainer.h"

namespace sentigraph {

MetricTriple MetricTriple::FromPrecisionRecall(double precision,
                                               double recall) {
  MetricTriple m;
  m.precision = precision;
  m.recall = recall;
  m.f1 = precision + recall > 0.0
             ? 2.0 * precision * recall / (precision + recall)
             : 0.0;
  return m;
}

namespace {

std::map<std::vector<std::string>, int> NGramCounts(
    const std::vector<std::string> &tokens, int n) {
  std::map<std::vector<std::string>, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    counts[std::vector<std::string>(tokens.begin() + i,
                                    tokens.begin() + i + n)]++;
  }
  return counts;
}

}  // namespace

MetricTriple RougeN(std::string_view candidate, std::string_view reference,
                    int n) {
  if (n < 1) throw Error(ErrorCode::kBadConfig, "rouge n must be >= 1");
  auto cand = TokenizeLowerAlnum(candidate);
  auto ref = TokenizeLowerAlnum(reference);
  auto cc = NGramCounts(cand, n);
  auto rc = NGramCounts(ref, n);
  if (cc.empty() || rc.empty()) return {};
  long overlap = 0, cand_total = 0, ref_total = 0;
  for (auto &[gram, c] : cc) {
    cand_total += c;
    auto it = rc.find(gram);
    if (it != rc.end()) overlap += std::min(c, it->second);
  }
  for (auto &[gram, c] : rc) ref_total += c;
  return MetricTriple::FromPrecisionRecall(
      static_cast<double>(overlap) / cand_total,
      static_cast<double>(overlap) / ref_total);
}

MetricTriple RougeL(std::string_view candidate, std::string_view reference) {
  auto a = TokenizeLowerAlnum(candidate);
  auto b = TokenizeLowerAlnum(reference);
  if (a.empty() || b.empty()) return {};
  std::vector<int> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  double lcs = prev[b.size()];
  return MetricTriple::FromPrecisionRecall(lcs / a.size(), lcs / b.size());
}

// Porter stemmer, following the structure of the reference C version.
namespace {

class Stemmer {
 public:
  std::string Stem(std::string_view word) {
    if (word.size() <= 2) return std::string(word);
    b_ = std::string(word);
    k_ = static_cast<int>(b_.size()) - 1;
    Step1ab();
    if (k_ > 0) {
      Step1c();
      Step2();
      Step3();
      Step4();
      Step5();
    }
    return b_.substr(0, k_ + 1);
  }

 private:
  bool Cons(int i) const {
    switch (b_[i]) {
      case 'a': case 'e': case 'i': case 'o': case 'u':
        return false;
      case 'y':
        return i == 0 ? true : !Cons(i - 1);
      default:
        return true;
    }
  }

  // Number of VC sequences in b[0..j].
  int M() const {
    int n = 0, i = 0;
    for (;;) {
      if (i > j_) return n;
      if (!Cons(i)) break;
      ++i;
    }
    ++i;
    for (;;) {
      for (;;) {
        if (i > j_) return n;
        if (Cons(i)) break;
        ++i;
      }
      ++i;
      ++n;
      for (;;) {
        if (i > j_) return n;
        if (!Cons(i)) break;
        ++i;
      }
      ++i;
    }
  }

  bool VowelInStem() const {
    for (int i = 0; i <= j_; ++i)
      if (!Cons(i)) return true;
    return false;
  }

  bool DoubleC(int j) const {
    if (j < 1 || b_[j] != b_[j - 1]) return false;
    return Cons(j);
  }

  bool Cvc(int i) const {
    if (i < 2 || !Cons(i) || Cons(i - 1) || !Cons(i - 2)) return false;
    char ch = b_[i];
    return ch != 'w' && ch != 'x' && ch != 'y';
  }

  bool Ends(std::string_view s) {
    int len = static_cast<int>(s.size());
    if (len > k_ + 1) return false;
    if (std::string_view(b_).substr(k_ - len + 1, len) != s) return false;
    j_ = k_ - len;
    return true;
  }

  void SetTo(std::string_view s) {
    b_.replace(j_ + 1, std::string::npos, s);
    k_ = j_ + static_cast<int>(s.size());
  }

  void R(std::string_view s) {
    if (M() > 0) SetTo(s);
  }

  void Step1ab() {
    if (b_[k_] == 's') {
      if (Ends("sses")) {
        k_ -= 2;
      } else if (Ends("ies")) {
        SetTo("i");
      } else if (b_[k_ - 1] != 's') {
        --k_;
      }
    }
    if (Ends("eed")) {
      if (M() > 0) --k_;
    } else if ((Ends("ed") || Ends("ing")) && VowelInStem()) {
      k_ = j_;
      if (Ends("at")) {
        SetTo("ate");
      } else if (Ends("bl")) {
        SetTo("ble");
      } else if (Ends("iz")) {
        SetTo("ize");
      } else if (DoubleC(k_)) {
        --k_;
        char ch = b_[k_];
        if (ch == 'l' || ch == 's' || ch == 'z') ++k_;
      } else if (M() == 1 && Cvc(k_)) {
        j_ = k_;
        SetTo("e");
      }
    }
  }

  void Step1c() {
    if (Ends("y") && VowelInStem()) b_[k_] = 'i';
  }

  struct Rule {
    const char *suffix;
    const char *replacement;
  };

  bool Apply(std::initializer_list<Rule> rules) {
    for (const Rule &r : rules) {
      if (Ends(r.suffix)) {
        R(r.replacement);
        return true;
      }
    }
    return false;
  }

  void Step2() {
    switch (b_[k_ - 1]) {
      case 'a': Apply({{"ational", "ate"}, {"tional", "tion"}}); break;
      case 'c': Apply({{"enci", "ence"}, {"anci", "ance"}}); break;
      case 'e': Apply({{"izer", "ize"}}); break;
      case 'l':
        Apply({{"bli", "ble"}, {"alli", "al"}, {"entli", "ent"}, {"eli", "e"},
               {"ousli", "ous"}});
        break;
      case 'o':
        Apply({{"ization", "ize"}, {"ation", "ate"}, {"ator", "ate"}});
        break;
      case 's':
        Apply({{"alism", "al"}, {"iveness", "ive"}, {"fulness", "ful"},
               {"ousness", "ous"}});
        break;
      case 't':
        Apply({{"aliti", "al"}, {"iviti", "ive"}, {"biliti", "ble"}});
        break;
      case 'g': Apply({{"logi", "log"}}); break;
      default: break;
    }
  }

  void Step3() {
    switch (b_[k_]) {
      case 'e':
        Apply({{"icate", "ic"}, {"ative", ""}, {"alize", "al"}});
        break;
      case 'i': Apply({{"iciti", "ic"}}); break;
      case 'l': Apply({{"ical", "ic"}, {"ful", ""}}); break;
      case 's': Apply({{"ness", ""}}); break;
      default: break;
    }
  }

  void Step4() {
    auto any = [&](std::initializer_list<const char *> suffixes) {
      for (const char *s : suffixes)
        if (Ends(s)) return true;
      return false;
    };
    bool hit = false;
    switch (b_[k_ - 1]) {
      case 'a': hit = any({"al"}); break;
      case 'c': hit = any({"ance", "ence"}); break;
      case 'e': hit = any({"er"}); break;
      case 'i': hit = any({"ic"}); break;
      case 'l': hit = any({"able", "ible"}); break;
      case 'n': hit = any({"ant", "ement", "ment", "ent"}); break;
      case 'o':
        if (Ends("ion") && j_ >= 0 && (b_[j_] == 's' || b_[j_] == 't')) {
          hit = true;
        } else {
          hit = any({"ou"});
        }
        break;
      case 's': hit = any({"ism"}); break;
      case 't': hit = any({"ate", "iti"}); break;
      case 'u': hit = any({"ous"}); break;
      case 'v': hit = any({"ive"}); break;
      case 'z': hit = any({"ize"}); break;
      default: break;
    }
    if (hit && M() > 1) k_ = j_;
  }

  void Step5() {
    j_ = k_;
    if (b_[k_] == 'e') {
      int a = M();
      if (a > 1 || (a == 1 && !Cvc(k_ - 1))) --k_;
    }
    if (b_[k_] == 'l' && DoubleC(k_) && M() > 1) --k_;
  }

  std::string b_;
  int k_ = 0;
  int j_ = 0;
};

}  // namespace

std::string PorterStem(std::string_view word) { return Stemmer().Stem(word); }

double Meteor(std::string_view candidate, std::string_view reference) {
  auto cand = TokenizeLowerAlnum(candidate);
  auto ref = TokenizeLowerAlnum(reference);
  if (cand.empty() || ref.empty()) return 0.0;
  std::vector<int> align(cand.size(), -1);
  std::vector<bool> used(ref.size(), false);
  auto stage = [&](const std::vector<std::string> &c,
                   const std::vector<std::string> &r) {
    for (size_t i = 0; i < c.size(); ++i) {
      if (align[i] >= 0) continue;
      for (size_t j = 0; j < r.size(); ++j) {
        if (!used[j] && c[i] == r[j]) {
          align[i] = static_cast<int>(j);
          used[j] = true;
          break;
        }
      }
    }
  };
  stage(cand, ref);
  std::vector<std::string> cand_stem, ref_stem;
  for (auto &w : cand) cand_stem.push_back(PorterStem(w));
  for (auto &w : ref) ref_stem.push_back(PorterStem(w));
  stage(cand_stem, ref_stem);

  int matches = 0, chunks = 0;
  int prev_i = -2, prev_j = -2;
  for (size_t i = 0; i < cand.size(); ++i) {
    if (align[i] < 0) continue;
    ++matches;
    int ii = static_cast<int>(i);
    if (ii != prev_i + 1 || align[i] != prev_j + 1) ++chunks;
    prev_i = ii;
    prev_j = align[i];
  }
  if (matches == 0) return 0.0;
  double p = static_cast<double>(matches) / cand.size();
  double r = static_cast<double>(matches) / ref.size();
  double fmean = 10.0 * p * r / (r + 9.0 * p);
  double frag = static_cast<double>(chunks) / matches;
  double penalty = 0.5 * frag * frag * frag;
  return fmean * (1.0 - penalty);
}

std::vector<Eigen::VectorXd> HashTokenEmbedder::Embed(
    const std::vector<std::string> &tokens) const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(tokens.size());
  for (const auto &t : tokens) {
    SplitMix64 rng(Fnv1a64(t));
    Eigen::VectorXd v(dimension_);
    for (int i = 0; i < dimension_; ++i) v[i] = rng.Normal();
    out.push_back(v / v.norm());
  }
  return out;
}

std::vector<Eigen::VectorXd> OneHotTokenEmbedder::Embed(
    const std::vector<std::string> &tokens) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<Eigen::VectorXd> out;
  out.reserve(tokens.size());
  for (const auto &t : tokens) {
    auto it = index_.find(t);
    if (it == index_.end()) {
      if (static_cast<int>(index_.size()) >= dimension_) {
        throw Error(ErrorCode::kEmbedderFailure,
                    "one-hot embedder out of dimensions at token '" + t + "'");
      }
      it = index_.emplace(t, static_cast<int>(index_.size())).first;
    }
    out.push_back(Eigen::VectorXd::Unit(dimension_, it->second));
  }
  return out;
}

TableTokenEmbedder TableTokenEmbedder::LoadText(
    const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kEmbedderFailure,
                "cannot open embedding table " + path.string());
  }
  std::map<std::string, Eigen::VectorXd> table;
  std::string line;
  long dim = -1;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string token;
    if (!(ss >> token)) continue;
    std::vector<double> values;
    double x;
    while (ss >> x) values.push_back(x);
    if (dim < 0) dim = static_cast<long>(values.size());
    if (values.empty() || static_cast<long>(values.size()) != dim) {
      throw Error(ErrorCode::kEmbedderFailure,
                  "ragged embedding row for '" + token + "'");
    }
    table[token] = Eigen::Map<Eigen::VectorXd>(values.data(), dim);
  }
  return TableTokenEmbedder(std::move(table));
}

std::vector<Eigen::VectorXd> TableTokenEmbedder::Embed(
    const std::vector<std::string> &tokens) const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(tokens.size());
  for (const auto &t : tokens) {
    auto it = table_.find(t);
    if (it == table_.end()) {
      throw Error(ErrorCode::kEmbedderFailure, "no embedding for '" + t + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

namespace {

std::vector<Eigen::VectorXd> CheckedEmbed(const TokenEmbedder &embedder,
                                          const std::vector<std::string> &t) {
  std::vector<Eigen::VectorXd> v;
  try {
    v = embedder.Embed(t);
  } catch (const Error &) {
    throw;
  } catch (const std::exception &e) {
    throw Error(ErrorCode::kEmbedderFailure, e.what());
  }
  if (v.size() != t.size()) {
    throw Error(ErrorCode::kEmbedderFailure,
                "embedder returned " + std::to_string(v.size()) +
                    " vectors for " + std::to_string(t.size()) + " tokens");
  }
  for (auto &x : v) {
    if (x.size() == 0 || x.size() != v[0].size() || !x.allFinite()) {
      throw Error(ErrorCode::kEmbedderFailure, "bad token embedding");
    }
    double n = x.norm();
    if (n == 0.0) throw Error(ErrorCode::kEmbedderFailure, "zero embedding");
    x /= n;
  }
  return v;
}

}  // namespace

MetricTriple BertScoreTriple(std::string_view candidate,
                             std::string_view reference,
                             const TokenEmbedder &embedder) {
  auto cand = TokenizeLowerAlnum(candidate);
  auto ref = TokenizeLowerAlnum(reference);
  if (cand.empty() || ref.empty()) return {};
  auto cv = CheckedEmbed(embedder, cand);
  auto rv = CheckedEmbed(embedder, ref);
  if (cv[0].size() != rv[0].size()) {
    throw Error(ErrorCode::kEmbedderFailure, "embedding widths differ");
  }
  Eigen::MatrixXd c(cv.size(), cv[0].size()), r(rv.size(), rv[0].size());
  for (size_t i = 0; i < cv.size(); ++i) c.row(i) = cv[i];
  for (size_t i = 0; i < rv.size(); ++i) r.row(i) = rv[i];
  Eigen::MatrixXd sim = c * r.transpose();
  double p = sim.rowwise().maxCoeff().mean();
  double rec = sim.colwise().maxCoeff().mean();
  MetricTriple m = MetricTriple::FromPrecisionRecall(p, rec);
  if (p + rec <= 0.0) m.f1 = 0.0;
  auto clip = [](double x) { return std::clamp(x, 0.0, 1.0); };
  return {clip(m.precision), clip(m.recall), clip(m.f1)};
}

double BertScore(std::string_view candidate, std::string_view reference,
                 const TokenEmbedder &embedder) {
  return BertScoreTriple(candidate, reference, embedder).f1;
}

bool EvalReport::SameScores(const EvalReport &o) const {
  auto same = [](const MetricTriple &a, const MetricTriple &b) {
    return a.precision == b.precision && a.recall == b.recall && a.f1 == b.f1;
  };
  return count == o.count && same(rouge1, o.rouge1) &&
         same(rouge2, o.rouge2) && same(rouge_l, o.rouge_l) &&
         bert_score == o.bert_score && meteor == o.meteor;
}

namespace {

// Sorting before summing makes the mean independent of example order.
double OrderFreeMean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / values.size();
}

}  // namespace

EvalReport EvaluateRun(std::span<const std::string> predictions,
                       std::span<const std::string> references,
                       const TokenEmbedder &embedder) {
  if (predictions.size() != references.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(predictions.size()) + " predictions vs " +
                    std::to_string(references.size()) + " references");
  }
  if (predictions.empty()) throw Error(ErrorCode::kEmptyRun, "no examples");
  constexpr int kColumns = 11;
  std::vector<std::vector<double>> cols(kColumns);
  for (size_t i = 0; i < predictions.size(); ++i) {
    const auto &p = predictions[i];
    const auto &r = references[i];
    MetricTriple triples[3] = {RougeN(p, r, 1), RougeN(p, r, 2), RougeL(p, r)};
    for (int t = 0; t < 3; ++t) {
      cols[3 * t].push_back(triples[t].precision);
      cols[3 * t + 1].push_back(triples[t].recall);
      cols[3 * t + 2].push_back(triples[t].f1);
    }
    cols[9].push_back(BertScore(p, r, embedder));
    cols[10].push_back(Meteor(p, r));
  }
  std::vector<double> mean(kColumns);
  for (int c = 0; c < kColumns; ++c) mean[c] = OrderFreeMean(cols[c]);
  EvalReport report;
  report.count = predictions.size();
  report.rouge1 = {mean[0], mean[1], mean[2]};
  report.rouge2 = {mean[3], mean[4], mean[5]};
  report.rouge_l = {mean[6], mean[7], mean[8]};
  report.bert_score = mean[9];
  report.meteor = mean[10];
  return report;
}

std::string RenderMarkdown(std::span<const EvalReport> reports) {
  std::ostringstream out;
  out << "| Model | R1 P | R1 R | R1 F1 | R2 P | R2 R | R2 F1 | RL P | RL R "
         "| RL F1 | BS | METEOR |\n";
  out << "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  out << std::fixed;
  for (const auto &r : reports) {
    out << "| " << (r.label.empty() ? VariantName(r.flags) : r.label);
    out << std::setprecision(2);
    for (const MetricTriple *t : {&r.rouge1, &r.rouge2, &r.rouge_l}) {
      out << " | " << 100.0 * t->precision << " | " << 100.0 * t->recall
          << " | " << 100.0 * t->f1;
    }
    out << std::setprecision(4) << " | " << r.bert_score << " | " << r.meteor
        << " |\n";
  }
  return out.str();
}

nlohmann::json ReportToJson(const EvalReport &r) {
  auto triple = [](const MetricTriple &t) {
    return nlohmann::json{{"precision", t.precision},
                          {"recall", t.recall},
                          {"f1", t.f1}};
  };
  return {{"label", r.label.empty() ? VariantName(r.flags) : r.label},
          {"use_sc", r.flags.use_sc},
          {"use_sgcr", r.flags.use_sgcr},
          {"count", r.count},
          {"rouge1", triple(r.rouge1)},
          {"rouge2", triple(r.rouge2)},
          {"rougeL", triple(r.rouge_l)},
          {"bert_score", r.bert_score},
          {"meteor", r.meteor}};
}

std::vector<std::string> ReadLines(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMalformedInput, "cannot open " + path.string());
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::string VariantName(AblationFlags flags) {
  if (flags.use_sc && flags.use_sgcr) return "full";
  if (!flags.use_sc && !flags.use_sgcr) return "-SC-Graph -SGCR-Graph";
  return flags.use_sc ? "-SGCR-Graph" : "-SC-Graph";
}

std::vector<GenerationExample> TestExamples(std::span<const Dialogue> test,
                                            int window) {
  std::vector<GenerationExample> out;
  for (const auto &d : test) {
    auto ex = BuildExamples(d, window);
    out.insert(out.end(), ex.begin(), ex.end());
  }
  return out;
}

namespace {

EvalReport ScoreExamples(
    std::span<const GenerationExample> examples, const TokenEmbedder &embedder,
    const std::function<std::string(const GenerationExample &)> &generate) {
  std::vector<std::string> predictions, references;
  for (const auto &ex : examples) {
    predictions.push_back(generate(ex));
    references.push_back(ex.target.text);
  }
  return EvaluateRun(predictions, references, embedder);
}

}  // namespace

std::vector<EvalReport> RunAblation(std::span<const AblationFlags> variants,
                                    const AblationData &data,
                                    const RunConfig &config,
                                    const Providers &providers,
                                    const TokenEmbedder &embedder,
                                    const DecodeConfig &decode) {
  for (size_t i = 0; i < variants.size(); ++i) {
    for (size_t j = 0; j < i; ++j) {
      if (variants[i] == variants[j]) {
        throw Error(ErrorCode::kDuplicateVariant,
                    "variant listed twice: " + VariantName(variants[i]));
      }
    }
  }
  auto examples = TestExamples(data.test, config.model.window);
  std::vector<EvalReport> rows;
  for (const AblationFlags &flags : variants) {
    RunConfig run = config;
    run.train.use_sc = flags.use_sc;
    run.train.use_sgcr = flags.use_sgcr;
    TrainedModel trained = TrainModel(data.train, run, providers);
    ResponseGenerator generator(trained.model, providers, flags);
    EvalReport report =
        ScoreExamples(examples, embedder, [&](const GenerationExample &ex) {
          return generator.Generate(ex.context, decode).text;
        });
    report.flags = flags;
    report.label = VariantName(flags);
    rows.push_back(report);
  }
  return rows;
}

EvalReport EvaluateVanillaBaseline(const AblationData &data,
                                   const RunConfig &config,
                                   const Providers &providers,
                                   const TokenEmbedder &embedder,
                                   const DecodeConfig &decode) {
  auto examples = TestExamples(data.test, config.model.window);
  TrainedBackbone trained = TrainVanilla(data.train, config, providers);
  const TinyDecoder &backbone = *trained.backbone;
  EvalReport report =
      ScoreExamples(examples, embedder, [&](const GenerationExample &ex) {
        PreparedExample prompt =
            PreparePrompt(ex.context, backbone.vocabulary(), config.model,
                          providers, decode.max_tokens);
        auto ids = DecodeTokens(backbone, prompt.tokens, nullptr, decode);
        return backbone.Detokenize(ids);
      });
  report.flags = {false, false};
  report.label = "vanilla backbone";
  return report;
}

}  // namespace sentigraph
