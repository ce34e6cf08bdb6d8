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

#ifndef SENTIGRAPH_TESTS_SUPPORT_H_
#define SENTIGRAPH_TESTS_SUPPORT_H_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sentigraph/config.h"
#include "sentigraph/corpus.h"
#include "sentigraph/error.h"
#include "sentigraph/hash.h"
#include "sentigraph/nn/tensor.h"

namespace sentigraph::testing {

// Twenty four-turn [C, T, C, T] dialogues with distinct vocabulary per
// dialogue, so every therapist turn is learnable from its context.
std::vector<Dialogue> OverfitDialogues(int count = 20);

// Small model and trainer settings for the overfit fixture.
RunConfig TinyRunConfig();

// Random dialogue with t utterances; roles drawn at random (at least one
// role present by construction).
Dialogue RandomDialogue(SplitMix64 &rng, int t);

// Random short lower-case sentence over a small alphabet of words.
std::string RandomSentence(SplitMix64 &rng, int max_words,
                           int vocabulary = 8);

// The code of the sentigraph::Error thrown by f, or nullopt when f returns.
template <typename F>
std::optional<ErrorCode> ThrownCode(F &&f) {
  try {
    f();
  } catch (const Error &e) {
    return e.code();
  }
  return std::nullopt;
}

// Relative error ||g - n|| / (||g|| + ||n||) between the autograd gradient g
// and the central-difference estimate n, over all entries of `params`.
double GradCheckError(const std::vector<nn::Tensor> &params,
                      const std::function<nn::Tensor()> &loss,
                      double step = 1e-5);

nn::Matrix RandomMatrix(SplitMix64 &rng, int rows, int cols,
                        double scale = 1.0);

// Fresh empty directory under the system temp dir.
std::filesystem::path TempDir(const std::string &tag);

}  // namespace sentigraph::testing

#endif  // SENTIGRAPH_TESTS_SUPPORT_H_
