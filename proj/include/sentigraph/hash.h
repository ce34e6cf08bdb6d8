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

#ifndef SENTIGRAPH_HASH_H_
#define SENTIGRAPH_HASH_H_

#include <cstdint>
#include <string>
#include <string_view>

namespace sentigraph {

// 64-bit FNV-1a over the raw bytes. Used wherever a value must be stable
// across processes, compilers and platforms (std::hash is not).
uint64_t Fnv1a64(std::string_view data, uint64_t seed = 0xcbf29ce484222325ULL);

// Lower-case, zero-padded 16-digit hex rendering.
std::string HexString(uint64_t value);

// Small deterministic generator (SplitMix64). Every distribution here is
// computed by hand so streams are identical on every standard library.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t Next();

  // Uniform in [0, 1).
  double Uniform();

  // Uniform in [lo, hi).
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Standard normal via Box-Muller.
  double Normal();

  // Uniform integer in [0, bound).
  uint64_t Below(uint64_t bound);

  uint64_t state() const { return state_; }

 private:
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sentigraph

#endif  // SENTIGRAPH_HASH_H_
