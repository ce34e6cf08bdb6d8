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

#ifndef SENTIGRAPH_TEXT_H_
#define SENTIGRAPH_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace sentigraph {

// Lower-cases ASCII letters and splits on every non-alphanumeric byte.
// Bytes >= 0x80 are treated as word characters so UTF-8 words stay whole.
// This is the tokenization used by the lexicon classifier and by the
// ROUGE/METEOR metrics.
std::vector<std::string> TokenizeLowerAlnum(std::string_view text);

}  // namespace sentigraph

#endif  // SENTIGRAPH_TEXT_H_
