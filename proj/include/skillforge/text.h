// Copyright 2026 The Skillforge Authors.
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

#ifndef SKILLFORGE_TEXT_H_
#define SKILLFORGE_TEXT_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace skillforge {

// A token as a byte span into the source text.
struct TokenSpan {
  size_t begin = 0;
  size_t end = 0;
};

// The toolkit tokenizer. Text is split on whitespace; within each chunk,
// leading and trailing punctuation characters become single-character
// tokens, and brackets split the chunk wherever they occur. So
// "click[Buy Now]" is click [ Buy Now ] and "$32.50." is $ 32.50 .
std::vector<TokenSpan> TokenSpans(std::string_view text);
std::vector<std::string> Tokenize(std::string_view text);
size_t CountTokens(std::string_view text);

// Longest prefix of `text` holding exactly min(max_tokens, CountTokens(text))
// tokens. Re-tokenizing the prefix yields the same leading tokens.
std::string TruncateTokens(std::string_view text, size_t max_tokens);

std::vector<std::string> Split(std::string_view text, std::string_view sep);
std::string Join(const std::vector<std::string> &parts, std::string_view sep);
std::string Trim(std::string_view text);
std::string ToLower(std::string_view text);
bool StartsWith(std::string_view text, std::string_view prefix);
bool EndsWith(std::string_view text, std::string_view suffix);
std::string StripSuffix(std::string_view text, std::string_view suffix);

// "a mug 1" / "an apple 2" -> "mug 1" / "apple 2".
std::string StripArticle(std::string_view text);

// Splits "a mug 1, a knife 2, and a cd 3" into {"mug 1", "knife 2", "cd 3"}.
std::vector<std::string> SplitItemList(std::string_view text);

// Formats "x, y, and z" with articles, as the household observations do.
std::string FormatItemList(const std::vector<std::string> &items);

std::string FormatPrice(double price);

}  // namespace skillforge

#endif  // SKILLFORGE_TEXT_H_
