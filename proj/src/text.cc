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

#include "skillforge/text.h"

#include <cctype>
#include <cmath>
#include <cstdio>

namespace skillforge {
namespace {

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool IsPunct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

bool IsBracket(char c) {
  return c == '[' || c == ']' || c == '(' || c == ')' || c == '{' || c == '}';
}

// Emits the tokens of a bracket-free segment [begin, end).
void SegmentTokens(std::string_view text, size_t begin, size_t end, std::vector<TokenSpan> *out) {
  size_t lo = begin;
  size_t hi = end;
  while (lo < hi && IsPunct(text[lo])) {
    out->push_back({lo, lo + 1});
    ++lo;
  }
  std::vector<TokenSpan> trailing;
  while (hi > lo && IsPunct(text[hi - 1])) {
    trailing.push_back({hi - 1, hi});
    --hi;
  }
  if (lo < hi) out->push_back({lo, hi});
  for (auto it = trailing.rbegin(); it != trailing.rend(); ++it) out->push_back(*it);
}

}  // namespace

std::vector<TokenSpan> TokenSpans(std::string_view text) {
  std::vector<TokenSpan> spans;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    while (i < n && IsSpace(text[i])) ++i;
    if (i >= n) break;
    size_t chunk_end = i;
    while (chunk_end < n && !IsSpace(text[chunk_end])) ++chunk_end;
    size_t seg = i;
    for (size_t j = i; j < chunk_end; ++j) {
      if (IsBracket(text[j])) {
        if (seg < j) SegmentTokens(text, seg, j, &spans);
        spans.push_back({j, j + 1});
        seg = j + 1;
      }
    }
    if (seg < chunk_end) SegmentTokens(text, seg, chunk_end, &spans);
    i = chunk_end;
  }
  return spans;
}

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  for (const TokenSpan &s : TokenSpans(text)) {
    tokens.emplace_back(text.substr(s.begin, s.end - s.begin));
  }
  return tokens;
}

size_t CountTokens(std::string_view text) { return TokenSpans(text).size(); }

std::string TruncateTokens(std::string_view text, size_t max_tokens) {
  if (max_tokens == 0) return "";
  const std::vector<TokenSpan> spans = TokenSpans(text);
  if (spans.size() <= max_tokens) return std::string(text);
  return std::string(text.substr(0, spans[max_tokens - 1].end));
}

std::vector<std::string> Split(std::string_view text, std::string_view sep) {
  std::vector<std::string> parts;
  if (sep.empty()) {
    parts.emplace_back(text);
    return parts;
  }
  size_t start = 0;
  while (true) {
    size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(text.substr(start));
      break;
    }
    parts.emplace_back(text.substr(start, pos - start));
    start = pos + sep.size();
  }
  return parts;
}

std::string Join(const std::vector<std::string> &parts, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::string Trim(std::string_view text) {
  size_t lo = 0;
  size_t hi = text.size();
  while (lo < hi && IsSpace(text[lo])) ++lo;
  while (hi > lo && IsSpace(text[hi - 1])) --hi;
  return std::string(text.substr(lo, hi - lo));
}

std::string ToLower(std::string_view text) {
  std::string out(text);
  for (char &c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool StartsWith(std::string_view text, std::string_view prefix) {
  return text.substr(0, prefix.size()) == prefix;
}

bool EndsWith(std::string_view text, std::string_view suffix) {
  return text.size() >= suffix.size() && text.substr(text.size() - suffix.size()) == suffix;
}

std::string StripSuffix(std::string_view text, std::string_view suffix) {
  if (EndsWith(text, suffix)) return std::string(text.substr(0, text.size() - suffix.size()));
  return std::string(text);
}

std::string StripArticle(std::string_view text) {
  std::string t = Trim(text);
  for (std::string_view article : {"a ", "an ", "the ", "some "}) {
    if (StartsWith(t, article)) return t.substr(article.size());
  }
  return t;
}

std::vector<std::string> SplitItemList(std::string_view text) {
  std::vector<std::string> items;
  for (std::string part : Split(text, ", ")) {
    part = Trim(part);
    if (StartsWith(part, "and ")) part = part.substr(4);
    part = StripArticle(part);
    if (!part.empty()) items.push_back(part);
  }
  return items;
}

std::string FormatItemList(const std::vector<std::string> &items) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ", ";
    if (i > 0 && i + 1 == items.size()) out += "and ";
    const char first = items[i].empty() ? 'x' : items[i][0];
    const bool vowel = first == 'a' || first == 'e' || first == 'i' || first == 'o' || first == 'u';
    out += vowel ? "an " : "a ";
    out += items[i];
  }
  return out;
}

std::string FormatPrice(double price) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", price);
  return buf;
}

}  // namespace skillforge
