/*
 * Copyright 2026 The PSA Audit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "psa/tokenize.h"

#include <cstdint>

namespace psa {
namespace {

struct CodePoint {
  uint32_t value = 0;
  size_t length = 1;  // bytes consumed
  bool valid = false;
};

CodePoint DecodeUtf8(std::string_view s, size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) return {b0, 1, true};
  size_t len;
  uint32_t cp;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return {b0, 1, false};
  }
  if (pos + len > s.size()) return {b0, 1, false};
  for (size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) return {b0, 1, false};
    cp = (cp << 6) | (b & 0x3F);
  }
  return {cp, len, true};
}

bool IsApostrophe(uint32_t cp) { return cp == '\'' || cp == 0x2019; }

bool IsWordCodePoint(const CodePoint& c) {
  if (!c.valid) return false;
  const uint32_t cp = c.value;
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
           (cp >= 'A' && cp <= 'Z') || cp == '\'';
  }
  if (IsApostrophe(cp)) return true;
  // Latin-1 controls, symbols and punctuation.
  if (cp <= 0xBF || cp == 0xD7 || cp == 0xF7) return false;
  // General Punctuation, Supplemental Punctuation, CJK punctuation,
  // fullwidth ASCII punctuation, specials.
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;
  if (cp >= 0x2E00 && cp <= 0x2E7F) return false;
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
  if (cp >= 0xFF01 && cp <= 0xFF0F) return false;
  if (cp >= 0xFFF0 && cp <= 0xFFFF) return false;
  if (cp == 0xFEFF) return false;
  // Emoji and pictographs.
  if (cp >= 0x1F000 && cp <= 0x1FAFF) return false;
  return true;
}

}  // namespace

std::vector<Token> Tokenize(std::string_view text) {
  std::vector<Token> tokens;
  size_t pos = 0;
  while (pos < text.size()) {
    CodePoint c = DecodeUtf8(text, pos);
    if (!IsWordCodePoint(c)) {
      pos += c.length;
      continue;
    }
    const size_t begin = pos;
    bool has_alnum = false;
    while (pos < text.size()) {
      c = DecodeUtf8(text, pos);
      if (!IsWordCodePoint(c)) break;
      if (!IsApostrophe(c.value)) has_alnum = true;
      pos += c.length;
    }
    if (has_alnum) {
      tokens.push_back({begin, pos, text.substr(begin, pos - begin)});
    }
  }
  return tokens;
}

size_t WordCount(std::string_view text) { return Tokenize(text).size(); }

std::string AsciiLower(std::string_view s) {
  std::string out(s);
  for (char& ch : out) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  return out;
}

bool IsBlank(std::string_view text) {
  for (char ch : text) {
    if (ch != ' ' && ch != '\t' && ch != '\n' && ch != '\r' && ch != '\f' &&
        ch != '\v') {
      return false;
    }
  }
  return true;
}

}  // namespace psa
