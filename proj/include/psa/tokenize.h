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

#ifndef PSA_TOKENIZE_H_
#define PSA_TOKENIZE_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace psa {

// A word token. Offsets are byte offsets into the tokenized string; the
// view aliases that string and lives only as long as it does.
struct Token {
  size_t begin = 0;
  size_t end = 0;
  std::string_view text;
};

// Splits UTF-8 text into maximal runs of word characters. Word characters
// are letters/digits (any non-punctuation code point above U+007F counts as
// a letter) plus the apostrophes ' and U+2019. A run made only of
// apostrophes is not a word. Everything else separates tokens.
std::vector<Token> Tokenize(std::string_view text);

// Number of tokens Tokenize() would return.
size_t WordCount(std::string_view text);

// ASCII lowercase copy; bytes >= 0x80 pass through unchanged.
std::string AsciiLower(std::string_view s);

// True if `text` is empty or contains only ASCII whitespace.
bool IsBlank(std::string_view text);

}  // namespace psa

#endif  // PSA_TOKENIZE_H_
