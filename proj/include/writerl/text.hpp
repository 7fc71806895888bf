// Copyright 2026 The writerl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace writerl::text {

// Decodes UTF-8; malformed sequences become U+FFFD one byte at a time.
std::u32string decode_utf8(std::string_view utf8);
std::string encode_utf8(std::u32string_view codepoints);

bool is_space(char32_t cp);
// Han ideographs (all extension blocks) plus Hiragana and Katakana.
bool is_cjk(char32_t cp);
// Ideographic and fullwidth punctuation; acts as a word separator.
bool is_cjk_punct(char32_t cp);

std::string_view trim(std::string_view s);

// 64-bit FNV-1a. Stable across platforms; used for prompt bucketing and
// request hashing.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace writerl::text
