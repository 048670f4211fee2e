// Copyright 2026 The editrep Authors. All Rights Reserved.
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

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace editrep {

using TokenSequence = std::vector<std::string>;

// Whitespace tokenization; input is assumed pre-tokenized.
TokenSequence split_tokens(std::string_view text);
std::string join_tokens(const TokenSequence& tokens);

// Diff tags. Gap marks an empty token column and never tags a whole entry.
enum class Tag { Gap, Added, Removed, Replaced, Equal };

inline constexpr std::size_t kTagCount = 5;

std::string_view tag_symbol(Tag tag);  // "∅", "+", "-", "<->", "="
Tag tag_from_symbol(std::string_view s);

struct DiffEntry {
  Tag tag = Tag::Equal;
  std::optional<std::string> before;
  std::optional<std::string> after;

  bool operator==(const DiffEntry&) const = default;
};

using AlignedDiff = std::vector<DiffEntry>;

// Minimum-cost alignment with unit cost for insert, delete and replace.
// Ties prefer = over <-> over - over +, consuming the before sequence first.
AlignedDiff align(const TokenSequence& before, const TokenSequence& after);

// Edit distance with substitutions; same cost model as align().
std::size_t edit_distance(const TokenSequence& before, const TokenSequence& after);

std::size_t diff_cost(const AlignedDiff& diff);
TokenSequence project_before(const AlignedDiff& diff);
TokenSequence project_after(const AlignedDiff& diff);

// Mirror image: swaps + with - and the two token columns.
AlignedDiff flip(const AlignedDiff& diff);

// Three tab-separated columns per entry: tag, before, after.
std::string format_diff(const AlignedDiff& diff);

}  // namespace editrep
