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

#include "editrep/align.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <stdexcept>

namespace editrep {

TokenSequence split_tokens(std::string_view text) {
  TokenSequence out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join_tokens(const TokenSequence& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::string_view tag_symbol(Tag tag) {
  switch (tag) {
    case Tag::Gap: return "\xE2\x88\x85";  // ∅
    case Tag::Added: return "+";
    case Tag::Removed: return "-";
    case Tag::Replaced: return "<->";
    case Tag::Equal: return "=";
  }
  return "?";
}

Tag tag_from_symbol(std::string_view s) {
  for (Tag t : {Tag::Gap, Tag::Added, Tag::Removed, Tag::Replaced, Tag::Equal})
    if (tag_symbol(t) == s) return t;
  throw std::invalid_argument("unknown diff tag: " + std::string(s));
}

namespace {

// cost[i][j] = edit distance between before[i..] and after[j..]; suffix form so
// the traceback walks forward and can prefer consuming `before` first.
std::vector<std::size_t> suffix_costs(const TokenSequence& a, const TokenSequence& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::size_t> cost((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return cost[i * (m + 1) + j]; };
  for (std::size_t i = n + 1; i-- > 0;) {
    for (std::size_t j = m + 1; j-- > 0;) {
      if (i == n) {
        at(i, j) = m - j;
      } else if (j == m) {
        at(i, j) = n - i;
      } else {
        std::size_t best = at(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
        best = std::min(best, at(i + 1, j) + 1);
        best = std::min(best, at(i, j + 1) + 1);
        at(i, j) = best;
      }
    }
  }
  return cost;
}

}  // namespace

AlignedDiff align(const TokenSequence& before, const TokenSequence& after) {
  const std::size_t n = before.size(), m = after.size();
  const auto cost = suffix_costs(before, after);
  auto at = [&](std::size_t i, std::size_t j) { return cost[i * (m + 1) + j]; };
  AlignedDiff out;
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    const std::size_t here = at(i, j);
    if (i < n && j < m && before[i] == after[j] && at(i + 1, j + 1) == here) {
      out.push_back({Tag::Equal, before[i], after[j]});
      ++i, ++j;
    } else if (i < n && j < m && before[i] != after[j] && at(i + 1, j + 1) + 1 == here) {
      out.push_back({Tag::Replaced, before[i], after[j]});
      ++i, ++j;
    } else if (i < n && at(i + 1, j) + 1 == here) {
      out.push_back({Tag::Removed, before[i], std::nullopt});
      ++i;
    } else {
      out.push_back({Tag::Added, std::nullopt, after[j]});
      ++j;
    }
  }
  return out;
}

std::size_t edit_distance(const TokenSequence& before, const TokenSequence& after) {
  return suffix_costs(before, after)[0];
}

std::size_t diff_cost(const AlignedDiff& diff) {
  return static_cast<std::size_t>(
      std::count_if(diff.begin(), diff.end(), [](const DiffEntry& e) { return e.tag != Tag::Equal; }));
}

TokenSequence project_before(const AlignedDiff& diff) {
  TokenSequence out;
  for (const auto& e : diff)
    if (e.before) out.push_back(*e.before);
  return out;
}

TokenSequence project_after(const AlignedDiff& diff) {
  TokenSequence out;
  for (const auto& e : diff)
    if (e.after) out.push_back(*e.after);
  return out;
}

AlignedDiff flip(const AlignedDiff& diff) {
  AlignedDiff out;
  out.reserve(diff.size());
  for (const auto& e : diff) {
    Tag t = e.tag == Tag::Added ? Tag::Removed : e.tag == Tag::Removed ? Tag::Added : e.tag;
    out.push_back({t, e.after, e.before});
  }
  return out;
}

std::string format_diff(const AlignedDiff& diff) {
  const std::string gap(tag_symbol(Tag::Gap));
  std::string out;
  for (const auto& e : diff) {
    out += tag_symbol(e.tag);
    out += '\t';
    out += e.before.value_or(gap);
    out += '\t';
    out += e.after.value_or(gap);
    out += '\n';
  }
  return out;
}

}  // namespace editrep
