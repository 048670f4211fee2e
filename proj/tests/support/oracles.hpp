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

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "editrep/align.hpp"
#include "editrep/syntax.hpp"

namespace editrep::testing {

// Textbook prefix-form Levenshtein distance, written independently of align().
inline std::size_t levenshtein(const TokenSequence& a, const TokenSequence& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
  return d[a.size()][b.size()];
}

// Every sequence of length 0..max_len over the alphabet, shortest first.
inline std::vector<TokenSequence> all_sequences(std::size_t max_len, const std::vector<std::string>& alphabet) {
  std::vector<TokenSequence> out{{}};
  std::vector<TokenSequence> frontier{{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<TokenSequence> next;
    for (const auto& s : frontier)
      for (const auto& t : alphabet) {
        auto x = s;
        x.push_back(t);
        next.push_back(x);
      }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

// Brute-force scan: does the change graph connect every descendant leaf of
// before-node b, in order, to exactly the descendant leaves of after-node a?
inline bool leaves_equal_connected(const ProgramGraph& g, const SyntaxTree& before, int b, const SyntaxTree& after,
                                   int a) {
  const int off = static_cast<int>(before.size());
  std::set<std::pair<int, int>> eq;
  for (const auto& e : g.edges)
    if (e.type == EdgeType::Equal && g.nodes[static_cast<std::size_t>(e.src)].terminal)
      eq.insert({e.src, e.dst - off});
  const auto bl = before.leaves_of(b);
  const auto al = after.leaves_of(a);
  if (bl.size() != al.size()) return false;
  for (std::size_t i = 0; i < bl.size(); ++i)
    if (!eq.contains({bl[i], al[i]})) return false;
  return true;
}

// Inner (nonterminal) Equal edges as (before id, after id) pairs.
inline std::set<std::pair<int, int>> inner_equal_edges(const ProgramGraph& g, const SyntaxTree& before) {
  const int off = static_cast<int>(before.size());
  std::set<std::pair<int, int>> inner;
  for (const auto& e : g.edges)
    if (e.type == EdgeType::Equal && !g.nodes[static_cast<std::size_t>(e.src)].terminal)
      inner.insert({e.src, e.dst - off});
  return inner;
}

}  // namespace editrep::testing
