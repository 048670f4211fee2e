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

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "editrep/syntax.hpp"
#include "editrep/tensor.hpp"

namespace editrep::testing {

// Tokens offered for each open or closed terminal class.
struct TokenPool {
  std::map<TokenClass, std::vector<std::string>> tokens;

  static TokenPool standard() {
    return {{{TokenClass::Ident, {"a", "b", "c", "x"}},
             {TokenClass::Member, {"F", "G", "Get"}},
             {TokenClass::IntLit, {"0", "1", "23"}},
             {TokenClass::Op, {"+", "-", "*", "/", "=="}},
             {TokenClass::CompOp, {"+=", "-=", "*=", "/="}},
             {TokenClass::Type, {"int", "long"}}}};
  }
  // Two identifiers and one token for every other class.
  static TokenPool tiny() {
    return {{{TokenClass::Ident, {"a", "b"}},
             {TokenClass::Member, {"F"}},
             {TokenClass::IntLit, {"1"}},
             {TokenClass::Op, {"+", "*"}},
             {TokenClass::CompOp, {"+="}},
             {TokenClass::Type, {"int"}}}};
  }
};

// Every legal action at the frontier over the pool (and source, if any).
inline std::vector<Action> legal_actions(const Derivation& d, const TokenPool& pool,
                                         const SyntaxTree* source) {
  std::vector<Action> out;
  const auto& g = Grammar::toy();
  for (std::size_t p = 0; p < g.size(); ++p)
    if (d.can_expand(p)) out.push_back(Action::expand(p));
  for (const auto& [cls, toks] : pool.tokens)
    for (const auto& t : toks)
      if (d.can_generate(t)) out.push_back(Action::gen(t));
  if (source)
    for (std::size_t n = 0; n < source->size(); ++n)
      if (d.can_copy(static_cast<int>(n))) out.push_back(Action::copy_tree(static_cast<int>(n)));
  if (d.can_reduce()) out.push_back(Action::reduce());
  return out;
}

// Random derivation. Past `soft_size` steps only closing actions are taken:
// identifiers in expression slots, assignments for statements, Reduce in lists.
inline SyntaxTree random_tree(Rng& rng, const TokenPool& pool, std::size_t soft_size,
                              const SyntaxTree* source = nullptr, double copy_bias = 0.0) {
  Derivation d(source);
  const auto& g = Grammar::toy();
  while (!d.done()) {
    auto acts = legal_actions(d, pool, source);
    if (acts.empty()) throw std::logic_error("random_tree reached a dead end");
    if (d.steps() > soft_size) {
      std::vector<Action> closing;
      for (const auto& a : acts) {
        const bool ident = a.kind == ActionKind::GenTerm && classify_token(a.token) == TokenClass::Ident;
        const bool term = a.kind == ActionKind::GenTerm && d.frontier().kind == FrontierKind::Terminal;
        if (ident || term || a.kind == ActionKind::Reduce ||
            (a.kind == ActionKind::ExpandR && a.production == g.assign))
          closing.push_back(a);
      }
      if (!closing.empty()) acts = std::move(closing);
    } else if (copy_bias > 0.0 && rng.uniform() < copy_bias) {
      std::vector<Action> copies;
      for (const auto& a : acts)
        if (a.kind == ActionKind::TreeCp) copies.push_back(a);
      if (!copies.empty()) acts = std::move(copies);
    }
    d.apply(acts[rng.below(acts.size())]);
  }
  return d.result();
}

// Depth-first enumeration of every complete derivation whose tree has at most
// max_levels node levels (a lone leaf has one) and whose lists hold at most
// max_list elements.
inline void enumerate_trees(const TokenPool& pool, int max_levels, std::size_t max_list,
                            const std::function<void(const SyntaxTree&)>& visit) {
  std::function<void(const Derivation&)> rec = [&](const Derivation& d) {
    if (d.done()) {
      visit(d.result());
      return;
    }
    const auto& f = d.frontier();
    for (const auto& a : legal_actions(d, pool, nullptr)) {
      if (f.in_list && a.kind != ActionKind::Reduce && f.list_count >= max_list) continue;
      Derivation next = d;
      next.apply(a);
      if (next.tree().root() >= 0 && next.tree().depth() + 1 > max_levels) continue;
      rec(next);
    }
  };
  rec(Derivation());
}

}  // namespace editrep::testing
