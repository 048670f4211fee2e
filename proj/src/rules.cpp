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

#include "editrep/rules.hpp"

#include <algorithm>
#include <map>
#include <functional>

namespace editrep {

namespace {

const std::map<std::string, std::string, std::less<>>& async_names() {
  static const std::map<std::string, std::string, std::less<>> m = {
      {"Get", "GetAsync"}, {"Read", "ReadAsync"}, {"Write", "WriteAsync"}, {"Send", "SendAsync"}};
  return m;
}

class Rewriter {
 public:
  explicit Rewriter(const SyntaxTree& t) : t_(t), tokens_(t.tokens()), first_(t.size()), last_(t.size()) {
    int k = 0;
    span(t.root(), k);
  }

  TokenSequence of(int n) const {
    return {tokens_.begin() + first_[idx(n)], tokens_.begin() + last_[idx(n)]};
  }

  // Tokens of the whole program with node n's span replaced.
  SyntaxTree replace(int n, const TokenSequence& with) const {
    TokenSequence out(tokens_.begin(), tokens_.begin() + first_[idx(n)]);
    out.insert(out.end(), with.begin(), with.end());
    out.insert(out.end(), tokens_.begin() + last_[idx(n)], tokens_.end());
    return parse(out);
  }

  int first_with(std::size_t production, const std::function<bool(int)>& pred = {}) const {
    for (int n : t_.preorder())
      if (t_.node(n).production == static_cast<int>(production) && (!pred || pred(n))) return n;
    return -1;
  }

 private:
  static std::size_t idx(int n) { return static_cast<std::size_t>(n); }

  void span(int n, int& k) {
    first_[idx(n)] = k;
    if (t_.node(n).is_leaf()) ++k;
    for (int c : t_.node(n).children) span(c, k);
    last_[idx(n)] = k;
  }

  const SyntaxTree& t_;
  TokenSequence tokens_;
  std::vector<int> first_, last_;
};

TokenSequence cat(std::initializer_list<TokenSequence> parts) {
  TokenSequence out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

const std::vector<std::string>& rule_names() {
  static const std::vector<std::string> names = {
      "wrap-call",          "remove-cast",   "swap-statements", "compound-assign",
      "conditional-access", "rename-method", "add-argument",    "inline-lambda"};
  return names;
}

bool is_rule(std::string_view name) {
  const auto& n = rule_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

std::optional<SyntaxTree> apply_rule(std::string_view rule, const SyntaxTree& tree) {
  if (!is_rule(rule)) throw std::invalid_argument("unknown rule: " + std::string(rule));
  if (tree.empty()) return std::nullopt;
  const auto& g = Grammar::toy();
  const Rewriter rw(tree);
  auto child = [&](int n, std::size_t i) { return tree.node(n).children.at(i); };

  if (rule == "wrap-call") {
    const int s = rw.first_with(g.assign);
    if (s < 0) return std::nullopt;
    const int rhs = child(s, 2);
    return rw.replace(rhs, cat({{"Wrap", "("}, rw.of(rhs), {")"}}));
  }
  if (rule == "remove-cast") {
    const int c = rw.first_with(g.cast);
    if (c < 0) return std::nullopt;
    return rw.replace(c, rw.of(child(c, 3)));
  }
  if (rule == "swap-statements") {
    const int r = tree.root();
    if (tree.node(r).production != static_cast<int>(g.root_block)) return std::nullopt;
    const int a = child(r, 0), b = child(r, 2);
    if (subtree_equal(tree, a, tree, b)) return std::nullopt;
    TokenSequence whole = rw.of(r);
    const std::size_t head = rw.of(a).size() + 1 + rw.of(b).size();
    TokenSequence out = cat({rw.of(b), {";"}, rw.of(a)});
    out.insert(out.end(), whole.begin() + static_cast<std::ptrdiff_t>(head), whole.end());
    return parse(out);
  }
  if (rule == "compound-assign") {
    const int s = rw.first_with(g.assign, [&](int n) {
      const int rhs = child(n, 2);
      if (tree.node(rhs).production != static_cast<int>(g.binary)) return false;
      const auto& op = tree.node(child(rhs, 1)).label;
      return op != "==" && subtree_equal(tree, child(n, 0), tree, child(rhs, 0));
    });
    if (s < 0) return std::nullopt;
    const int rhs = child(s, 2);
    return rw.replace(s, cat({rw.of(child(s, 0)), {tree.node(child(rhs, 1)).label + "="}, rw.of(child(rhs, 2))}));
  }
  if (rule == "conditional-access") {
    const int f = rw.first_with(g.field);
    if (f < 0) return std::nullopt;
    return rw.replace(f, cat({rw.of(child(f, 0)), {"?.", tree.node(child(f, 2)).label}}));
  }
  if (rule == "rename-method") {
    const int c = rw.first_with(g.call, [&](int n) {
      return async_names().contains(tree.node(child(n, 0)).label);
    });
    if (c < 0) return std::nullopt;
    const int name = child(c, 0);
    return rw.replace(name, {async_names().find(tree.node(name).label)->second});
  }
  if (rule == "add-argument") {
    const int c = rw.first_with(g.call);
    if (c < 0) return std::nullopt;
    TokenSequence call = rw.of(c);
    call.pop_back();
    if (tree.node(c).children.size() > 3) call.push_back(",");
    call.insert(call.end(), {"0", ")"});
    return rw.replace(c, call);
  }
  // inline-lambda
  const int c = rw.first_with(g.call, [&](int n) {
    const auto& ch = tree.node(n).children;
    if (ch.size() != 4) return false;
    const int lam = ch[2];
    if (tree.node(lam).production != static_cast<int>(g.lambda)) return false;
    const int body = child(lam, 2);
    if (tree.node(body).production != static_cast<int>(g.call) || tree.node(body).children.size() != 4)
      return false;
    const int arg = child(body, 2);
    return tree.node(arg).is_leaf() && tree.node(arg).label == tree.node(child(lam, 0)).label;
  });
  if (c < 0) return std::nullopt;
  const int lam = child(c, 2);
  return rw.replace(lam, {tree.node(child(child(lam, 2), 0)).label});
}

std::optional<TokenSequence> apply_rule(std::string_view rule, const TokenSequence& tokens) {
  auto t = apply_rule(rule, parse(tokens));
  if (!t) return std::nullopt;
  return t->tokens();
}

}  // namespace editrep
