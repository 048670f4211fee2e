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

#include "editrep/syntax.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_set>

namespace editrep {

// ---- lexical classes ----------------------------------------------------

namespace {

constexpr std::array<std::string_view, 5> kTypes = {"int", "long", "float", "bool", "string"};
constexpr std::array<std::string_view, 5> kOps = {"+", "-", "*", "/", "=="};
constexpr std::array<std::string_view, 4> kCompOps = {"+=", "-=", "*=", "/="};
constexpr std::array<std::string_view, 8> kPunct = {"=", ";", "(", ")", ".", "?.", ",", "=>"};

template <std::size_t N>
bool one_of(const std::array<std::string_view, N>& set, std::string_view s) {
  return std::find(set.begin(), set.end(), s) != set.end();
}

bool all_alnum(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c) || c == '_'; });
}

bool normalized_name(std::string_view s) {
  return s.size() >= 2 && s[0] == 'V' &&
         std::all_of(s.begin() + 1, s.end(), [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace

TokenClass classify_token(std::string_view t) {
  if (t.empty()) return TokenClass::Unknown;
  if (one_of(kTypes, t)) return TokenClass::Type;
  if (one_of(kOps, t)) return TokenClass::Op;
  if (one_of(kCompOps, t)) return TokenClass::CompOp;
  if (one_of(kPunct, t)) return TokenClass::Punct;
  if (std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); }))
    return TokenClass::IntLit;
  if (!all_alnum(t)) return TokenClass::Unknown;
  if (normalized_name(t)) return TokenClass::Ident;
  const auto c = static_cast<unsigned char>(t[0]);
  if (std::islower(c) || c == '_') return TokenClass::Ident;
  if (std::isupper(c)) return TokenClass::Member;
  return TokenClass::Unknown;
}

bool is_identifier(std::string_view token) { return classify_token(token) == TokenClass::Ident; }

int op_precedence(std::string_view op) {
  if (op == "==") return 1;
  if (op == "+" || op == "-") return 2;
  if (op == "*" || op == "/") return 3;
  return 0;
}

// ---- grammar ------------------------------------------------------------

bool Production::variadic() const {
  return std::any_of(rhs.begin(), rhs.end(), [](const Symbol& s) { return s.kind == SymbolKind::List; });
}

namespace {

Symbol slot(SlotKind k, int min_level = 0) {
  Symbol s;
  s.kind = SymbolKind::Slot;
  s.slot = k;
  s.min_level = min_level;
  return s;
}

Symbol terminal(TokenClass c) {
  Symbol s;
  s.kind = SymbolKind::Terminal;
  s.terminal = c;
  return s;
}

Symbol fixed(std::string text) {
  Symbol s;
  s.kind = SymbolKind::Fixed;
  s.text = std::move(text);
  return s;
}

Symbol list(SlotKind k, std::string sep, std::size_t min_count) {
  Symbol s;
  s.kind = SymbolKind::List;
  s.slot = k;
  s.text = std::move(sep);
  s.list_min = min_count;
  return s;
}

std::string_view class_name(TokenClass c) {
  switch (c) {
    case TokenClass::Ident: return "Ident";
    case TokenClass::Member: return "Member";
    case TokenClass::IntLit: return "IntLit";
    case TokenClass::Op: return "Op";
    case TokenClass::CompOp: return "CompOp";
    case TokenClass::Type: return "Type";
    case TokenClass::Punct: return "Punct";
    case TokenClass::Unknown: return "Unknown";
  }
  return "?";
}

std::string_view slot_name(SlotKind k) {
  switch (k) {
    case SlotKind::Stmt: return "Stmt";
    case SlotKind::Item: return "Item";
    case SlotKind::Expr: return "Expr";
  }
  return "?";
}

}  // namespace

Grammar::Grammar() {
  auto add = [&](Category cat, std::string lhs, std::string label, std::vector<Symbol> rhs) {
    Production p;
    p.id = productions_.size();
    p.category = cat;
    p.lhs = std::move(lhs);
    p.label = std::move(label);
    p.rhs = std::move(rhs);
    std::string disp = p.lhs + "\xE2\x86\x92";  // →
    if (p.transparent()) {
      disp += std::string(slot_name(p.rhs[0].slot));
    } else if (p.category == Category::Block) {
      disp += p.label;
    } else {
      if (p.lhs != p.label) disp = p.label + "\xE2\x86\x92";
      bool first = true;
      for (const auto& s : p.rhs) {
        if (!first) disp += ' ';
        first = false;
        switch (s.kind) {
          case SymbolKind::Slot: disp += slot_name(s.slot); break;
          case SymbolKind::Terminal: disp += class_name(s.terminal); break;
          case SymbolKind::Fixed: disp += s.text; break;
          case SymbolKind::List:
            disp += std::string(slot_name(s.slot)) + "*" + s.text;
            break;
        }
      }
    }
    p.display = std::move(disp);
    productions_.push_back(std::move(p));
    return productions_.back().id;
  };

  root_block = add(Category::Block, "root", "Block", {list(SlotKind::Item, ";", 2)});
  root_stmt = add(Category::Root, "root", "", {slot(SlotKind::Stmt)});
  root_expr = add(Category::Root, "root", "", {slot(SlotKind::Expr, 0)});
  assign = add(Category::Stmt, "Stmt", "AssignStmt",
               {slot(SlotKind::Expr, 1), fixed("="), slot(SlotKind::Expr, 0)});
  compound = add(Category::Stmt, "Stmt", "CompoundAssign",
                 {slot(SlotKind::Expr, 1), terminal(TokenClass::CompOp), slot(SlotKind::Expr, 0)});
  {
    Symbol left = slot(SlotKind::Expr, 1);
    left.inherit_level = true;
    Symbol right = slot(SlotKind::Expr, 0);
    right.after_operator = true;
    binary = add(Category::Expr, "Expr", "Expr", {left, terminal(TokenClass::Op), right});
  }
  int_lit = add(Category::Expr, "Expr", "Expr", {terminal(TokenClass::IntLit)});
  paren = add(Category::Expr, "Expr", "Paren", {fixed("("), slot(SlotKind::Expr, 0), fixed(")")});
  cast = add(Category::Expr, "Expr", "Cast",
             {fixed("("), terminal(TokenClass::Type), fixed(")"), slot(SlotKind::Expr, kLevelCast)});
  call = add(Category::Expr, "Expr", "Call",
             {terminal(TokenClass::Member), fixed("("), list(SlotKind::Expr, ",", 0), fixed(")")});
  field = add(Category::Expr, "Expr", "FieldAccess",
              {slot(SlotKind::Expr, kLevelAtom), fixed("."), terminal(TokenClass::Member)});
  cond_access = add(Category::Expr, "Expr", "CondAccess",
                    {slot(SlotKind::Expr, kLevelAtom), fixed("?."), terminal(TokenClass::Member)});
  lambda = add(Category::Expr, "Expr", "Lambda",
               {terminal(TokenClass::Ident), fixed("=>"), slot(SlotKind::Expr, 0)});

  for (const auto& p : productions_)
    if (!p.transparent() && std::find(labels_.begin(), labels_.end(), p.label) == labels_.end())
      labels_.push_back(p.label);
}

const Grammar& Grammar::toy() {
  static const Grammar g;
  return g;
}

std::optional<std::size_t> Grammar::find(std::string_view display) const {
  for (const auto& p : productions_)
    if (p.display == display) return p.id;
  return std::nullopt;
}

namespace {

// Level a production's node can take (binary: its highest operator level).
int production_level(const Grammar& g, std::size_t p) {
  if (p == g.binary) return 3;
  if (p == g.lambda) return kLevelLambda;
  if (p == g.cast) return kLevelCast;
  return kLevelAtom;
}

}  // namespace

// ---- trees ----------------------------------------------------------------

int SyntaxTree::add_node(TreeNode n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size() - 1);
}

void SyntaxTree::attach(int parent, int child) {
  nodes_.at(static_cast<std::size_t>(parent)).children.push_back(child);
  nodes_.at(static_cast<std::size_t>(child)).parent = parent;
}

std::vector<int> SyntaxTree::preorder_of(int id) const {
  std::vector<int> out;
  std::vector<int> stack{id};
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    out.push_back(n);
    const auto& ch = node(n).children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

std::vector<int> SyntaxTree::preorder() const {
  if (root_ < 0) return {};
  return preorder_of(root_);
}

std::vector<int> SyntaxTree::leaves_of(int id) const {
  std::vector<int> out;
  for (int n : preorder_of(id))
    if (node(n).is_leaf()) out.push_back(n);
  return out;
}

std::vector<int> SyntaxTree::leaves() const {
  if (root_ < 0) return {};
  return leaves_of(root_);
}

TokenSequence SyntaxTree::tokens() const {
  TokenSequence out;
  for (int n : leaves()) out.push_back(node(n).label);
  return out;
}

std::size_t SyntaxTree::subtree_size(int id) const { return preorder_of(id).size(); }

int SyntaxTree::depth() const {
  if (root_ < 0) return 0;
  std::function<int(int)> rec = [&](int n) -> int {
    if (node(n).is_leaf()) return 0;
    int d = 0;
    for (int c : node(n).children) d = std::max(d, rec(c));
    return d + 1;
  };
  return rec(root_);
}

SyntaxTree SyntaxTree::canonical() const {
  SyntaxTree out;
  if (root_ < 0) return out;
  out.root_ = out.copy_subtree(*this, root_);
  return out;
}

int SyntaxTree::copy_subtree(const SyntaxTree& src, int src_id) {
  const auto& s = src.node(src_id);
  TreeNode n;
  n.label = s.label;
  n.production = s.production;
  int id = add_node(std::move(n));
  for (int c : s.children) attach(id, copy_subtree(src, c));
  return id;
}

std::string SyntaxTree::bracketed(int id) const {
  const auto& n = node(id);
  if (n.is_leaf()) return n.label;
  std::string out = n.label + "[";
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    if (i) out += ' ';
    out += bracketed(n.children[i]);
  }
  return out + "]";
}

std::string SyntaxTree::bracketed() const { return root_ < 0 ? std::string() : bracketed(root_); }

bool subtree_equal(const SyntaxTree& a, int ia, const SyntaxTree& b, int ib) {
  const auto& na = a.node(ia);
  const auto& nb = b.node(ib);
  if (na.label != nb.label || na.production != nb.production ||
      na.children.size() != nb.children.size())
    return false;
  for (std::size_t i = 0; i < na.children.size(); ++i)
    if (!subtree_equal(a, na.children[i], b, nb.children[i])) return false;
  return true;
}

bool operator==(const SyntaxTree& a, const SyntaxTree& b) {
  if (a.empty() || b.empty()) return a.empty() && b.empty();
  return subtree_equal(a, a.root(), b, b.root());
}

Category node_category(const SyntaxTree& t, int id) {
  const auto& n = t.node(id);
  if (n.is_leaf()) return Category::Expr;
  return Grammar::toy().production(static_cast<std::size_t>(n.production)).category;
}

int node_level(const SyntaxTree& t, int id) {
  const auto& g = Grammar::toy();
  const auto& n = t.node(id);
  if (n.is_leaf()) return kLevelAtom;
  const auto p = static_cast<std::size_t>(n.production);
  if (p == g.binary) return n.children.size() > 1 ? op_precedence(t.node(n.children[1]).label) : 3;
  return production_level(g, p);
}

SyntaxError::SyntaxError(std::size_t position, const std::string& message)
    : std::runtime_error("syntax error at token " + std::to_string(position) + ": " + message),
      position_(position) {}

// ---- parser -----------------------------------------------------------

namespace {

class Parser {
 public:
  explicit Parser(const TokenSequence& tokens) : toks_(tokens), g_(Grammar::toy()) {}

  SyntaxTree run() {
    if (toks_.empty()) throw SyntaxError(0, "empty input");
    std::vector<int> items{item()};
    while (peek() == ";") {
      ++pos_;
      items.push_back(item());
    }
    if (pos_ != toks_.size()) throw SyntaxError(pos_, "unexpected '" + toks_[pos_] + "'");
    if (items.size() == 1) {
      tree_.set_root(items[0]);
    } else {
      int block = make(g_.root_block);
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) tree_.attach(block, leaf(";"));
        tree_.attach(block, items[i]);
      }
      tree_.set_root(block);
    }
    return tree_.canonical();
  }

 private:
  std::string_view peek(std::size_t ahead = 0) const {
    return pos_ + ahead < toks_.size() ? std::string_view(toks_[pos_ + ahead]) : std::string_view();
  }

  const std::string& take() {
    if (pos_ >= toks_.size()) throw SyntaxError(pos_, "unexpected end of input");
    return toks_[pos_++];
  }

  void expect(std::string_view t) {
    if (peek() != t)
      throw SyntaxError(pos_, "expected '" + std::string(t) + "'" +
                                  (pos_ < toks_.size() ? " but found '" + toks_[pos_] + "'" : ""));
    ++pos_;
  }

  int leaf(const std::string& tok) {
    TreeNode n;
    n.label = tok;
    return tree_.add_node(std::move(n));
  }

  int make(std::size_t production) {
    TreeNode n;
    n.label = g_.production(production).label;
    n.production = static_cast<int>(production);
    return tree_.add_node(std::move(n));
  }

  int node(std::size_t production, std::initializer_list<int> children) {
    int id = make(production);
    for (int c : children) tree_.attach(id, c);
    return id;
  }

  int item() {
    int e = expr(0);
    const auto next = peek();
    if (next == "=" || classify_token(next) == TokenClass::CompOp) {
      if (node_level(tree_, e) < 1) throw SyntaxError(pos_, "cannot assign to a lambda");
      const bool plain = next == "=";
      int op = leaf(take());
      int rhs = expr(0);
      return node(plain ? g_.assign : g_.compound, {e, op, rhs});
    }
    return e;
  }

  int expr(int min_level) {
    if (min_level <= kLevelLambda && classify_token(peek()) == TokenClass::Ident &&
        peek(1) == "=>") {
      int param = leaf(take());
      int arrow = leaf(take());
      return node(g_.lambda, {param, arrow, expr(0)});
    }
    if (min_level >= kLevelCast) return unary(min_level);
    return binary_expr(std::max(min_level, 1));
  }

  int binary_expr(int min_prec) {
    int left = unary(kLevelCast);
    while (true) {
      const int p = op_precedence(peek());
      if (p == 0 || p < min_prec) break;
      int op = leaf(take());
      int right = binary_expr(p + 1);
      left = node(g_.binary, {left, op, right});
    }
    return left;
  }

  int unary(int min_level) {
    if (min_level <= kLevelCast && peek() == "(" && classify_token(peek(1)) == TokenClass::Type &&
        peek(2) == ")") {
      int open = leaf(take());
      int type = leaf(take());
      int close = leaf(take());
      return node(g_.cast, {open, type, close, unary(kLevelCast)});
    }
    return postfix();
  }

  int postfix() {
    int e = atom();
    while (peek() == "." || peek() == "?.") {
      const bool cond = peek() == "?.";
      int dot = leaf(take());
      if (classify_token(peek()) != TokenClass::Member)
        throw SyntaxError(pos_, "expected member name after '" + std::string(cond ? "?." : ".") + "'");
      int member = leaf(take());
      e = node(cond ? g_.cond_access : g_.field, {e, dot, member});
    }
    return e;
  }

  int atom() {
    const auto t = peek();
    switch (classify_token(t)) {
      case TokenClass::Ident:
        return leaf(take());
      case TokenClass::Member: {
        int name = leaf(take());
        if (peek() != "(") return name;
        int call = make(g_.call);
        tree_.attach(call, name);
        tree_.attach(call, leaf(take()));
        if (peek() != ")") {
          tree_.attach(call, expr(0));
          while (peek() == ",") {
            tree_.attach(call, leaf(take()));
            tree_.attach(call, expr(0));
          }
        }
        if (peek() != ")") throw SyntaxError(pos_, "expected ')' to close call");
        tree_.attach(call, leaf(take()));
        return call;
      }
      case TokenClass::IntLit:
        return node(g_.int_lit, {leaf(take())});
      default:
        break;
    }
    if (t == "(") {
      int open = leaf(take());
      int inner = expr(0);
      if (peek() != ")") throw SyntaxError(pos_, "expected ')'");
      int close = leaf(take());
      return node(g_.paren, {open, inner, close});
    }
    if (pos_ >= toks_.size()) throw SyntaxError(pos_, "unexpected end of input");
    throw SyntaxError(pos_, "unexpected '" + std::string(t) + "'");
  }

  const TokenSequence& toks_;
  const Grammar& g_;
  SyntaxTree tree_;
  std::size_t pos_ = 0;
};

}  // namespace

SyntaxTree parse(const TokenSequence& tokens) { return Parser(tokens).run(); }

bool is_valid_tree(const SyntaxTree& tree) {
  if (tree.empty()) return false;
  try {
    auto actions = tree_to_actions(tree, nullptr, {.enable_treecp = false});
    Derivation d;
    for (const auto& a : actions) {
      if (!d.legal(a)) return false;
      d.apply(a);
    }
    return d.done() && d.result() == tree;
  } catch (const std::exception&) {
    return false;
  }
}

// ---- graphs -------------------------------------------------------------

std::string_view edge_type_name(EdgeType t) {
  switch (t) {
    case EdgeType::Child: return "Child";
    case EdgeType::NextToken: return "NextToken";
    case EdgeType::Removed: return "Removed";
    case EdgeType::Added: return "Added";
    case EdgeType::Replaced: return "Replaced";
    case EdgeType::Equal: return "Equal";
  }
  return "?";
}

std::size_t ProgramGraph::count(EdgeType t) const {
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(), [t](const GraphEdge& e) { return e.type == t; }));
}

std::string ProgramGraph::to_text() const {
  std::ostringstream os;
  os << "# nodes " << nodes.size() << "\n";
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    const char* origin = n.origin == Origin::Single ? "single" : n.origin == Origin::Before ? "before" : "after";
    os << i << '\t' << n.label << '\t' << tag_symbol(n.tag) << '\t' << origin << '\n';
  }
  os << "# edges " << edges.size() << "\n";
  for (const auto& e : edges) os << e.src << '\t' << edge_type_name(e.type) << '\t' << e.dst << '\n';
  return os.str();
}

namespace {

void add_tree(ProgramGraph& g, const SyntaxTree& t, Origin origin) {
  const int offset = static_cast<int>(g.nodes.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& n = t.nodes()[i];
    g.nodes.push_back({n.label, Tag::Gap, origin, n.is_leaf(), static_cast<int>(i)});
  }
  if (t.empty()) return;
  for (int n : t.preorder())
    for (int c : t.node(n).children) g.edges.push_back({offset + n, offset + c, EdgeType::Child});
  const auto leaves = t.leaves();
  for (std::size_t i = 1; i < leaves.size(); ++i)
    g.edges.push_back({offset + leaves[i - 1], offset + leaves[i], EdgeType::NextToken});
}

// [first, last) leaf-order span of every node.
std::vector<std::pair<int, int>> leaf_spans(const SyntaxTree& t) {
  std::vector<std::pair<int, int>> span(t.size(), {0, 0});
  int counter = 0;
  std::function<void(int)> rec = [&](int n) {
    span[static_cast<std::size_t>(n)].first = counter;
    if (t.node(n).is_leaf()) ++counter;
    for (int c : t.node(n).children) rec(c);
    span[static_cast<std::size_t>(n)].second = counter;
  };
  rec(t.root());
  return span;
}

}  // namespace

ProgramGraph build_graph(const SyntaxTree& tree) {
  ProgramGraph g;
  add_tree(g, tree, Origin::Single);
  return g;
}

ProgramGraph build_change_graph(const SyntaxTree& before, const SyntaxTree& after) {
  ProgramGraph g;
  add_tree(g, before, Origin::Before);
  add_tree(g, after, Origin::After);
  const int off = static_cast<int>(before.size());
  const auto bl = before.leaves();
  const auto al = after.leaves();
  const auto diff = align(before.tokens(), after.tokens());

  // Leaf position (in leaf order) of each diff entry's tokens.
  std::vector<int> bpos(diff.size(), -1), apos(diff.size(), -1);
  {
    int bi = 0, ai = 0;
    for (std::size_t k = 0; k < diff.size(); ++k) {
      if (diff[k].before) bpos[k] = bi++;
      if (diff[k].after) apos[k] = ai++;
    }
  }
  std::vector<int> equal_partner(bl.size(), -1);
  for (std::size_t k = 0; k < diff.size(); ++k) {
    const auto& e = diff[k];
    const int b = bpos[k] >= 0 ? bl[static_cast<std::size_t>(bpos[k])] : -1;
    const int a = apos[k] >= 0 ? off + al[static_cast<std::size_t>(apos[k])] : -1;
    switch (e.tag) {
      case Tag::Equal:
        g.nodes[static_cast<std::size_t>(b)].tag = Tag::Equal;
        g.nodes[static_cast<std::size_t>(a)].tag = Tag::Equal;
        g.edges.push_back({b, a, EdgeType::Equal});
        equal_partner[static_cast<std::size_t>(bpos[k])] = apos[k];
        break;
      case Tag::Replaced:
        g.nodes[static_cast<std::size_t>(b)].tag = Tag::Replaced;
        g.nodes[static_cast<std::size_t>(a)].tag = Tag::Replaced;
        g.edges.push_back({b, a, EdgeType::Replaced});
        break;
      case Tag::Removed: {
        g.nodes[static_cast<std::size_t>(b)].tag = Tag::Removed;
        int anchor = off + after.root();
        for (std::size_t j = k + 1; j < diff.size(); ++j)
          if (apos[j] >= 0) {
            anchor = off + al[static_cast<std::size_t>(apos[j])];
            break;
          }
        g.edges.push_back({b, anchor, EdgeType::Removed});
        break;
      }
      case Tag::Added: {
        g.nodes[static_cast<std::size_t>(a)].tag = Tag::Added;
        int anchor = before.root();
        for (std::size_t j = k + 1; j < diff.size(); ++j)
          if (bpos[j] >= 0) {
            anchor = bl[static_cast<std::size_t>(bpos[j])];
            break;
          }
        g.edges.push_back({anchor, a, EdgeType::Added});
        break;
      }
      case Tag::Gap:
        break;
    }
  }

  // Inner nodes: Equal iff every descendant leaf is Equal-connected, in order,
  // to exactly the leaves of the partner.
  const auto bspan = leaf_spans(before);
  const auto aspan = leaf_spans(after);
  std::map<std::pair<int, int>, std::vector<int>> after_by_span;
  for (int n : after.preorder())
    if (!after.node(n).is_leaf()) after_by_span[aspan[static_cast<std::size_t>(n)]].push_back(n);
  for (int n : before.preorder()) {
    if (before.node(n).is_leaf()) continue;
    const auto [lo, hi] = bspan[static_cast<std::size_t>(n)];
    bool ok = hi > lo;
    for (int k = lo; ok && k < hi; ++k) {
      const int p = equal_partner[static_cast<std::size_t>(k)];
      ok = p >= 0 && (k == lo || p == equal_partner[static_cast<std::size_t>(k - 1)] + 1);
    }
    if (!ok) continue;
    const std::pair<int, int> target{equal_partner[static_cast<std::size_t>(lo)],
                                     equal_partner[static_cast<std::size_t>(hi - 1)] + 1};
    auto it = after_by_span.find(target);
    if (it == after_by_span.end()) continue;
    for (int m : it->second) {
      g.edges.push_back({n, off + m, EdgeType::Equal});
      g.nodes[static_cast<std::size_t>(n)].tag = Tag::Equal;
      g.nodes[static_cast<std::size_t>(off + m)].tag = Tag::Equal;
    }
  }
  return g;
}

// ---- actions ------------------------------------------------------------

std::string describe(const Action& a, const SyntaxTree* source) {
  const auto& g = Grammar::toy();
  switch (a.kind) {
    case ActionKind::ExpandR: return "ExpandR(" + g.production(a.production).display + ")";
    case ActionKind::GenTerm: return "GenTerm(" + a.token + (a.unk ? ", unk)" : ")");
    case ActionKind::TreeCp: {
      std::string s = "TreeCp(" + std::to_string(a.source_node);
      if (source && a.source_node >= 0 && static_cast<std::size_t>(a.source_node) < source->size())
        s += ": " + source->bracketed(a.source_node);
      return s + ")";
    }
    case ActionKind::Reduce: return "Reduce";
  }
  return "?";
}

namespace {

class Linearizer {
 public:
  Linearizer(const SyntaxTree& target, const SyntaxTree* source, const LinearizeOptions& opt)
      : t_(target), src_(source), opt_(opt), g_(Grammar::toy()) {
    if (opt_.vocabulary) vocab_.insert(opt_.vocabulary->begin(), opt_.vocabulary->end());
    if (src_ && !src_->empty()) {
      for (int n : src_->leaves()) copyable_.insert(src_->node(n).label);
      src_order_ = src_->preorder();
    }
  }

  std::vector<Action> run() {
    if (t_.empty()) throw std::invalid_argument("tree_to_actions on empty tree");
    const int r = t_.root();
    switch (node_category(t_, r)) {
      case Category::Block:
        out_.push_back(Action::expand(g_.root_block));
        children(r);
        break;
      case Category::Stmt:
        out_.push_back(Action::expand(g_.root_stmt));
        fill(r);
        break;
      default:
        out_.push_back(Action::expand(g_.root_expr));
        fill(r);
        break;
    }
    return std::move(out_);
  }

 private:
  void gen(const std::string& tok) {
    Action a = Action::gen(tok);
    a.unk = opt_.vocabulary && !vocab_.contains(tok) && !copyable_.contains(tok);
    out_.push_back(std::move(a));
  }

  void fill(int id) {
    const auto& n = t_.node(id);
    if (n.is_leaf()) {
      gen(n.label);
      return;
    }
    if (opt_.enable_treecp && src_) {
      for (int s : src_order_) {
        if (src_->node(s).is_leaf()) continue;
        if (subtree_equal(*src_, s, t_, id)) {
          out_.push_back(Action::copy_tree(s));
          return;
        }
      }
    }
    out_.push_back(Action::expand(static_cast<std::size_t>(n.production)));
    children(id);
  }

  void children(int id) {
    const auto& n = t_.node(id);
    const auto& p = g_.production(static_cast<std::size_t>(n.production));
    std::size_t cur = 0;
    for (std::size_t si = 0; si < p.rhs.size(); ++si) {
      const auto& s = p.rhs[si];
      switch (s.kind) {
        case SymbolKind::Fixed: ++cur; break;
        case SymbolKind::Terminal: gen(t_.node(n.children.at(cur++)).label); break;
        case SymbolKind::Slot: fill(n.children.at(cur++)); break;
        case SymbolKind::List: {
          const std::size_t trailing = p.rhs.size() - si - 1;
          const std::size_t end = n.children.size() - trailing;
          for (std::size_t k = 0; cur < end; ++k) {
            if (k) ++cur;  // separator
            fill(n.children.at(cur++));
          }
          out_.push_back(Action::reduce());
          break;
        }
      }
    }
  }

  const SyntaxTree& t_;
  const SyntaxTree* src_;
  const LinearizeOptions& opt_;
  const Grammar& g_;
  std::unordered_set<std::string> vocab_, copyable_;
  std::vector<int> src_order_;
  std::vector<Action> out_;
};

class Replayer {
 public:
  Replayer(const std::vector<Action>& actions, const SyntaxTree* source)
      : acts_(actions), src_(source), g_(Grammar::toy()) {}

  SyntaxTree run() {
    const Action& a = next();
    if (a.kind != ActionKind::ExpandR) throw std::invalid_argument("replay: first action must expand root");
    int root;
    if (a.production == g_.root_block) {
      root = make(a.production);
      expand(root, a.production);
    } else if (a.production == g_.root_stmt || a.production == g_.root_expr) {
      root = fill();
    } else {
      throw std::invalid_argument("replay: first action is not a root production");
    }
    if (pos_ != acts_.size()) throw std::invalid_argument("replay: trailing actions");
    tree_.set_root(root);
    return tree_.canonical();
  }

 private:
  const Action& next() {
    if (pos_ >= acts_.size()) throw std::invalid_argument("replay: action sequence ends early");
    return acts_[pos_++];
  }

  int make(std::size_t p) {
    TreeNode n;
    n.label = g_.production(p).label;
    n.production = static_cast<int>(p);
    return tree_.add_node(std::move(n));
  }

  int leaf(const std::string& tok) {
    TreeNode n;
    n.label = tok;
    return tree_.add_node(std::move(n));
  }

  int fill() {
    const Action& a = next();
    switch (a.kind) {
      case ActionKind::ExpandR: {
        int id = make(a.production);
        expand(id, a.production);
        return id;
      }
      case ActionKind::GenTerm: return leaf(a.token);
      case ActionKind::TreeCp:
        if (!src_) throw std::invalid_argument("replay: TreeCp without a source tree");
        return tree_.copy_subtree(*src_, a.source_node);
      case ActionKind::Reduce: break;
    }
    throw std::invalid_argument("replay: Reduce where a subtree was expected");
  }

  void expand(int id, std::size_t p) {
    for (const auto& s : g_.production(p).rhs) {
      switch (s.kind) {
        case SymbolKind::Fixed: tree_.attach(id, leaf(s.text)); break;
        case SymbolKind::Terminal: {
          const Action& a = next();
          if (a.kind != ActionKind::GenTerm) throw std::invalid_argument("replay: expected GenTerm");
          tree_.attach(id, leaf(a.token));
          break;
        }
        case SymbolKind::Slot: tree_.attach(id, fill()); break;
        case SymbolKind::List:
          for (std::size_t k = 0;; ++k) {
            if (pos_ < acts_.size() && acts_[pos_].kind == ActionKind::Reduce) {
              ++pos_;
              break;
            }
            if (k) tree_.attach(id, leaf(s.text));
            tree_.attach(id, fill());
          }
          break;
      }
    }
  }

  const std::vector<Action>& acts_;
  const SyntaxTree* src_;
  const Grammar& g_;
  SyntaxTree tree_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<Action> tree_to_actions(const SyntaxTree& target, const SyntaxTree* source,
                                    const LinearizeOptions& options) {
  return Linearizer(target, source, options).run();
}

SyntaxTree replay(const std::vector<Action>& actions, const SyntaxTree* source) {
  return Replayer(actions, source).run();
}

// ---- derivation -----------------------------------------------------------

Derivation::Derivation(const SyntaxTree* source) : source_(source) {
  frontier_.kind = FrontierKind::Root;
  frontier_.type_id = 0;
}

bool Derivation::slot_accepts(Category c, int level) const {
  if (frontier_.kind != FrontierKind::Slot) return false;
  switch (frontier_.slot) {
    case SlotKind::Stmt: return c == Category::Stmt;
    case SlotKind::Item: return c == Category::Stmt || c == Category::Expr;
    case SlotKind::Expr: return c == Category::Expr && level >= frontier_.min_level;
  }
  return false;
}

bool Derivation::can_expand(std::size_t p) const {
  const auto& g = Grammar::toy();
  if (p >= g.size()) return false;
  if (frontier_.kind == FrontierKind::Root)
    return p == g.root_block || p == g.root_stmt || p == g.root_expr;
  const auto& prod = g.production(p);
  if (prod.lhs == "root") return false;
  return slot_accepts(prod.category, production_level(g, p));
}

bool Derivation::can_generate(std::string_view token) const {
  const TokenClass c = classify_token(token);
  if (frontier_.kind == FrontierKind::Slot)
    return frontier_.slot != SlotKind::Stmt && (c == TokenClass::Ident || c == TokenClass::Member);
  if (frontier_.kind != FrontierKind::Terminal || c != frontier_.terminal) return false;
  if (c == TokenClass::Op) {
    const int p = op_precedence(token);
    return p >= frontier_.min_level && p <= frontier_.max_level;
  }
  return true;
}

bool Derivation::can_copy(int s) const {
  if (!source_ || source_->empty() || frontier_.kind != FrontierKind::Slot) return false;
  if (s < 0 || static_cast<std::size_t>(s) >= source_->size()) return false;
  if (source_->node(s).is_leaf()) return false;
  const Category c = node_category(*source_, s);
  if (c == Category::Block) return false;
  return slot_accepts(c, node_level(*source_, s));
}

bool Derivation::legal(const Action& a) const {
  switch (a.kind) {
    case ActionKind::ExpandR: return can_expand(a.production);
    case ActionKind::GenTerm: return can_generate(a.token);
    case ActionKind::TreeCp: return can_copy(a.source_node);
    case ActionKind::Reduce: return can_reduce();
  }
  return false;
}

void Derivation::attach_child(int child) {
  Entry& top = stack_.back();
  const auto& sym = Grammar::toy().production(top.production).rhs[top.symbol];
  if (sym.kind == SymbolKind::List) {
    if (top.list_count > 0) {
      TreeNode sep;
      sep.label = sym.text;
      tree_.attach(top.node, tree_.add_node(std::move(sep)));
    }
    ++top.list_count;
  } else {
    ++top.symbol;
  }
  if (top.node < 0)
    tree_.set_root(child);
  else
    tree_.attach(top.node, child);
}

void Derivation::apply(const Action& a) {
  if (done()) throw std::logic_error("derivation already complete");
  if (!legal(a)) throw std::logic_error("illegal action " + describe(a) + " at frontier");
  const auto& g = Grammar::toy();
  const int step = static_cast<int>(steps_);
  if (frontier_.kind == FrontierKind::Root) {
    started_ = true;
    if (g.production(a.production).transparent()) {
      stack_.push_back({-1, a.production, 0, 0, step, 0});
    } else {
      TreeNode n;
      n.label = g.production(a.production).label;
      n.production = static_cast<int>(a.production);
      int id = tree_.add_node(std::move(n));
      tree_.set_root(id);
      stack_.push_back({id, a.production, 0, 0, step, 0});
    }
  } else {
    switch (a.kind) {
      case ActionKind::ExpandR: {
        TreeNode n;
        n.label = g.production(a.production).label;
        n.production = static_cast<int>(a.production);
        int id = tree_.add_node(std::move(n));
        const int slot_min = frontier_.min_level;
        attach_child(id);
        stack_.push_back({id, a.production, 0, 0, step, slot_min});
        break;
      }
      case ActionKind::GenTerm: {
        TreeNode n;
        n.label = a.token;
        attach_child(tree_.add_node(std::move(n)));
        break;
      }
      case ActionKind::TreeCp:
        attach_child(tree_.copy_subtree(*source_, a.source_node));
        break;
      case ActionKind::Reduce:
        ++stack_.back().symbol;
        break;
    }
  }
  ++steps_;
  advance();
  compute_frontier();
}

void Derivation::advance() {
  const auto& g = Grammar::toy();
  while (!stack_.empty()) {
    Entry& e = stack_.back();
    const auto& rhs = g.production(e.production).rhs;
    if (e.symbol >= rhs.size()) {
      stack_.pop_back();
      continue;
    }
    if (rhs[e.symbol].kind == SymbolKind::Fixed) {
      TreeNode n;
      n.label = rhs[e.symbol].text;
      tree_.attach(e.node, tree_.add_node(std::move(n)));
      ++e.symbol;
      continue;
    }
    break;
  }
}

void Derivation::compute_frontier() {
  Frontier f;
  if (stack_.empty()) {
    f.kind = started_ ? FrontierKind::Done : FrontierKind::Root;
    f.type_id = started_ ? 1 : 0;
    frontier_ = f;
    return;
  }
  const Entry& e = stack_.back();
  const auto& sym = Grammar::toy().production(e.production).rhs[e.symbol];
  f.parent_step = e.created_step;
  switch (sym.kind) {
    case SymbolKind::Slot:
    case SymbolKind::List:
      f.kind = FrontierKind::Slot;
      f.slot = sym.slot;
      f.min_level = sym.min_level;
      if (sym.inherit_level) f.min_level = std::max(sym.min_level, e.slot_min);
      if (sym.after_operator) {
        const auto& ch = tree_.node(e.node).children;
        f.min_level = op_precedence(tree_.node(ch.back()).label) + 1;
      }
      if (sym.kind == SymbolKind::List) {
        f.in_list = true;
        f.list_count = e.list_count;
        f.can_reduce = e.list_count >= sym.list_min;
      }
      f.type_id = 2 + static_cast<std::size_t>(sym.slot) * 6 + static_cast<std::size_t>(f.min_level);
      break;
    case SymbolKind::Terminal:
      f.kind = FrontierKind::Terminal;
      f.terminal = sym.terminal;
      if (sym.terminal == TokenClass::Op) {
        f.min_level = std::max(1, e.slot_min);
        f.max_level = node_level(tree_, tree_.node(e.node).children.front());
      }
      f.type_id = 20 + static_cast<std::size_t>(sym.terminal);
      break;
    case SymbolKind::Fixed:
      throw std::logic_error("frontier on a fixed token");
  }
  frontier_ = f;
}

SyntaxTree Derivation::result() const {
  if (!done()) throw std::logic_error("derivation incomplete");
  return tree_.canonical();
}

}  // namespace editrep
