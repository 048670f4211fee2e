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
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "editrep/align.hpp"

namespace editrep {

// ---- lexical classes ----------------------------------------------------
//
// Identifiers start lowercase or have the normalized form V<digits>; member and
// method names start uppercase. Type keywords, operators and punctuation are
// closed classes.

enum class TokenClass { Ident, Member, IntLit, Op, CompOp, Type, Punct, Unknown };

TokenClass classify_token(std::string_view token);
bool is_identifier(std::string_view token);
// Binary operator precedence: == 1, + - 2, * / 3; 0 for non-operators.
int op_precedence(std::string_view op);

// Precedence levels of expression nodes; a slot accepts nodes whose level is at
// least its minimum.
inline constexpr int kLevelLambda = 0;
inline constexpr int kLevelCast = 4;
inline constexpr int kLevelAtom = 5;

// ---- grammar ------------------------------------------------------------

enum class Category { Root, Block, Stmt, Expr };

// What a nonterminal slot admits.
enum class SlotKind {
  Stmt,  // statement nodes only
  Item,  // statement or expression (block element)
  Expr,  // expression nodes, bare identifiers and member names
};

enum class SymbolKind { Slot, Terminal, Fixed, List };

struct Symbol {
  SymbolKind kind = SymbolKind::Fixed;
  SlotKind slot = SlotKind::Expr;
  int min_level = 0;
  bool inherit_level = false;  // min = max(min_level, level required of the parent)
  bool after_operator = false; // min = precedence(previous operator sibling) + 1
  TokenClass terminal = TokenClass::Unknown;
  std::string text;            // fixed token, or list separator
  std::size_t list_min = 0;
};

struct Production {
  std::size_t id = 0;
  Category category = Category::Root;
  std::string lhs;    // frontier name shown in action listings
  std::string label;  // node label; empty when the production creates no node
  std::vector<Symbol> rhs;
  std::string display;

  bool transparent() const { return label.empty(); }
  bool variadic() const;
};

class Grammar {
 public:
  const std::vector<Production>& productions() const { return productions_; }
  const Production& production(std::size_t id) const { return productions_.at(id); }
  std::optional<std::size_t> find(std::string_view display) const;
  std::size_t size() const { return productions_.size(); }
  // Nonterminal node labels, in a fixed order.
  const std::vector<std::string>& labels() const { return labels_; }

  static const Grammar& toy();

  // Production ids used by the parser.
  std::size_t root_block = 0, root_stmt = 0, root_expr = 0;
  std::size_t assign = 0, compound = 0, binary = 0, int_lit = 0, paren = 0, cast = 0,
              call = 0, field = 0, cond_access = 0, lambda = 0;

 private:
  Grammar();
  std::vector<Production> productions_;
  std::vector<std::string> labels_;
};

// ---- trees ----------------------------------------------------------------

struct TreeNode {
  std::string label;
  int production = -1;  // -1 for leaves
  int parent = -1;
  std::vector<int> children;

  bool is_leaf() const { return production < 0; }
};

class SyntaxTree {
 public:
  SyntaxTree() = default;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  int root() const { return root_; }

  int add_node(TreeNode n);
  void attach(int parent, int child);
  void set_root(int id) { root_ = id; }

  TokenSequence tokens() const;
  std::vector<int> leaves() const;           // leaf ids in left-to-right order
  std::vector<int> leaves_of(int id) const;  // leaves under a node
  std::vector<int> preorder() const;
  std::vector<int> preorder_of(int id) const;
  std::size_t subtree_size(int id) const;
  int depth() const;  // internal-node levels; a lone leaf has depth 0

  // Copy of the tree with node ids renumbered in preorder (root = 0).
  SyntaxTree canonical() const;
  // Copies the subtree rooted at src_id of src into this tree; returns new id.
  int copy_subtree(const SyntaxTree& src, int src_id);

  std::string bracketed() const;
  std::string bracketed(int id) const;

 private:
  std::vector<TreeNode> nodes_;
  int root_ = -1;
};

bool subtree_equal(const SyntaxTree& a, int ia, const SyntaxTree& b, int ib);
bool operator==(const SyntaxTree& a, const SyntaxTree& b);

Category node_category(const SyntaxTree& t, int id);
// Precedence level of an expression node (atoms and leaves are kLevelAtom).
int node_level(const SyntaxTree& t, int id);

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(std::size_t position, const std::string& message);
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Statements are separated by ";". A single statement or expression is the
// root itself; two or more form a Block.
SyntaxTree parse(const TokenSequence& tokens);

// Grammar validity, including precedence constraints.
bool is_valid_tree(const SyntaxTree& tree);

// ---- program graphs -------------------------------------------------------

enum class EdgeType { Child, NextToken, Removed, Added, Replaced, Equal };
inline constexpr std::size_t kEdgeTypeCount = 6;
std::string_view edge_type_name(EdgeType t);

enum class Origin { Single, Before, After };

struct GraphNode {
  std::string label;
  Tag tag = Tag::Gap;
  Origin origin = Origin::Single;
  bool terminal = false;
  int tree_node = -1;
};

struct GraphEdge {
  int src = 0;
  int dst = 0;
  EdgeType type = EdgeType::Child;

  bool operator==(const GraphEdge&) const = default;
};

struct ProgramGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  std::size_t count(EdgeType t) const;
  // Node table header followed by src<TAB>edge_type<TAB>dst lines.
  std::string to_text() const;
};

// Nodes are the tree's nodes in id order; Child and NextToken edges only.
ProgramGraph build_graph(const SyntaxTree& tree);

// Before-tree nodes first (ids 0..|before|-1), then after-tree nodes.
ProgramGraph build_change_graph(const SyntaxTree& before, const SyntaxTree& after);

// ---- decoder actions ------------------------------------------------------

enum class ActionKind { ExpandR, GenTerm, TreeCp, Reduce };

struct Action {
  ActionKind kind = ActionKind::Reduce;
  std::size_t production = 0;  // ExpandR
  std::string token;           // GenTerm
  int source_node = -1;        // TreeCp: node id in the source tree
  bool unk = false;            // GenTerm token neither generatable nor copyable

  static Action expand(std::size_t p) { return {ActionKind::ExpandR, p, {}, -1, false}; }
  static Action gen(std::string tok) { return {ActionKind::GenTerm, 0, std::move(tok), -1, false}; }
  static Action copy_tree(int node) { return {ActionKind::TreeCp, 0, {}, node, false}; }
  static Action reduce() { return {ActionKind::Reduce, 0, {}, -1, false}; }

  bool operator==(const Action& o) const {
    return kind == o.kind && production == o.production && token == o.token &&
           source_node == o.source_node;
  }
};

std::string describe(const Action& a, const SyntaxTree* source = nullptr);

struct LinearizeOptions {
  bool enable_treecp = true;
  // Tokens that can be generated from the vocabulary; null means all.
  const std::vector<std::string>* vocabulary = nullptr;
};

// Depth-first, left-to-right action sequence for target. When TreeCp is enabled,
// any target subtree of two or more nodes that also occurs in source is copied
// whole, taking the first match in source preorder.
std::vector<Action> tree_to_actions(const SyntaxTree& target, const SyntaxTree* source,
                                    const LinearizeOptions& options = {});

// Rebuilds a tree from actions (recursive descent over the grammar).
SyntaxTree replay(const std::vector<Action>& actions, const SyntaxTree* source);

// ---- incremental derivation ----------------------------------------------

enum class FrontierKind { Root, Slot, Terminal, Done };

struct Frontier {
  FrontierKind kind = FrontierKind::Done;
  SlotKind slot = SlotKind::Expr;
  int min_level = 0;
  int max_level = kLevelAtom;  // operator slots: level of the left operand
  TokenClass terminal = TokenClass::Unknown;
  bool in_list = false;
  std::size_t list_count = 0;  // elements already in the open list
  bool can_reduce = false;
  int parent_step = -1;  // step whose action created the parent node
  std::size_t type_id = 0;
};

inline constexpr std::size_t kFrontierTypeCount = 32;

// Left-to-right derivation state: the frontier, the partial tree, and the
// legality of every action at the frontier.
class Derivation {
 public:
  explicit Derivation(const SyntaxTree* source = nullptr);

  const Frontier& frontier() const { return frontier_; }
  bool done() const { return frontier_.kind == FrontierKind::Done; }
  std::size_t steps() const { return steps_; }
  const SyntaxTree& tree() const { return tree_; }

  bool can_expand(std::size_t production) const;
  bool can_generate(std::string_view token) const;
  bool can_copy(int source_node) const;
  bool can_reduce() const { return frontier_.can_reduce; }
  bool legal(const Action& a) const;

  // Throws std::logic_error on an illegal action.
  void apply(const Action& a);

  // Completed tree, canonicalized. Throws if the derivation is not done.
  SyntaxTree result() const;

 private:
  struct Entry {
    int node = -1;  // -1 for the transparent root selector
    std::size_t production = 0;
    std::size_t symbol = 0;
    std::size_t list_count = 0;
    int created_step = -1;
    int slot_min = 0;
  };

  void attach_child(int child);
  void advance();
  void compute_frontier();
  bool slot_accepts(Category c, int level) const;

  const SyntaxTree* source_;
  SyntaxTree tree_;
  std::vector<Entry> stack_;
  Frontier frontier_;
  std::size_t steps_ = 0;
  bool started_ = false;
};

}  // namespace editrep
