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

#include "editrep/editor_tree.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>

namespace editrep {

struct TreeEditor::Source {
  SyntaxTree tree;
  Var nodes;       // [N, S]
  Var nodes_t;     // [S, N]
  Var memory;      // attention memory: nodes, then context states
  Var keys_t;      // [decoder_hidden, M]
  Var copy_t;      // [S, L]: source leaves, then context positions
  TokenSequence copy_tokens;
  Var summary;
  Var rep;
  std::size_t n_leaves = 0;
  std::array<bool, 8> emittable{};  // by TokenClass: some vocabulary or copy token has it

  std::size_t copy_count() const { return copy_tokens.size(); }
};

TreeEditor::TreeEditor(ParamStore& ps, const ModelConfig& config, const Vocabulary& vocab, Rng& rng)
    : config_(config), vocab_(vocab), n_productions_(Grammar::toy().size()) {
  const std::size_t e = config.embed_dim, h = config.encoder_hidden, s = 2 * h;
  const std::size_t dh = config.decoder_hidden, d = config.edit_dim;
  embed_ = Embedding::create(ps, "tree.embed", vocab.size(), e, rng);
  actions_ = Embedding::create(ps, "tree.action", n_productions_ + vocab.size() + 3, e, rng);
  frontier_ = Embedding::create(ps, "tree.frontier", kFrontierTypeCount, e, rng);
  ggnn_ = Ggnn::create(ps, "tree.ggnn", graph_label_count(vocab), e, s, s, config.ggnn_layers,
                       config.ggnn_steps_per_layer, rng);
  ctx_lstm_ = BiLstm::create(ps, "tree.ctx", e, h, rng);
  ctx_marker_ = &ps.add("tree.ctx_marker", 1, s);
  init_uniform(*ctx_marker_, -0.1, 0.1, rng);
  init_ = Linear::create(ps, "tree.init", 2 * s + d, 2 * dh, rng);
  parent_ = Linear::create(ps, "tree.parent", dh, e, rng);
  cell_ = LstmCell::create(ps, "tree.dec", 3 * e + d + (config.input_feeding ? s : 0), dh, rng);
  attn_ = &ps.add("tree.attn", s, dh);
  init_glorot_uniform(*attn_, rng);
  out_ = Linear::create(ps, "tree.out", dh + s, dh, rng);
  expand_ = Linear::create(ps, "tree.expand", dh, n_productions_, rng);
  gen_ = Linear::create(ps, "tree.gen", dh, vocab.size(), rng);
  copy_ = Linear::create(ps, "tree.copy", dh, s, rng);
  tree_copy_ = Linear::create(ps, "tree.treecp", dh, s, rng);
  reduce_ = Linear::create(ps, "tree.reduce", dh, 1, rng);
}

std::size_t TreeEditor::action_space(const SyntaxTree& source, std::size_t context_len) const {
  return n_productions_ + vocab_.size() + source.leaves().size() + context_len + source.size() + 1;
}

TreeEditor::Source TreeEditor::prepare(Tape& t, const SyntaxTree& source,
                                       const std::optional<TokenSequence>& cb,
                                       const std::optional<TokenSequence>& ca, Var edit_rep) const {
  if (source.empty()) throw std::invalid_argument("tree editor source is empty");
  if (edit_rep.cols() != config_.edit_dim || edit_rep.rows() != 1)
    throw std::invalid_argument("edit representation has " + std::to_string(edit_rep.numel()) +
                                " entries, expected " + std::to_string(config_.edit_dim));
  Source s;
  s.tree = source;
  s.rep = edit_rep;
  const EncodedGraph g = ggnn_encode(t, build_graph(source), vocab_, ggnn_);
  const EncodedSequence ctx = encode_context(t, cb, ca, vocab_, embed_, ctx_lstm_);
  s.nodes = g.states;
  s.nodes_t = transpose(g.states);

  std::vector<std::size_t> leaves;
  for (int leaf : source.leaves()) {
    leaves.push_back(static_cast<std::size_t>(leaf));
    s.copy_tokens.push_back(source.node(leaf).label);
  }
  s.n_leaves = leaves.size();
  Var copy_states = embedding_lookup(g.states, leaves);
  s.memory = g.states;
  if (!ctx.empty()) {
    Var cs = add(ctx.states, t.param(*ctx_marker_));
    copy_states = concat({copy_states, cs}, 0);
    s.memory = concat({g.states, cs}, 0);
    if (cb) s.copy_tokens.insert(s.copy_tokens.end(), cb->begin(), cb->end());
    s.copy_tokens.push_back(Vocabulary::reserved()[Vocabulary::kSep]);
    if (ca) s.copy_tokens.insert(s.copy_tokens.end(), ca->begin(), ca->end());
  }
  for (std::size_t k = Vocabulary::kReserved; k < vocab_.size(); ++k)
    s.emittable[static_cast<std::size_t>(classify_token(vocab_.token(k)))] = true;
  for (const auto& tok : s.copy_tokens) s.emittable[static_cast<std::size_t>(classify_token(tok))] = true;
  s.copy_t = transpose(copy_states);
  s.keys_t = transpose(matmul(s.memory, t.param(*attn_)));
  s.summary = concat({g.summary, ctx.summary, edit_rep}, 1);
  return s;
}

TreeEditor::State TreeEditor::initial(Tape& t, const Source& s) const {
  const std::size_t dh = config_.decoder_hidden;
  Var hc = tanh(init_(t, s.summary));
  State st;
  st.lstm = {slice(hc, 1, 0, dh), slice(hc, 1, dh, 2 * dh)};
  if (config_.input_feeding) st.feed = t.zeros(1, s.memory.cols());
  return st;
}

TreeEditor::Step TreeEditor::step(Tape& t, const Source& s, const State& st, const Derivation& d,
                                  std::size_t prev_action) const {
  const Frontier& f = d.frontier();
  Var parent_h = f.parent_step >= 0 ? st.hs.at(static_cast<std::size_t>(f.parent_step))
                                     : t.zeros(1, config_.decoder_hidden);
  std::vector<Var> in = {actions_.row(t, prev_action), frontier_.row(t, f.type_id),
                         parent_(t, parent_h), s.rep};
  if (config_.input_feeding) in.push_back(st.feed);
  Step out;
  out.next = st;
  out.next.lstm = cell_.step(t, concat(in, 1), st.lstm);
  Var h = out.next.lstm.h;
  out.next.hs.push_back(h);
  Var ctx = matmul(softmax(matmul(h, s.keys_t)), s.memory);
  if (config_.input_feeding) out.next.feed = ctx;
  Var o = tanh(out_(t, concat({h, ctx}, 1)));
  out.logits = concat({expand_(t, o), gen_(t, o), matmul(copy_(t, o), s.copy_t),
                       matmul(tree_copy_(t, o), s.nodes_t), reduce_(t, o)},
                      1);
  return out;
}

std::vector<std::size_t> TreeEditor::legal_actions(const Source& s, const Derivation& d) const {
  const std::size_t p = n_productions_, v = vocab_.size(), l = s.copy_count();
  std::vector<std::size_t> out;
  // Productions whose terminals could never be emitted would strand the decoder.
  const auto& g = Grammar::toy();
  for (std::size_t k = 0; k < p; ++k) {
    if (!d.can_expand(k)) continue;
    const auto& rhs = g.production(k).rhs;
    if (std::all_of(rhs.begin(), rhs.end(), [&](const Symbol& sym) {
          return sym.kind != SymbolKind::Terminal || s.emittable[static_cast<std::size_t>(sym.terminal)];
        }))
      out.push_back(k);
  }
  const FrontierKind fk = d.frontier().kind;
  if (fk == FrontierKind::Slot || fk == FrontierKind::Terminal) {
    for (std::size_t k = Vocabulary::kReserved; k < v; ++k)
      if (d.can_generate(vocab_.token(k))) out.push_back(p + k);
    for (std::size_t j = 0; j < l; ++j)
      if (d.can_generate(s.copy_tokens[j])) out.push_back(p + v + j);
  }
  if (config_.tree_copy && fk == FrontierKind::Slot)
    for (std::size_t n = 0; n < s.tree.size(); ++n)
      if (d.can_copy(static_cast<int>(n))) out.push_back(p + v + l + n);
  if (d.can_reduce()) out.push_back(p + v + l + s.tree.size());
  return out;
}

Action TreeEditor::action_at(const Source& s, std::size_t index) const {
  const std::size_t p = n_productions_, v = vocab_.size(), l = s.copy_count();
  if (index < p) return Action::expand(index);
  if (index < p + v) return Action::gen(vocab_.token(index - p));
  if (index < p + v + l) return Action::gen(s.copy_tokens[index - p - v]);
  if (index < p + v + l + s.tree.size()) return Action::copy_tree(static_cast<int>(index - p - v - l));
  return Action::reduce();
}

std::size_t TreeEditor::input_id(const Source&, const Action& a) const {
  const std::size_t p = n_productions_, v = vocab_.size();
  switch (a.kind) {
    case ActionKind::ExpandR: return a.production;
    case ActionKind::GenTerm: return p + vocab_.index(a.token);
    case ActionKind::TreeCp: return p + v;
    case ActionKind::Reduce: return p + v + 1;
  }
  return p + v + 2;
}

Var TreeEditor::loglik(Tape& t, const EditPair& pair, Var edit_rep, LoglikStats* stats,
                       std::vector<TreeStepTrace>* trace) const {
  const SyntaxTree source = parse(pair.before);
  const SyntaxTree target = parse(pair.after);
  LinearizeOptions lo;
  lo.enable_treecp = config_.tree_copy;
  lo.vocabulary = &vocab_.tokens();
  const auto gold_actions = tree_to_actions(target, &source, lo);

  const Source s = prepare(t, source, pair.context_before, pair.context_after, edit_rep);
  State st = initial(t, s);
  Derivation d(&s.tree);
  const std::size_t p = n_productions_, v = vocab_.size(), l = s.copy_count();
  std::size_t prev = p + v + 2;
  Var total;
  for (const Action& a : gold_actions) {
    Step out = step(t, s, st, d, prev);
    std::vector<std::size_t> legal = legal_actions(s, d);
    std::vector<std::size_t> gold;
    switch (a.kind) {
      case ActionKind::ExpandR:
        // A gold production may need a terminal that only the UNK path scores.
        if (std::find(legal.begin(), legal.end(), a.production) == legal.end() && d.can_expand(a.production))
          legal.insert(std::upper_bound(legal.begin(), legal.end(), a.production), a.production);
        gold.push_back(a.production);
        break;
      case ActionKind::TreeCp: gold.push_back(p + v + l + static_cast<std::size_t>(a.source_node)); break;
      case ActionKind::Reduce: gold.push_back(p + v + l + s.tree.size()); break;
      case ActionKind::GenTerm: {
        const std::size_t k = vocab_.index(a.token);
        if (k != Vocabulary::kUnk) gold.push_back(p + k);
        for (std::size_t j = 0; j < l; ++j)
          if (s.copy_tokens[j] == a.token) gold.push_back(p + v + j);
        if (gold.empty()) {
          gold.push_back(p + Vocabulary::kUnk);
          legal.push_back(p + Vocabulary::kUnk);
          if (stats) ++stats->unk;
        }
        break;
      }
    }
    std::vector<std::size_t> where;
    for (auto g : gold) {
      auto it = std::find(legal.begin(), legal.end(), g);
      if (it == legal.end()) throw std::logic_error("gold action " + describe(a, &s.tree) + " is not legal");
      where.push_back(static_cast<std::size_t>(it - legal.begin()));
    }
    Var probs = softmax(gather(out.logits, legal));
    Var lp = log(sum(gather(probs, where)));
    total = total.valid() ? add(total, lp) : lp;
    if (trace) {
      TreeStepTrace tr;
      tr.distribution.assign(out.logits.numel(), 0.0);
      tr.legal.assign(out.logits.numel(), false);
      const auto pv = probs.value();
      for (std::size_t i = 0; i < legal.size(); ++i) {
        tr.distribution[legal[i]] = pv[i];
        tr.legal[legal[i]] = true;
      }
      tr.gold = gold;
      tr.action = a;
      trace->push_back(std::move(tr));
    }
    if (stats) ++stats->steps;
    d.apply(a);
    st = std::move(out.next);
    prev = input_id(s, a);
  }
  if (!d.done()) throw std::logic_error("gold action sequence left the derivation incomplete");
  return total;
}

std::vector<TreeCandidate> TreeEditor::decode(const SyntaxTree& source,
                                              const std::optional<TokenSequence>& context_before,
                                              const std::optional<TokenSequence>& context_after,
                                              std::span<const double> edit_rep, std::size_t beam_size,
                                              std::size_t max_actions) const {
  if (beam_size < 1) throw std::invalid_argument("beam size must be at least 1");
  Tape t;
  Var rep = t.constant(1, edit_rep.size(), {edit_rep.begin(), edit_rep.end()});
  const Source s = prepare(t, source, context_before, context_after, rep);
  const std::size_t p = n_productions_, v = vocab_.size();

  struct Hyp {
    Derivation d;
    State state;
    std::vector<Action> actions;
    double score = 0.0;
    std::size_t prev = 0;
  };
  std::vector<Hyp> active;
  active.push_back({Derivation(&s.tree), initial(t, s), {}, 0.0, p + v + 2});
  std::vector<TreeCandidate> finished;

  for (std::size_t n = 0; n < max_actions && !active.empty(); ++n) {
    struct Expansion {
      double score;
      std::size_t hyp;
      Action action;
      std::string key;
    };
    std::vector<Expansion> all;
    std::vector<Step> steps;
    for (std::size_t hi = 0; hi < active.size(); ++hi) {
      const Hyp& hyp = active[hi];
      steps.push_back(step(t, s, hyp.state, hyp.d, hyp.prev));
      const auto legal = legal_actions(s, hyp.d);
      std::vector<double> logits;
      const auto lv = steps.back().logits.value();
      double mx = -1e300;
      for (auto i : legal) mx = std::max(mx, lv[i]);
      double z = 0.0;
      for (auto i : legal) z += std::exp(lv[i] - mx);
      // Token-level choices with the same text are one action.
      std::map<std::string, std::pair<Action, double>> mass;
      for (auto i : legal) {
        Action a = action_at(s, i);
        const double pr = std::exp(lv[i] - mx) / z;
        const std::string key = describe(a, &s.tree);
        auto [it, fresh] = mass.try_emplace(key, a, 0.0);
        it->second.second += pr;
      }
      std::vector<Expansion> local;
      for (auto& [key, ap] : mass)
        if (ap.second > 0.0) local.push_back({hyp.score + std::log(ap.second), hi, ap.first, key});
      const std::size_t keep = std::min(beam_size, local.size());
      std::partial_sort(local.begin(), local.begin() + static_cast<std::ptrdiff_t>(keep), local.end(),
                        [](const Expansion& a, const Expansion& b) {
                          return a.score != b.score ? a.score > b.score : a.key < b.key;
                        });
      all.insert(all.end(), local.begin(), local.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const Expansion& a, const Expansion& b) { return a.score > b.score; });
    std::vector<Hyp> next;
    for (const auto& e : all) {
      if (next.size() >= beam_size) break;
      const Hyp& parent = active[e.hyp];
      Hyp h{parent.d, steps[e.hyp].next, parent.actions, e.score, input_id(s, e.action)};
      h.d.apply(e.action);
      h.actions.push_back(e.action);
      if (h.d.done()) {
        SyntaxTree tree = h.d.result();
        TokenSequence toks = tree.tokens();
        finished.push_back({std::move(tree), std::move(toks), std::move(h.actions), e.score});
        continue;
      }
      next.push_back(std::move(h));
    }
    active = std::move(next);
    if (finished.size() >= beam_size) {
      std::stable_sort(finished.begin(), finished.end(),
                       [](const TreeCandidate& a, const TreeCandidate& b) { return a.score > b.score; });
      if (active.empty() || active.front().score <= finished[beam_size - 1].score) break;
    }
  }
  if (finished.empty())
    throw std::runtime_error("no complete tree within " + std::to_string(max_actions) + " actions");
  std::stable_sort(finished.begin(), finished.end(),
                   [](const TreeCandidate& a, const TreeCandidate& b) { return a.score > b.score; });
  if (finished.size() > beam_size) finished.resize(beam_size);
  return finished;
}

SyntaxTree TreeEditor::sample(const SyntaxTree& source, std::span<const double> edit_rep,
                              Sampler& sampler, std::size_t max_actions,
                              std::vector<TreeStepTrace>* trace) const {
  Tape t;
  Var rep = t.constant(1, edit_rep.size(), {edit_rep.begin(), edit_rep.end()});
  const Source s = prepare(t, source, std::nullopt, std::nullopt, rep);
  State st = initial(t, s);
  Derivation d(&s.tree);
  std::size_t prev = n_productions_ + vocab_.size() + 2;
  for (std::size_t n = 0; n < max_actions && !d.done(); ++n) {
    Step out = step(t, s, st, d, prev);
    const auto legal = legal_actions(s, d);
    Var probs = softmax(gather(out.logits, legal));
    const auto pv = probs.value();
    const std::size_t pick = sampler.choose(legal, pv);
    const Action a = action_at(s, legal.at(pick));
    if (trace) {
      TreeStepTrace tr;
      tr.distribution.assign(out.logits.numel(), 0.0);
      tr.legal.assign(out.logits.numel(), false);
      for (std::size_t i = 0; i < legal.size(); ++i) {
        tr.distribution[legal[i]] = pv[i];
        tr.legal[legal[i]] = true;
      }
      tr.gold = {legal[pick]};
      tr.action = a;
      trace->push_back(std::move(tr));
    }
    d.apply(a);
    st = std::move(out.next);
    prev = input_id(s, a);
  }
  if (!d.done()) throw std::runtime_error("sampled derivation exceeded " + std::to_string(max_actions) + " actions");
  return d.result();
}

}  // namespace editrep
