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

#include "editrep/editor_seq.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace editrep {

struct SeqEditor::Source {
  Var states;    // [n, S], x− positions then context positions
  Var states_t;  // [S, n]
  Var keys_t;    // [decoder_hidden, n]
  Var summary;   // encoder summaries ‖ edit_rep
  Var rep;
  TokenSequence tokens;  // token at each source position
  std::vector<std::size_t> copyable;  // positions other than the SEP marker
};

namespace {

// Softmax over the columns in `keep`; every other column gets exactly 0.
Var masked_softmax(Var logits, std::span<const std::size_t> keep) {
  const std::size_t n = logits.cols();
  if (keep.size() == n) return softmax(logits);
  const std::vector<double> ones(keep.size(), 1.0);
  return transpose(scatter_add_rows(transpose(softmax(gather(logits, keep))), keep, ones, n));
}

}  // namespace

SeqEditor::SeqEditor(ParamStore& ps, const ModelConfig& config, const Vocabulary& vocab, Rng& rng)
    : config_(config), vocab_(vocab) {
  const std::size_t e = config.embed_dim, h = config.encoder_hidden, s = 2 * h;
  const std::size_t dh = config.decoder_hidden, d = config.edit_dim;
  embed_ = Embedding::create(ps, "seq.embed", vocab.size(), e, rng);
  src_lstm_ = BiLstm::create(ps, "seq.src", e, h, rng);
  ctx_lstm_ = BiLstm::create(ps, "seq.ctx", e, h, rng);
  ctx_marker_ = &ps.add("seq.ctx_marker", 1, s);
  // PAD, START, GAP and SEP are never emitted.
  for (std::size_t k = 0; k < vocab.size(); ++k)
    if (k != Vocabulary::kPad && k != Vocabulary::kStart && k != Vocabulary::kGap && k != Vocabulary::kSep)
      emittable_.push_back(k);
  init_uniform(*ctx_marker_, -0.1, 0.1, rng);
  init_ = Linear::create(ps, "seq.init", 2 * s + d, 2 * dh, rng);
  cell_ = LstmCell::create(ps, "seq.dec", e + d + (config.input_feeding ? s : 0), dh, rng);
  attn_ = &ps.add("seq.attn", s, dh);
  init_glorot_uniform(*attn_, rng);
  out_ = Linear::create(ps, "seq.out", dh + s, dh, rng);
  gen_ = Linear::create(ps, "seq.gen", dh, vocab.size(), rng);
  copy_ = Linear::create(ps, "seq.copy", dh, s, rng);
  gate_ = Linear::create(ps, "seq.gate", dh, 1, rng);
}

SeqEditor::Source SeqEditor::prepare(Tape& t, const TokenSequence& before,
                                     const std::optional<TokenSequence>& cb,
                                     const std::optional<TokenSequence>& ca, Var edit_rep) const {
  if (before.empty()) throw std::invalid_argument("sequence editor input is empty");
  if (edit_rep.cols() != config_.edit_dim || edit_rep.rows() != 1)
    throw std::invalid_argument("edit representation has " + std::to_string(edit_rep.numel()) +
                                " entries, expected " + std::to_string(config_.edit_dim));
  Source s;
  s.rep = edit_rep;
  const auto ids = vocab_.encode(before);
  const EncodedSequence src = encode_sequence(t, ids, embed_, src_lstm_);
  const EncodedSequence ctx = encode_context(t, cb, ca, vocab_, embed_, ctx_lstm_);
  s.tokens = before;
  s.states = src.states;
  if (!ctx.empty()) {
    s.states = concat({src.states, add(ctx.states, t.param(*ctx_marker_))}, 0);
    if (cb) s.tokens.insert(s.tokens.end(), cb->begin(), cb->end());
    s.tokens.push_back(Vocabulary::reserved()[Vocabulary::kSep]);
    if (ca) s.tokens.insert(s.tokens.end(), ca->begin(), ca->end());
  }
  for (std::size_t j = 0; j < s.tokens.size(); ++j)
    if (ctx.empty() || j != before.size() + (cb ? cb->size() : 0)) s.copyable.push_back(j);
  s.states_t = transpose(s.states);
  s.keys_t = transpose(matmul(s.states, t.param(*attn_)));
  s.summary = concat({src.summary, ctx.summary, edit_rep}, 1);
  return s;
}

SeqEditor::State SeqEditor::initial(Tape& t, const Source& s) const {
  const std::size_t dh = config_.decoder_hidden;
  Var hc = tanh(init_(t, s.summary));
  State st;
  st.lstm = {slice(hc, 1, 0, dh), slice(hc, 1, dh, 2 * dh)};
  if (config_.input_feeding) st.feed = t.zeros(1, s.states.cols());
  return st;
}

SeqEditor::Step SeqEditor::step(Tape& t, const Source& s, const State& st, std::size_t prev) const {
  Var x = config_.input_feeding ? concat({embed_.row(t, prev), s.rep, st.feed}, 1)
                                : concat({embed_.row(t, prev), s.rep}, 1);
  Step out;
  out.next.lstm = cell_.step(t, x, st.lstm);
  Var h = out.next.lstm.h;
  out.attention = softmax(matmul(h, s.keys_t));
  Var ctx = matmul(out.attention, s.states);
  if (config_.input_feeding) out.next.feed = ctx;
  Var o = tanh(out_(t, concat({h, ctx}, 1)));
  Var p_gen = masked_softmax(gen_(t, o), emittable_);
  Var p_copy = masked_softmax(matmul(copy_(t, o), s.states_t), s.copyable);
  out.gate = sigmoid(gate_(t, o));
  out.dist = concat({scale_by(out.gate, p_gen), scale_by(one_minus(out.gate), p_copy)}, 1);
  return out;
}

Var SeqEditor::loglik(Tape& t, const EditPair& pair, Var edit_rep, LoglikStats* stats,
                      std::vector<SeqStepTrace>* trace) const {
  const Source s = prepare(t, pair.before, pair.context_before, pair.context_after, edit_rep);
  State st = initial(t, s);
  const std::size_t v = vocab_.size();
  std::size_t prev = Vocabulary::kStart;
  Var total;
  for (std::size_t i = 0; i <= pair.after.size(); ++i) {
    Step out = step(t, s, st, prev);
    std::vector<std::size_t> gold;
    std::size_t next;
    if (i == pair.after.size()) {
      gold.push_back(Vocabulary::kEnd);
      next = Vocabulary::kEnd;
    } else {
      const std::string& y = pair.after[i];
      next = vocab_.index(y);
      if (next != Vocabulary::kUnk) gold.push_back(next);
      for (std::size_t j = 0; j < s.tokens.size(); ++j)
        if (s.tokens[j] == y) gold.push_back(v + j);
      if (gold.empty()) {
        gold.push_back(Vocabulary::kUnk);
        if (stats) ++stats->unk;
      }
    }
    Var lp = log(sum(gather(out.dist, gold)));
    total = total.valid() ? add(total, lp) : lp;
    if (trace) {
      const auto d = out.dist.value(), a = out.attention.value();
      trace->push_back({{d.begin(), d.end()}, {a.begin(), a.end()}, out.gate.item(), gold});
    }
    if (stats) ++stats->steps;
    st = out.next;
    prev = next;
  }
  return total;
}

std::vector<SeqCandidate> SeqEditor::decode(const TokenSequence& before,
                                            const std::optional<TokenSequence>& context_before,
                                            const std::optional<TokenSequence>& context_after,
                                            std::span<const double> edit_rep, std::size_t beam_size,
                                            std::size_t max_len) const {
  if (beam_size < 1) throw std::invalid_argument("beam size must be at least 1");
  Tape t;
  Var rep = t.constant(1, edit_rep.size(), {edit_rep.begin(), edit_rep.end()});
  const Source s = prepare(t, before, context_before, context_after, rep);
  const std::size_t v = vocab_.size();

  struct Hyp {
    TokenSequence tokens;
    double score = 0.0;
    State state;
    std::size_t prev = Vocabulary::kStart;
  };
  std::vector<Hyp> active{{{}, 0.0, initial(t, s), Vocabulary::kStart}};
  std::vector<SeqCandidate> finished;
  const std::string& end_token = vocab_.token(Vocabulary::kEnd);

  for (std::size_t len = 0; len <= max_len && !active.empty(); ++len) {
    struct Expansion {
      double score;
      std::size_t hyp;
      std::string token;
    };
    std::vector<Expansion> all;
    std::vector<Step> steps;
    for (std::size_t hi = 0; hi < active.size(); ++hi) {
      const Hyp& hyp = active[hi];
      steps.push_back(step(t, s, hyp.state, hyp.prev));
      const auto d = steps.back().dist.value();
      std::map<std::string, double> mass;
      mass[end_token] = d[Vocabulary::kEnd];
      if (len < max_len) {
        for (auto k : emittable_)
          if (k != Vocabulary::kEnd) mass[vocab_.token(k)] += d[k];
        for (auto j : s.copyable) mass[s.tokens[j]] += d[v + j];
      }
      std::vector<Expansion> local;
      for (const auto& [tok, p] : mass)
        if (p > 0.0) local.push_back({hyp.score + std::log(p), hi, tok});
      const std::size_t keep = std::min(beam_size, local.size());
      std::partial_sort(local.begin(), local.begin() + static_cast<std::ptrdiff_t>(keep), local.end(),
                        [](const Expansion& a, const Expansion& b) {
                          return a.score != b.score ? a.score > b.score : a.token < b.token;
                        });
      all.insert(all.end(), local.begin(), local.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    std::stable_sort(all.begin(), all.end(), [](const Expansion& a, const Expansion& b) {
      return a.score > b.score;
    });
    std::vector<Hyp> next;
    for (const auto& e : all) {
      if (next.size() >= beam_size) break;
      const Hyp& parent = active[e.hyp];
      if (e.token == end_token) {
        finished.push_back({parent.tokens, e.score, true});
        continue;
      }
      Hyp h;
      h.tokens = parent.tokens;
      h.tokens.push_back(e.token);
      h.score = e.score;
      h.state = steps[e.hyp].next;
      h.prev = vocab_.index(e.token);
      next.push_back(std::move(h));
    }
    active = std::move(next);
    if (finished.size() >= beam_size) {
      std::stable_sort(finished.begin(), finished.end(),
                       [](const SeqCandidate& a, const SeqCandidate& b) { return a.score > b.score; });
      const double kth = finished[beam_size - 1].score;
      // Log-probabilities only fall as tokens append, so no active hypothesis can overtake.
      if (active.empty() || active.front().score <= kth) break;
    }
  }
  std::stable_sort(finished.begin(), finished.end(),
                   [](const SeqCandidate& a, const SeqCandidate& b) { return a.score > b.score; });
  if (finished.empty()) {
    for (auto& h : active) finished.push_back({h.tokens, h.score, false});
  }
  if (finished.size() > beam_size) finished.resize(beam_size);
  return finished;
}

}  // namespace editrep
