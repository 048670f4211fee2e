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
#include <span>
#include <vector>

#include "editrep/corpus.hpp"
#include "editrep/editor_seq.hpp"
#include "editrep/encoders.hpp"
#include "editrep/nn.hpp"
#include "editrep/syntax.hpp"

namespace editrep {

// Distribution over the full action space at one step. The space is laid out
// as productions, vocabulary tokens, token-copy positions (source leaves, then
// context), TreeCp source nodes, and Reduce.
struct TreeStepTrace {
  std::vector<double> distribution;  // zero outside the legal set
  std::vector<bool> legal;
  std::vector<std::size_t> gold;
  Action action;
};

struct TreeCandidate {
  SyntaxTree tree;
  TokenSequence tokens;
  std::vector<Action> actions;
  double score = 0.0;
};

class TreeEditor {
 public:
  TreeEditor(ParamStore& ps, const ModelConfig& config, const Vocabulary& vocab, Rng& rng);

  // log P(actions(x+) | x−, context, edit_rep) with the greedy TreeCp
  // linearization as supervision. Throws SyntaxError when a side does not parse.
  Var loglik(Tape& t, const EditPair& pair, Var edit_rep, LoglikStats* stats = nullptr,
             std::vector<TreeStepTrace>* trace = nullptr) const;

  // Throws std::runtime_error when no complete tree fits within max_actions.
  std::vector<TreeCandidate> decode(const SyntaxTree& source,
                                    const std::optional<TokenSequence>& context_before,
                                    const std::optional<TokenSequence>& context_after,
                                    std::span<const double> edit_rep, std::size_t beam_size,
                                    std::size_t max_actions) const;

  // Decodes with a caller-provided chooser instead of beam search; used to
  // sample random decode steps. choose() receives the legal action indices and
  // their probabilities and returns a position in that list.
  struct Sampler {
    virtual ~Sampler() = default;
    virtual std::size_t choose(std::span<const std::size_t> legal, std::span<const double> probs) = 0;
  };
  SyntaxTree sample(const SyntaxTree& source, std::span<const double> edit_rep, Sampler& sampler,
                    std::size_t max_actions, std::vector<TreeStepTrace>* trace = nullptr) const;

  const Ggnn& source_ggnn() const { return ggnn_; }
  std::size_t action_space(const SyntaxTree& source, std::size_t context_len) const;
  const Linear& parent_projection() const { return parent_; }

 private:
  struct Source;
  struct State {
    LstmState lstm;
    Var feed;
    std::vector<Var> hs;  // decoder state after each step, for parent feeding
  };
  struct Step {
    State next;
    Var logits;  // [1, action space]
  };

  Source prepare(Tape& t, const SyntaxTree& source, const std::optional<TokenSequence>& cb,
                 const std::optional<TokenSequence>& ca, Var edit_rep) const;
  State initial(Tape& t, const Source& s) const;
  Step step(Tape& t, const Source& s, const State& st, const Derivation& d,
            std::size_t prev_action) const;
  std::vector<std::size_t> legal_actions(const Source& s, const Derivation& d) const;
  Action action_at(const Source& s, std::size_t index) const;
  std::size_t input_id(const Source& s, const Action& a) const;

  const ModelConfig& config_;
  const Vocabulary& vocab_;
  std::size_t n_productions_;
  Embedding embed_;    // context tokens
  Embedding actions_;  // previous action: productions, tokens, TreeCp, Reduce, start
  Embedding frontier_;
  Ggnn ggnn_;
  BiLstm ctx_lstm_;
  Tensor* ctx_marker_ = nullptr;
  Linear init_;
  Linear parent_;
  LstmCell cell_;
  Tensor* attn_ = nullptr;
  Linear out_;
  Linear expand_;
  Linear gen_;
  Linear copy_;
  Linear tree_copy_;
  Linear reduce_;
};

}  // namespace editrep
