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
#include "editrep/encoders.hpp"
#include "editrep/nn.hpp"

namespace editrep {

// Counters filled by the likelihood functions of both editors.
struct LoglikStats {
  std::size_t steps = 0;  // predicted target tokens (with END) or actions
  std::size_t unk = 0;    // gold symbols scored through the UNK path
};

// Emitted distribution at one decoder step.
struct SeqStepTrace {
  // Generation mass g * p_gen over the vocabulary, followed by copy mass
  // (1 - g) * p_copy over the source positions (x−, then context). PAD,
  // START, GAP and the SEP position get exactly 0.
  std::vector<double> distribution;
  std::vector<double> attention;
  double gate = 0.0;
  std::vector<std::size_t> gold;  // indices summed for the gold token
};

struct SeqCandidate {
  TokenSequence tokens;
  double score = 0.0;  // total log-probability, END included when finished
  bool finished = false;
};

class SeqEditor {
 public:
  SeqEditor(ParamStore& ps, const ModelConfig& config, const Vocabulary& vocab, Rng& rng);

  // Teacher-forced log P(x+ | x−, context, edit_rep).
  Var loglik(Tape& t, const EditPair& pair, Var edit_rep, LoglikStats* stats = nullptr,
             std::vector<SeqStepTrace>* trace = nullptr) const;

  // Beam search; results sorted by score, best first.
  std::vector<SeqCandidate> decode(const TokenSequence& before,
                                   const std::optional<TokenSequence>& context_before,
                                   const std::optional<TokenSequence>& context_after,
                                   std::span<const double> edit_rep, std::size_t beam_size,
                                   std::size_t max_len) const;

  // Source encoder parameters are exposed for tests of the sequence encoder.
  const Embedding& embedding() const { return embed_; }
  const BiLstm& source_lstm() const { return src_lstm_; }

 private:
  struct Source;
  struct State {
    LstmState lstm;
    Var feed;  // attention context fed into the next step
  };
  struct Step {
    State next;
    Var dist;  // [1, V + positions]
    Var attention;
    Var gate;
  };

  Source prepare(Tape& t, const TokenSequence& before, const std::optional<TokenSequence>& cb,
                 const std::optional<TokenSequence>& ca, Var edit_rep) const;
  State initial(Tape& t, const Source& s) const;
  Step step(Tape& t, const Source& s, const State& st, std::size_t prev) const;

  const ModelConfig& config_;
  const Vocabulary& vocab_;
  Embedding embed_;
  BiLstm src_lstm_;
  BiLstm ctx_lstm_;
  Tensor* ctx_marker_ = nullptr;  // added to context states to tell them from x−
  Linear init_;
  LstmCell cell_;
  Tensor* attn_ = nullptr;  // bilinear attention, [2H, decoder_hidden]
  Linear out_;
  Linear gen_;
  Linear copy_;
  Linear gate_;
  std::vector<std::size_t> emittable_;  // vocabulary ids with generation mass
};

}  // namespace editrep
