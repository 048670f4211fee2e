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
#include <string>
#include <string_view>
#include <vector>

#include "editrep/align.hpp"
#include "editrep/corpus.hpp"
#include "editrep/nn.hpp"
#include "editrep/syntax.hpp"
#include "editrep/tensor.hpp"

namespace editrep {

enum class EditorKind { Seq, Tree };
enum class EditEncoderKind { Seq, Graph, Bag };

std::string_view to_string(EditorKind k);
std::string_view to_string(EditEncoderKind k);
EditorKind parse_editor_kind(std::string_view s);            // "seq" | "tree"
EditEncoderKind parse_edit_encoder_kind(std::string_view s);  // "seq" | "graph" | "bag"

struct ModelConfig {
  std::size_t edit_dim = 512;
  std::size_t embed_dim = 128;
  std::size_t encoder_hidden = 128;  // per direction; source states are twice this
  std::size_t decoder_hidden = 256;
  std::size_t ggnn_layers = 2;
  std::size_t ggnn_steps_per_layer = 5;
  std::size_t beam_size = 5;
  std::size_t max_seq_len = 70;
  std::size_t max_actions = 120;
  EditorKind editor = EditorKind::Seq;
  EditEncoderKind edit_encoder = EditEncoderKind::Seq;
  bool input_feeding = true;
  bool share_ggnn = false;  // graph edit encoder reuses the tree editor's source GGNN
  bool tree_copy = true;    // TreeCp actions in the tree editor

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  // Small dimensions for single-core experiments.
  static ModelConfig desk();
};

struct EncodedSequence {
  Var states;   // [n, 2 * encoder_hidden]; invalid when n == 0
  Var summary;  // [1, 2 * encoder_hidden]
  std::size_t length = 0;

  bool empty() const { return length == 0; }
};

using EncodedGraph = Ggnn::Output;

// Graph node labels index the token vocabulary for terminals and follow it with
// the grammar's nonterminal labels.
std::size_t graph_label_count(const Vocabulary& vocab);
std::vector<std::size_t> graph_label_ids(const ProgramGraph& g, const Vocabulary& vocab);

// Bidirectional LSTM over embedded tokens.
EncodedSequence encode_sequence(Tape& t, std::span<const std::size_t> ids, const Embedding& embed,
                                const BiLstm& lstm);

EncodedGraph ggnn_encode(Tape& t, const ProgramGraph& g, const Vocabulary& vocab, const Ggnn& ggnn);

// One encoder over context_before ‖ SEP ‖ context_after. Both empty gives no
// states and a zero summary.
EncodedSequence encode_context(Tape& t, const std::optional<TokenSequence>& before,
                               const std::optional<TokenSequence>& after, const Vocabulary& vocab,
                               const Embedding& embed, const BiLstm& lstm);

// fΔ(x−, x+) for the three encoder kinds. Every output is [1, edit_dim].
class EditEncoder {
 public:
  EditEncoder(ParamStore& ps, const ModelConfig& config, const Vocabulary& vocab, Rng& rng,
              const Ggnn* shared_ggnn = nullptr);

  EditEncoderKind kind() const { return kind_; }
  // Dispatches on the configured kind. The graph kind parses both sides and
  // throws SyntaxError when either does not parse.
  Var encode(Tape& t, const EditPair& pair) const;

  Var encode_seq(Tape& t, const AlignedDiff& diff) const;
  Var encode_graph(Tape& t, const ProgramGraph& change_graph) const;
  Var encode_bag(Tape& t, const AlignedDiff& diff) const;
  // Σ embed(deleted) ‖ Σ embed(added), before projection.
  Var bag_features(Tape& t, const AlignedDiff& diff) const;

 private:
  EditEncoderKind kind_;
  const Vocabulary& vocab_;
  std::size_t embed_dim_;
  Embedding tokens_;
  Embedding tags_;
  BiLstm lstm_;
  Ggnn ggnn_;
  const Ggnn* graph_ = nullptr;
  Linear proj_;
};

}  // namespace editrep
