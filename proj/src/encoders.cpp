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

#include "editrep/encoders.hpp"

#include <algorithm>
#include <stdexcept>

namespace editrep {

std::string_view to_string(EditorKind k) { return k == EditorKind::Seq ? "seq" : "tree"; }

std::string_view to_string(EditEncoderKind k) {
  switch (k) {
    case EditEncoderKind::Seq: return "seq";
    case EditEncoderKind::Graph: return "graph";
    case EditEncoderKind::Bag: return "bag";
  }
  return "?";
}

EditorKind parse_editor_kind(std::string_view s) {
  if (s == "seq") return EditorKind::Seq;
  if (s == "tree") return EditorKind::Tree;
  throw std::invalid_argument("unknown editor kind '" + std::string(s) + "' (expected seq or tree)");
}

EditEncoderKind parse_edit_encoder_kind(std::string_view s) {
  if (s == "seq") return EditEncoderKind::Seq;
  if (s == "graph") return EditEncoderKind::Graph;
  if (s == "bag") return EditEncoderKind::Bag;
  throw std::invalid_argument("unknown edit encoder kind '" + std::string(s) +
                              "' (expected seq, graph or bag)");
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  positive(edit_dim, "edit_dim");
  positive(embed_dim, "embed_dim");
  positive(encoder_hidden, "encoder_hidden");
  positive(decoder_hidden, "decoder_hidden");
  positive(ggnn_layers, "ggnn_layers");
  positive(ggnn_steps_per_layer, "ggnn_steps_per_layer");
  positive(beam_size, "beam_size");
  positive(max_seq_len, "max_seq_len");
  positive(max_actions, "max_actions");
  if (share_ggnn && !(editor == EditorKind::Tree && edit_encoder == EditEncoderKind::Graph))
    throw std::invalid_argument("share_ggnn requires the tree editor with the graph edit encoder");
}

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.edit_dim = 64;
  c.embed_dim = 32;
  c.encoder_hidden = 32;
  c.decoder_hidden = 96;
  c.ggnn_layers = 2;
  c.ggnn_steps_per_layer = 5;
  return c;
}

// ---- shared encoders ------------------------------------------------------

std::size_t graph_label_count(const Vocabulary& vocab) {
  return vocab.size() + Grammar::toy().labels().size();
}

std::vector<std::size_t> graph_label_ids(const ProgramGraph& g, const Vocabulary& vocab) {
  const auto& labels = Grammar::toy().labels();
  std::vector<std::size_t> ids;
  ids.reserve(g.nodes.size());
  for (const auto& n : g.nodes) {
    if (n.terminal) {
      ids.push_back(vocab.index(n.label));
      continue;
    }
    auto it = std::find(labels.begin(), labels.end(), n.label);
    ids.push_back(it == labels.end() ? Vocabulary::kUnk
                                     : vocab.size() + static_cast<std::size_t>(it - labels.begin()));
  }
  return ids;
}

EncodedSequence encode_sequence(Tape& t, std::span<const std::size_t> ids, const Embedding& embed,
                                const BiLstm& lstm) {
  if (ids.empty()) throw std::invalid_argument("encode_sequence on an empty token sequence");
  auto out = lstm.run(t, embed(t, ids));
  return {out.states, out.summary, ids.size()};
}

EncodedGraph ggnn_encode(Tape& t, const ProgramGraph& g, const Vocabulary& vocab, const Ggnn& ggnn) {
  const auto ids = graph_label_ids(g, vocab);
  return ggnn.run(t, g, ids);
}

EncodedSequence encode_context(Tape& t, const std::optional<TokenSequence>& before,
                               const std::optional<TokenSequence>& after, const Vocabulary& vocab,
                               const Embedding& embed, const BiLstm& lstm) {
  const bool has_before = before && !before->empty();
  const bool has_after = after && !after->empty();
  if (!has_before && !has_after) return {Var{}, t.zeros(1, 2 * lstm.hidden()), 0};
  std::vector<std::size_t> ids;
  if (has_before)
    for (const auto& tok : *before) ids.push_back(vocab.index(tok));
  ids.push_back(Vocabulary::kSep);
  if (has_after)
    for (const auto& tok : *after) ids.push_back(vocab.index(tok));
  return encode_sequence(t, ids, embed, lstm);
}

// ---- edit encoders ---------------------------------------------------------

EditEncoder::EditEncoder(ParamStore& ps, const ModelConfig& config, const Vocabulary& vocab,
                         Rng& rng, const Ggnn* shared_ggnn)
    : kind_(config.edit_encoder), vocab_(vocab), embed_dim_(config.embed_dim) {
  const std::size_t e = config.embed_dim, h = config.encoder_hidden;
  switch (kind_) {
    case EditEncoderKind::Seq:
      tokens_ = Embedding::create(ps, "edit.token", vocab.size(), e, rng);
      tags_ = Embedding::create(ps, "edit.tag", kTagCount, e, rng);
      lstm_ = BiLstm::create(ps, "edit.lstm", 3 * e, h, rng);
      proj_ = Linear::create(ps, "edit.proj", 2 * h, config.edit_dim, rng);
      break;
    case EditEncoderKind::Graph:
      if (shared_ggnn) {
        graph_ = shared_ggnn;
      } else {
        ggnn_ = Ggnn::create(ps, "edit.ggnn", graph_label_count(vocab), e, 2 * h, 2 * h,
                             config.ggnn_layers, config.ggnn_steps_per_layer, rng);
        graph_ = &ggnn_;
      }
      proj_ = Linear::create(ps, "edit.proj", graph_->value.out, config.edit_dim, rng);
      break;
    case EditEncoderKind::Bag:
      tokens_ = Embedding::create(ps, "edit.token", vocab.size(), e, rng);
      proj_ = Linear::create(ps, "edit.proj", 2 * e, config.edit_dim, rng, false);
      break;
  }
}

Var EditEncoder::encode(Tape& t, const EditPair& pair) const {
  switch (kind_) {
    case EditEncoderKind::Seq: return encode_seq(t, align(pair.before, pair.after));
    case EditEncoderKind::Graph:
      return encode_graph(t, build_change_graph(parse(pair.before), parse(pair.after)));
    case EditEncoderKind::Bag: return encode_bag(t, align(pair.before, pair.after));
  }
  throw std::logic_error("unreachable edit encoder kind");
}

Var EditEncoder::encode_seq(Tape& t, const AlignedDiff& diff) const {
  if (kind_ != EditEncoderKind::Seq) throw std::logic_error("encode_seq on a non-sequence encoder");
  if (diff.empty()) throw std::invalid_argument("encode_seq on an empty diff");
  std::vector<std::size_t> tag_ids, before_ids, after_ids;
  for (const auto& d : diff) {
    tag_ids.push_back(static_cast<std::size_t>(d.tag));
    before_ids.push_back(d.before ? vocab_.index(*d.before) : Vocabulary::kGap);
    after_ids.push_back(d.after ? vocab_.index(*d.after) : Vocabulary::kGap);
  }
  Var x = concat({tags_(t, tag_ids), tokens_(t, before_ids), tokens_(t, after_ids)}, 1);
  return proj_(t, lstm_.run(t, x).summary);
}

Var EditEncoder::encode_graph(Tape& t, const ProgramGraph& change_graph) const {
  if (kind_ != EditEncoderKind::Graph) throw std::logic_error("encode_graph on a non-graph encoder");
  return proj_(t, ggnn_encode(t, change_graph, vocab_, *graph_).summary);
}

Var EditEncoder::bag_features(Tape& t, const AlignedDiff& diff) const {
  if (kind_ != EditEncoderKind::Bag) throw std::logic_error("bag_features on a non-bag encoder");
  std::vector<std::size_t> deleted, added;
  for (const auto& d : diff) {
    if ((d.tag == Tag::Removed || d.tag == Tag::Replaced) && d.before) deleted.push_back(vocab_.index(*d.before));
    if ((d.tag == Tag::Added || d.tag == Tag::Replaced) && d.after) added.push_back(vocab_.index(*d.after));
  }
  // Summing in sorted order makes the result independent of entry order, bit for bit.
  std::sort(deleted.begin(), deleted.end());
  std::sort(added.begin(), added.end());
  auto total = [&](const std::vector<std::size_t>& ids) {
    return ids.empty() ? t.zeros(1, embed_dim_) : sum_rows(tokens_(t, ids));
  };
  return concat({total(deleted), total(added)}, 1);
}

Var EditEncoder::encode_bag(Tape& t, const AlignedDiff& diff) const {
  return proj_(t, bag_features(t, diff));
}

}  // namespace editrep
