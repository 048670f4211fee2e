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

#include <memory>
#include <string>
#include <vector>

#include "editrep/model.hpp"
#include "gradcheck.hpp"

namespace editrep::testing {

// Small dimensions keep finite differences fast and well conditioned.
inline ModelConfig tiny_config(EditorKind editor, EditEncoderKind encoder) {
  ModelConfig c;
  c.edit_dim = 6;
  c.embed_dim = 5;
  c.encoder_hidden = 4;
  c.decoder_hidden = 6;
  c.ggnn_layers = 2;
  c.ggnn_steps_per_layer = 2;
  c.beam_size = 3;
  c.max_seq_len = 20;
  c.max_actions = 40;
  c.editor = editor;
  c.edit_encoder = encoder;
  return c;
}

inline EditPair pair_of(const std::string& before, const std::string& after, const std::string& cb = {},
                        const std::string& ca = {}) {
  EditPair p;
  p.id = before + " -> " + after;
  p.before = split_tokens(before);
  p.after = split_tokens(after);
  if (!cb.empty()) p.context_before = split_tokens(cb);
  if (!ca.empty()) p.context_after = split_tokens(ca);
  return p;
}

// The vocabulary leaves out "Wrap" and "23" so both reach the UNK and copy paths.
inline Vocabulary tiny_vocab() {
  return Vocabulary({"V0", "V1", "V2", "=", "(", ")", "+", "*", ",", ";", "Max", "Read", "ReadAsync", "1", "?."});
}

inline std::vector<EditPair> tiny_pairs() {
  return {pair_of("V0 = Read ( V1 )", "V0 = ReadAsync ( V1 )", "V2 = 1", "V1 = V2"),
          pair_of("V0 = V1 + 23", "V0 = Wrap ( V1 + 23 )"),
          pair_of("V0 = V1 ; V2 = Max ( V0 , 1 )", "V2 = Max ( V0 , 1 ) ; V0 = V1", "V1 = 1")};
}

struct ComponentCheck {
  std::string component;
  std::string model;
  GradCheckResult result;
};

inline bool name_has(const std::string& name, const std::vector<std::string>& parts) {
  for (const auto& p : parts)
    if (name.find(p) != std::string::npos) return true;
  return false;
}

// Finite-difference checks of -log P(x+ | x−, fΔ(x−, x+)), probing only the
// parameters of one component at a time.
inline std::vector<ComponentCheck> component_grad_checks(std::size_t probes, std::uint64_t seed) {
  struct Group {
    std::string name;
    std::vector<std::string> parts;
  };
  const std::vector<Group> groups = {
      {"lstm cells", {".fwd.", ".bwd.", "seq.dec.", "tree.dec."}},
      {"ggnn layers", {".layer"}},
      {"attention", {"seq.attn", "tree.attn", "seq.out.", "tree.out."}},
      {"copy gates", {"seq.gate.", "seq.copy.", "tree.copy.", "tree.treecp."}},
      {"readout", {".score.", ".value."}},
      {"edit encoder projections", {"edit.proj."}},
      {"tree decoder heads", {"tree.expand.", "tree.reduce.", "tree.parent.", "tree.frontier"}},
  };
  struct Setup {
    std::string name;
    EditorKind editor;
    EditEncoderKind encoder;
  };
  const std::vector<Setup> setups = {{"seq+seq", EditorKind::Seq, EditEncoderKind::Seq},
                                     {"tree+graph", EditorKind::Tree, EditEncoderKind::Graph},
                                     {"seq+bag", EditorKind::Seq, EditEncoderKind::Bag}};
  const auto pairs = tiny_pairs();
  std::vector<ComponentCheck> out;
  std::uint64_t s = seed;
  for (const auto& setup : setups) {
    EditModel model(tiny_config(setup.editor, setup.encoder), tiny_vocab(), seed);
    auto loss = [&](Tape& t) {
      Var total;
      for (const auto& p : pairs) {
        Var ll = model.loglik(t, p, model.edit_representation(t, p));
        total = total.valid() ? add(total, ll) : ll;
      }
      return scale(total, -1.0);
    };
    for (const auto& g : groups) {
      std::vector<Tensor*> params;
      for (const auto& name : model.params().names())
        if (name_has(name, g.parts)) params.push_back(&model.params().get(name));
      if (params.empty()) continue;
      out.push_back({g.name, setup.name, grad_check(loss, params, probes, ++s)});
    }
  }
  return out;
}

}  // namespace editrep::testing
