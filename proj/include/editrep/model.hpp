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

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "editrep/corpus.hpp"
#include "editrep/editor_seq.hpp"
#include "editrep/editor_tree.hpp"
#include "editrep/encoders.hpp"
#include "editrep/nn.hpp"

namespace editrep {

nlohmann::json to_json(const ModelConfig& c);
// Missing fields keep their defaults; unknown fields are rejected.
ModelConfig model_config_from_json(const nlohmann::json& j);

struct Candidate {
  TokenSequence tokens;
  double score = 0.0;
  bool finished = true;
  std::optional<SyntaxTree> tree;  // tree editor only
};

// An edit encoder paired with a neural editor.
class EditModel {
 public:
  EditModel(const ModelConfig& config, Vocabulary vocab, std::uint64_t seed);
  EditModel(const EditModel&) = delete;
  EditModel& operator=(const EditModel&) = delete;

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const EditEncoder& encoder() const { return *encoder_; }
  const SeqEditor* seq_editor() const { return seq_.get(); }
  const TreeEditor* tree_editor() const { return tree_.get(); }

  // Whether the pair can be scored: graph encoders and the tree editor need both
  // sides to parse. Non-parsing pairs give false.
  bool accepts(const EditPair& pair) const;

  Var edit_representation(Tape& t, const EditPair& pair) const;
  std::vector<double> edit_vector(const EditPair& pair) const;

  Var loglik(Tape& t, const EditPair& pair, Var edit_rep, LoglikStats* stats = nullptr) const;
  // Gold-representation log-likelihood without gradients.
  double loglik_value(const EditPair& pair, LoglikStats* stats = nullptr) const;

  // Applies edit_rep to pair.before (and its context). Beam 0 means the
  // configured beam size.
  std::vector<Candidate> decode(const EditPair& pair, std::span<const double> edit_rep,
                                std::size_t beam = 0) const;

  // Writes <path> (.erck tensors) and <path>.json (config, vocabulary and the
  // caller's metadata). Both are byte-identical for identical models.
  void save(const std::string& path, const nlohmann::json& metadata = nlohmann::json::object()) const;
  static std::unique_ptr<EditModel> load(const std::string& path, nlohmann::json* metadata = nullptr);

 private:
  ModelConfig config_;
  Vocabulary vocab_;
  ParamStore params_;
  std::unique_ptr<SeqEditor> seq_;
  std::unique_ptr<TreeEditor> tree_;
  std::unique_ptr<EditEncoder> encoder_;
};

}  // namespace editrep
