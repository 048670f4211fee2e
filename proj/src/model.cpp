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

#include "editrep/model.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace editrep {

using nlohmann::json;

json to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["edit_dim"] = c.edit_dim;
  j["embed_dim"] = c.embed_dim;
  j["encoder_hidden"] = c.encoder_hidden;
  j["decoder_hidden"] = c.decoder_hidden;
  j["ggnn_layers"] = c.ggnn_layers;
  j["ggnn_steps_per_layer"] = c.ggnn_steps_per_layer;
  j["beam_size"] = c.beam_size;
  j["max_seq_len"] = c.max_seq_len;
  j["max_actions"] = c.max_actions;
  j["editor"] = std::string(to_string(c.editor));
  j["edit_encoder"] = std::string(to_string(c.edit_encoder));
  j["input_feeding"] = c.input_feeding;
  j["share_ggnn"] = c.share_ggnn;
  j["tree_copy"] = c.tree_copy;
  return json(j);
}

ModelConfig model_config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("model config must be a JSON object");
  ModelConfig c;
  static const std::set<std::string> known = {
      "edit_dim",    "embed_dim",   "encoder_hidden", "decoder_hidden", "ggnn_layers",
      "ggnn_steps_per_layer", "beam_size", "max_seq_len", "max_actions", "editor",
      "edit_encoder", "input_feeding", "share_ggnn", "tree_copy"};
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw std::invalid_argument("unknown model config field '" + k + "'");
  auto size = [&](const char* k, std::size_t& dst) {
    if (j.contains(k)) dst = j.at(k).get<std::size_t>();
  };
  size("edit_dim", c.edit_dim);
  size("embed_dim", c.embed_dim);
  size("encoder_hidden", c.encoder_hidden);
  size("decoder_hidden", c.decoder_hidden);
  size("ggnn_layers", c.ggnn_layers);
  size("ggnn_steps_per_layer", c.ggnn_steps_per_layer);
  size("beam_size", c.beam_size);
  size("max_seq_len", c.max_seq_len);
  size("max_actions", c.max_actions);
  if (j.contains("editor")) c.editor = parse_editor_kind(j.at("editor").get<std::string>());
  if (j.contains("edit_encoder"))
    c.edit_encoder = parse_edit_encoder_kind(j.at("edit_encoder").get<std::string>());
  if (j.contains("input_feeding")) c.input_feeding = j.at("input_feeding").get<bool>();
  if (j.contains("share_ggnn")) c.share_ggnn = j.at("share_ggnn").get<bool>();
  if (j.contains("tree_copy")) c.tree_copy = j.at("tree_copy").get<bool>();
  c.validate();
  return c;
}

EditModel::EditModel(const ModelConfig& config, Vocabulary vocab, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)) {
  config_.validate();
  Rng rng(seed);
  const Ggnn* shared = nullptr;
  if (config_.editor == EditorKind::Seq) {
    seq_ = std::make_unique<SeqEditor>(params_, config_, vocab_, rng);
  } else {
    tree_ = std::make_unique<TreeEditor>(params_, config_, vocab_, rng);
    if (config_.share_ggnn) shared = &tree_->source_ggnn();
  }
  encoder_ = std::make_unique<EditEncoder>(params_, config_, vocab_, rng, shared);
}

bool EditModel::accepts(const EditPair& pair) const {
  if (pair.before.empty() || pair.after.empty()) return false;
  if (config_.editor == EditorKind::Seq && config_.edit_encoder != EditEncoderKind::Graph) return true;
  try {
    parse(pair.before);
    parse(pair.after);
  } catch (const SyntaxError&) {
    return false;
  }
  return true;
}

Var EditModel::edit_representation(Tape& t, const EditPair& pair) const {
  return encoder_->encode(t, pair);
}

std::vector<double> EditModel::edit_vector(const EditPair& pair) const {
  Tape t;
  const auto v = edit_representation(t, pair).value();
  return {v.begin(), v.end()};
}

Var EditModel::loglik(Tape& t, const EditPair& pair, Var edit_rep, LoglikStats* stats) const {
  return seq_ ? seq_->loglik(t, pair, edit_rep, stats) : tree_->loglik(t, pair, edit_rep, stats);
}

double EditModel::loglik_value(const EditPair& pair, LoglikStats* stats) const {
  Tape t;
  return loglik(t, pair, edit_representation(t, pair), stats).item();
}

std::vector<Candidate> EditModel::decode(const EditPair& pair, std::span<const double> edit_rep,
                                         std::size_t beam) const {
  if (beam == 0) beam = config_.beam_size;
  std::vector<Candidate> out;
  if (seq_) {
    for (auto& c : seq_->decode(pair.before, pair.context_before, pair.context_after, edit_rep, beam,
                                config_.max_seq_len))
      out.push_back({std::move(c.tokens), c.score, c.finished, std::nullopt});
    return out;
  }
  for (auto& c : tree_->decode(parse(pair.before), pair.context_before, pair.context_after, edit_rep,
                               beam, config_.max_actions))
    out.push_back({std::move(c.tokens), c.score, true, std::move(c.tree)});
  return out;
}

void EditModel::save(const std::string& path, const json& metadata) const {
  save_tensors(path, params_.snapshot());
  nlohmann::ordered_json side;
  side["format"] = "erck-sidecar";
  side["version"] = 1;
  side["config"] = to_json(config_);
  side["vocabulary"] = vocab_.tokens();
  side["metadata"] = metadata;
  std::ofstream os(path + ".json", std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path + ".json");
  os << side.dump(2) << '\n';
  if (!os) throw std::runtime_error("failed writing " + path + ".json");
}

std::unique_ptr<EditModel> EditModel::load(const std::string& path, json* metadata) {
  std::ifstream is(path + ".json");
  if (!is) throw std::runtime_error("cannot open " + path + ".json (checkpoint sidecar)");
  json side;
  try {
    side = json::parse(is);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("malformed sidecar " + path + ".json: " + e.what());
  }
  const ModelConfig config = model_config_from_json(side.at("config"));
  const auto tokens = side.at("vocabulary").get<std::vector<std::string>>();
  const auto& reserved = Vocabulary::reserved();
  if (tokens.size() < reserved.size() || !std::equal(reserved.begin(), reserved.end(), tokens.begin()))
    throw std::runtime_error("sidecar " + path + ".json has a malformed vocabulary");
  Vocabulary vocab(std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(reserved.size()),
                                            tokens.end()));
  auto model = std::make_unique<EditModel>(config, std::move(vocab), 0);
  model->params_.restore(load_tensors(path));
  if (metadata) *metadata = side.value("metadata", json::object());
  return model;
}

}  // namespace editrep
