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
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "editrep/corpus.hpp"
#include "editrep/model.hpp"

namespace editrep {

struct TrainConfig {
  ModelConfig model;
  std::size_t max_epochs = 30;
  std::size_t batch_size = 32;
  std::size_t patience = 3;
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
  double clip_norm = 5.0;
  std::size_t min_count = 1;  // vocabulary threshold over the training split
  std::size_t threads = 1;    // dev evaluation workers; gradient steps are sequential
  // Stops after the epoch that crosses this many seconds. Wall-clock dependent,
  // so unset in deterministic runs.
  std::optional<double> time_budget_seconds;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochRecord {
  std::size_t epoch = 0;  // 0 is the untrained model
  double train_loss = 0.0;  // mean negative log-likelihood per pair
  double dev_perplexity = 0.0;
  double seconds = 0.0;  // wall-clock; kept out of checkpoints
};

struct TrainResult {
  std::unique_ptr<EditModel> model;  // best dev perplexity
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_dev_perplexity = 0.0;
  bool stopped_early = false;
  bool diverged = false;
  std::string diagnostic;

  // Metadata stored in the checkpoint sidecar (no wall-clock fields).
  nlohmann::json metadata(const TrainConfig& config) const;
};

// The corpus does not suit the configured model, e.g. the graph encoder or the
// tree editor on programs that do not parse.
class IncompatibleCorpus : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainResult train(const Corpus& corpus, const TrainConfig& config, const EpochCallback& on_epoch = {});

struct PerplexityResult {
  double perplexity = 0.0;
  double total_nll = 0.0;
  std::size_t units = 0;  // tokens (with END) or actions
  std::size_t unk = 0;
};

// exp(total NLL / total target units) under gold edit representations.
PerplexityResult perplexity(const EditModel& model, const std::vector<EditPair>& pairs,
                            std::size_t threads = 1);
double perplexity_from(double total_nll, std::size_t units);

// One optimizer step over a batch; returns the summed negative log-likelihood.
double train_batch(EditModel& model, const std::vector<const EditPair*>& batch, AdamState& adam,
                   double clip_norm);

}  // namespace editrep
