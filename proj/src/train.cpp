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

#include "editrep/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "editrep/parallel.hpp"

namespace editrep {

using nlohmann::json;

void TrainConfig::validate() const {
  model.validate();
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (patience < 1) throw std::invalid_argument("patience must be at least 1");
  if (min_count < 1) throw std::invalid_argument("min_count must be at least 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("clip_norm must be positive");
}

json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["model"] = to_json(c.model);
  j["max_epochs"] = c.max_epochs;
  j["batch_size"] = c.batch_size;
  j["patience"] = c.patience;
  j["seed"] = c.seed;
  j["learning_rate"] = c.learning_rate;
  j["clip_norm"] = c.clip_norm;
  j["min_count"] = c.min_count;
  j["time_budget_seconds"] = c.time_budget_seconds ? json(*c.time_budget_seconds) : json(nullptr);
  return json(j);
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("train config must be a JSON object");
  static const std::set<std::string> known = {"model",         "max_epochs", "batch_size", "patience",
                                              "seed",          "learning_rate", "clip_norm", "min_count",
                                              "time_budget_seconds"};
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw std::invalid_argument("unknown train config field '" + k + "'");
  TrainConfig c;
  if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
  if (j.contains("max_epochs")) c.max_epochs = j.at("max_epochs").get<std::size_t>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
  if (j.contains("patience")) c.patience = j.at("patience").get<std::size_t>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("clip_norm")) c.clip_norm = j.at("clip_norm").get<double>();
  if (j.contains("min_count")) c.min_count = j.at("min_count").get<std::size_t>();
  if (j.contains("time_budget_seconds") && !j.at("time_budget_seconds").is_null())
    c.time_budget_seconds = j.at("time_budget_seconds").get<double>();
  c.validate();
  return c;
}

json TrainResult::metadata(const TrainConfig& config) const {
  nlohmann::ordered_json j;
  j["train_config"] = to_json(config);
  j["best_epoch"] = best_epoch;
  j["dev_perplexity"] = best_dev_perplexity;
  j["perplexity_unit"] = config.model.editor == EditorKind::Seq ? "token" : "action";
  j["stopped_early"] = stopped_early;
  j["diverged"] = diverged;
  if (!diagnostic.empty()) j["diagnostic"] = diagnostic;
  nlohmann::ordered_json hist = nlohmann::ordered_json::array();
  for (const auto& e : history) {
    nlohmann::ordered_json r;
    r["epoch"] = e.epoch;
    r["train_loss"] = e.epoch == 0 ? json(nullptr) : json(e.train_loss);
    r["dev_perplexity"] = e.dev_perplexity;
    hist.push_back(r);
  }
  j["history"] = hist;
  return json(j);
}

double perplexity_from(double total_nll, std::size_t units) {
  if (units == 0) throw std::invalid_argument("perplexity over zero target units");
  return std::exp(total_nll / static_cast<double>(units));
}

PerplexityResult perplexity(const EditModel& model, const std::vector<EditPair>& pairs,
                            std::size_t threads) {
  if (pairs.empty()) throw std::invalid_argument("perplexity of an empty pair list");
  std::vector<double> nll(pairs.size());
  std::vector<LoglikStats> stats(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) { nll[i] = -model.loglik_value(pairs[i], &stats[i]); });
  PerplexityResult r;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    r.total_nll += nll[i];
    r.units += stats[i].steps;
    r.unk += stats[i].unk;
  }
  r.perplexity = perplexity_from(r.total_nll, r.units);
  return r;
}

double train_batch(EditModel& model, const std::vector<const EditPair*>& batch, AdamState& adam,
                   double clip_norm) {
  auto params = model.params().tensors();
  model.params().zero_grad();
  double total = 0.0;
  const double w = 1.0 / static_cast<double>(batch.size());
  for (const EditPair* p : batch) {
    Tape t;
    Var ll = model.loglik(t, *p, model.edit_representation(t, *p));
    total -= ll.item();
    t.backward(scale(ll, -w));
  }
  clip_grad_norm(params, clip_norm);
  adam_step(params, adam);
  return total;
}

TrainResult train(const Corpus& corpus, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (corpus.train.empty()) throw std::invalid_argument("training split is empty");
  if (corpus.valid.empty()) throw std::invalid_argument("validation split is empty");

  TrainResult result;
  result.model = std::make_unique<EditModel>(config.model, build_vocabulary(corpus, config.min_count), config.seed);
  EditModel& model = *result.model;
  for (const auto* part : {&corpus.train, &corpus.valid})
    for (const auto& p : *part)
      if (!model.accepts(p))
        throw IncompatibleCorpus("pair '" + p.id + "' does not parse; the " +
                                 std::string(to_string(config.model.editor)) + " editor with the " +
                                 std::string(to_string(config.model.edit_encoder)) +
                                 " edit encoder needs parseable programs");

  // Length-sorted buckets; their order is reshuffled every epoch.
  std::vector<const EditPair*> sorted;
  for (const auto& p : corpus.train) sorted.push_back(&p);
  std::stable_sort(sorted.begin(), sorted.end(), [](const EditPair* a, const EditPair* b) {
    return a->before.size() + a->after.size() < b->before.size() + b->after.size();
  });
  std::vector<std::vector<const EditPair*>> batches;
  for (std::size_t i = 0; i < sorted.size(); i += config.batch_size)
    batches.emplace_back(sorted.begin() + static_cast<std::ptrdiff_t>(i),
                         sorted.begin() + static_cast<std::ptrdiff_t>(std::min(sorted.size(), i + config.batch_size)));

  auto params = model.params().tensors();
  AdamConfig ac;
  ac.learning_rate = config.learning_rate;
  AdamState adam = make_adam_state(params, ac);
  Rng rng(config.seed ^ 0x5DEECE66Dull);
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  EpochRecord e0;
  e0.dev_perplexity = perplexity(model, corpus.valid, config.threads).perplexity;
  e0.seconds = elapsed();
  result.history.push_back(e0);
  if (on_epoch) on_epoch(e0);
  result.best_dev_perplexity = e0.dev_perplexity;
  auto best = model.params().snapshot();
  std::size_t bad_epochs = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t k = batches.size(); k > 1; --k) std::swap(batches[k - 1], batches[rng.below(k)]);
    double total = 0.0;
    EpochRecord rec;
    rec.epoch = epoch;
    try {
      for (const auto& b : batches) {
        total += train_batch(model, b, adam, config.clip_norm);
        if (!std::isfinite(total)) throw std::runtime_error("training loss is not finite");
      }
      rec.train_loss = total / static_cast<double>(sorted.size());
      rec.dev_perplexity = perplexity(model, corpus.valid, config.threads).perplexity;
      if (!std::isfinite(rec.dev_perplexity)) throw std::runtime_error("dev perplexity is not finite");
    } catch (const std::exception& ex) {
      result.diverged = true;
      result.diagnostic = "epoch " + std::to_string(epoch) + ": " + ex.what() +
                          "; restored the checkpoint from epoch " + std::to_string(result.best_epoch);
      break;
    }
    rec.seconds = elapsed();
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.dev_perplexity < result.best_dev_perplexity) {
      result.best_dev_perplexity = rec.dev_perplexity;
      result.best_epoch = epoch;
      best = model.params().snapshot();
      bad_epochs = 0;
    } else if (++bad_epochs >= config.patience) {
      result.stopped_early = epoch < config.max_epochs;
      break;
    }
    if (config.time_budget_seconds && rec.seconds >= *config.time_budget_seconds) {
      result.stopped_early = epoch < config.max_epochs;
      break;
    }
  }
  model.params().restore(best);
  return result;
}

}  // namespace editrep
