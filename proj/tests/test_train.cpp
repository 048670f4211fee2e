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

#include <gtest/gtest.h>

#include <cmath>

#include "editrep/train.hpp"
#include "model_checks.hpp"

namespace editrep {
namespace {

using testing::tiny_config;

Corpus small_corpus(std::size_t n = 60, std::uint64_t seed = 3) {
  SyntheticOptions o;
  o.n_pairs = n;
  o.seed = seed;
  return generate_synthetic(o);
}

TrainConfig small_config(EditorKind editor = EditorKind::Seq) {
  TrainConfig c;
  c.model = tiny_config(editor, EditEncoderKind::Seq);
  c.model.edit_dim = 8;
  c.model.embed_dim = 8;
  c.model.encoder_hidden = 8;
  c.model.decoder_hidden = 12;
  c.model.ggnn_layers = 1;
  c.model.max_seq_len = 40;
  c.max_epochs = 3;
  c.batch_size = 8;
  c.learning_rate = 3e-2;
  return c;
}

TEST(Perplexity, WorkedExamples) {
  EXPECT_NEAR(perplexity_from(3.0 * std::log(4.0), 3), 4.0, 1e-12);
  EXPECT_DOUBLE_EQ(perplexity_from(0.0, 10), 1.0);
  EXPECT_THROW(perplexity_from(1.0, 0), std::invalid_argument);
}

TEST(Perplexity, PoolsNllOverTargetUnits) {
  for (auto editor : {EditorKind::Seq, EditorKind::Tree}) {
    const Corpus c = small_corpus();
    EditModel m(small_config(editor).model, build_vocabulary(c, 1), 1);
    double nll = 0.0;
    std::size_t units = 0;
    for (const auto& p : c.valid) {
      LoglikStats s;
      Tape t;
      nll -= m.loglik(t, p, m.edit_representation(t, p), &s).item();
      units += s.steps;
    }
    const auto r = perplexity(m, c.valid, 3);
    EXPECT_EQ(r.units, units);
    EXPECT_NEAR(r.total_nll, nll, 1e-9);
    EXPECT_NEAR(r.perplexity, std::exp(nll / static_cast<double>(units)), 1e-9);
    if (editor == EditorKind::Seq) {
      std::size_t tokens = 0;
      for (const auto& p : c.valid) tokens += p.after.size() + 1;
      EXPECT_EQ(r.units, tokens);
    }
  }
}

TEST(TrainConfig, JsonRoundTripAndValidation) {
  TrainConfig c = small_config();
  c.time_budget_seconds = 12.5;
  const TrainConfig back = train_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  auto j = to_json(c);
  j["epochs"] = 3;
  EXPECT_THROW(train_config_from_json(j), std::invalid_argument);
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(TrainBatch, RepeatedStepsReduceLoss) {
  const Corpus c = small_corpus();
  EditModel m(small_config().model, build_vocabulary(c, 1), 2);
  std::vector<const EditPair*> batch;
  for (std::size_t i = 0; i < 6; ++i) batch.push_back(&c.train[i]);
  auto params = m.params().tensors();
  AdamConfig ac;
  ac.learning_rate = 3e-2;
  AdamState adam = make_adam_state(params, ac);
  const double first = train_batch(m, batch, adam, 5.0);
  double last = first;
  for (int i = 0; i < 40; ++i) last = train_batch(m, batch, adam, 5.0);
  EXPECT_LT(last, 0.5 * first);
}

// The batch gradient is the mean of the per-pair gradients.
TEST(TrainBatch, GradientIsMeanOfPairGradients) {
  const Corpus c = small_corpus();
  EditModel m(small_config().model, build_vocabulary(c, 1), 2);
  std::vector<const EditPair*> batch = {&c.train[0], &c.train[1], &c.train[2]};
  const Tensor& w = m.params().get("seq.gen.w");
  std::vector<double> mean(w.numel(), 0.0);
  for (const EditPair* p : batch) {
    m.params().zero_grad();
    Tape t;
    t.backward(scale(m.loglik(t, *p, m.edit_representation(t, *p)), -1.0));
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += w.grad()[i] / 3.0;
  }
  // A zero learning rate leaves the parameters, so the gradient can be read back.
  auto params = m.params().tensors();
  AdamConfig ac;
  ac.learning_rate = 0.0;
  AdamState adam = make_adam_state(params, ac);
  train_batch(m, batch, adam, 1e9);
  for (std::size_t i = 0; i < mean.size(); ++i) EXPECT_NEAR(w.grad()[i], mean[i], 1e-12);
}

TEST(Train, RecordsHistoryAndImproves) {
  const Corpus c = small_corpus(80);
  TrainConfig cfg = small_config();
  cfg.max_epochs = 4;
  std::vector<EpochRecord> seen;
  const auto r = train(c, cfg, [&](const EpochRecord& e) { seen.push_back(e); });
  ASSERT_EQ(r.history.size(), seen.size());
  EXPECT_EQ(r.history.front().epoch, 0u);
  EXPECT_LT(r.best_dev_perplexity, r.history.front().dev_perplexity);
  EXPECT_GE(r.best_epoch, 1u);
  EXPECT_DOUBLE_EQ(perplexity(*r.model, c.valid).perplexity, r.best_dev_perplexity);
}

TEST(Train, DeterministicAcrossRunsAndThreadCounts) {
  const Corpus c = small_corpus();
  TrainConfig cfg = small_config();
  cfg.max_epochs = 2;
  const auto a = train(c, cfg);
  cfg.threads = 3;
  const auto b = train(c, cfg);
  const auto& names = a.model->params().names();
  for (const auto& n : names) {
    const auto x = std::as_const(*a.model).params().get(n).values();
    const auto y = std::as_const(*b.model).params().get(n).values();
    EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin(), y.end())) << n;
  }
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].dev_perplexity, b.history[i].dev_perplexity);
  }
  EXPECT_EQ(a.metadata(cfg).dump(), b.metadata(cfg).dump());
}

// A learning rate far too large makes dev perplexity worse every epoch, so
// training stops after `patience` epochs and keeps the untrained parameters.
TEST(Train, EarlyStoppingRestoresBestCheckpoint) {
  const Corpus c = small_corpus();
  TrainConfig cfg = small_config();
  cfg.max_epochs = 10;
  cfg.patience = 2;
  cfg.learning_rate = 5.0;
  const auto r = train(c, cfg);
  EXPECT_TRUE(r.stopped_early || r.diverged);
  EXPECT_EQ(r.best_epoch, 0u);
  EditModel fresh(cfg.model, build_vocabulary(c, cfg.min_count), cfg.seed);
  for (const auto& n : fresh.params().names()) {
    const auto x = std::as_const(fresh).params().get(n).values();
    const auto y = std::as_const(*r.model).params().get(n).values();
    EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin(), y.end())) << n;
  }
  if (r.stopped_early) EXPECT_EQ(r.history.size(), 1 + cfg.patience);
}

TEST(Train, TimeBudgetStopsAfterFirstEpoch) {
  const Corpus c = small_corpus();
  TrainConfig cfg = small_config();
  cfg.max_epochs = 5;
  cfg.time_budget_seconds = 0.0;
  const auto r = train(c, cfg);
  EXPECT_EQ(r.history.size(), 2u);
  EXPECT_TRUE(r.stopped_early);
}

TEST(Train, IncompatibleCorpusAndEmptySplits) {
  Corpus c = small_corpus();
  c.train[0].after = split_tokens("V0 = = V1");
  EXPECT_THROW(train(c, small_config(EditorKind::Tree)), IncompatibleCorpus);
  TrainConfig graph = small_config();
  graph.model.edit_encoder = EditEncoderKind::Graph;
  EXPECT_THROW(train(c, graph), IncompatibleCorpus);
  Corpus no_valid = small_corpus();
  no_valid.valid.clear();
  EXPECT_THROW(train(no_valid, small_config()), std::invalid_argument);
}

TEST(Train, LearnsIdentityEdits) {
  // Smoke test of the copy path: most unchanged programs come back verbatim.
  Corpus c = small_corpus(200, 9);
  for (auto* part : {&c.train, &c.valid, &c.test})
    for (auto& p : *part) p.after = p.before;
  TrainConfig cfg = small_config();
  cfg.max_epochs = 40;
  cfg.patience = 40;
  cfg.learning_rate = 2e-2;
  cfg.model.encoder_hidden = 16;
  cfg.model.decoder_hidden = 32;
  const auto r = train(c, cfg);
  std::size_t exact = 0;
  for (const auto& p : c.test) {
    const auto cands = r.model->decode(p, r.model->edit_vector(p), 1);
    exact += cands.front().tokens == p.after;
  }
  EXPECT_GE(static_cast<double>(exact) / static_cast<double>(c.test.size()), 0.5);
}

}  // namespace
}  // namespace editrep
