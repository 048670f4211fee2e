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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <utility>

#include "editrep/model.hpp"
#include "model_checks.hpp"
#include "random_trees.hpp"

namespace editrep {
namespace {

using testing::pair_of;
using testing::tiny_config;
using testing::tiny_pairs;
using testing::tiny_vocab;

TEST(GradCheck, EveryComponent) {
  const auto checks = testing::component_grad_checks(24, 17);
  ASSERT_GE(checks.size(), 12u);
  for (const auto& c : checks) {
    EXPECT_GE(c.result.probes, 20u);
    EXPECT_LT(c.result.max_rel_error, 1e-3) << c.component << " in " << c.model;
  }
}

TEST(ModelConfig, ValidateNamesField) {
  ModelConfig c;
  c.decoder_hidden = 0;
  try {
    c.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("decoder_hidden"), std::string::npos);
  }
  EXPECT_THROW(parse_editor_kind("graph"), std::invalid_argument);
  EXPECT_THROW(parse_edit_encoder_kind("tree"), std::invalid_argument);
}

TEST(ModelConfig, JsonRoundTripAndUnknownField) {
  ModelConfig c = ModelConfig::desk();
  c.editor = EditorKind::Tree;
  c.edit_encoder = EditEncoderKind::Bag;
  c.tree_copy = false;
  const ModelConfig back = model_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  auto j = to_json(c);
  j["hidden"] = 3;
  EXPECT_THROW(model_config_from_json(j), std::invalid_argument);
}

TEST(Ggnn, ReadoutWeightsSumToOne) {
  EditModel m(tiny_config(EditorKind::Tree, EditEncoderKind::Graph), tiny_vocab(), 3);
  for (const auto& p : tiny_pairs()) {
    Tape t;
    const ProgramGraph g = build_change_graph(parse(p.before), parse(p.after));
    const auto out = ggnn_encode(t, g, m.vocab(), m.tree_editor()->source_ggnn());
    const auto w = out.weights.value();
    EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
    EXPECT_TRUE(std::all_of(w.begin(), w.end(), [](double x) { return x > 0.0; }));
  }
}

// Renumbering the nodes of a graph permutes the states and leaves the readout
// unchanged.
TEST(Ggnn, NodeRenumberingIsEquivariant) {
  EditModel m(tiny_config(EditorKind::Tree, EditEncoderKind::Graph), tiny_vocab(), 5);
  const auto& ggnn = m.tree_editor()->source_ggnn();
  Rng rng(8);
  for (const auto& p : tiny_pairs()) {
    const ProgramGraph g = build_change_graph(parse(p.before), parse(p.after));
    std::vector<std::size_t> perm(g.nodes.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    ProgramGraph h;
    h.nodes.resize(g.nodes.size());
    for (std::size_t i = 0; i < perm.size(); ++i) h.nodes[perm[i]] = g.nodes[i];
    for (const auto& e : g.edges)
      h.edges.push_back({static_cast<int>(perm[static_cast<std::size_t>(e.src)]),
                         static_cast<int>(perm[static_cast<std::size_t>(e.dst)]), e.type});
    std::reverse(h.edges.begin(), h.edges.end());
    Tape t;
    const auto a = ggnn.run(t, g, graph_label_ids(g, m.vocab()));
    const auto b = ggnn.run(t, h, graph_label_ids(h, m.vocab()));
    const auto sa = a.summary.value();
    const auto sb = b.summary.value();
    for (std::size_t i = 0; i < sa.size(); ++i) EXPECT_NEAR(sa[i], sb[i], 1e-10);
    const std::size_t cols = a.states.cols();
    for (std::size_t n = 0; n < perm.size(); ++n)
      for (std::size_t c = 0; c < cols; ++c)
        EXPECT_NEAR(a.states.value()[n * cols + c], b.states.value()[perm[n] * cols + c], 1e-10);
  }
}

TEST(Ggnn, RejectsUnknownEdgeType) {
  EditModel m(tiny_config(EditorKind::Tree, EditEncoderKind::Seq), tiny_vocab(), 1);
  ProgramGraph g = build_graph(parse(split_tokens("V0 = V1")));
  g.edges.push_back({0, 1, static_cast<EdgeType>(9)});
  Tape t;
  EXPECT_THROW(ggnn_encode(t, g, m.vocab(), m.tree_editor()->source_ggnn()), std::invalid_argument);
}

TEST(EditEncoder, OutputShapeForEveryKind) {
  for (auto kind : {EditEncoderKind::Seq, EditEncoderKind::Graph, EditEncoderKind::Bag}) {
    EditModel m(tiny_config(EditorKind::Seq, kind), tiny_vocab(), 2);
    for (const auto& p : tiny_pairs()) {
      const auto v = m.edit_vector(p);
      EXPECT_EQ(v.size(), 6u) << to_string(kind);
      EXPECT_TRUE(std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }));
    }
  }
}

TEST(EditEncoder, GraphEncoderRejectsUnparseablePair) {
  EditModel m(tiny_config(EditorKind::Seq, EditEncoderKind::Graph), tiny_vocab(), 2);
  const EditPair bad = pair_of("V0 = = V1", "V0 = V1");
  EXPECT_FALSE(m.accepts(bad));
  EXPECT_THROW(m.edit_vector(bad), SyntaxError);
  EditModel s(tiny_config(EditorKind::Seq, EditEncoderKind::Seq), tiny_vocab(), 2);
  EXPECT_TRUE(s.accepts(bad));
}

TEST(EditEncoder, IdenticalPairsGiveIdenticalVectors) {
  EditModel m(tiny_config(EditorKind::Seq, EditEncoderKind::Seq), tiny_vocab(), 4);
  const auto p = tiny_pairs()[0];
  EXPECT_EQ(m.edit_vector(p), m.edit_vector(p));
}

TEST(BagEncoder, PermutationInvariantBitEqual) {
  EditModel m(tiny_config(EditorKind::Seq, EditEncoderKind::Bag), tiny_vocab(), 6);
  Rng rng(31);
  const auto& pool = tiny_vocab().tokens();
  for (int trial = 0; trial < 100; ++trial) {
    TokenSequence a, b;
    for (std::size_t i = 0, n = 2 + rng.below(8); i < n; ++i) a.push_back(pool[6 + rng.below(pool.size() - 6)]);
    for (std::size_t i = 0, n = 2 + rng.below(8); i < n; ++i) b.push_back(pool[6 + rng.below(pool.size() - 6)]);
    const AlignedDiff diff = align(a, b);
    // Shuffle positions holding the same tag among themselves.
    AlignedDiff shuffled = diff;
    for (Tag tag : {Tag::Added, Tag::Removed, Tag::Replaced, Tag::Equal}) {
      std::vector<std::size_t> at;
      for (std::size_t i = 0; i < diff.size(); ++i)
        if (diff[i].tag == tag) at.push_back(i);
      std::vector<std::size_t> order = at;
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
      for (std::size_t i = 0; i < at.size(); ++i) shuffled[at[i]] = diff[order[i]];
    }
    Tape t;
    const auto xs = m.encoder().encode_bag(t, diff).value();
    const std::vector<double> x(xs.begin(), xs.end());
    const auto ys = m.encoder().encode_bag(t, shuffled).value();
    const std::vector<double> y(ys.begin(), ys.end());
    ASSERT_EQ(x.size(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i], y[i]) << "trial " << trial;
  }
}

TEST(BagEncoder, FeaturesAreSummedEmbeddings) {
  EditModel m(tiny_config(EditorKind::Seq, EditEncoderKind::Bag), tiny_vocab(), 6);
  const AlignedDiff diff = align(split_tokens("V0 = Read ( V1 )"), split_tokens("V0 = ReadAsync ( V1 , 1 )"));
  Tape t;
  const auto f = m.encoder().bag_features(t, diff).value();
  const Tensor& table = m.params().get("edit.token");
  const std::size_t e = table.cols();
  std::vector<double> want(2 * e, 0.0);
  for (const auto& d : diff) {
    if ((d.tag == Tag::Removed || d.tag == Tag::Replaced) && d.before)
      for (std::size_t c = 0; c < e; ++c) want[c] += table[m.vocab().index(*d.before) * e + c];
    if ((d.tag == Tag::Added || d.tag == Tag::Replaced) && d.after)
      for (std::size_t c = 0; c < e; ++c) want[e + c] += table[m.vocab().index(*d.after) * e + c];
  }
  for (std::size_t c = 0; c < 2 * e; ++c) EXPECT_NEAR(f[c], want[c], 1e-12);
}

// ---- sequence editor ---------------------------------------------------------

TEST(SeqEditor, StepDistributionsNormalizeAndMatchLoglik) {
  EditModel m(tiny_config(EditorKind::Seq, EditEncoderKind::Seq), tiny_vocab(), 9);
  for (const auto& p : tiny_pairs()) {
    Tape t;
    std::vector<SeqStepTrace> trace;
    LoglikStats stats;
    const double ll = m.seq_editor()->loglik(t, p, m.edit_representation(t, p), &stats, &trace).item();
    ASSERT_EQ(trace.size(), p.after.size() + 1);  // END included
    EXPECT_EQ(stats.steps, trace.size());
    double manual = 0.0;
    for (const auto& s : trace) {
      const double total = std::accumulate(s.distribution.begin(), s.distribution.end(), 0.0);
      EXPECT_NEAR(total, 1.0, 1e-9);
      for (auto id : {Vocabulary::kPad, Vocabulary::kStart, Vocabulary::kGap, Vocabulary::kSep})
        EXPECT_EQ(s.distribution[id], 0.0);
      if (p.has_context()) {
        const std::size_t sep = m.vocab().size() + p.before.size() + p.context_before->size();
        EXPECT_EQ(s.distribution[sep], 0.0);
      }
      EXPECT_GE(s.gate, 0.0);
      EXPECT_LE(s.gate, 1.0);
      EXPECT_NEAR(std::accumulate(s.attention.begin(), s.attention.end(), 0.0), 1.0, 1e-9);
      double gold = 0.0;
      for (auto i : s.gold) gold += s.distribution[i];
      ASSERT_FALSE(s.gold.empty());
      manual += std::log(gold);
    }
    EXPECT_NEAR(ll, manual, 1e-9);
  }
}

// A token that is both generatable and present in x− is scored with the sum of
// its generation and copy mass.
TEST(SeqEditor, GoldMassIsGenerationPlusMatchingCopies) {
  EditModel m(tiny_config(EditorKind::Seq, EditEncoderKind::Seq), tiny_vocab(), 10);
  const EditPair p = pair_of("V0 = V1 + V1", "V1 = V1");
  Tape t;
  std::vector<SeqStepTrace> trace;
  m.seq_editor()->loglik(t, p, m.edit_representation(t, p), nullptr, &trace);
  const std::size_t v = m.vocab().size();
  const auto& first = trace[0];
  std::vector<std::size_t> want = {m.vocab().index("V1"), v + 2, v + 4};
  auto got = first.gold;
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, want);
}

TEST(SeqEditor, OutOfVocabularyTokensAreCopiedOrUnk) {
  EditModel m(tiny_config(EditorKind::Seq, EditEncoderKind::Seq), tiny_vocab(), 10);
  // "23" is copyable from x−; "Wrap" is neither generatable nor copyable.
  const EditPair p = pair_of("V0 = V1 + 23", "V0 = Wrap ( V1 + 23 )");
  Tape t;
  std::vector<SeqStepTrace> trace;
  LoglikStats stats;
  m.seq_editor()->loglik(t, p, m.edit_representation(t, p), &stats, &trace);
  EXPECT_EQ(stats.unk, 1u);
  const std::size_t v = m.vocab().size();
  EXPECT_EQ(trace[2].gold, std::vector<std::size_t>{Vocabulary::kUnk});
  EXPECT_EQ(trace[6].gold, std::vector<std::size_t>{v + 4});
}

TEST(SeqEditor, BeamScoresSortedAndEqualTeacherForcedLoglik) {
  EditModel m(tiny_config(EditorKind::Seq, EditEncoderKind::Seq), tiny_vocab(), 12);
  std::size_t checked = 0;
  for (const auto& p : tiny_pairs()) {
    const auto rep = m.edit_vector(p);
    for (std::size_t beam : {1u, 3u}) {
      const auto cands = m.decode(p, rep, beam);
      ASSERT_FALSE(cands.empty());
      EXPECT_LE(cands.size(), beam);
      for (std::size_t i = 1; i < cands.size(); ++i) EXPECT_GE(cands[i - 1].score, cands[i].score);
      for (const auto& c : cands) {
        if (!c.finished) continue;
        if (std::find(c.tokens.begin(), c.tokens.end(), "<unk>") != c.tokens.end()) continue;
        EditPair q = p;
        q.after = c.tokens;
        Tape t;
        const double ll = m.loglik(t, q, t.constant(1, rep.size(), rep)).item();
        EXPECT_NEAR(c.score, ll, 1e-9);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 0u);
}

TEST(SeqEditor, GreedyIsBeamOfOne) {
  EditModel m(tiny_config(EditorKind::Seq, EditEncoderKind::Seq), tiny_vocab(), 13);
  const auto p = tiny_pairs()[0];
  const auto rep = m.edit_vector(p);
  // Greedy by hand: extend the best single token at each step.
  TokenSequence prefix;
  const auto& vocab = m.vocab();
  const auto beam1 = m.decode(p, rep, 1).front();
  for (std::size_t step = 0; step < beam1.tokens.size(); ++step) {
    double best = -1.0;
    std::string best_tok;
    for (std::size_t id = Vocabulary::kUnk; id < vocab.size(); ++id) {
      if (id == Vocabulary::kGap || id == Vocabulary::kSep || id == Vocabulary::kStart) continue;
      EditPair q = p;
      q.after = prefix;
      q.after.push_back(vocab.token(id));
      if (id == Vocabulary::kEnd) q.after.pop_back();
      Tape t;
      std::vector<SeqStepTrace> trace;
      m.seq_editor()->loglik(t, q, t.constant(1, rep.size(), rep), nullptr, &trace);
      const auto& s = trace[prefix.size()];
      double mass = 0.0;
      for (auto i : s.gold) mass += s.distribution[i];
      if (mass > best) {
        best = mass;
        best_tok = id == Vocabulary::kEnd ? "</s>" : vocab.token(id);
      }
    }
    ASSERT_EQ(best_tok, beam1.tokens[step]) << "step " << step;
    prefix.push_back(best_tok);
  }
}

// ---- tree editor ----------------------------------------------------------------

TEST(TreeEditor, StepDistributionsNormalizeOverLegalActions) {
  EditModel m(tiny_config(EditorKind::Tree, EditEncoderKind::Seq), tiny_vocab(), 14);
  for (const auto& p : tiny_pairs()) {
    Tape t;
    std::vector<TreeStepTrace> trace;
    LoglikStats stats;
    const double ll = m.tree_editor()->loglik(t, p, m.edit_representation(t, p), &stats, &trace).item();
    ASSERT_FALSE(trace.empty());
    EXPECT_EQ(stats.steps, trace.size());
    double manual = 0.0;
    for (const auto& s : trace) {
      double total = 0.0;
      for (std::size_t i = 0; i < s.distribution.size(); ++i) {
        total += s.distribution[i];
        if (!s.legal[i]) EXPECT_EQ(s.distribution[i], 0.0);
      }
      EXPECT_NEAR(total, 1.0, 1e-9);
      double gold = 0.0;
      for (auto i : s.gold) {
        EXPECT_TRUE(s.legal[i]);
        gold += s.distribution[i];
      }
      manual += std::log(gold);
    }
    EXPECT_NEAR(ll, manual, 1e-9);
  }
}

TEST(TreeEditor, DecodedTreesReparse) {
  EditModel m(tiny_config(EditorKind::Tree, EditEncoderKind::Seq), tiny_vocab(), 15);
  for (const auto& p : tiny_pairs()) {
    const auto cands = m.decode(p, m.edit_vector(p), 3);
    ASSERT_FALSE(cands.empty());
    for (std::size_t i = 0; i < cands.size(); ++i) {
      ASSERT_TRUE(cands[i].tree);
      EXPECT_LE(cands[i].score, 0.0);
      if (i) EXPECT_GE(cands[i - 1].score, cands[i].score);
      EXPECT_EQ(cands[i].tokens, cands[i].tree->tokens());
      if (std::find(cands[i].tokens.begin(), cands[i].tokens.end(), "<unk>") == cands[i].tokens.end())
        EXPECT_TRUE(parse(cands[i].tokens) == *cands[i].tree) << join_tokens(cands[i].tokens);
    }
  }
}

TEST(TreeEditor, ParentFeedingReceivesGradient) {
  EditModel m(tiny_config(EditorKind::Tree, EditEncoderKind::Seq), tiny_vocab(), 16);
  const auto p = tiny_pairs()[2];
  m.params().zero_grad();
  Tape t;
  t.backward(m.loglik(t, p, m.edit_representation(t, p)));
  const auto& g = m.tree_editor()->parent_projection().w->grad();
  EXPECT_GT(std::inner_product(g.begin(), g.end(), g.begin(), 0.0), 0.0);
}

TEST(TreeEditor, TreeCopyActionsOnlyWhenEnabled) {
  auto with = tiny_config(EditorKind::Tree, EditEncoderKind::Seq);
  auto without = with;
  without.tree_copy = false;
  EditModel a(with, tiny_vocab(), 1), b(without, tiny_vocab(), 1);
  const auto p = tiny_pairs()[2];
  auto count = [&](const EditModel& m) {
    Tape t;
    std::vector<TreeStepTrace> trace;
    m.tree_editor()->loglik(t, p, m.edit_representation(t, p), nullptr, &trace);
    std::size_t n = 0;
    for (const auto& s : trace) n += s.action.kind == ActionKind::TreeCp;
    return std::pair{n, trace.size()};
  };
  const auto [ca, na] = count(a);
  const auto [cb, nb] = count(b);
  EXPECT_GT(ca, 0u);
  EXPECT_EQ(cb, 0u);
  EXPECT_LT(na, nb);
}

// The tiny vocabulary has no compound or type tokens, so productions needing
// them must stay closed unless the source supplies one.
TEST(TreeEditor, SamplingNeverReachesAnEmptyActionSet) {
  struct Uniform : TreeEditor::Sampler {
    Rng rng{3};
    std::size_t choose(std::span<const std::size_t> legal, std::span<const double>) override {
      return rng.below(legal.size());
    }
  } sampler;
  EditModel m(tiny_config(EditorKind::Tree, EditEncoderKind::Seq), tiny_vocab(), 17);
  Rng rng(18);
  const std::vector<double> rep(m.config().edit_dim, 0.1);
  std::size_t finished = 0;
  for (int i = 0; i < 300; ++i) {
    const auto src = testing::random_tree(rng, testing::TokenPool::standard(), 4 + rng.below(14)).canonical();
    try {
      const auto out = m.tree_editor()->sample(src, rep, sampler, 60);
      EXPECT_TRUE(is_valid_tree(out));
      ++finished;
    } catch (const std::runtime_error& e) {
      EXPECT_NE(std::string(e.what()).find("exceeded"), std::string::npos) << e.what();
    }
  }
  EXPECT_GT(finished, 0u);
}

// ---- checkpoints -------------------------------------------------------------------

TEST(Checkpoint, SaveLoadIsBitExact) {
  const auto dir = std::filesystem::temp_directory_path() / "editrep_model_ckpt";
  std::filesystem::create_directories(dir);
  for (auto editor : {EditorKind::Seq, EditorKind::Tree}) {
    EditModel m(tiny_config(editor, EditEncoderKind::Graph), tiny_vocab(), 21);
    const std::string path = (dir / (std::string(to_string(editor)) + ".erck")).string();
    m.save(path, {{"note", "x"}});
    nlohmann::json meta;
    const auto back = EditModel::load(path, &meta);
    EXPECT_EQ(meta.at("note"), "x");
    EXPECT_EQ(back->vocab().tokens(), m.vocab().tokens());
    for (const auto& name : m.params().names())
      EXPECT_TRUE(std::ranges::equal(std::as_const(*back).params().get(name).values(),
                                     std::as_const(m).params().get(name).values()))
          << name;
    const auto p = tiny_pairs()[1];
    EXPECT_EQ(back->edit_vector(p), m.edit_vector(p));
  }
  EXPECT_THROW(EditModel::load((dir / "missing.erck").string()), std::runtime_error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace editrep
