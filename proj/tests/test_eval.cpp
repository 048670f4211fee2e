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
#include <fstream>

#include "editrep/eval.hpp"
#include "model_checks.hpp"

namespace editrep {
namespace {

std::vector<double> random_vector(Rng& rng, std::size_t d) {
  std::vector<double> v(d);
  for (double& x : v) x = rng.normal();
  return v;
}

TEST(Cosine, IdenticalOrthogonalAndZero) {
  const std::vector<double> a = {1.0, 2.0, 0.0}, b = {0.0, 0.0, 3.0}, z = {0.0, 0.0, 0.0};
  EXPECT_NEAR(cosine_similarity(a, a), 1.0, 1e-15);
  EXPECT_EQ(cosine_similarity(a, b), 0.0);
  bool flagged = false;
  EXPECT_EQ(cosine_similarity(a, z, &flagged), 0.0);
  EXPECT_TRUE(flagged);
  EXPECT_THROW(cosine_similarity(a, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Neighbors, DuplicateVectorRanksFirst) {
  Rng rng(1);
  RepresentationIndex index;
  const auto q = random_vector(rng, 8);
  for (int i = 0; i < 20; ++i) index.add("r" + std::to_string(i), random_vector(rng, 8));
  index.add("copy", q);
  index.add("self", q);
  const auto r = nearest_neighbors("self", q, index, 5);
  ASSERT_EQ(r.neighbors.size(), 5u);
  EXPECT_EQ(r.neighbors[0].id, "copy");
  EXPECT_NEAR(r.neighbors[0].similarity, 1.0, 1e-12);
  for (const auto& n : r.neighbors) EXPECT_NE(n.id, "self");
}

TEST(Neighbors, MatchesIndependentRescan) {
  Rng rng(2);
  RepresentationIndex index;
  for (int i = 0; i < 1000; ++i) index.add("p" + std::to_string(1000 + i), random_vector(rng, 6));
  // Exact ties to check the id tie-break.
  index.add("p0999", index.vectors[10]);
  for (int q = 0; q < 20; ++q) {
    const auto query = random_vector(rng, 6);
    const auto got = nearest_neighbors("none", query, index, 7);
    std::vector<std::pair<double, std::string>> all;
    for (std::size_t i = 0; i < index.size(); ++i) {
      double dot = 0, na = 0, nb = 0;
      for (std::size_t j = 0; j < query.size(); ++j) {
        dot += query[j] * index.vectors[i][j];
        na += query[j] * query[j];
        nb += index.vectors[i][j] * index.vectors[i][j];
      }
      all.emplace_back(dot / std::sqrt(na * nb), index.ids[i]);
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    ASSERT_EQ(got.neighbors.size(), 7u);
    for (std::size_t i = 0; i < 7; ++i) {
      EXPECT_NEAR(got.neighbors[i].similarity, all[i].first, 1e-12);
      if (i && got.neighbors[i].similarity == got.neighbors[i - 1].similarity)
        EXPECT_LT(got.neighbors[i - 1].id, got.neighbors[i].id);
      if (i) EXPECT_GE(got.neighbors[i - 1].similarity, got.neighbors[i].similarity);
    }
  }
}

TEST(Neighbors, PreconditionsAndZeroNormFlag) {
  RepresentationIndex empty;
  const std::vector<double> q = {1.0, 0.0};
  EXPECT_THROW(nearest_neighbors("q", q, empty, 1), std::invalid_argument);
  RepresentationIndex index;
  index.add("a", {0.0, 0.0});
  index.add("b", {1.0, 1.0});
  EXPECT_THROW(nearest_neighbors("q", q, index, 0), std::invalid_argument);
  const auto r = nearest_neighbors("q", q, index, 5);
  EXPECT_EQ(r.neighbors.size(), 2u);
  EXPECT_TRUE(r.zero_norm);
  EXPECT_EQ(r.neighbors.back().id, "a");
  EXPECT_EQ(r.neighbors.back().similarity, 0.0);
}

TEST(Dcg, WorkedExamples) {
  const std::vector<int> perfect = {2, 2, 2, 2, 2};
  EXPECT_DOUBLE_EQ(ndcg(perfect, 5).value, 1.0);
  const std::vector<int> r = {0, 2};
  EXPECT_NEAR(dcg(r, 2), 2.0 / std::log2(3.0), 1e-12);
  EXPECT_NEAR(dcg(r, 2), 1.2618595071429148, 1e-12);
  EXPECT_NEAR(ndcg(r, 2).value, 0.6309297535714574, 1e-12);
  EXPECT_DOUBLE_EQ(dcg(std::vector<int>{1, 1}, 1), 1.0);
}

TEST(Dcg, AllZeroFlaggedAndErrors) {
  const auto r = ndcg(std::vector<int>{0, 0, 0}, 3);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_TRUE(r.all_zero);
  EXPECT_THROW(dcg(std::vector<int>{1, 2}, 3), std::invalid_argument);
  EXPECT_THROW(dcg(std::vector<int>{1, 2}, 0), std::invalid_argument);
  EXPECT_THROW(dcg(std::vector<int>{1, 3}, 2), std::invalid_argument);
  EXPECT_THROW(dcg(std::vector<int>{-1}, 1), std::invalid_argument);
}

TEST(Dcg, NdcgBoundedAndInvariantToTrailingZeros) {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<int> r(1 + rng.below(8));
    for (int& x : r) x = static_cast<int>(rng.below(3));
    const std::size_t k = 1 + rng.below(r.size());
    const auto a = ndcg(r, k);
    EXPECT_GE(a.value, 0.0);
    EXPECT_LE(a.value, 1.0 + 1e-12);
    std::vector<int> padded = r;
    padded.resize(r.size() + 1 + rng.below(4), 0);
    EXPECT_DOUBLE_EQ(ndcg(padded, k).value, a.value);
    std::vector<int> sorted = r;
    std::sort(sorted.rbegin(), sorted.rend());
    if (!a.all_zero) EXPECT_DOUBLE_EQ(ndcg(sorted, sorted.size()).value, 1.0);
  }
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("editrep_eval_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::string write(const std::string& name, const std::string& text) {
    const auto p = (dir_ / name).string();
    std::ofstream(p) << text;
    return p;
  }
  std::filesystem::path dir_;
};

using Ratings = TempDir;

TEST_F(Ratings, LoadsInRankOrder) {
  const auto p = write("r.csv", "query_id,neighbor_id,rating\nq1,a,2\nq1,b,0\nq2,c,1\n");
  const auto r = load_ratings_csv(p);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r.at("q1"), (std::vector<int>{2, 0}));
  EXPECT_EQ(r.at("q2"), (std::vector<int>{1}));
}

TEST_F(Ratings, BadRatingNamesLine) {
  const auto p = write("r.csv", "query_id,neighbor_id,rating\nq1,a,2\nq1,b,5\n");
  try {
    load_ratings_csv(p);
    FAIL();
  } catch (const CorpusError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(load_ratings_csv(write("s.csv", "query_id,neighbor_id,rating\nq1,a\n")), CorpusError);
}

// ---- editor accuracy and transfer ----------------------------------------------

using testing::pair_of;
using testing::tiny_config;
using testing::tiny_vocab;

std::vector<EditPair> labeled_pairs() {
  auto ps = testing::tiny_pairs();
  ps.push_back(pair_of("V0 = Read ( V2 )", "V0 = ReadAsync ( V2 )"));
  ps.push_back(pair_of("V1 = Read ( V0 )", "V1 = ReadAsync ( V0 )"));
  const char* cats[] = {"async", "wrap", "swap", "async", "async"};
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ps[i].id = "p" + std::to_string(i);
    ps[i].category = cats[i];
  }
  return ps;
}

TEST(EditorAccuracy, AccuracyBoundedByRecallAndOutcomesConsistent) {
  for (auto editor : {EditorKind::Seq, EditorKind::Tree}) {
    EditModel m(tiny_config(editor, EditEncoderKind::Seq), tiny_vocab(), 4);
    const auto pairs = labeled_pairs();
    for (auto src : {RepSource::Gold, RepSource::Zero}) {
      const auto r = editor_accuracy(m, pairs, src, 3, 2);
      EXPECT_EQ(r.n, pairs.size());
      EXPECT_LE(r.acc_at_1, r.recall_at_k);
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        EXPECT_EQ(r.outcomes[i].id, pairs[i].id);
        EXPECT_EQ(r.outcomes[i].exact, r.outcomes[i].top == pairs[i].after);
        if (r.outcomes[i].exact) EXPECT_TRUE(r.outcomes[i].in_top_k);
      }
    }
  }
}

TEST(EditorAccuracy, ThreadCountDoesNotChangeResults) {
  EditModel m(tiny_config(EditorKind::Seq, EditEncoderKind::Seq), tiny_vocab(), 4);
  const auto pairs = labeled_pairs();
  const auto a = editor_accuracy(m, pairs, RepSource::Gold, 3, 1);
  const auto b = editor_accuracy(m, pairs, RepSource::Gold, 3, 4);
  for (std::size_t i = 0; i < pairs.size(); ++i) EXPECT_EQ(a.outcomes[i].top, b.outcomes[i].top);
}

TEST(Transfer, SingletonCategoryMatchesGoldCorrectness) {
  EditModel m(tiny_config(EditorKind::Seq, EditEncoderKind::Seq), tiny_vocab(), 7);
  const auto pairs = labeled_pairs();
  const auto rows = transfer_eval(m, pairs, 10, 1, 3);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& row : rows) {
    EXPECT_TRUE(row.warning.has_value());  // every category is smaller than 10
    EXPECT_EQ(row.seed_ids.size(), row.size);
    if (row.size != 1) continue;
    EXPECT_TRUE(row.best_acc == 0.0 || row.best_acc == 1.0);
    std::vector<EditPair> one;
    for (const auto& p : pairs)
      if (*p.category == row.category) one.push_back(p);
    EXPECT_EQ(row.best_acc, editor_accuracy(m, one, RepSource::Gold, 3).acc_at_1);
  }
}

TEST(Transfer, IdenticalPairsEqualGoldAccuracy) {
  EditModel m(tiny_config(EditorKind::Seq, EditEncoderKind::Seq), tiny_vocab(), 8);
  std::vector<EditPair> same;
  for (int i = 0; i < 4; ++i) {
    auto p = labeled_pairs()[0];
    p.id = "s" + std::to_string(i);
    same.push_back(p);
  }
  const auto rows = transfer_eval(m, same, 2, 3, 3);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_FALSE(rows[0].warning.has_value());
  EXPECT_EQ(rows[0].seed_ids.size(), 2u);
  EXPECT_EQ(rows[0].best_acc, editor_accuracy(m, same, RepSource::Gold, 3).acc_at_1);
}

// Using every member as its own seed upper-bounds sampled seeds.
TEST(Transfer, AllSeedsUpperBoundSampledSeeds) {
  EditModel m(tiny_config(EditorKind::Seq, EditEncoderKind::Seq), tiny_vocab(), 9);
  const auto pairs = labeled_pairs();
  const auto full = transfer_eval(m, pairs, 100, 5, 3);
  for (std::uint64_t s = 0; s < 4; ++s) {
    const auto some = transfer_eval(m, pairs, 1, s, 3);
    for (std::size_t i = 0; i < full.size(); ++i) EXPECT_LE(some[i].best_acc, full[i].best_acc);
  }
}

TEST(Transfer, DeterministicGivenSeedAndRejectsUnlabeled) {
  EditModel m(tiny_config(EditorKind::Seq, EditEncoderKind::Seq), tiny_vocab(), 9);
  const auto pairs = labeled_pairs();
  const auto a = transfer_eval(m, pairs, 2, 11, 3);
  const auto b = transfer_eval(m, pairs, 2, 11, 3, 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].seed_ids, b[i].seed_ids);
    EXPECT_EQ(a[i].best_acc, b[i].best_acc);
  }
  auto unlabeled = pairs;
  unlabeled[1].category.reset();
  EXPECT_THROW(transfer_eval(m, unlabeled, 2, 11), std::invalid_argument);
}

// ---- clustering -------------------------------------------------------------------

TEST(Kmeans, SeparatesDistantClouds) {
  Rng rng(4);
  std::vector<std::vector<double>> pts;
  std::vector<std::string> labels;
  for (int i = 0; i < 60; ++i) {
    const bool left = i % 2 == 0;
    pts.push_back({left ? 10.0 : -10.0, 1.0 + 0.05 * rng.normal(), 0.05 * rng.normal()});
    labels.push_back(left ? "L" : "R");
  }
  const auto r = kmeans(pts, 2, 1);
  EXPECT_NE(r.assignment[0], r.assignment[1]);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(r.assignment[i], r.assignment[i % 2]);
  EXPECT_DOUBLE_EQ(cluster_purity(r.assignment, labels), 1.0);
}

TEST(Kmeans, OneClusterPerPoint) {
  Rng rng(5);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 12; ++i) pts.push_back(random_vector(rng, 4));
  const auto r = kmeans(pts, pts.size(), 2);
  std::vector<std::size_t> a = r.assignment;
  std::sort(a.begin(), a.end());
  EXPECT_EQ(std::unique(a.begin(), a.end()) - a.begin(), 12);
  EXPECT_NEAR(r.inertia.back(), 0.0, 1e-20);
}

TEST(Kmeans, PropertiesOnRandomData) {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<double>> pts;
    const std::size_t n = 30 + rng.below(50);
    for (std::size_t i = 0; i < n; ++i) pts.push_back(random_vector(rng, 5));
    const std::size_t k = 2 + rng.below(6);
    const auto r = kmeans(pts, k, trial);
    const auto again = kmeans(pts, k, trial);
    EXPECT_EQ(r.assignment, again.assignment);
    EXPECT_EQ(r.centroids, again.centroids);
    ASSERT_EQ(r.assignment.size(), n);
    for (std::size_t i = 1; i < r.inertia.size(); ++i) EXPECT_LE(r.inertia[i], r.inertia[i - 1] + 1e-12);
    // Each centroid is the mean of its L2-normalized members.
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> mean(5, 0.0);
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (r.assignment[i] != c) continue;
        double norm = 0.0;
        for (double v : pts[i]) norm += v * v;
        for (std::size_t j = 0; j < 5; ++j) mean[j] += pts[i][j] / std::sqrt(norm);
        ++count;
      }
      ASSERT_GT(count, 0u);
      for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(r.centroids[c][j], mean[j] / count, 1e-9);
    }
  }
}

TEST(Kmeans, DuplicatePointsStillFillEveryCluster) {
  std::vector<std::vector<double>> pts(6, {1.0, 0.0});
  pts.push_back({0.0, 1.0});
  const auto r = kmeans(pts, 3, 0);
  std::vector<std::size_t> count(3, 0);
  for (auto a : r.assignment) ++count[a];
  for (auto c : count) EXPECT_GT(c, 0u);
  EXPECT_THROW(kmeans(pts, 8, 0), std::invalid_argument);
  EXPECT_THROW(kmeans(pts, 0, 0), std::invalid_argument);
}

TEST(Purity, MajorityFraction) {
  EXPECT_DOUBLE_EQ(cluster_purity({0, 0, 0, 1, 1}, {"a", "a", "b", "b", "b"}), 4.0 / 5.0);
  EXPECT_THROW(cluster_purity({0}, {"a", "b"}), std::invalid_argument);
}

}  // namespace
}  // namespace editrep
