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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "editrep/corpus.hpp"
#include "editrep/model.hpp"

namespace editrep {

// ---- retrieval -------------------------------------------------------------

// Cosine similarity; 0 when either vector has zero norm (and *zero_norm set).
double cosine_similarity(std::span<const double> a, std::span<const double> b,
                         bool* zero_norm = nullptr);

struct RepresentationIndex {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> vectors;

  void add(std::string id, std::vector<double> v);
  std::size_t size() const { return ids.size(); }
};

struct Neighbor {
  std::string id;
  double similarity = 0.0;
};

struct NeighborResult {
  std::string query_id;
  std::vector<Neighbor> neighbors;  // similarity non-increasing, ties by id
  bool zero_norm = false;           // the query or some entry had zero norm
};

// Brute-force top-k by cosine similarity. Entries with id == query_id are skipped.
NeighborResult nearest_neighbors(const std::string& query_id, std::span<const double> query,
                                 const RepresentationIndex& index, std::size_t k);

// ---- ranking metrics ---------------------------------------------------------

// Ratings on the 0 (unrelated), 1 (similar), 2 (same edit) scale.
double dcg(std::span<const int> ratings, std::size_t k);

struct NdcgResult {
  double value = 0.0;
  bool all_zero = false;  // IDCG was 0; value reported as 0
};
NdcgResult ndcg(std::span<const int> ratings, std::size_t k);

// CSV with header "query_id,neighbor_id,rating"; rows of a query are in rank
// order. Throws CorpusError (with the line) on a malformed row or rating.
std::map<std::string, std::vector<int>> load_ratings_csv(const std::string& path);

// ---- editor accuracy ---------------------------------------------------------

enum class RepSource { Gold, Zero };

struct PairOutcome {
  std::string id;
  bool exact = false;      // top-1 equals x+
  bool in_top_k = false;
  TokenSequence top;
};

struct AccuracyResult {
  double acc_at_1 = 0.0;
  double recall_at_k = 0.0;
  std::size_t k = 0;
  std::size_t n = 0;
  std::vector<PairOutcome> outcomes;
};

AccuracyResult editor_accuracy(const EditModel& model, const std::vector<EditPair>& pairs,
                               RepSource source, std::size_t k, std::size_t threads = 1);

// Accuracy when every pair is edited with the representation `rep`.
AccuracyResult apply_representation(const EditModel& model, const std::vector<EditPair>& pairs,
                                    std::span<const double> rep, std::size_t k, std::size_t threads = 1);

struct TransferRow {
  std::string category;
  std::size_t size = 0;
  std::vector<std::string> seed_ids;
  double best_acc = 0.0;
  double best_recall = 0.0;
  std::string best_seed;
  std::optional<std::string> warning;
};

// For each category: sample seeds, apply each seed's representation to every
// member's x−, report the best exact-match accuracy and recall@k over seeds.
std::vector<TransferRow> transfer_eval(const EditModel& model, const std::vector<EditPair>& pairs,
                                       std::size_t seeds_per_category, std::uint64_t seed,
                                       std::size_t k = 5, std::size_t threads = 1);

// ---- clustering ----------------------------------------------------------------

struct ClusterAssignment {
  std::vector<std::size_t> assignment;          // point -> cluster
  std::vector<std::vector<double>> centroids;   // over L2-normalized points
  std::vector<double> inertia;                  // after each Lloyd iteration
  std::size_t iterations = 0;
  std::size_t reseeded = 0;                     // empty clusters re-seeded
};

// k-means++ on L2-normalized points, then Lloyd iterations until every
// centroid moves less than tolerance or max_iterations is reached.
ClusterAssignment kmeans(const std::vector<std::vector<double>>& points, std::size_t k,
                         std::uint64_t seed, std::size_t max_iterations = 200,
                         double tolerance = 1e-6);

// Fraction of points whose label is their cluster's majority label.
double cluster_purity(const std::vector<std::size_t>& assignment, const std::vector<std::string>& labels);

}  // namespace editrep
