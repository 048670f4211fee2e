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

#include "editrep/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "editrep/parallel.hpp"

namespace editrep {

// ---- retrieval -------------------------------------------------------------

double cosine_similarity(std::span<const double> a, std::span<const double> b, bool* zero_norm) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine of vectors of length " + std::to_string(a.size()) + " and " +
                                std::to_string(b.size()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    if (zero_norm) *zero_norm = true;
    return 0.0;
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

void RepresentationIndex::add(std::string id, std::vector<double> v) {
  if (!vectors.empty() && v.size() != vectors.front().size())
    throw std::invalid_argument("representation " + id + " has length " + std::to_string(v.size()) +
                                ", index holds length " + std::to_string(vectors.front().size()));
  ids.push_back(std::move(id));
  vectors.push_back(std::move(v));
}

NeighborResult nearest_neighbors(const std::string& query_id, std::span<const double> query,
                                 const RepresentationIndex& index, std::size_t k) {
  if (index.size() == 0) throw std::invalid_argument("nearest_neighbors on an empty index");
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  NeighborResult r;
  r.query_id = query_id;
  std::vector<Neighbor> all;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index.ids[i] == query_id) continue;
    all.push_back({index.ids[i], cosine_similarity(query, index.vectors[i], &r.zero_norm)});
  }
  auto better = [](const Neighbor& a, const Neighbor& b) {
    return a.similarity != b.similarity ? a.similarity > b.similarity : a.id < b.id;
  };
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), better);
  all.resize(keep);
  r.neighbors = std::move(all);
  return r;
}

// ---- ranking metrics ---------------------------------------------------------

double dcg(std::span<const int> ratings, std::size_t k) {
  if (k < 1 || k > ratings.size())
    throw std::invalid_argument("dcg@" + std::to_string(k) + " over " + std::to_string(ratings.size()) +
                                " ratings");
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (ratings[i] < 0 || ratings[i] > 2)
      throw std::invalid_argument("rating " + std::to_string(ratings[i]) + " outside 0..2");
    s += ratings[i] / std::log2(static_cast<double>(i) + 2.0);
  }
  return s;
}

NdcgResult ndcg(std::span<const int> ratings, std::size_t k) {
  const double d = dcg(ratings, k);
  std::vector<int> ideal(ratings.begin(), ratings.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double idcg = dcg(ideal, k);
  if (idcg == 0.0) return {0.0, true};
  return {d / idcg, false};
}

std::map<std::string, std::vector<int>> load_ratings_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ratings " + path);
  std::map<std::string, std::vector<int>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("query_id", 0) == 0) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    if (cols.size() != 3) throw CorpusError(lineno, "expected query_id,neighbor_id,rating");
    int r = -1;
    try {
      std::size_t used = 0;
      r = std::stoi(cols[2], &used);
      if (used != cols[2].size()) r = -1;
    } catch (const std::exception&) {
    }
    if (r < 0 || r > 2) throw CorpusError(lineno, "rating '" + cols[2] + "' is not 0, 1 or 2");
    out[cols[0]].push_back(r);
  }
  return out;
}

// ---- editor accuracy ---------------------------------------------------------

namespace {

AccuracyResult score(const EditModel& model, const std::vector<EditPair>& pairs, std::size_t k,
                     std::size_t threads, const std::function<std::vector<double>(const EditPair&)>& rep) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  AccuracyResult r;
  r.k = k;
  r.n = pairs.size();
  r.outcomes.resize(pairs.size());
  const std::size_t beam = std::max(k, model.config().beam_size);
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    const EditPair& p = pairs[i];
    PairOutcome& o = r.outcomes[i];
    o.id = p.id;
    const auto cands = model.decode(p, rep(p), beam);
    if (!cands.empty()) o.top = cands.front().tokens;
    o.exact = !cands.empty() && cands.front().tokens == p.after;
    for (std::size_t j = 0; j < std::min(k, cands.size()); ++j)
      if (cands[j].tokens == p.after) o.in_top_k = true;
  });
  std::size_t exact = 0, hit = 0;
  for (const auto& o : r.outcomes) {
    exact += o.exact;
    hit += o.in_top_k;
  }
  if (r.n > 0) {
    r.acc_at_1 = static_cast<double>(exact) / static_cast<double>(r.n);
    r.recall_at_k = static_cast<double>(hit) / static_cast<double>(r.n);
  }
  return r;
}

}  // namespace

AccuracyResult editor_accuracy(const EditModel& model, const std::vector<EditPair>& pairs,
                               RepSource source, std::size_t k, std::size_t threads) {
  const std::vector<double> zero(model.config().edit_dim, 0.0);
  return score(model, pairs, k, threads, [&](const EditPair& p) {
    return source == RepSource::Gold ? model.edit_vector(p) : zero;
  });
}

AccuracyResult apply_representation(const EditModel& model, const std::vector<EditPair>& pairs,
                                    std::span<const double> rep, std::size_t k, std::size_t threads) {
  const std::vector<double> v(rep.begin(), rep.end());
  return score(model, pairs, k, threads, [&](const EditPair&) { return v; });
}

std::vector<TransferRow> transfer_eval(const EditModel& model, const std::vector<EditPair>& pairs,
                                       std::size_t seeds_per_category, std::uint64_t seed,
                                       std::size_t k, std::size_t threads) {
  if (seeds_per_category < 1) throw std::invalid_argument("seeds_per_category must be at least 1");
  std::map<std::string, std::vector<EditPair>> groups;
  for (const auto& p : pairs) {
    if (!p.category) throw std::invalid_argument("pair '" + p.id + "' has no category");
    groups[*p.category].push_back(p);
  }
  std::vector<TransferRow> rows;
  Rng rng(seed);
  for (const auto& [category, members] : groups) {
    TransferRow row;
    row.category = category;
    row.size = members.size();
    std::vector<std::size_t> order(members.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    std::size_t n_seeds = seeds_per_category;
    if (members.size() < seeds_per_category) {
      n_seeds = members.size();
      row.warning = "category has " + std::to_string(members.size()) + " pairs; using all as seeds";
    }
    row.best_acc = -1.0;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const EditPair& sp = members[order[s]];
      row.seed_ids.push_back(sp.id);
      const auto r = apply_representation(model, members, model.edit_vector(sp), k, threads);
      if (r.acc_at_1 > row.best_acc || (r.acc_at_1 == row.best_acc && r.recall_at_k > row.best_recall)) {
        row.best_acc = r.acc_at_1;
        row.best_recall = r.recall_at_k;
        row.best_seed = sp.id;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---- clustering ----------------------------------------------------------------

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

ClusterAssignment kmeans(const std::vector<std::vector<double>>& points, std::size_t k,
                         std::uint64_t seed, std::size_t max_iterations, double tolerance) {
  const std::size_t n = points.size();
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  if (k > n) throw std::invalid_argument("k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " points");
  const std::size_t dim = points.front().size();
  std::vector<std::vector<double>> x(points);
  for (auto& p : x) {
    if (p.size() != dim) throw std::invalid_argument("points of different lengths");
    double norm = 0.0;
    for (double v : p) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (double& v : p) v /= norm;
  }

  ClusterAssignment r;
  Rng rng(seed);
  // k-means++ seeding.
  r.centroids.push_back(x[rng.below(n)]);
  std::vector<double> d2(n);
  while (r.centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : r.centroids) best = std::min(best, sq_dist(x[i], c));
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (pick = 0; pick + 1 < n && u >= d2[pick]; ++pick) u -= d2[pick];
      while (d2[pick] == 0.0 && pick + 1 < n) ++pick;
    } else {
      pick = rng.below(n);
    }
    r.centroids.push_back(x[pick]);
  }

  r.assignment.assign(n, 0);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_dist(x[i], r.centroids[c]);
        if (d < best) {
          best = d;
          r.assignment[i] = c;
        }
      }
    }
    std::vector<std::size_t> count(k, 0);
    for (auto a : r.assignment) ++count[a];
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] > 0) continue;
      // Empty cluster: take the point farthest from its centroid among clusters
      // that can spare one.
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (count[r.assignment[i]] < 2) continue;
        const double d = sq_dist(x[i], r.centroids[r.assignment[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far == n) break;
      --count[r.assignment[far]];
      r.assignment[far] = c;
      ++count[c];
      ++r.reseeded;
    }
    std::vector<std::vector<double>> next(k, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < dim; ++j) next[r.assignment[i]][j] += x[i][j];
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == 0) {
        next[c] = r.centroids[c];
        continue;
      }
      for (double& v : next[c]) v /= static_cast<double>(count[c]);
      shift = std::max(shift, std::sqrt(sq_dist(next[c], r.centroids[c])));
    }
    r.centroids = std::move(next);
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) inertia += sq_dist(x[i], r.centroids[r.assignment[i]]);
    r.inertia.push_back(inertia);
    r.iterations = it + 1;
    if (shift < tolerance) break;
  }
  return r;
}

double cluster_purity(const std::vector<std::size_t>& assignment, const std::vector<std::string>& labels) {
  if (assignment.size() != labels.size()) throw std::invalid_argument("assignment and labels differ in length");
  if (assignment.empty()) return 0.0;
  std::map<std::size_t, std::map<std::string, std::size_t>> counts;
  for (std::size_t i = 0; i < labels.size(); ++i) ++counts[assignment[i]][labels[i]];
  std::size_t majority = 0;
  for (const auto& [c, m] : counts) {
    std::size_t best = 0;
    for (const auto& [l, n] : m) best = std::max(best, n);
    majority += best;
  }
  return static_cast<double>(majority) / static_cast<double>(labels.size());
}

}  // namespace editrep
