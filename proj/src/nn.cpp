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

#include "editrep/nn.hpp"

#include <stdexcept>

namespace editrep {

// ---- ParamStore -----------------------------------------------------------

Tensor& ParamStore::add(const std::string& name, std::size_t rows, std::size_t cols) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter " + name);
  tensors_.push_back(Tensor::zeros({rows, cols}, true));
  names_.push_back(name);
  index_.emplace(name, tensors_.size() - 1);
  return tensors_.back();
}

Tensor& ParamStore::get(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter " + std::string(name));
  return tensors_[it->second];
}

const Tensor& ParamStore::get(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter " + std::string(name));
  return tensors_[it->second];
}

std::vector<Tensor*> ParamStore::tensors() {
  std::vector<Tensor*> out;
  out.reserve(tensors_.size());
  for (auto& t : tensors_) out.push_back(&t);
  return out;
}

std::size_t ParamStore::numel() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.numel();
  return n;
}

std::vector<NamedTensor> ParamStore::snapshot() const {
  std::vector<NamedTensor> out;
  out.reserve(names_.size());
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const Tensor& t = tensors_[i];
    out.push_back({names_[i], Tensor(t.shape(), {t.values().begin(), t.values().end()})});
  }
  return out;
}

void ParamStore::restore(const std::vector<NamedTensor>& tensors) {
  if (tensors.size() != names_.size())
    throw std::invalid_argument("checkpoint has " + std::to_string(tensors.size()) +
                                " tensors, model has " + std::to_string(names_.size()));
  for (const auto& nt : tensors) {
    Tensor& dst = get(nt.name);
    if (dst.rows() != nt.tensor.rows() || dst.cols() != nt.tensor.cols())
      throw std::invalid_argument("parameter " + nt.name + " has shape " +
                                  shape_string(nt.tensor.shape()) + ", expected " +
                                  shape_string(dst.shape()));
    std::copy(nt.tensor.values().begin(), nt.tensor.values().end(), dst.values().begin());
  }
}

void ParamStore::zero_grad() {
  for (auto& t : tensors_) t.zero_grad();
}

// ---- layers ------------------------------------------------------------------

Linear Linear::create(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out,
                      Rng& rng, bool bias) {
  Linear l;
  l.in = in;
  l.out = out;
  l.w = &ps.add(name + ".w", in, out);
  init_glorot_uniform(*l.w, rng);
  if (bias) l.b = &ps.add(name + ".b", 1, out);
  return l;
}

Var Linear::operator()(Tape& t, Var x) const {
  Var y = matmul(x, t.param(*w));
  return b ? add(y, t.param(*b)) : y;
}

Embedding Embedding::create(ParamStore& ps, const std::string& name, std::size_t count,
                            std::size_t dim, Rng& rng) {
  Embedding e;
  e.table = &ps.add(name, count, dim);
  init_uniform(*e.table, -0.1, 0.1, rng);
  return e;
}

Var Embedding::operator()(Tape& t, std::span<const std::size_t> ids) const {
  return embedding_lookup(t.param(*table), ids);
}

Var Embedding::row(Tape& t, std::size_t id) const {
  const std::size_t ids[1] = {id};
  return embedding_lookup(t.param(*table), ids);
}

LstmCell LstmCell::create(ParamStore& ps, const std::string& name, std::size_t in,
                          std::size_t hidden, Rng& rng) {
  LstmCell c;
  c.hidden = hidden;
  c.gates = Linear::create(ps, name, in + hidden, 4 * hidden, rng);
  // Forget gate bias starts at 1.
  for (std::size_t j = hidden; j < 2 * hidden; ++j) (*c.gates.b)[j] = 1.0;
  return c;
}

LstmState LstmCell::zero(Tape& t) const { return {t.zeros(1, hidden), t.zeros(1, hidden)}; }

LstmState LstmCell::step(Tape& t, Var x, LstmState s) const {
  const std::size_t h = hidden;
  Var z = gates(t, concat({x, s.h}, 1));
  Var i = sigmoid(slice(z, 1, 0, h));
  Var f = sigmoid(slice(z, 1, h, 2 * h));
  Var g = tanh(slice(z, 1, 2 * h, 3 * h));
  Var o = sigmoid(slice(z, 1, 3 * h, 4 * h));
  Var c = add(mul(f, s.c), mul(i, g));
  return {mul(o, tanh(c)), c};
}

BiLstm BiLstm::create(ParamStore& ps, const std::string& name, std::size_t in, std::size_t hidden,
                      Rng& rng) {
  return {LstmCell::create(ps, name + ".fwd", in, hidden, rng),
          LstmCell::create(ps, name + ".bwd", in, hidden, rng)};
}

BiLstm::Output BiLstm::run(Tape& t, Var inputs) const {
  const std::size_t n = inputs.rows();
  if (n == 0) throw std::invalid_argument("BiLstm::run on an empty sequence");
  std::vector<Var> xs(n), fw(n), bw(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = slice(inputs, 0, i, i + 1);
  LstmState s = fwd.zero(t);
  for (std::size_t i = 0; i < n; ++i) fw[i] = (s = fwd.step(t, xs[i], s)).h;
  s = bwd.zero(t);
  for (std::size_t i = n; i-- > 0;) bw[i] = (s = bwd.step(t, xs[i], s)).h;
  std::vector<Var> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = concat({fw[i], bw[i]}, 1);
  return {n == 1 ? rows[0] : concat(rows, 0), concat({fw[n - 1], bw[0]}, 1)};
}

// ---- GGNN ----------------------------------------------------------------------

Ggnn Ggnn::create(ParamStore& ps, const std::string& name, std::size_t label_count,
                  std::size_t embed_dim, std::size_t hidden, std::size_t value_dim,
                  std::size_t layers, std::size_t steps, Rng& rng) {
  Ggnn g;
  g.hidden = hidden;
  g.steps = steps;
  g.labels = Embedding::create(ps, name + ".label", label_count, embed_dim, rng);
  g.tags = Embedding::create(ps, name + ".tag", kTagCount, embed_dim, rng);
  g.init = Linear::create(ps, name + ".init", 2 * embed_dim, hidden, rng);
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string p = name + ".layer" + std::to_string(l);
    Layer layer;
    for (std::size_t e = 0; e < 2 * kEdgeTypeCount; ++e) {
      Tensor& w = ps.add(p + ".edge" + std::to_string(e), hidden, hidden);
      init_glorot_uniform(w, rng);
      layer.edge.push_back(&w);
    }
    layer.wz = Linear::create(ps, p + ".wz", hidden, hidden, rng);
    layer.wr = Linear::create(ps, p + ".wr", hidden, hidden, rng);
    layer.wh = Linear::create(ps, p + ".wh", hidden, hidden, rng);
    layer.uz = Linear::create(ps, p + ".uz", hidden, hidden, rng, false);
    layer.ur = Linear::create(ps, p + ".ur", hidden, hidden, rng, false);
    layer.uh = Linear::create(ps, p + ".uh", hidden, hidden, rng, false);
    g.layers.push_back(std::move(layer));
  }
  g.score = Linear::create(ps, name + ".score", hidden, 1, rng);
  g.value = Linear::create(ps, name + ".value", hidden, value_dim, rng);
  return g;
}

Ggnn::Output Ggnn::run(Tape& t, const ProgramGraph& g, std::span<const std::size_t> label_ids) const {
  const std::size_t n = g.nodes.size();
  if (n == 0) throw std::invalid_argument("GGNN on an empty graph");
  if (label_ids.size() != n) throw std::invalid_argument("GGNN label ids do not match graph nodes");

  // Message lists per directed edge type; reversed types follow the forward ones.
  std::vector<std::vector<std::size_t>> src(2 * kEdgeTypeCount), dst(2 * kEdgeTypeCount);
  std::vector<double> indeg(n, 0.0);
  for (const auto& e : g.edges) {
    const auto type = static_cast<std::size_t>(e.type);
    if (type >= kEdgeTypeCount) throw std::invalid_argument("unknown edge type " + std::to_string(type));
    if (e.src < 0 || e.dst < 0 || static_cast<std::size_t>(e.src) >= n ||
        static_cast<std::size_t>(e.dst) >= n)
      throw std::invalid_argument("edge endpoint out of range");
    const auto s = static_cast<std::size_t>(e.src), d = static_cast<std::size_t>(e.dst);
    src[type].push_back(s);
    dst[type].push_back(d);
    src[type + kEdgeTypeCount].push_back(d);
    dst[type + kEdgeTypeCount].push_back(s);
    indeg[d] += 1.0;
    indeg[s] += 1.0;
  }
  std::vector<std::vector<double>> weight(2 * kEdgeTypeCount);
  for (std::size_t k = 0; k < weight.size(); ++k)
    for (auto d : dst[k]) weight[k].push_back(1.0 / indeg[d]);

  std::vector<std::size_t> tag_ids(n);
  for (std::size_t i = 0; i < n; ++i) tag_ids[i] = static_cast<std::size_t>(g.nodes[i].tag);
  Var h = tanh(init(t, concat({labels(t, label_ids), tags(t, tag_ids)}, 1)));

  for (const auto& layer : layers) {
    for (std::size_t step = 0; step < steps; ++step) {
      Var m;
      for (std::size_t k = 0; k < src.size(); ++k) {
        if (src[k].empty()) continue;
        Var msg = matmul(embedding_lookup(h, src[k]), t.param(*layer.edge[k]));
        Var agg = scatter_add_rows(msg, dst[k], weight[k], n);
        m = m.valid() ? add(m, agg) : agg;
      }
      if (!m.valid()) m = t.zeros(n, hidden);
      Var z = sigmoid(add(layer.wz(t, m), layer.uz(t, h)));
      Var r = sigmoid(add(layer.wr(t, m), layer.ur(t, h)));
      Var cand = tanh(add(layer.wh(t, m), layer.uh(t, mul(r, h))));
      h = add(h, mul(z, sub(cand, h)));
    }
  }
  Var w = softmax(transpose(score(t, h)));
  return {h, w, matmul(w, value(t, h))};
}

Var scale_by(Var g, Var v) { return matmul(g, v); }

Var one_minus(Var x) { return add_scalar(scale(x, -1.0), 1.0); }

}  // namespace editrep
