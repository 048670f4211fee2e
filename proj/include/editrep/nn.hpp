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
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "editrep/syntax.hpp"
#include "editrep/tensor.hpp"

namespace editrep {

// Named parameter tensors with stable addresses, kept in creation order.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;

  // Zero-initialized, gradient-enabled.
  Tensor& add(const std::string& name, std::size_t rows, std::size_t cols);
  Tensor& get(std::string_view name);
  const Tensor& get(std::string_view name) const;
  bool contains(std::string_view name) const { return index_.find(name) != index_.end(); }

  const std::vector<std::string>& names() const { return names_; }
  std::vector<Tensor*> tensors();
  std::size_t size() const { return names_.size(); }
  std::size_t numel() const;

  std::vector<NamedTensor> snapshot() const;
  // Replaces every value; names and shapes must match exactly.
  void restore(const std::vector<NamedTensor>& tensors);
  void zero_grad();

 private:
  std::deque<Tensor> tensors_;
  std::vector<std::string> names_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct Linear {
  Tensor* w = nullptr;  // [in, out]
  Tensor* b = nullptr;  // [1, out], absent when created without bias
  std::size_t in = 0, out = 0;

  static Linear create(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out,
                       Rng& rng, bool bias = true);
  Var operator()(Tape& t, Var x) const;
};

struct Embedding {
  Tensor* table = nullptr;  // [count, dim]

  static Embedding create(ParamStore& ps, const std::string& name, std::size_t count,
                          std::size_t dim, Rng& rng);
  std::size_t count() const { return table->rows(); }
  std::size_t dim() const { return table->cols(); }
  Var operator()(Tape& t, std::span<const std::size_t> ids) const;
  Var row(Tape& t, std::size_t id) const;
};

struct LstmState {
  Var h, c;
};

struct LstmCell {
  Linear gates;  // [in + hidden] -> 4 * hidden, order i f g o
  std::size_t hidden = 0;

  static LstmCell create(ParamStore& ps, const std::string& name, std::size_t in,
                         std::size_t hidden, Rng& rng);
  LstmState zero(Tape& t) const;
  LstmState step(Tape& t, Var x, LstmState s) const;
};

struct BiLstm {
  LstmCell fwd, bwd;

  struct Output {
    Var states;   // [n, 2 * hidden], forward ‖ backward
    Var summary;  // [1, 2 * hidden], final forward ‖ final backward
  };

  static BiLstm create(ParamStore& ps, const std::string& name, std::size_t in,
                       std::size_t hidden, Rng& rng);
  std::size_t hidden() const { return fwd.hidden; }
  // inputs: [n, in], n >= 1.
  Output run(Tape& t, Var inputs) const;
};

// Gated graph network: per-edge-type messages (each type also in reverse with
// its own weights), mean aggregation, GRU update, softmax-weighted readout.
struct Ggnn {
  struct Layer {
    std::vector<Tensor*> edge;  // 2 * kEdgeTypeCount, each [hidden, hidden]
    Linear wz, wr, wh;          // message side
    Linear uz, ur, uh;          // state side, no bias
  };

  Embedding labels;
  Embedding tags;
  Linear init;  // label ‖ tag -> hidden
  std::vector<Layer> layers;
  std::size_t steps = 0;
  std::size_t hidden = 0;
  Linear score;  // hidden -> 1
  Linear value;  // hidden -> value_dim

  struct Output {
    Var states;   // [nodes, hidden]
    Var weights;  // [1, nodes], sums to 1
    Var summary;  // [1, value_dim]
  };

  static Ggnn create(ParamStore& ps, const std::string& name, std::size_t label_count,
                     std::size_t embed_dim, std::size_t hidden, std::size_t value_dim,
                     std::size_t layers, std::size_t steps, Rng& rng);
  Output run(Tape& t, const ProgramGraph& g, std::span<const std::size_t> label_ids) const;
};

// [1, 1] gate g times row v, i.e. g * v.
Var scale_by(Var g, Var v);
// 1 - x, elementwise.
Var one_minus(Var x);

}  // namespace editrep
