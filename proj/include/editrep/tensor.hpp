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
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace editrep {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

// Dense row-major tensor of f64 values. Rank 1 and rank 2 are the only ranks
// the models use; a rank-1 tensor of length n behaves as a [1, n] row.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double value);

  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return values_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool flag);

  bool has_grad() const { return grad_.has_value(); }
  std::span<const double> grad() const;
  std::span<double> grad();
  void zero_grad();

 private:
  Shape shape_;
  std::vector<double> values_;
  bool requires_grad_ = false;
  std::optional<std::vector<double>> grad_;
};

class Tape;

// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;

  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t numel() const { return rows() * cols(); }
  std::span<const double> value() const;
  std::span<const double> grad() const;
  double item() const;
  bool valid() const { return tape != nullptr; }
};

// Records operations in execution order; backward() replays them in reverse.
// A tape belongs to a single thread. Parameters are bound as leaves and
// receive their gradients when backward() completes.
class Tape {
 public:
  struct Node {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> value;
    std::vector<double> grad;
    Tensor* param = nullptr;
    std::function<void()> backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(const Tensor& t);
  Var constant(std::size_t rows, std::size_t cols, std::vector<double> values);
  Var zeros(std::size_t rows, std::size_t cols);
  // Leaf bound to a parameter; reused if the same tensor is bound twice.
  Var param(Tensor& t);

  Var record(std::size_t rows, std::size_t cols, std::vector<double> value,
             std::function<void()> backward);

  // Populates d(loss)/d(param) on every bound parameter with requires_grad.
  // Gradients accumulate into the parameter's grad buffer.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  Node& node(std::uint32_t id) { return nodes_[id]; }
  const Node& node(std::uint32_t id) const { return nodes_[id]; }

  // Per-op visit counter from the last backward(); used by tests.
  std::size_t last_backward_visits() const { return last_visits_; }

 private:
  std::deque<Node> nodes_;
  std::unordered_map<const Tensor*, std::uint32_t> param_ids_;
  std::size_t last_visits_ = 0;
};

// ---- forward ops --------------------------------------------------------

Var matmul(Var a, Var b);
// Same shape, or b a [1, cols] row broadcast over the rows of a (bias add).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double c);
Var concat(std::span<const Var> parts, int axis);
Var concat(std::initializer_list<Var> parts, int axis);
Var slice(Var a, int axis, std::size_t begin, std::size_t end);
Var transpose(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
// Row-wise softmax.
Var softmax(Var a);
// Rows of table at indices -> [indices.size(), table.cols].
Var embedding_lookup(Var table, std::span<const std::size_t> indices);
Var sum(Var a);
Var mean(Var a);
Var max(Var a);
// Column sums -> [1, cols].
Var sum_rows(Var a);
// Elements at flat indices -> [1, indices.size()].
Var gather(Var a, std::span<const std::size_t> indices);
// out[dst[e]] += weight[e] * src[e]; out has out_rows rows.
Var scatter_add_rows(Var src, std::span<const std::size_t> dst,
                     std::span<const double> weight, std::size_t out_rows);

// ---- optimization -------------------------------------------------------

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

AdamState make_adam_state(std::span<Tensor* const> params, AdamConfig config = {});
void adam_step(std::span<Tensor* const> params, AdamState& state);
// Scales all grads so that their joint L2 norm is at most max_norm; returns the
// norm before clipping.
double clip_grad_norm(std::span<Tensor* const> params, double max_norm);

// ---- initialization ----------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double normal();
  std::size_t below(std::size_t n);

 private:
  std::uint64_t state_;
};

void init_glorot_uniform(Tensor& t, Rng& rng);
void init_uniform(Tensor& t, double lo, double hi, Rng& rng);

// ---- checkpoint (.erck) -------------------------------------------------

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

void save_tensors(const std::string& path, std::span<const NamedTensor> tensors);
void save_tensors(const std::string& path,
                  std::span<const std::pair<std::string, const Tensor*>> tensors);
std::vector<NamedTensor> load_tensors(const std::string& path);

}  // namespace editrep
