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

#include "editrep/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace editrep {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

// ---- Tensor -------------------------------------------------------------

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : shape_(std::move(shape)), values_(std::move(values)), requires_grad_(requires_grad) {
  if (shape_.empty() || shape_.size() > 2)
    throw std::invalid_argument("tensor rank must be 1 or 2, got shape " + shape_string(shape_));
  for (auto d : shape_)
    if (d == 0) throw std::invalid_argument("tensor dims must be positive: " + shape_string(shape_));
  if (shape_numel(shape_) != values_.size())
    throw std::invalid_argument("tensor shape " + shape_string(shape_) + " does not match " +
                                std::to_string(values_.size()) + " values");
  if (requires_grad_) grad_.emplace(values_.size(), 0.0);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

std::size_t Tensor::rows() const { return shape_.size() == 1 ? 1 : shape_[0]; }
std::size_t Tensor::cols() const { return shape_.back(); }

void Tensor::set_requires_grad(bool flag) {
  requires_grad_ = flag;
  if (flag && !grad_) grad_.emplace(values_.size(), 0.0);
  if (!flag) grad_.reset();
}

std::span<const double> Tensor::grad() const {
  if (!grad_) throw std::logic_error("tensor has no gradient buffer");
  return *grad_;
}

std::span<double> Tensor::grad() {
  if (!grad_) throw std::logic_error("tensor has no gradient buffer");
  return *grad_;
}

void Tensor::zero_grad() {
  if (grad_) std::fill(grad_->begin(), grad_->end(), 0.0);
}

// ---- Var / Tape ---------------------------------------------------------

std::size_t Var::rows() const { return tape->node(id).rows; }
std::size_t Var::cols() const { return tape->node(id).cols; }
std::span<const double> Var::value() const { return tape->node(id).value; }
std::span<const double> Var::grad() const { return tape->node(id).grad; }
double Var::item() const {
  if (numel() != 1) throw std::invalid_argument("item() on non-scalar of " +
                                                std::to_string(numel()) + " elements");
  return value()[0];
}

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::domain_error(std::string("non-finite value in ") + what);
}

std::string dims(std::size_t r, std::size_t c) {
  return "[" + std::to_string(r) + ", " + std::to_string(c) + "]";
}

}  // namespace

Var Tape::constant(const Tensor& t) {
  return constant(t.rows(), t.cols(), std::vector<double>(t.values().begin(), t.values().end()));
}

Var Tape::constant(std::size_t rows, std::size_t cols, std::vector<double> values) {
  if (rows * cols != values.size() || rows == 0 || cols == 0)
    throw std::invalid_argument("constant " + dims(rows, cols) + " given " +
                                std::to_string(values.size()) + " values");
  require_finite(values, "constant");
  return record(rows, cols, std::move(values), nullptr);
}

Var Tape::zeros(std::size_t rows, std::size_t cols) {
  return record(rows, cols, std::vector<double>(rows * cols, 0.0), nullptr);
}

Var Tape::param(Tensor& t) {
  if (auto it = param_ids_.find(&t); it != param_ids_.end()) return Var{this, it->second};
  require_finite(t.values(), "parameter");
  Var v = record(t.rows(), t.cols(), std::vector<double>(t.values().begin(), t.values().end()),
                 nullptr);
  nodes_[v.id].param = &t;
  param_ids_[&t] = v.id;
  return v;
}

Var Tape::record(std::size_t rows, std::size_t cols, std::vector<double> value,
                 std::function<void()> backward) {
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.value = std::move(value);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("loss belongs to another tape");
  if (nodes_.empty()) throw std::logic_error("backward on empty tape");
  if (loss.numel() != 1)
    throw std::invalid_argument("backward requires a scalar loss, got " +
                                dims(loss.rows(), loss.cols()));
  for (auto& n : nodes_) n.grad.assign(n.value.size(), 0.0);
  nodes_[loss.id].grad[0] = 1.0;
  last_visits_ = 0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (n.backward) {
      n.backward();
      ++last_visits_;
    }
  }
  for (auto& n : nodes_) {
    if (!n.param || !n.param->requires_grad()) continue;
    auto g = n.param->grad();
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad[k];
  }
}

// ---- ops ----------------------------------------------------------------

namespace {

Tape& same_tape(Var a, Var b) {
  if (a.tape != b.tape || !a.tape) throw std::invalid_argument("operands on different tapes");
  return *a.tape;
}

Var finish(Tape& t, std::size_t r, std::size_t c, std::vector<double> out,
           std::function<void()> bw, const char* op) {
  require_finite(out, op);
  return t.record(r, c, std::move(out), std::move(bw));
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (k != b.rows())
    throw std::invalid_argument("matmul shape mismatch: " + dims(m, k) + " x " +
                                dims(b.rows(), n));
  std::vector<double> out(m * n, 0.0);
  {
    const double* av = t.node(a.id).value.data();
    const double* bv = t.node(b.id).value.data();
    for (std::size_t i = 0; i < m; ++i) {
      double* o = out.data() + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double x = av[i * k + p];
        if (x == 0.0) continue;
        const double* brow = bv + p * n;
        for (std::size_t j = 0; j < n; ++j) o[j] += x * brow[j];
      }
    }
  }
  auto ai = a.id, bi = b.id;
  auto rid = static_cast<std::uint32_t>(t.size());
  return finish(t, m, n, std::move(out), [&t, ai, bi, m, k, n, rid] {
    const auto& g = t.node(rid).grad;
    auto& na = t.node(ai);
    auto& nb = t.node(bi);
    // dA = dC * B^T
    for (std::size_t i = 0; i < m; ++i) {
      const double* gi = g.data() + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double* brow = nb.value.data() + p * n;
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += gi[j] * brow[j];
        na.grad[i * k + p] += s;
      }
    }
    // dB = A^T * dC
    for (std::size_t i = 0; i < m; ++i) {
      const double* gi = g.data() + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double x = na.value[i * k + p];
        if (x == 0.0) continue;
        double* brow = nb.grad.data() + p * n;
        for (std::size_t j = 0; j < n; ++j) brow[j] += x * gi[j];
      }
    }
  }, "matmul");
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const std::size_t m = a.rows(), n = a.cols();
  const bool broadcast = b.rows() == 1 && m != 1 && b.cols() == n;
  if (!broadcast && (b.rows() != m || b.cols() != n))
    throw std::invalid_argument("add shape mismatch: " + dims(m, n) + " + " +
                                dims(b.rows(), b.cols()));
  std::vector<double> out(t.node(a.id).value);
  const auto& bv = t.node(b.id).value;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[broadcast ? j : i * n + j];
  auto ai = a.id, bi = b.id;
  auto rid = static_cast<std::uint32_t>(t.size());
  return finish(t, m, n, std::move(out), [&t, ai, bi, rid, m, n, broadcast] {
    const auto& g = t.node(rid).grad;
    auto& ga = t.node(ai).grad;
    auto& gb = t.node(bi).grad;
    for (std::size_t i = 0; i < m * n; ++i) ga[i] += g[i];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) gb[broadcast ? j : i * n + j] += g[i * n + j];
  }, "add");
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("sub shape mismatch: " + dims(a.rows(), a.cols()) + " - " +
                                dims(b.rows(), b.cols()));
  std::vector<double> out(t.node(a.id).value);
  const auto& bv = t.node(b.id).value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  auto ai = a.id, bi = b.id;
  auto rid = static_cast<std::uint32_t>(t.size());
  return finish(t, a.rows(), a.cols(), std::move(out), [&t, ai, bi, rid] {
    const auto& g = t.node(rid).grad;
    auto& ga = t.node(ai).grad;
    auto& gb = t.node(bi).grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] -= g[i];
    }
  }, "sub");
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("mul shape mismatch: " + dims(a.rows(), a.cols()) + " * " +
                                dims(b.rows(), b.cols()));
  const auto& av = t.node(a.id).value;
  const auto& bv = t.node(b.id).value;
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  auto ai = a.id, bi = b.id;
  auto rid = static_cast<std::uint32_t>(t.size());
  return finish(t, a.rows(), a.cols(), std::move(out), [&t, ai, bi, rid] {
    const auto& g = t.node(rid).grad;
    auto& na = t.node(ai);
    auto& nb = t.node(bi);
    for (std::size_t i = 0; i < g.size(); ++i) {
      na.grad[i] += g[i] * nb.value[i];
      nb.grad[i] += g[i] * na.value[i];
    }
  }, "mul");
}

Var scale(Var a, double factor) {
  Tape& t = *a.tape;
  std::vector<double> out(t.node(a.id).value);
  for (auto& x : out) x *= factor;
  auto ai = a.id;
  auto rid = static_cast<std::uint32_t>(t.size());
  return finish(t, a.rows(), a.cols(), std::move(out), [&t, ai, rid, factor] {
    const auto& g = t.node(rid).grad;
    auto& ga = t.node(ai).grad;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  }, "scale");
}

Var add_scalar(Var a, double c) {
  Tape& t = *a.tape;
  std::vector<double> out(t.node(a.id).value);
  for (auto& x : out) x += c;
  auto ai = a.id;
  auto rid = static_cast<std::uint32_t>(t.size());
  return finish(t, a.rows(), a.cols(), std::move(out), [&t, ai, rid] {
    const auto& g = t.node(rid).grad;
    auto& ga = t.node(ai).grad;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  }, "add_scalar");
}

Var concat(std::initializer_list<Var> parts, int axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat of zero tensors");
  Tape& t = *parts[0].tape;
  std::vector<std::uint32_t> ids;
  for (const auto& p : parts) {
    if (p.tape != &t) throw std::invalid_argument("concat operands on different tapes");
    ids.push_back(p.id);
  }
  if (axis == 1) {
    const std::size_t m = parts[0].rows();
    std::size_t n = 0;
    for (const auto& p : parts) {
      if (p.rows() != m)
        throw std::invalid_argument("concat(axis=1) row mismatch: " +
                                    dims(parts[0].rows(), parts[0].cols()) + " vs " +
                                    dims(p.rows(), p.cols()));
      n += p.cols();
    }
    std::vector<double> out(m * n);
    std::size_t off = 0;
    for (const auto& p : parts) {
      const auto& v = t.node(p.id).value;
      const std::size_t c = p.cols();
      for (std::size_t i = 0; i < m; ++i)
        std::copy_n(v.data() + i * c, c, out.data() + i * n + off);
      off += c;
    }
    auto rid = static_cast<std::uint32_t>(t.size());
    return finish(t, m, n, std::move(out), [&t, ids, rid, m, n] {
      const auto& g = t.node(rid).grad;
      std::size_t off = 0;
      for (auto id : ids) {
        auto& nd = t.node(id);
        const std::size_t c = nd.cols;
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < c; ++j) nd.grad[i * c + j] += g[i * n + off + j];
        off += c;
      }
    }, "concat");
  }
  if (axis == 0) {
    const std::size_t n = parts[0].cols();
    std::size_t m = 0;
    for (const auto& p : parts) {
      if (p.cols() != n)
        throw std::invalid_argument("concat(axis=0) column mismatch: " +
                                    dims(parts[0].rows(), parts[0].cols()) + " vs " +
                                    dims(p.rows(), p.cols()));
      m += p.rows();
    }
    std::vector<double> out;
    out.reserve(m * n);
    for (const auto& p : parts) {
      const auto& v = t.node(p.id).value;
      out.insert(out.end(), v.begin(), v.end());
    }
    auto rid = static_cast<std::uint32_t>(t.size());
    return finish(t, m, n, std::move(out), [&t, ids, rid] {
      const auto& g = t.node(rid).grad;
      std::size_t off = 0;
      for (auto id : ids) {
        auto& gd = t.node(id).grad;
        for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += g[off + i];
        off += gd.size();
      }
    }, "concat");
  }
  throw std::invalid_argument("concat axis must be 0 or 1");
}

Var slice(Var a, int axis, std::size_t begin, std::size_t end) {
  Tape& t = *a.tape;
  const std::size_t m = a.rows(), n = a.cols();
  const std::size_t limit = axis == 0 ? m : n;
  if ((axis != 0 && axis != 1) || begin >= end || end > limit)
    throw std::invalid_argument("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                                ") on axis " + std::to_string(axis) + " of " + dims(m, n));
  const auto& v = t.node(a.id).value;
  const std::size_t r = axis == 0 ? end - begin : m;
  const std::size_t c = axis == 0 ? n : end - begin;
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out[i * c + j] = axis == 0 ? v[(begin + i) * n + j] : v[i * n + begin + j];
  auto ai = a.id;
  auto rid = static_cast<std::uint32_t>(t.size());
  return finish(t, r, c, std::move(out), [&t, ai, rid, axis, begin, r, c, n] {
    const auto& g = t.node(rid).grad;
    auto& ga = t.node(ai).grad;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j)
        ga[axis == 0 ? (begin + i) * n + j : i * n + begin + j] += g[i * c + j];
  }, "slice");
}

Var transpose(Var a) {
  Tape& t = *a.tape;
  const std::size_t m = a.rows(), n = a.cols();
  const auto& v = t.node(a.id).value;
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = v[i * n + j];
  auto ai = a.id;
  auto rid = static_cast<std::uint32_t>(t.size());
  return finish(t, n, m, std::move(out), [&t, ai, rid, m, n] {
    const auto& g = t.node(rid).grad;
    auto& ga = t.node(ai).grad;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
  }, "transpose");
}

namespace {

// Elementwise op whose derivative is expressed through input x and output y.
template <class F, class D>
Var unary(Var a, F f, D dfdx, const char* name) {
  Tape& t = *a.tape;
  const auto& v = t.node(a.id).value;
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = f(v[i]);
  auto ai = a.id;
  auto rid = static_cast<std::uint32_t>(t.size());
  return finish(t, a.rows(), a.cols(), std::move(out), [&t, ai, rid, dfdx] {
    const auto& nr = t.node(rid);
    auto& na = t.node(ai);
    for (std::size_t i = 0; i < nr.grad.size(); ++i)
      na.grad[i] += nr.grad[i] * dfdx(na.value[i], nr.value[i]);
  }, name);
}

}  // namespace

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; }, "tanh");
}

Var sigmoid(Var a) {
  return unary(a,
               [](double x) {
                 return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
               },
               [](double, double y) { return y * (1.0 - y); }, "sigmoid");
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; },
               "exp");
}

Var log(Var a) {
  for (double x : a.value())
    if (!(x > 0.0)) throw std::domain_error("log of non-positive value");
  return unary(a, [](double x) { return std::log(x); },
               [](double x, double) { return 1.0 / x; }, "log");
}

Var softmax(Var a) {
  Tape& t = *a.tape;
  const std::size_t m = a.rows(), n = a.cols();
  const auto& v = t.node(a.id).value;
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = v.data() + i * n;
    double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (out[i * n + j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= z;
  }
  auto ai = a.id;
  auto rid = static_cast<std::uint32_t>(t.size());
  return finish(t, m, n, std::move(out), [&t, ai, rid, m, n] {
    const auto& nr = t.node(rid);
    auto& ga = t.node(ai).grad;
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += nr.grad[i * n + j] * nr.value[i * n + j];
      for (std::size_t j = 0; j < n; ++j)
        ga[i * n + j] += nr.value[i * n + j] * (nr.grad[i * n + j] - dot);
    }
  }, "softmax");
}

Var embedding_lookup(Var table, std::span<const std::size_t> indices) {
  Tape& t = *table.tape;
  const std::size_t vocab = table.rows(), d = table.cols();
  if (indices.empty()) throw std::invalid_argument("embedding_lookup with no indices");
  const auto& v = t.node(table.id).value;
  std::vector<double> out(indices.size() * d);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= vocab)
      throw std::out_of_range("embedding index " + std::to_string(indices[i]) +
                              " outside table " + dims(vocab, d));
    std::copy_n(v.data() + indices[i] * d, d, out.data() + i * d);
  }
  auto ti = table.id;
  auto rid = static_cast<std::uint32_t>(t.size());
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  const std::size_t n = idx.size();
  return finish(t, n, d, std::move(out), [&t, ti, rid, idx = std::move(idx), d] {
    const auto& g = t.node(rid).grad;
    auto& gt = t.node(ti).grad;
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) gt[idx[i] * d + j] += g[i * d + j];
  }, "embedding_lookup");
}

Var sum(Var a) {
  Tape& t = *a.tape;
  double s = 0.0;
  for (double x : t.node(a.id).value) s += x;
  auto ai = a.id;
  auto rid = static_cast<std::uint32_t>(t.size());
  return finish(t, 1, 1, {s}, [&t, ai, rid] {
    const double g = t.node(rid).grad[0];
    for (auto& x : t.node(ai).grad) x += g;
  }, "sum");
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Var max(Var a) {
  Tape& t = *a.tape;
  const auto& v = t.node(a.id).value;
  const std::size_t arg = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  auto ai = a.id;
  auto rid = static_cast<std::uint32_t>(t.size());
  return finish(t, 1, 1, {v[arg]}, [&t, ai, rid, arg] {
    t.node(ai).grad[arg] += t.node(rid).grad[0];
  }, "max");
}

Var sum_rows(Var a) {
  Tape& t = *a.tape;
  const std::size_t m = a.rows(), n = a.cols();
  const auto& v = t.node(a.id).value;
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += v[i * n + j];
  auto ai = a.id;
  auto rid = static_cast<std::uint32_t>(t.size());
  return finish(t, 1, n, std::move(out), [&t, ai, rid, m, n] {
    const auto& g = t.node(rid).grad;
    auto& ga = t.node(ai).grad;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j];
  }, "sum_rows");
}

Var gather(Var a, std::span<const std::size_t> indices) {
  Tape& t = *a.tape;
  if (indices.empty()) throw std::invalid_argument("gather with no indices");
  const auto& v = t.node(a.id).value;
  std::vector<double> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= v.size())
      throw std::out_of_range("gather index " + std::to_string(indices[i]) + " outside " +
                              dims(a.rows(), a.cols()));
    out[i] = v[indices[i]];
  }
  auto ai = a.id;
  auto rid = static_cast<std::uint32_t>(t.size());
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  const std::size_t n = idx.size();
  return finish(t, 1, n, std::move(out), [&t, ai, rid, idx = std::move(idx)] {
    const auto& g = t.node(rid).grad;
    auto& ga = t.node(ai).grad;
    for (std::size_t i = 0; i < idx.size(); ++i) ga[idx[i]] += g[i];
  }, "gather");
}

Var scatter_add_rows(Var src, std::span<const std::size_t> dst, std::span<const double> weight,
                     std::size_t out_rows) {
  Tape& t = *src.tape;
  const std::size_t e = src.rows(), d = src.cols();
  if (dst.size() != e || weight.size() != e)
    throw std::invalid_argument("scatter_add_rows: " + std::to_string(e) + " rows but " +
                                std::to_string(dst.size()) + " targets, " +
                                std::to_string(weight.size()) + " weights");
  if (out_rows == 0) throw std::invalid_argument("scatter_add_rows: zero output rows");
  const auto& v = t.node(src.id).value;
  std::vector<double> out(out_rows * d, 0.0);
  for (std::size_t i = 0; i < e; ++i) {
    if (dst[i] >= out_rows) throw std::out_of_range("scatter_add_rows target out of range");
    for (std::size_t j = 0; j < d; ++j) out[dst[i] * d + j] += weight[i] * v[i * d + j];
  }
  auto si = src.id;
  auto rid = static_cast<std::uint32_t>(t.size());
  std::vector<std::size_t> di(dst.begin(), dst.end());
  std::vector<double> wi(weight.begin(), weight.end());
  return finish(t, out_rows, d, std::move(out),
                [&t, si, rid, di = std::move(di), wi = std::move(wi), d] {
                  const auto& g = t.node(rid).grad;
                  auto& gs = t.node(si).grad;
                  for (std::size_t i = 0; i < di.size(); ++i)
                    for (std::size_t j = 0; j < d; ++j) gs[i * d + j] += wi[i] * g[di[i] * d + j];
                },
                "scatter_add_rows");
}

// ---- optimization -------------------------------------------------------

AdamState make_adam_state(std::span<Tensor* const> params, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (const Tensor* p : params) {
    s.first_moment.emplace_back(p->numel(), 0.0);
    s.second_moment.emplace_back(p->numel(), 0.0);
  }
  return s;
}

void adam_step(std::span<Tensor* const> params, AdamState& state) {
  if (params.size() != state.first_moment.size())
    throw std::invalid_argument("adam_step: " + std::to_string(params.size()) +
                                " params but state for " +
                                std::to_string(state.first_moment.size()));
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i]->numel() != state.first_moment[i].size() || !params[i]->has_grad())
      throw std::invalid_argument("adam_step: parameter " + std::to_string(i) + " of shape " +
                                  shape_string(params[i]->shape()) +
                                  " misaligned with optimizer state");
  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i]->values();
    auto g = params[i]->grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      w[k] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

double clip_grad_norm(std::span<Tensor* const> params, double max_norm) {
  double sq = 0.0;
  for (const Tensor* p : params)
    for (double g : p->grad()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (Tensor* p : params)
      for (double& g : p->grad()) g *= f;
  }
  return norm;
}

// ---- initialization ----------------------------------------------------

Rng::Rng(std::uint64_t seed) : state_(seed) {}

std::uint64_t Rng::next() {
  // splitmix64
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below(0)");
  return static_cast<std::size_t>(next() % n);
}

void init_glorot_uniform(Tensor& t, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
  init_uniform(t, -limit, limit, rng);
}

void init_uniform(Tensor& t, double lo, double hi, Rng& rng) {
  for (double& x : t.values()) x = rng.uniform(lo, hi);
}

// ---- checkpoint ---------------------------------------------------------

namespace {

constexpr std::string_view kMagic = "ERCK1";

void put_le(std::string& out, double x) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_tensors(const std::string& path,
                  std::span<const std::pair<std::string, const Tensor*>> tensors) {
  nlohmann::ordered_json manifest;
  manifest["format"] = "erck";
  manifest["version"] = 1;
  manifest["tensors"] = nlohmann::ordered_json::array();
  std::string blob;
  for (const auto& [name, t] : tensors) {
    nlohmann::ordered_json e;
    e["name"] = name;
    e["shape"] = t->shape();
    e["offset"] = blob.size();
    manifest["tensors"].push_back(e);
    for (double x : t->values()) put_le(blob, x);
  }
  const std::string text = manifest.dump();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path);
  os << kMagic << ' ' << text.size() << '\n' << text << blob;
  if (!os) throw std::runtime_error("failed writing checkpoint " + path);
}

void save_tensors(const std::string& path, std::span<const NamedTensor> tensors) {
  std::vector<std::pair<std::string, const Tensor*>> refs;
  for (const auto& t : tensors) refs.emplace_back(t.name, &t.tensor);
  save_tensors(path, refs);
}

std::vector<NamedTensor> load_tensors(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);
  std::string magic;
  std::size_t len = 0;
  is >> magic >> len;
  if (magic != kMagic || is.get() != '\n')
    throw std::runtime_error(path + " is not an .erck checkpoint");
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  std::string blob((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  auto manifest = nlohmann::json::parse(text);
  std::vector<NamedTensor> out;
  for (const auto& e : manifest.at("tensors")) {
    Shape shape = e.at("shape").get<Shape>();
    const std::size_t off = e.at("offset").get<std::size_t>();
    const std::size_t n = shape_numel(shape);
    if (off + 8 * n > blob.size())
      throw std::runtime_error("checkpoint " + path + " truncated at tensor " +
                               e.at("name").get<std::string>());
    std::vector<double> values(n);
    const auto* p = reinterpret_cast<const unsigned char*>(blob.data()) + off;
    for (std::size_t i = 0; i < n; ++i) values[i] = get_le(p + 8 * i);
    out.push_back({e.at("name").get<std::string>(), Tensor(std::move(shape), std::move(values))});
  }
  return out;
}

}  // namespace editrep
