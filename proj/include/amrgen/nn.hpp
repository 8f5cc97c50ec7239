#pragma once

// Dense reverse-mode differentiation over Eigen matrices, templated on the
// scalar type. Vectors are n x 1 matrices.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "amrgen/errors.hpp"

namespace amrgen::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct Parameter {
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  Matrix<Scalar> first_moment;
  Matrix<Scalar> second_moment;
  bool frozen = false;
  long step = 0;
};

// Named parameters with gradients and Adam state. Iteration order is by name,
// which keeps checkpoints and updates deterministic.
template <typename Scalar>
class ParamStore {
 public:
  using Entry = Parameter<Scalar>;

  Entry& add(const std::string& name, Matrix<Scalar> value, bool frozen = false) {
    Entry e;
    e.grad = Matrix<Scalar>::Zero(value.rows(), value.cols());
    e.first_moment = e.grad;
    e.second_moment = e.grad;
    e.value = std::move(value);
    e.frozen = frozen;
    auto [it, inserted] = entries_.insert_or_assign(name, std::move(e));
    return it->second;
  }

  // Uniform(-scale, scale) initialization.
  template <typename Rng>
  Entry& add_uniform(const std::string& name, Eigen::Index rows, Eigen::Index cols, Rng& rng,
                     Scalar scale = Scalar(0.08)) {
    std::uniform_real_distribution<double> dist(-static_cast<double>(scale), static_cast<double>(scale));
    Matrix<Scalar> v(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) v(r, c) = static_cast<Scalar>(dist(rng));
    return add(name, std::move(v));
  }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  Entry& at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw IndexOutOfRange("unknown parameter '" + name + "'");
    return it->second;
  }
  const Entry& at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw IndexOutOfRange("unknown parameter '" + name + "'");
    return it->second;
  }

  void zero_grad() {
    for (auto& [name, e] : entries_) e.grad.setZero();
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, e] : entries_) n += static_cast<std::size_t>(e.value.size());
    return n;
  }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::map<std::string, Entry> entries_;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam on every non-frozen entry; gradients are zeroed after.
template <typename Scalar>
void adam_step(ParamStore<Scalar>& store, const AdamOptions& opt = {}) {
  for (auto& [name, p] : store) {
    if (!p.frozen) {
      ++p.step;
      const Scalar b1 = Scalar(opt.beta1), b2 = Scalar(opt.beta2);
      p.first_moment = b1 * p.first_moment + (Scalar(1) - b1) * p.grad;
      p.second_moment = b2 * p.second_moment + (Scalar(1) - b2) * p.grad.cwiseProduct(p.grad);
      const Scalar c1 = Scalar(1) - std::pow(b1, Scalar(p.step));
      const Scalar c2 = Scalar(1) - std::pow(b2, Scalar(p.step));
      p.value.array() -= Scalar(opt.lr) * (p.first_moment.array() / c1) /
                         ((p.second_moment.array() / c2).sqrt() + Scalar(opt.eps));
    }
    p.grad.setZero();
  }
}

template <typename Scalar>
class Tape;

template <typename Scalar>
struct Var {
  Tape<Scalar>* tape = nullptr;
  std::size_t id = 0;

  const Matrix<Scalar>& value() const { return tape->value(id); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Scalar scalar() const { return value()(0, 0); }
};

template <typename Scalar>
class Tape {
 public:
  using Mat = Matrix<Scalar>;
  using Backward = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Scalar> constant(Mat value) { return push(std::move(value), nullptr); }

  // Leaf for a whole parameter; repeated requests share one node.
  Var<Scalar> param(const ParamStore<Scalar>& store, const std::string& name) {
    const Key key{name, -1};
    if (auto it = leaves_.find(key); it != leaves_.end()) return {this, it->second};
    Var<Scalar> v = push(store.at(name).value, nullptr);
    leaves_.emplace(key, v.id);
    return v;
  }

  // Leaf for row `row` of a parameter matrix, as a column vector.
  Var<Scalar> param_row(const ParamStore<Scalar>& store, const std::string& name, Eigen::Index row) {
    const Key key{name, static_cast<long>(row)};
    if (auto it = leaves_.find(key); it != leaves_.end()) return {this, it->second};
    const auto& p = store.at(name).value;
    if (row < 0 || row >= p.rows()) throw IndexOutOfRange(name + " row " + std::to_string(row));
    Var<Scalar> v = push(p.row(row).transpose(), nullptr);
    leaves_.emplace(key, v.id);
    return v;
  }

  Var<Scalar> push(Mat value, Backward backward) {
    nodes_.push_back(Node{std::move(value), Mat(), std::move(backward)});
    return {this, nodes_.size() - 1};
  }

  const Mat& value(std::size_t id) const { return nodes_[id].value; }
  Mat& grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }
  bool has_grad(std::size_t id) const { return nodes_[id].grad.size() != 0; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and propagates to every node.
  void backward(Var<Scalar> loss) {
    grad(loss.id).setConstant(Scalar(1));
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backward && n.grad.size() != 0) n.backward(*this, i);
    }
  }

  // Adds leaf gradients into the store.
  void accumulate(ParamStore<Scalar>& store) const {
    for (const auto& [key, id] : leaves_) {
      const Node& n = nodes_[id];
      if (n.grad.size() == 0) continue;
      auto& p = store.at(key.first);
      if (key.second < 0) {
        p.grad += n.grad;
      } else {
        p.grad.row(key.second) += n.grad.transpose();
      }
    }
  }

 private:
  using Key = std::pair<std::string, long>;
  struct Node {
    Mat value;
    Mat grad;
    Backward backward;
  };
  std::vector<Node> nodes_;
  std::map<Key, std::size_t> leaves_;
};

namespace detail {

template <typename Scalar>
void require(bool ok, const char* op, const Var<Scalar>& a, const Var<Scalar>& b) {
  if (!ok)
    throw ShapeMismatch(std::string(op) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                        " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  detail::require(a.cols() == b.rows(), "matmul", a, b);
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->push(a.value() * b.value(), [ia, ib](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    t.grad(ia).noalias() += g * t.value(ib).transpose();
    t.grad(ib).noalias() += t.value(ia).transpose() * g;
  });
}

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "add", a, b);
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->push(a.value() + b.value(), [ia, ib](Tape<Scalar>& t, std::size_t self) {
    t.grad(ia) += t.grad(self);
    t.grad(ib) += t.grad(self);
  });
}

template <typename Scalar>
Var<Scalar> operator+(Var<Scalar> a, Var<Scalar> b) {
  return add(a, b);
}

template <typename Scalar>
Var<Scalar> operator*(Var<Scalar> a, Var<Scalar> b) {
  return matmul(a, b);
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar s) {
  const std::size_t ia = a.id;
  return a.tape->push(a.value() * s, [ia, s](Tape<Scalar>& t, std::size_t self) { t.grad(ia) += s * t.grad(self); });
}

template <typename Scalar>
Var<Scalar> hadamard(Var<Scalar> a, Var<Scalar> b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "hadamard", a, b);
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->push(a.value().cwiseProduct(b.value()), [ia, ib](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    t.grad(ia) += g.cwiseProduct(t.value(ib));
    t.grad(ib) += g.cwiseProduct(t.value(ia));
  });
}

template <typename Scalar>
Var<Scalar> tanh(Var<Scalar> a) {
  const std::size_t ia = a.id;
  return a.tape->push(a.value().array().tanh().matrix(), [ia](Tape<Scalar>& t, std::size_t self) {
    const auto& y = t.value(self);
    t.grad(ia).array() += t.grad(self).array() * (Scalar(1) - y.array().square());
  });
}

template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> a) {
  const std::size_t ia = a.id;
  Matrix<Scalar> y = (Scalar(1) / (Scalar(1) + (-a.value().array()).exp())).matrix();
  return a.tape->push(std::move(y), [ia](Tape<Scalar>& t, std::size_t self) {
    const auto& y = t.value(self);
    t.grad(ia).array() += t.grad(self).array() * y.array() * (Scalar(1) - y.array());
  });
}

// Rows [start, start + len) of a column vector.
template <typename Scalar>
Var<Scalar> segment(Var<Scalar> a, Eigen::Index start, Eigen::Index len) {
  if (a.cols() != 1 || start < 0 || start + len > a.rows())
    throw ShapeMismatch("segment out of range");
  const std::size_t ia = a.id;
  return a.tape->push(a.value().block(start, 0, len, 1), [ia, start, len](Tape<Scalar>& t, std::size_t self) {
    t.grad(ia).block(start, 0, len, 1) += t.grad(self);
  });
}

// Vertical concatenation of column vectors.
template <typename Scalar>
Var<Scalar> concat(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw ShapeMismatch("concat of nothing");
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != 1) throw ShapeMismatch("concat expects column vectors");
    rows += p.rows();
  }
  Matrix<Scalar> v(rows, 1);
  std::vector<std::pair<std::size_t, Eigen::Index>> spans;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    v.block(at, 0, p.rows(), 1) = p.value();
    spans.emplace_back(p.id, at);
    at += p.rows();
  }
  return parts.front().tape->push(std::move(v), [spans](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    for (const auto& [id, off] : spans) {
      auto& gi = t.grad(id);
      gi += g.block(off, 0, gi.rows(), 1);
    }
  });
}

// Matrix whose rows are the given column vectors.
template <typename Scalar>
Var<Scalar> stack_rows(const std::vector<Var<Scalar>>& rows) {
  if (rows.empty()) throw ShapeMismatch("stack_rows of nothing");
  const Eigen::Index d = rows.front().rows();
  Matrix<Scalar> m(static_cast<Eigen::Index>(rows.size()), d);
  std::vector<std::size_t> ids;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].rows() != d || rows[r].cols() != 1) throw ShapeMismatch("stack_rows: ragged rows");
    m.row(static_cast<Eigen::Index>(r)) = rows[r].value().transpose();
    ids.push_back(rows[r].id);
  }
  return rows.front().tape->push(std::move(m), [ids](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    for (std::size_t r = 0; r < ids.size(); ++r) t.grad(ids[r]) += g.row(static_cast<Eigen::Index>(r)).transpose();
  });
}

template <typename Scalar>
Var<Scalar> sum(const std::vector<Var<Scalar>>& xs) {
  if (xs.empty()) throw ShapeMismatch("sum of nothing");
  Matrix<Scalar> v = xs.front().value();
  for (std::size_t i = 1; i < xs.size(); ++i) {
    detail::require(xs[i].rows() == v.rows() && xs[i].cols() == v.cols(), "sum", xs.front(), xs[i]);
    v += xs[i].value();
  }
  std::vector<std::size_t> ids;
  for (const auto& x : xs) ids.push_back(x.id);
  return xs.front().tape->push(std::move(v), [ids](Tape<Scalar>& t, std::size_t self) {
    for (std::size_t id : ids) t.grad(id) += t.grad(self);
  });
}

template <typename Scalar>
Var<Scalar> mean(const std::vector<Var<Scalar>>& xs) {
  return scale(sum(xs), Scalar(1) / Scalar(xs.size()));
}

// W x + b.
template <typename Scalar>
Var<Scalar> affine(Var<Scalar> W, Var<Scalar> x, Var<Scalar> b) {
  detail::require(W.cols() == x.rows() && x.cols() == 1, "affine", W, x);
  detail::require(b.rows() == W.rows() && b.cols() == 1, "affine bias", W, b);
  const std::size_t iw = W.id, ix = x.id, ib = b.id;
  Matrix<Scalar> y = W.value() * x.value() + b.value();
  return W.tape->push(std::move(y), [iw, ix, ib](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    t.grad(iw).noalias() += g * t.value(ix).transpose();
    t.grad(ix).noalias() += t.value(iw).transpose() * g;
    t.grad(ib) += g;
  });
}

// W [u; v; ...] + b.
template <typename Scalar>
Var<Scalar> concat_affine(Var<Scalar> W, const std::vector<Var<Scalar>>& parts, Var<Scalar> b) {
  return affine(W, concat(parts), b);
}

// Row scores M U s (pre-softmax).
template <typename Scalar>
Var<Scalar> bilinear_logits(Var<Scalar> M, Var<Scalar> U, Var<Scalar> s) {
  return matmul(M, matmul(U, s));
}

// Log-softmax restricted to entries with allowed[i] (all when empty).
template <typename Scalar>
Vector<Scalar> masked_log_softmax(const Vector<Scalar>& logits, const std::vector<bool>& allowed = {}) {
  const Eigen::Index n = logits.size();
  if (!allowed.empty() && static_cast<Eigen::Index>(allowed.size()) != n)
    throw ShapeMismatch("mask length " + std::to_string(allowed.size()) + " for " + std::to_string(n) + " logits");
  auto ok = [&](Eigen::Index i) { return allowed.empty() || allowed[static_cast<std::size_t>(i)]; };
  Scalar top = -std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index i = 0; i < n; ++i)
    if (ok(i)) top = std::max(top, logits(i));
  if (!std::isfinite(static_cast<double>(top))) throw IndexOutOfRange("softmax over an empty support");
  Scalar z = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (ok(i)) z += std::exp(logits(i) - top);
  const Scalar lse = top + std::log(z);
  Vector<Scalar> out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = ok(i) ? logits(i) - lse : -std::numeric_limits<Scalar>::infinity();
  return out;
}

template <typename Scalar>
Vector<Scalar> softmax(const Vector<Scalar>& logits, const std::vector<bool>& allowed = {}) {
  const Vector<Scalar> logp = masked_log_softmax(logits, allowed);
  return logp.unaryExpr([](Scalar v) { return std::isinf(static_cast<double>(v)) ? Scalar(0) : std::exp(v); });
}

// (-log softmax[target], softmax - onehot).
template <typename Scalar>
std::pair<Scalar, Vector<Scalar>> softmax_xent(const Vector<Scalar>& logits, Eigen::Index target,
                                               const std::vector<bool>& allowed = {}) {
  if (target < 0 || target >= logits.size() || (!allowed.empty() && !allowed[static_cast<std::size_t>(target)]))
    throw IndexOutOfRange("target " + std::to_string(target) + " for " + std::to_string(logits.size()) + " classes");
  const Vector<Scalar> logp = masked_log_softmax(logits, allowed);
  Vector<Scalar> grad = softmax(logits, allowed);
  grad(target) -= Scalar(1);
  return {-logp(target), std::move(grad)};
}

// softmax(M U s) as a probability row.
template <typename Scalar>
Vector<Scalar> bilinear_scores(const Matrix<Scalar>& M, const Matrix<Scalar>& U, const Vector<Scalar>& s) {
  if (M.cols() != U.rows() || U.cols() != s.rows())
    throw ShapeMismatch("bilinear_scores: " + std::to_string(M.cols()) + "/" + std::to_string(U.rows()) + " and " +
                        std::to_string(U.cols()) + "/" + std::to_string(s.rows()));
  return softmax<Scalar>(M * (U * s));
}

// Scalar cross-entropy node for a column of logits.
template <typename Scalar>
Var<Scalar> xent(Var<Scalar> logits, Eigen::Index target, const std::vector<bool>& allowed = {}) {
  if (logits.cols() != 1) throw ShapeMismatch("xent expects a column of logits");
  auto [loss, grad] = softmax_xent<Scalar>(logits.value(), target, allowed);
  Matrix<Scalar> v(1, 1);
  v(0, 0) = loss;
  const std::size_t il = logits.id;
  return logits.tape->push(std::move(v), [il, grad = std::move(grad)](Tape<Scalar>& t, std::size_t self) {
    t.grad(il) += t.grad(self)(0, 0) * grad;
  });
}

template <typename Scalar>
struct LstmState {
  Var<Scalar> cell;
  Var<Scalar> hidden;
};

// Gates from W [x; s_prev] + b split as input, forget, output, candidate.
template <typename Scalar>
LstmState<Scalar> lstm_step(const LstmState<Scalar>& prev, Var<Scalar> x, Var<Scalar> W, Var<Scalar> b) {
  const Eigen::Index h = prev.hidden.rows();
  if (W.rows() != 4 * h) throw ShapeMismatch("lstm weight has " + std::to_string(W.rows()) + " rows for hidden " +
                                            std::to_string(h));
  auto gates = concat_affine(W, {x, prev.hidden}, b);
  auto in = sigmoid(segment(gates, 0, h));
  auto forget = sigmoid(segment(gates, h, h));
  auto out = sigmoid(segment(gates, 2 * h, h));
  auto cand = tanh(segment(gates, 3 * h, h));
  auto cell = add(hadamard(forget, prev.cell), hadamard(in, cand));
  auto hidden = hadamard(out, tanh(cell));
  return {cell, hidden};
}

template <typename Scalar>
LstmState<Scalar> zero_state(Tape<Scalar>& tape, Eigen::Index hidden) {
  auto z = tape.constant(Matrix<Scalar>::Zero(hidden, 1));
  return {z, z};
}

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  long worst_index = -1;
  std::size_t checked = 0;
};

// Compares reverse-mode gradients with central differences. `loss_fn(store)`
// must return the loss and add its gradient into store. Relative error uses
// max(|analytic|, |numeric|, floor) as denominator. With max_per_param > 0 a
// seeded sample of coordinates is checked per parameter.
template <typename Scalar, typename LossFn>
GradCheckResult grad_check(LossFn&& loss_fn, ParamStore<Scalar>& store, Scalar h = Scalar(1e-5),
                           std::size_t max_per_param = 0, std::uint64_t seed = 7, double floor = 1e-5) {
  store.zero_grad();
  loss_fn(store);
  std::map<std::string, Matrix<Scalar>> analytic;
  for (auto& [name, p] : store) analytic[name] = p.grad;
  std::mt19937_64 rng(seed);
  GradCheckResult result;
  for (auto& [name, p] : store) {
    if (p.frozen) continue;
    const long n = static_cast<long>(p.value.size());
    std::vector<long> coords(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) coords[static_cast<std::size_t>(i)] = i;
    if (max_per_param > 0 && coords.size() > max_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_per_param);
    }
    for (long i : coords) {
      Scalar& x = p.value.data()[i];
      const Scalar saved = x;
      x = saved + h;
      const double up = static_cast<double>(loss_fn(store));
      x = saved - h;
      const double down = static_cast<double>(loss_fn(store));
      x = saved;
      const double numeric = (up - down) / (2.0 * static_cast<double>(h));
      const double a = static_cast<double>(analytic[name].data()[i]);
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++result.checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = name;
        result.worst_index = i;
      }
    }
  }
  store.zero_grad();
  return result;
}

}  // namespace amrgen::nn
