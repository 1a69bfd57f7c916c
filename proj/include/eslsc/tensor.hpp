#pragma once

// Dense matrices with a reverse-mode differentiation tape.
//
// Every tensor is a row-major Eigen matrix templated on the scalar type
// (float for training, double for gradient checks). Ops are free functions
// over Var handles; each op records a closure that maps the output gradient
// to input gradients. Parameters live outside the tape and are bound as
// leaves, so one Parameter can feed any number of tapes.

#include <cmath>
#include <deque>
#include <functional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "eslsc/error.hpp"

namespace eslsc {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Row-major boolean mask; true marks an allowed (attendable) entry.
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A named trainable matrix with its accumulated gradient.
template <typename Scalar>
struct Parameter {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;

  Parameter() = default;
  Parameter(std::string n, Matrix<Scalar> v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix<Scalar>::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

template <typename Scalar>
class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Tape<Scalar>* tape, int id) : tape_(tape), id_(id) {}

  const Matrix<Scalar>& value() const { return tape_->value(id_); }
  /// Gradient after backward(); empty when nothing flowed into this node.
  const Matrix<Scalar>& grad() const { return tape_->grad(id_); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape<Scalar>& tape() const { return *tape_; }
  int id() const { return id_; }
  bool requires_grad() const { return tape_->requires_grad(id_); }
  /// Value of a 1x1 tensor.
  Scalar item() const { return value()(0, 0); }

 private:
  Tape<Scalar>* tape_ = nullptr;
  int id_ = -1;
};

inline std::string shape_str(Eigen::Index r, Eigen::Index c) {
  std::ostringstream os;
  os << '[' << r << 'x' << c << ']';
  return os.str();
}

template <typename Scalar>
class Tape {
 public:
  using Mat = Matrix<Scalar>;
  using BackwardFn = std::function<void(const Mat& grad_out)>;

  /// With `record` false no backward closures are kept (inference mode).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var<Scalar> constant(Mat value) { return push(std::move(value), false, nullptr); }

  /// Leaf whose gradient is kept on the tape.
  Var<Scalar> variable(Mat value) { return push(std::move(value), record_, nullptr); }

  /// Binds a parameter once per tape; repeated calls return the same node.
  Var<Scalar> parameter(Parameter<Scalar>& p) {
    auto it = bound_.find(&p);
    if (it != bound_.end()) return Var<Scalar>(this, it->second);
    Node n;
    n.param = &p;
    n.requires_grad = record_;
    nodes_.push_back(std::move(n));
    const int id = static_cast<int>(nodes_.size()) - 1;
    bound_.emplace(&p, id);
    return Var<Scalar>(this, id);
  }

  /// Records an op result. `fn` is dropped when no input needs a gradient.
  Var<Scalar> push(Mat value, bool requires_grad, BackwardFn fn, const char* op = "op") {
    if (!value.allFinite()) throw NumericError(std::string("non-finite value produced by ") + op);
    Node n;
    n.value = std::move(value);
    n.op = op;
    n.requires_grad = requires_grad && record_;
    if (n.requires_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var<Scalar>(this, static_cast<int>(nodes_.size()) - 1);
  }

  const Mat& value(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.param ? n.param->value : n.value;
  }
  const Mat& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  /// Name of the op that produced node `id` ("leaf" for inputs and parameters).
  const char* op(int id) const { return nodes_[static_cast<std::size_t>(id)].op; }

  template <typename Derived>
  void accumulate(int id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  /// Reverse sweep from a 1x1 loss. Each node is visited once in reverse
  /// creation order; parameter gradients are added into Parameter::grad
  /// scaled by `scale`.
  void backward(Var<Scalar> loss, Scalar scale = Scalar(1)) {
    if (loss.rows() != 1 || loss.cols() != 1) {
      throw ShapeError("backward needs a scalar loss, got " + shape_str(loss.rows(), loss.cols()));
    }
    if (!record_) throw Error("backward on a tape created without recording");
    accumulate(loss.id(), Mat::Constant(1, 1, scale));
    for (int i = loss.id(); i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.grad.size() == 0) continue;
      if (n.backward) n.backward(n.grad);
      if (n.param) n.param->grad += n.grad;
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    const char* op = "leaf";
    bool requires_grad = false;
    Parameter<Scalar>* param = nullptr;
    BackwardFn backward;
  };

  bool record_;
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter<Scalar>*, int> bound_;
};

namespace detail {

template <typename Scalar>
void require_same_tape(const Var<Scalar>& a, const Var<Scalar>& b, const char* op) {
  if (&a.tape() != &b.tape()) throw Error(std::string(op) + ": operands live on different tapes");
}

template <typename Scalar>
[[noreturn]] void shape_mismatch(const char* op, const Var<Scalar>& a, const Var<Scalar>& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.rows(), a.cols()) + " and " +
                   shape_str(b.rows(), b.cols()));
}

}  // namespace detail

/// a * b
template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_tape(a, b, "matmul");
  if (a.cols() != b.rows()) detail::shape_mismatch("matmul", a, b);
  auto& t = a.tape();
  Matrix<Scalar> out = a.value() * b.value();
  const bool rg = a.requires_grad() || b.requires_grad();
  return t.push(std::move(out), rg, [&t, a, b](const Matrix<Scalar>& g) {
    if (a.requires_grad()) t.accumulate(a.id(), g * b.value().transpose());
    if (b.requires_grad()) t.accumulate(b.id(), a.value().transpose() * g);
  }, "matmul");
}

/// a * b^T; the natural form for weights stored as (out x in).
template <typename Scalar>
Var<Scalar> matmul_nt(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_tape(a, b, "matmul_nt");
  if (a.cols() != b.cols()) detail::shape_mismatch("matmul_nt", a, b);
  auto& t = a.tape();
  Matrix<Scalar> out = a.value() * b.value().transpose();
  const bool rg = a.requires_grad() || b.requires_grad();
  return t.push(std::move(out), rg, [&t, a, b](const Matrix<Scalar>& g) {
    if (a.requires_grad()) t.accumulate(a.id(), g * b.value());
    if (b.requires_grad()) t.accumulate(b.id(), g.transpose() * a.value());
  }, "matmul_nt");
}

template <typename Scalar>
Var<Scalar> transpose(Var<Scalar> a) {
  auto& t = a.tape();
  Matrix<Scalar> out = a.value().transpose();
  return t.push(std::move(out), a.requires_grad(), [&t, a](const Matrix<Scalar>& g) {
    t.accumulate(a.id(), g.transpose());
  }, "transpose");
}

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_tape(a, b, "add");
  if (a.rows() != b.rows() || a.cols() != b.cols()) detail::shape_mismatch("add", a, b);
  auto& t = a.tape();
  Matrix<Scalar> out = a.value() + b.value();
  const bool rg = a.requires_grad() || b.requires_grad();
  return t.push(std::move(out), rg, [&t, a, b](const Matrix<Scalar>& g) {
    t.accumulate(a.id(), g);
    t.accumulate(b.id(), g);
  }, "add");
}

template <typename Scalar>
Var<Scalar> operator+(Var<Scalar> a, Var<Scalar> b) {
  return add(a, b);
}

/// x + bias, bias (1 x c) broadcast over the rows of x.
template <typename Scalar>
Var<Scalar> add_bias(Var<Scalar> x, Var<Scalar> bias) {
  detail::require_same_tape(x, bias, "add_bias");
  if (bias.rows() != 1 || bias.cols() != x.cols()) detail::shape_mismatch("add_bias", x, bias);
  auto& t = x.tape();
  Matrix<Scalar> out = x.value().rowwise() + bias.value().row(0);
  const bool rg = x.requires_grad() || bias.requires_grad();
  return t.push(std::move(out), rg, [&t, x, bias](const Matrix<Scalar>& g) {
    t.accumulate(x.id(), g);
    if (bias.requires_grad()) t.accumulate(bias.id(), g.colwise().sum());
  }, "add_bias");
}

/// Elementwise product.
template <typename Scalar>
Var<Scalar> mul(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_tape(a, b, "mul");
  if (a.rows() != b.rows() || a.cols() != b.cols()) detail::shape_mismatch("mul", a, b);
  auto& t = a.tape();
  Matrix<Scalar> out = a.value().cwiseProduct(b.value());
  const bool rg = a.requires_grad() || b.requires_grad();
  return t.push(std::move(out), rg, [&t, a, b](const Matrix<Scalar>& g) {
    if (a.requires_grad()) t.accumulate(a.id(), g.cwiseProduct(b.value()));
    if (b.requires_grad()) t.accumulate(b.id(), g.cwiseProduct(a.value()));
  }, "mul");
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar s) {
  auto& t = a.tape();
  Matrix<Scalar> out = a.value() * s;
  return t.push(std::move(out), a.requires_grad(), [&t, a, s](const Matrix<Scalar>& g) {
    t.accumulate(a.id(), g * s);
  }, "scale");
}

template <typename Scalar>
Var<Scalar> tanh(Var<Scalar> a) {
  auto& t = a.tape();
  Matrix<Scalar> out = a.value().array().tanh().matrix();
  const int self = static_cast<int>(t.size());
  return t.push(std::move(out), a.requires_grad(), [&t, a, self](const Matrix<Scalar>& g) {
    const auto& y = t.value(self);
    t.accumulate(a.id(), (g.array() * (Scalar(1) - y.array().square())).matrix());
  }, "tanh");
}

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> a) {
  auto& t = a.tape();
  Matrix<Scalar> out = a.value().cwiseMax(Scalar(0));
  return t.push(std::move(out), a.requires_grad(), [&t, a](const Matrix<Scalar>& g) {
    t.accumulate(a.id(), (a.value().array() > Scalar(0)).select(g.array(), Scalar(0)).matrix());
  }, "relu");
}

/// Per-row normalization to zero mean and unit variance, then gamma * xhat + beta
/// with gamma, beta of shape (1 x c).
template <typename Scalar>
Var<Scalar> layer_norm(Var<Scalar> x, Var<Scalar> gamma, Var<Scalar> beta, Scalar eps = Scalar(1e-5)) {
  detail::require_same_tape(x, gamma, "layer_norm");
  if (gamma.rows() != 1 || gamma.cols() != x.cols()) detail::shape_mismatch("layer_norm", x, gamma);
  if (beta.rows() != 1 || beta.cols() != x.cols()) detail::shape_mismatch("layer_norm", x, beta);
  auto& t = x.tape();
  const auto n = x.rows();
  const auto c = x.cols();
  Matrix<Scalar> xhat(n, c);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Scalar mean = x.value().row(r).mean();
    auto centered = (x.value().row(r).array() - mean);
    const Scalar var = centered.square().mean();
    inv_std(r) = Scalar(1) / std::sqrt(var + eps);
    xhat.row(r) = (centered * inv_std(r)).matrix();
  }
  Matrix<Scalar> out = (xhat.array().rowwise() * gamma.value().row(0).array()).matrix();
  out.rowwise() += beta.value().row(0);
  const bool rg = x.requires_grad() || gamma.requires_grad() || beta.requires_grad();
  return t.push(std::move(out), rg,
                [&t, x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std)](const Matrix<Scalar>& g) {
    if (gamma.requires_grad()) t.accumulate(gamma.id(), g.cwiseProduct(xhat).colwise().sum());
    if (beta.requires_grad()) t.accumulate(beta.id(), g.colwise().sum());
    if (x.requires_grad()) {
      Matrix<Scalar> dxhat = (g.array().rowwise() * gamma.value().row(0).array()).matrix();
      Matrix<Scalar> dx(g.rows(), g.cols());
      for (Eigen::Index r = 0; r < g.rows(); ++r) {
        const Scalar m1 = dxhat.row(r).mean();
        const Scalar m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).mean();
        dx.row(r) = ((dxhat.row(r).array() - m1 - xhat.row(r).array() * m2) * inv_std(r)).matrix();
      }
      t.accumulate(x.id(), dx);
    }
  }, "layer_norm");
}

/// Row-wise softmax with max subtraction. Entries where `allowed` is false
/// get probability exactly 0 and never influence the row; a row with no
/// allowed entry is all zeros.
template <typename Scalar>
Var<Scalar> softmax(Var<Scalar> x, const Mask* allowed = nullptr) {
  if (allowed && (allowed->rows() != x.rows() || allowed->cols() != x.cols())) {
    throw ShapeError("softmax: mask " + shape_str(allowed->rows(), allowed->cols()) + " vs input " +
                     shape_str(x.rows(), x.cols()));
  }
  auto& t = x.tape();
  Matrix<Scalar> y = Matrix<Scalar>::Zero(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    Scalar mx = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (!allowed || (*allowed)(r, c)) mx = std::max(mx, x.value()(r, c));
    }
    if (mx == -std::numeric_limits<Scalar>::infinity()) continue;
    Scalar sum = 0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (!allowed || (*allowed)(r, c)) {
        y(r, c) = std::exp(x.value()(r, c) - mx);
        sum += y(r, c);
      }
    }
    y.row(r) /= sum;
  }
  const int self = static_cast<int>(t.size());
  return t.push(std::move(y), x.requires_grad(), [&t, x, self](const Matrix<Scalar>& g) {
    const auto& yv = t.value(self);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dots = g.cwiseProduct(yv).rowwise().sum();
    t.accumulate(x.id(), (yv.array() * (g.colwise() - dots).array()).matrix());
  }, "softmax");
}

/// Rows of `table` selected by `ids`; also serves as the embedding lookup.
template <typename Scalar>
Var<Scalar> gather_rows(Var<Scalar> table, std::span<const int> ids) {
  auto& t = table.tape();
  Matrix<Scalar> out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) {
      throw RangeError("gather_rows: index " + std::to_string(ids[i]) + " outside [0, " +
                       std::to_string(table.rows()) + ")");
    }
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return t.push(std::move(out), table.requires_grad(), [&t, table, idx = std::move(idx)](const Matrix<Scalar>& g) {
    Matrix<Scalar> d = Matrix<Scalar>::Zero(table.rows(), table.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) d.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    t.accumulate(table.id(), d);
  }, "gather_rows");
}

template <typename Scalar>
Var<Scalar> embedding_lookup(Var<Scalar> table, std::span<const int> ids) {
  return gather_rows(table, ids);
}

/// Horizontal concatenation; all parts share the row count.
template <typename Scalar>
Var<Scalar> concat_cols(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  auto& t = parts.front().tape();
  Eigen::Index cols = 0;
  bool rg = false;
  for (const auto& p : parts) {
    if (p.rows() != parts.front().rows()) detail::shape_mismatch("concat_cols", parts.front(), p);
    cols += p.cols();
    rg = rg || p.requires_grad();
  }
  Matrix<Scalar> out(parts.front().rows(), cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return t.push(std::move(out), rg, [&t, parts](const Matrix<Scalar>& g) {
    Eigen::Index off = 0;
    for (const auto& p : parts) {
      if (p.requires_grad()) t.accumulate(p.id(), g.middleCols(off, p.cols()));
      off += p.cols();
    }
  }, "concat_cols");
}

/// Vertical concatenation; all parts share the column count.
template <typename Scalar>
Var<Scalar> concat_rows(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  auto& t = parts.front().tape();
  Eigen::Index rows = 0;
  bool rg = false;
  for (const auto& p : parts) {
    if (p.cols() != parts.front().cols()) detail::shape_mismatch("concat_rows", parts.front(), p);
    rows += p.rows();
    rg = rg || p.requires_grad();
  }
  Matrix<Scalar> out(rows, parts.front().cols());
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return t.push(std::move(out), rg, [&t, parts](const Matrix<Scalar>& g) {
    Eigen::Index off = 0;
    for (const auto& p : parts) {
      if (p.requires_grad()) t.accumulate(p.id(), g.middleRows(off, p.rows()));
      off += p.rows();
    }
  }, "concat_rows");
}

template <typename Scalar>
Var<Scalar> slice_cols(Var<Scalar> a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count <= 0 || start + count > a.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(start) + ", +" + std::to_string(count) + ") outside " +
                     shape_str(a.rows(), a.cols()));
  }
  auto& t = a.tape();
  Matrix<Scalar> out = a.value().middleCols(start, count);
  return t.push(std::move(out), a.requires_grad(), [&t, a, start, count](const Matrix<Scalar>& g) {
    Matrix<Scalar> d = Matrix<Scalar>::Zero(a.rows(), a.cols());
    d.middleCols(start, count) = g;
    t.accumulate(a.id(), d);
  }, "slice_cols");
}

template <typename Scalar>
Var<Scalar> slice_rows(Var<Scalar> a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count <= 0 || start + count > a.rows()) {
    throw ShapeError("slice_rows: [" + std::to_string(start) + ", +" + std::to_string(count) + ") outside " +
                     shape_str(a.rows(), a.cols()));
  }
  auto& t = a.tape();
  Matrix<Scalar> out = a.value().middleRows(start, count);
  return t.push(std::move(out), a.requires_grad(), [&t, a, start, count](const Matrix<Scalar>& g) {
    Matrix<Scalar> d = Matrix<Scalar>::Zero(a.rows(), a.cols());
    d.middleRows(start, count) = g;
    t.accumulate(a.id(), d);
  }, "slice_rows");
}

/// Sum of all entries, as a 1x1 tensor.
template <typename Scalar>
Var<Scalar> sum(Var<Scalar> a) {
  auto& t = a.tape();
  Matrix<Scalar> out = Matrix<Scalar>::Constant(1, 1, a.value().sum());
  return t.push(std::move(out), a.requires_grad(), [&t, a](const Matrix<Scalar>& g) {
    t.accumulate(a.id(), Matrix<Scalar>::Constant(a.rows(), a.cols(), g(0, 0)));
  }, "sum");
}

template <typename Scalar>
Var<Scalar> dot(Var<Scalar> a, Var<Scalar> b) {
  return sum(mul(a, b));
}

/// Inverted dropout. Identity when rate is 0.
template <typename Scalar, typename Rng>
Var<Scalar> dropout(Var<Scalar> x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw RangeError("dropout rate must be < 1");
  auto& t = x.tape();
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix<Scalar> m(x.rows(), x.cols());
  const Scalar s = Scalar(1.0 / (1.0 - rate));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = keep(rng) ? s : Scalar(0);
  Matrix<Scalar> out = x.value().cwiseProduct(m);
  return t.push(std::move(out), x.requires_grad(), [&t, x, m = std::move(m)](const Matrix<Scalar>& g) {
    t.accumulate(x.id(), g.cwiseProduct(m));
  }, "dropout");
}

/// Weighted mean over rows of -log softmax(logits[r])[labels[r]], as 1x1.
/// `weights` may be empty (all ones).
template <typename Scalar>
Var<Scalar> cross_entropy(Var<Scalar> logits, std::span<const int> labels, std::span<const Scalar> weights = {}) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows()) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(logits.rows()) + " rows");
  }
  if (!weights.empty() && weights.size() != labels.size()) {
    throw ShapeError("cross_entropy: weight count differs from label count");
  }
  const auto classes = logits.cols();
  for (int l : labels) {
    if (l < 0 || l >= classes) {
      throw RangeError("cross_entropy: label " + std::to_string(l) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
  auto& t = logits.tape();
  const auto& z = logits.value();
  Matrix<Scalar> probs(z.rows(), classes);
  Scalar total = 0;
  Scalar wsum = 0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const Scalar mx = z.row(r).maxCoeff();
    auto e = (z.row(r).array() - mx).exp();
    const Scalar se = e.sum();
    probs.row(r) = (e / se).matrix();
    const Scalar w = weights.empty() ? Scalar(1) : weights[static_cast<std::size_t>(r)];
    total += w * (std::log(se) + mx - z(r, labels[static_cast<std::size_t>(r)]));
    wsum += w;
  }
  if (!(wsum > 0)) throw NumericError("cross_entropy: total weight is not positive");
  Matrix<Scalar> out = Matrix<Scalar>::Constant(1, 1, total / wsum);
  std::vector<int> lab(labels.begin(), labels.end());
  std::vector<Scalar> wts(weights.begin(), weights.end());
  return t.push(std::move(out), logits.requires_grad(),
                [&t, logits, probs = std::move(probs), lab = std::move(lab), wts = std::move(wts), wsum](const Matrix<Scalar>& g) {
    Matrix<Scalar> d = probs;
    for (std::size_t r = 0; r < lab.size(); ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      d(ri, lab[r]) -= Scalar(1);
      d.row(ri) *= (wts.empty() ? Scalar(1) : wts[r]) / wsum;
    }
    t.accumulate(logits.id(), d * g(0, 0));
  }, "cross_entropy");
}

/// Row-wise softmax of a plain matrix (no tape).
template <typename Derived>
auto softmax_rows(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> y(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    auto e = (z.row(r).array() - z.row(r).maxCoeff()).exp();
    y.row(r) = (e / e.sum()).matrix();
  }
  return y;
}

/// Adam hyperparameters.
struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moment estimates per parameter, plus the step count.
template <typename Scalar>
struct AdamState {
  std::vector<Matrix<Scalar>> m;
  std::vector<Matrix<Scalar>> v;
  long step = 0;
};

/// One bias-corrected Adam update of every parameter from its grad.
template <typename Scalar>
void adam_step(std::span<Parameter<Scalar>* const> params, AdamState<Scalar>& state, const AdamConfig& cfg) {
  if (state.m.empty()) {
    for (auto* p : params) {
      state.m.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
      state.v.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: state tracks a different parameter set");
  ++state.step;
  const Scalar b1 = Scalar(cfg.beta1);
  const Scalar b2 = Scalar(cfg.beta2);
  const Scalar c1 = Scalar(1) - Scalar(std::pow(cfg.beta1, static_cast<double>(state.step)));
  const Scalar c2 = Scalar(1) - Scalar(std::pow(cfg.beta2, static_cast<double>(state.step)));
  const Scalar lr = Scalar(cfg.lr);
  const Scalar eps = Scalar(cfg.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() ||
        state.m[i].rows() != p.value.rows() || state.m[i].cols() != p.value.cols()) {
      throw ShapeError("adam_step: shape mismatch for parameter '" + p.name + "'");
    }
    state.m[i] = b1 * state.m[i] + (Scalar(1) - b1) * p.grad;
    state.v[i] = b2 * state.v[i] + (Scalar(1) - b2) * p.grad.cwiseAbs2();
    p.value.array() -= lr * (state.m[i].array() / c1) / ((state.v[i].array() / c2).sqrt() + eps);
  }
}

}  // namespace eslsc
