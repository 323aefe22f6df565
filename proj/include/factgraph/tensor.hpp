#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "factgraph/rng.hpp"

namespace factgraph {

struct ShapeMismatchError : std::runtime_error {
  explicit ShapeMismatchError(const std::string& m) : std::runtime_error(m) {}
};

// Reverse-mode autodiff over dense row-major matrices. Nodes own their
// value, accumulated gradient, and a closure that pushes the gradient to
// their parents. Scalars are 1x1 matrices. Closures refer to their own
// node through a raw pointer: a shared_ptr self-capture would form a
// cycle and leak every graph ever built.
template <typename T>
class Node {
 public:
  using Matrix =
      Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backward_fn;

  void ensure_grad() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols())
      grad = Matrix::Zero(value.rows(), value.cols());
  }
};

template <typename T>
using Tensor = std::shared_ptr<Node<T>>;

template <typename T>
using Matrix = typename Node<T>::Matrix;

namespace detail {

template <typename T>
Tensor<T> make_node(Matrix<T> value, std::vector<Tensor<T>> parents) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p->requires_grad || p->backward_fn) n->requires_grad = true;
  return n;
}

inline void check(bool ok, const std::string& msg) {
  if (!ok) throw ShapeMismatchError(msg);
}

}  // namespace detail

template <typename T>
Tensor<T> constant(Matrix<T> value) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  return n;
}

template <typename T>
Tensor<T> parameter(Matrix<T> value) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  n->requires_grad = true;
  return n;
}

// ---------------------------------------------------------------------------
// ops
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> matmul(Tensor<T> a, Tensor<T> b) {
  detail::check(a->value.cols() == b->value.rows(),
                "matmul: inner dimensions differ");
  auto out = detail::make_node<T>(a->value * b->value, {a, b});
  out->backward_fn = [self = out.get(), a, b] {
    if (a->requires_grad) {
      a->ensure_grad();
      a->grad.noalias() += self->grad * b->value.transpose();
    }
    if (b->requires_grad) {
      b->ensure_grad();
      b->grad.noalias() += a->value.transpose() * self->grad;
    }
  };
  return out;
}

// a * b^T without materializing the transpose node
template <typename T>
Tensor<T> matmul_nt(Tensor<T> a, Tensor<T> b) {
  detail::check(a->value.cols() == b->value.cols(),
                "matmul_nt: trailing dimensions differ");
  auto out = detail::make_node<T>(a->value * b->value.transpose(), {a, b});
  out->backward_fn = [self = out.get(), a, b] {
    if (a->requires_grad) {
      a->ensure_grad();
      a->grad.noalias() += self->grad * b->value;
    }
    if (b->requires_grad) {
      b->ensure_grad();
      b->grad.noalias() += self->grad.transpose() * a->value;
    }
  };
  return out;
}

template <typename T>
Tensor<T> add(Tensor<T> a, Tensor<T> b) {
  detail::check(a->value.rows() == b->value.rows() &&
                    a->value.cols() == b->value.cols(),
                "add: shapes differ");
  auto out = detail::make_node<T>(a->value + b->value, {a, b});
  out->backward_fn = [self = out.get(), a, b] {
    if (a->requires_grad) {
      a->ensure_grad();
      a->grad += self->grad;
    }
    if (b->requires_grad) {
      b->ensure_grad();
      b->grad += self->grad;
    }
  };
  return out;
}

// n x d plus a 1 x d row broadcast over rows (bias addition)
template <typename T>
Tensor<T> add_rowwise(Tensor<T> a, Tensor<T> row) {
  detail::check(row->value.rows() == 1 && row->value.cols() == a->value.cols(),
                "add_rowwise: row must be 1 x cols(a)");
  Matrix<T> v = a->value;
  v.rowwise() += row->value.row(0);
  auto out = detail::make_node<T>(std::move(v), {a, row});
  out->backward_fn = [self = out.get(), a, row] {
    if (a->requires_grad) {
      a->ensure_grad();
      a->grad += self->grad;
    }
    if (row->requires_grad) {
      row->ensure_grad();
      row->grad.row(0) += self->grad.colwise().sum();
    }
  };
  return out;
}

template <typename T>
Tensor<T> multiply(Tensor<T> a, Tensor<T> b) {
  detail::check(a->value.rows() == b->value.rows() &&
                    a->value.cols() == b->value.cols(),
                "multiply: shapes differ");
  auto out = detail::make_node<T>(a->value.cwiseProduct(b->value), {a, b});
  out->backward_fn = [self = out.get(), a, b] {
    if (a->requires_grad) {
      a->ensure_grad();
      a->grad += self->grad.cwiseProduct(b->value);
    }
    if (b->requires_grad) {
      b->ensure_grad();
      b->grad += self->grad.cwiseProduct(a->value);
    }
  };
  return out;
}

// n x d scaled per row by an n x 1 column (attention-weight application)
template <typename T>
Tensor<T> mul_colwise(Tensor<T> a, Tensor<T> col) {
  detail::check(col->value.cols() == 1 && col->value.rows() == a->value.rows(),
                "mul_colwise: col must be rows(a) x 1");
  auto out = detail::make_node<T>(
      a->value.array().colwise() * col->value.col(0).array(), {a, col});
  out->backward_fn = [self = out.get(), a, col] {
    if (a->requires_grad) {
      a->ensure_grad();
      a->grad.array() += self->grad.array().colwise() * col->value.col(0).array();
    }
    if (col->requires_grad) {
      col->ensure_grad();
      col->grad.col(0) +=
          self->grad.cwiseProduct(a->value).rowwise().sum();
    }
  };
  return out;
}

template <typename T>
Tensor<T> scale(Tensor<T> a, T s) {
  auto out = detail::make_node<T>(a->value * s, {a});
  out->backward_fn = [self = out.get(), a, s] {
    if (a->requires_grad) {
      a->ensure_grad();
      a->grad += self->grad * s;
    }
  };
  return out;
}

template <typename T>
Tensor<T> relu(Tensor<T> a) {
  auto out = detail::make_node<T>(a->value.cwiseMax(T(0)), {a});
  out->backward_fn = [self = out.get(), a] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    a->grad.array() +=
        self->grad.array() * (a->value.array() > T(0)).template cast<T>();
  };
  return out;
}

// exact gelu: 0.5 x (1 + erf(x / sqrt(2)))
template <typename T>
Tensor<T> gelu(Tensor<T> a) {
  const T inv_sqrt2 = T(0.7071067811865475244);
  auto cdf_fn = [inv_sqrt2](T x) {
    return T(0.5) * (T(1) + std::erf(x * inv_sqrt2));
  };
  Matrix<T> v = a->value.array() *
                a->value.array().unaryExpr(cdf_fn);
  auto out = detail::make_node<T>(std::move(v), {a});
  out->backward_fn = [self = out.get(), a, cdf_fn] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    const T inv_sqrt2pi = T(0.3989422804014326779);
    auto x = a->value.array();
    auto cdf = x.unaryExpr(cdf_fn);
    auto pdf = inv_sqrt2pi * (-x * x * T(0.5)).exp();
    a->grad.array() += self->grad.array() * (cdf + x * pdf);
  };
  return out;
}

template <typename T>
Tensor<T> sigmoid(Tensor<T> a) {
  Matrix<T> v = (T(1) / (T(1) + (-a->value.array()).exp())).matrix();
  auto out = detail::make_node<T>(std::move(v), {a});
  out->backward_fn = [self = out.get(), a] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    a->grad.array() +=
        self->grad.array() * self->value.array() * (T(1) - self->value.array());
  };
  return out;
}

// Row-wise softmax; `mask` (optional) is added to the logits first and is
// never differentiated through.
template <typename T>
Tensor<T> softmax_rows(Tensor<T> a, const Matrix<T>* mask = nullptr) {
  Matrix<T> logits = a->value;
  if (mask) {
    detail::check(mask->rows() == logits.rows() && mask->cols() == logits.cols(),
                  "softmax_rows: mask shape differs");
    logits += *mask;
  }
  Matrix<T> v(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r).array();
    auto shifted = (row - row.maxCoeff()).exp();
    v.row(r) = shifted / shifted.sum();
  }
  auto out = detail::make_node<T>(std::move(v), {a});
  out->backward_fn = [self = out.get(), a] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (Eigen::Index r = 0; r < self->value.rows(); ++r) {
      auto y = self->value.row(r).array();
      auto dy = self->grad.row(r).array();
      T dot = (y * dy).sum();
      a->grad.row(r).array() += y * (dy - dot);
    }
  };
  return out;
}

// Row-wise layer normalization with learned scale and shift (1 x d each).
template <typename T>
Tensor<T> layer_norm_rows(Tensor<T> a, Tensor<T> gamma, Tensor<T> beta,
                          T eps = T(1e-5)) {
  const Eigen::Index d = a->value.cols();
  detail::check(gamma->value.rows() == 1 && gamma->value.cols() == d &&
                    beta->value.rows() == 1 && beta->value.cols() == d,
                "layer_norm_rows: gamma/beta must be 1 x cols(a)");
  Matrix<T> normed(a->value.rows(), d);
  Matrix<T> inv_std(a->value.rows(), 1);
  for (Eigen::Index r = 0; r < a->value.rows(); ++r) {
    auto row = a->value.row(r).array();
    T mu = row.mean();
    T var = (row - mu).square().mean();
    T is = T(1) / std::sqrt(var + eps);
    inv_std(r, 0) = is;
    normed.row(r) = (row - mu) * is;
  }
  Matrix<T> v = normed.array().rowwise() * gamma->value.row(0).array();
  v.rowwise() += beta->value.row(0);
  auto out = detail::make_node<T>(std::move(v), {a, gamma, beta});
  out->backward_fn = [self = out.get(), a, gamma, beta, normed, inv_std, d] {
    if (gamma->requires_grad) {
      gamma->ensure_grad();
      gamma->grad.row(0) +=
          self->grad.cwiseProduct(normed).colwise().sum();
    }
    if (beta->requires_grad) {
      beta->ensure_grad();
      beta->grad.row(0) += self->grad.colwise().sum();
    }
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (Eigen::Index r = 0; r < a->value.rows(); ++r) {
      auto dy = (self->grad.row(r).array() * gamma->value.row(0).array()).eval();
      auto xn = normed.row(r).array();
      T m1 = dy.mean();
      T m2 = (dy * xn).mean();
      a->grad.row(r).array() += inv_std(r, 0) * (dy - m1 - xn * m2);
    }
  };
  return out;
}

// Selects rows by index (embedding lookup, node sub-selection); backward
// scatter-adds back into the source rows.
template <typename T>
Tensor<T> gather_rows(Tensor<T> a, std::vector<int> indices) {
  for (int i : indices)
    detail::check(i >= 0 && i < a->value.rows(),
                  "gather_rows: index out of range");
  Matrix<T> v(static_cast<Eigen::Index>(indices.size()), a->value.cols());
  for (std::size_t r = 0; r < indices.size(); ++r)
    v.row(static_cast<Eigen::Index>(r)) = a->value.row(indices[r]);
  auto out = detail::make_node<T>(std::move(v), {a});
  out->backward_fn = [self = out.get(), a, indices = std::move(indices)] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (std::size_t r = 0; r < indices.size(); ++r)
      a->grad.row(indices[r]) += self->grad.row(static_cast<Eigen::Index>(r));
  };
  return out;
}

template <typename T>
Tensor<T> concat_cols(Tensor<T> a, Tensor<T> b) {
  detail::check(a->value.rows() == b->value.rows(),
                "concat_cols: row counts differ");
  Matrix<T> v(a->value.rows(), a->value.cols() + b->value.cols());
  v << a->value, b->value;
  auto out = detail::make_node<T>(std::move(v), {a, b});
  out->backward_fn = [self = out.get(), a, b] {
    if (a->requires_grad) {
      a->ensure_grad();
      a->grad += self->grad.leftCols(a->value.cols());
    }
    if (b->requires_grad) {
      b->ensure_grad();
      b->grad += self->grad.rightCols(b->value.cols());
    }
  };
  return out;
}

template <typename T>
Tensor<T> concat_rows(std::vector<Tensor<T>> parts) {
  detail::check(!parts.empty(), "concat_rows: no inputs");
  Eigen::Index rows = 0, cols = parts[0]->value.cols();
  for (const auto& p : parts) {
    detail::check(p->value.cols() == cols, "concat_rows: column counts differ");
    rows += p->value.rows();
  }
  Matrix<T> v(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    v.middleRows(at, p->value.rows()) = p->value;
    at += p->value.rows();
  }
  auto out = detail::make_node<T>(std::move(v), parts);
  out->backward_fn = [self = out.get(), parts] {
    Eigen::Index at = 0;
    for (const auto& p : parts) {
      if (p->requires_grad) {
        p->ensure_grad();
        p->grad += self->grad.middleRows(at, p->value.rows());
      }
      at += p->value.rows();
    }
  };
  return out;
}

template <typename T>
Tensor<T> slice_cols(Tensor<T> a, int begin, int count) {
  detail::check(begin >= 0 && count > 0 && begin + count <= a->value.cols(),
                "slice_cols: out of range");
  auto out = detail::make_node<T>(a->value.middleCols(begin, count), {a});
  out->backward_fn = [self = out.get(), a, begin, count] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    a->grad.middleCols(begin, count) += self->grad;
  };
  return out;
}

// Mean over rows -> 1 x d.
template <typename T>
Tensor<T> mean_rows(Tensor<T> a) {
  detail::check(a->value.rows() > 0, "mean_rows: empty input");
  Matrix<T> v = a->value.colwise().mean();
  auto out = detail::make_node<T>(std::move(v), {a});
  out->backward_fn = [self = out.get(), a] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    a->grad.rowwise() += self->grad.row(0) / T(a->value.rows());
  };
  return out;
}

template <typename T>
Tensor<T> sum_rows(Tensor<T> a) {
  Matrix<T> v = a->value.colwise().sum();
  auto out = detail::make_node<T>(std::move(v), {a});
  out->backward_fn = [self = out.get(), a] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    a->grad.rowwise() += self->grad.row(0);
  };
  return out;
}

template <typename T>
Tensor<T> sum_all(Tensor<T> a) {
  Matrix<T> v(1, 1);
  v(0, 0) = a->value.sum();
  auto out = detail::make_node<T>(std::move(v), {a});
  out->backward_fn = [self = out.get(), a] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    a->grad.array() += self->grad(0, 0);
  };
  return out;
}

// Inverted dropout; the kept mask is drawn from `rng` at call time so the
// whole forward pass is reproducible from one seed.
template <typename T>
Tensor<T> dropout(Tensor<T> a, T rate, Rng& rng, bool training) {
  if (!training || rate <= T(0)) return a;
  detail::check(rate < T(1), "dropout: rate must be < 1");
  Matrix<T> mask(a->value.rows(), a->value.cols());
  const T keep = T(1) - rate;
  for (Eigen::Index r = 0; r < mask.rows(); ++r)
    for (Eigen::Index c = 0; c < mask.cols(); ++c)
      mask(r, c) = (T(rng.uniform()) < keep) ? T(1) / keep : T(0);
  auto out = detail::make_node<T>(a->value.cwiseProduct(mask), {a});
  out->backward_fn = [self = out.get(), a, mask = std::move(mask)] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    a->grad += self->grad.cwiseProduct(mask);
  };
  return out;
}

// Mean softmax cross-entropy of row logits against integer class labels;
// returns a 1x1 tensor.
template <typename T>
Tensor<T> cross_entropy(Tensor<T> logits, const std::vector<int>& labels) {
  detail::check(logits->value.rows() == static_cast<Eigen::Index>(labels.size()),
                "cross_entropy: one label per logits row required");
  const Eigen::Index n = logits->value.rows();
  Matrix<T> probs(n, logits->value.cols());
  T loss = T(0);
  for (Eigen::Index r = 0; r < n; ++r) {
    detail::check(labels[r] >= 0 && labels[r] < logits->value.cols(),
                  "cross_entropy: label out of range");
    auto row = logits->value.row(r).array();
    auto shifted = (row - row.maxCoeff()).exp();
    probs.row(r) = shifted / shifted.sum();
    loss -= std::log(std::max(probs(r, labels[r]),
                              std::numeric_limits<T>::min()));
  }
  Matrix<T> v(1, 1);
  v(0, 0) = loss / T(n);
  auto out = detail::make_node<T>(std::move(v), {logits});
  out->backward_fn = [self = out.get(), logits, labels, probs = std::move(probs), n] {
    if (!logits->requires_grad) return;
    logits->ensure_grad();
    Matrix<T> d = probs;
    for (Eigen::Index r = 0; r < n; ++r) d(r, labels[r]) -= T(1);
    logits->grad += self->grad(0, 0) / T(n) * d;
  };
  return out;
}

// ---------------------------------------------------------------------------
// backward pass
// ---------------------------------------------------------------------------

template <typename T>
void backward(Tensor<T> root) {
  detail::check(root->value.rows() == 1 && root->value.cols() == 1,
                "backward: root must be scalar");
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Tensor<T>, std::size_t>> stack{{root, 0}};
  std::unordered_map<Node<T>*, Tensor<T>> keep;  // pin nodes while walking
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next == 0) {
      if (seen.count(node.get())) {
        stack.pop_back();
        continue;
      }
      seen.insert(node.get());
      keep[node.get()] = node;
    }
    if (next < node->parents.size()) {
      auto child = node->parents[next++];
      if (!seen.count(child.get())) stack.push_back({child, 0});
    } else {
      order.push_back(node.get());
      stack.pop_back();
    }
  }
  for (Node<T>* n : order) n->ensure_grad();
  root->grad(0, 0) = T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward_fn) (*it)->backward_fn();
}

template <typename T>
void zero_grad(const std::vector<Tensor<T>>& params) {
  for (const auto& p : params)
    p->grad = Matrix<T>::Zero(p->value.rows(), p->value.cols());
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

template <typename T>
class Adam {
 public:
  explicit Adam(std::vector<Tensor<T>> params, T lr = T(1e-4),
                T beta1 = T(0.9), T beta2 = T(0.999), T eps = T(1e-8))
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
        eps_(eps) {
    for (const auto& p : params_) {
      m_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  // lr_scale implements external schedules (e.g. linear decay); gradients
  // are clipped to `max_norm` over the global norm when max_norm > 0.
  void step(T lr_scale = T(1), T max_norm = T(0)) {
    ++t_;
    if (max_norm > T(0)) {
      T sq = T(0);
      for (const auto& p : params_) {
        if (p->grad.size() == 0) continue;
        sq += p->grad.squaredNorm();
      }
      T norm = std::sqrt(sq);
      if (norm > max_norm) {
        T s = max_norm / norm;
        for (const auto& p : params_)
          if (p->grad.size() != 0) p->grad *= s;
      }
    }
    T bc1 = T(1) - std::pow(beta1_, T(t_));
    T bc2 = T(1) - std::pow(beta2_, T(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i];
      if (p->grad.size() == 0) p->ensure_grad();
      m_[i] = beta1_ * m_[i] + (T(1) - beta1_) * p->grad;
      v_[i] = beta2_ * v_[i] + (T(1) - beta2_) * p->grad.cwiseProduct(p->grad);
      auto mhat = (m_[i] / bc1).array();
      auto vhat = (v_[i] / bc2).array();
      p->value.array() -= lr_ * lr_scale * mhat / (vhat.sqrt() + eps_);
    }
  }

  const std::vector<Tensor<T>>& params() const { return params_; }

 private:
  std::vector<Tensor<T>> params_;
  T lr_, beta1_, beta2_, eps_;
  std::vector<Matrix<T>> m_, v_;
  long t_ = 0;
};

// ---------------------------------------------------------------------------
// gradient checking
// ---------------------------------------------------------------------------

// Max relative error between analytic and central-difference gradients of
// `loss_fn` (which must rebuild the graph on every call) for each param.
template <typename T>
T finite_diff_check(const std::function<Tensor<T>()>& loss_fn,
                    const std::vector<Tensor<T>>& params, T h = T(1e-5)) {
  zero_grad(params);
  Tensor<T> loss = loss_fn();
  backward(loss);
  std::vector<Matrix<T>> analytic;
  for (const auto& p : params) {
    p->ensure_grad();
    analytic.push_back(p->grad);
  }
  T worst = T(0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    for (Eigen::Index r = 0; r < p->value.rows(); ++r)
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        T saved = p->value(r, c);
        p->value(r, c) = saved + h;
        T up = loss_fn()->value(0, 0);
        p->value(r, c) = saved - h;
        T down = loss_fn()->value(0, 0);
        p->value(r, c) = saved;
        T numeric = (up - down) / (T(2) * h);
        T denom = std::max({std::abs(numeric), std::abs(analytic[i](r, c)),
                            T(1e-8)});
        worst = std::max(worst, std::abs(numeric - analytic[i](r, c)) / denom);
      }
  }
  return worst;
}

}  // namespace factgraph
