#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sbf/tensor.hpp"

namespace sbf {

// Eager tape-based reverse-mode differentiation over dense tensors.
// Ops append nodes to a Wengert list; backward() replays the list in
// reverse, accumulating cotangents into parents. A tape is single-threaded
// and is consumed by its backward() call.
template <typename T>
class TapeT {
 public:
  struct Node {
    TensorT<T> value;
    TensorT<T> grad;  // empty until first accumulation
    bool requires_grad = false;
    std::function<void(TapeT&)> back;  // empty for leaves
  };

  TapeT() { nodes_.reserve(1024); }

  int add_leaf(TensorT<T> v, bool requires_grad) {
    nodes_.push_back(Node{std::move(v), {}, requires_grad, {}});
    return static_cast<int>(nodes_.size()) - 1;
  }

  int add_node(TensorT<T> v, bool requires_grad, std::function<void(TapeT&)> back) {
    if (!requires_grad) back = nullptr;
    nodes_.push_back(Node{std::move(v), {}, requires_grad, std::move(back)});
    return static_cast<int>(nodes_.size()) - 1;
  }

  int next_id() const { return static_cast<int>(nodes_.size()); }

  const TensorT<T>& val(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  bool requires_grad(int id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }

  // Cotangent of a node; zeros are materialized on first touch.
  TensorT<T>& grad(int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.empty() && n.value.numel() > 0) n.grad = TensorT<T>::zeros(n.value.shape);
    return n.grad;
  }
  bool has_grad(int id) const { return !nodes_[static_cast<size_t>(id)].grad.empty(); }

  void backward(int loss_id) {
    if (consumed_)
      throw std::logic_error("tape: backward called twice; graph is consumed");
    const Node& loss = nodes_.at(static_cast<size_t>(loss_id));
    if (loss.value.numel() != 1)
      throw std::invalid_argument("tape: backward requires a scalar loss");
    if (!loss.requires_grad)
      throw std::invalid_argument(
          "tape: loss is detached from every tracked leaf; no gradients exist");
    consumed_ = true;
    grad(loss_id)[0] = T(1);
    for (int i = loss_id; i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (n.requires_grad && n.back && !n.grad.empty()) n.back(*this);
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

template <typename T>
struct VarT {
  TapeT<T>* tape = nullptr;
  int id = -1;

  const TensorT<T>& value() const { return tape->val(id); }
  bool tracked() const { return tape->requires_grad(id); }
};

using TapeF = TapeT<float>;
using TapeD = TapeT<double>;

namespace ops {

template <typename T>
VarT<T> leaf(TapeT<T>& tape, TensorT<T> v, bool requires_grad) {
  return {&tape, tape.add_leaf(std::move(v), requires_grad)};
}

template <typename T>
VarT<T> constant(TapeT<T>& tape, TensorT<T> v) {
  return leaf(tape, std::move(v), false);
}

// --- elementwise -------------------------------------------------------

template <typename T>
VarT<T> add(VarT<T> a, VarT<T> b) {
  TapeT<T>& tp = *a.tape;
  check_same_shape(a.value(), b.value(), "add");
  TensorT<T> out = a.value();
  for (int64_t i = 0; i < out.numel(); ++i) out[i] += b.value()[i];
  const int aid = a.id, bid = b.id, oid = tp.next_id();
  const bool ta = a.tracked(), tb = b.tracked();
  tp.add_node(std::move(out), ta || tb, [=](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    if (ta) {
      TensorT<T>& ga = t.grad(aid);
      for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
    }
    if (tb) {
      TensorT<T>& gb = t.grad(bid);
      for (int64_t i = 0; i < g.numel(); ++i) gb[i] += g[i];
    }
  });
  return {&tp, oid};
}

template <typename T>
VarT<T> sub(VarT<T> a, VarT<T> b) {
  TapeT<T>& tp = *a.tape;
  check_same_shape(a.value(), b.value(), "sub");
  TensorT<T> out = a.value();
  for (int64_t i = 0; i < out.numel(); ++i) out[i] -= b.value()[i];
  const int aid = a.id, bid = b.id, oid = tp.next_id();
  const bool ta = a.tracked(), tb = b.tracked();
  tp.add_node(std::move(out), ta || tb, [=](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    if (ta) {
      TensorT<T>& ga = t.grad(aid);
      for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
    }
    if (tb) {
      TensorT<T>& gb = t.grad(bid);
      for (int64_t i = 0; i < g.numel(); ++i) gb[i] -= g[i];
    }
  });
  return {&tp, oid};
}

template <typename T>
VarT<T> mul(VarT<T> a, VarT<T> b) {
  TapeT<T>& tp = *a.tape;
  check_same_shape(a.value(), b.value(), "mul");
  TensorT<T> out = a.value();
  for (int64_t i = 0; i < out.numel(); ++i) out[i] *= b.value()[i];
  const int aid = a.id, bid = b.id, oid = tp.next_id();
  const bool ta = a.tracked(), tb = b.tracked();
  tp.add_node(std::move(out), ta || tb, [=](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    if (ta) {
      TensorT<T>& ga = t.grad(aid);
      const TensorT<T>& bv = t.val(bid);
      for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tb) {
      TensorT<T>& gb = t.grad(bid);
      const TensorT<T>& av = t.val(aid);
      for (int64_t i = 0; i < g.numel(); ++i) gb[i] += g[i] * av[i];
    }
  });
  return {&tp, oid};
}

template <typename T>
VarT<T> scale(VarT<T> a, T c) {
  TapeT<T>& tp = *a.tape;
  TensorT<T> out = a.value();
  for (auto& v : out.data) v *= c;
  const int aid = a.id, oid = tp.next_id();
  tp.add_node(std::move(out), a.tracked(), [=](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    TensorT<T>& ga = t.grad(aid);
    for (int64_t i = 0; i < g.numel(); ++i) ga[i] += c * g[i];
  });
  return {&tp, oid};
}

template <typename T>
VarT<T> neg(VarT<T> a) {
  return scale(a, T(-1));
}

template <typename T>
VarT<T> add_const(VarT<T> a, T c) {
  TapeT<T>& tp = *a.tape;
  TensorT<T> out = a.value();
  for (auto& v : out.data) v += c;
  const int aid = a.id, oid = tp.next_id();
  tp.add_node(std::move(out), a.tracked(), [=](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    TensorT<T>& ga = t.grad(aid);
    for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
  });
  return {&tp, oid};
}

// y[c, t] = x[c, t] * s[c]: per-row (channel) scaling
template <typename T>
VarT<T> scale_rows(VarT<T> x, VarT<T> s) {
  TapeT<T>& tp = *x.tape;
  if (x.value().rank() != 2 || s.value().rank() != 1 ||
      s.value().numel() != x.value().dim(0))
    throw std::invalid_argument("scale_rows: expects [C,T] and [C]");
  const int64_t C = x.value().dim(0), W = x.value().dim(1);
  TensorT<T> out = x.value();
  for (int64_t c = 0; c < C; ++c) {
    const T sv = s.value()[c];
    for (int64_t t = 0; t < W; ++t) out.at2(c, t) *= sv;
  }
  const int xid = x.id, sid = s.id, oid = tp.next_id();
  const bool tx = x.tracked(), ts = s.tracked();
  tp.add_node(std::move(out), tx || ts, [=](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    if (tx) {
      TensorT<T>& gx = t.grad(xid);
      const TensorT<T>& sv = t.val(sid);
      for (int64_t c = 0; c < C; ++c)
        for (int64_t j = 0; j < W; ++j) gx.at2(c, j) += sv[c] * g.at2(c, j);
    }
    if (ts) {
      TensorT<T>& gs = t.grad(sid);
      const TensorT<T>& xv = t.val(xid);
      for (int64_t c = 0; c < C; ++c) {
        T acc = T(0);
        for (int64_t j = 0; j < W; ++j) acc += g.at2(c, j) * xv.at2(c, j);
        gs[c] += acc;
      }
    }
  });
  return {&tp, oid};
}

// out = x * s with a tracked scalar s (numel 1) broadcast over x
template <typename T>
VarT<T> mul_scalar_var(VarT<T> x, VarT<T> s) {
  TapeT<T>& tp = *x.tape;
  if (s.value().numel() != 1)
    throw std::invalid_argument("mul_scalar_var: scalar operand must have 1 element");
  const T sv = s.value()[0];
  TensorT<T> out = x.value();
  for (auto& v : out.data) v *= sv;
  const int xid = x.id, sid = s.id, oid = tp.next_id();
  const bool tx = x.tracked(), ts = s.tracked();
  tp.add_node(std::move(out), tx || ts, [=](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    if (tx) {
      TensorT<T>& gx = t.grad(xid);
      const T s0 = t.val(sid)[0];
      for (int64_t i = 0; i < g.numel(); ++i) gx[i] += s0 * g[i];
    }
    if (ts) {
      TensorT<T>& gs = t.grad(sid);
      const TensorT<T>& xv = t.val(xid);
      T acc = T(0);
      for (int64_t i = 0; i < g.numel(); ++i) acc += g[i] * xv[i];
      gs[0] += acc;
    }
  });
  return {&tp, oid};
}

template <typename T>
VarT<T> square(VarT<T> a) {
  TapeT<T>& tp = *a.tape;
  TensorT<T> out = a.value();
  for (auto& v : out.data) v *= v;
  const int aid = a.id, oid = tp.next_id();
  tp.add_node(std::move(out), a.tracked(), [=](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    TensorT<T>& ga = t.grad(aid);
    const TensorT<T>& av = t.val(aid);
    for (int64_t i = 0; i < g.numel(); ++i) ga[i] += T(2) * av[i] * g[i];
  });
  return {&tp, oid};
}

template <typename T>
VarT<T> silu(VarT<T> a) {
  TapeT<T>& tp = *a.tape;
  TensorT<T> out = a.value();
  for (auto& v : out.data) v = v / (T(1) + std::exp(-v));
  const int aid = a.id, oid = tp.next_id();
  tp.add_node(std::move(out), a.tracked(), [=](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    TensorT<T>& ga = t.grad(aid);
    const TensorT<T>& av = t.val(aid);
    for (int64_t i = 0; i < g.numel(); ++i) {
      const T s = T(1) / (T(1) + std::exp(-av[i]));
      ga[i] += g[i] * s * (T(1) + av[i] * (T(1) - s));
    }
  });
  return {&tp, oid};
}

template <typename T>
VarT<T> softplus(VarT<T> a) {
  TapeT<T>& tp = *a.tape;
  TensorT<T> out = a.value();
  for (auto& v : out.data)
    v = v > T(0) ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
  const int aid = a.id, oid = tp.next_id();
  tp.add_node(std::move(out), a.tracked(), [=](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    TensorT<T>& ga = t.grad(aid);
    const TensorT<T>& av = t.val(aid);
    for (int64_t i = 0; i < g.numel(); ++i)
      ga[i] += g[i] / (T(1) + std::exp(-av[i]));
  });
  return {&tp, oid};
}

// --- reductions -------------------------------------------------------

template <typename T>
VarT<T> sum(VarT<T> a) {
  TapeT<T>& tp = *a.tape;
  T s = T(0);
  for (const T& v : a.value().data) s += v;
  const int aid = a.id, oid = tp.next_id();
  tp.add_node(TensorT<T>::scalar(s), a.tracked(), [=](TapeT<T>& t) {
    const T g = t.grad(oid)[0];
    TensorT<T>& ga = t.grad(aid);
    for (auto& v : ga.data) v += g;
  });
  return {&tp, oid};
}

template <typename T>
VarT<T> mean(VarT<T> a) {
  const int64_t n = a.value().numel();
  if (n == 0) throw std::invalid_argument("mean: empty tensor");
  return scale(sum(a), T(1) / static_cast<T>(n));
}

template <typename T>
VarT<T> sum_abs(VarT<T> a) {
  TapeT<T>& tp = *a.tape;
  T s = T(0);
  for (const T& v : a.value().data) s += std::abs(v);
  const int aid = a.id, oid = tp.next_id();
  tp.add_node(TensorT<T>::scalar(s), a.tracked(), [=](TapeT<T>& t) {
    const T g = t.grad(oid)[0];
    TensorT<T>& ga = t.grad(aid);
    const TensorT<T>& av = t.val(aid);
    for (int64_t i = 0; i < av.numel(); ++i) {
      if (av[i] > T(0))
        ga[i] += g;
      else if (av[i] < T(0))
        ga[i] -= g;
    }
  });
  return {&tp, oid};
}

template <typename T>
VarT<T> sum_sq(VarT<T> a) {
  return sum(square(a));
}

// --- structure ops on [rows, cols] ------------------------------------

template <typename T>
VarT<T> add_bias_rows(VarT<T> x, VarT<T> b) {
  TapeT<T>& tp = *x.tape;
  if (x.value().rank() != 2 || b.value().rank() != 1 ||
      b.value().numel() != x.value().dim(0))
    throw std::invalid_argument("add_bias_rows: expects [C,T] and [C]");
  const int64_t C = x.value().dim(0), W = x.value().dim(1);
  TensorT<T> out = x.value();
  for (int64_t c = 0; c < C; ++c)
    for (int64_t t = 0; t < W; ++t) out.at2(c, t) += b.value()[c];
  const int xid = x.id, bid = b.id, oid = tp.next_id();
  const bool tx = x.tracked(), tb = b.tracked();
  tp.add_node(std::move(out), tx || tb, [=](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    if (tx) {
      TensorT<T>& gx = t.grad(xid);
      for (int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
    }
    if (tb) {
      TensorT<T>& gb = t.grad(bid);
      for (int64_t c = 0; c < C; ++c) {
        T s = T(0);
        for (int64_t j = 0; j < W; ++j) s += g.at2(c, j);
        gb[c] += s;
      }
    }
  });
  return {&tp, oid};
}

template <typename T>
VarT<T> concat_rows(VarT<T> a, VarT<T> b) {
  TapeT<T>& tp = *a.tape;
  if (a.value().rank() != 2 || b.value().rank() != 2 ||
      a.value().dim(1) != b.value().dim(1))
    throw std::invalid_argument("concat_rows: column counts differ");
  const int64_t Ca = a.value().dim(0), Cb = b.value().dim(0), W = a.value().dim(1);
  TensorT<T> out({Ca + Cb, W});
  std::copy(a.value().data.begin(), a.value().data.end(), out.data.begin());
  std::copy(b.value().data.begin(), b.value().data.end(),
            out.data.begin() + static_cast<ptrdiff_t>(Ca * W));
  const int aid = a.id, bid = b.id, oid = tp.next_id();
  const bool ta = a.tracked(), tb = b.tracked();
  tp.add_node(std::move(out), ta || tb, [=](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    if (ta) {
      TensorT<T>& ga = t.grad(aid);
      for (int64_t i = 0; i < Ca * W; ++i) ga[i] += g[i];
    }
    if (tb) {
      TensorT<T>& gb = t.grad(bid);
      for (int64_t i = 0; i < Cb * W; ++i) gb[i] += g[Ca * W + i];
    }
  });
  return {&tp, oid};
}

// Zero-padding along the column axis.
template <typename T>
VarT<T> pad_cols(VarT<T> x, int64_t left, int64_t right) {
  TapeT<T>& tp = *x.tape;
  if (x.value().rank() != 2) throw std::invalid_argument("pad_cols: expects [C,T]");
  if (left < 0 || right < 0) throw std::invalid_argument("pad_cols: negative pad");
  const int64_t C = x.value().dim(0), W = x.value().dim(1);
  TensorT<T> out({C, W + left + right});
  for (int64_t c = 0; c < C; ++c)
    for (int64_t j = 0; j < W; ++j) out.at2(c, left + j) = x.value().at2(c, j);
  const int xid = x.id, oid = tp.next_id();
  tp.add_node(std::move(out), x.tracked(), [=](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    TensorT<T>& gx = t.grad(xid);
    for (int64_t c = 0; c < C; ++c)
      for (int64_t j = 0; j < W; ++j) gx.at2(c, j) += g.at2(c, left + j);
  });
  return {&tp, oid};
}

template <typename T>
VarT<T> crop_cols(VarT<T> x, int64_t start, int64_t len) {
  TapeT<T>& tp = *x.tape;
  if (x.value().rank() != 2) throw std::invalid_argument("crop_cols: expects [C,T]");
  if (start < 0 || len < 0 || start + len > x.value().dim(1))
    throw std::invalid_argument("crop_cols: range out of bounds");
  const int64_t C = x.value().dim(0);
  TensorT<T> out({C, len});
  for (int64_t c = 0; c < C; ++c)
    for (int64_t j = 0; j < len; ++j) out.at2(c, j) = x.value().at2(c, start + j);
  const int xid = x.id, oid = tp.next_id();
  tp.add_node(std::move(out), x.tracked(), [=](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    TensorT<T>& gx = t.grad(xid);
    for (int64_t c = 0; c < C; ++c)
      for (int64_t j = 0; j < len; ++j) gx.at2(c, start + j) += g.at2(c, j);
  });
  return {&tp, oid};
}

// Nearest-neighbor 2x upsample along columns.
template <typename T>
VarT<T> upsample2_cols(VarT<T> x) {
  TapeT<T>& tp = *x.tape;
  if (x.value().rank() != 2) throw std::invalid_argument("upsample2_cols: expects [C,T]");
  const int64_t C = x.value().dim(0), W = x.value().dim(1);
  TensorT<T> out({C, 2 * W});
  for (int64_t c = 0; c < C; ++c)
    for (int64_t j = 0; j < W; ++j) {
      const T v = x.value().at2(c, j);
      out.at2(c, 2 * j) = v;
      out.at2(c, 2 * j + 1) = v;
    }
  const int xid = x.id, oid = tp.next_id();
  tp.add_node(std::move(out), x.tracked(), [=](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    TensorT<T>& gx = t.grad(xid);
    for (int64_t c = 0; c < C; ++c)
      for (int64_t j = 0; j < W; ++j)
        gx.at2(c, j) += g.at2(c, 2 * j) + g.at2(c, 2 * j + 1);
  });
  return {&tp, oid};
}

template <typename T>
VarT<T> reshape(VarT<T> x, std::vector<int64_t> shape) {
  TapeT<T>& tp = *x.tape;
  if (TensorT<T>::numel_of(shape) != x.value().numel())
    throw std::invalid_argument("reshape: element count mismatch");
  TensorT<T> out(std::move(shape), x.value().data);
  const int xid = x.id, oid = tp.next_id();
  tp.add_node(std::move(out), x.tracked(), [=](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    TensorT<T>& gx = t.grad(xid);
    for (int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
  });
  return {&tp, oid};
}

// --- linear algebra ----------------------------------------------------

// y = W x + b with W [m,n], x [n], b [m]
template <typename T>
VarT<T> linear(VarT<T> W, VarT<T> x, VarT<T> b) {
  TapeT<T>& tp = *W.tape;
  if (W.value().rank() != 2 || x.value().rank() != 1 || b.value().rank() != 1)
    throw std::invalid_argument("linear: expects W[m,n], x[n], b[m]");
  const int64_t m = W.value().dim(0), n = W.value().dim(1);
  if (x.value().numel() != n || b.value().numel() != m)
    throw std::invalid_argument("linear: shape mismatch");
  TensorT<T> out({m});
  for (int64_t i = 0; i < m; ++i) {
    T acc = b.value()[i];
    const T* wr = W.value().data.data() + i * n;
    for (int64_t j = 0; j < n; ++j) acc += wr[j] * x.value()[j];
    out[i] = acc;
  }
  const int wid = W.id, xid = x.id, bid = b.id, oid = tp.next_id();
  const bool tw = W.tracked(), tx = x.tracked(), tb = b.tracked();
  tp.add_node(std::move(out), tw || tx || tb, [=](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    if (tw) {
      TensorT<T>& gW = t.grad(wid);
      const TensorT<T>& xv = t.val(xid);
      for (int64_t i = 0; i < m; ++i) {
        T* gr = gW.data.data() + i * n;
        const T gi = g[i];
        for (int64_t j = 0; j < n; ++j) gr[j] += gi * xv[j];
      }
    }
    if (tx) {
      TensorT<T>& gx = t.grad(xid);
      const TensorT<T>& Wv = t.val(wid);
      for (int64_t i = 0; i < m; ++i) {
        const T* wr = Wv.data.data() + i * n;
        const T gi = g[i];
        for (int64_t j = 0; j < n; ++j) gx[j] += gi * wr[j];
      }
    }
    if (tb) {
      TensorT<T>& gb = t.grad(bid);
      for (int64_t i = 0; i < m; ++i) gb[i] += g[i];
    }
  });
  return {&tp, oid};
}

// Y = M X with a fixed (non-differentiated) matrix M [r,f], X [f,t]
template <typename T>
VarT<T> matmul_const(const TensorT<T>& M, VarT<T> X) {
  TapeT<T>& tp = *X.tape;
  if (M.rank() != 2 || X.value().rank() != 2 || M.dim(1) != X.value().dim(0))
    throw std::invalid_argument("matmul_const: shape mismatch");
  const int64_t R = M.dim(0), F = M.dim(1), W = X.value().dim(1);
  TensorT<T> out({R, W});
  for (int64_t r = 0; r < R; ++r)
    for (int64_t f = 0; f < F; ++f) {
      const T mv = M.at2(r, f);
      if (mv == T(0)) continue;
      const T* xr = X.value().data.data() + f * W;
      T* orow = out.data.data() + r * W;
      for (int64_t t = 0; t < W; ++t) orow[t] += mv * xr[t];
    }
  const int xid = X.id, oid = tp.next_id();
  // M is captured by value; filterbanks are small
  tp.add_node(std::move(out), X.tracked(), [=, Mc = M](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    TensorT<T>& gx = t.grad(xid);
    for (int64_t r = 0; r < R; ++r)
      for (int64_t f = 0; f < F; ++f) {
        const T mv = Mc.at2(r, f);
        if (mv == T(0)) continue;
        const T* grow = g.data.data() + r * W;
        T* gxr = gx.data.data() + f * W;
        for (int64_t w = 0; w < W; ++w) gxr[w] += mv * grow[w];
      }
  });
  return {&tp, oid};
}

// --- convolution --------------------------------------------------------

namespace conv_detail {

// valid output range [t0, t1) for which t*stride + off lands inside [0, Tin)
inline void valid_range(int64_t off, int stride, int64_t Tin, int64_t Tout,
                        int64_t& t0, int64_t& t1) {
  t0 = off >= 0 ? 0 : (-off + stride - 1) / stride;
  const int64_t last = Tin - 1 - off;
  t1 = last < 0 ? 0 : std::min<int64_t>(Tout, last / stride + 1);
  if (t1 < t0) t1 = t0;
}

}  // namespace conv_detail

// out[o, t] = b[o] + sum_{c,k} W[o,c,k] x[c, t*stride + k - pad]
template <typename T>
VarT<T> conv1d(VarT<T> x, VarT<T> W, VarT<T> b, int stride, int pad) {
  TapeT<T>& tp = *x.tape;
  if (x.value().rank() != 2 || W.value().rank() != 3 || b.value().rank() != 1)
    throw std::invalid_argument("conv1d: expects x[C,T], W[O,C,K], b[O]");
  const int64_t C = x.value().dim(0), Tin = x.value().dim(1);
  const int64_t O = W.value().dim(0), K = W.value().dim(2);
  if (W.value().dim(1) != C || b.value().numel() != O)
    throw std::invalid_argument("conv1d: channel mismatch");
  if (stride < 1) throw std::invalid_argument("conv1d: stride must be >= 1");
  const int64_t Tout = (Tin + 2 * pad - K) / stride + 1;
  if (Tout < 1) throw std::invalid_argument("conv1d: input too short");

  // per-tap valid output ranges are shared by every (o, c) pair
  std::vector<int64_t> k_t0(static_cast<size_t>(K)), k_t1(static_cast<size_t>(K));
  for (int64_t k = 0; k < K; ++k)
    conv_detail::valid_range(k - pad, stride, Tin, Tout, k_t0[static_cast<size_t>(k)],
                             k_t1[static_cast<size_t>(k)]);

  TensorT<T> out({O, Tout});
  {
    const T* xd = x.value().data.data();
    const T* wd = W.value().data.data();
    T* od = out.data.data();
    for (int64_t o = 0; o < O; ++o) {
      const T bo = b.value()[o];
      T* orow = od + o * Tout;
      for (int64_t t = 0; t < Tout; ++t) orow[t] = bo;
      for (int64_t c = 0; c < C; ++c) {
        const T* xr = xd + c * Tin;
        for (int64_t k = 0; k < K; ++k) {
          const T wv = wd[(o * C + c) * K + k];
          if (wv == T(0)) continue;
          const int64_t off = k - pad;
          const int64_t t0 = k_t0[static_cast<size_t>(k)], t1 = k_t1[static_cast<size_t>(k)];
          const T* src = xr + t0 * stride + off;
          if (stride == 1) {
            for (int64_t t = t0; t < t1; ++t) orow[t] += wv * src[t - t0];
          } else {
            for (int64_t t = t0; t < t1; ++t) orow[t] += wv * src[(t - t0) * stride];
          }
        }
      }
    }
  }

  const int xid = x.id, wid = W.id, bid = b.id, oid = tp.next_id();
  const bool tx = x.tracked(), tw = W.tracked(), tb = b.tracked();
  tp.add_node(std::move(out), tx || tw || tb, [=](TapeT<T>& t) {
    std::vector<int64_t> k_t0(static_cast<size_t>(K)), k_t1(static_cast<size_t>(K));
    for (int64_t k = 0; k < K; ++k)
      conv_detail::valid_range(k - pad, stride, Tin, Tout,
                               k_t0[static_cast<size_t>(k)],
                               k_t1[static_cast<size_t>(k)]);
    const TensorT<T>& g = t.grad(oid);
    const T* gd = g.data.data();
    if (tb) {
      TensorT<T>& gb = t.grad(bid);
      for (int64_t o = 0; o < O; ++o) {
        T s = T(0);
        const T* grow = gd + o * Tout;
        for (int64_t j = 0; j < Tout; ++j) s += grow[j];
        gb[o] += s;
      }
    }
    if (tw) {
      TensorT<T>& gW = t.grad(wid);
      const TensorT<T>& xv = t.val(xid);
      const T* xd = xv.data.data();
      for (int64_t o = 0; o < O; ++o) {
        const T* grow = gd + o * Tout;
        for (int64_t c = 0; c < C; ++c) {
          const T* xr = xd + c * Tin;
          for (int64_t k = 0; k < K; ++k) {
            const int64_t off = k - pad;
            const int64_t t0 = k_t0[static_cast<size_t>(k)], t1 = k_t1[static_cast<size_t>(k)];
            const T* src = xr + t0 * stride + off;
            T s = T(0);
            if (stride == 1) {
              for (int64_t j = t0; j < t1; ++j) s += grow[j] * src[j - t0];
            } else {
              for (int64_t j = t0; j < t1; ++j) s += grow[j] * src[(j - t0) * stride];
            }
            gW[(o * C + c) * K + k] += s;
          }
        }
      }
    }
    if (tx) {
      TensorT<T>& gx = t.grad(xid);
      const TensorT<T>& Wv = t.val(wid);
      const T* wd = Wv.data.data();
      for (int64_t o = 0; o < O; ++o) {
        const T* grow = gd + o * Tout;
        for (int64_t c = 0; c < C; ++c) {
          T* gxr = gx.data.data() + c * Tin;
          for (int64_t k = 0; k < K; ++k) {
            const T wv = wd[(o * C + c) * K + k];
            if (wv == T(0)) continue;
            const int64_t off = k - pad;
            const int64_t t0 = k_t0[static_cast<size_t>(k)], t1 = k_t1[static_cast<size_t>(k)];
            T* dst = gxr + t0 * stride + off;
            if (stride == 1) {
              for (int64_t j = t0; j < t1; ++j) dst[j - t0] += wv * grow[j];
            } else {
              for (int64_t j = t0; j < t1; ++j) dst[(j - t0) * stride] += wv * grow[j];
            }
          }
        }
      }
    }
  });
  return {&tp, oid};
}

// --- complex-spectrogram ops (rows [0,F) real, [F,2F) imaginary) --------

// Magnitude-power compression with phase preserved:
//   m = sqrt(re^2 + im^2 + eps), out = scale * m^(beta-1) * (re, im)
template <typename T>
VarT<T> compress_complex(VarT<T> S, T beta, T scl, T eps) {
  TapeT<T>& tp = *S.tape;
  if (S.value().rank() != 2 || S.value().dim(0) % 2 != 0)
    throw std::invalid_argument("compress_complex: expects [2F, T]");
  const int64_t F = S.value().dim(0) / 2, W = S.value().dim(1);
  TensorT<T> out({2 * F, W});
  for (int64_t j = 0; j < F; ++j)
    for (int64_t f = 0; f < W; ++f) {
      const T re = S.value().at2(j, f), im = S.value().at2(F + j, f);
      const T m = std::sqrt(re * re + im * im + eps);
      const T fac = scl * std::pow(m, beta - T(1));
      out.at2(j, f) = fac * re;
      out.at2(F + j, f) = fac * im;
    }
  const int sid = S.id, oid = tp.next_id();
  tp.add_node(std::move(out), S.tracked(), [=](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    TensorT<T>& gs = t.grad(sid);
    const TensorT<T>& sv = t.val(sid);
    for (int64_t j = 0; j < F; ++j)
      for (int64_t f = 0; f < W; ++f) {
        const T re = sv.at2(j, f), im = sv.at2(F + j, f);
        const T m2 = re * re + im * im + eps;
        const T m = std::sqrt(m2);
        const T fac = scl * std::pow(m, beta - T(1));
        const T h = fac * (beta - T(1)) / m2;  // scl*(beta-1)*m^(beta-3)
        const T gre = g.at2(j, f), gim = g.at2(F + j, f);
        const T dot = gre * re + gim * im;
        gs.at2(j, f) += gre * fac + h * re * dot;
        gs.at2(F + j, f) += gim * fac + h * im * dot;
      }
  });
  return {&tp, oid};
}

// m = sqrt(re^2 + im^2 + eps), [2F,T] -> [F,T]
template <typename T>
VarT<T> complex_magnitude(VarT<T> S, T eps) {
  TapeT<T>& tp = *S.tape;
  if (S.value().rank() != 2 || S.value().dim(0) % 2 != 0)
    throw std::invalid_argument("complex_magnitude: expects [2F, T]");
  const int64_t F = S.value().dim(0) / 2, W = S.value().dim(1);
  TensorT<T> out({F, W});
  for (int64_t j = 0; j < F; ++j)
    for (int64_t f = 0; f < W; ++f) {
      const T re = S.value().at2(j, f), im = S.value().at2(F + j, f);
      out.at2(j, f) = std::sqrt(re * re + im * im + eps);
    }
  const int sid = S.id, oid = tp.next_id();
  tp.add_node(std::move(out), S.tracked(), [=](TapeT<T>& t) {
    const TensorT<T>& g = t.grad(oid);
    TensorT<T>& gs = t.grad(sid);
    const TensorT<T>& sv = t.val(sid);
    const TensorT<T>& ov = t.val(oid);
    for (int64_t j = 0; j < F; ++j)
      for (int64_t f = 0; f < W; ++f) {
        const T m = ov.at2(j, f);
        const T gm = g.at2(j, f) / m;
        gs.at2(j, f) += gm * sv.at2(j, f);
        gs.at2(F + j, f) += gm * sv.at2(F + j, f);
      }
  });
  return {&tp, oid};
}

}  // namespace ops

}  // namespace sbf
