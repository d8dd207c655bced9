/* Copyright 2026 The atraj Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ATRAJ_OPS_HPP_
#define ATRAJ_OPS_HPP_

// Differentiable primitives over Var handles. Each function computes its
// forward value eagerly with Eigen and records the adjoint rule on the
// operand graph.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "atraj/graph.hpp"

namespace atraj {

enum class Mode { kTrain, kEval };

/// Additive logit for masked attention keys. exp() of it underflows to an
/// exact zero in both float and double.
inline constexpr double kMaskLogit = -1e9;

/// Uniform draw in [0, 1) from the top 53 bits of a 64-bit engine; used
/// instead of std::uniform_real_distribution so masks are reproducible
/// across standard libraries.
inline double uniform01(std::mt19937_64 &rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

namespace detail {

template <typename S>
Graph<S> &graph_of(const Var<S> &a, const Var<S> &b) {
  if (a.graph != b.graph || a.graph == nullptr) {
    throw ContractError("operands belong to different graphs");
  }
  return *a.graph;
}

inline void require_same_shape(const char *op, const Shape &a, const Shape &b) {
  if (a != b) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) +
                         " vs " + shape_str(b));
  }
}

template <typename S>
Eigen::Map<const RowMatrix<S>> cmat(const S *p, std::size_t r, std::size_t c) {
  return {p, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)};
}

template <typename S>
Eigen::Map<RowMatrix<S>> mmat(S *p, std::size_t r, std::size_t c) {
  return {p, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)};
}

template <typename M>
auto flat(const M &m) {
  using S = typename M::Scalar;
  return Eigen::Map<const Vector<S>>(m.data(), m.size());
}

} // namespace detail

// --- linear algebra ---------------------------------------------------------

/// Batched matrix product over the last two axes. Leading extents must be
/// equal, or one operand's leading extents must all be 1 (broadcast).
template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
  Graph<S> &g = detail::graph_of(a, b);
  const Tensor<S> &A = a.value();
  const Tensor<S> &B = b.value();
  const std::string shapes = shape_str(A.shape()) + " x " + shape_str(B.shape());
  if (A.rank() < 2 || B.rank() < 2) {
    throw DimensionError("matmul needs rank >= 2: " + shapes);
  }
  const std::size_t p = A.extent(-2), q = A.extent(-1);
  const std::size_t r = B.extent(-1);
  if (B.extent(-2) != q) throw DimensionError("matmul: " + shapes);

  const Shape lead_a(A.shape().begin(), A.shape().end() - 2);
  const Shape lead_b(B.shape().begin(), B.shape().end() - 2);
  const std::size_t na = numel(lead_a), nb = numel(lead_b);
  enum class Bcast { kNone, kA, kB };
  Bcast mode;
  Shape out_shape;
  if (nb == 1) {
    mode = Bcast::kB;
    out_shape = lead_a.size() >= lead_b.size() ? lead_a : lead_b;
  } else if (lead_a == lead_b) {
    mode = Bcast::kNone;
    out_shape = lead_a;
  } else if (na == 1) {
    mode = Bcast::kA;
    out_shape = lead_b;
  } else {
    throw DimensionError("matmul batch extents incompatible: " + shapes);
  }
  const std::size_t batches = std::max(na, nb);
  out_shape.push_back(p);
  out_shape.push_back(r);

  Tensor<S> C(out_shape);
  if (mode == Bcast::kB) {
    C.matrix(na * p, r).noalias() = A.matrix(na * p, q) * B.matrix(q, r);
  } else {
    for (std::size_t k = 0; k < batches; ++k) {
      const S *ak = A.data() + (mode == Bcast::kA ? 0 : k * p * q);
      detail::mmat(C.data() + k * p * r, p, r).noalias() =
          detail::cmat(ak, p, q) * detail::cmat(B.data() + k * q * r, q, r);
    }
  }

  return g.record("matmul", std::move(C), {a, b},
                  [=](Graph<S> &g, const Vector<S> &dout) {
    const Tensor<S> &A = a.value();
    const Tensor<S> &B = b.value();
    if (mode == Bcast::kB) {
      auto dC = detail::cmat(dout.data(), na * p, r);
      if (g.needs_grad(a)) {
        RowMatrix<S> dA = dC * B.matrix(q, r).transpose();
        g.accumulate(a, detail::flat(dA));
      }
      if (g.needs_grad(b)) {
        RowMatrix<S> dB = A.matrix(na * p, q).transpose() * dC;
        g.accumulate(b, detail::flat(dB));
      }
      return;
    }
    Vector<S> dA = Vector<S>::Zero(A.values().size());
    Vector<S> dB = Vector<S>::Zero(B.values().size());
    for (std::size_t k = 0; k < batches; ++k) {
      const std::size_t ao = mode == Bcast::kA ? 0 : k * p * q;
      auto dC = detail::cmat(dout.data() + k * p * r, p, r);
      detail::mmat(dA.data() + ao, p, q).noalias() +=
          dC * detail::cmat(B.data() + k * q * r, q, r).transpose();
      detail::mmat(dB.data() + k * q * r, q, r).noalias() +=
          detail::cmat(A.data() + ao, p, q).transpose() * dC;
    }
    g.accumulate(a, dA);
    g.accumulate(b, dB);
  });
}

/// Swaps the last two axes.
template <typename S>
Var<S> transpose(Var<S> x) {
  const Tensor<S> &X = x.value();
  if (X.rank() < 2) throw DimensionError("transpose needs rank >= 2");
  const std::size_t p = X.extent(-2), q = X.extent(-1);
  const std::size_t batches = X.size() / (p * q);
  Shape shape = X.shape();
  std::swap(shape[shape.size() - 1], shape[shape.size() - 2]);
  Tensor<S> Y(shape);
  for (std::size_t k = 0; k < batches; ++k) {
    detail::mmat(Y.data() + k * p * q, q, p) =
        detail::cmat(X.data() + k * p * q, p, q).transpose();
  }
  return x.graph->record("transpose", std::move(Y), {x},
                         [=](Graph<S> &g, const Vector<S> &dout) {
    Vector<S> dx(dout.size());
    for (std::size_t k = 0; k < batches; ++k) {
      detail::mmat(dx.data() + k * p * q, p, q) =
          detail::cmat(dout.data() + k * p * q, q, p).transpose();
    }
    g.accumulate(x, dx);
  });
}

/// x W + b applied to every row of the last axis.
template <typename S>
Var<S> affine(Var<S> x, Var<S> w, Var<S> b) {
  Graph<S> &g = detail::graph_of(x, w);
  const Tensor<S> &X = x.value();
  const Tensor<S> &W = w.value();
  const Tensor<S> &Bv = b.value();
  if (W.rank() != 2 || X.rank() < 1 || X.extent(-1) != W.extent(0) ||
      Bv.size() != W.extent(1)) {
    throw DimensionError("affine: x " + shape_str(X.shape()) + ", W " +
                         shape_str(W.shape()) + ", b " + shape_str(Bv.shape()));
  }
  const std::size_t n_in = W.extent(0), n_out = W.extent(1);
  const std::size_t rows = X.size() / n_in;
  Shape shape = X.shape();
  shape.back() = n_out;
  Tensor<S> Y(shape);
  auto Ym = Y.matrix(rows, n_out);
  Ym.noalias() = X.matrix(rows, n_in) * W.matrix(n_in, n_out);
  Ym.rowwise() += Bv.values().transpose();
  return g.record("affine", std::move(Y), {x, w, b},
                  [=](Graph<S> &g, const Vector<S> &dout) {
    auto dY = detail::cmat(dout.data(), rows, n_out);
    if (g.needs_grad(x)) {
      RowMatrix<S> dX = dY * w.value().matrix(n_in, n_out).transpose();
      g.accumulate(x, detail::flat(dX));
    }
    if (g.needs_grad(w)) {
      RowMatrix<S> dW = x.value().matrix(rows, n_in).transpose() * dY;
      g.accumulate(w, detail::flat(dW));
    }
    if (g.needs_grad(b)) {
      Vector<S> db = dY.colwise().sum().transpose();
      g.accumulate(b, db);
    }
  });
}

// --- normalization ----------------------------------------------------------

/// Numerically stable softmax along `axis`. Entries carrying the mask logit
/// come out as exact zeros; a slice whose entries are all masked raises
/// DegenerateError.
template <typename S>
Var<S> softmax(Var<S> x, int axis = -1) {
  const Tensor<S> &X = x.value();
  const std::size_t ax = Tensor<S>::normalize_axis(axis, X.rank());
  const std::size_t n = X.shape()[ax];
  std::size_t inner = 1;
  for (std::size_t i = ax + 1; i < X.rank(); ++i) inner *= X.shape()[i];
  const std::size_t outer = X.size() / (n * inner);
  const S degenerate = static_cast<S>(kMaskLogit / 2);

  Tensor<S> Y(X.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * n * inner + i;
      S mx = X[base];
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, X[base + j * inner]);
      if (mx <= degenerate) {
        throw DegenerateError("softmax: every entry of slice " +
                              std::to_string(o * inner + i) + " is masked");
      }
      S total = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const S e = std::exp(X[base + j * inner] - mx);
        Y[base + j * inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < n; ++j) Y[base + j * inner] /= total;
    }
  }
  Graph<S> *graph = x.graph;
  const std::size_t out_id = graph->size();
  return graph->record("softmax", std::move(Y), {x},
                       [=](Graph<S> &g, const Vector<S> &dout) {
    const Tensor<S> &Y = g.value(out_id);
    Vector<S> dx(dout.size());
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < inner; ++i) {
        const std::size_t base = o * n * inner + i;
        S dot = 0;
        for (std::size_t j = 0; j < n; ++j) {
          dot += dout[base + j * inner] * Y[base + j * inner];
        }
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t k = base + j * inner;
          dx[k] = Y[k] * (dout[k] - dot);
        }
      }
    }
    g.accumulate(x, dx);
  });
}

/// Normalizes each last-axis slice to zero mean and unit variance
/// (variance + epsilon in the denominator), then applies gain and bias.
template <typename S>
Var<S> layer_norm(Var<S> x, Var<S> gain, Var<S> bias, double epsilon) {
  Graph<S> &g = detail::graph_of(x, gain);
  const Tensor<S> &X = x.value();
  const std::size_t d = X.extent(-1);
  if (gain.value().size() != d || bias.value().size() != d) {
    throw DimensionError("layer_norm: x " + shape_str(X.shape()) + ", gain " +
                         shape_str(gain.value().shape()) + ", bias " +
                         shape_str(bias.value().shape()));
  }
  using Arr = Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Col = Eigen::Array<S, Eigen::Dynamic, 1>;
  const std::size_t rows = X.size() / d;
  const auto Xa = X.matrix(rows, d).array();
  const Col mean = Xa.rowwise().mean();
  Arr centered = Xa.colwise() - mean;
  const Col var = centered.square().rowwise().mean();
  const Col inv = (var + static_cast<S>(epsilon)).rsqrt();
  Arr xhat = centered.colwise() * inv;

  Tensor<S> Y(X.shape());
  Y.matrix(rows, d).array() =
      (xhat.rowwise() * gain.value().values().array().transpose()).rowwise() +
      bias.value().values().array().transpose();

  return g.record("layer_norm", std::move(Y), {x, gain, bias},
                  [=, xhat = std::move(xhat)](Graph<S> &g,
                                              const Vector<S> &dout) {
    const auto dY = detail::cmat(dout.data(), rows, d).array();
    if (g.needs_grad(x)) {
      const Arr dxhat = dY.rowwise() * gain.value().values().array().transpose();
      const Col s1 = dxhat.rowwise().sum();
      const Col s2 = (dxhat * xhat).rowwise().sum();
      Arr dx = ((dxhat * static_cast<S>(d)).colwise() - s1 -
                xhat.colwise() * s2)
                   .colwise() *
               (inv / static_cast<S>(d));
      g.accumulate(x, detail::flat(dx));
    }
    if (g.needs_grad(gain)) {
      Vector<S> dg = (dY * xhat).colwise().sum().transpose().matrix();
      g.accumulate(gain, dg);
    }
    if (g.needs_grad(bias)) {
      Vector<S> db = dY.colwise().sum().transpose().matrix();
      g.accumulate(bias, db);
    }
  });
}

/// Inverted dropout: in train mode each entry is zeroed with probability
/// `p_drop` and survivors are scaled by 1/(1 - p_drop); eval mode is the
/// identity and returns `x` itself.
template <typename S>
Var<S> dropout(Var<S> x, double p_drop, Mode mode, std::mt19937_64 *rng) {
  if (!(p_drop >= 0.0 && p_drop < 1.0)) {
    throw ParameterError("dropout probability " + std::to_string(p_drop) +
                         " outside [0, 1)");
  }
  if (mode == Mode::kEval || p_drop == 0.0) return x;
  if (rng == nullptr) throw ContractError("train-mode dropout needs an rng");
  const Tensor<S> &X = x.value();
  const S keep = static_cast<S>(1.0 / (1.0 - p_drop));
  Vector<S> mask(X.values().size());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask[i] = uniform01(*rng) >= p_drop ? keep : S(0);
  }
  Tensor<S> Y(X.shape(), X.values().cwiseProduct(mask).eval());
  return x.graph->record("dropout", std::move(Y), {x},
                         [=, mask = std::move(mask)](Graph<S> &g,
                                                     const Vector<S> &dout) {
    g.accumulate(x, dout.cwiseProduct(mask));
  });
}

// --- structure --------------------------------------------------------------

template <typename S>
Var<S> concat(const std::vector<Var<S>> &parts, int axis = -1) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  Graph<S> *graph = parts.front().graph;
  const Shape &first = parts.front().shape();
  const std::size_t ax = Tensor<S>::normalize_axis(axis, first.size());
  std::size_t outer = 1, tail = 1;
  for (std::size_t i = 0; i < ax; ++i) outer *= first[i];
  for (std::size_t i = ax + 1; i < first.size(); ++i) tail *= first[i];

  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto &v : parts) {
    const Shape &s = v.shape();
    bool ok = s.size() == first.size() && v.graph == graph;
    for (std::size_t i = 0; ok && i < s.size(); ++i) {
      ok = i == ax || s[i] == first[i];
    }
    if (!ok) {
      throw DimensionError("concat: " + shape_str(first) + " vs " + shape_str(s));
    }
    widths.push_back(s[ax] * tail);
    total += s[ax];
  }
  Shape shape = first;
  shape[ax] = total;
  const std::size_t row = total * tail;
  Tensor<S> Y(shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    detail::mmat(Y.data(), outer, row).middleCols(offset, widths[k]) =
        parts[k].value().matrix(outer, widths[k]);
    offset += widths[k];
  }
  return graph->record("concat", std::move(Y), parts,
                       [=](Graph<S> &g, const Vector<S> &dout) {
    std::size_t off = 0;
    auto dY = detail::cmat(dout.data(), outer, row);
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (g.needs_grad(parts[k])) {
        RowMatrix<S> piece = dY.middleCols(off, widths[k]);
        g.accumulate(parts[k], detail::flat(piece));
      }
      off += widths[k];
    }
  });
}

/// Contiguous range [begin, begin + count) of the last axis.
template <typename S>
Var<S> slice_last(Var<S> x, std::size_t begin, std::size_t count) {
  const Tensor<S> &X = x.value();
  const std::size_t d = X.extent(-1);
  if (count == 0 || begin + count > d) {
    throw DimensionError("slice [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") of " +
                         shape_str(X.shape()));
  }
  const std::size_t rows = X.size() / d;
  Shape shape = X.shape();
  shape.back() = count;
  Tensor<S> Y(shape);
  Y.matrix(rows, count) = X.matrix(rows, d).middleCols(begin, count);
  return x.graph->record("slice", std::move(Y), {x},
                         [=](Graph<S> &g, const Vector<S> &dout) {
    Vector<S> dx = Vector<S>::Zero(static_cast<Eigen::Index>(rows * d));
    detail::mmat(dx.data(), rows, d).middleCols(begin, count) =
        detail::cmat(dout.data(), rows, count);
    g.accumulate(x, dx);
  });
}

template <typename S>
Var<S> reshape(Var<S> x, Shape shape) {
  Tensor<S> Y = x.value();
  Y.reshape(std::move(shape));
  return x.graph->record("reshape", std::move(Y), {x},
                         [=](Graph<S> &g, const Vector<S> &dout) {
    g.accumulate(x, dout);
  });
}

// --- elementwise ------------------------------------------------------------

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
  Graph<S> &g = detail::graph_of(a, b);
  detail::require_same_shape("add", a.shape(), b.shape());
  Tensor<S> Y(a.shape(), (a.value().values() + b.value().values()).eval());
  return g.record("add", std::move(Y), {a, b},
                  [=](Graph<S> &g, const Vector<S> &dout) {
    g.accumulate(a, dout);
    g.accumulate(b, dout);
  });
}

template <typename S>
Var<S> sub(Var<S> a, Var<S> b) {
  Graph<S> &g = detail::graph_of(a, b);
  detail::require_same_shape("sub", a.shape(), b.shape());
  Tensor<S> Y(a.shape(), (a.value().values() - b.value().values()).eval());
  return g.record("sub", std::move(Y), {a, b},
                  [=](Graph<S> &g, const Vector<S> &dout) {
    g.accumulate(a, dout);
    g.accumulate(b, -dout);
  });
}

template <typename S>
Var<S> mul(Var<S> a, Var<S> b) {
  Graph<S> &g = detail::graph_of(a, b);
  detail::require_same_shape("mul", a.shape(), b.shape());
  Tensor<S> Y(a.shape(), a.value().values().cwiseProduct(b.value().values()).eval());
  return g.record("mul", std::move(Y), {a, b},
                  [=](Graph<S> &g, const Vector<S> &dout) {
    g.accumulate(a, dout.cwiseProduct(b.value().values()));
    g.accumulate(b, dout.cwiseProduct(a.value().values()));
  });
}

template <typename S>
Var<S> div(Var<S> a, Var<S> b) {
  Graph<S> &g = detail::graph_of(a, b);
  detail::require_same_shape("div", a.shape(), b.shape());
  Tensor<S> Y(a.shape(), a.value().values().cwiseQuotient(b.value().values()).eval());
  const std::size_t out_id = g.size();
  return g.record("div", std::move(Y), {a, b},
                  [=](Graph<S> &g, const Vector<S> &dout) {
    const Vector<S> &bv = b.value().values();
    const Vector<S> da = dout.cwiseQuotient(bv);
    g.accumulate(a, da);
    g.accumulate(b, -da.cwiseProduct(g.value(out_id).values()));
  });
}

template <typename S>
Var<S> scale(Var<S> x, double c) {
  const S k = static_cast<S>(c);
  Tensor<S> Y(x.shape(), (x.value().values() * k).eval());
  return x.graph->record("scale", std::move(Y), {x},
                         [=](Graph<S> &g, const Vector<S> &dout) {
    g.accumulate(x, dout * k);
  });
}

template <typename S>
Var<S> add_scalar(Var<S> x, double c) {
  const S k = static_cast<S>(c);
  Tensor<S> Y(x.shape(), (x.value().values().array() + k).matrix().eval());
  return x.graph->record("add_scalar", std::move(Y), {x},
                         [=](Graph<S> &g, const Vector<S> &dout) {
    g.accumulate(x, dout);
  });
}

template <typename S>
Var<S> log(Var<S> x) {
  const Vector<S> &v = x.value().values();
  if ((v.array() <= S(0)).any()) {
    throw NumericError("log of a non-positive value");
  }
  Tensor<S> Y(x.shape(), v.array().log().matrix().eval());
  return x.graph->record("log", std::move(Y), {x},
                         [=](Graph<S> &g, const Vector<S> &dout) {
    g.accumulate(x, dout.cwiseQuotient(x.value().values()));
  });
}

/// Square root with the zero-subgradient convention at 0.
template <typename S>
Var<S> sqrt(Var<S> x) {
  const Vector<S> &v = x.value().values();
  if ((v.array() < S(0)).any()) throw NumericError("sqrt of a negative value");
  Tensor<S> Y(x.shape(), v.array().sqrt().matrix().eval());
  const std::size_t out_id = x.graph->size();
  return x.graph->record("sqrt", std::move(Y), {x},
                         [=](Graph<S> &g, const Vector<S> &dout) {
    const Vector<S> &y = g.value(out_id).values();
    Vector<S> dx(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      dx[i] = y[i] > S(0) ? dout[i] / (S(2) * y[i]) : S(0);
    }
    g.accumulate(x, dx);
  });
}

template <typename S>
S softplus_value(S x) {
  return x > S(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename S>
Var<S> softplus(Var<S> x) {
  const Vector<S> &v = x.value().values();
  Tensor<S> Y(x.shape(), v.unaryExpr([](S t) { return softplus_value(t); }).eval());
  return x.graph->record("softplus", std::move(Y), {x},
                         [=](Graph<S> &g, const Vector<S> &dout) {
    const Vector<S> sig = x.value().values().unaryExpr(
        [](S t) { return S(1) / (S(1) + std::exp(-t)); });
    g.accumulate(x, dout.cwiseProduct(sig));
  });
}

// --- reductions -------------------------------------------------------------

template <typename S>
Var<S> sum(Var<S> x) {
  const std::size_t n = x.value().size();
  Tensor<S> Y = Tensor<S>::scalar(x.value().values().sum());
  return x.graph->record("sum", std::move(Y), {x},
                         [=](Graph<S> &g, const Vector<S> &dout) {
    g.accumulate(x, Vector<S>::Constant(static_cast<Eigen::Index>(n), dout[0]));
  });
}

/// Sum over the last axis; the result drops that axis.
template <typename S>
Var<S> sum_last(Var<S> x) {
  const Tensor<S> &X = x.value();
  if (X.rank() < 2) return sum(x);
  const std::size_t d = X.extent(-1), rows = X.size() / d;
  Shape shape(X.shape().begin(), X.shape().end() - 1);
  Tensor<S> Y(shape, X.matrix(rows, d).rowwise().sum().eval());
  return x.graph->record("sum_last", std::move(Y), {x},
                         [=](Graph<S> &g, const Vector<S> &dout) {
    RowMatrix<S> dx = dout.replicate(1, static_cast<Eigen::Index>(d));
    g.accumulate(x, detail::flat(dx));
  });
}

/// sum(x * w) with a constant weight tensor.
template <typename S>
Var<S> weighted_sum(Var<S> x, Tensor<S> weights) {
  detail::require_same_shape("weighted_sum", x.shape(), weights.shape());
  Tensor<S> Y = Tensor<S>::scalar(x.value().values().dot(weights.values()));
  return x.graph->record("weighted_sum", std::move(Y), {x},
                         [=, w = std::move(weights)](Graph<S> &g,
                                                     const Vector<S> &dout) {
    g.accumulate(x, w.values() * dout[0]);
  });
}

} // namespace atraj

#endif // ATRAJ_OPS_HPP_
