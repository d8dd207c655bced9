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

#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "atraj/attention.hpp"
#include "atraj/grad_check.hpp"
#include "test_util.hpp"

namespace atraj {
namespace {

using testing::random_tensor;
using G = Graph<double>;
using V = Var<double>;
using T = Tensor<double>;

KeyMask random_mask(std::size_t batch, std::size_t n, std::mt19937_64 &rng) {
  KeyMask m{batch, n, std::vector<std::uint8_t>(batch * n)};
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t k = 0; k < n; ++k) m.valid[b * n + k] = (rng() % 3) != 0;
    m.valid[b * n + rng() % n] = 1;
  }
  return m;
}

struct HeadParams {
  std::vector<T> q, k, v;
  T out;

  HeadParams(const MultiHeadConfig &c, std::mt19937_64 &rng) : out(random_tensor({c.heads * c.d_head, c.d_out}, rng)) {
    for (std::size_t h = 0; h < c.heads; ++h) {
      q.push_back(random_tensor({c.d_q_in, c.d_head}, rng));
      k.push_back(random_tensor({c.d_kv_in, c.d_head}, rng));
      v.push_back(random_tensor({c.d_kv_in, c.d_head}, rng));
    }
  }

  MultiHeadWeights<double> bind(G &g) {
    MultiHeadWeights<double> w;
    for (std::size_t h = 0; h < q.size(); ++h) {
      w.query.push_back(g.parameter(q[h]));
      w.key.push_back(g.parameter(k[h]));
      w.value.push_back(g.parameter(v[h]));
    }
    w.output = g.parameter(out);
    return w;
  }
};

TEST(ScaledDotTest, SingleKey) {
  std::mt19937_64 rng(1);
  T q = random_tensor({3, 4}, rng), k = random_tensor({1, 4}, rng), v = random_tensor({1, 2}, rng);
  G g;
  const auto r = scaled_dot_attention(g.input(q), g.input(k), g.input(v), KeyMask::all(1, 1));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(r.attention.value()[i], 1.0);
    EXPECT_EQ(r.output.value()[2 * i], v[0]);
    EXPECT_EQ(r.output.value()[2 * i + 1], v[1]);
  }
}

TEST(ScaledDotTest, IdenticalKeysSplitEvenly) {
  T q({1, 2}, {0.3, -1.2}), k({2, 2}, {0.5, 0.5, 0.5, 0.5}), v({2, 1}, {1, 3});
  G g;
  const auto r = scaled_dot_attention(g.input(q), g.input(k), g.input(v), KeyMask::all(1, 2));
  EXPECT_DOUBLE_EQ(r.attention.value()[0], 0.5);
  EXPECT_DOUBLE_EQ(r.attention.value()[1], 0.5);
  EXPECT_DOUBLE_EQ(r.output.value()[0], 2.0);
}

TEST(ScaledDotTest, SaturatedOrthonormalQueriesSelectTheirKey) {
  std::mt19937_64 rng(2);
  T q({4, 4}, 0.0);
  for (std::size_t i = 0; i < 4; ++i) q[i * 4 + i] = 100.0;
  T v = random_tensor({4, 3}, rng);
  G g;
  const auto r = scaled_dot_attention(g.input(q), g.input(q), g.input(v), KeyMask::all(1, 4));
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_NEAR(r.attention.value()[i * 4 + j], i == j ? 1.0 : 0.0, 1e-3);
    }
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(r.output.value()[i * 3 + c], v[i * 3 + c], 1e-3);
  }
}

TEST(ScaledDotTest, AllKeysMaskedIsDegenerate) {
  T q({1, 2}, 1.0), k({2, 2}, 1.0), v({2, 2}, 1.0);
  G g;
  KeyMask m{1, 2, {0, 0}};
  EXPECT_THROW(scaled_dot_attention(g.input(q), g.input(k), g.input(v), m), DegenerateError);
}

TEST(ScaledDotTest, LogitScaling) {
  std::mt19937_64 rng(3);
  for (std::size_t d : {1u, 4u}) {
    T q = random_tensor({3, d}, rng), k = random_tensor({5, d}, rng), v = random_tensor({5, 2}, rng);
    G g;
    const auto r = scaled_dot_attention(g.input(q), g.input(k), g.input(v), KeyMask::all(1, 5));
    const auto raw = matmul(g.input(q), transpose(g.input(k))).value();
    if (d == 1) {
      EXPECT_EQ(r.logits.value().values(), raw.values());
    } else {
      EXPECT_EQ(r.logits.value().values(), (0.5 * raw.values()).eval());
    }
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 5; ++j) {
        double dot = 0;
        for (std::size_t c = 0; c < d; ++c) dot += q[i * d + c] * k[j * d + c];
        const double expect = d == 1 ? dot : dot / 2.0;
        EXPECT_NEAR(r.logits.value()[i * 5 + j], expect, 1e-15);
      }
    }
  }
}

TEST(ScaledDotTest, RowsStochasticAndMaskedColumnsZero) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t B = 3, nq = 4, nk = 1 + rng() % 6;
    T q = random_tensor({B, nq, 8}, rng, -3, 3), k = random_tensor({B, nk, 8}, rng, -3, 3);
    T v = random_tensor({B, nk, 2}, rng);
    const KeyMask m = random_mask(B, nk, rng);
    G g;
    const auto a = scaled_dot_attention(g.input(q), g.input(k), g.input(v), m).attention.value();
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t i = 0; i < nq; ++i) {
        double total = 0;
        for (std::size_t j = 0; j < nk; ++j) {
          const double w = a[(b * nq + i) * nk + j];
          if (!m.is_valid(b, j)) {
            EXPECT_EQ(w, 0.0);
          }
          total += w;
        }
        EXPECT_NEAR(total, 1.0, 1e-6);
      }
    }
  }
}

TEST(ScaledDotTest, KeyPermutationInvarianceAndQueryEquivariance) {
  std::mt19937_64 rng(5);
  const std::size_t nq = 4, nk = 5;
  T q = random_tensor({nq, 3}, rng), k = random_tensor({nk, 3}, rng), v = random_tensor({nk, 2}, rng);
  KeyMask m{1, nk, {1, 0, 1, 1, 0}};
  std::vector<std::size_t> pk = {3, 0, 4, 2, 1}, pq = {2, 0, 3, 1};
  T k2 = k, v2 = v, q2 = q;
  KeyMask m2 = m;
  for (std::size_t j = 0; j < nk; ++j) {
    for (std::size_t c = 0; c < 3; ++c) k2[j * 3 + c] = k[pk[j] * 3 + c];
    for (std::size_t c = 0; c < 2; ++c) v2[j * 2 + c] = v[pk[j] * 2 + c];
    m2.valid[j] = m.valid[pk[j]];
  }
  for (std::size_t i = 0; i < nq; ++i)
    for (std::size_t c = 0; c < 3; ++c) q2[i * 3 + c] = q[pq[i] * 3 + c];
  G g;
  const auto base = scaled_dot_attention(g.input(q), g.input(k), g.input(v), m);
  const auto keys = scaled_dot_attention(g.input(q), g.input(k2), g.input(v2), m2);
  const auto queries = scaled_dot_attention(g.input(q2), g.input(k), g.input(v), m);
  for (std::size_t i = 0; i < nq; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      EXPECT_NEAR(keys.output.value()[i * 2 + c], base.output.value()[i * 2 + c], 1e-14);
      EXPECT_NEAR(queries.output.value()[i * 2 + c], base.output.value()[pq[i] * 2 + c], 1e-15);
    }
    for (std::size_t j = 0; j < nk; ++j) {
      EXPECT_NEAR(keys.attention.value()[i * nk + j], base.attention.value()[i * nk + pk[j]], 1e-15);
      EXPECT_NEAR(queries.attention.value()[i * nk + j], base.attention.value()[pq[i] * nk + j],
                  1e-15);
    }
  }
}

TEST(MultiHeadTest, SingleIdentityHeadReducesToScaledDot) {
  std::mt19937_64 rng(6);
  const MultiHeadConfig cfg{1, 3, 3, 3, 3};
  T eye({3, 3}, 0.0);
  for (int i = 0; i < 3; ++i) eye[i * 4] = 1.0;
  T x = random_tensor({4, 3}, rng), kv = random_tensor({5, 3}, rng);
  G g;
  MultiHeadWeights<double> w{{g.input(eye)}, {g.input(eye)}, {g.input(eye)}, g.input(eye)};
  const auto mh = multi_head(g.input(x), g.input(kv), g.input(kv), KeyMask::all(1, 5), cfg, w);
  const auto sd = scaled_dot_attention(g.input(x), g.input(kv), g.input(kv), KeyMask::all(1, 5));
  EXPECT_EQ(mh.output.value().values(), sd.output.value().values());
}

TEST(MultiHeadTest, ZeroedSecondValueProjection) {
  std::mt19937_64 rng(7);
  const MultiHeadConfig cfg{2, 4, 4, 3, 4};
  HeadParams p(cfg, rng);
  p.v[1].values().setZero();
  T x = random_tensor({5, 4}, rng);
  G g;
  const V xv = g.input(x);
  const auto mh = multi_head(xv, xv, xv, KeyMask::all(1, 5), cfg, p.bind(g));
  // head-1 output times the first d_head rows of W^O
  const auto head1 = mh.heads[0].output.value();
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t c = 0; c < 4; ++c) {
      double s = 0;
      for (std::size_t r = 0; r < 3; ++r) s += head1[i * 3 + r] * p.out[r * 4 + c];
      EXPECT_NEAR(mh.output.value()[i * 4 + c], s, 1e-14);
    }
  }
}

TEST(MultiHeadTest, ShapeDisagreementIsADimensionError) {
  std::mt19937_64 rng(8);
  const MultiHeadConfig cfg{2, 4, 4, 3, 4};
  HeadParams p(cfg, rng);
  T x = random_tensor({5, 3}, rng);
  G g;
  EXPECT_THROW(multi_head(g.input(x), g.input(x), g.input(x), KeyMask::all(1, 5), cfg, p.bind(g)),
               DimensionError);
  MultiHeadConfig wrong = cfg;
  wrong.d_head = 2;
  T y = random_tensor({5, 4}, rng);
  G g2;
  EXPECT_THROW(multi_head(g2.input(y), g2.input(y), g2.input(y), KeyMask::all(1, 5), wrong,
                          p.bind(g2)),
               DimensionError);
  EXPECT_THROW((MultiHeadConfig{2, 4, 4, 3, 5}.validate()), ParameterError);
  EXPECT_THROW((MultiHeadConfig{0, 4, 4, 3, 4}.validate()), ParameterError);
}

TEST(AttentionBlockTest, ZeroSublayerGivesLayerNormOfQuery) {
  std::mt19937_64 rng(9);
  const MultiHeadConfig cfg{2, 4, 4, 3, 4};
  HeadParams p(cfg, rng);
  for (auto *group : {&p.q, &p.k, &p.v})
    for (auto &t : *group) t.values().setZero();
  p.out.values().setZero();
  T x = random_tensor({5, 4}, rng), gain({4}, 1.0), bias({4}, 0.0);
  G g;
  const V xv = g.input(x);
  const AttentionBlockWeights<double> w{p.bind(g), g.input(gain), g.input(bias)};
  const auto r = attention_block(xv, xv, xv, KeyMask::all(1, 5), cfg, w, BlockOptions{});
  const auto ln = layer_norm(xv, g.input(gain), g.input(bias), 1e-6).value();
  EXPECT_EQ(r.output.value().values(), ln.values());
}

TEST(AttentionBlockTest, TrainWithoutDropoutEqualsEval) {
  std::mt19937_64 rng(10);
  const MultiHeadConfig cfg{2, 4, 6, 3, 4};
  HeadParams p(cfg, rng);
  T x = random_tensor({2, 5, 4}, rng), kv = random_tensor({2, 3, 6}, rng);
  T gain = random_tensor({4}, rng), bias = random_tensor({4}, rng);
  auto run = [&](Mode mode) {
    G g;
    std::mt19937_64 drop(1);
    const AttentionBlockWeights<double> w{p.bind(g), g.input(gain), g.input(bias)};
    return attention_block(g.input(x), g.input(kv), g.input(kv), KeyMask::all(2, 3), cfg, w,
                           BlockOptions{0.0, mode, 1e-6, &drop})
        .output.value().values().eval();
  };
  EXPECT_EQ(run(Mode::kTrain), run(Mode::kEval));
}

TEST(AttentionBlockTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  const MultiHeadConfig cfg{2, 4, 3, 3, 4};
  HeadParams p(cfg, rng);
  T x = random_tensor({2, 4, 4}, rng), kv = random_tensor({2, 3, 3}, rng);
  T gain = random_tensor({4}, rng, 0.5, 1.5), bias = random_tensor({4}, rng);
  T wts = random_tensor({2, 4, 4}, rng);
  KeyMask m{2, 3, {1, 0, 1, 1, 1, 0}};
  std::vector<T *> leaves = {&x, &kv, &gain, &bias, &p.out};
  for (std::size_t h = 0; h < 2; ++h) {
    leaves.push_back(&p.q[h]);
    leaves.push_back(&p.k[h]);
    leaves.push_back(&p.v[h]);
  }
  std::function<V(G &)> f = [&](G &g) {
    std::mt19937_64 drop(5);
    const AttentionBlockWeights<double> w{p.bind(g), g.parameter(gain), g.parameter(bias)};
    const auto r = attention_block(g.parameter(x), g.parameter(kv), g.parameter(kv), m, cfg, w,
                                   BlockOptions{0.3, Mode::kTrain, 1e-6, &drop});
    return weighted_sum(r.output, wts);
  };
  const auto report = grad_check<double>(f, leaves, {}, 1e-3, 1e-3);
  EXPECT_TRUE(report.passed) << report.max_rel_error << " leaf " << report.worst_leaf;
}

} // namespace
} // namespace atraj
