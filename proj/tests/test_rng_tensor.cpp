#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "edgmat/rng.hpp"
#include "edgmat/tensor.hpp"

using namespace edgmat;

TEST(CounterRng, SameSeedAndTagGiveSameStream) {
  CounterRng a(42, "dropout"), b(42, "dropout");
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(CounterRng, TagsAndSeedsSeparateStreams) {
  CounterRng a(42, "dropout"), b(42, "init"), c(43, "dropout");
  EXPECT_NE(a.key(), b.key());
  EXPECT_NE(a.key(), c.key());
  EXPECT_NE(a.next(), b.next());
}

TEST(CounterRng, DrawIsPureFunctionOfCounter) {
  CounterRng rng(7, "x");
  const auto v5 = rng.at(5);
  for (int i = 0; i < 10; ++i) rng.next();
  EXPECT_EQ(rng.at(5), v5);
  EXPECT_EQ(CounterRng::draw(rng.key(), 5), v5);
}

TEST(CounterRng, SplitMixReferenceValue) {
  // SplitMix64 finalizer on the first state of seed 0 (published test vector).
  EXPECT_EQ(CounterRng::mix(0x9e3779b97f4a7c15ULL), 0xe220a8397b1dcdafULL);
}

TEST(CounterRng, UniformInUnitIntervalWithCorrectMean) {
  CounterRng rng(1, "u");
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
}

TEST(CounterRng, NextBelowCoversRangeUniformly) {
  CounterRng rng(3, "b");
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.next_below(7);
    ASSERT_LT(v, 7u);
    ++hits[v];
  }
  for (int h : hits) EXPECT_NEAR(h, 10000, 500);
}

TEST(CounterRng, NormalMomentsMatch) {
  CounterRng rng(9, "n");
  double s = 0.0, s2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.next_normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(CounterRng, ReserveAdvancesPastBlock) {
  CounterRng rng(5, "r");
  const auto base = rng.reserve(10);
  EXPECT_EQ(base, 0u);
  EXPECT_EQ(rng.counter(), 10u);
}

TEST(Tensor, ShapesAndIndexing) {
  const Tensor m = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(1, 2), 6.0);
  EXPECT_EQ(m.row(1)[0], 4.0);

  const Tensor v = Tensor::vector({1, 2, 3});
  EXPECT_EQ(v.rank(), 1u);
  EXPECT_EQ(v.rows(), 3u);
  EXPECT_EQ(v.cols(), 1u);

  EXPECT_EQ(Tensor::scalar(2.5).item(), 2.5);
  EXPECT_THROW(m.item(), ShapeError);
}

TEST(Tensor, RejectsRaggedAndMismatchedData) {
  EXPECT_THROW(Tensor::matrix({{1, 2}, {3}}), ShapeError);
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  EXPECT_THROW(Tensor(Shape{1, 1, 1}), ShapeError);
}

TEST(Tensor, ReshapeKeepsData) {
  const Tensor m = Tensor::matrix({{1, 2}, {3, 4}});
  const Tensor r = m.reshaped({4, 1});
  EXPECT_EQ(r(3, 0), 4.0);
  EXPECT_THROW(m.reshaped({3, 1}), ShapeError);
}
