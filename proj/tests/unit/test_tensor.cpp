// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "core/errors.hpp"
#include "core/params.hpp"
#include "core/tensor.hpp"

using namespace sekws;

TEST_SUITE_BEGIN("tensor");

TEST_CASE("construction, shape and indexing") {
  Tensor t({2, 3});
  CHECK(t.rank() == 2);
  CHECK(t.dim(0) == 2);
  CHECK(t.dim(1) == 3);
  CHECK(t.size() == 6);
  for (int64_t i = 0; i < t.size(); ++i) CHECK(t[i] == 0.0);
  t[5] = 5.0;
  CHECK(t[5] == 5.0);

  Tensor v({4}, {1.0, 2.0, 3.0, 4.0});
  CHECK(v.rank() == 1);
  CHECK(v[3] == 4.0);
  CHECK(Tensor::scalar(2.5).size() == 1);
  CHECK(Tensor::scalar(2.5)[0] == 2.5);
}

TEST_CASE("invalid shapes are rejected") {
  CHECK_THROWS_AS(Tensor({0}), Error);
  CHECK_THROWS_AS(Tensor({2, -1}), Error);
  CHECK_THROWS_AS(Tensor({3}, {1.0, 2.0}), Error);  // data length mismatch
}

TEST_CASE("fill, finiteness and shape strings") {
  Tensor t({2, 2});
  t.fill(1.5);
  for (int64_t i = 0; i < 4; ++i) CHECK(t[i] == 1.5);
  CHECK(t.all_finite());
  t[0] = std::nan("");
  CHECK_FALSE(t.all_finite());
  CHECK(Tensor::shape_str({2, 3}) == "(2,3)");
  Tensor a({2, 3}), b({2, 3}), c({3, 2});
  CHECK(a.same_shape(b));
  CHECK_FALSE(a.same_shape(c));
}

TEST_CASE("param set bookkeeping") {
  ParamSet ps;
  ps.add("a", Tensor({2, 3}));
  ps.add("b", Tensor({4}));
  CHECK(ps.size() == 2);
  CHECK(ps.total_values() == 10);
  CHECK(ps.has("a"));
  CHECK_FALSE(ps.has("c"));
  CHECK_THROWS_AS(ps.at("c"), Error);
  CHECK_THROWS_AS(ps.add("a", Tensor({1})), Error);  // duplicate name

  CHECK(ps.at("a").grad.same_shape(ps.at("a").value));
  CHECK(ps.at("a").velocity.same_shape(ps.at("a").value));
  ps.at("a").grad.fill(3.0);
  ps.zero_grads();
  for (int64_t i = 0; i < ps.at("a").grad.size(); ++i) CHECK(ps.at("a").grad[i] == 0.0);

  ps.set_frozen_all(true);
  CHECK(ps.at("a").frozen);
  CHECK(ps.at("b").frozen);
}

TEST_CASE("initializers are seeded and scaled") {
  Rng r1(7), r2(7);
  Tensor a = init_he(r1, {16, 16}, 16);
  Tensor b = init_he(r2, {16, 16}, 16);
  for (int64_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  // He scale: stddev sqrt(2/fan_in) = sqrt(2/16) ~ 0.354.
  double sum2 = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) sum2 += a[i] * a[i];
  double std_est = std::sqrt(sum2 / double(a.size()));
  CHECK(std_est > 0.25);
  CHECK(std_est < 0.47);

  Tensor z = init_zeros({8});
  for (int64_t i = 0; i < 8; ++i) CHECK(z[i] == 0.0);
  Tensor c = init_const({8}, 0.25);
  for (int64_t i = 0; i < 8; ++i) CHECK(c[i] == 0.25);
  Rng r3(9);
  CHECK_THROWS_AS(init_he(r3, {4}, 0), Error);
}

TEST_CASE("params_hash tracks names and values") {
  ParamSet a, b;
  a.add("w", Tensor({2}, {1.0, 2.0}));
  b.add("w", Tensor({2}, {1.0, 2.0}));
  CHECK(params_hash(a) == params_hash(b));
  b.at("w").value[1] = 2.0000001;
  CHECK(params_hash(a) != params_hash(b));
  ParamSet c;
  c.add("w2", Tensor({2}, {1.0, 2.0}));
  CHECK(params_hash(a) != params_hash(c));
}

TEST_SUITE_END();
