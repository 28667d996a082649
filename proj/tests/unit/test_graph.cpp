// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "core/graph.hpp"
#include "core/params.hpp"
#include "core/rng.hpp"
#include "grad_check.hpp"

using namespace sekws;
using testutil::GradCheck;

namespace {

ParamSet make_params(std::vector<std::pair<std::string, std::vector<int>>> specs, uint64_t seed,
                     double lo = -1.0, double hi = 1.0) {
  ParamSet ps;
  Rng rng(seed);
  for (auto& [name, shape] : specs) {
    Tensor t(shape);
    for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    ps.add(name, std::move(t));
  }
  return ps;
}

std::vector<GradCheck::Coord> all_coords(const ParamSet& ps) {
  std::vector<GradCheck::Coord> coords;
  for (size_t i = 0; i < ps.size(); ++i) {
    for (int64_t j = 0; j < ps[i].value.size(); ++j) coords.push_back({ps[i].name, j});
  }
  return coords;
}

void expect_all_pass(ParamSet& ps, const std::function<Node*(Graph&)>& build,
                     const char* what) {
  GradCheck chk;
  auto out = chk.run(ps, all_coords(ps), build);
  CHECK_MESSAGE(out.failed == 0, what, ": ", out.failed, " of ", out.checked,
                " coords failed, worst rel ", out.worst_rel, " at ", out.worst_at);
}

}  // namespace

TEST_SUITE_BEGIN("graph");

TEST_CASE("elementwise chain matches hand derivative") {
  ParamSet ps = make_params({{"x", {4}}}, 11);
  Graph g;
  Node* x = g.param(ps.at("x"));
  // y = sum((2x + 1) .* x) -> dy/dx = 4x + 1
  Node* y = g.mul(g.add_const(g.scale(x, 2.0), 1.0), x);
  Node* root = g.sum_squares(y);  // sum of y^2; dy handled by tape
  g.backward(root);
  g.add_param_grads(1.0);
  for (int64_t i = 0; i < 4; ++i) {
    double xv = ps.at("x").value[i];
    double yv = (2.0 * xv + 1.0) * xv;
    double expected = 2.0 * yv * (4.0 * xv + 1.0);
    CHECK(ps.at("x").grad[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("shared node accumulates both paths") {
  ParamSet ps = make_params({{"x", {1}}}, 3);
  Graph g;
  Node* x = g.param(ps.at("x"));
  // f = x*x + x -> df/dx = 2x + 1
  Node* f = g.add(g.mul(x, x), x);
  g.backward(f);
  g.add_param_grads(1.0);
  double xv = ps.at("x").value[0];
  CHECK(ps.at("x").grad[0] == doctest::Approx(2.0 * xv + 1.0).epsilon(1e-12));
}

TEST_CASE("constant-only graphs carry no gradient state") {
  Graph g;
  Node* a = g.leaf(Tensor({2}, {1.0, 2.0}));
  Node* b = g.leaf(Tensor({2}, {3.0, 4.0}));
  Node* c = g.add(a, b);
  CHECK_FALSE(c->requires_grad);
  Node* r = g.sum_squares(c);
  CHECK_FALSE(r->requires_grad);
  CHECK_THROWS_AS(g.backward(r), Error);
}

TEST_CASE("backward requires a scalar root") {
  ParamSet ps = make_params({{"x", {3}}}, 5);
  Graph g;
  Node* x = g.param(ps.at("x"));
  CHECK_THROWS_AS(g.backward(x), Error);
}

TEST_CASE("fd: add sub mul scale") {
  ParamSet ps = make_params({{"a", {3, 2}}, {"b", {3, 2}}}, 21);
  expect_all_pass(
      ps,
      [&](Graph& g) {
        Node* a = g.param(ps.at("a"));
        Node* b = g.param(ps.at("b"));
        return g.sum_squares(g.mul(g.sub(g.scale(a, 1.7), b), g.add(a, b)));
      },
      "add/sub/mul/scale");
}

TEST_CASE("fd: matmul and row bias") {
  ParamSet ps = make_params({{"a", {3, 4}}, {"b", {4, 5}}, {"bias", {5}}}, 22);
  expect_all_pass(
      ps,
      [&](Graph& g) {
        return g.sum_squares(
            g.add_row_bias(g.matmul(g.param(ps.at("a")), g.param(ps.at("b"))), g.param(ps.at("bias"))));
      },
      "matmul");
}

TEST_CASE("fd: transpose and reshape") {
  ParamSet ps = make_params({{"a", {3, 4}}}, 23);
  expect_all_pass(
      ps,
      [&](Graph& g) {
        Node* t = g.transpose2d(g.param(ps.at("a")));
        return g.sum_squares(g.reshape(t, {2, 6}));
      },
      "transpose/reshape");
}

TEST_CASE("fd: activations") {
  ParamSet ps = make_params({{"x", {4, 3}}, {"slope", {1}}}, 24);
  expect_all_pass(
      ps,
      [&](Graph& g) {
        Node* x = g.param(ps.at("x"));
        Node* y = g.prelu(x, g.param(ps.at("slope")));
        y = g.add(g.sigmoid(y), g.tanh_op(y));
        return g.sum_squares(g.relu(y));
      },
      "activations");
}

TEST_CASE("fd: ln on positive input") {
  ParamSet ps = make_params({{"x", {5}}}, 25, 0.5, 2.0);
  expect_all_pass(
      ps, [&](Graph& g) { return g.sum_squares(g.ln(g.param(ps.at("x")))); }, "ln");
}

TEST_CASE("ln rejects non-positive input") {
  Graph g;
  Node* x = g.leaf(Tensor({2}, {1.0, -0.5}));
  CHECK_THROWS_AS(g.ln(x), Error);
}

TEST_CASE("fd: clamp interior") {
  ParamSet ps = make_params({{"x", {6}}}, 26, -0.8, 0.8);
  expect_all_pass(
      ps, [&](Graph& g) { return g.sum_squares(g.clamp(g.param(ps.at("x")), -1.0, 1.0)); },
      "clamp");
}

TEST_CASE("clamp blocks gradient outside the range") {
  ParamSet ps;
  ps.add("x", Tensor({3}, {-2.0, 0.0, 2.0}));
  Graph g;
  Node* y = g.clamp(g.param(ps.at("x")), -1.0, 1.0);
  CHECK(y->val[0] == -1.0);
  CHECK(y->val[2] == 1.0);
  g.backward(g.sum_squares(y));
  g.add_param_grads(1.0);
  CHECK(ps.at("x").grad[0] == 0.0);
  CHECK(ps.at("x").grad[1] == 0.0);  // value 0, derivative of x^2 at 0
  CHECK(ps.at("x").grad[2] == 0.0);
}

TEST_CASE("fd: unfold fold roundtrip, both tail policies") {
  ParamSet ps = make_params({{"x", {20}}}, 27);
  for (bool pad_tail : {true, false}) {
    expect_all_pass(
        ps,
        [&, pad_tail](Graph& g) {
          Node* fr = g.unfold(g.param(ps.at("x")), 6, 3, pad_tail);
          return g.sum_squares(g.fold(fr, 3, 20));
        },
        pad_tail ? "unfold pad" : "unfold nopad");
  }
}

TEST_CASE("unfold frame counts") {
  Graph g;
  Node* x = g.leaf(Tensor({20}));
  CHECK(g.unfold(x, 6, 3, true)->val.dim(0) == 6);    // ceil((20-6)/3)+1
  CHECK(g.unfold(x, 6, 3, false)->val.dim(0) == 5);   // floor((20-6)/3)+1
  Node* exact = g.leaf(Tensor({6}));
  CHECK(g.unfold(exact, 6, 3, true)->val.dim(0) == 1);
  CHECK_THROWS_AS(g.unfold(g.leaf(Tensor({5})), 6, 3, true), Error);
}

TEST_CASE("fold overlap-add reconstructs constant overlap") {
  // Frames of ones with 50% overlap sum to 2 in the interior.
  Graph g;
  Tensor fr({4, 4});
  fr.fill(1.0);
  Node* out = g.fold(g.leaf(fr), 2, 10);
  CHECK(out->val[0] == 1.0);
  CHECK(out->val[1] == 1.0);
  CHECK(out->val[2] == 2.0);
  CHECK(out->val[7] == 2.0);
  CHECK(out->val[9] == 1.0);
}

TEST_CASE("fd: depthwise conv causal and non-causal") {
  ParamSet ps = make_params({{"x", {7, 3}}, {"w", {3, 3}}}, 28);
  for (bool causal : {true, false}) {
    for (int dilation : {1, 2}) {
      expect_all_pass(
          ps,
          [&, causal, dilation](Graph& g) {
            return g.sum_squares(
                g.dwconv_time(g.param(ps.at("x")), g.param(ps.at("w")), dilation, causal));
          },
          "dwconv");
    }
  }
}

TEST_CASE("causal depthwise conv never reads the future") {
  Rng rng(77);
  Tensor x({10, 2});
  for (int64_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
  Tensor w({3, 2});
  for (int64_t i = 0; i < w.size(); ++i) w[i] = rng.normal();

  Graph g1;
  Tensor y1 = g1.dwconv_time(g1.leaf(x), g1.leaf(w), 2, true)->val;
  Tensor x2 = x;
  x2[9 * 2] += 5.0;  // perturb the last frame
  Graph g2;
  Tensor y2 = g2.dwconv_time(g2.leaf(x2), g2.leaf(w), 2, true)->val;
  for (int t = 0; t < 9; ++t) {
    for (int c = 0; c < 2; ++c) {
      CHECK(y1[t * 2 + c] == y2[t * 2 + c]);
    }
  }
}

TEST_CASE("fd: cumulative and global layer norms") {
  ParamSet ps = make_params({{"x", {5, 4}}, {"gamma", {4}}, {"beta", {4}}}, 29);
  expect_all_pass(
      ps,
      [&](Graph& g) {
        return g.sum_squares(
            g.cln(g.param(ps.at("x")), g.param(ps.at("gamma")), g.param(ps.at("beta")), 1e-6));
      },
      "cln");
  expect_all_pass(
      ps,
      [&](Graph& g) {
        return g.sum_squares(
            g.gln(g.param(ps.at("x")), g.param(ps.at("gamma")), g.param(ps.at("beta")), 1e-6));
      },
      "gln");
}

TEST_CASE("cln is causal in its statistics") {
  Rng rng(31);
  Tensor x({6, 3});
  for (int64_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
  Tensor gamma({3});
  gamma.fill(1.0);
  Tensor beta({3});

  Graph g1;
  Tensor y1 = g1.cln(g1.leaf(x), g1.leaf(gamma), g1.leaf(beta), 1e-8)->val;
  Tensor x2 = x;
  x2[5 * 3 + 1] += 3.0;
  Graph g2;
  Tensor y2 = g2.cln(g2.leaf(x2), g2.leaf(gamma), g2.leaf(beta), 1e-8)->val;
  for (int t = 0; t < 5; ++t) {
    for (int c = 0; c < 3; ++c) CHECK(y1[t * 3 + c] == y2[t * 3 + c]);
  }
  // The perturbed frame itself must change.
  CHECK(y1[5 * 3 + 1] != y2[5 * 3 + 1]);
}

TEST_CASE("fd: standardize") {
  ParamSet ps = make_params({{"x", {4, 5}}}, 32);
  expect_all_pass(
      ps, [&](Graph& g) { return g.sum_squares(g.standardize(g.param(ps.at("x")), 1e-6)); },
      "standardize");
}

TEST_CASE("fd: conv2d with stride, padding and 1x1 projection") {
  ParamSet ps = make_params({{"x", {2, 5, 4}}, {"w", {3, 2, 9}}, {"p", {3, 2, 1}}, {"b", {3}}}, 33);
  expect_all_pass(
      ps,
      [&](Graph& g) {
        Node* x = g.param(ps.at("x"));
        Node* main = g.conv2d(x, g.param(ps.at("w")), 2, 2, 1, 1);
        Node* proj = g.conv2d(x, g.param(ps.at("p")), 2, 2, 0, 0);
        return g.sum_squares(g.add_channel_bias(g.add(main, proj), g.param(ps.at("b"))));
      },
      "conv2d");
}

TEST_CASE("conv2d output geometry") {
  Graph g;
  Node* x = g.leaf(Tensor({1, 98, 40}));
  Node* w = g.leaf(Tensor({8, 1, 9}));
  Node* y = g.conv2d(x, w, 2, 2, 1, 1);
  CHECK(y->val.dim(0) == 8);
  CHECK(y->val.dim(1) == 49);
  CHECK(y->val.dim(2) == 20);
}

TEST_CASE("fd: gap and channel bias") {
  ParamSet ps = make_params({{"x", {3, 4, 2}}, {"b", {3}}}, 34);
  expect_all_pass(
      ps,
      [&](Graph& g) {
        return g.sum_squares(g.gap(g.add_channel_bias(g.param(ps.at("x")), g.param(ps.at("b")))));
      },
      "gap");
}

TEST_CASE("fd: slicing, concat, stacking") {
  ParamSet ps = make_params({{"x", {4, 6}}, {"y", {4, 3}}}, 35);
  expect_all_pass(
      ps,
      [&](Graph& g) {
        Node* x = g.param(ps.at("x"));
        Node* y = g.param(ps.at("y"));
        Node* c = g.concat_cols(g.col_slice(x, 1, 3), y);
        std::vector<Node*> rows;
        for (int t = 0; t < c->val.dim(0); ++t) rows.push_back(g.row_slice(c, t));
        return g.sum_squares(g.stack_rows(rows));
      },
      "slicing");
}

TEST_CASE("fd: softmax variants and cross-entropy") {
  ParamSet ps = make_params({{"logits", {1, 7}}, {"col", {5, 1}}}, 36);
  expect_all_pass(
      ps,
      [&](Graph& g) { return g.ce_from_logits(g.param(ps.at("logits")), 3); },
      "ce_from_logits");
  expect_all_pass(
      ps,
      [&](Graph& g) { return g.sum_squares(g.softmax_row(g.param(ps.at("logits")))); },
      "softmax_row");
  expect_all_pass(
      ps,
      [&](Graph& g) { return g.sum_squares(g.softmax_time(g.param(ps.at("col")))); },
      "softmax_time");
}

TEST_CASE("softmax_row is a distribution and ce matches -log p") {
  ParamSet ps = make_params({{"logits", {1, 12}}}, 37);
  Graph g;
  Node* logits = g.param(ps.at("logits"));
  Node* p = g.softmax_row(logits);
  double sum = 0.0;
  for (int i = 0; i < 12; ++i) sum += p->val[i];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  Node* ce = g.ce_from_logits(logits, 4);
  CHECK(ce->val[0] == doctest::Approx(-std::log(p->val[4])).epsilon(1e-12));
}

TEST_CASE("fd: blend with learned alpha") {
  ParamSet ps = make_params({{"x", {6}}, {"e", {6}}, {"alpha", {1}}}, 38, 0.1, 0.9);
  expect_all_pass(
      ps,
      [&](Graph& g) {
        return g.sum_squares(
            g.blend(g.param(ps.at("x")), g.param(ps.at("e")), g.param(ps.at("alpha"))));
      },
      "blend");
}

TEST_CASE("param nodes are cached per graph") {
  ParamSet ps = make_params({{"x", {2}}}, 39);
  Graph g;
  Node* a = g.param(ps.at("x"));
  Node* b = g.param(ps.at("x"));
  CHECK(a == b);
}

TEST_CASE("frozen params enter as constants") {
  ParamSet ps = make_params({{"x", {2}}, {"y", {2}}}, 40);
  ps.at("x").frozen = true;
  Graph g;
  Node* x = g.param(ps.at("x"));
  Node* y = g.param(ps.at("y"));
  CHECK_FALSE(x->requires_grad);
  CHECK(y->requires_grad);
  Node* root = g.sum_squares(g.mul(x, y));
  g.backward(root);
  g.add_param_grads(1.0);
  CHECK(ps.at("x").grad[0] == 0.0);
  CHECK(ps.at("x").grad[1] == 0.0);
  CHECK(ps.at("y").grad[0] != 0.0);
}

TEST_CASE("add_param_grads scales batch accumulation") {
  ParamSet ps = make_params({{"x", {1}}}, 41);
  double xv = ps.at("x").value[0];
  ps.zero_grads();
  for (int i = 0; i < 4; ++i) {
    Graph g;
    Node* x = g.param(ps.at("x"));
    g.backward(g.sum_squares(x));
    g.add_param_grads(0.25);
  }
  CHECK(ps.at("x").grad[0] == doctest::Approx(2.0 * xv).epsilon(1e-12));
}

TEST_SUITE_END();
