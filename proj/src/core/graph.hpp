// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>
#include <functional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "core/params.hpp"
#include "core/tensor.hpp"
#include "core/waveform.hpp"

namespace sekws {

// One value on the tape. grad is allocated only when the node participates in
// differentiation; backward (when set) scatters this node's grad into its
// inputs' grads.
struct Node {
  Tensor val;
  Tensor grad;
  bool requires_grad = false;
  std::function<void()> backward;
};

// Reverse-mode tape over double tensors. Nodes are created in topological
// order by construction, so backward() is a reverse sweep over creation
// order. One graph per training example; call add_param_grads() afterwards to
// accumulate into the bound ParamTensors.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Constants (no gradient).
  Node* leaf(Tensor val);
  Node* leaf(const Waveform& w);

  // Trainable leaf. Frozen tensors enter as constants, so no gradient work is
  // spent on them. Repeated calls with the same tensor return the same node.
  Node* param(ParamTensor& p);

  // Elementwise, same shape.
  Node* add(Node* a, Node* b);
  Node* sub(Node* a, Node* b);
  Node* mul(Node* a, Node* b);
  Node* scale(Node* a, double c);
  Node* add_const(Node* a, double c);

  Node* relu(Node* a);
  // Single learned negative-side slope.
  Node* prelu(Node* a, Node* slope);
  Node* sigmoid(Node* a);
  Node* tanh_op(Node* a);
  // Natural log; input must be strictly positive.
  Node* ln(Node* a);
  // Gradient passes only strictly inside (lo, hi).
  Node* clamp(Node* a, double lo, double hi);

  // {m,k} x {k,n} -> {m,n}.
  Node* matmul(Node* a, Node* b);
  // a {m,n} + bias {n} broadcast over rows.
  Node* add_row_bias(Node* a, Node* bias);
  Node* transpose2d(Node* a);

  // Sliding frames of a rank-1 signal: {L} -> {F,K} with hop S. With pad_tail
  // the input is implicitly zero-padded on the right so the frames cover
  // every sample (F = ceil((L-K)/S)+1); without it only fully covered windows
  // are kept (F = floor((L-K)/S)+1).
  Node* unfold(Node* x, int kernel_len, int stride, bool pad_tail);
  // Overlap-add of {F,K} frames with hop S, trimmed to out_len samples.
  Node* fold(Node* frames, int stride, int out_len);

  // Depthwise conv along time. x {T,C}, taps {k,C}. Causal pads (k-1)*dilation
  // on the left only; non-causal pads (k-1)/2*dilation on both sides (k odd).
  Node* dwconv_time(Node* x, Node* taps, int dilation, bool causal);

  // Cumulative layer norm: frame t is normalized by the statistics of all
  // entries at frames <= t, then per-channel affine. Causal by construction.
  Node* cln(Node* x, Node* gamma, Node* beta, double eps);
  // Global layer norm over the whole {T,C} map, per-channel affine.
  Node* gln(Node* x, Node* gamma, Node* beta, double eps);
  // Zero-mean unit-variance over all entries, no affine.
  Node* standardize(Node* x, double eps);

  // x {C,H,W}, w {C2,C,k*k} (square window packed flat to stay rank 3), zero
  // padding. Output {C2,H2,W2}.
  Node* conv2d(Node* x, Node* w, int stride_h, int stride_w, int pad_h, int pad_w);
  Node* add_channel_bias(Node* x, Node* bias);
  // Global average pool {C,H,W} -> {1,C}.
  Node* gap(Node* x);

  // Same data, new shape (element count must match).
  Node* reshape(Node* x, std::vector<int> shape);

  Node* row_slice(Node* x, int t);                     // {T,C} -> {1,C}
  Node* col_slice(Node* x, int start, int len);        // {T,C} -> {T,len}
  Node* concat_cols(Node* a, Node* b);                 // {T,Ca}+{T,Cb} -> {T,Ca+Cb}
  Node* stack_rows(const std::vector<Node*>& rows);    // T x {1,C} -> {T,C}

  // Softmax along the time axis of a {T,1} column.
  Node* softmax_time(Node* x);
  // Softmax along the single row of a {1,C} matrix.
  Node* softmax_row(Node* x);
  // Stable log-softmax cross-entropy straight from logits {1,C}.
  Node* ce_from_logits(Node* logits, int label);

  // Sum of squares -> {1}.
  Node* sum_squares(Node* a);

  // out = x + alpha * (e - x), alpha a size-1 node. Same-shape rank-1 x, e.
  Node* blend(Node* x, Node* e, Node* alpha);

  // Escape hatch for fused ops defined outside this file (feature extraction).
  Node* make(Tensor val, bool requires_grad);

  // Seeds root->grad (root must hold exactly one value) and sweeps the tape.
  void backward(Node* root);

  // p.grad += scale * node.grad for every bound param.
  void add_param_grads(double scale);

  size_t node_count() const { return nodes_.size(); }

 private:
  std::deque<Node> nodes_;
  std::vector<std::pair<Node*, ParamTensor*>> bindings_;
  std::unordered_map<const ParamTensor*, Node*> param_nodes_;
};

}  // namespace sekws
