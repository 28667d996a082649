// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include "core/graph.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace sekws {

namespace {

void check_same_shape(const Node* a, const Node* b, const char* op) {
  require(a->val.same_shape(b->val), ErrorKind::Shape,
          std::string(op) + ": shape mismatch " + Tensor::shape_str(a->val.shape()) + " vs " +
              Tensor::shape_str(b->val.shape()));
}

void check_rank(const Node* a, int rank, const char* op) {
  require(a->val.rank() == rank, ErrorKind::Shape,
          std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
              Tensor::shape_str(a->val.shape()));
}

}  // namespace

Node* Graph::make(Tensor val, bool requires_grad) {
  nodes_.emplace_back();
  Node* n = &nodes_.back();
  n->val = std::move(val);
  n->requires_grad = requires_grad;
  if (requires_grad) n->grad = Tensor(n->val.shape());
  return n;
}

Node* Graph::leaf(Tensor val) { return make(std::move(val), false); }

Node* Graph::leaf(const Waveform& w) {
  require(!w.empty(), ErrorKind::InvalidArgument, "leaf: empty waveform");
  return make(Tensor({static_cast<int>(w.size())}, w.samples), false);
}

Node* Graph::param(ParamTensor& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return it->second;
  Node* n = make(p.value, !p.frozen);
  if (!p.frozen) bindings_.emplace_back(n, &p);
  param_nodes_[&p] = n;
  return n;
}

void Graph::backward(Node* root) {
  require(root->val.size() == 1, ErrorKind::InvalidArgument,
          "backward: root must hold a single value");
  require(root->requires_grad, ErrorKind::InvalidArgument,
          "backward: root does not require gradients");
  root->grad[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->requires_grad && it->backward) it->backward();
  }
}

void Graph::add_param_grads(double scale) {
  for (auto& [node, p] : bindings_) {
    const double* g = node->grad.data();
    double* dst = p->grad.data();
    for (int64_t i = 0; i < node->grad.size(); ++i) dst[i] += scale * g[i];
  }
}

Node* Graph::add(Node* a, Node* b) {
  check_same_shape(a, b, "add");
  Tensor v(a->val.shape());
  const double* pa = a->val.data();
  const double* pb = b->val.data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = pa[i] + pb[i];
  Node* out = make(std::move(v), a->requires_grad || b->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, a, b]() {
      const double* g = out->grad.data();
      int64_t n = out->grad.size();
      if (a->requires_grad) {
        double* da = a->grad.data();
        for (int64_t i = 0; i < n; ++i) da[i] += g[i];
      }
      if (b->requires_grad) {
        double* db = b->grad.data();
        for (int64_t i = 0; i < n; ++i) db[i] += g[i];
      }
    };
  }
  return out;
}

Node* Graph::sub(Node* a, Node* b) {
  check_same_shape(a, b, "sub");
  Tensor v(a->val.shape());
  const double* pa = a->val.data();
  const double* pb = b->val.data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = pa[i] - pb[i];
  Node* out = make(std::move(v), a->requires_grad || b->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, a, b]() {
      const double* g = out->grad.data();
      int64_t n = out->grad.size();
      if (a->requires_grad) {
        double* da = a->grad.data();
        for (int64_t i = 0; i < n; ++i) da[i] += g[i];
      }
      if (b->requires_grad) {
        double* db = b->grad.data();
        for (int64_t i = 0; i < n; ++i) db[i] -= g[i];
      }
    };
  }
  return out;
}

Node* Graph::mul(Node* a, Node* b) {
  check_same_shape(a, b, "mul");
  Tensor v(a->val.shape());
  const double* pa = a->val.data();
  const double* pb = b->val.data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = pa[i] * pb[i];
  Node* out = make(std::move(v), a->requires_grad || b->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, a, b]() {
      const double* g = out->grad.data();
      int64_t n = out->grad.size();
      if (a->requires_grad) {
        double* da = a->grad.data();
        const double* pb2 = b->val.data();
        for (int64_t i = 0; i < n; ++i) da[i] += g[i] * pb2[i];
      }
      if (b->requires_grad) {
        double* db = b->grad.data();
        const double* pa2 = a->val.data();
        for (int64_t i = 0; i < n; ++i) db[i] += g[i] * pa2[i];
      }
    };
  }
  return out;
}

Node* Graph::scale(Node* a, double c) {
  Tensor v(a->val.shape());
  const double* pa = a->val.data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = c * pa[i];
  Node* out = make(std::move(v), a->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, a, c]() {
      const double* g = out->grad.data();
      double* da = a->grad.data();
      for (int64_t i = 0; i < out->grad.size(); ++i) da[i] += c * g[i];
    };
  }
  return out;
}

Node* Graph::add_const(Node* a, double c) {
  Tensor v(a->val.shape());
  const double* pa = a->val.data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = pa[i] + c;
  Node* out = make(std::move(v), a->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, a]() {
      const double* g = out->grad.data();
      double* da = a->grad.data();
      for (int64_t i = 0; i < out->grad.size(); ++i) da[i] += g[i];
    };
  }
  return out;
}

Node* Graph::relu(Node* a) {
  Tensor v(a->val.shape());
  const double* pa = a->val.data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = pa[i] > 0.0 ? pa[i] : 0.0;
  Node* out = make(std::move(v), a->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, a]() {
      const double* g = out->grad.data();
      const double* pa2 = a->val.data();
      double* da = a->grad.data();
      for (int64_t i = 0; i < out->grad.size(); ++i) {
        if (pa2[i] > 0.0) da[i] += g[i];
      }
    };
  }
  return out;
}

Node* Graph::prelu(Node* a, Node* slope) {
  require(slope->val.size() == 1, ErrorKind::Shape, "prelu: slope must hold a single value");
  double s = slope->val[0];
  Tensor v(a->val.shape());
  const double* pa = a->val.data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = pa[i] > 0.0 ? pa[i] : s * pa[i];
  Node* out = make(std::move(v), a->requires_grad || slope->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, a, slope, s]() {
      const double* g = out->grad.data();
      const double* pa2 = a->val.data();
      int64_t n = out->grad.size();
      if (a->requires_grad) {
        double* da = a->grad.data();
        for (int64_t i = 0; i < n; ++i) da[i] += pa2[i] > 0.0 ? g[i] : s * g[i];
      }
      if (slope->requires_grad) {
        double acc = 0.0;
        for (int64_t i = 0; i < n; ++i) {
          if (pa2[i] < 0.0) acc += g[i] * pa2[i];
        }
        slope->grad[0] += acc;
      }
    };
  }
  return out;
}

Node* Graph::sigmoid(Node* a) {
  Tensor v(a->val.shape());
  const double* pa = a->val.data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = 1.0 / (1.0 + std::exp(-pa[i]));
  Node* out = make(std::move(v), a->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, a]() {
      const double* g = out->grad.data();
      const double* y = out->val.data();
      double* da = a->grad.data();
      for (int64_t i = 0; i < out->grad.size(); ++i) da[i] += g[i] * y[i] * (1.0 - y[i]);
    };
  }
  return out;
}

Node* Graph::tanh_op(Node* a) {
  Tensor v(a->val.shape());
  const double* pa = a->val.data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = std::tanh(pa[i]);
  Node* out = make(std::move(v), a->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, a]() {
      const double* g = out->grad.data();
      const double* y = out->val.data();
      double* da = a->grad.data();
      for (int64_t i = 0; i < out->grad.size(); ++i) da[i] += g[i] * (1.0 - y[i] * y[i]);
    };
  }
  return out;
}

Node* Graph::ln(Node* a) {
  Tensor v(a->val.shape());
  const double* pa = a->val.data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) {
    require(pa[i] > 0.0, ErrorKind::Numeric, "ln: non-positive input");
    pv[i] = std::log(pa[i]);
  }
  Node* out = make(std::move(v), a->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, a]() {
      const double* g = out->grad.data();
      const double* pa2 = a->val.data();
      double* da = a->grad.data();
      for (int64_t i = 0; i < out->grad.size(); ++i) da[i] += g[i] / pa2[i];
    };
  }
  return out;
}

Node* Graph::clamp(Node* a, double lo, double hi) {
  require(lo < hi, ErrorKind::InvalidArgument, "clamp: lo must be below hi");
  Tensor v(a->val.shape());
  const double* pa = a->val.data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = std::min(std::max(pa[i], lo), hi);
  Node* out = make(std::move(v), a->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, a, lo, hi]() {
      const double* g = out->grad.data();
      const double* pa2 = a->val.data();
      double* da = a->grad.data();
      for (int64_t i = 0; i < out->grad.size(); ++i) {
        if (pa2[i] > lo && pa2[i] < hi) da[i] += g[i];
      }
    };
  }
  return out;
}

Node* Graph::matmul(Node* a, Node* b) {
  check_rank(a, 2, "matmul");
  check_rank(b, 2, "matmul");
  int m = a->val.dim(0), k = a->val.dim(1);
  int k2 = b->val.dim(0), n = b->val.dim(1);
  require(k == k2, ErrorKind::Shape,
          "matmul: inner dims differ, " + Tensor::shape_str(a->val.shape()) + " x " +
              Tensor::shape_str(b->val.shape()));
  Tensor v({m, n});
  {
    const double* pa = a->val.data();
    const double* pb = b->val.data();
    double* pv = v.data();
    for (int i = 0; i < m; ++i) {
      const double* arow = pa + static_cast<int64_t>(i) * k;
      double* vrow = pv + static_cast<int64_t>(i) * n;
      for (int kk = 0; kk < k; ++kk) {
        double aik = arow[kk];
        if (aik == 0.0) continue;
        const double* brow = pb + static_cast<int64_t>(kk) * n;
        for (int j = 0; j < n; ++j) vrow[j] += aik * brow[j];
      }
    }
  }
  Node* out = make(std::move(v), a->requires_grad || b->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, a, b, m, k, n]() {
      const double* g = out->grad.data();
      if (a->requires_grad) {
        double* da = a->grad.data();
        const double* pb = b->val.data();
        for (int i = 0; i < m; ++i) {
          const double* grow = g + static_cast<int64_t>(i) * n;
          double* darow = da + static_cast<int64_t>(i) * k;
          for (int kk = 0; kk < k; ++kk) {
            const double* brow = pb + static_cast<int64_t>(kk) * n;
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
            darow[kk] += acc;
          }
        }
      }
      if (b->requires_grad) {
        double* db = b->grad.data();
        const double* pa = a->val.data();
        for (int i = 0; i < m; ++i) {
          const double* arow = pa + static_cast<int64_t>(i) * k;
          const double* grow = g + static_cast<int64_t>(i) * n;
          for (int kk = 0; kk < k; ++kk) {
            double aik = arow[kk];
            if (aik == 0.0) continue;
            double* dbrow = db + static_cast<int64_t>(kk) * n;
            for (int j = 0; j < n; ++j) dbrow[j] += aik * grow[j];
          }
        }
      }
    };
  }
  return out;
}

Node* Graph::add_row_bias(Node* a, Node* bias) {
  check_rank(a, 2, "add_row_bias");
  check_rank(bias, 1, "add_row_bias");
  int m = a->val.dim(0), n = a->val.dim(1);
  require(bias->val.dim(0) == n, ErrorKind::Shape, "add_row_bias: bias length mismatch");
  Tensor v({m, n});
  const double* pa = a->val.data();
  const double* pb = bias->val.data();
  double* pv = v.data();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) pv[static_cast<int64_t>(i) * n + j] = pa[static_cast<int64_t>(i) * n + j] + pb[j];
  }
  Node* out = make(std::move(v), a->requires_grad || bias->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, a, bias, m, n]() {
      const double* g = out->grad.data();
      if (a->requires_grad) {
        double* da = a->grad.data();
        for (int64_t i = 0; i < static_cast<int64_t>(m) * n; ++i) da[i] += g[i];
      }
      if (bias->requires_grad) {
        double* db = bias->grad.data();
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < n; ++j) db[j] += g[static_cast<int64_t>(i) * n + j];
        }
      }
    };
  }
  return out;
}

Node* Graph::transpose2d(Node* a) {
  check_rank(a, 2, "transpose2d");
  int m = a->val.dim(0), n = a->val.dim(1);
  Tensor v({n, m});
  const double* pa = a->val.data();
  double* pv = v.data();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) pv[static_cast<int64_t>(j) * m + i] = pa[static_cast<int64_t>(i) * n + j];
  }
  Node* out = make(std::move(v), a->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, a, m, n]() {
      const double* g = out->grad.data();
      double* da = a->grad.data();
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) da[static_cast<int64_t>(i) * n + j] += g[static_cast<int64_t>(j) * m + i];
      }
    };
  }
  return out;
}

Node* Graph::unfold(Node* x, int kernel_len, int stride, bool pad_tail) {
  check_rank(x, 1, "unfold");
  require(kernel_len > 0 && stride > 0, ErrorKind::InvalidArgument,
          "unfold: kernel and stride must be positive");
  int len = x->val.dim(0);
  require(len >= kernel_len, ErrorKind::Shape,
          "unfold: input shorter than kernel (" + std::to_string(len) + " < " +
              std::to_string(kernel_len) + ")");
  int frames = pad_tail ? ((len == kernel_len) ? 1 : (len - kernel_len + stride - 1) / stride + 1)
                        : (len - kernel_len) / stride + 1;
  Tensor v({frames, kernel_len});
  const double* px = x->val.data();
  double* pv = v.data();
  for (int f = 0; f < frames; ++f) {
    int base = f * stride;
    double* row = pv + static_cast<int64_t>(f) * kernel_len;
    for (int j = 0; j < kernel_len; ++j) {
      int idx = base + j;
      row[j] = idx < len ? px[idx] : 0.0;
    }
  }
  Node* out = make(std::move(v), x->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, x, frames, kernel_len, stride, len]() {
      const double* g = out->grad.data();
      double* dx = x->grad.data();
      for (int f = 0; f < frames; ++f) {
        int base = f * stride;
        const double* row = g + static_cast<int64_t>(f) * kernel_len;
        for (int j = 0; j < kernel_len; ++j) {
          int idx = base + j;
          if (idx < len) dx[idx] += row[j];
        }
      }
    };
  }
  return out;
}

Node* Graph::fold(Node* frames, int stride, int out_len) {
  check_rank(frames, 2, "fold");
  require(stride > 0 && out_len > 0, ErrorKind::InvalidArgument,
          "fold: stride and out_len must be positive");
  int f_count = frames->val.dim(0);
  int kernel_len = frames->val.dim(1);
  Tensor v({out_len});
  const double* pf = frames->val.data();
  double* pv = v.data();
  for (int f = 0; f < f_count; ++f) {
    int base = f * stride;
    const double* row = pf + static_cast<int64_t>(f) * kernel_len;
    for (int j = 0; j < kernel_len; ++j) {
      int idx = base + j;
      if (idx < out_len) pv[idx] += row[j];
    }
  }
  Node* out = make(std::move(v), frames->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, frames, f_count, kernel_len, stride, out_len]() {
      const double* g = out->grad.data();
      double* df = frames->grad.data();
      for (int f = 0; f < f_count; ++f) {
        int base = f * stride;
        double* row = df + static_cast<int64_t>(f) * kernel_len;
        for (int j = 0; j < kernel_len; ++j) {
          int idx = base + j;
          if (idx < out_len) row[j] += g[idx];
        }
      }
    };
  }
  return out;
}

Node* Graph::dwconv_time(Node* x, Node* taps, int dilation, bool causal) {
  check_rank(x, 2, "dwconv_time");
  check_rank(taps, 2, "dwconv_time");
  int t_len = x->val.dim(0), ch = x->val.dim(1);
  int k = taps->val.dim(0);
  require(taps->val.dim(1) == ch, ErrorKind::Shape, "dwconv_time: channel mismatch");
  require(dilation >= 1, ErrorKind::InvalidArgument, "dwconv_time: dilation must be >= 1");
  require(causal || k % 2 == 1, ErrorKind::InvalidArgument,
          "dwconv_time: non-causal mode needs an odd kernel");
  // Tap j reaches offset (j - anchor) * dilation; anchor k-1 makes the stack
  // see only the past.
  int anchor = causal ? k - 1 : (k - 1) / 2;
  Tensor v({t_len, ch});
  const double* px = x->val.data();
  const double* pw = taps->val.data();
  double* pv = v.data();
  for (int t = 0; t < t_len; ++t) {
    double* vrow = pv + static_cast<int64_t>(t) * ch;
    for (int j = 0; j < k; ++j) {
      int src = t + (j - anchor) * dilation;
      if (src < 0 || src >= t_len) continue;
      const double* xrow = px + static_cast<int64_t>(src) * ch;
      const double* wrow = pw + static_cast<int64_t>(j) * ch;
      for (int c = 0; c < ch; ++c) vrow[c] += wrow[c] * xrow[c];
    }
  }
  Node* out = make(std::move(v), x->requires_grad || taps->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, x, taps, t_len, ch, k, dilation, anchor]() {
      const double* g = out->grad.data();
      const double* px2 = x->val.data();
      const double* pw2 = taps->val.data();
      for (int t = 0; t < t_len; ++t) {
        const double* grow = g + static_cast<int64_t>(t) * ch;
        for (int j = 0; j < k; ++j) {
          int src = t + (j - anchor) * dilation;
          if (src < 0 || src >= t_len) continue;
          if (x->requires_grad) {
            double* dxrow = x->grad.data() + static_cast<int64_t>(src) * ch;
            const double* wrow = pw2 + static_cast<int64_t>(j) * ch;
            for (int c = 0; c < ch; ++c) dxrow[c] += grow[c] * wrow[c];
          }
          if (taps->requires_grad) {
            double* dwrow = taps->grad.data() + static_cast<int64_t>(j) * ch;
            const double* xrow = px2 + static_cast<int64_t>(src) * ch;
            for (int c = 0; c < ch; ++c) dwrow[c] += grow[c] * xrow[c];
          }
        }
      }
    };
  }
  return out;
}

Node* Graph::cln(Node* x, Node* gamma, Node* beta, double eps) {
  check_rank(x, 2, "cln");
  check_rank(gamma, 1, "cln");
  check_rank(beta, 1, "cln");
  int t_len = x->val.dim(0), ch = x->val.dim(1);
  require(gamma->val.dim(0) == ch && beta->val.dim(0) == ch, ErrorKind::Shape,
          "cln: affine size mismatch");
  require(eps > 0.0, ErrorKind::InvalidArgument, "cln: eps must be positive");

  // Running stats over all entries at frames <= t.
  std::vector<double> mu(static_cast<size_t>(t_len)), sigma(static_cast<size_t>(t_len));
  Tensor z({t_len, ch});
  Tensor v({t_len, ch});
  {
    const double* px = x->val.data();
    const double* pg = gamma->val.data();
    const double* pb = beta->val.data();
    double* pz = z.data();
    double* pv = v.data();
    double s1 = 0.0, s2 = 0.0;
    for (int t = 0; t < t_len; ++t) {
      const double* xrow = px + static_cast<int64_t>(t) * ch;
      for (int c = 0; c < ch; ++c) {
        s1 += xrow[c];
        s2 += xrow[c] * xrow[c];
      }
      double n = static_cast<double>(t + 1) * ch;
      double m = s1 / n;
      double var = std::max(s2 / n - m * m, 0.0);
      mu[static_cast<size_t>(t)] = m;
      sigma[static_cast<size_t>(t)] = std::sqrt(var + eps);
      double inv = 1.0 / sigma[static_cast<size_t>(t)];
      double* zrow = pz + static_cast<int64_t>(t) * ch;
      double* vrow = pv + static_cast<int64_t>(t) * ch;
      for (int c = 0; c < ch; ++c) {
        zrow[c] = (xrow[c] - m) * inv;
        vrow[c] = pg[c] * zrow[c] + pb[c];
      }
    }
  }
  Node* out = make(std::move(v), x->requires_grad || gamma->requires_grad || beta->requires_grad);
  if (out->requires_grad) {
    Tensor z_saved = std::move(z);
    std::vector<double> mu_saved = std::move(mu);
    std::vector<double> sigma_saved = std::move(sigma);
    out->backward = [out, x, gamma, beta, t_len, ch, z_saved, mu_saved, sigma_saved]() {
      const double* g = out->grad.data();
      const double* pz = z_saved.data();
      const double* pg = gamma->val.data();
      if (gamma->requires_grad || beta->requires_grad) {
        for (int t = 0; t < t_len; ++t) {
          const double* grow = g + static_cast<int64_t>(t) * ch;
          const double* zrow = pz + static_cast<int64_t>(t) * ch;
          for (int c = 0; c < ch; ++c) {
            if (gamma->requires_grad) gamma->grad[c] += grow[c] * zrow[c];
            if (beta->requires_grad) beta->grad[c] += grow[c];
          }
        }
      }
      if (!x->requires_grad) return;
      // x[tau] feeds the statistics of every later frame; suffix sums keep
      // that O(T*C) instead of O(T^2*C). With G = g*gamma,
      //   P_t = sum_c G[t,c] / (n_t sigma_t)
      //   Q_t = sum_c G[t,c] z[t,c] / (n_t sigma_t^2)
      //   dx[tau,c] = G[tau,c]/sigma_tau - sum_{t>=tau} P_t
      //               - x[tau,c] * sum_{t>=tau} Q_t + sum_{t>=tau} Q_t mu_t
      std::vector<double> sp(static_cast<size_t>(t_len) + 1, 0.0);
      std::vector<double> sq(static_cast<size_t>(t_len) + 1, 0.0);
      std::vector<double> sqm(static_cast<size_t>(t_len) + 1, 0.0);
      for (int t = t_len - 1; t >= 0; --t) {
        const double* grow = g + static_cast<int64_t>(t) * ch;
        const double* zrow = pz + static_cast<int64_t>(t) * ch;
        double sum_g = 0.0, sum_gz = 0.0;
        for (int c = 0; c < ch; ++c) {
          double gc = grow[c] * pg[c];
          sum_g += gc;
          sum_gz += gc * zrow[c];
        }
        double n = static_cast<double>(t + 1) * ch;
        double s = sigma_saved[static_cast<size_t>(t)];
        double p = sum_g / (n * s);
        double q = sum_gz / (n * s * s);
        sp[static_cast<size_t>(t)] = sp[static_cast<size_t>(t) + 1] + p;
        sq[static_cast<size_t>(t)] = sq[static_cast<size_t>(t) + 1] + q;
        sqm[static_cast<size_t>(t)] = sqm[static_cast<size_t>(t) + 1] + q * mu_saved[static_cast<size_t>(t)];
      }
      const double* px = x->val.data();
      double* dx = x->grad.data();
      for (int t = 0; t < t_len; ++t) {
        const double* grow = g + static_cast<int64_t>(t) * ch;
        const double* xrow = px + static_cast<int64_t>(t) * ch;
        double* dxrow = dx + static_cast<int64_t>(t) * ch;
        double inv = 1.0 / sigma_saved[static_cast<size_t>(t)];
        for (int c = 0; c < ch; ++c) {
          dxrow[c] += grow[c] * pg[c] * inv - sp[static_cast<size_t>(t)] -
                      xrow[c] * sq[static_cast<size_t>(t)] + sqm[static_cast<size_t>(t)];
        }
      }
    };
  }
  return out;
}

Node* Graph::gln(Node* x, Node* gamma, Node* beta, double eps) {
  check_rank(x, 2, "gln");
  int t_len = x->val.dim(0), ch = x->val.dim(1);
  require(gamma->val.rank() == 1 && gamma->val.dim(0) == ch, ErrorKind::Shape,
          "gln: gamma size mismatch");
  require(beta->val.rank() == 1 && beta->val.dim(0) == ch, ErrorKind::Shape,
          "gln: beta size mismatch");
  require(eps > 0.0, ErrorKind::InvalidArgument, "gln: eps must be positive");
  int64_t n = static_cast<int64_t>(t_len) * ch;
  const double* px = x->val.data();
  double s1 = 0.0, s2 = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    s1 += px[i];
    s2 += px[i] * px[i];
  }
  double m = s1 / static_cast<double>(n);
  double var = std::max(s2 / static_cast<double>(n) - m * m, 0.0);
  double sdev = std::sqrt(var + eps);
  double inv = 1.0 / sdev;

  Tensor z({t_len, ch});
  Tensor v({t_len, ch});
  {
    const double* pg = gamma->val.data();
    const double* pb = beta->val.data();
    double* pz = z.data();
    double* pv = v.data();
    for (int t = 0; t < t_len; ++t) {
      for (int c = 0; c < ch; ++c) {
        int64_t i = static_cast<int64_t>(t) * ch + c;
        pz[i] = (px[i] - m) * inv;
        pv[i] = pg[c] * pz[i] + pb[c];
      }
    }
  }
  Node* out = make(std::move(v), x->requires_grad || gamma->requires_grad || beta->requires_grad);
  if (out->requires_grad) {
    Tensor z_saved = std::move(z);
    out->backward = [out, x, gamma, beta, t_len, ch, z_saved, inv, n]() {
      const double* g = out->grad.data();
      const double* pz = z_saved.data();
      const double* pg = gamma->val.data();
      for (int t = 0; t < t_len; ++t) {
        for (int c = 0; c < ch; ++c) {
          int64_t i = static_cast<int64_t>(t) * ch + c;
          if (gamma->requires_grad) gamma->grad[c] += g[i] * pz[i];
          if (beta->requires_grad) beta->grad[c] += g[i];
        }
      }
      if (!x->requires_grad) return;
      double mean_g = 0.0, mean_gz = 0.0;
      for (int t = 0; t < t_len; ++t) {
        for (int c = 0; c < ch; ++c) {
          int64_t i = static_cast<int64_t>(t) * ch + c;
          double gc = g[i] * pg[c];
          mean_g += gc;
          mean_gz += gc * pz[i];
        }
      }
      mean_g /= static_cast<double>(n);
      mean_gz /= static_cast<double>(n);
      double* dx = x->grad.data();
      for (int t = 0; t < t_len; ++t) {
        for (int c = 0; c < ch; ++c) {
          int64_t i = static_cast<int64_t>(t) * ch + c;
          double gc = g[i] * pg[c];
          dx[i] += inv * (gc - mean_g - pz[i] * mean_gz);
        }
      }
    };
  }
  return out;
}

Node* Graph::standardize(Node* x, double eps) {
  require(eps > 0.0, ErrorKind::InvalidArgument, "standardize: eps must be positive");
  int64_t n = x->val.size();
  require(n > 0, ErrorKind::Shape, "standardize: empty input");
  const double* px = x->val.data();
  double s1 = 0.0, s2 = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    s1 += px[i];
    s2 += px[i] * px[i];
  }
  double m = s1 / static_cast<double>(n);
  double var = std::max(s2 / static_cast<double>(n) - m * m, 0.0);
  double inv = 1.0 / std::sqrt(var + eps);
  Tensor v(x->val.shape());
  double* pv = v.data();
  for (int64_t i = 0; i < n; ++i) pv[i] = (px[i] - m) * inv;
  Node* out = make(std::move(v), x->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, x, inv, n]() {
      const double* g = out->grad.data();
      const double* z = out->val.data();
      double mean_g = 0.0, mean_gz = 0.0;
      for (int64_t i = 0; i < n; ++i) {
        mean_g += g[i];
        mean_gz += g[i] * z[i];
      }
      mean_g /= static_cast<double>(n);
      mean_gz /= static_cast<double>(n);
      double* dx = x->grad.data();
      for (int64_t i = 0; i < n; ++i) dx[i] += inv * (g[i] - mean_g - z[i] * mean_gz);
    };
  }
  return out;
}

Node* Graph::conv2d(Node* x, Node* w, int stride_h, int stride_w, int pad_h, int pad_w) {
  check_rank(x, 3, "conv2d");
  // Kernels are stored {out_ch, in_ch, k*k} to stay within rank 3.
  check_rank(w, 3, "conv2d");
  int in_ch = x->val.dim(0), in_h = x->val.dim(1), in_w = x->val.dim(2);
  int out_ch = w->val.dim(0);
  require(w->val.dim(1) == in_ch, ErrorKind::Shape, "conv2d: channel mismatch");
  int k_area = w->val.dim(2);
  int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(k_area))));
  require(k * k == k_area, ErrorKind::Shape, "conv2d: kernel window must be square");
  require(stride_h > 0 && stride_w > 0, ErrorKind::InvalidArgument, "conv2d: bad stride");
  int out_h = (in_h + 2 * pad_h - k) / stride_h + 1;
  int out_w = (in_w + 2 * pad_w - k) / stride_w + 1;
  require(out_h > 0 && out_w > 0, ErrorKind::Shape, "conv2d: output collapses to zero size");

  Tensor v({out_ch, out_h, out_w});
  {
    const double* px = x->val.data();
    const double* pw = w->val.data();
    double* pv = v.data();
    for (int o = 0; o < out_ch; ++o) {
      for (int c = 0; c < in_ch; ++c) {
        const double* wbase = pw + (static_cast<int64_t>(o) * in_ch + c) * k_area;
        const double* xbase = px + static_cast<int64_t>(c) * in_h * in_w;
        double* vbase = pv + static_cast<int64_t>(o) * out_h * out_w;
        for (int i = 0; i < out_h; ++i) {
          for (int j = 0; j < out_w; ++j) {
            double acc = 0.0;
            for (int u = 0; u < k; ++u) {
              int p = i * stride_h + u - pad_h;
              if (p < 0 || p >= in_h) continue;
              for (int vv = 0; vv < k; ++vv) {
                int q = j * stride_w + vv - pad_w;
                if (q < 0 || q >= in_w) continue;
                acc += wbase[u * k + vv] * xbase[static_cast<int64_t>(p) * in_w + q];
              }
            }
            vbase[static_cast<int64_t>(i) * out_w + j] += acc;
          }
        }
      }
    }
  }
  Node* out = make(std::move(v), x->requires_grad || w->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, x, w, in_ch, in_h, in_w, out_ch, out_h, out_w, k, k_area, stride_h,
                     stride_w, pad_h, pad_w]() {
      const double* g = out->grad.data();
      const double* px = x->val.data();
      const double* pw = w->val.data();
      for (int o = 0; o < out_ch; ++o) {
        const double* gbase = g + static_cast<int64_t>(o) * out_h * out_w;
        for (int c = 0; c < in_ch; ++c) {
          const double* wbase = pw + (static_cast<int64_t>(o) * in_ch + c) * k_area;
          const double* xbase = px + static_cast<int64_t>(c) * in_h * in_w;
          double* dwbase =
              w->requires_grad ? w->grad.data() + (static_cast<int64_t>(o) * in_ch + c) * k_area
                               : nullptr;
          double* dxbase =
              x->requires_grad ? x->grad.data() + static_cast<int64_t>(c) * in_h * in_w : nullptr;
          for (int i = 0; i < out_h; ++i) {
            for (int j = 0; j < out_w; ++j) {
              double go = gbase[static_cast<int64_t>(i) * out_w + j];
              if (go == 0.0) continue;
              for (int u = 0; u < k; ++u) {
                int p = i * stride_h + u - pad_h;
                if (p < 0 || p >= in_h) continue;
                for (int vv = 0; vv < k; ++vv) {
                  int q = j * stride_w + vv - pad_w;
                  if (q < 0 || q >= in_w) continue;
                  if (dwbase) dwbase[u * k + vv] += go * xbase[static_cast<int64_t>(p) * in_w + q];
                  if (dxbase) dxbase[static_cast<int64_t>(p) * in_w + q] += go * wbase[u * k + vv];
                }
              }
            }
          }
        }
      }
    };
  }
  return out;
}

Node* Graph::add_channel_bias(Node* x, Node* bias) {
  check_rank(x, 3, "add_channel_bias");
  check_rank(bias, 1, "add_channel_bias");
  int ch = x->val.dim(0), h = x->val.dim(1), w = x->val.dim(2);
  require(bias->val.dim(0) == ch, ErrorKind::Shape, "add_channel_bias: size mismatch");
  Tensor v({ch, h, w});
  const double* px = x->val.data();
  const double* pb = bias->val.data();
  double* pv = v.data();
  int64_t plane = static_cast<int64_t>(h) * w;
  for (int c = 0; c < ch; ++c) {
    for (int64_t i = 0; i < plane; ++i) pv[c * plane + i] = px[c * plane + i] + pb[c];
  }
  Node* out = make(std::move(v), x->requires_grad || bias->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, x, bias, ch, plane]() {
      const double* g = out->grad.data();
      if (x->requires_grad) {
        double* dx = x->grad.data();
        for (int64_t i = 0; i < static_cast<int64_t>(ch) * plane; ++i) dx[i] += g[i];
      }
      if (bias->requires_grad) {
        double* db = bias->grad.data();
        for (int c = 0; c < ch; ++c) {
          double acc = 0.0;
          for (int64_t i = 0; i < plane; ++i) acc += g[c * plane + i];
          db[c] += acc;
        }
      }
    };
  }
  return out;
}

Node* Graph::gap(Node* x) {
  check_rank(x, 3, "gap");
  int ch = x->val.dim(0), h = x->val.dim(1), w = x->val.dim(2);
  int64_t plane = static_cast<int64_t>(h) * w;
  Tensor v({1, ch});
  const double* px = x->val.data();
  for (int c = 0; c < ch; ++c) {
    double acc = 0.0;
    for (int64_t i = 0; i < plane; ++i) acc += px[c * plane + i];
    v[c] = acc / static_cast<double>(plane);
  }
  Node* out = make(std::move(v), x->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, x, ch, plane]() {
      const double* g = out->grad.data();
      double* dx = x->grad.data();
      for (int c = 0; c < ch; ++c) {
        double gc = g[c] / static_cast<double>(plane);
        for (int64_t i = 0; i < plane; ++i) dx[c * plane + i] += gc;
      }
    };
  }
  return out;
}

Node* Graph::reshape(Node* x, std::vector<int> shape) {
  int64_t n = Tensor::count(shape);
  require(n == x->val.size(), ErrorKind::Shape,
          "reshape: element count mismatch " + Tensor::shape_str(x->val.shape()) + " -> " +
              Tensor::shape_str(shape));
  Tensor v(std::move(shape), x->val.vec());
  Node* out = make(std::move(v), x->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, x]() {
      const double* g = out->grad.data();
      double* dx = x->grad.data();
      for (int64_t i = 0; i < out->grad.size(); ++i) dx[i] += g[i];
    };
  }
  return out;
}

Node* Graph::row_slice(Node* x, int t) {
  check_rank(x, 2, "row_slice");
  int rows = x->val.dim(0), cols = x->val.dim(1);
  require(t >= 0 && t < rows, ErrorKind::Shape, "row_slice: row out of range");
  Tensor v({1, cols});
  const double* src = x->val.data() + static_cast<int64_t>(t) * cols;
  std::copy(src, src + cols, v.data());
  Node* out = make(std::move(v), x->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, x, t, cols]() {
      const double* g = out->grad.data();
      double* dst = x->grad.data() + static_cast<int64_t>(t) * cols;
      for (int j = 0; j < cols; ++j) dst[j] += g[j];
    };
  }
  return out;
}

Node* Graph::col_slice(Node* x, int start, int len) {
  check_rank(x, 2, "col_slice");
  int rows = x->val.dim(0), cols = x->val.dim(1);
  require(start >= 0 && len > 0 && start + len <= cols, ErrorKind::Shape,
          "col_slice: range out of bounds");
  Tensor v({rows, len});
  const double* px = x->val.data();
  double* pv = v.data();
  for (int i = 0; i < rows; ++i) {
    std::copy(px + static_cast<int64_t>(i) * cols + start,
              px + static_cast<int64_t>(i) * cols + start + len,
              pv + static_cast<int64_t>(i) * len);
  }
  Node* out = make(std::move(v), x->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, x, rows, cols, start, len]() {
      const double* g = out->grad.data();
      double* dx = x->grad.data();
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < len; ++j) {
          dx[static_cast<int64_t>(i) * cols + start + j] += g[static_cast<int64_t>(i) * len + j];
        }
      }
    };
  }
  return out;
}

Node* Graph::concat_cols(Node* a, Node* b) {
  check_rank(a, 2, "concat_cols");
  check_rank(b, 2, "concat_cols");
  int rows = a->val.dim(0);
  require(b->val.dim(0) == rows, ErrorKind::Shape, "concat_cols: row count mismatch");
  int ca = a->val.dim(1), cb = b->val.dim(1);
  Tensor v({rows, ca + cb});
  const double* pa = a->val.data();
  const double* pb = b->val.data();
  double* pv = v.data();
  for (int i = 0; i < rows; ++i) {
    std::copy(pa + static_cast<int64_t>(i) * ca, pa + static_cast<int64_t>(i + 1) * ca,
              pv + static_cast<int64_t>(i) * (ca + cb));
    std::copy(pb + static_cast<int64_t>(i) * cb, pb + static_cast<int64_t>(i + 1) * cb,
              pv + static_cast<int64_t>(i) * (ca + cb) + ca);
  }
  Node* out = make(std::move(v), a->requires_grad || b->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, a, b, rows, ca, cb]() {
      const double* g = out->grad.data();
      for (int i = 0; i < rows; ++i) {
        const double* grow = g + static_cast<int64_t>(i) * (ca + cb);
        if (a->requires_grad) {
          double* da = a->grad.data() + static_cast<int64_t>(i) * ca;
          for (int j = 0; j < ca; ++j) da[j] += grow[j];
        }
        if (b->requires_grad) {
          double* db = b->grad.data() + static_cast<int64_t>(i) * cb;
          for (int j = 0; j < cb; ++j) db[j] += grow[ca + j];
        }
      }
    };
  }
  return out;
}

Node* Graph::stack_rows(const std::vector<Node*>& rows) {
  require(!rows.empty(), ErrorKind::InvalidArgument, "stack_rows: no rows");
  int cols = rows[0]->val.dim(1);
  bool rg = false;
  for (Node* r : rows) {
    check_rank(r, 2, "stack_rows");
    require(r->val.dim(0) == 1 && r->val.dim(1) == cols, ErrorKind::Shape,
            "stack_rows: every row must be {1,C} of equal width");
    rg = rg || r->requires_grad;
  }
  int t_len = static_cast<int>(rows.size());
  Tensor v({t_len, cols});
  double* pv = v.data();
  for (int t = 0; t < t_len; ++t) {
    std::copy(rows[static_cast<size_t>(t)]->val.data(),
              rows[static_cast<size_t>(t)]->val.data() + cols,
              pv + static_cast<int64_t>(t) * cols);
  }
  Node* out = make(std::move(v), rg);
  if (out->requires_grad) {
    std::vector<Node*> rows_copy = rows;
    out->backward = [out, rows_copy, cols]() {
      const double* g = out->grad.data();
      for (size_t t = 0; t < rows_copy.size(); ++t) {
        Node* r = rows_copy[t];
        if (!r->requires_grad) continue;
        double* dr = r->grad.data();
        const double* grow = g + static_cast<int64_t>(t) * cols;
        for (int j = 0; j < cols; ++j) dr[j] += grow[j];
      }
    };
  }
  return out;
}

namespace {

// Shared softmax backward: dx = y .* (g - sum(y .* g)).
void softmax_backward(const double* y, const double* g, double* dx, int64_t n) {
  double dot = 0.0;
  for (int64_t i = 0; i < n; ++i) dot += y[i] * g[i];
  for (int64_t i = 0; i < n; ++i) dx[i] += y[i] * (g[i] - dot);
}

Tensor softmax_flat(const Tensor& x) {
  Tensor v(x.shape());
  double m = x[0];
  for (int64_t i = 1; i < x.size(); ++i) m = std::max(m, x[i]);
  double z = 0.0;
  for (int64_t i = 0; i < x.size(); ++i) {
    v[i] = std::exp(x[i] - m);
    z += v[i];
  }
  for (int64_t i = 0; i < x.size(); ++i) v[i] /= z;
  return v;
}

}  // namespace

Node* Graph::softmax_time(Node* x) {
  check_rank(x, 2, "softmax_time");
  require(x->val.dim(1) == 1, ErrorKind::Shape, "softmax_time: expected a {T,1} column");
  Tensor v = softmax_flat(x->val);
  Node* out = make(std::move(v), x->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, x]() {
      softmax_backward(out->val.data(), out->grad.data(), x->grad.data(), x->val.size());
    };
  }
  return out;
}

Node* Graph::softmax_row(Node* x) {
  check_rank(x, 2, "softmax_row");
  require(x->val.dim(0) == 1, ErrorKind::Shape, "softmax_row: expected a {1,C} row");
  Tensor v = softmax_flat(x->val);
  Node* out = make(std::move(v), x->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, x]() {
      softmax_backward(out->val.data(), out->grad.data(), x->grad.data(), x->val.size());
    };
  }
  return out;
}

Node* Graph::ce_from_logits(Node* logits, int label) {
  check_rank(logits, 2, "ce_from_logits");
  require(logits->val.dim(0) == 1, ErrorKind::Shape, "ce_from_logits: expected a {1,C} row");
  int classes = logits->val.dim(1);
  require(label >= 0 && label < classes, ErrorKind::InvalidArgument,
          "ce_from_logits: label out of range");
  const double* l = logits->val.data();
  double m = l[0];
  for (int i = 1; i < classes; ++i) m = std::max(m, l[i]);
  double z = 0.0;
  for (int i = 0; i < classes; ++i) z += std::exp(l[i] - m);
  double loss = m + std::log(z) - l[label];
  Node* out = make(Tensor::scalar(loss), logits->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, logits, label, classes, m, z]() {
      double g = out->grad[0];
      const double* l2 = logits->val.data();
      double* dl = logits->grad.data();
      for (int i = 0; i < classes; ++i) {
        double p = std::exp(l2[i] - m) / z;
        dl[i] += g * (p - (i == label ? 1.0 : 0.0));
      }
    };
  }
  return out;
}

Node* Graph::sum_squares(Node* a) {
  const double* pa = a->val.data();
  double acc = 0.0;
  for (int64_t i = 0; i < a->val.size(); ++i) acc += pa[i] * pa[i];
  Node* out = make(Tensor::scalar(acc), a->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, a]() {
      double g = out->grad[0];
      const double* pa2 = a->val.data();
      double* da = a->grad.data();
      for (int64_t i = 0; i < a->val.size(); ++i) da[i] += 2.0 * g * pa2[i];
    };
  }
  return out;
}

Node* Graph::blend(Node* x, Node* e, Node* alpha) {
  check_same_shape(x, e, "blend");
  require(alpha->val.size() == 1, ErrorKind::Shape, "blend: alpha must hold a single value");
  double a = alpha->val[0];
  Tensor v(x->val.shape());
  const double* px = x->val.data();
  const double* pe = e->val.data();
  double* pv = v.data();
  for (int64_t i = 0; i < v.size(); ++i) pv[i] = px[i] + a * (pe[i] - px[i]);
  Node* out = make(std::move(v), x->requires_grad || e->requires_grad || alpha->requires_grad);
  if (out->requires_grad) {
    out->backward = [out, x, e, alpha, a]() {
      const double* g = out->grad.data();
      int64_t n = out->grad.size();
      if (x->requires_grad) {
        double* dx = x->grad.data();
        for (int64_t i = 0; i < n; ++i) dx[i] += g[i] * (1.0 - a);
      }
      if (e->requires_grad) {
        double* de = e->grad.data();
        for (int64_t i = 0; i < n; ++i) de[i] += g[i] * a;
      }
      if (alpha->requires_grad) {
        const double* px2 = x->val.data();
        const double* pe2 = e->val.data();
        double acc = 0.0;
        for (int64_t i = 0; i < n; ++i) acc += g[i] * (pe2[i] - px2[i]);
        alpha->grad[0] += acc;
      }
    };
  }
  return out;
}

}  // namespace sekws
