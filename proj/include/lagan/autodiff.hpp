#pragma once

// Per-forward-pass reverse-mode tape. Each recorded node is a whole-tensor
// layer operation; backward() walks the tape in reverse and accumulates
// gradients into parent nodes and into bound parameter tensors.

#include <functional>
#include <utility>
#include <vector>

#include "lagan/kernels.hpp"
#include "lagan/tensor.hpp"

namespace lagan::nn {

class Tape {
 public:
  int leaf(Tensor value, bool needs_grad = false) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  /// Leaf bound to an external trainable tensor; backward() accumulates the
  /// leaf gradient into the tensor's own grad buffer.
  int param(Tensor* p) {
    int id = leaf(*p, true);
    nodes_[id].backprop = [p](Tape& t, int self) {
      p->ensure_grad();
      const Tensor& g = t.nodes_[self].grad;
      double* dst = p->grad_data();
      for (int64_t i = 0; i < g.numel(); ++i) dst[i] += g[i];
    };
    return id;
  }

  int constant(Tensor value) { return leaf(std::move(value), false); }

  const Tensor& value(int id) const { return nodes_.at(id).value; }
  const Tensor& grad(int id) const { return nodes_.at(id).grad; }
  bool empty() const { return nodes_.empty(); }

  int conv2d(int x, int w, int b, Border border, int64_t stride) {
    Tensor out = conv2d_forward(value(x), value(w), b >= 0 ? &value(b) : nullptr, border, stride);
    int id = make(std::move(out), {x, w, b});
    nodes_[id].backprop = [x, w, b, border, stride](Tape& t, int self) {
      conv2d_backward(t.value(x), t.value(w), border, stride, t.nodes_[self].grad,
                      t.grad_dst(x), t.grad_dst(w), b >= 0 ? t.grad_dst(b) : nullptr);
    };
    return id;
  }

  int local2d(int x, int w, int b, int64_t stride) {
    Tensor out = local2d_forward(value(x), value(w), b >= 0 ? &value(b) : nullptr, stride);
    int id = make(std::move(out), {x, w, b});
    nodes_[id].backprop = [x, w, b, stride](Tape& t, int self) {
      local2d_backward(t.value(x), t.value(w), stride, t.nodes_[self].grad, t.grad_dst(x),
                       t.grad_dst(w), b >= 0 ? t.grad_dst(b) : nullptr);
    };
    return id;
  }

  int batchnorm(int x, int gamma, int beta, double epsilon, bool train, Tensor* running_mean,
                Tensor* running_var, double momentum, bool update_running) {
    BatchNormSaved saved;
    Tensor out = batchnorm_forward(value(x), value(gamma), value(beta), epsilon, train,
                                   running_mean, running_var, momentum, update_running, &saved);
    int id = make(std::move(out), {x, gamma, beta});
    nodes_[id].backprop = [x, gamma, beta, train, saved = std::move(saved)](Tape& t, int self) {
      batchnorm_backward(t.value(x), t.value(gamma), saved, train, t.nodes_[self].grad,
                         t.grad_dst(x), t.grad_dst(gamma), t.grad_dst(beta));
    };
    return id;
  }

  int upsample(int x) {
    int id = make(upsample2x(value(x)), {x});
    nodes_[id].backprop = [x](Tape& t, int self) {
      if (Tensor* gi = t.grad_dst(x)) upsample2x_backward(t.nodes_[self].grad, gi);
    };
    return id;
  }

  int act(int x, Act kind, double alpha = 0.0) {
    int id = make(activation(value(x), kind, alpha), {x});
    nodes_[id].backprop = [x, kind, alpha](Tape& t, int self) {
      if (Tensor* gi = t.grad_dst(x))
        activation_backward(t.value(x), t.nodes_[self].value, kind, alpha, t.nodes_[self].grad,
                            gi);
    };
    return id;
  }

  int dense(int x, int w, int b) {
    Tensor out = dense_forward(value(x), value(w), b >= 0 ? &value(b) : nullptr);
    int id = make(std::move(out), {x, w, b});
    nodes_[id].backprop = [x, w, b](Tape& t, int self) {
      dense_backward(t.value(x), t.value(w), t.nodes_[self].grad, t.grad_dst(x), t.grad_dst(w),
                     b >= 0 ? t.grad_dst(b) : nullptr);
    };
    return id;
  }

  int reshape(int x, std::vector<int64_t> shape) {
    require(Tensor::count(shape) == value(x).numel(), ErrorCategory::dimension,
            "reshape must preserve element count");
    Tensor out(shape, value(x).values());
    int id = make(std::move(out), {x});
    nodes_[id].backprop = [x](Tape& t, int self) {
      if (Tensor* gi = t.grad_dst(x)) {
        const Tensor& g = t.nodes_[self].grad;
        for (int64_t i = 0; i < g.numel(); ++i) (*gi)[i] += g[i];
      }
    };
    return id;
  }

  int concat_cols(int a, int b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require(ta.rank() == 2 && tb.rank() == 2 && ta.extent(0) == tb.extent(0),
            ErrorCategory::dimension, "concat_cols needs two [B,*] tensors");
    const int64_t B = ta.extent(0), A1 = ta.extent(1), A2 = tb.extent(1);
    Tensor out({B, A1 + A2});
    for (int64_t i = 0; i < B; ++i) {
      for (int64_t k = 0; k < A1; ++k) out.at(i, k) = ta.at(i, k);
      for (int64_t k = 0; k < A2; ++k) out.at(i, A1 + k) = tb.at(i, k);
    }
    int id = make(std::move(out), {a, b});
    nodes_[id].backprop = [a, b, A1, A2, B](Tape& t, int self) {
      const Tensor& g = t.nodes_[self].grad;
      if (Tensor* ga = t.grad_dst(a))
        for (int64_t i = 0; i < B; ++i)
          for (int64_t k = 0; k < A1; ++k) ga->at(i, k) += g.at(i, k);
      if (Tensor* gb = t.grad_dst(b))
        for (int64_t i = 0; i < B; ++i)
          for (int64_t k = 0; k < A2; ++k) gb->at(i, k) += g.at(i, A1 + k);
    };
    return id;
  }

  int minibatch(int x, int kernel) {
    Tensor saved_m;
    Tensor out = minibatch_disc(value(x), value(kernel), &saved_m);
    int id = make(std::move(out), {x, kernel});
    nodes_[id].backprop = [x, kernel, saved_m = std::move(saved_m)](Tape& t, int self) {
      minibatch_disc_backward(t.value(x), t.value(kernel), saved_m, t.nodes_[self].grad,
                              t.grad_dst(x), t.grad_dst(kernel));
    };
    return id;
  }

  int hadamard(int z, std::vector<int> classes, int table) {
    Tensor out = hadamard_embed(value(z), classes, value(table));
    int id = make(std::move(out), {z, table});
    nodes_[id].backprop = [z, table, classes = std::move(classes)](Tape& t, int self) {
      hadamard_embed_backward(t.value(z), classes, t.value(table), t.nodes_[self].grad,
                              t.grad_dst(z), t.grad_dst(table));
    };
    return id;
  }

  /// Mean binary cross-entropy of probabilities `p` against fixed targets.
  /// Probabilities are clamped to [eps, 1-eps] so flipped targets on
  /// saturated predictions stay finite.
  int bce_mean(int p, Tensor targets, double eps = 1e-7) {
    const Tensor& prob = value(p);
    require(prob.numel() == targets.numel(), ErrorCategory::dimension,
            "bce targets must match prediction count");
    const int64_t n = prob.numel();
    double loss = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      double pc = std::min(std::max(prob[i], eps), 1.0 - eps);
      loss -= targets[i] * std::log(pc) + (1.0 - targets[i]) * std::log(1.0 - pc);
    }
    int id = make(Tensor::scalar(loss / static_cast<double>(n)), {p});
    nodes_[id].backprop = [p, eps, targets = std::move(targets), n](Tape& t, int self) {
      Tensor* gp = t.grad_dst(p);
      if (!gp) return;
      const double g = t.nodes_[self].grad[0] / static_cast<double>(n);
      const Tensor& prob = t.value(p);
      for (int64_t i = 0; i < n; ++i) {
        if (prob[i] <= eps || prob[i] >= 1.0 - eps) continue;  // clamp region
        (*gp)[i] += g * (prob[i] - targets[i]) / (prob[i] * (1.0 - prob[i]));
      }
    };
    return id;
  }

  int add(int a, int b) {
    require(value(a).same_shape(value(b)), ErrorCategory::dimension,
            "add requires matching shapes");
    Tensor out(value(a).shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = value(a)[i] + value(b)[i];
    int id = make(std::move(out), {a, b});
    nodes_[id].backprop = [a, b](Tape& t, int self) {
      const Tensor& g = t.nodes_[self].grad;
      if (Tensor* ga = t.grad_dst(a))
        for (int64_t i = 0; i < g.numel(); ++i) (*ga)[i] += g[i];
      if (Tensor* gb = t.grad_dst(b))
        for (int64_t i = 0; i < g.numel(); ++i) (*gb)[i] += g[i];
    };
    return id;
  }

  int sum_all(int x) {
    double s = 0.0;
    for (int64_t i = 0; i < value(x).numel(); ++i) s += value(x)[i];
    int id = make(Tensor::scalar(s), {x});
    nodes_[id].backprop = [x](Tape& t, int self) {
      if (Tensor* gi = t.grad_dst(x)) {
        double g = t.nodes_[self].grad[0];
        for (int64_t i = 0; i < gi->numel(); ++i) (*gi)[i] += g;
      }
    };
    return id;
  }

  /// Reverse sweep from a recorded scalar loss. Every node reachable below
  /// the loss receives its gradient; bound parameters accumulate into their
  /// grad buffers.
  void backward(int loss_node) {
    require(!nodes_.empty(), ErrorCategory::state, "backward called before any forward pass");
    require(loss_node >= 0 && loss_node < static_cast<int>(nodes_.size()), ErrorCategory::state,
            "backward target is not a recorded node");
    require(nodes_[loss_node].value.numel() == 1, ErrorCategory::state,
            "backward requires a scalar loss");
    for (auto& n : nodes_) {
      n.grad = Tensor(n.value.shape());
    }
    nodes_[loss_node].grad[0] = 1.0;
    for (int i = loss_node; i >= 0; --i) {
      if (nodes_[i].backprop && nodes_[i].needs_grad) nodes_[i].backprop(*this, i);
    }
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    std::function<void(Tape&, int)> backprop;
  };

  int make(Tensor value, std::initializer_list<int> parents) {
    Node n;
    n.value = std::move(value);
    for (int p : parents)
      if (p >= 0 && nodes_[p].needs_grad) n.needs_grad = true;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  /// Gradient destination for a parent node, or nullptr when the parent does
  /// not need gradients (lets closures skip dead work, e.g. frozen weights).
  Tensor* grad_dst(int id) { return nodes_[id].needs_grad ? &nodes_[id].grad : nullptr; }

  std::vector<Node> nodes_;
};

}  // namespace lagan::nn
