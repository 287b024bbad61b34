#pragma once

// Layer arithmetic for the network stack: forward kernels and their
// hand-derived backward passes. Inner loops are arranged as contiguous dot
// products / axpys over packed buffers so the compiler can vectorize them.
//
// Threading: loops parallelize over disjoint output slices, and weight
// gradients accumulate into per-thread partials that are reduced in fixed
// thread order, so results are bit-identical for any thread count.

#include <cmath>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lagan/error.hpp"
#include "lagan/tensor.hpp"

namespace lagan::nn {

inline int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// noinline: one fixed instruction sequence per primitive, so summation order
// cannot vary between call sites (bit-identical results across layers).
__attribute__((noinline)) inline double dot(const double* a, const double* b, int64_t n) {
  double s = 0.0;
#pragma omp simd reduction(+ : s)
  for (int64_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

__attribute__((noinline)) inline void axpy(double alpha, const double* x, double* y, int64_t n) {
#pragma omp simd
  for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

enum class Border { valid, same };

enum class Act { relu, leaky_relu, sigmoid };

enum class LayerKind {
  dense,
  conv2d,
  local2d,
  batchnorm,
  upsample2x,
  relu,
  leaky_relu,
  sigmoid,
  minibatch_disc,
  hadamard_embed,
};

/// Hyperparameters of one layer; used to describe and validate architectures.
struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  int64_t field = 1;       // receptive field F
  int64_t stride = 1;      // stride S
  int64_t maps = 1;        // feature maps N
  Border border = Border::valid;
  double alpha = 0.0;      // leaky-relu negative slope
  int64_t kernels = 0;     // minibatch-discrimination kernel count B
  int64_t kernel_dim = 0;  // minibatch-discrimination kernel dimension C
  bool bias = true;

  void validate(int64_t input_extent = -1) const {
    require(field >= 1 && stride >= 1 && maps >= 1, ErrorCategory::dimension,
            "layer requires F >= 1, S >= 1, N >= 1");
    if (border == Border::valid && input_extent >= 0)
      require(input_extent >= field, ErrorCategory::dimension,
              "valid border requires input extent >= receptive field");
  }
};

/// Output extent of a square conv/local layer: W = (L - F) / S + 1 in valid
/// mode (integer division), W = L in same mode (stride 1, odd field).
inline int64_t conv_output_extent(int64_t L, int64_t F, int64_t S, Border border) {
  require(F >= 1 && S >= 1, ErrorCategory::dimension, "field and stride must be >= 1");
  if (border == Border::same) {
    require(S == 1, ErrorCategory::dimension, "same border supports stride 1 only");
    require(F % 2 == 1, ErrorCategory::dimension, "same border requires an odd field");
    return L;
  }
  require(L >= F, ErrorCategory::dimension, "valid border requires L >= F");
  return (L - F) / S + 1;
}

namespace detail {

// Copies the FxFxC patch feeding output location (oi, oj) into a contiguous
// buffer; out-of-range rows/columns (same-mode padding) become zeros.
inline void gather_patch(const double* in, int64_t L, int64_t C, int64_t oi, int64_t oj,
                         int64_t F, int64_t S, int64_t pad, double* patch) {
  for (int64_t f1 = 0; f1 < F; ++f1) {
    int64_t y = oi * S + f1 - pad;
    double* dst = patch + f1 * F * C;
    if (y < 0 || y >= L) {
      for (int64_t k = 0; k < F * C; ++k) dst[k] = 0.0;
      continue;
    }
    for (int64_t f2 = 0; f2 < F; ++f2) {
      int64_t x = oj * S + f2 - pad;
      if (x < 0 || x >= L) {
        for (int64_t c = 0; c < C; ++c) dst[f2 * C + c] = 0.0;
      } else {
        const double* src = in + (y * L + x) * C;
        for (int64_t c = 0; c < C; ++c) dst[f2 * C + c] = src[c];
      }
    }
  }
}

inline void scatter_patch_add(double* in_grad, int64_t L, int64_t C, int64_t oi, int64_t oj,
                              int64_t F, int64_t S, int64_t pad, const double* patch) {
  for (int64_t f1 = 0; f1 < F; ++f1) {
    int64_t y = oi * S + f1 - pad;
    if (y < 0 || y >= L) continue;
    for (int64_t f2 = 0; f2 < F; ++f2) {
      int64_t x = oj * S + f2 - pad;
      if (x < 0 || x >= L) continue;
      double* dst = in_grad + (y * L + x) * C;
      const double* src = patch + (f1 * F + f2) * C;
      for (int64_t c = 0; c < C; ++c) dst[c] += src[c];
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// conv2d: input [B,L,L,Cin], weights [F,F,Cin,N], bias [N] -> [B,W,W,N]
// ---------------------------------------------------------------------------

inline void check_conv_shapes(const Tensor& input, const Tensor& weights, const Tensor* bias) {
  require(input.rank() == 4, ErrorCategory::dimension, "conv2d input must be rank 4");
  require(input.extent(1) == input.extent(2), ErrorCategory::dimension,
          "conv2d input must be square");
  require(weights.rank() == 4, ErrorCategory::dimension, "conv2d weights must be rank 4");
  require(weights.extent(0) == weights.extent(1), ErrorCategory::dimension,
          "conv2d field must be square");
  require(weights.extent(2) == input.extent(3), ErrorCategory::dimension,
          "conv2d weight channel count does not match input channels");
  if (bias)
    require(bias->rank() == 1 && bias->extent(0) == weights.extent(3), ErrorCategory::dimension,
            "conv2d bias must have one entry per feature map");
}

inline Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor* bias,
                             Border border, int64_t stride) {
  check_conv_shapes(input, weights, bias);
  const int64_t B = input.extent(0), L = input.extent(1), C = input.extent(3);
  const int64_t F = weights.extent(0), N = weights.extent(3);
  const int64_t W = conv_output_extent(L, F, stride, border);
  const int64_t pad = border == Border::same ? (F - 1) / 2 : 0;
  const int64_t FFC = F * F * C;

  // Pack weights as [n][f1,f2,c] so each output map is one contiguous dot.
  std::vector<double> wpack(static_cast<size_t>(N * FFC));
  for (int64_t f1 = 0; f1 < F; ++f1)
    for (int64_t f2 = 0; f2 < F; ++f2)
      for (int64_t c = 0; c < C; ++c)
        for (int64_t n = 0; n < N; ++n)
          wpack[n * FFC + (f1 * F + f2) * C + c] = weights.at(f1, f2, c, n);

  Tensor out({B, W, W, N});
  const double* in = input.data();
  double* o = out.data();
#pragma omp parallel
  {
    std::vector<double> patch(static_cast<size_t>(FFC));
#pragma omp for schedule(static)
    for (int64_t b = 0; b < B; ++b) {
      const double* inb = in + b * L * L * C;
      double* ob = o + b * W * W * N;
      for (int64_t i = 0; i < W; ++i)
        for (int64_t j = 0; j < W; ++j) {
          detail::gather_patch(inb, L, C, i, j, F, stride, pad, patch.data());
          double* op = ob + (i * W + j) * N;
          for (int64_t n = 0; n < N; ++n)
            op[n] = dot(patch.data(), wpack.data() + n * FFC, FFC) + (bias ? (*bias)[n] : 0.0);
        }
    }
  }
  return out;
}

inline void conv2d_backward(const Tensor& input, const Tensor& weights, Border border,
                            int64_t stride, const Tensor& gout, Tensor* ginput,
                            Tensor* gweights, Tensor* gbias) {
  const int64_t B = input.extent(0), L = input.extent(1), C = input.extent(3);
  const int64_t F = weights.extent(0), N = weights.extent(3);
  const int64_t W = conv_output_extent(L, F, stride, border);
  const int64_t pad = border == Border::same ? (F - 1) / 2 : 0;
  const int64_t FFC = F * F * C;

  std::vector<double> wpack;
  if (ginput) {
    wpack.resize(static_cast<size_t>(N * FFC));
    for (int64_t f1 = 0; f1 < F; ++f1)
      for (int64_t f2 = 0; f2 < F; ++f2)
        for (int64_t c = 0; c < C; ++c)
          for (int64_t n = 0; n < N; ++n)
            wpack[n * FFC + (f1 * F + f2) * C + c] = weights.at(f1, f2, c, n);
  }

  const int T = thread_count();
  std::vector<std::vector<double>> gw_part, gb_part;
  if (gweights) gw_part.assign(T, std::vector<double>(static_cast<size_t>(N * FFC), 0.0));
  if (gbias) gb_part.assign(T, std::vector<double>(static_cast<size_t>(N), 0.0));

  const double* in = input.data();
  const double* g = gout.data();
#pragma omp parallel num_threads(T)
  {
#ifdef _OPENMP
    const int t = omp_get_thread_num();
#else
    const int t = 0;
#endif
    std::vector<double> patch(static_cast<size_t>(FFC));
    std::vector<double> gpatch(static_cast<size_t>(FFC));
    for (int64_t b = t; b < B; b += T) {
      const double* inb = in + b * L * L * C;
      const double* gb = g + b * W * W * N;
      double* gib = ginput ? ginput->data() + b * L * L * C : nullptr;
      for (int64_t i = 0; i < W; ++i)
        for (int64_t j = 0; j < W; ++j) {
          const double* gp = gb + (i * W + j) * N;
          if (gweights || ginput)
            detail::gather_patch(inb, L, C, i, j, F, stride, pad, patch.data());
          if (ginput) {
            for (int64_t k = 0; k < FFC; ++k) gpatch[k] = 0.0;
            for (int64_t n = 0; n < N; ++n)
              axpy(gp[n], wpack.data() + n * FFC, gpatch.data(), FFC);
            detail::scatter_patch_add(gib, L, C, i, j, F, stride, pad, gpatch.data());
          }
          if (gweights) {
            double* gw = gw_part[t].data();
            for (int64_t n = 0; n < N; ++n) axpy(gp[n], patch.data(), gw + n * FFC, FFC);
          }
          if (gbias)
            for (int64_t n = 0; n < N; ++n) gb_part[t][n] += gp[n];
        }
    }
  }

  if (gweights) {
    for (int tt = 1; tt < T; ++tt)
      for (size_t k = 0; k < gw_part[0].size(); ++k) gw_part[0][k] += gw_part[tt][k];
    for (int64_t f1 = 0; f1 < F; ++f1)
      for (int64_t f2 = 0; f2 < F; ++f2)
        for (int64_t c = 0; c < C; ++c)
          for (int64_t n = 0; n < N; ++n)
            gweights->at(f1, f2, c, n) += gw_part[0][n * FFC + (f1 * F + f2) * C + c];
  }
  if (gbias)
    for (int64_t n = 0; n < N; ++n) {
      double s = 0.0;
      for (int tt = 0; tt < T; ++tt) s += gb_part[tt][n];
      (*gbias)[n] += s;
    }
}

// ---------------------------------------------------------------------------
// local2d: input [B,L,L,Cin], weights [W,W,F,F,Cin,N], bias [W,W,N] (optional)
// -> [B,W,W,N]. Valid border; one independent filter bank per output location.
// ---------------------------------------------------------------------------

inline void check_local_shapes(const Tensor& input, const Tensor& weights, const Tensor* bias,
                               int64_t stride) {
  require(input.rank() == 4, ErrorCategory::dimension, "local2d input must be rank 4");
  require(input.extent(1) == input.extent(2), ErrorCategory::dimension,
          "local2d input must be square");
  require(weights.rank() == 6, ErrorCategory::dimension, "local2d weights must be rank 6");
  require(weights.extent(0) == weights.extent(1) && weights.extent(2) == weights.extent(3),
          ErrorCategory::dimension, "local2d weight banks must be square");
  require(weights.extent(4) == input.extent(3), ErrorCategory::dimension,
          "local2d weight channel count does not match input channels");
  const int64_t L = input.extent(1), W = weights.extent(0), F = weights.extent(2);
  require(L >= F, ErrorCategory::dimension, "valid border requires L >= F");
  require((L - F) % stride == 0, ErrorCategory::dimension,
          "stride/field combination does not tile the input");
  require(W == (L - F) / stride + 1, ErrorCategory::dimension,
          "local2d weight bank count does not match output extent");
  if (bias)
    require(bias->rank() == 3 && bias->extent(0) == W && bias->extent(1) == W &&
                bias->extent(2) == weights.extent(5),
            ErrorCategory::dimension, "local2d bias must be [W,W,N]");
}

inline Tensor local2d_forward(const Tensor& input, const Tensor& weights, const Tensor* bias,
                              int64_t stride) {
  check_local_shapes(input, weights, bias, stride);
  const int64_t B = input.extent(0), L = input.extent(1), C = input.extent(3);
  const int64_t W = weights.extent(0), F = weights.extent(2), N = weights.extent(5);
  const int64_t FFC = F * F * C;

  // Pack per-location banks as [i,j][n][f1,f2,c].
  std::vector<double> wpack(static_cast<size_t>(W * W * N * FFC));
  {
    const double* w = weights.data();
    for (int64_t ij = 0; ij < W * W; ++ij)
      for (int64_t k = 0; k < FFC; ++k)
        for (int64_t n = 0; n < N; ++n)
          wpack[(ij * N + n) * FFC + k] = w[(ij * FFC + k) * N + n];
  }

  Tensor out({B, W, W, N});
  const double* in = input.data();
  double* o = out.data();
#pragma omp parallel
  {
    std::vector<double> patch(static_cast<size_t>(FFC));
#pragma omp for schedule(static)
    for (int64_t b = 0; b < B; ++b) {
      const double* inb = in + b * L * L * C;
      double* ob = o + b * W * W * N;
      for (int64_t i = 0; i < W; ++i)
        for (int64_t j = 0; j < W; ++j) {
          detail::gather_patch(inb, L, C, i, j, F, stride, 0, patch.data());
          const double* wp = wpack.data() + (i * W + j) * N * FFC;
          double* op = ob + (i * W + j) * N;
          for (int64_t n = 0; n < N; ++n)
            op[n] = dot(patch.data(), wp + n * FFC, FFC) +
                    (bias ? bias->at(i, j, n) : 0.0);
        }
    }
  }
  return out;
}

inline void local2d_backward(const Tensor& input, const Tensor& weights, int64_t stride,
                             const Tensor& gout, Tensor* ginput, Tensor* gweights,
                             Tensor* gbias) {
  const int64_t B = input.extent(0), L = input.extent(1), C = input.extent(3);
  const int64_t W = weights.extent(0), F = weights.extent(2), N = weights.extent(5);
  const int64_t FFC = F * F * C;

  std::vector<double> wpack;
  if (ginput) {
    wpack.resize(static_cast<size_t>(W * W * N * FFC));
    const double* w = weights.data();
    for (int64_t ij = 0; ij < W * W; ++ij)
      for (int64_t k = 0; k < FFC; ++k)
        for (int64_t n = 0; n < N; ++n)
          wpack[(ij * N + n) * FFC + k] = w[(ij * FFC + k) * N + n];
  }

  const int T = thread_count();
  std::vector<std::vector<double>> gw_part, gb_part;
  if (gweights) gw_part.assign(T, std::vector<double>(static_cast<size_t>(W * W * N * FFC), 0.0));
  if (gbias) gb_part.assign(T, std::vector<double>(static_cast<size_t>(W * W * N), 0.0));

  const double* in = input.data();
  const double* g = gout.data();
#pragma omp parallel num_threads(T)
  {
#ifdef _OPENMP
    const int t = omp_get_thread_num();
#else
    const int t = 0;
#endif
    std::vector<double> patch(static_cast<size_t>(FFC));
    std::vector<double> gpatch(static_cast<size_t>(FFC));
    for (int64_t b = t; b < B; b += T) {
      const double* inb = in + b * L * L * C;
      const double* gb = g + b * W * W * N;
      double* gib = ginput ? ginput->data() + b * L * L * C : nullptr;
      for (int64_t i = 0; i < W; ++i)
        for (int64_t j = 0; j < W; ++j) {
          const int64_t ij = i * W + j;
          const double* gp = gb + ij * N;
          if (gweights || ginput)
            detail::gather_patch(inb, L, C, i, j, F, stride, 0, patch.data());
          if (ginput) {
            for (int64_t k = 0; k < FFC; ++k) gpatch[k] = 0.0;
            const double* wp = wpack.data() + ij * N * FFC;
            for (int64_t n = 0; n < N; ++n) axpy(gp[n], wp + n * FFC, gpatch.data(), FFC);
            detail::scatter_patch_add(gib, L, C, i, j, F, stride, 0, gpatch.data());
          }
          if (gweights) {
            double* gw = gw_part[t].data() + ij * N * FFC;
            for (int64_t n = 0; n < N; ++n) axpy(gp[n], patch.data(), gw + n * FFC, FFC);
          }
          if (gbias) {
            double* gbp = gb_part[t].data() + ij * N;
            for (int64_t n = 0; n < N; ++n) gbp[n] += gp[n];
          }
        }
    }
  }

  if (gweights) {
    for (int tt = 1; tt < T; ++tt)
      for (size_t k = 0; k < gw_part[0].size(); ++k) gw_part[0][k] += gw_part[tt][k];
    double* gw = gweights->data();
    for (int64_t ij = 0; ij < W * W; ++ij)
      for (int64_t k = 0; k < FFC; ++k)
        for (int64_t n = 0; n < N; ++n)
          gw[(ij * FFC + k) * N + n] += gw_part[0][(ij * N + n) * FFC + k];
  }
  if (gbias) {
    double* gb = gbias->data();
    for (int64_t k = 0; k < W * W * N; ++k) {
      double s = 0.0;
      for (int tt = 0; tt < T; ++tt) s += gb_part[tt][k];
      gb[k] += s;
    }
  }
}

// ---------------------------------------------------------------------------
// Channel-wise batch normalization over all non-channel axes.
// input [B,...,C], gamma/beta [C].
// ---------------------------------------------------------------------------

struct BatchNormSaved {
  std::vector<double> mean;
  std::vector<double> invstd;  // 1 / sqrt(var + eps)
};

inline Tensor batchnorm_forward(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                                double epsilon, bool train, Tensor* running_mean,
                                Tensor* running_var, double momentum, bool update_running,
                                BatchNormSaved* saved) {
  require(input.rank() >= 2, ErrorCategory::dimension, "batchnorm input must be rank >= 2");
  const int64_t C = input.extent(input.rank() - 1);
  require(gamma.numel() == C && beta.numel() == C, ErrorCategory::dimension,
          "batchnorm gamma/beta must have one entry per channel");
  const int64_t M = input.numel() / C;
  if (train)
    require(input.extent(0) >= 2, ErrorCategory::degenerate_batch,
            "batchnorm train mode needs batch >= 2");

  std::vector<double> mean(static_cast<size_t>(C), 0.0), var(static_cast<size_t>(C), 0.0);
  const double* x = input.data();
  if (train) {
    for (int64_t r = 0; r < M; ++r) {
      const double* row = x + r * C;
      for (int64_t c = 0; c < C; ++c) mean[c] += row[c];
    }
    for (int64_t c = 0; c < C; ++c) mean[c] /= static_cast<double>(M);
    for (int64_t r = 0; r < M; ++r) {
      const double* row = x + r * C;
      for (int64_t c = 0; c < C; ++c) {
        double d = row[c] - mean[c];
        var[c] += d * d;
      }
    }
    for (int64_t c = 0; c < C; ++c) var[c] /= static_cast<double>(M);
    if (update_running && running_mean && running_var) {
      for (int64_t c = 0; c < C; ++c) {
        (*running_mean)[c] = momentum * (*running_mean)[c] + (1.0 - momentum) * mean[c];
        (*running_var)[c] = momentum * (*running_var)[c] + (1.0 - momentum) * var[c];
      }
    }
  } else {
    require(running_mean && running_var, ErrorCategory::state,
            "batchnorm inference mode needs running statistics");
    for (int64_t c = 0; c < C; ++c) {
      mean[c] = (*running_mean)[c];
      var[c] = (*running_var)[c];
    }
  }

  std::vector<double> invstd(static_cast<size_t>(C));
  for (int64_t c = 0; c < C; ++c) invstd[c] = 1.0 / std::sqrt(var[c] + epsilon);
  if (saved) {
    saved->mean = mean;
    saved->invstd = invstd;
  }

  Tensor out(input.shape());
  double* o = out.data();
  for (int64_t r = 0; r < M; ++r) {
    const double* row = x + r * C;
    double* orow = o + r * C;
    for (int64_t c = 0; c < C; ++c)
      orow[c] = gamma[c] * (row[c] - mean[c]) * invstd[c] + beta[c];
  }
  return out;
}

inline void batchnorm_backward(const Tensor& input, const Tensor& gamma,
                               const BatchNormSaved& saved, bool train, const Tensor& gout,
                               Tensor* ginput, Tensor* ggamma, Tensor* gbeta) {
  const int64_t C = input.extent(input.rank() - 1);
  const int64_t M = input.numel() / C;
  const double* x = input.data();
  const double* g = gout.data();

  std::vector<double> sum_g(static_cast<size_t>(C), 0.0);
  std::vector<double> sum_gx(static_cast<size_t>(C), 0.0);  // sum of g * xhat
  for (int64_t r = 0; r < M; ++r) {
    const double* row = x + r * C;
    const double* grow = g + r * C;
    for (int64_t c = 0; c < C; ++c) {
      sum_g[c] += grow[c];
      sum_gx[c] += grow[c] * (row[c] - saved.mean[c]) * saved.invstd[c];
    }
  }
  if (ggamma)
    for (int64_t c = 0; c < C; ++c) (*ggamma)[c] += sum_gx[c];
  if (gbeta)
    for (int64_t c = 0; c < C; ++c) (*gbeta)[c] += sum_g[c];

  if (!ginput) return;
  double* gi = ginput->data();
  if (!train) {
    // Running statistics are constants; only the affine map differentiates.
    for (int64_t r = 0; r < M; ++r)
      for (int64_t c = 0; c < C; ++c)
        gi[r * C + c] += g[r * C + c] * gamma[c] * saved.invstd[c];
    return;
  }
  const double invM = 1.0 / static_cast<double>(M);
  for (int64_t r = 0; r < M; ++r) {
    const double* row = x + r * C;
    const double* grow = g + r * C;
    double* girow = gi + r * C;
    for (int64_t c = 0; c < C; ++c) {
      double xhat = (row[c] - saved.mean[c]) * saved.invstd[c];
      girow[c] += gamma[c] * saved.invstd[c] *
                  (grow[c] - invM * sum_g[c] - xhat * invM * sum_gx[c]);
    }
  }
}

// ---------------------------------------------------------------------------
// Nearest-neighbor 2x upsampling: [B,L,L,C] -> [B,2L,2L,C].
// ---------------------------------------------------------------------------

inline Tensor upsample2x(const Tensor& input) {
  require(input.rank() == 4, ErrorCategory::dimension, "upsample2x input must be rank 4");
  const int64_t B = input.extent(0), L = input.extent(1), C = input.extent(3);
  require(input.extent(2) == L, ErrorCategory::dimension, "upsample2x input must be square");
  Tensor out({B, 2 * L, 2 * L, C});
  const double* in = input.data();
  double* o = out.data();
  for (int64_t b = 0; b < B; ++b)
    for (int64_t i = 0; i < 2 * L; ++i)
      for (int64_t j = 0; j < 2 * L; ++j) {
        const double* src = in + ((b * L + i / 2) * L + j / 2) * C;
        double* dst = o + ((b * 2 * L + i) * 2 * L + j) * C;
        for (int64_t c = 0; c < C; ++c) dst[c] = src[c];
      }
  return out;
}

inline void upsample2x_backward(const Tensor& gout, Tensor* ginput) {
  const int64_t B = ginput->extent(0), L = ginput->extent(1), C = ginput->extent(3);
  const double* g = gout.data();
  double* gi = ginput->data();
  for (int64_t b = 0; b < B; ++b)
    for (int64_t i = 0; i < 2 * L; ++i)
      for (int64_t j = 0; j < 2 * L; ++j) {
        const double* src = g + ((b * 2 * L + i) * 2 * L + j) * C;
        double* dst = gi + ((b * L + i / 2) * L + j / 2) * C;
        for (int64_t c = 0; c < C; ++c) dst[c] += src[c];
      }
}

// ---------------------------------------------------------------------------
// Elementwise activations.
// ---------------------------------------------------------------------------

inline Tensor activation(const Tensor& input, Act kind, double alpha = 0.0) {
  Tensor out(input.shape());
  const double* x = input.data();
  double* o = out.data();
  const int64_t n = input.numel();
  switch (kind) {
    case Act::relu:
      for (int64_t i = 0; i < n; ++i) o[i] = x[i] > 0.0 ? x[i] : 0.0;
      break;
    case Act::leaky_relu:
      for (int64_t i = 0; i < n; ++i) o[i] = x[i] > 0.0 ? x[i] : alpha * x[i];
      break;
    case Act::sigmoid:
      for (int64_t i = 0; i < n; ++i) o[i] = 1.0 / (1.0 + std::exp(-x[i]));
      break;
  }
  return out;
}

inline void activation_backward(const Tensor& input, const Tensor& output, Act kind,
                                double alpha, const Tensor& gout, Tensor* ginput) {
  const double* x = input.data();
  const double* y = output.data();
  const double* g = gout.data();
  double* gi = ginput->data();
  const int64_t n = input.numel();
  switch (kind) {
    case Act::relu:
      for (int64_t i = 0; i < n; ++i) gi[i] += x[i] > 0.0 ? g[i] : 0.0;
      break;
    case Act::leaky_relu:
      for (int64_t i = 0; i < n; ++i) gi[i] += x[i] > 0.0 ? g[i] : alpha * g[i];
      break;
    case Act::sigmoid:
      for (int64_t i = 0; i < n; ++i) gi[i] += g[i] * y[i] * (1.0 - y[i]);
      break;
  }
}

// ---------------------------------------------------------------------------
// Minibatch discrimination: features [B,A], kernel [A,Bk,C] -> [B,Bk].
// o[i,b] = sum_{j != i} exp(-||M_i,b - M_j,b||_1) with M_i = features_i x kernel.
// ---------------------------------------------------------------------------

inline Tensor minibatch_disc_projection(const Tensor& features, const Tensor& kernel) {
  require(features.rank() == 2, ErrorCategory::dimension, "minibatch_disc features must be [B,A]");
  require(kernel.rank() == 3, ErrorCategory::dimension, "minibatch_disc kernel must be [A,B,C]");
  require(kernel.extent(0) == features.extent(1), ErrorCategory::dimension,
          "minibatch_disc kernel first extent must match feature dimension");
  const int64_t B = features.extent(0), A = features.extent(1);
  const int64_t K = kernel.extent(1), C = kernel.extent(2);
  require(B >= 2, ErrorCategory::degenerate_batch,
          "minibatch discrimination needs batch >= 2");

  // Pack kernel as [b*C+c][a] so projections are contiguous dots.
  std::vector<double> kpack(static_cast<size_t>(K * C * A));
  const double* k = kernel.data();
  for (int64_t a = 0; a < A; ++a)
    for (int64_t bc = 0; bc < K * C; ++bc) kpack[bc * A + a] = k[a * K * C + bc];

  Tensor m({B, K, C});
  const double* f = features.data();
  double* md = m.data();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < B; ++i)
    for (int64_t bc = 0; bc < K * C; ++bc)
      md[i * K * C + bc] = dot(f + i * A, kpack.data() + bc * A, A);
  return m;
}

inline Tensor minibatch_disc(const Tensor& features, const Tensor& kernel, Tensor* saved_m) {
  Tensor m = minibatch_disc_projection(features, kernel);
  const int64_t B = features.extent(0), K = kernel.extent(1), C = kernel.extent(2);
  Tensor out({B, K});
  const double* md = m.data();
  for (int64_t i = 0; i < B; ++i)
    for (int64_t j = i + 1; j < B; ++j)
      for (int64_t b = 0; b < K; ++b) {
        double l1 = 0.0;
        const double* mi = md + (i * K + b) * C;
        const double* mj = md + (j * K + b) * C;
        for (int64_t c = 0; c < C; ++c) l1 += std::abs(mi[c] - mj[c]);
        double e = std::exp(-l1);
        out.at(i, b) += e;
        out.at(j, b) += e;
      }
  if (saved_m) *saved_m = std::move(m);
  return out;
}

inline void minibatch_disc_backward(const Tensor& features, const Tensor& kernel,
                                    const Tensor& saved_m, const Tensor& gout,
                                    Tensor* gfeatures, Tensor* gkernel) {
  const int64_t B = features.extent(0), A = features.extent(1);
  const int64_t K = kernel.extent(1), C = kernel.extent(2);
  const double* md = saved_m.data();
  const double* g = gout.data();

  Tensor gm({B, K, C});
  double* gmd = gm.data();
  for (int64_t i = 0; i < B; ++i)
    for (int64_t j = i + 1; j < B; ++j)
      for (int64_t b = 0; b < K; ++b) {
        const double* mi = md + (i * K + b) * C;
        const double* mj = md + (j * K + b) * C;
        double l1 = 0.0;
        for (int64_t c = 0; c < C; ++c) l1 += std::abs(mi[c] - mj[c]);
        double coeff = std::exp(-l1) * (g[i * K + b] + g[j * K + b]);
        double* gmi = gmd + (i * K + b) * C;
        double* gmj = gmd + (j * K + b) * C;
        for (int64_t c = 0; c < C; ++c) {
          double s = mi[c] > mj[c] ? 1.0 : (mi[c] < mj[c] ? -1.0 : 0.0);
          gmi[c] -= coeff * s;
          gmj[c] += coeff * s;
        }
      }

  const double* f = features.data();
  const double* k = kernel.data();
  if (gfeatures) {
    double* gf = gfeatures->data();
    for (int64_t i = 0; i < B; ++i)
      for (int64_t a = 0; a < A; ++a)
        gf[i * A + a] += dot(gmd + i * K * C, k + a * K * C, K * C);
  }
  if (gkernel) {
    double* gk = gkernel->data();
    for (int64_t i = 0; i < B; ++i)
      for (int64_t a = 0; a < A; ++a)
        axpy(f[i * A + a], gmd + i * K * C, gk + a * K * C, K * C);
  }
}

// ---------------------------------------------------------------------------
// Hadamard class embedding: z [B,D] * table[class_i] -> [B,D].
// ---------------------------------------------------------------------------

inline Tensor hadamard_embed(const Tensor& z, const std::vector<int>& classes,
                             const Tensor& table) {
  require(z.rank() == 2, ErrorCategory::dimension, "hadamard_embed z must be [B,D]");
  require(table.rank() == 2 && table.extent(1) == z.extent(1), ErrorCategory::dimension,
          "embedding table must be [K,D] with D matching z");
  const int64_t B = z.extent(0), D = z.extent(1), K = table.extent(0);
  require(static_cast<int64_t>(classes.size()) == B, ErrorCategory::dimension,
          "one class index per sample required");
  Tensor out({B, D});
  for (int64_t i = 0; i < B; ++i) {
    require(classes[i] >= 0 && classes[i] < K, ErrorCategory::lookup,
            "class index out of embedding range");
    const double* zr = z.data() + i * D;
    const double* er = table.data() + classes[i] * D;
    double* o = out.data() + i * D;
    for (int64_t d = 0; d < D; ++d) o[d] = zr[d] * er[d];
  }
  return out;
}

inline void hadamard_embed_backward(const Tensor& z, const std::vector<int>& classes,
                                    const Tensor& table, const Tensor& gout, Tensor* gz,
                                    Tensor* gtable) {
  const int64_t B = z.extent(0), D = z.extent(1);
  for (int64_t i = 0; i < B; ++i) {
    const double* g = gout.data() + i * D;
    const double* zr = z.data() + i * D;
    const double* er = table.data() + classes[i] * D;
    if (gz) {
      double* gzr = gz->data() + i * D;
      for (int64_t d = 0; d < D; ++d) gzr[d] += g[d] * er[d];
    }
    if (gtable) {
      double* gt = gtable->data() + classes[i] * D;
      for (int64_t d = 0; d < D; ++d) gt[d] += g[d] * zr[d];
    }
  }
}

// ---------------------------------------------------------------------------
// Dense: input [B,In], weights [In,Out], bias [Out] -> [B,Out].
// ---------------------------------------------------------------------------

inline Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor* bias) {
  require(input.rank() == 2, ErrorCategory::dimension, "dense input must be [B,In]");
  require(weights.rank() == 2 && weights.extent(0) == input.extent(1), ErrorCategory::dimension,
          "dense weights must be [In,Out] with In matching input");
  const int64_t B = input.extent(0), In = input.extent(1), Out = weights.extent(1);
  if (bias)
    require(bias->numel() == Out, ErrorCategory::dimension, "dense bias must be [Out]");

  std::vector<double> wt(static_cast<size_t>(Out * In));
  const double* w = weights.data();
  for (int64_t i = 0; i < In; ++i)
    for (int64_t o = 0; o < Out; ++o) wt[o * In + i] = w[i * Out + o];

  Tensor out({B, Out});
  const double* x = input.data();
  double* od = out.data();
#pragma omp parallel for schedule(static)
  for (int64_t b = 0; b < B; ++b)
    for (int64_t o = 0; o < Out; ++o)
      od[b * Out + o] = dot(x + b * In, wt.data() + o * In, In) + (bias ? (*bias)[o] : 0.0);
  return out;
}

inline void dense_backward(const Tensor& input, const Tensor& weights, const Tensor& gout,
                           Tensor* ginput, Tensor* gweights, Tensor* gbias) {
  const int64_t B = input.extent(0), In = input.extent(1), Out = weights.extent(1);
  const double* x = input.data();
  const double* w = weights.data();
  const double* g = gout.data();

  if (ginput) {
    double* gi = ginput->data();
#pragma omp parallel for schedule(static)
    for (int64_t b = 0; b < B; ++b)
      for (int64_t i = 0; i < In; ++i)
        gi[b * In + i] += dot(g + b * Out, w + i * Out, Out);
  }

  const int T = thread_count();
  if (gweights) {
    std::vector<std::vector<double>> gw_part(T,
        std::vector<double>(static_cast<size_t>(In * Out), 0.0));
#pragma omp parallel num_threads(T)
    {
#ifdef _OPENMP
      const int t = omp_get_thread_num();
#else
      const int t = 0;
#endif
      for (int64_t b = t; b < B; b += T)
        for (int64_t i = 0; i < In; ++i)
          axpy(x[b * In + i], g + b * Out, gw_part[t].data() + i * Out, Out);
    }
    for (int tt = 1; tt < T; ++tt)
      for (size_t kk = 0; kk < gw_part[0].size(); ++kk) gw_part[0][kk] += gw_part[tt][kk];
    double* gw = gweights->data();
    for (int64_t kk = 0; kk < In * Out; ++kk) gw[kk] += gw_part[0][kk];
  }
  if (gbias) {
    double* gb = gbias->data();
    for (int64_t b = 0; b < B; ++b)
      for (int64_t o = 0; o < Out; ++o) gb[o] += g[b * Out + o];
  }
}

}  // namespace lagan::nn
