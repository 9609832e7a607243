// SPDX-License-Identifier: Apache-2.0

#ifndef RANGEKIT_NET_HPP
#define RANGEKIT_NET_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "rangekit/core.hpp"
#include "rangekit/io.hpp"
#include "rangekit/random.hpp"

namespace rangekit {

// Dense row-major value tensor; shape is (channels, rows, cols) for feature
// maps and (tokens, dim) for token matrices.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    std::size_t n = 1;
    for (int d : shape) {
      if (d < 0) throw Error("tensor: negative dimension");
      n *= static_cast<std::size_t>(d);
    }
    data.assign(n, 0.0f);
  }

  std::size_t numel() const { return data.size(); }

  float& at(int i, int j) { return data[static_cast<std::size_t>(i) * shape[1] + j]; }
  float at(int i, int j) const { return data[static_cast<std::size_t>(i) * shape[1] + j]; }

  float& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
  }
  float at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
  }
};

// Four pyramid stages with fixed strides [1, 2, 2, 2], so the stage maps run
// at 1x, 1/2, 1/4, and 1/8 of the input resolution.
struct ModelConfig {
  std::vector<int> depths = {2, 2, 2, 2};
  std::vector<int> heads = {4, 4, 5, 4};
  std::vector<int> channels = {128, 128, 320, 512};
  std::vector<int> reductions = {8, 4, 2, 1};
  int decode_channels = 256;
  int num_classes = 20;

  static constexpr int kStages = 4;
  static constexpr int kRemDims[3] = {64, 128, 128};

  void validate() const {
    if (depths.size() != kStages || heads.size() != kStages || channels.size() != kStages ||
        reductions.size() != kStages) {
      throw Error("model config: expected four stage entries");
    }
    for (int i = 0; i < kStages; ++i) {
      if (depths[i] < 1) throw Error("model config: stage depth must be >= 1");
      if (heads[i] < 1 || channels[i] % heads[i] != 0) {
        throw Error("model config: heads must divide stage channels");
      }
      if (reductions[i] < 1) throw Error("model config: reduction factor must be >= 1");
    }
    if (decode_channels < 1) throw Error("model config: decode channels must be >= 1");
    if (num_classes < 1) throw Error("model config: class count must be >= 1");
  }

  int stage_stride(int i) const { return i == 0 ? 1 : 2; }
};

struct LinearLayer {
  int in = 0;
  int out = 0;
  std::vector<float> w;  // [out][in]
  std::vector<float> b;  // [out]
};

// Inference-mode normalization: a per-channel affine map. Fresh weights are
// the identity (gamma 1, beta 0); trained statistics would be folded in here.
struct AffineNorm {
  std::vector<float> gamma;
  std::vector<float> beta;
};

struct ConvLayer {
  int in = 0;
  int out = 0;
  int stride = 1;
  std::vector<float> w;  // [ky*3+kx][out][in]
  std::vector<float> b;  // [out]
};

struct DwConvLayer {
  int ch = 0;
  std::vector<float> w;  // [ky*3+kx][ch]
  std::vector<float> b;  // [ch]
};

struct AttentionWeights {
  LinearLayer q, k, v, o;
  LinearLayer reduce;  // applied after mean pooling; absent when R == 1
};

struct BlockWeights {
  AffineNorm norm1;
  AttentionWeights attn;
  AffineNorm norm2;
  LinearLayer ffn1;
  DwConvLayer ffn_conv;
  LinearLayer ffn2;
};

struct StageWeights {
  ConvLayer patch;
  AffineNorm patch_norm;
  std::vector<BlockWeights> blocks;
};

struct RemWeights {
  LinearLayer l1, l2, l3;
  AffineNorm n1, n2, n3;
};

struct DecodeWeights {
  std::array<LinearLayer, 4> unify;
  LinearLayer fuse1, fuse2;
  std::array<LinearLayer, 4> aux;
};

struct Weights {
  RemWeights rem;
  std::array<StageWeights, 4> stages;
  DecodeWeights decode;
};

namespace detail {

inline int worker_count() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc > 8 ? 8 : hc);
}

// Splits [0, n) into contiguous chunks, one worker each. Every output row is
// produced by a single serial loop, so results do not depend on the worker
// count.
template <typename Fn>
void parallel_rows(int n, Fn&& fn) {
  const int workers = n >= 256 ? worker_count() : 1;
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (n + workers - 1) / workers;
  for (int t = 0; t < workers; ++t) {
    const int lo = t * chunk;
    const int hi = lo + chunk < n ? lo + chunk : n;
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] { fn(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

// y(n, m) (+)= a(n, k) * b(m, k)^T -- dot products of contiguous rows.
inline void matmul_nt(const float* a, const float* b, float* y, int n, int k, int m,
                      bool accumulate) {
  parallel_rows(n, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      const float* ai = a + static_cast<std::size_t>(i) * k;
      float* yi = y + static_cast<std::size_t>(i) * m;
      for (int j = 0; j < m; ++j) {
        const float* bj = b + static_cast<std::size_t>(j) * k;
        float s0 = 0.0f, s1 = 0.0f, s2 = 0.0f, s3 = 0.0f;
        int t = 0;
        for (; t + 4 <= k; t += 4) {
          s0 += ai[t] * bj[t];
          s1 += ai[t + 1] * bj[t + 1];
          s2 += ai[t + 2] * bj[t + 2];
          s3 += ai[t + 3] * bj[t + 3];
        }
        float s = (s0 + s1) + (s2 + s3);
        for (; t < k; ++t) s += ai[t] * bj[t];
        if (accumulate) {
          yi[j] += s;
        } else {
          yi[j] = s;
        }
      }
    }
  });
}

// y(n, m) = a(n, k) * b(k, m) -- row-scaled accumulation, vectorizes on m.
inline void matmul_nn(const float* a, const float* b, float* y, int n, int k, int m) {
  parallel_rows(n, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      float* yi = y + static_cast<std::size_t>(i) * m;
      std::memset(yi, 0, sizeof(float) * static_cast<std::size_t>(m));
      const float* ai = a + static_cast<std::size_t>(i) * k;
      for (int t = 0; t < k; ++t) {
        const float s = ai[t];
        if (s == 0.0f) continue;
        const float* bt = b + static_cast<std::size_t>(t) * m;
        for (int j = 0; j < m; ++j) yi[j] += s * bt[j];
      }
    }
  });
}

inline void add_bias(float* y, int n, int m, const std::vector<float>& b) {
  parallel_rows(n, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      float* yi = y + static_cast<std::size_t>(i) * m;
      for (int j = 0; j < m; ++j) yi[j] += b[static_cast<std::size_t>(j)];
    }
  });
}

inline float gelu(float x) {
  return 0.5f * x * (1.0f + std::erf(x * 0.7071067811865475f));
}

inline void gelu_inplace(Tensor& t) {
  for (float& v : t.data) v = gelu(v);
}

inline void affine_inplace(Tensor& t, const AffineNorm& norm) {
  const int m = t.shape.back();
  if (norm.gamma.size() != static_cast<std::size_t>(m)) throw Error("affine norm: size mismatch");
  const auto n = static_cast<int>(t.numel() / static_cast<std::size_t>(m));
  for (int i = 0; i < n; ++i) {
    float* row = t.data.data() + static_cast<std::size_t>(i) * m;
    for (int j = 0; j < m; ++j) row[j] = row[j] * norm.gamma[j] + norm.beta[j];
  }
}

inline Tensor linear(const Tensor& x, const LinearLayer& layer) {
  const int n = x.shape[0];
  if (x.shape.size() != 2 || x.shape[1] != layer.in) throw Error("linear: input dim mismatch");
  Tensor y({n, layer.out});
  matmul_nt(x.data.data(), layer.w.data(), y.data.data(), n, layer.in, layer.out, false);
  add_bias(y.data.data(), n, layer.out, layer.b);
  return y;
}

inline void softmax_rows(float* y, int n, int m) {
  parallel_rows(n, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      float* row = y + static_cast<std::size_t>(i) * m;
      float mx = row[0];
      for (int j = 1; j < m; ++j) mx = row[j] > mx ? row[j] : mx;
      float sum = 0.0f;
      for (int j = 0; j < m; ++j) {
        row[j] = std::exp(row[j] - mx);
        sum += row[j];
      }
      const float inv = 1.0f / sum;
      for (int j = 0; j < m; ++j) row[j] *= inv;
    }
  });
}

// Non-overlapping window mean over a (h, w) token grid; trailing partial
// windows average over the cells they actually cover.
inline Tensor mean_pool(const Tensor& tokens, int h, int w, int r, int& ph, int& pw) {
  const int d = tokens.shape[1];
  ph = (h + r - 1) / r;
  pw = (w + r - 1) / r;
  Tensor out({ph * pw, d});
  for (int py = 0; py < ph; ++py) {
    for (int px = 0; px < pw; ++px) {
      float* dst = out.data.data() + (static_cast<std::size_t>(py) * pw + px) * d;
      int count = 0;
      for (int y = py * r; y < (py + 1) * r && y < h; ++y) {
        for (int x = px * r; x < (px + 1) * r && x < w; ++x) {
          const float* src = tokens.data.data() + (static_cast<std::size_t>(y) * w + x) * d;
          for (int c = 0; c < d; ++c) dst[c] += src[c];
          ++count;
        }
      }
      const float inv = 1.0f / static_cast<float>(count);
      for (int c = 0; c < d; ++c) dst[c] *= inv;
    }
  }
  return out;
}

}  // namespace detail

// ---- public ops ------------------------------------------------------------

// Layout converters between (C, H, W) feature maps and (H*W, C) token
// matrices; token row-major order is (row, col).
inline Tensor chw_to_tokens(const Tensor& fmap) {
  if (fmap.shape.size() != 3) throw Error("chw_to_tokens: expected a 3-d tensor");
  const int c = fmap.shape[0], h = fmap.shape[1], w = fmap.shape[2];
  Tensor out({h * w, c});
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) out.at(y * w + x, ch) = fmap.at(ch, y, x);
    }
  }
  return out;
}

inline Tensor tokens_to_chw(const Tensor& tokens, int h, int w) {
  if (tokens.shape.size() != 2 || tokens.shape[0] != h * w) throw Error("tokens_to_chw: shape mismatch");
  const int c = tokens.shape[1];
  Tensor out({c, h, w});
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) out.at(ch, y, x) = tokens.at(y * w + x, ch);
    }
  }
  return out;
}

// Pointwise range embedding: three Linear -> norm -> GELU layers applied to
// every grid independently, mapping the six raster channels to 128 features.
inline Tensor rem_forward(const Tensor& raster, const RemWeights& w) {
  if (raster.shape.size() != 3 || raster.shape[0] != kNumChannels) {
    throw Error("rem_forward: expected a 6-channel raster");
  }
  const int h = raster.shape[1];
  const int wd = raster.shape[2];
  Tensor t = chw_to_tokens(raster);
  t = detail::linear(t, w.l1);
  detail::affine_inplace(t, w.n1);
  detail::gelu_inplace(t);
  t = detail::linear(t, w.l2);
  detail::affine_inplace(t, w.n2);
  detail::gelu_inplace(t);
  t = detail::linear(t, w.l3);
  detail::affine_inplace(t, w.n3);
  detail::gelu_inplace(t);
  return tokens_to_chw(t, h, wd);
}

inline Tensor rem_forward(const RangeImage& img, const RemWeights& w) {
  Tensor raster({kNumChannels, img.height, img.width});
  for (std::size_t i = 0; i < raster.data.size(); ++i) {
    raster.data[i] = static_cast<float>(img.channels[i]);
  }
  return rem_forward(raster, w);
}

namespace detail {

// 3x3 convolution with zero padding expressed as nine shifted token-matrix
// products; `tokens` is the (h*w, C_in) layout of the input map.
inline Tensor conv3x3_tokens(const Tensor& tokens, int h, int w, const ConvLayer& conv,
                             int& oh, int& ow) {
  if (tokens.shape[1] != conv.in) throw Error("conv3x3: channel mismatch");
  const int s = conv.stride;
  oh = (h + s - 1) / s;
  ow = (w + s - 1) / s;
  const int n_out = oh * ow;
  Tensor y({n_out, conv.out});
  Tensor shifted({n_out, conv.in});
  for (int ky = 0; ky < 3; ++ky) {
    for (int kx = 0; kx < 3; ++kx) {
      for (int py = 0; py < oh; ++py) {
        const int iy = py * s + ky - 1;
        for (int px = 0; px < ow; ++px) {
          const int ix = px * s + kx - 1;
          float* dst = shifted.data.data() + (static_cast<std::size_t>(py) * ow + px) * conv.in;
          if (iy < 0 || iy >= h || ix < 0 || ix >= w) {
            std::memset(dst, 0, sizeof(float) * static_cast<std::size_t>(conv.in));
          } else {
            const float* src =
                tokens.data.data() + (static_cast<std::size_t>(iy) * w + ix) * conv.in;
            std::memcpy(dst, src, sizeof(float) * static_cast<std::size_t>(conv.in));
          }
        }
      }
      const float* wblock =
          conv.w.data() + static_cast<std::size_t>(ky * 3 + kx) * conv.out * conv.in;
      matmul_nt(shifted.data.data(), wblock, y.data.data(), n_out, conv.in, conv.out, true);
    }
  }
  add_bias(y.data.data(), n_out, conv.out, conv.b);
  return y;
}

// Depthwise 3x3, zero padding, stride 1, on a token matrix.
inline Tensor dwconv3x3_tokens(const Tensor& tokens, int h, int w, const DwConvLayer& conv) {
  if (tokens.shape[1] != conv.ch) throw Error("dwconv3x3: channel mismatch");
  const int d = conv.ch;
  Tensor y({h * w, d});
  for (int ky = 0; ky < 3; ++ky) {
    for (int kx = 0; kx < 3; ++kx) {
      const float* wk = conv.w.data() + static_cast<std::size_t>(ky * 3 + kx) * d;
      for (int py = 0; py < h; ++py) {
        const int iy = py + ky - 1;
        if (iy < 0 || iy >= h) continue;
        for (int px = 0; px < w; ++px) {
          const int ix = px + kx - 1;
          if (ix < 0 || ix >= w) continue;
          float* dst = y.data.data() + (static_cast<std::size_t>(py) * w + px) * d;
          const float* src = tokens.data.data() + (static_cast<std::size_t>(iy) * w + ix) * d;
          for (int c = 0; c < d; ++c) dst[c] += wk[c] * src[c];
        }
      }
    }
  }
  add_bias(y.data.data(), h * w, d, conv.b);
  return y;
}

}  // namespace detail

// Overlapping 3x3 patch embedding: stride 1 preserves the spatial dims,
// stride 2 halves them (rounding up). Returns the new token grid and its
// dims through oh/ow.
inline Tensor overlap_patch_embed(const Tensor& tokens, int h, int w, const ConvLayer& conv,
                                  int& oh, int& ow) {
  if (conv.stride != 1 && conv.stride != 2) throw Error("patch embed: stride must be 1 or 2");
  return detail::conv3x3_tokens(tokens, h, w, conv, oh, ow);
}

// Reduced multi-head self-attention. Keys and values come from a sequence
// shortened by non-overlapping R x R mean pooling followed by a linear map
// (skipped entirely when R == 1). No residual here; the block adds it.
inline Tensor attention_forward(const Tensor& tokens, const AttentionWeights& w, int heads,
                                int reduction, int h, int width) {
  const int n = tokens.shape[0];
  const int d = tokens.shape[1];
  if (n != h * width) throw Error("attention: token count does not match spatial dims");
  if (d % heads != 0) throw Error("attention: token dim not divisible by heads");
  const int hd = d / heads;

  Tensor q = detail::linear(tokens, w.q);
  Tensor reduced;
  if (reduction > 1) {
    int ph = 0, pw = 0;
    reduced = detail::mean_pool(tokens, h, width, reduction, ph, pw);
    reduced = detail::linear(reduced, w.reduce);
  } else {
    reduced = tokens;
  }
  const int nr = reduced.shape[0];
  Tensor k = detail::linear(reduced, w.k);
  Tensor v = detail::linear(reduced, w.v);

  const float scale = 1.0f / std::sqrt(static_cast<float>(hd));
  Tensor concat({n, d});
  Tensor qh({n, hd}), kh({nr, hd}), vh({nr, hd}), scores({n, nr}), oh({n, hd});
  for (int head = 0; head < heads; ++head) {
    const int off = head * hd;
    for (int i = 0; i < n; ++i) {
      std::memcpy(&qh.at(i, 0), &q.at(i, off), sizeof(float) * static_cast<std::size_t>(hd));
    }
    for (int i = 0; i < nr; ++i) {
      std::memcpy(&kh.at(i, 0), &k.at(i, off), sizeof(float) * static_cast<std::size_t>(hd));
      std::memcpy(&vh.at(i, 0), &v.at(i, off), sizeof(float) * static_cast<std::size_t>(hd));
    }
    detail::matmul_nt(qh.data.data(), kh.data.data(), scores.data.data(), n, hd, nr, false);
    for (float& s : scores.data) s *= scale;
    detail::softmax_rows(scores.data.data(), n, nr);
    detail::matmul_nn(scores.data.data(), vh.data.data(), oh.data.data(), n, nr, hd);
    for (int i = 0; i < n; ++i) {
      std::memcpy(&concat.at(i, off), &oh.at(i, 0), sizeof(float) * static_cast<std::size_t>(hd));
    }
  }
  return detail::linear(concat, w.o);
}

// Feed-forward with the positional 3x3 depthwise convolution folded in:
// norm -> Linear -> dwconv -> GELU -> Linear, plus the residual from the raw
// input. Zeroing the layer weights therefore makes this an exact identity.
inline Tensor ffn_forward(const Tensor& tokens, const BlockWeights& w, int h, int width) {
  if (tokens.shape[0] != h * width) throw Error("ffn: token count does not match spatial dims");
  Tensor t = tokens;
  detail::affine_inplace(t, w.norm2);
  t = detail::linear(t, w.ffn1);
  t = detail::dwconv3x3_tokens(t, h, width, w.ffn_conv);
  detail::gelu_inplace(t);
  t = detail::linear(t, w.ffn2);
  for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] += tokens.data[i];
  return t;
}

// One transformer block: attention over the normed tokens with a residual,
// then the feed-forward (which carries its own norm and residual).
inline Tensor block_forward(const Tensor& tokens, const BlockWeights& w, int heads, int reduction,
                            int h, int width) {
  Tensor normed = tokens;
  detail::affine_inplace(normed, w.norm1);
  Tensor attn = attention_forward(normed, w.attn, heads, reduction, h, width);
  for (std::size_t i = 0; i < attn.data.size(); ++i) attn.data[i] += tokens.data[i];
  return ffn_forward(attn, w, h, width);
}

// Four source taps of one half-pixel bilinear sample: clamped neighbor
// indices on each axis plus the distance-product weights.
struct BilinearTaps {
  int y0 = 0, y1 = 0, x0 = 0, x1 = 0;
  double w00 = 0.0, w01 = 0.0, w10 = 0.0, w11 = 0.0;
};

inline BilinearTaps bilinear_taps(int h, int w, int oh, int ow, int y, int x) {
  BilinearTaps t;
  const double sy = (y + 0.5) * static_cast<double>(h) / oh - 0.5;
  const double sx = (x + 0.5) * static_cast<double>(w) / ow - 0.5;
  const int y0 = static_cast<int>(std::floor(sy));
  const int x0 = static_cast<int>(std::floor(sx));
  const double fy = sy - y0;
  const double fx = sx - x0;
  auto clampi = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
  t.y0 = clampi(y0, h - 1);
  t.y1 = clampi(y0 + 1, h - 1);
  t.x0 = clampi(x0, w - 1);
  t.x1 = clampi(x0 + 1, w - 1);
  t.w00 = (1.0 - fy) * (1.0 - fx);
  t.w01 = (1.0 - fy) * fx;
  t.w10 = fy * (1.0 - fx);
  t.w11 = fy * fx;
  return t;
}

// Half-pixel bilinear resize of a (C, h, w) map with edge clamping; exact
// wherever a target sample lands on a source grid point.
inline Tensor bilinear_resize(const Tensor& fmap, int oh, int ow) {
  if (fmap.shape.size() != 3) throw Error("bilinear_resize: expected a 3-d tensor");
  const int c = fmap.shape[0], h = fmap.shape[1], w = fmap.shape[2];
  if (oh < 1 || ow < 1) throw Error("bilinear_resize: bad output size");
  Tensor out({c, oh, ow});
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const BilinearTaps t = bilinear_taps(h, w, oh, ow, y, x);
      for (int ch = 0; ch < c; ++ch) {
        const double v = t.w00 * fmap.at(ch, t.y0, t.x0) + t.w01 * fmap.at(ch, t.y0, t.x1) +
                         t.w10 * fmap.at(ch, t.y1, t.x0) + t.w11 * fmap.at(ch, t.y1, t.x1);
        out.at(ch, y, x) = static_cast<float>(v);
      }
    }
  }
  return out;
}

struct SegOutput {
  Tensor main_logits;               // (num_classes, H, W)
  std::array<Tensor, 4> aux_logits; // one per stage, same spatial shape
};

// MLP decoder: unify every stage to the decode width, resize to full
// resolution, concatenate, and map down to class logits in two layers.
// Each resized stage also feeds a single-layer auxiliary head.
inline SegOutput decode_head(const std::array<Tensor, 4>& stage_maps, const DecodeWeights& w,
                             int num_classes) {
  const int h = stage_maps[0].shape[1];
  const int wd = stage_maps[0].shape[2];
  SegOutput out;
  Tensor fused({h * wd, 4 * w.unify[0].out});
  for (int i = 0; i < 4; ++i) {
    Tensor tokens = chw_to_tokens(stage_maps[static_cast<std::size_t>(i)]);
    tokens = detail::linear(tokens, w.unify[static_cast<std::size_t>(i)]);
    Tensor resized = tokens_to_chw(tokens, stage_maps[static_cast<std::size_t>(i)].shape[1],
                                   stage_maps[static_cast<std::size_t>(i)].shape[2]);
    if (resized.shape[1] != h || resized.shape[2] != wd) {
      resized = bilinear_resize(resized, h, wd);
    }
    Tensor unified = chw_to_tokens(resized);
    const int dc = unified.shape[1];
    for (int t = 0; t < h * wd; ++t) {
      std::memcpy(&fused.at(t, i * dc), &unified.at(t, 0), sizeof(float) * static_cast<std::size_t>(dc));
    }
    Tensor aux = detail::linear(unified, w.aux[static_cast<std::size_t>(i)]);
    out.aux_logits[static_cast<std::size_t>(i)] = tokens_to_chw(aux, h, wd);
  }
  Tensor t = detail::linear(fused, w.fuse1);
  detail::gelu_inplace(t);
  t = detail::linear(t, w.fuse2);
  out.main_logits = tokens_to_chw(t, h, wd);
  if (out.main_logits.shape[0] != num_classes) throw Error("decode: class count mismatch");
  return out;
}

// Full forward pass to logits.
inline SegOutput forward_logits(const RangeImage& img, const ModelConfig& cfg, const Weights& w) {
  cfg.validate();
  Tensor fmap = rem_forward(img, w.rem);
  int h = fmap.shape[1];
  int wd = fmap.shape[2];
  Tensor tokens = chw_to_tokens(fmap);
  std::array<Tensor, 4> stage_maps;
  for (int i = 0; i < ModelConfig::kStages; ++i) {
    const StageWeights& sw = w.stages[static_cast<std::size_t>(i)];
    int oh = 0, ow = 0;
    tokens = overlap_patch_embed(tokens, h, wd, sw.patch, oh, ow);
    h = oh;
    wd = ow;
    detail::affine_inplace(tokens, sw.patch_norm);
    for (const BlockWeights& bw : sw.blocks) {
      tokens = block_forward(tokens, bw, cfg.heads[static_cast<std::size_t>(i)],
                             cfg.reductions[static_cast<std::size_t>(i)], h, wd);
    }
    stage_maps[static_cast<std::size_t>(i)] = tokens_to_chw(tokens, h, wd);
  }
  return decode_head(stage_maps, w.decode, cfg.num_classes);
}

// Argmax grid prediction; ties resolve to the smallest class id.
inline std::vector<std::int32_t> forward(const RangeImage& img, const ModelConfig& cfg,
                                         const Weights& w) {
  const SegOutput out = forward_logits(img, cfg, w);
  const int classes = out.main_logits.shape[0];
  const int h = out.main_logits.shape[1];
  const int wd = out.main_logits.shape[2];
  std::vector<std::int32_t> labels(static_cast<std::size_t>(h) * wd, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < wd; ++x) {
      int best = 0;
      float best_v = out.main_logits.at(0, y, x);
      for (int c = 1; c < classes; ++c) {
        const float v = out.main_logits.at(c, y, x);
        if (v > best_v) {
          best = c;
          best_v = v;
        }
      }
      labels[static_cast<std::size_t>(y) * wd + x] = best;
    }
  }
  return labels;
}

// ---- weight construction and persistence -----------------------------------

namespace detail {

// Enumerates every weight tensor in a fixed order shared by initialization,
// saving, and loading. fn(dims, payload, fan_in); fan_in < 0 marks tensors
// that initialize to constants (biases 0, gains 1).
template <typename Fn>
void visit_weights(Weights& w, const ModelConfig& cfg, Fn&& fn) {
  auto lin = [&](LinearLayer& l, int in, int out) {
    l.in = in;
    l.out = out;
    fn(std::vector<int>{out, in}, l.w, in);
    fn(std::vector<int>{out}, l.b, -1);
  };
  auto norm = [&](AffineNorm& nrm, int ch) {
    fn(std::vector<int>{ch}, nrm.gamma, -2);
    fn(std::vector<int>{ch}, nrm.beta, -1);
  };
  auto conv = [&](ConvLayer& c, int in, int out, int stride) {
    c.in = in;
    c.out = out;
    c.stride = stride;
    fn(std::vector<int>{3, 3, out, in}, c.w, in * 9);
    fn(std::vector<int>{out}, c.b, -1);
  };
  auto dwconv = [&](DwConvLayer& c, int ch) {
    c.ch = ch;
    fn(std::vector<int>{3, 3, ch}, c.w, 9);
    fn(std::vector<int>{ch}, c.b, -1);
  };

  lin(w.rem.l1, kNumChannels, ModelConfig::kRemDims[0]);
  norm(w.rem.n1, ModelConfig::kRemDims[0]);
  lin(w.rem.l2, ModelConfig::kRemDims[0], ModelConfig::kRemDims[1]);
  norm(w.rem.n2, ModelConfig::kRemDims[1]);
  lin(w.rem.l3, ModelConfig::kRemDims[1], ModelConfig::kRemDims[2]);
  norm(w.rem.n3, ModelConfig::kRemDims[2]);

  int in_ch = ModelConfig::kRemDims[2];
  for (int i = 0; i < ModelConfig::kStages; ++i) {
    StageWeights& sw = w.stages[static_cast<std::size_t>(i)];
    const int ch = cfg.channels[static_cast<std::size_t>(i)];
    conv(sw.patch, in_ch, ch, cfg.stage_stride(i));
    norm(sw.patch_norm, ch);
    sw.blocks.resize(static_cast<std::size_t>(cfg.depths[static_cast<std::size_t>(i)]));
    for (BlockWeights& bw : sw.blocks) {
      norm(bw.norm1, ch);
      lin(bw.attn.q, ch, ch);
      lin(bw.attn.k, ch, ch);
      lin(bw.attn.v, ch, ch);
      lin(bw.attn.o, ch, ch);
      if (cfg.reductions[static_cast<std::size_t>(i)] > 1) {
        lin(bw.attn.reduce, ch, ch);
      }
      norm(bw.norm2, ch);
      lin(bw.ffn1, ch, ch);
      dwconv(bw.ffn_conv, ch);
      lin(bw.ffn2, ch, ch);
    }
    in_ch = ch;
  }

  for (int i = 0; i < ModelConfig::kStages; ++i) {
    lin(w.decode.unify[static_cast<std::size_t>(i)], cfg.channels[static_cast<std::size_t>(i)],
        cfg.decode_channels);
  }
  lin(w.decode.fuse1, 4 * cfg.decode_channels, cfg.decode_channels);
  lin(w.decode.fuse2, cfg.decode_channels, cfg.num_classes);
  for (int i = 0; i < ModelConfig::kStages; ++i) {
    lin(w.decode.aux[static_cast<std::size_t>(i)], cfg.decode_channels, cfg.num_classes);
  }
}

}  // namespace detail

// Deterministic initialization: matrix entries uniform in +-1/sqrt(fan_in),
// biases zero, norm gains one. Same seed, same weights.
inline Weights init_weights(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Weights w;
  Rng rng(seed);
  detail::visit_weights(w, cfg, [&](const std::vector<int>& dims, std::vector<float>& data, int fan_in) {
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    if (fan_in == -1) {
      data.assign(n, 0.0f);
    } else if (fan_in == -2) {
      data.assign(n, 1.0f);
    } else {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      data.resize(n);
      for (float& v : data) v = static_cast<float>(rng.uniform(-bound, bound));
    }
  });
  return w;
}

// Flat binary weight file: a header with the tensor count and every tensor's
// shape, followed by all payloads as row-major little-endian float32.
inline void save_weights(const std::string& path, Weights weights, const ModelConfig& cfg) {
  std::vector<std::uint8_t> bytes;
  std::vector<const std::vector<float>*> payloads;
  std::vector<std::vector<int>> shapes;
  detail::visit_weights(weights, cfg, [&](const std::vector<int>& dims, std::vector<float>& data, int) {
    shapes.push_back(dims);
    payloads.push_back(&data);
  });
  detail::put_le_u32(bytes, static_cast<std::uint32_t>(shapes.size()));
  for (const auto& dims : shapes) {
    detail::put_le_u32(bytes, static_cast<std::uint32_t>(dims.size()));
    for (int d : dims) detail::put_le_u32(bytes, static_cast<std::uint32_t>(d));
  }
  for (const auto* payload : payloads) {
    for (float v : *payload) detail::put_le_f32(bytes, v);
  }
  detail::write_file_bytes(path, bytes);
}

inline Weights load_weights(const std::string& path, const ModelConfig& cfg) {
  cfg.validate();
  const auto bytes = detail::read_file_bytes(path);
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (pos + n > bytes.size()) throw FormatError("weights " + path + ": truncated file");
  };
  auto take_u32 = [&]() {
    need(4);
    const std::uint32_t v = detail::le_u32(bytes.data() + pos);
    pos += 4;
    return v;
  };

  Weights w;
  std::vector<std::vector<int>> expected;
  std::vector<std::vector<float>*> payloads;
  detail::visit_weights(w, cfg, [&](const std::vector<int>& dims, std::vector<float>& data, int) {
    expected.push_back(dims);
    payloads.push_back(&data);
  });

  const std::uint32_t count = take_u32();
  if (count != expected.size()) {
    throw FormatError("weights " + path + ": tensor count " + std::to_string(count) +
                      " does not match the model configuration (" + std::to_string(expected.size()) + ")");
  }
  for (const auto& dims : expected) {
    const std::uint32_t ndim = take_u32();
    if (ndim != dims.size()) throw FormatError("weights " + path + ": tensor rank mismatch");
    for (int d : dims) {
      if (take_u32() != static_cast<std::uint32_t>(d)) {
        throw FormatError("weights " + path + ": tensor shape mismatch");
      }
    }
  }
  for (std::size_t t = 0; t < expected.size(); ++t) {
    std::size_t n = 1;
    for (int d : expected[t]) n *= static_cast<std::size_t>(d);
    need(n * 4);
    payloads[t]->resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      (*payloads[t])[i] = detail::le_f32(bytes.data() + pos);
      pos += 4;
    }
  }
  if (pos != bytes.size()) throw FormatError("weights " + path + ": trailing bytes");
  return w;
}

}  // namespace rangekit

#endif  // RANGEKIT_NET_HPP
