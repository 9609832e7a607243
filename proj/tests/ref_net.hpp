// Scalar double-precision reference for the segmenter forward pass. Plain
// loops only, no blocking or threading, reading the same weight structs as
// the library so the two paths share nothing but the parameters.

#ifndef RANGEKIT_TESTS_REF_NET_HPP
#define RANGEKIT_TESTS_REF_NET_HPP

#include <array>
#include <cmath>
#include <vector>

#include "rangekit/net.hpp"

namespace refnet {

using rangekit::AffineNorm;
using rangekit::AttentionWeights;
using rangekit::BlockWeights;
using rangekit::ConvLayer;
using rangekit::DwConvLayer;
using rangekit::LinearLayer;
using rangekit::ModelConfig;
using rangekit::RemWeights;
using rangekit::Tensor;
using rangekit::Weights;

struct Mat {
  int n = 0;
  int d = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(int n_, int d_) : n(n_), d(d_), v(static_cast<std::size_t>(n_) * d_, 0.0) {}

  double& at(int i, int j) { return v[static_cast<std::size_t>(i) * d + j]; }
  double at(int i, int j) const { return v[static_cast<std::size_t>(i) * d + j]; }
};

inline Mat from_tokens(const Tensor& t) {
  Mat m(t.shape[0], t.shape[1]);
  for (std::size_t i = 0; i < t.data.size(); ++i) m.v[i] = t.data[i];
  return m;
}

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

inline Mat linear(const Mat& x, const LinearLayer& l) {
  Mat y(x.n, l.out);
  for (int i = 0; i < x.n; ++i) {
    for (int o = 0; o < l.out; ++o) {
      double s = l.b[static_cast<std::size_t>(o)];
      for (int k = 0; k < l.in; ++k) {
        s += x.at(i, k) * l.w[static_cast<std::size_t>(o) * l.in + k];
      }
      y.at(i, o) = s;
    }
  }
  return y;
}

inline void affine(Mat& x, const AffineNorm& n) {
  for (int i = 0; i < x.n; ++i) {
    for (int j = 0; j < x.d; ++j) {
      x.at(i, j) = x.at(i, j) * n.gamma[static_cast<std::size_t>(j)] + n.beta[static_cast<std::size_t>(j)];
    }
  }
}

inline void gelu_all(Mat& x) {
  for (double& v : x.v) v = gelu(v);
}

inline Mat conv3x3(const Mat& tokens, int h, int w, const ConvLayer& c, int& oh, int& ow) {
  oh = (h + c.stride - 1) / c.stride;
  ow = (w + c.stride - 1) / c.stride;
  Mat y(oh * ow, c.out);
  for (int py = 0; py < oh; ++py) {
    for (int px = 0; px < ow; ++px) {
      for (int o = 0; o < c.out; ++o) {
        double s = c.b[static_cast<std::size_t>(o)];
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = py * c.stride + ky - 1;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = px * c.stride + kx - 1;
            if (ix < 0 || ix >= w) continue;
            for (int k = 0; k < c.in; ++k) {
              s += tokens.at(iy * w + ix, k) *
                   c.w[(static_cast<std::size_t>(ky * 3 + kx) * c.out + o) * c.in + k];
            }
          }
        }
        y.at(py * ow + px, o) = s;
      }
    }
  }
  return y;
}

inline Mat dwconv3x3(const Mat& tokens, int h, int w, const DwConvLayer& c) {
  Mat y(h * w, c.ch);
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      for (int ch = 0; ch < c.ch; ++ch) {
        double s = c.b[static_cast<std::size_t>(ch)];
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = py + ky - 1;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = px + kx - 1;
            if (ix < 0 || ix >= w) continue;
            s += tokens.at(iy * w + ix, ch) * c.w[static_cast<std::size_t>(ky * 3 + kx) * c.ch + ch];
          }
        }
        y.at(py * w + px, ch) = s;
      }
    }
  }
  return y;
}

inline Mat mean_pool(const Mat& tokens, int h, int w, int r, int& ph, int& pw) {
  ph = (h + r - 1) / r;
  pw = (w + r - 1) / r;
  Mat out(ph * pw, tokens.d);
  for (int py = 0; py < ph; ++py) {
    for (int px = 0; px < pw; ++px) {
      for (int c = 0; c < tokens.d; ++c) {
        double s = 0.0;
        int count = 0;
        for (int y = py * r; y < (py + 1) * r && y < h; ++y) {
          for (int x = px * r; x < (px + 1) * r && x < w; ++x) {
            s += tokens.at(y * w + x, c);
            ++count;
          }
        }
        out.at(py * pw + px, c) = s / count;
      }
    }
  }
  return out;
}

inline Mat attention(const Mat& tokens, const AttentionWeights& w, int heads, int reduction,
                     int h, int width) {
  const int d = tokens.d;
  const int hd = d / heads;
  Mat q = linear(tokens, w.q);
  Mat reduced = tokens;
  if (reduction > 1) {
    int ph = 0, pw = 0;
    reduced = mean_pool(tokens, h, width, reduction, ph, pw);
    reduced = linear(reduced, w.reduce);
  }
  Mat k = linear(reduced, w.k);
  Mat v = linear(reduced, w.v);
  const int nr = reduced.n;
  Mat concat(tokens.n, d);
  for (int head = 0; head < heads; ++head) {
    const int off = head * hd;
    for (int i = 0; i < tokens.n; ++i) {
      std::vector<double> scores(static_cast<std::size_t>(nr));
      double mx = -1e300;
      for (int j = 0; j < nr; ++j) {
        double s = 0.0;
        for (int t = 0; t < hd; ++t) s += q.at(i, off + t) * k.at(j, off + t);
        s /= std::sqrt(static_cast<double>(hd));
        scores[static_cast<std::size_t>(j)] = s;
        mx = s > mx ? s : mx;
      }
      double sum = 0.0;
      for (double& s : scores) {
        s = std::exp(s - mx);
        sum += s;
      }
      for (double& s : scores) s /= sum;
      for (int t = 0; t < hd; ++t) {
        double acc = 0.0;
        for (int j = 0; j < nr; ++j) acc += scores[static_cast<std::size_t>(j)] * v.at(j, off + t);
        concat.at(i, off + t) = acc;
      }
    }
  }
  return linear(concat, w.o);
}

inline Mat ffn(const Mat& tokens, const BlockWeights& w, int h, int width) {
  Mat t = tokens;
  affine(t, w.norm2);
  t = linear(t, w.ffn1);
  t = dwconv3x3(t, h, width, w.ffn_conv);
  gelu_all(t);
  t = linear(t, w.ffn2);
  for (std::size_t i = 0; i < t.v.size(); ++i) t.v[i] += tokens.v[i];
  return t;
}

inline Mat block(const Mat& tokens, const BlockWeights& w, int heads, int reduction, int h, int width) {
  Mat normed = tokens;
  affine(normed, w.norm1);
  Mat a = attention(normed, w.attn, heads, reduction, h, width);
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += tokens.v[i];
  return ffn(a, w, h, width);
}

inline Mat rem(const Mat& raster_tokens, const RemWeights& w) {
  Mat t = linear(raster_tokens, w.l1);
  affine(t, w.n1);
  gelu_all(t);
  t = linear(t, w.l2);
  affine(t, w.n2);
  gelu_all(t);
  t = linear(t, w.l3);
  affine(t, w.n3);
  gelu_all(t);
  return t;
}

// Half-pixel bilinear resize over token-layout maps.
inline Mat bilinear_resize(const Mat& tokens, int h, int w, int oh, int ow) {
  Mat out(oh * ow, tokens.d);
  auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
  for (int y = 0; y < oh; ++y) {
    const double sy = (y + 0.5) * static_cast<double>(h) / oh - 0.5;
    const int y0 = static_cast<int>(std::floor(sy));
    const double fy = sy - y0;
    for (int x = 0; x < ow; ++x) {
      const double sx = (x + 0.5) * static_cast<double>(w) / ow - 0.5;
      const int x0 = static_cast<int>(std::floor(sx));
      const double fx = sx - x0;
      const int y0c = clampi(y0, 0, h - 1), y1c = clampi(y0 + 1, 0, h - 1);
      const int x0c = clampi(x0, 0, w - 1), x1c = clampi(x0 + 1, 0, w - 1);
      for (int c = 0; c < tokens.d; ++c) {
        out.at(y * ow + x, c) =
            (1.0 - fy) * ((1.0 - fx) * tokens.at(y0c * w + x0c, c) + fx * tokens.at(y0c * w + x1c, c)) +
            fy * ((1.0 - fx) * tokens.at(y1c * w + x0c, c) + fx * tokens.at(y1c * w + x1c, c));
      }
    }
  }
  return out;
}

struct DecodeOut {
  Mat main;
  std::array<Mat, 4> aux;
};

inline DecodeOut decode(const std::array<Mat, 4>& stages, const std::array<int, 4>& hs,
                        const std::array<int, 4>& ws, const rangekit::DecodeWeights& w) {
  const int h = hs[0];
  const int wd = ws[0];
  DecodeOut out;
  Mat fused(h * wd, 4 * w.unify[0].out);
  for (int i = 0; i < 4; ++i) {
    Mat u = linear(stages[static_cast<std::size_t>(i)], w.unify[static_cast<std::size_t>(i)]);
    if (hs[static_cast<std::size_t>(i)] != h || ws[static_cast<std::size_t>(i)] != wd) {
      u = bilinear_resize(u, hs[static_cast<std::size_t>(i)], ws[static_cast<std::size_t>(i)], h, wd);
    }
    for (int t = 0; t < h * wd; ++t) {
      for (int c = 0; c < u.d; ++c) fused.at(t, i * u.d + c) = u.at(t, c);
    }
    out.aux[static_cast<std::size_t>(i)] = linear(u, w.aux[static_cast<std::size_t>(i)]);
  }
  Mat t = linear(fused, w.fuse1);
  gelu_all(t);
  out.main = linear(t, w.fuse2);
  return out;
}

}  // namespace refnet

#endif
