#include "bdnas/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bdnas {
namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (t.shape().rank() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must be rank " + std::to_string(rank) +
                     ", got " + t.shape().str());
  }
}

void require_stride(int stride, const char* op) {
  if (stride != 1 && stride != 2) {
    throw ShapeError(std::string(op) + ": stride must be 1 or 2, got " + std::to_string(stride));
  }
}

// Range of output columns ow for which iw = ow*stride + offset lies in [0, in).
struct ValidRange {
  std::size_t lo;
  std::size_t hi;  // exclusive
};

ValidRange valid_outputs(std::ptrdiff_t offset, std::size_t in, std::size_t out, int stride) {
  std::ptrdiff_t lo = 0;
  if (offset < 0) lo = (-offset + stride - 1) / stride;
  std::ptrdiff_t last = static_cast<std::ptrdiff_t>(in) - 1 - offset;
  std::ptrdiff_t hi = last < 0 ? 0 : last / stride + 1;
  hi = std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(out));
  if (hi < lo) hi = lo;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

struct ConvGeom {
  std::size_t n, cin, h, w, cout, kh, kw, oh, ow;
  int stride, pad;
};

// Shared loop nest for dense and depthwise convolution. `groups_dense`
// selects dense (every output channel sees every input channel) versus
// depthwise (output channel c sees input channel c only).
template <bool Dense, typename Fn>
void conv_loops(const ConvGeom& g, Fn&& fn) {
  const std::size_t cin_per = Dense ? g.cin : 1;
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t co = 0; co < g.cout; ++co) {
      for (std::size_t cj = 0; cj < cin_per; ++cj) {
        const std::size_t ci = Dense ? cj : co;
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          const auto yoff = static_cast<std::ptrdiff_t>(ky) - g.pad;
          const auto rows = valid_outputs(yoff, g.h, g.oh, g.stride);
          for (std::size_t kx = 0; kx < g.kw; ++kx) {
            const auto xoff = static_cast<std::ptrdiff_t>(kx) - g.pad;
            const auto cols = valid_outputs(xoff, g.w, g.ow, g.stride);
            const std::size_t widx = ((co * cin_per + cj) * g.kh + ky) * g.kw + kx;
            for (std::size_t oy = rows.lo; oy < rows.hi; ++oy) {
              const std::size_t iy = oy * g.stride + yoff;
              const std::size_t xrow = ((n * g.cin + ci) * g.h + iy) * g.w;
              const std::size_t yrow = ((n * g.cout + co) * g.oh + oy) * g.ow;
              fn(widx, xrow, yrow, cols, xoff);
            }
          }
        }
      }
    }
  }
}

template <bool Dense>
Tensor conv_impl(const Tensor& x, const Tensor& w, int stride, int padding, const char* op) {
  require_rank(x, 4, op, "input");
  require_rank(w, 4, op, "weight");
  require_stride(stride, op);
  if (padding < 0) throw ShapeError(std::string(op) + ": negative padding");
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  if (Dense && ws[1] != xs[1]) {
    throw ShapeError(std::string(op) + ": weight " + ws.str() + " expects " +
                     std::to_string(ws[1]) + " input channels, input is " + xs.str());
  }
  if (!Dense && (ws[0] != xs[1] || ws[1] != 1)) {
    throw ShapeError(std::string(op) + ": weight " + ws.str() + " needs shape (" +
                     std::to_string(xs[1]) + ",1,k,k) for input " + xs.str());
  }
  ConvGeom g{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], ws[3], 0, 0, stride, padding};
  g.oh = conv_out_extent(g.h, g.kh, stride, padding);
  g.ow = conv_out_extent(g.w, g.kw, stride, padding);

  std::vector<Real> out(g.n * g.cout * g.oh * g.ow, Real{0});
  {
    const Real* xv = x.values().data();
    const Real* wv = w.values().data();
    Real* yv = out.data();
    conv_loops<Dense>(g, [&](std::size_t widx, std::size_t xrow, std::size_t yrow,
                             ValidRange cols, std::ptrdiff_t xoff) {
      const Real wk = wv[widx];
      for (std::size_t ox = cols.lo; ox < cols.hi; ++ox) {
        yv[yrow + ox] += wk * xv[xrow + ox * g.stride + xoff];
      }
    });
  }

  return Tensor::make_result(
      Shape{g.n, g.cout, g.oh, g.ow}, std::move(out), {x, w}, [g](detail::Node& self) {
        auto& xn = *self.inputs[0];
        auto& wn = *self.inputs[1];
        const Real* dy = self.grad.data();
        if (xn.requires_grad) {
          Real* dx = xn.grad_buffer().data();
          const Real* wv = wn.value.data();
          conv_loops<Dense>(g, [&](std::size_t widx, std::size_t xrow, std::size_t yrow,
                                   ValidRange cols, std::ptrdiff_t xoff) {
            const Real wk = wv[widx];
            for (std::size_t ox = cols.lo; ox < cols.hi; ++ox) {
              dx[xrow + ox * g.stride + xoff] += wk * dy[yrow + ox];
            }
          });
        }
        if (wn.requires_grad) {
          Real* dw = wn.grad_buffer().data();
          const Real* xv = xn.value.data();
          conv_loops<Dense>(g, [&](std::size_t widx, std::size_t xrow, std::size_t yrow,
                                   ValidRange cols, std::ptrdiff_t xoff) {
            Real acc = 0;
            for (std::size_t ox = cols.lo; ox < cols.hi; ++ox) {
              acc += xv[xrow + ox * g.stride + xoff] * dy[yrow + ox];
            }
            dw[widx] += acc;
          });
        }
      });
}

}  // namespace

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, int stride, int padding) {
  const auto span = static_cast<std::ptrdiff_t>(in) + 2 * padding - static_cast<std::ptrdiff_t>(kernel);
  if (span < 0) {
    throw ShapeError("kernel " + std::to_string(kernel) + " does not fit extent " +
                     std::to_string(in) + " with padding " + std::to_string(padding));
  }
  return static_cast<std::size_t>(span / stride) + 1;
}

Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int padding) {
  return conv_impl<true>(x, w, stride, padding, "conv2d");
}

Tensor depthwise_conv2d(const Tensor& x, const Tensor& w, int stride, int padding) {
  return conv_impl<false>(x, w, stride, padding, "depthwise_conv2d");
}

Tensor relu6(const Tensor& x) {
  auto xv = x.values();
  std::vector<Real> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::min(std::max(xv[i], Real{0}), Real{6});
  return Tensor::make_result(x.shape(), std::move(out), {x}, [](detail::Node& self) {
    auto& xn = *self.inputs[0];
    auto dx = xn.grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const Real v = xn.value[i];
      if (v > 0 && v < 6) dx[i] += self.grad[i];
    }
  });
}

Tensor channel_affine(const Tensor& x, const Tensor& scale, const Tensor& bias) {
  const auto& xs = x.shape();
  if (xs.rank() != 2 && xs.rank() != 4) {
    throw ShapeError("channel_affine: input must be rank 2 or 4, got " + xs.str());
  }
  const std::size_t c = xs[1];
  if (scale.shape() != Shape{c} || bias.shape() != Shape{c}) {
    throw ShapeError("channel_affine: scale " + scale.shape().str() + " and bias " +
                     bias.shape().str() + " must both have length " + std::to_string(c));
  }
  const std::size_t n = xs[0];
  const std::size_t plane = xs.rank() == 4 ? xs[2] * xs[3] : 1;
  auto xv = x.values();
  auto sv = scale.values();
  auto bv = bias.values();
  std::vector<Real> out(xv.size());
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (b * c + ch) * plane;
      for (std::size_t i = 0; i < plane; ++i) out[base + i] = sv[ch] * xv[base + i] + bv[ch];
    }
  }
  return Tensor::make_result(xs, std::move(out), {x, scale, bias},
                             [n, c, plane](detail::Node& self) {
    auto& xn = *self.inputs[0];
    auto& sn = *self.inputs[1];
    auto& bn = *self.inputs[2];
    const Real* dy = self.grad.data();
    Real* dx = xn.requires_grad ? xn.grad_buffer().data() : nullptr;
    Real* ds = sn.requires_grad ? sn.grad_buffer().data() : nullptr;
    Real* db = bn.requires_grad ? bn.grad_buffer().data() : nullptr;
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const std::size_t base = (b * c + ch) * plane;
        Real gs = 0, gb = 0;
        for (std::size_t i = 0; i < plane; ++i) {
          const Real g = dy[base + i];
          if (dx) dx[base + i] += sn.value[ch] * g;
          gs += xn.value[base + i] * g;
          gb += g;
        }
        if (ds) ds[ch] += gs;
        if (db) db[ch] += gb;
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shapes " + a.shape().str() + " and " + b.shape().str() + " differ");
  }
  auto av = a.values();
  auto bv = b.values();
  std::vector<Real> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      auto d = in->grad_buffer();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i];
    }
  });
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank(x, 4, "global_avg_pool", "input");
  const auto& xs = x.shape();
  const std::size_t nc = xs[0] * xs[1];
  const std::size_t plane = xs[2] * xs[3];
  auto xv = x.values();
  std::vector<Real> out(nc);
  for (std::size_t i = 0; i < nc; ++i) {
    Real acc = 0;
    for (std::size_t j = 0; j < plane; ++j) acc += xv[i * plane + j];
    out[i] = acc / static_cast<Real>(plane);
  }
  return Tensor::make_result(Shape{xs[0], xs[1]}, std::move(out), {x},
                             [nc, plane](detail::Node& self) {
    auto dx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < nc; ++i) {
      const Real g = self.grad[i] / static_cast<Real>(plane);
      for (std::size_t j = 0; j < plane; ++j) dx[i * plane + j] += g;
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank(x, 2, "linear", "input");
  require_rank(w, 2, "linear", "weight");
  const std::size_t n = x.shape()[0], in = x.shape()[1], outf = w.shape()[0];
  if (w.shape()[1] != in || b.shape() != Shape{outf}) {
    throw ShapeError("linear: input " + x.shape().str() + ", weight " + w.shape().str() +
                     ", bias " + b.shape().str() + " are incompatible");
  }
  auto xv = x.values();
  auto wv = w.values();
  auto bv = b.values();
  std::vector<Real> out(n * outf);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t o = 0; o < outf; ++o) {
      Real acc = bv[o];
      for (std::size_t i = 0; i < in; ++i) acc += xv[r * in + i] * wv[o * in + i];
      out[r * outf + o] = acc;
    }
  }
  return Tensor::make_result(Shape{n, outf}, std::move(out), {x, w, b},
                             [n, in, outf](detail::Node& self) {
    auto& xn = *self.inputs[0];
    auto& wn = *self.inputs[1];
    auto& bn = *self.inputs[2];
    const Real* dy = self.grad.data();
    if (xn.requires_grad) {
      auto dx = xn.grad_buffer();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t o = 0; o < outf; ++o)
          for (std::size_t i = 0; i < in; ++i) dx[r * in + i] += dy[r * outf + o] * wn.value[o * in + i];
    }
    if (wn.requires_grad) {
      auto dw = wn.grad_buffer();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t o = 0; o < outf; ++o)
          for (std::size_t i = 0; i < in; ++i) dw[o * in + i] += dy[r * outf + o] * xn.value[r * in + i];
    }
    if (bn.requires_grad) {
      auto db = bn.grad_buffer();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t o = 0; o < outf; ++o) db[o] += dy[r * outf + o];
    }
  });
}

namespace {

std::pair<std::size_t, std::size_t> rows_cols(const Shape& s, const char* op) {
  if (s.rank() == 1) return {1, s[0]};
  if (s.rank() == 2) return {s[0], s[1]};
  throw ShapeError(std::string(op) + ": expected rank 1 or 2, got " + s.str());
}

void check_labels(std::span<const int> labels, std::size_t rows, std::size_t classes) {
  if (labels.size() != rows) {
    throw ShapeError("label count " + std::to_string(labels.size()) + " does not match batch " +
                     std::to_string(rows));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw std::out_of_range("label " + std::to_string(y) + " outside [0, " +
                              std::to_string(classes) + ")");
    }
  }
}

void softmax_rows(std::span<const Real> z, std::span<Real> p, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* zr = z.data() + r * cols;
    Real* pr = p.data() + r * cols;
    const Real m = *std::max_element(zr, zr + cols);
    Real s = 0;
    for (std::size_t c = 0; c < cols; ++c) s += (pr[c] = std::exp(zr[c] - m));
    for (std::size_t c = 0; c < cols; ++c) pr[c] /= s;
  }
}

}  // namespace

Tensor softmax(const Tensor& z) {
  auto [rows, cols] = rows_cols(z.shape(), "softmax");
  std::vector<Real> p(z.numel());
  softmax_rows(z.values(), p, rows, cols);
  return Tensor::make_result(z.shape(), std::move(p), {z}, [rows, cols](detail::Node& self) {
    auto dz = self.inputs[0]->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const Real* pr = self.value.data() + r * cols;
      const Real* gr = self.grad.data() + r * cols;
      Real dot = 0;
      for (std::size_t c = 0; c < cols; ++c) dot += pr[c] * gr[c];
      for (std::size_t c = 0; c < cols; ++c) dz[r * cols + c] += pr[c] * (gr[c] - dot);
    }
  });
}

Tensor cross_entropy(const Tensor& probs, std::span<const int> labels) {
  auto [rows, cols] = rows_cols(probs.shape(), "cross_entropy");
  check_labels(labels, rows, cols);
  auto pv = probs.values();
  Real loss = 0;
  for (std::size_t r = 0; r < rows; ++r) loss -= std::log(pv[r * cols + labels[r]]);
  loss /= static_cast<Real>(rows);
  std::vector<int> ys(labels.begin(), labels.end());
  return Tensor::make_result(Shape{1}, {loss}, {probs},
                             [rows, cols, ys = std::move(ys)](detail::Node& self) {
    auto& pn = *self.inputs[0];
    auto dp = pn.grad_buffer();
    const Real g = self.grad[0] / static_cast<Real>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t i = r * cols + ys[r];
      dp[i] -= g / pn.value[i];
    }
  });
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  auto [rows, cols] = rows_cols(logits.shape(), "softmax_cross_entropy");
  check_labels(labels, rows, cols);
  std::vector<Real> p(logits.numel());
  softmax_rows(logits.values(), p, rows, cols);
  auto zv = logits.values();
  Real loss = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* zr = zv.data() + r * cols;
    const Real m = *std::max_element(zr, zr + cols);
    Real s = 0;
    for (std::size_t c = 0; c < cols; ++c) s += std::exp(zr[c] - m);
    loss += m + std::log(s) - zr[labels[r]];
  }
  loss /= static_cast<Real>(rows);
  std::vector<int> ys(labels.begin(), labels.end());
  return Tensor::make_result(
      Shape{1}, {loss}, {logits},
      [rows, cols, ys = std::move(ys), p = std::move(p)](detail::Node& self) {
        auto dz = self.inputs[0]->grad_buffer();
        const Real g = self.grad[0] / static_cast<Real>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < cols; ++c) {
            const Real target = static_cast<int>(c) == ys[r] ? Real{1} : Real{0};
            dz[r * cols + c] += g * (p[r * cols + c] - target);
          }
        }
      });
}

Tensor weighted_sum(const Tensor& x, std::span<const Real> weights) {
  if (weights.size() != x.numel()) {
    throw ShapeError("weighted_sum: " + std::to_string(weights.size()) + " weights for " +
                     x.shape().str());
  }
  auto xv = x.values();
  Real acc = 0;
  for (std::size_t i = 0; i < xv.size(); ++i) acc += weights[i] * xv[i];
  std::vector<Real> w(weights.begin(), weights.end());
  return Tensor::make_result(Shape{1}, {acc}, {x}, [w = std::move(w)](detail::Node& self) {
    auto dx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[0] * w[i];
  });
}

}  // namespace bdnas
