#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace relground::relvae::nn {

/// Rectangle of an H x W grid that is actually computed. Everything outside
/// it is either never read or lies outside the grid (zero padding).
struct Window {
    int y0 = 0;
    int x0 = 0;
    int h = 0;
    int w = 0;

    static Window full(int h, int w) { return {0, 0, h, w}; }
    int area() const { return h * w; }
    bool contains(int y, int x) const { return y >= y0 && y < y0 + h && x >= x0 && x < x0 + w; }
    Window dilate(int m, int gh, int gw) const {
        const int ya = std::max(0, y0 - m), xa = std::max(0, x0 - m);
        const int yb = std::min(gh, y0 + h + m), xb = std::min(gw, x0 + w + m);
        return {ya, xa, yb - ya, xb - xa};
    }
};

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMat<T>>;
template <class T>
using CMatMap = Eigen::Map<const RowMat<T>>;
template <class T>
using VecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <class T>
using CVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

/// Square convolution with zero padding. Weights are laid out
/// [ky][kx][cin][cout], activations HWC inside their windows.
struct Conv {
    int cin = 0;
    int cout = 0;
    int k = 3;
    int stride = 1;
    int pad = 1;
    std::size_t w_off = 0;
    std::size_t b_off = 0;

    std::size_t weights() const { return static_cast<std::size_t>(k) * k * cin * cout; }
    int out_size(int n) const { return (n + 2 * pad - k) / stride + 1; }
};

/// Affine layer y = x W + b with W stored (nin x nout) row-major.
struct Dense {
    int nin = 0;
    int nout = 0;
    std::size_t w_off = 0;
    std::size_t b_off = 0;

    std::size_t weights() const { return static_cast<std::size_t>(nin) * nout; }
};

template <class T>
void im2col(const T* in, int H, int W, const Window& win_in, const Conv& c, const Window& win_out, T* cols) {
    const int kk = c.k * c.k * c.cin;
    for (int oy = 0; oy < win_out.h; ++oy)
        for (int ox = 0; ox < win_out.w; ++ox) {
            T* row = cols + static_cast<std::size_t>(oy * win_out.w + ox) * kk;
            const int by = (win_out.y0 + oy) * c.stride - c.pad;
            const int bx = (win_out.x0 + ox) * c.stride - c.pad;
            for (int ky = 0; ky < c.k; ++ky) {
                const int iy = by + ky;
                for (int kx = 0; kx < c.k; ++kx) {
                    const int ix = bx + kx;
                    T* dst = row + (ky * c.k + kx) * c.cin;
                    if (iy < 0 || iy >= H || ix < 0 || ix >= W) {
                        std::fill(dst, dst + c.cin, T(0));
                    } else {
                        const T* src = in + static_cast<std::size_t>((iy - win_in.y0) * win_in.w + (ix - win_in.x0)) * c.cin;
                        std::copy(src, src + c.cin, dst);
                    }
                }
            }
        }
}

template <class T>
void col2im_add(const T* cols, int H, int W, const Window& win_in, const Conv& c, const Window& win_out, T* din) {
    const int kk = c.k * c.k * c.cin;
    for (int oy = 0; oy < win_out.h; ++oy)
        for (int ox = 0; ox < win_out.w; ++ox) {
            const T* row = cols + static_cast<std::size_t>(oy * win_out.w + ox) * kk;
            const int by = (win_out.y0 + oy) * c.stride - c.pad;
            const int bx = (win_out.x0 + ox) * c.stride - c.pad;
            for (int ky = 0; ky < c.k; ++ky) {
                const int iy = by + ky;
                if (iy < 0 || iy >= H) continue;
                for (int kx = 0; kx < c.k; ++kx) {
                    const int ix = bx + kx;
                    if (ix < 0 || ix >= W) continue;
                    const T* src = row + (ky * c.k + kx) * c.cin;
                    T* dst = din + static_cast<std::size_t>((iy - win_in.y0) * win_in.w + (ix - win_in.x0)) * c.cin;
                    for (int ch = 0; ch < c.cin; ++ch) dst[ch] += src[ch];
                }
            }
        }
}

/// out (win_out.area x cout) = im2col(in) W + b. `cols` keeps the patch
/// matrix for the backward pass.
template <class T>
void conv_forward(const T* params, const Conv& c, const T* in, int H, int W, const Window& win_in,
                  const Window& win_out, std::vector<T>& cols, std::vector<T>& out) {
    const int n = win_out.area();
    const int kk = c.k * c.k * c.cin;
    cols.resize(static_cast<std::size_t>(n) * kk);
    out.resize(static_cast<std::size_t>(n) * c.cout);
    im2col(in, H, W, win_in, c, win_out, cols.data());
    CMatMap<T> A(cols.data(), n, kk);
    CMatMap<T> Wm(params + c.w_off, kk, c.cout);
    CVecMap<T> b(params + c.b_off, c.cout);
    MatMap<T> O(out.data(), n, c.cout);
    O.noalias() = A * Wm;
    O.rowwise() += b.transpose();
}

/// Accumulates weight/bias gradients; writes the input gradient when `din`
/// is non-null (accumulated into a zero-initialised buffer by the caller).
template <class T>
void conv_backward(const T* params, T* grad, const Conv& c, const std::vector<T>& cols, const T* dout, int H, int W,
                   const Window& win_in, const Window& win_out, T* din, std::vector<T>& dcols) {
    const int n = win_out.area();
    const int kk = c.k * c.k * c.cin;
    CMatMap<T> A(cols.data(), n, kk);
    CMatMap<T> D(dout, n, c.cout);
    MatMap<T> dW(grad + c.w_off, kk, c.cout);
    VecMap<T> db(grad + c.b_off, c.cout);
    dW.noalias() += A.transpose() * D;
    db += D.colwise().sum().transpose();
    if (!din) return;
    dcols.resize(static_cast<std::size_t>(n) * kk);
    CMatMap<T> Wm(params + c.w_off, kk, c.cout);
    MatMap<T> dC(dcols.data(), n, kk);
    dC.noalias() = D * Wm.transpose();
    col2im_add(dcols.data(), H, W, win_in, c, win_out, din);
}

template <class T>
void dense_forward(const T* params, const Dense& d, const T* in, T* out) {
    CMatMap<T> Wm(params + d.w_off, d.nin, d.nout);
    CVecMap<T> x(in, d.nin);
    VecMap<T> y(out, d.nout);
    y.noalias() = Wm.transpose() * x;
    y += CVecMap<T>(params + d.b_off, d.nout);
}

template <class T>
void dense_backward(const T* params, T* grad, const Dense& d, const T* in, const T* dout, T* din) {
    CVecMap<T> x(in, d.nin);
    CVecMap<T> g(dout, d.nout);
    MatMap<T>(grad + d.w_off, d.nin, d.nout).noalias() += x * g.transpose();
    VecMap<T>(grad + d.b_off, d.nout) += g;
    if (din) VecMap<T>(din, d.nin).noalias() = CMatMap<T>(params + d.w_off, d.nin, d.nout) * g;
}

template <class T>
void relu(std::vector<T>& v) {
    for (auto& x : v) x = x > T(0) ? x : T(0);
}

/// Masks the gradient by the stored post-activation values.
template <class T>
void relu_backward(const std::vector<T>& out, T* d) {
    for (std::size_t i = 0; i < out.size(); ++i)
        if (!(out[i] > T(0))) d[i] = T(0);
}

/// Numerically stable softmax.
template <class T>
void softmax(const T* logits, int n, T* p) {
    T m = logits[0];
    for (int i = 1; i < n; ++i) m = std::max(m, logits[i]);
    T s = 0;
    for (int i = 0; i < n; ++i) s += p[i] = std::exp(logits[i] - m);
    for (int i = 0; i < n; ++i) p[i] /= s;
}

}  // namespace relground::relvae::nn
