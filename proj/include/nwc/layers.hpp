#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "nwc/errors.hpp"
#include "nwc/rng.hpp"
#include "nwc/tensor.hpp"

namespace nwc {

struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;

  Param(std::string n, std::vector<int> s) : name(std::move(n)), shape(std::move(s)) {
    std::size_t count = 1;
    for (int d : shape) count *= static_cast<std::size_t>(d);
    value.assign(count, 0.0);
    grad.assign(count, 0.0);
  }

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

inline void glorot_uniform(Param& p, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : p.value) v = rng.uniform(-limit, limit);
}

}  // namespace detail

// Layers cache one entry per forward call (LIFO), so a layer invoked several
// times inside one unrolled recurrence backpropagates correctly when its
// backward calls arrive in reverse order.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x) = 0;
  virtual Tensor backward(const Tensor& grad) = 0;
  virtual std::vector<Param*> params() { return {}; }
  virtual void clear_cache() {}
};

// 2D convolution, stride 1, same padding, via im2col + GEMM.
class Conv2d : public Layer {
 public:
  Conv2d(std::string name, int c_in, int c_out, int kh, int kw, Rng& rng)
      : c_in_(c_in),
        c_out_(c_out),
        kh_(kh),
        kw_(kw),
        weight_(name + ".weight", {c_out, c_in, kh, kw}),
        bias_(name + ".bias", {c_out}) {
    if (kh % 2 == 0 || kw % 2 == 0)
      throw BuildError("Conv2d " + name + ": kernel sizes must be odd, got (" +
                       std::to_string(kh) + "," + std::to_string(kw) + ")");
    detail::glorot_uniform(weight_, c_in * kh * kw, c_out * kh * kw, rng);
  }

  Tensor forward(const Tensor& x) override {
    const int h = x.dim(1), w = x.dim(2);
    detail::RowMat col = im2col(x);
    detail::ConstMatMap wm(weight_.value.data(), c_out_, c_in_ * kh_ * kw_);
    detail::RowMat out_mat = col * wm.transpose();  // (H*W, c_out)
    Tensor y({c_out_, h, w});
    for (int co = 0; co < c_out_; ++co) {
      const double b = bias_.value[static_cast<std::size_t>(co)];
      for (int p = 0; p < h * w; ++p)
        y[static_cast<std::size_t>(co) * h * w + p] = out_mat(p, co) + b;
    }
    inputs_.push_back(x);
    return y;
  }

  Tensor backward(const Tensor& grad) override {
    const Tensor x = std::move(inputs_.back());
    inputs_.pop_back();
    const int h = x.dim(1), w = x.dim(2);
    const int k = c_in_ * kh_ * kw_;

    detail::RowMat dout(h * w, c_out_);
    for (int co = 0; co < c_out_; ++co) {
      double bsum = 0;
      for (int p = 0; p < h * w; ++p) {
        const double g = grad[static_cast<std::size_t>(co) * h * w + p];
        dout(p, co) = g;
        bsum += g;
      }
      bias_.grad[static_cast<std::size_t>(co)] += bsum;
    }

    detail::RowMat col = im2col(x);
    detail::MatMap dw(weight_.grad.data(), c_out_, k);
    dw.noalias() += dout.transpose() * col;

    detail::ConstMatMap wm(weight_.value.data(), c_out_, k);
    detail::RowMat dcol = dout * wm;  // (H*W, k)
    return col2im(dcol, h, w);
  }

  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  void clear_cache() override { inputs_.clear(); }

  int out_channels() const { return c_out_; }

 private:
  detail::RowMat im2col(const Tensor& x) const {
    const int h = x.dim(1), w = x.dim(2);
    const int ph = kh_ / 2, pw = kw_ / 2;
    detail::RowMat col = detail::RowMat::Zero(h * w, c_in_ * kh_ * kw_);
    for (int ci = 0; ci < c_in_; ++ci) {
      const double* plane = x.data() + static_cast<std::size_t>(ci) * h * w;
      for (int i = 0; i < kh_; ++i)
        for (int j = 0; j < kw_; ++j) {
          const int kcol = (ci * kh_ + i) * kw_ + j;
          const int r_lo = std::max(0, ph - i), r_hi = std::min(h, h + ph - i);
          const int c_lo = std::max(0, pw - j), c_hi = std::min(w, w + pw - j);
          for (int r = r_lo; r < r_hi; ++r) {
            const double* src = plane + static_cast<std::size_t>(r + i - ph) * w;
            for (int c = c_lo; c < c_hi; ++c)
              col(r * w + c, kcol) = src[c + j - pw];
          }
        }
    }
    return col;
  }

  Tensor col2im(const detail::RowMat& dcol, int h, int w) const {
    const int ph = kh_ / 2, pw = kw_ / 2;
    Tensor dx({c_in_, h, w});
    for (int ci = 0; ci < c_in_; ++ci) {
      double* plane = dx.data() + static_cast<std::size_t>(ci) * h * w;
      for (int i = 0; i < kh_; ++i)
        for (int j = 0; j < kw_; ++j) {
          const int kcol = (ci * kh_ + i) * kw_ + j;
          const int r_lo = std::max(0, ph - i), r_hi = std::min(h, h + ph - i);
          const int c_lo = std::max(0, pw - j), c_hi = std::min(w, w + pw - j);
          for (int r = r_lo; r < r_hi; ++r) {
            double* dst = plane + static_cast<std::size_t>(r + i - ph) * w;
            for (int c = c_lo; c < c_hi; ++c)
              dst[c + j - pw] += dcol(r * w + c, kcol);
          }
        }
    }
    return dx;
  }

  int c_in_, c_out_, kh_, kw_;
  Param weight_, bias_;
  std::vector<Tensor> inputs_;
};

enum class Activation { relu, leaky_relu, elu, sigmoid, tanh };

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "leaky_relu") return Activation::leaky_relu;
  if (s == "elu") return Activation::elu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation: " + s);
}

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::elu: return "elu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

class Activate : public Layer {
 public:
  explicit Activate(Activation kind) : kind_(kind) {}

  Tensor forward(const Tensor& x) override {
    Tensor y = x;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = apply(x[i]);
    // sigmoid/tanh derivatives use the output; the rest use the input
    cache_.push_back(uses_output() ? y : x);
    return y;
  }

  Tensor backward(const Tensor& grad) override {
    const Tensor cached = std::move(cache_.back());
    cache_.pop_back();
    Tensor dx = grad;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= derivative(cached[i]);
    return dx;
  }

  void clear_cache() override { cache_.clear(); }

 private:
  bool uses_output() const {
    return kind_ == Activation::sigmoid || kind_ == Activation::tanh;
  }

  double apply(double v) const {
    switch (kind_) {
      case Activation::relu: return v > 0 ? v : 0;
      case Activation::leaky_relu: return v > 0 ? v : 0.01 * v;
      case Activation::elu: return v > 0 ? v : std::expm1(v);
      case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-v));
      case Activation::tanh: return std::tanh(v);
    }
    return v;
  }

  // Argument is the cached value: output for sigmoid/tanh, input otherwise.
  double derivative(double c) const {
    switch (kind_) {
      case Activation::relu: return c > 0 ? 1.0 : 0.0;
      case Activation::leaky_relu: return c > 0 ? 1.0 : 0.01;
      case Activation::elu: return c > 0 ? 1.0 : std::exp(c);
      case Activation::sigmoid: return c * (1.0 - c);
      case Activation::tanh: return 1.0 - c * c;
    }
    return 1.0;
  }

  Activation kind_;
  std::vector<Tensor> cache_;
};

class MaxPool2d : public Layer {
 public:
  MaxPool2d(int ph, int pw) : ph_(ph), pw_(pw) {}

  Tensor forward(const Tensor& x) override {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    if (h % ph_ != 0 || w % pw_ != 0)
      throw BuildError("MaxPool2d: input " + std::to_string(h) + "x" +
                       std::to_string(w) + " not divisible by pool (" +
                       std::to_string(ph_) + "," + std::to_string(pw_) + ")");
    const int oh = h / ph_, ow = w / pw_;
    Tensor y({c, oh, ow});
    Cache cache;
    cache.in_h = h;
    cache.in_w = w;
    cache.argmax.resize(static_cast<std::size_t>(c) * oh * ow);
    for (int ci = 0; ci < c; ++ci)
      for (int r = 0; r < oh; ++r)
        for (int col = 0; col < ow; ++col) {
          double best = -1e300;
          std::size_t best_idx = 0;
          for (int i = 0; i < ph_; ++i)
            for (int j = 0; j < pw_; ++j) {
              const std::size_t idx =
                  (static_cast<std::size_t>(ci) * h + r * ph_ + i) * w +
                  col * pw_ + j;
              if (x[idx] > best) {
                best = x[idx];
                best_idx = idx;
              }
            }
          y(ci, r, col) = best;
          cache.argmax[(static_cast<std::size_t>(ci) * oh + r) * ow + col] = best_idx;
        }
    caches_.push_back(std::move(cache));
    return y;
  }

  Tensor backward(const Tensor& grad) override {
    const Cache cache = std::move(caches_.back());
    caches_.pop_back();
    const int c = grad.dim(0), oh = grad.dim(1), ow = grad.dim(2);
    Tensor dx({c, cache.in_h, cache.in_w});
    for (std::size_t i = 0; i < grad.size(); ++i) dx[cache.argmax[i]] += grad[i];
    (void)oh;
    (void)ow;
    return dx;
  }

  void clear_cache() override { caches_.clear(); }

 private:
  struct Cache {
    int in_h = 0, in_w = 0;
    std::vector<std::size_t> argmax;
  };
  int ph_, pw_;
  std::vector<Cache> caches_;
};

class UpsampleNearest2d : public Layer {
 public:
  explicit UpsampleNearest2d(int factor) : f_(factor) {}

  Tensor forward(const Tensor& x) override {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor y({c, h * f_, w * f_});
    for (int ci = 0; ci < c; ++ci)
      for (int r = 0; r < h * f_; ++r)
        for (int col = 0; col < w * f_; ++col)
          y(ci, r, col) = x(ci, r / f_, col / f_);
    return y;
  }

  Tensor backward(const Tensor& grad) override {
    const int c = grad.dim(0), h = grad.dim(1) / f_, w = grad.dim(2) / f_;
    Tensor dx({c, h, w});
    for (int ci = 0; ci < c; ++ci)
      for (int r = 0; r < grad.dim(1); ++r)
        for (int col = 0; col < grad.dim(2); ++col)
          dx(ci, r / f_, col / f_) += grad(ci, r, col);
    return dx;
  }

 private:
  int f_;
};

// Affine map applied per column: input (C) or (C, L) -> (out) or (out, L).
class Linear : public Layer {
 public:
  Linear(std::string name, int in, int out, Rng& rng)
      : in_(in),
        out_(out),
        weight_(name + ".weight", {out, in}),
        bias_(name + ".bias", {out}) {
    detail::glorot_uniform(weight_, in, out, rng);
  }

  Tensor forward(const Tensor& x) override {
    const int cols = x.rank() == 2 ? x.dim(1) : 1;
    detail::ConstMatMap xm(x.data(), in_, cols);
    detail::ConstMatMap wm(weight_.value.data(), out_, in_);
    Tensor y = x.rank() == 2 ? Tensor({out_, cols}) : Tensor({out_});
    detail::MatMap ym(y.data(), out_, cols);
    ym.noalias() = wm * xm;
    for (int o = 0; o < out_; ++o)
      ym.row(o).array() += bias_.value[static_cast<std::size_t>(o)];
    inputs_.push_back(x);
    return y;
  }

  Tensor backward(const Tensor& grad) override {
    const Tensor x = std::move(inputs_.back());
    inputs_.pop_back();
    const int cols = x.rank() == 2 ? x.dim(1) : 1;
    detail::ConstMatMap xm(x.data(), in_, cols);
    detail::ConstMatMap gm(grad.data(), out_, cols);
    detail::MatMap dw(weight_.grad.data(), out_, in_);
    dw.noalias() += gm * xm.transpose();
    for (int o = 0; o < out_; ++o)
      bias_.grad[static_cast<std::size_t>(o)] += gm.row(o).sum();
    detail::ConstMatMap wm(weight_.value.data(), out_, in_);
    Tensor dx = x.rank() == 2 ? Tensor({in_, cols}) : Tensor({in_});
    detail::MatMap dxm(dx.data(), in_, cols);
    dxm.noalias() = wm.transpose() * gm;
    return dx;
  }

  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  void clear_cache() override { inputs_.clear(); }

 private:
  int in_, out_;
  Param weight_, bias_;
  std::vector<Tensor> inputs_;
};

// Gated recurrent memory over the positional axis of a (C, L) signal.
// Gate layout in the stacked pre-activation: input, forget, cell, output.
class Lstm1d : public Layer {
 public:
  Lstm1d(std::string name, int in, int hidden, Rng& rng)
      : in_(in),
        hidden_(hidden),
        wx_(name + ".wx", {4 * hidden, in}),
        wh_(name + ".wh", {4 * hidden, hidden}),
        bias_(name + ".bias", {4 * hidden}) {
    detail::glorot_uniform(wx_, in, hidden, rng);
    detail::glorot_uniform(wh_, hidden, hidden, rng);
    // forget-gate bias starts at 1 so early training keeps cell state
    for (int i = hidden; i < 2 * hidden; ++i)
      bias_.value[static_cast<std::size_t>(i)] = 1.0;
  }

  Tensor forward(const Tensor& x) override {
    const int steps = x.dim(1);
    Cache cache;
    cache.x = x;
    cache.gates.assign(static_cast<std::size_t>(steps) * 4 * hidden_, 0.0);
    cache.cell.assign(static_cast<std::size_t>(steps) * hidden_, 0.0);
    cache.hidden.assign(static_cast<std::size_t>(steps) * hidden_, 0.0);

    detail::ConstMatMap wxm(wx_.value.data(), 4 * hidden_, in_);
    detail::ConstMatMap whm(wh_.value.data(), 4 * hidden_, hidden_);
    Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(hidden_);
    Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(hidden_);
    Tensor y({hidden_, steps});

    for (int t = 0; t < steps; ++t) {
      Eigen::VectorXd xt(in_);
      for (int i = 0; i < in_; ++i) xt[i] = x(i, t);
      Eigen::VectorXd z = wxm * xt + whm * h_prev;
      for (int i = 0; i < 4 * hidden_; ++i) z[i] += bias_.value[static_cast<std::size_t>(i)];

      double* gates = cache.gates.data() + static_cast<std::size_t>(t) * 4 * hidden_;
      double* cell = cache.cell.data() + static_cast<std::size_t>(t) * hidden_;
      double* hid = cache.hidden.data() + static_cast<std::size_t>(t) * hidden_;
      for (int i = 0; i < hidden_; ++i) {
        const double gi = sigmoid(z[i]);
        const double gf = sigmoid(z[hidden_ + i]);
        const double gg = std::tanh(z[2 * hidden_ + i]);
        const double go = sigmoid(z[3 * hidden_ + i]);
        gates[i] = gi;
        gates[hidden_ + i] = gf;
        gates[2 * hidden_ + i] = gg;
        gates[3 * hidden_ + i] = go;
        const double c_new = gf * c_prev[i] + gi * gg;
        cell[i] = c_new;
        const double h_new = go * std::tanh(c_new);
        hid[i] = h_new;
        y(i, t) = h_new;
      }
      for (int i = 0; i < hidden_; ++i) {
        h_prev[i] = hid[i];
        c_prev[i] = cell[i];
      }
    }
    caches_.push_back(std::move(cache));
    return y;
  }

  Tensor backward(const Tensor& grad) override {
    const Cache cache = std::move(caches_.back());
    caches_.pop_back();
    const int steps = cache.x.dim(1);

    detail::ConstMatMap wxm(wx_.value.data(), 4 * hidden_, in_);
    detail::ConstMatMap whm(wh_.value.data(), 4 * hidden_, hidden_);
    detail::MatMap dwx(wx_.grad.data(), 4 * hidden_, in_);
    detail::MatMap dwh(wh_.grad.data(), 4 * hidden_, hidden_);

    Tensor dx({in_, steps});
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(hidden_);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(hidden_);

    for (int t = steps - 1; t >= 0; --t) {
      const double* gates = cache.gates.data() + static_cast<std::size_t>(t) * 4 * hidden_;
      const double* cell = cache.cell.data() + static_cast<std::size_t>(t) * hidden_;
      const double* c_prev =
          t > 0 ? cache.cell.data() + static_cast<std::size_t>(t - 1) * hidden_ : nullptr;
      const double* h_prev =
          t > 0 ? cache.hidden.data() + static_cast<std::size_t>(t - 1) * hidden_ : nullptr;

      Eigen::VectorXd dz(4 * hidden_);
      for (int i = 0; i < hidden_; ++i) {
        const double gi = gates[i], gf = gates[hidden_ + i];
        const double gg = gates[2 * hidden_ + i], go = gates[3 * hidden_ + i];
        const double tc = std::tanh(cell[i]);
        const double dh = grad(i, t) + dh_next[i];
        const double dc = dh * go * (1 - tc * tc) + dc_next[i];
        const double cp = c_prev ? c_prev[i] : 0.0;
        dz[i] = dc * gg * gi * (1 - gi);                     // input gate
        dz[hidden_ + i] = dc * cp * gf * (1 - gf);           // forget gate
        dz[2 * hidden_ + i] = dc * gi * (1 - gg * gg);       // cell candidate
        dz[3 * hidden_ + i] = dh * tc * go * (1 - go);       // output gate
        dc_next[i] = dc * gf;
      }

      Eigen::VectorXd xt(in_);
      for (int i = 0; i < in_; ++i) xt[i] = cache.x(i, t);
      Eigen::VectorXd hp = Eigen::VectorXd::Zero(hidden_);
      if (h_prev)
        for (int i = 0; i < hidden_; ++i) hp[i] = h_prev[i];

      dwx.noalias() += dz * xt.transpose();
      dwh.noalias() += dz * hp.transpose();
      for (int i = 0; i < 4 * hidden_; ++i)
        bias_.grad[static_cast<std::size_t>(i)] += dz[i];

      Eigen::VectorXd dxt = wxm.transpose() * dz;
      for (int i = 0; i < in_; ++i) dx(i, t) = dxt[i];
      dh_next = whm.transpose() * dz;
    }
    return dx;
  }

  std::vector<Param*> params() override { return {&wx_, &wh_, &bias_}; }
  void clear_cache() override { caches_.clear(); }

 private:
  static double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

  struct Cache {
    Tensor x;
    std::vector<double> gates;   // (steps, 4, hidden)
    std::vector<double> cell;    // (steps, hidden)
    std::vector<double> hidden;  // (steps, hidden)
  };

  int in_, hidden_;
  Param wx_, wh_, bias_;
  std::vector<Cache> caches_;
};

inline Tensor concat_channels(const Tensor& a, const Tensor& b) {
  Tensor y({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
  std::copy(a.data(), a.data() + a.size(), y.data());
  std::copy(b.data(), b.data() + b.size(), y.data() + a.size());
  return y;
}

inline std::pair<Tensor, Tensor> split_channels(const Tensor& grad, int c_a) {
  Tensor ga({c_a, grad.dim(1), grad.dim(2)});
  Tensor gb({grad.dim(0) - c_a, grad.dim(1), grad.dim(2)});
  std::copy(grad.data(), grad.data() + ga.size(), ga.data());
  std::copy(grad.data() + ga.size(), grad.data() + grad.size(), gb.data());
  return {std::move(ga), std::move(gb)};
}

}  // namespace nwc
