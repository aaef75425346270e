#include "jigsaw/nn.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "jigsaw/error.hpp"

namespace jigsaw::nn {
namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

struct Geometry {
  int channels, rows, cols;      // the "image" side
  int kernel, stride, pad;
  int out_rows, out_cols;        // the "column" side
};

// (C*k*k) x (Ho*Wo) patch matrix of an image.
MatRM im2col(const Tensor& img, const Geometry& g) {
  const int k = g.kernel;
  MatRM cols = MatRM::Zero(static_cast<Eigen::Index>(g.channels) * k * k,
                           static_cast<Eigen::Index>(g.out_rows) * g.out_cols);
  for (int c = 0; c < g.channels; ++c) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        double* row = cols.data() + (static_cast<Eigen::Index>(c * k + ki) * k + kj) * cols.cols();
        for (int oy = 0; oy < g.out_rows; ++oy) {
          const int iy = oy * g.stride - g.pad + ki;
          if (iy < 0 || iy >= g.rows) continue;
          for (int ox = 0; ox < g.out_cols; ++ox) {
            const int ix = ox * g.stride - g.pad + kj;
            if (ix < 0 || ix >= g.cols) continue;
            row[oy * g.out_cols + ox] = img.at(c, iy, ix);
          }
        }
      }
    }
  }
  return cols;
}

// Scatter-add of a patch matrix back onto an image; adjoint of im2col.
Tensor col2im(const MatRM& cols, const Geometry& g) {
  const int k = g.kernel;
  Tensor img(g.channels, g.rows, g.cols);
  for (int c = 0; c < g.channels; ++c) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const double* row = cols.data() + (static_cast<Eigen::Index>(c * k + ki) * k + kj) * cols.cols();
        for (int oy = 0; oy < g.out_rows; ++oy) {
          const int iy = oy * g.stride - g.pad + ki;
          if (iy < 0 || iy >= g.rows) continue;
          for (int ox = 0; ox < g.out_cols; ++ox) {
            const int ix = ox * g.stride - g.pad + kj;
            if (ix < 0 || ix >= g.cols) continue;
            img.at(c, iy, ix) += row[oy * g.out_cols + ox];
          }
        }
      }
    }
  }
  return img;
}

CMapRM as_matrix(const Tensor& t, Eigen::Index rows) {
  return CMapRM(t.data(), rows, static_cast<Eigen::Index>(t.size()) / rows);
}
MapRM as_matrix(Tensor& t, Eigen::Index rows) {
  return MapRM(t.data(), rows, static_cast<Eigen::Index>(t.size()) / rows);
}

void fill_normal(Tensor& t, Rng& rng, double stddev) {
  for (double& v : t.values()) v = stddev * normal_sample(rng);
}

}  // namespace

double normal_sample(Rng& rng) {
  // Box-Muller on our own uniforms; std::normal_distribution is not portable.
  const double u1 = 1.0 - uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad)
    : weight(out_channels, in_channels, kernel * kernel),
      bias(out_channels, 1, 1),
      weight_grad(out_channels, in_channels, kernel * kernel),
      bias_grad(out_channels, 1, 1),
      in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride), pad_(pad) {}

Tensor Conv2d::forward(const Tensor& x) const {
  if (x.channels() != in_) throw InvalidInput("Conv2d: channel mismatch");
  const Geometry g{in_, x.rows(), x.cols(), kernel_, stride_, pad_, out_rows(x.rows()), out_cols(x.cols())};
  if (g.out_rows <= 0 || g.out_cols <= 0) throw InvalidInput("Conv2d: input too small");
  const MatRM cols = im2col(x, g);
  Tensor y(out_, g.out_rows, g.out_cols);
  auto ym = as_matrix(y, out_);
  ym.noalias() = as_matrix(weight, out_) * cols;
  for (int o = 0; o < out_; ++o) ym.row(o).array() += bias.at(o, 0, 0);
  return y;
}

Tensor Conv2d::backward(const Tensor& x, const Tensor& dy, bool need_dx) {
  const Geometry g{in_, x.rows(), x.cols(), kernel_, stride_, pad_, out_rows(x.rows()), out_cols(x.cols())};
  if (dy.channels() != out_ || dy.rows() != g.out_rows || dy.cols() != g.out_cols) {
    throw InvalidInput("Conv2d: gradient shape mismatch");
  }
  const MatRM cols = im2col(x, g);
  const auto dym = as_matrix(dy, out_);
  as_matrix(weight_grad, out_).noalias() += dym * cols.transpose();
  for (int o = 0; o < out_; ++o) bias_grad.at(o, 0, 0) += dym.row(o).sum();
  if (!need_dx) return {};
  const MatRM dcols = as_matrix(weight, out_).transpose() * dym;
  return col2im(dcols, g);
}

Tensor Conv2d::backward_data(const Tensor& x, const Tensor& dy) const {
  const Geometry g{in_, x.rows(), x.cols(), kernel_, stride_, pad_, out_rows(x.rows()), out_cols(x.cols())};
  if (dy.channels() != out_ || dy.rows() != g.out_rows || dy.cols() != g.out_cols) {
    throw InvalidInput("Conv2d: gradient shape mismatch");
  }
  const MatRM dcols = as_matrix(weight, out_).transpose() * as_matrix(dy, out_);
  return col2im(dcols, g);
}

void Conv2d::init_normal(Rng& rng, double stddev) {
  fill_normal(weight, rng, stddev);
  bias.fill(0.0);
}

void Conv2d::collect(const std::string& prefix, std::vector<Param>& out) {
  out.push_back({prefix + ".weight", &weight, &weight_grad});
  out.push_back({prefix + ".bias", &bias, &bias_grad});
}

ConvTranspose2d::ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride, int pad)
    : weight(in_channels, out_channels, kernel * kernel),
      bias(out_channels, 1, 1),
      weight_grad(in_channels, out_channels, kernel * kernel),
      bias_grad(out_channels, 1, 1),
      in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride), pad_(pad) {}

Tensor ConvTranspose2d::forward(const Tensor& x) const {
  if (x.channels() != in_) throw InvalidInput("ConvTranspose2d: channel mismatch");
  const Geometry g{out_, out_rows(x.rows()), out_cols(x.cols()), kernel_, stride_, pad_, x.rows(), x.cols()};
  const MatRM cols = as_matrix(weight, in_).transpose() * as_matrix(x, in_);
  Tensor y = col2im(cols, g);
  for (int o = 0; o < out_; ++o) {
    for (double& v : y.plane(o)) v += bias.at(o, 0, 0);
  }
  return y;
}

Tensor ConvTranspose2d::backward(const Tensor& x, const Tensor& dy, bool need_dx) {
  const Geometry g{out_, out_rows(x.rows()), out_cols(x.cols()), kernel_, stride_, pad_, x.rows(), x.cols()};
  if (dy.channels() != out_ || dy.rows() != g.rows || dy.cols() != g.cols) {
    throw InvalidInput("ConvTranspose2d: gradient shape mismatch");
  }
  const MatRM dcols = im2col(dy, g);
  const auto xm = as_matrix(x, in_);
  as_matrix(weight_grad, in_).noalias() += xm * dcols.transpose();
  for (int o = 0; o < out_; ++o) {
    const auto p = dy.plane(o);
    double s = 0.0;
    for (double v : p) s += v;
    bias_grad.at(o, 0, 0) += s;
  }
  if (!need_dx) return {};
  Tensor dx(in_, x.rows(), x.cols());
  as_matrix(dx, in_).noalias() = as_matrix(weight, in_) * dcols;
  return dx;
}

void ConvTranspose2d::init_normal(Rng& rng, double stddev) {
  fill_normal(weight, rng, stddev);
  bias.fill(0.0);
}

void ConvTranspose2d::collect(const std::string& prefix, std::vector<Param>& out) {
  out.push_back({prefix + ".weight", &weight, &weight_grad});
  out.push_back({prefix + ".bias", &bias, &bias_grad});
}

Tensor leaky_relu(const Tensor& x, double slope) {
  Tensor y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : slope * v;
  return y;
}

Tensor leaky_relu_backward(const Tensor& x, const Tensor& dy, double slope) {
  Tensor dx = dy;
  const auto& xv = x.values();
  auto& dv = dx.values();
  for (std::size_t i = 0; i < dv.size(); ++i) {
    if (!(xv[i] > 0.0)) dv[i] *= slope;
  }
  return dx;
}

Tensor relu(const Tensor& x) { return leaky_relu(x, 0.0); }
Tensor relu_backward(const Tensor& x, const Tensor& dy) { return leaky_relu_backward(x, dy, 0.0); }

Tensor sigmoid(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) {
    v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx = dy;
  const auto& yv = y.values();
  auto& dv = dx.values();
  for (std::size_t i = 0; i < dv.size(); ++i) dv[i] *= yv[i] * (1.0 - yv[i]);
  return dx;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& t, int first) {
  Tensor a(first, t.rows(), t.cols());
  Tensor b(t.channels() - first, t.rows(), t.cols());
  const auto split = t.values().begin() + static_cast<std::ptrdiff_t>(a.size());
  std::copy(t.values().begin(), split, a.values().begin());
  std::copy(split, t.values().end(), b.values().begin());
  return {std::move(a), std::move(b)};
}

void zero_grads(const std::vector<Param>& params) {
  for (const Param& p : params) p.grad->fill(0.0);
}

Adam::Adam(std::vector<Param> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (!(lr > 0.0)) throw InvalidInput("learning rate must be positive");
  for (const Param& p : params_) {
    m_.emplace_back(p.value->channels(), p.value->rows(), p.value->cols());
    v_.emplace_back(p.value->channels(), p.value->rows(), p.value->cols());
  }
}

void Adam::zero_grad() { zero_grads(params_); }

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& w = params_[i].value->values();
    const auto& g = params_[i].grad->values();
    auto& m = m_[i].values();
    auto& v = v_[i].values();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      w[j] -= lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
    }
  }
}

}  // namespace jigsaw::nn
