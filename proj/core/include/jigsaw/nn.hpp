#pragma once

#include <string>
#include <vector>

#include "jigsaw/random.hpp"
#include "jigsaw/tensor.hpp"

namespace jigsaw::nn {

// A trainable tensor and its gradient accumulator.
struct Param {
  std::string name;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
};

// Square-kernel convolution with zero padding. Weight is stored as
// (out, in, k*k) so it reads as an out x (in*k*k) row-major matrix.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad);

  int out_rows(int in_rows) const { return (in_rows + 2 * pad_ - kernel_) / stride_ + 1; }
  int out_cols(int in_cols) const { return (in_cols + 2 * pad_ - kernel_) / stride_ + 1; }

  Tensor forward(const Tensor& x) const;
  // Accumulates into the gradient buffers; returns dL/dx unless need_dx is false.
  Tensor backward(const Tensor& x, const Tensor& dy, bool need_dx = true);
  // dL/dx only; parameter gradients are left alone.
  Tensor backward_data(const Tensor& x, const Tensor& dy) const;

  void init_normal(Rng& rng, double stddev);
  void collect(const std::string& prefix, std::vector<Param>& out);

  Tensor weight, bias;
  Tensor weight_grad, bias_grad;

 private:
  int in_ = 0, out_ = 0, kernel_ = 0, stride_ = 1, pad_ = 0;
};

// Adjoint of Conv2d: maps in x H x W to out x ((H-1)s - 2p + k) x (...).
// Weight is stored as (in, out, k*k).
class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride, int pad);

  int out_rows(int in_rows) const { return (in_rows - 1) * stride_ - 2 * pad_ + kernel_; }
  int out_cols(int in_cols) const { return (in_cols - 1) * stride_ - 2 * pad_ + kernel_; }

  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& dy, bool need_dx = true);

  void init_normal(Rng& rng, double stddev);
  void collect(const std::string& prefix, std::vector<Param>& out);

  Tensor weight, bias;
  Tensor weight_grad, bias_grad;

 private:
  int in_ = 0, out_ = 0, kernel_ = 0, stride_ = 1, pad_ = 0;
};

Tensor leaky_relu(const Tensor& x, double slope);
// dL/dx given the pre-activation x.
Tensor leaky_relu_backward(const Tensor& x, const Tensor& dy, double slope);
Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& dy);
Tensor sigmoid(const Tensor& x);
// dL/dx given the activation output y.
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);

// Splits channels [0, first) and [first, C) of a tensor.
std::pair<Tensor, Tensor> split_channels(const Tensor& t, int first);

double normal_sample(Rng& rng);

// Adaptive-moment optimizer over a fixed parameter list.
class Adam {
 public:
  Adam(std::vector<Param> params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void zero_grad();
  void step();

  double learning_rate() const { return lr_; }
  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }
  long steps() const { return t_; }

 private:
  std::vector<Param> params_;
  std::vector<Tensor> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

void zero_grads(const std::vector<Param>& params);

}  // namespace jigsaw::nn
