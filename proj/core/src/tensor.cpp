#include "jigsaw/tensor.hpp"

#include <algorithm>
#include <numeric>

#include "jigsaw/error.hpp"
#include "jigsaw/version.hpp"

namespace jigsaw {

#ifndef JIGSAW_VERSION
#define JIGSAW_VERSION "0.0.0"
#endif

std::string_view tool_version() { return JIGSAW_VERSION; }

Tensor::Tensor(int channels, int rows, int cols, double fill)
    : channels_(channels), rows_(rows), cols_(cols) {
  if (channels < 0 || rows < 0 || cols < 0) throw InvalidInput("negative tensor extent");
  data_.assign(static_cast<std::size_t>(channels) * rows * cols, fill);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::crop_cols(int col_begin, int width) const { return crop(0, col_begin, rows_, width); }

Tensor Tensor::crop(int row, int col, int height, int width) const {
  if (row < 0 || col < 0 || height < 0 || width < 0 || row + height > rows_ || col + width > cols_) {
    throw InvalidInput("crop rectangle outside tensor");
  }
  Tensor out(channels_, height, width);
  for (int c = 0; c < channels_; ++c) {
    for (int r = 0; r < height; ++r) {
      const double* src = &data_[index(c, row + r, col)];
      std::copy(src, src + width, &out.at(c, r, 0));
    }
  }
  return out;
}

void Tensor::paste(const Tensor& src, int row, int col) {
  if (src.channels_ != channels_ || row < 0 || col < 0 || row + src.rows_ > rows_ ||
      col + src.cols_ > cols_) {
    throw InvalidInput("paste rectangle outside tensor");
  }
  for (int c = 0; c < channels_; ++c) {
    for (int r = 0; r < src.rows_; ++r) {
      const double* s = &src.data_[src.index(c, r, 0)];
      std::copy(s, s + src.cols_, &data_[index(c, row + r, col)]);
    }
  }
}

Tensor Tensor::concat_channels(const Tensor& a, const Tensor& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw InvalidInput("concat: spatial mismatch");
  Tensor out(a.channels_ + b.channels_, a.rows_, a.cols_);
  std::copy(a.data_.begin(), a.data_.end(), out.data_.begin());
  std::copy(b.data_.begin(), b.data_.end(), out.data_.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

Mask::Mask(int rows, int cols, bool fill) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw InvalidInput("negative mask extent");
  bits_.assign(static_cast<std::size_t>(rows) * cols, fill ? 1 : 0);
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

}  // namespace jigsaw
