#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace jigsaw {

// Dense planar (channel, row, col) array of doubles. Used both for color
// rasters (3 channels, values in [0,1]) and for network activations.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int rows, int cols, double fill = 0.0);

  int channels() const { return channels_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Tensor& other) const {
    return channels_ == other.channels_ && rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& at(int c, int r, int col) { return data_[index(c, r, col)]; }
  double at(int c, int r, int col) const { return data_[index(c, r, col)]; }

  std::span<double> plane(int c) {
    return {data_.data() + static_cast<std::size_t>(c) * rows_ * cols_,
            static_cast<std::size_t>(rows_) * cols_};
  }
  std::span<const double> plane(int c) const {
    return {data_.data() + static_cast<std::size_t>(c) * rows_ * cols_,
            static_cast<std::size_t>(rows_) * cols_};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  void fill(double v);

  // Copy of columns [col_begin, col_begin + width), all rows and channels.
  Tensor crop_cols(int col_begin, int width) const;
  // Copy of the rectangle starting at (row, col) of the given extent.
  Tensor crop(int row, int col, int height, int width) const;
  // Writes `src` into this tensor with its top-left corner at (row, col).
  void paste(const Tensor& src, int row, int col);
  // Stacks channels of a then b; spatial extents must match.
  static Tensor concat_channels(const Tensor& a, const Tensor& b);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t index(int c, int r, int col) const {
    return (static_cast<std::size_t>(c) * rows_ + r) * cols_ + col;
  }

  int channels_ = 0;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Row-major boolean grid.
class Mask {
 public:
  Mask() = default;
  Mask(int rows, int cols, bool fill = false);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool at(int r, int c) const { return bits_[static_cast<std::size_t>(r) * cols_ + c] != 0; }
  void set(int r, int c, bool v) { bits_[static_cast<std::size_t>(r) * cols_ + c] = v ? 1 : 0; }
  std::size_t count() const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace jigsaw
