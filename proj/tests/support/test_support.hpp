#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <unistd.h>

#include "jigsaw/random.hpp"
#include "jigsaw/scorer.hpp"
#include "jigsaw/tensor.hpp"

namespace jigsaw::testing {

inline std::filesystem::path data_dir() { return JIGSAW_TEST_DATA; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "jigsaw") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Smooth random color field (a few sinusoids per channel) with values in
// [0,1]. Neighbouring pieces continue each other, distant ones do not.
inline Tensor smooth_image(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Tensor img(3, rows, cols);
  for (int c = 0; c < 3; ++c) {
    double fr[3], fc[3], ph[3];
    for (int k = 0; k < 3; ++k) {
      fr[k] = 0.5 + 4.0 * uniform_unit(rng);
      fc[k] = 0.5 + 4.0 * uniform_unit(rng);
      ph[k] = 2 * std::numbers::pi * uniform_unit(rng);
    }
    for (int r = 0; r < rows; ++r) {
      for (int col = 0; col < cols; ++col) {
        double v = 0;
        for (int k = 0; k < 3; ++k) {
          v += std::sin(2 * std::numbers::pi * (fr[k] * r / rows + fc[k] * col / cols) + ph[k]);
        }
        img.at(c, r, col) = 0.5 + v / 6.0;
      }
    }
  }
  return img;
}

inline Tensor random_tensor(int channels, int rows, int cols, Rng& rng, double lo = 0.0, double hi = 1.0) {
  Tensor t(channels, rows, cols);
  for (double& v : t.values()) v = lo + (hi - lo) * uniform_unit(rng);
  return t;
}

// Random symmetric dissimilarity tensor with values in [0, scale).
inline DissimilarityTensor random_dissimilarity(int n, Rng& rng, double scale = 1.0) {
  DissimilarityTensor t(n);
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (x == y) continue;
      t.set(x, y, Direction::Right, scale * uniform_unit(rng));
      t.set(x, y, Direction::Down, scale * uniform_unit(rng));
    }
  }
  return t;
}

}  // namespace jigsaw::testing
