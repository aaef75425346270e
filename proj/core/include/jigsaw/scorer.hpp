#pragma once

#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "jigsaw/direction.hpp"
#include "jigsaw/netcore.hpp"
#include "jigsaw/puzzle_io.hpp"

namespace jigsaw {

inline constexpr double kUnusedScore = std::numeric_limits<double>::infinity();
inline constexpr double kOracleMismatch = 1000.0;

// N x N x 4 dissimilarities D(x, y, d): how poorly y fits at side d of x.
// Left/Up are mirrors of Right/Down and the diagonal holds +inf.
class DissimilarityTensor {
 public:
  DissimilarityTensor() = default;
  explicit DissimilarityTensor(int n);

  int size() const { return n_; }
  double at(int x, int y, Direction d) const { return values_[offset(x, y, d)]; }
  // Sets D(x, y, d) and its mirror D(y, x, opposite(d)).
  void set(int x, int y, Direction d, double value);
  // Writes D(x, y, d) alone; callers restore the mirror themselves.
  void set_one_sided(int x, int y, Direction d, double value) { values_[offset(x, y, d)] = value; }
  // Both symmetry identities hold and the diagonal is the sentinel.
  bool consistent() const;

  std::map<std::string, std::string> metadata;

  friend bool operator==(const DissimilarityTensor&, const DissimilarityTensor&) = default;

 private:
  std::size_t offset(int x, int y, Direction d) const {
    return (static_cast<std::size_t>(x) * n_ + y) * 4 + index(d);
  }
  int n_ = 0;
  std::vector<double> values_;
};

// -ln of the clamped probability; at most about 16.12.
double dissimilarity_from_probability(double p);

// Scores every ordered pair in the Right and Down directions with D(G(I_xyd))
// (or D(I_xyd) for checkpoints trained without inpainting). `threads` > 1
// splits the work by first piece; results do not depend on the thread count.
DissimilarityTensor neural_dissimilarity(const ModelCheckpoint& model, const PuzzleBundle& bundle, int threads = 1);

// Mean squared color difference between the outermost valid pixels of the two
// facing edges.
DissimilarityTensor baseline_dissimilarity(const PuzzleBundle& bundle);

// 0 for true neighbors in the stated direction, 1000 otherwise.
DissimilarityTensor oracle_dissimilarity(const Solution& solution);

// CSV "x,y,dir,value" sorted by (x, y, dir) after a '#' metadata header.
void save_tensor(const std::filesystem::path& path, const DissimilarityTensor& t);
DissimilarityTensor load_tensor(const std::filesystem::path& path);

}  // namespace jigsaw
