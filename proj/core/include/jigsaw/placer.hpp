#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "jigsaw/board.hpp"
#include "jigsaw/direction.hpp"
#include "jigsaw/scorer.hpp"

namespace jigsaw {

inline constexpr double kNoCompatibility = -std::numeric_limits<double>::infinity();

// C(x, y, d) = 1 - D(x, y, d) / (second smallest D(x, z, d) over z != x).
// A match as good as the runner-up scores 0, a unique perfect match 1.
class CompatibilityTensor {
 public:
  CompatibilityTensor() = default;
  explicit CompatibilityTensor(int n);

  int size() const { return n_; }
  double at(int x, int y, Direction d) const { return values_[(static_cast<std::size_t>(x) * n_ + y) * 4 + index(d)]; }
  void set(int x, int y, Direction d, double v) { values_[(static_cast<std::size_t>(x) * n_ + y) * 4 + index(d)] = v; }

 private:
  int n_ = 0;
  std::vector<double> values_;
};

CompatibilityTensor compatibility(const DissimilarityTensor& dissimilarity);

struct BuddyEdge {
  int x = 0;
  int y = 0;
  Direction dir = Direction::Right;
  friend auto operator<=>(const BuddyEdge&, const BuddyEdge&) = default;
};

// Most compatible partner of x at side d, ties to the smaller id.
int best_partner(const CompatibilityTensor& c, int x, Direction d);

// (x, y, d) such that y is x's best partner at d and x is y's best partner at
// opposite(d). Sorted; contains both (x, y, d) and (y, x, opposite(d)).
std::vector<BuddyEdge> best_buddies(const CompatibilityTensor& c);

struct PlacementOptions {
  FrameMode mode = FrameMode::Constrained;
  // Grid extent. Required in constrained mode (rows * cols == N); optional in
  // unbounded mode, where it caps both bounding-box sides at max(rows, cols).
  int rows = 0;
  int cols = 0;
  // Recorded for reproducibility; all ties are broken lexicographically.
  std::uint64_t tiebreak_seed = 0;
};

// Piece with the most best-buddy relations, then the largest sum of their
// compatibilities, then the smallest id.
int seed_piece(const CompatibilityTensor& c);

// Greedy growth from the seed piece: each step places the (piece, slot) pair
// with the highest mean compatibility against the slot's placed neighbors,
// ties by (piece id, slot row, slot col). The bounding box may never exceed
// the frame; the result is translated to start at (0, 0).
Board place(const CompatibilityTensor& c, const PlacementOptions& opts);

inline Board solve(const DissimilarityTensor& d, const PlacementOptions& opts) { return place(compatibility(d), opts); }

}  // namespace jigsaw
