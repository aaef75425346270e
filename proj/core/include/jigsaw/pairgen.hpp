#pragma once

#include <optional>
#include <vector>

#include "jigsaw/direction.hpp"
#include "jigsaw/puzzle_io.hpp"
#include "jigsaw/random.hpp"
#include "jigsaw/tensor.hpp"

namespace jigsaw {

enum class PairLabel { Negative = 0, Positive = 1 };

struct PairMeta {
  int x = -1;
  int y = -1;
  Direction dir = Direction::Right;
};

// Two pieces joined side by side into a 3 x S x 2S raster. Vertical pairs are
// rotated 90 degrees counter-clockwise so the upper piece lands on the left.
struct PairSample {
  Tensor input;                   // unknown pixels zeroed
  Mask mask;                      // true on the inpaint band, columns [S-w, S+w)
  std::optional<Tensor> original; // pre-erosion raster, training only
  std::optional<PairLabel> label;
  PairMeta meta;
  int erosion_width = 0;

  int piece_size() const { return input.rows(); }
};

// Builds I_xyd for d in {Right, Down}. Left/Up callers swap arguments first.
PairSample join_pair(const PieceImage& x, const PieceImage& y, Direction d, int erosion_width);

// Keeps columns [S/2, 3S/2) of an S x 2S raster.
Tensor center_crop(const Tensor& pair_raster);

struct Phase1Options {
  int piece_size = 64;
  int erosion_width = 4;
  // Also clear the non-facing outer frame in both input and original.
  bool erode_outer_frame = false;
};

// Location of a training pair inside a corpus image: top-left pixel of the
// first piece and the direction of the second.
struct Phase1Site {
  int row = 0;
  int col = 0;
  Direction dir = Direction::Right;
};

// Uniform over {Right, Down}, then uniform over all pixel offsets that fit.
Phase1Site draw_phase1_site(const Tensor& image, int piece_size, Rng& rng);
PairSample phase1_example_at(const Tensor& image, const Phase1Site& site, const Phase1Options& opts);
// Positive pair with `original` populated.
PairSample make_phase1_example(const Tensor& image, const Phase1Options& opts, Rng& rng);

struct Adjacency {
  int x = 0;
  int y = 0;
  Direction dir = Direction::Right;
};

// All true (x, y, d) neighbor relations with d in {Right, Down}.
std::vector<Adjacency> true_adjacencies(const Solution& solution);

struct LabeledPairs {
  PairSample positive;
  PairSample negative;
};

// The negative shares one piece with the positive (which one is a coin flip);
// the other is uniform over pieces that are not its true neighbor in that
// direction. Needs at least 3 pieces.
LabeledPairs make_phase2_pair_at(const PuzzleBundle& bundle, const Solution& solution, const Adjacency& positive,
                                 Rng& rng);
LabeledPairs make_phase2_pair(const PuzzleBundle& bundle, const Solution& solution, Rng& rng);

}  // namespace jigsaw
