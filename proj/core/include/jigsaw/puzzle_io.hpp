#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "jigsaw/board.hpp"
#include "jigsaw/tensor.hpp"

namespace jigsaw {

// One S x S color piece. `valid` is false exactly on eroded pixels, whose
// color is stored as 0; consult the mask, never the color.
struct PieceImage {
  int id = 0;
  Tensor pixels;
  Mask valid;

  int size() const { return pixels.rows(); }
  friend bool operator==(const PieceImage&, const PieceImage&) = default;
};

struct PuzzleBundle {
  std::string name;
  std::vector<PieceImage> pieces;
  int piece_size = 0;
  int rows = 0;
  int cols = 0;
  int erosion_width = 0;
  double erosion_pct = 0.0;
  bool shuffled = false;

  int piece_count() const { return static_cast<int>(pieces.size()); }
  friend bool operator==(const PuzzleBundle&, const PuzzleBundle&) = default;
};

// Ground truth: slot_of[id] is the grid slot piece `id` came from.
struct Solution {
  int rows = 0;
  int cols = 0;
  std::vector<Slot> slot_of;

  int piece_count() const { return static_cast<int>(slot_of.size()); }
  // Id of the piece at each slot, row-major.
  std::vector<int> piece_at_slots() const;
  Board as_board() const;
  friend bool operator==(const Solution&, const Solution&) = default;
};

struct SlicedPuzzle {
  PuzzleBundle bundle;
  Solution solution;
};

// Cuts an image (3 x H x W) into floor(H/S) x floor(W/S) pieces, row-major.
// The right and bottom remainders are dropped.
SlicedPuzzle slice_image(const Tensor& image, int piece_size, std::string name = {});

// floor(pct * S).
int erosion_width_for(double erosion_pct, int piece_size);

// Clears a frame of floor(pct * S) pixels on every side of each piece.
PuzzleBundle erode(const PuzzleBundle& bundle, double erosion_pct);

// Seeded permutation of the piece order. Pieces are renumbered 0..N-1 in the
// new order; the returned solution maps new ids to their true slots.
SlicedPuzzle shuffle(const PuzzleBundle& bundle, const Solution& truth, std::uint64_t seed);
// Same, for a bundle still in slice (row-major) order.
SlicedPuzzle shuffle(const PuzzleBundle& bundle, std::uint64_t seed);

// Composites the board into a (rows*S) x (cols*S) raster. Invalid pixels are
// black and empty slots mid-gray.
Tensor render(const Board& board, const PuzzleBundle& bundle);

// Bundle directory: manifest.json plus pieces/piece_NNNN.png (RGBA, alpha
// encodes validity). `extra` lands in the manifest's "provenance" object.
void save_bundle(const std::filesystem::path& dir, const PuzzleBundle& bundle,
                 const std::map<std::string, std::string>& extra = {});
PuzzleBundle load_bundle(const std::filesystem::path& dir);

void save_solution(const std::filesystem::path& file, const Solution& solution,
                   const std::map<std::string, std::string>& extra = {});
Solution load_solution(const std::filesystem::path& file);

}  // namespace jigsaw
