#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "jigsaw/error.hpp"
#include "jigsaw/puzzle_io.hpp"
#include "test_support.hpp"

namespace jigsaw {
namespace {

using testing::smooth_image;
using testing::TempDir;

TEST(SliceImage, TallImageGivesTenBySeven) {
  const SlicedPuzzle p = slice_image(smooth_image(672, 448, 1), 64);
  EXPECT_EQ(p.bundle.rows, 10);
  EXPECT_EQ(p.bundle.cols, 7);
  EXPECT_EQ(p.bundle.piece_count(), 70);
  EXPECT_FALSE(p.bundle.shuffled);
  EXPECT_EQ(p.bundle.erosion_width, 0);
}

TEST(SliceImage, SinglePiece) {
  const SlicedPuzzle p = slice_image(smooth_image(64, 64, 2), 64);
  ASSERT_EQ(p.bundle.piece_count(), 1);
  EXPECT_EQ(p.solution.slot_of[0], (Slot{0, 0}));
}

TEST(SliceImage, MarginsAreDiscardedRowMajor) {
  const Tensor img = smooth_image(130, 130, 3);
  const SlicedPuzzle p = slice_image(img, 64);
  EXPECT_EQ(p.bundle.rows, 2);
  EXPECT_EQ(p.bundle.cols, 2);
  ASSERT_EQ(p.bundle.piece_count(), 4);
  // Piece 1 is row 0, col 1.
  EXPECT_EQ(p.solution.slot_of[1], (Slot{0, 1}));
  EXPECT_EQ(p.bundle.pieces[1].pixels.at(2, 5, 7), img.at(2, 5, 64 + 7));
  EXPECT_EQ(p.bundle.pieces[3].pixels.at(0, 63, 63), img.at(0, 127, 127));
  EXPECT_EQ(p.bundle.pieces[3].valid.count(), 64u * 64u);
}

TEST(SliceImage, TooSmallIsInvalid) {
  EXPECT_THROW(slice_image(smooth_image(63, 200, 4), 64), InvalidInput);
}

TEST(Erode, SevenPercentClearsFourPixelFrame) {
  const SlicedPuzzle p = slice_image(smooth_image(128, 64, 5), 64);
  const PuzzleBundle e = erode(p.bundle, 0.07);
  EXPECT_EQ(e.erosion_width, 4);
  for (const PieceImage& piece : e.pieces) {
    EXPECT_EQ(64u * 64u - piece.valid.count(), 960u);
    for (int r = 0; r < 64; ++r)
      for (int c = 0; c < 64; ++c) {
        const bool frame = r < 4 || c < 4 || r >= 60 || c >= 60;
        EXPECT_EQ(piece.valid.at(r, c), !frame);
        if (frame) EXPECT_EQ(piece.pixels.at(1, r, c), 0.0);
      }
  }
}

TEST(Erode, ZeroAndFourteenPercent) {
  const SlicedPuzzle p = slice_image(smooth_image(64, 64, 6), 64);
  EXPECT_EQ(erode(p.bundle, 0.0).pieces[0].valid.count(), 64u * 64u);
  const PuzzleBundle e = erode(p.bundle, 0.14);
  EXPECT_EQ(e.erosion_width, 8);
  EXPECT_EQ(e.pieces[0].valid.count(), 48u * 48u);
}

TEST(Erode, HalfOrMoreIsInvalid) {
  const SlicedPuzzle p = slice_image(smooth_image(64, 64, 6), 64);
  EXPECT_THROW(erode(p.bundle, 0.5), InvalidInput);
  EXPECT_THROW(erode(p.bundle, -0.1), InvalidInput);
}

TEST(Shuffle, DeterministicPerSeed) {
  const SlicedPuzzle p = slice_image(smooth_image(128, 128, 7), 64);
  EXPECT_EQ(shuffle(p.bundle, 0).solution, shuffle(p.bundle, 0).solution);
  const SlicedPuzzle one = slice_image(smooth_image(64, 64, 7), 64);
  EXPECT_EQ(shuffle(one.bundle, 1234).solution.slot_of[0], (Slot{0, 0}));
}

TEST(Shuffle, SeedsGiveDifferentPermutations) {
  const SlicedPuzzle p = slice_image(smooth_image(7 * 64, 10 * 64, 8), 64);
  EXPECT_NE(shuffle(p.bundle, 1).solution, shuffle(p.bundle, 2).solution);
}

// Property: every shuffle is a bijection that keeps each piece's pixels with
// its true slot.
TEST(Shuffle, BijectionPreservesContentProperty) {
  Rng rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    const int rows = 1 + uniform_index(rng, 4), cols = 1 + uniform_index(rng, 4);
    const SlicedPuzzle p = slice_image(smooth_image(rows * 64, cols * 64, trial), 64);
    const SlicedPuzzle s = shuffle(p.bundle, p.solution, rng());
    std::set<Slot> seen(s.solution.slot_of.begin(), s.solution.slot_of.end());
    EXPECT_EQ(static_cast<int>(seen.size()), rows * cols);
    for (int id = 0; id < s.bundle.piece_count(); ++id) {
      const Slot slot = s.solution.slot_of[id];
      EXPECT_EQ(s.bundle.pieces[id].id, id);
      EXPECT_EQ(s.bundle.pieces[id].pixels, p.bundle.pieces[slot.row * cols + slot.col].pixels);
    }
  }
}

TEST(Render, GroundTruthReproducesSource) {
  const Tensor img = smooth_image(128, 192, 9);
  const SlicedPuzzle p = slice_image(img, 64);
  const SlicedPuzzle s = shuffle(p.bundle, p.solution, 5);
  EXPECT_EQ(render(s.solution.as_board(), s.bundle), img);
}

TEST(Render, ErodedGroundTruthShowsBlackLattice) {
  const Tensor img = smooth_image(128, 128, 10);
  const SlicedPuzzle p = slice_image(img, 64);
  const PuzzleBundle e = erode(p.bundle, 0.07);
  Tensor expected = img;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 128; ++r)
      for (int x = 0; x < 128; ++x) {
        const int lr = r % 64, lc = x % 64;
        if (lr < 4 || lr >= 60 || lc < 4 || lc >= 60) expected.at(c, r, x) = 0.0;
      }
  EXPECT_EQ(render(p.solution.as_board(), e), expected);
}

TEST(Render, EmptyBoardIsMidGray) {
  const SlicedPuzzle p = slice_image(smooth_image(128, 128, 11), 64);
  const Tensor out = render(Board(2, 2), p.bundle);
  for (double v : out.values()) EXPECT_EQ(v, 0.5);
}

TEST(Render, DuplicatePieceIsInternalError) {
  const SlicedPuzzle p = slice_image(smooth_image(128, 128, 12), 64);
  Board b(2, 2);
  b.set(0, 0, 1);
  b.set(1, 1, 1);
  EXPECT_THROW(render(b, p.bundle), InternalError);
}

TEST(BundleFiles, RoundTripIsLossless) {
  TempDir dir;
  const SlicedPuzzle p = slice_image(smooth_image(128, 192, 13), 64);
  SlicedPuzzle s = shuffle(erode(p.bundle, 0.07), p.solution, 3);
  s.bundle.name = "demo";
  // Pixels must survive 8-bit storage exactly, so quantize first.
  for (PieceImage& piece : s.bundle.pieces)
    for (double& v : piece.pixels.values()) v = std::round(v * 255.0) / 255.0;
  save_bundle(dir / "b", s.bundle, {{"seed", "3"}});
  save_solution(dir / "solution.json", s.solution);
  EXPECT_EQ(load_bundle(dir / "b"), s.bundle);
  EXPECT_EQ(load_solution(dir / "solution.json"), s.solution);
  EXPECT_FALSE(std::filesystem::exists(dir / "b" / "solution.json"));
}

TEST(BundleFiles, MissingPieceAndBadManifestAreLoadErrors) {
  TempDir dir;
  const SlicedPuzzle p = slice_image(smooth_image(128, 128, 14), 64);
  save_bundle(dir / "b", p.bundle);
  std::filesystem::remove(dir / "b" / "pieces" / "piece_0002.png");
  EXPECT_THROW(load_bundle(dir / "b"), LoadError);

  save_bundle(dir / "c", p.bundle);
  std::ofstream(dir / "c" / "manifest.json") << "{ not json";
  EXPECT_THROW(load_bundle(dir / "c"), LoadError);
}

TEST(BundleFiles, DimensionMismatchIsLoadError) {
  TempDir dir;
  const SlicedPuzzle p = slice_image(smooth_image(128, 128, 15), 64);
  save_bundle(dir / "b", p.bundle);
  // Replace one piece with a differently sized image.
  const SlicedPuzzle small = slice_image(smooth_image(32, 32, 1), 32);
  save_bundle(dir / "small", small.bundle);
  std::filesystem::copy_file(dir / "small" / "pieces" / "piece_0000.png", dir / "b" / "pieces" / "piece_0001.png",
                             std::filesystem::copy_options::overwrite_existing);
  EXPECT_THROW(load_bundle(dir / "b"), LoadError);
}

TEST(Solution, RejectsNonBijection) {
  Solution s{1, 2, {Slot{0, 0}, Slot{0, 0}}};
  EXPECT_THROW(s.piece_at_slots(), InvalidInput);
}

}  // namespace
}  // namespace jigsaw
