#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace jigsaw {

enum class FrameMode { Constrained, Unbounded };

struct Slot {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const Slot&, const Slot&) = default;
};

// Placement result: a rows x cols grid of piece ids, -1 where empty.
class Board {
 public:
  Board() = default;
  Board(int rows, int cols, FrameMode mode = FrameMode::Constrained);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  FrameMode mode() const { return mode_; }
  int at(int r, int c) const { return cells_[static_cast<std::size_t>(r) * cols_ + c]; }
  int at(Slot s) const { return at(s.row, s.col); }
  void set(int r, int c, int piece) { cells_[static_cast<std::size_t>(r) * cols_ + c] = piece; }
  bool in_bounds(int r, int c) const { return r >= 0 && c >= 0 && r < rows_ && c < cols_; }

  int placed_count() const;
  // Every slot filled and no piece id repeated.
  bool complete() const;
  // Slot of each piece id in [0, n), throwing InternalError on duplicates.
  std::vector<Slot> positions(int n) const;

  friend bool operator==(const Board&, const Board&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  FrameMode mode_ = FrameMode::Constrained;
  std::vector<int> cells_;
};

// Plain-text board file: '#'-prefixed "key=value" header lines, then one line
// per grid row of whitespace-separated piece ids (-1 for empty).
void save_board(const std::filesystem::path& path, const Board& board,
                const std::map<std::string, std::string>& header = {});
Board load_board(const std::filesystem::path& path, std::map<std::string, std::string>* header = nullptr);

}  // namespace jigsaw
