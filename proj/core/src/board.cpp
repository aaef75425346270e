#include "jigsaw/board.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "jigsaw/error.hpp"

namespace jigsaw {

Board::Board(int rows, int cols, FrameMode mode) : rows_(rows), cols_(cols), mode_(mode) {
  if (rows < 0 || cols < 0) throw InvalidInput("negative board extent");
  cells_.assign(static_cast<std::size_t>(rows) * cols, -1);
}

int Board::placed_count() const {
  return static_cast<int>(std::count_if(cells_.begin(), cells_.end(), [](int p) { return p >= 0; }));
}

bool Board::complete() const {
  std::vector<int> ids(cells_);
  if (std::any_of(ids.begin(), ids.end(), [](int p) { return p < 0; })) return false;
  std::sort(ids.begin(), ids.end());
  return std::adjacent_find(ids.begin(), ids.end()) == ids.end();
}

std::vector<Slot> Board::positions(int n) const {
  std::vector<Slot> pos(n, Slot{-1, -1});
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      const int p = at(r, c);
      if (p < 0) continue;
      if (p >= n) throw InvalidInput("board holds piece id " + std::to_string(p) + " outside [0," + std::to_string(n) + ")");
      if (pos[p].row >= 0) throw InternalError("piece " + std::to_string(p) + " placed twice");
      pos[p] = Slot{r, c};
    }
  }
  return pos;
}

void save_board(const std::filesystem::path& path, const Board& board,
                const std::map<std::string, std::string>& header) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write board " + path.string());
  out << "# jigsaw-board v1\n";
  out << "# rows=" << board.rows() << "\n# cols=" << board.cols() << "\n";
  out << "# mode=" << (board.mode() == FrameMode::Constrained ? "constrained" : "unbounded") << "\n";
  for (const auto& [k, v] : header) {
    if (k == "rows" || k == "cols" || k == "mode") continue;
    out << "# " << k << "=" << v << "\n";
  }
  for (int r = 0; r < board.rows(); ++r) {
    for (int c = 0; c < board.cols(); ++c) out << (c ? " " : "") << board.at(r, c);
    out << "\n";
  }
  if (!out) throw InvalidInput("failed writing board " + path.string());
}

Board load_board(const std::filesystem::path& path, std::map<std::string, std::string>* header) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open board " + path.string());
  std::map<std::string, std::string> meta;
  std::vector<std::vector<int>> grid;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      meta[key] = line.substr(eq + 1);
      continue;
    }
    std::istringstream row(line);
    std::vector<int> ids;
    int id;
    while (row >> id) ids.push_back(id);
    if (!row.eof()) throw LoadError("malformed board row in " + path.string());
    grid.push_back(std::move(ids));
  }
  int rows = static_cast<int>(grid.size());
  int cols = rows ? static_cast<int>(grid[0].size()) : 0;
  try {
    if (meta.count("rows")) rows = std::stoi(meta["rows"]);
    if (meta.count("cols")) cols = std::stoi(meta["cols"]);
  } catch (const std::exception&) {
    throw LoadError("malformed board header in " + path.string());
  }
  if (rows != static_cast<int>(grid.size())) throw LoadError("board row count mismatch in " + path.string());
  for (const auto& g : grid) {
    if (static_cast<int>(g.size()) != cols) throw LoadError("board column count mismatch in " + path.string());
  }
  const FrameMode mode = meta["mode"] == "unbounded" ? FrameMode::Unbounded : FrameMode::Constrained;
  Board board(rows, cols, mode);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) board.set(r, c, grid[r][c]);
  }
  if (header) *header = std::move(meta);
  return board;
}

}  // namespace jigsaw
