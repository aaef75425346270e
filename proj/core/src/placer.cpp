#include "jigsaw/placer.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "jigsaw/error.hpp"

namespace jigsaw {

CompatibilityTensor::CompatibilityTensor(int n) : n_(n) {
  values_.assign(static_cast<std::size_t>(n) * n * 4, kNoCompatibility);
}

CompatibilityTensor compatibility(const DissimilarityTensor& dis) {
  const int n = dis.size();
  if (n < 2) throw InvalidInput("compatibility needs at least two pieces");
  CompatibilityTensor c(n);
  std::vector<double> column;
  for (int x = 0; x < n; ++x) {
    for (Direction d : kAllDirections) {
      column.clear();
      for (int z = 0; z < n; ++z) {
        if (z != x) column.push_back(dis.at(x, z, d));
      }
      double second = kUnusedScore;
      if (column.size() >= 2) {
        std::partial_sort(column.begin(), column.begin() + 2, column.end());
        second = column[1];
      }
      for (int y = 0; y < n; ++y) {
        if (y == x) continue;
        const double v = dis.at(x, y, d);
        double compat;
        if (std::isinf(second) || std::isinf(v)) {
          compat = kNoCompatibility;
        } else if (second == 0.0) {
          compat = v == 0.0 ? 0.0 : kNoCompatibility;
        } else {
          compat = 1.0 - v / second;
        }
        c.set(x, y, d, compat);
      }
    }
  }
  return c;
}

int best_partner(const CompatibilityTensor& c, int x, Direction d) {
  int best = -1;
  for (int z = 0; z < c.size(); ++z) {
    if (z == x) continue;
    if (best < 0 || c.at(x, z, d) > c.at(x, best, d)) best = z;
  }
  return best;
}

std::vector<BuddyEdge> best_buddies(const CompatibilityTensor& c) {
  const int n = c.size();
  std::vector<BuddyEdge> out;
  if (n < 2) return out;
  std::vector<int> best(static_cast<std::size_t>(n) * 4);
  for (int x = 0; x < n; ++x) {
    for (Direction d : kAllDirections) best[static_cast<std::size_t>(x) * 4 + index(d)] = best_partner(c, x, d);
  }
  for (int x = 0; x < n; ++x) {
    for (Direction d : kAllDirections) {
      const int y = best[static_cast<std::size_t>(x) * 4 + index(d)];
      if (best[static_cast<std::size_t>(y) * 4 + index(opposite(d))] == x) out.push_back({x, y, d});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

int seed_piece(const CompatibilityTensor& c) {
  const int n = c.size();
  if (n == 1) return 0;
  std::vector<int> count(n, 0);
  std::vector<double> sum(n, 0.0);
  for (const BuddyEdge& e : best_buddies(c)) {
    ++count[e.x];
    sum[e.x] += c.at(e.x, e.y, e.dir);
  }
  int seed = 0;
  for (int x = 1; x < n; ++x) {
    if (count[x] > count[seed] || (count[x] == count[seed] && sum[x] > sum[seed])) seed = x;
  }
  return seed;
}

namespace {

// Sparse-free occupancy grid over raw coordinates in [-n, n].
class Canvas {
 public:
  explicit Canvas(int n) : n_(n), side_(2 * n + 1), cells_(static_cast<std::size_t>(side_) * side_, -1) {}
  int at(int r, int c) const {
    if (r < -n_ || r > n_ || c < -n_ || c > n_) return -1;
    return cells_[static_cast<std::size_t>(r + n_) * side_ + (c + n_)];
  }
  void put(int r, int c, int p) { cells_[static_cast<std::size_t>(r + n_) * side_ + (c + n_)] = p; }

 private:
  int n_, side_;
  std::vector<int> cells_;
};

}  // namespace

Board place(const CompatibilityTensor& c, const PlacementOptions& opts) {
  const int n = c.size();
  int max_h, max_w;
  if (opts.mode == FrameMode::Constrained) {
    if (opts.rows <= 0 || opts.cols <= 0 || opts.rows * opts.cols != n) {
      throw InvalidInput("constrained placement needs rows * cols == number of pieces");
    }
    max_h = opts.rows;
    max_w = opts.cols;
  } else {
    const int side = opts.rows > 0 && opts.cols > 0 ? std::max(opts.rows, opts.cols) : n;
    max_h = max_w = side;
  }
  if (n == 0) return Board(0, 0, opts.mode);

  Canvas canvas(n);
  std::vector<char> placed(n, 0);
  std::vector<Slot> where(n);
  int min_r = 0, max_r = 0, min_c = 0, max_c = 0;

  const int seed = seed_piece(c);
  canvas.put(0, 0, seed);
  placed[seed] = 1;
  where[seed] = Slot{0, 0};

  struct Neighbor {
    int piece;
    Direction side;
  };
  for (int count = 1; count < n; ++count) {
    bool found = false;
    double best_score = 0;
    int best_piece = -1;
    Slot best_slot{};

    // Frontier slots in (row, col) order so the first maximum found wins ties
    // after piece id.
    std::vector<std::pair<Slot, std::vector<Neighbor>>> frontier;
    for (int r = min_r - 1; r <= max_r + 1; ++r) {
      for (int col = min_c - 1; col <= max_c + 1; ++col) {
        if (canvas.at(r, col) >= 0) continue;
        if (std::max(max_r, r) - std::min(min_r, r) + 1 > max_h) continue;
        if (std::max(max_c, col) - std::min(min_c, col) + 1 > max_w) continue;
        std::vector<Neighbor> nb;
        for (Direction d : kAllDirections) {
          const int q = canvas.at(r + row_step(d), col + col_step(d));
          if (q >= 0) nb.push_back({q, d});
        }
        if (!nb.empty()) frontier.push_back({Slot{r, col}, std::move(nb)});
      }
    }

    for (int p = 0; p < n; ++p) {
      if (placed[p]) continue;
      for (const auto& [slot, nb] : frontier) {
        double sum = 0;
        for (const Neighbor& q : nb) sum += c.at(p, q.piece, q.side);
        const double score = sum / static_cast<double>(nb.size());
        if (std::isnan(score)) continue;
        if (!found || score > best_score) {
          found = true;
          best_score = score;
          best_piece = p;
          best_slot = slot;
        }
      }
    }
    if (!found) throw InternalError("placement stalled with pieces left");

    canvas.put(best_slot.row, best_slot.col, best_piece);
    placed[best_piece] = 1;
    where[best_piece] = best_slot;
    min_r = std::min(min_r, best_slot.row);
    max_r = std::max(max_r, best_slot.row);
    min_c = std::min(min_c, best_slot.col);
    max_c = std::max(max_c, best_slot.col);
  }

  const int rows = opts.mode == FrameMode::Constrained ? opts.rows : max_r - min_r + 1;
  const int cols = opts.mode == FrameMode::Constrained ? opts.cols : max_c - min_c + 1;
  Board board(rows, cols, opts.mode);
  for (int p = 0; p < n; ++p) board.set(where[p].row - min_r, where[p].col - min_c, p);
  return board;
}

}  // namespace jigsaw
