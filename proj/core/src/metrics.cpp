#include "jigsaw/metrics.hpp"

#include <cstdio>
#include <cstdlib>
#include <tuple>

#include "jigsaw/error.hpp"

namespace jigsaw {

namespace {

// Slot of every piece, rejecting boards that miss or repeat a piece.
std::vector<Slot> checked_positions(const Board& board, const Solution& solution) {
  const int n = solution.piece_count();
  if (n == 0) throw InvalidInput("empty solution");
  if (board.placed_count() != n) {
    throw InvalidInput("board places " + std::to_string(board.placed_count()) + " of " + std::to_string(n) + " pieces");
  }
  std::vector<Slot> pos = board.positions(n);
  for (int p = 0; p < n; ++p) {
    if (pos[p].row < 0) throw InvalidInput("piece " + std::to_string(p) + " missing from board");
  }
  return pos;
}

}  // namespace

double neighbor_measure(const Board& board, const Solution& solution) {
  checked_positions(board, solution);
  const int rows = solution.rows, cols = solution.cols;
  const int total = rows * (cols - 1) + (rows - 1) * cols;
  if (total == 0) return 1.0;
  int correct = 0;
  // Walk the board's own Right/Down pairs and look them up in the truth.
  for (int r = 0; r < board.rows(); ++r) {
    for (int c = 0; c < board.cols(); ++c) {
      const int x = board.at(r, c);
      if (x < 0) continue;
      const Slot sx = solution.slot_of[x];
      if (c + 1 < board.cols()) {
        const int y = board.at(r, c + 1);
        if (y >= 0 && solution.slot_of[y] == Slot{sx.row, sx.col + 1}) ++correct;
      }
      if (r + 1 < board.rows()) {
        const int y = board.at(r + 1, c);
        if (y >= 0 && solution.slot_of[y] == Slot{sx.row + 1, sx.col}) ++correct;
      }
    }
  }
  return static_cast<double>(correct) / total;
}

Alignment best_alignment(const Board& board, const Solution& solution) {
  const std::vector<Slot> pos = checked_positions(board, solution);
  Alignment best;
  bool have = false;
  for (int dr = -(board.rows() - 1); dr <= solution.rows - 1; ++dr) {
    for (int dc = -(board.cols() - 1); dc <= solution.cols - 1; ++dc) {
      int correct = 0;
      for (int p = 0; p < solution.piece_count(); ++p) {
        if (pos[p].row + dr == solution.slot_of[p].row && pos[p].col + dc == solution.slot_of[p].col) ++correct;
      }
      const auto key = [](int d_r, int d_c) { return std::make_tuple(std::abs(d_r) + std::abs(d_c), d_r, d_c); };
      if (!have || correct > best.correct ||
          (correct == best.correct && key(dr, dc) < key(best.row_shift, best.col_shift))) {
        best = Alignment{dr, dc, correct};
        have = true;
      }
    }
  }
  return best;
}

double direct_measure(const Board& board, const Solution& solution) {
  const std::vector<Slot> pos = checked_positions(board, solution);
  const int n = solution.piece_count();
  if (board.mode() == FrameMode::Unbounded) return static_cast<double>(best_alignment(board, solution).correct) / n;
  int correct = 0;
  for (int p = 0; p < n; ++p) {
    if (pos[p] == solution.slot_of[p]) ++correct;
  }
  return static_cast<double>(correct) / n;
}

bool perfect(const Board& board, const Solution& solution) { return direct_measure(board, solution) == 1.0; }

EvalReport evaluate_dataset(const std::vector<PuzzleCase>& cases) {
  if (cases.empty()) throw InvalidInput("cannot evaluate an empty dataset");
  EvalReport report;
  double sum_neighbor = 0, sum_direct = 0;
  for (const PuzzleCase& pc : cases) {
    PuzzleScore s;
    s.id = pc.id;
    s.pieces = pc.solution.piece_count();
    s.erosion_pct = pc.erosion_pct;
    s.scorer = pc.scorer;
    s.neighbor = neighbor_measure(pc.board, pc.solution);
    s.direct = direct_measure(pc.board, pc.solution);
    s.perfect = s.direct == 1.0;
    sum_neighbor += s.neighbor;
    sum_direct += s.direct;
    report.perfect_count += s.perfect ? 1 : 0;
    report.puzzles.push_back(std::move(s));
  }
  report.mean_neighbor = sum_neighbor / static_cast<double>(cases.size());
  report.mean_direct = sum_direct / static_cast<double>(cases.size());
  return report;
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  char buf[256];
  out << "puzzle_id,pieces,erosion_pct,scorer,neighbor,direct,perfect\n";
  for (const PuzzleScore& s : report.puzzles) {
    std::snprintf(buf, sizeof buf, ",%d,%.4g,", s.pieces, s.erosion_pct);
    out << s.id << buf << s.scorer;
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%d\n", s.neighbor, s.direct, s.perfect ? 1 : 0);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "mean,%d,,,%.6f,%.6f,%d\n", report.size(), report.mean_neighbor, report.mean_direct,
                report.perfect_count);
  out << buf;
}

void write_report_table(std::ostream& out, const EvalReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %6s %7s %-9s %9s %9s %7s\n", "puzzle", "pieces", "erosion", "scorer", "neighbor",
                "direct", "perfect");
  out << buf;
  for (const PuzzleScore& s : report.puzzles) {
    std::snprintf(buf, sizeof buf, "%-24s %6d %6.1f%% %-9s %8.1f%% %8.1f%% %7s\n", s.id.c_str(), s.pieces,
                  100 * s.erosion_pct, s.scorer.c_str(), 100 * s.neighbor, 100 * s.direct, s.perfect ? "yes" : "no");
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%-24s %6d %7s %-9s %8.1f%% %8.1f%% %4d/%-2d\n", "mean", report.size(), "", "",
                100 * report.mean_neighbor, 100 * report.mean_direct, report.perfect_count, report.size());
  out << buf;
}

}  // namespace jigsaw
