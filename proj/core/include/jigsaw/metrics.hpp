#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "jigsaw/board.hpp"
#include "jigsaw/puzzle_io.hpp"

namespace jigsaw {

// Fraction of the solution's Right/Down adjacencies that the board reproduces.
// The denominator is rows*(cols-1) + (rows-1)*cols; a 1x1 puzzle scores 1.
double neighbor_measure(const Board& board, const Solution& solution);

struct Alignment {
  int row_shift = 0;
  int col_shift = 0;
  int correct = 0;
};

// Translation (added to board coordinates) that puts the most pieces on their
// true slots. Only overlapping shifts are searched; ties go to the smallest
// |dr| + |dc|, then the smaller (dr, dc).
Alignment best_alignment(const Board& board, const Solution& solution);

// Fraction of pieces on their true slot. Constrained boards are compared as
// is, unbounded ones after best_alignment.
double direct_measure(const Board& board, const Solution& solution);

bool perfect(const Board& board, const Solution& solution);

struct PuzzleCase {
  std::string id;
  Board board;
  Solution solution;
  double erosion_pct = 0.0;
  std::string scorer;
};

struct PuzzleScore {
  std::string id;
  int pieces = 0;
  double erosion_pct = 0.0;
  std::string scorer;
  double neighbor = 0.0;
  double direct = 0.0;
  bool perfect = false;
};

struct EvalReport {
  std::vector<PuzzleScore> puzzles;
  double mean_neighbor = 0.0;
  double mean_direct = 0.0;
  int perfect_count = 0;

  int size() const { return static_cast<int>(puzzles.size()); }
};

EvalReport evaluate_dataset(const std::vector<PuzzleCase>& cases);

// puzzle_id,pieces,erosion_pct,scorer,neighbor,direct,perfect plus a final
// "mean" row.
void write_report_csv(std::ostream& out, const EvalReport& report);
void write_report_table(std::ostream& out, const EvalReport& report);

}  // namespace jigsaw
