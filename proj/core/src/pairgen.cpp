#include "jigsaw/pairgen.hpp"

#include "jigsaw/error.hpp"

namespace jigsaw {

namespace {

void check_width(int s, int w) {
  if (w < 0 || 2 * w >= s) throw InvalidInput("erosion width must satisfy 0 <= 2w < S");
}

}  // namespace

PairSample join_pair(const PieceImage& x, const PieceImage& y, Direction d, int erosion_width) {
  const int s = x.size();
  if (x.pixels.channels() != 3 || y.pixels.channels() != 3 || x.pixels.cols() != s || y.size() != s ||
      y.pixels.cols() != s || x.valid.rows() != s || y.valid.rows() != s) {
    throw InvalidInput("join_pair: pieces must be 3-channel squares of the same size");
  }
  if (d != Direction::Right && d != Direction::Down) {
    throw InvalidInput("join_pair: only Right and Down are joined directly; swap the pieces for Left/Up");
  }
  check_width(s, erosion_width);

  PairSample out;
  out.input = Tensor(3, s, 2 * s);
  out.mask = Mask(s, 2 * s);
  out.meta = PairMeta{x.id, y.id, d};
  out.erosion_width = erosion_width;

  for (int r = 0; r < s; ++r) {
    for (int c = 0; c < 2 * s; ++c) {
      const PieceImage& src = c < s ? x : y;
      const int local = c < s ? c : c - s;
      // Right: plain concatenation. Down: the x-over-y stack turned CCW, so
      // output (r, c) reads stacked row c, column S-1-r.
      const int pr = d == Direction::Right ? r : local;
      const int pc = d == Direction::Right ? local : s - 1 - r;
      if (!src.valid.at(pr, pc)) continue;
      for (int ch = 0; ch < 3; ++ch) out.input.at(ch, r, c) = src.pixels.at(ch, pr, pc);
    }
  }
  for (int r = 0; r < s; ++r) {
    for (int c = s - erosion_width; c < s + erosion_width; ++c) {
      out.mask.set(r, c, true);
      for (int ch = 0; ch < 3; ++ch) out.input.at(ch, r, c) = 0.0;
    }
  }
  return out;
}

Tensor center_crop(const Tensor& pair_raster) {
  if (pair_raster.cols() % 2 != 0) throw InvalidInput("center_crop: width must be even");
  const int half = pair_raster.cols() / 2;
  return pair_raster.crop_cols(half / 2, half);
}

Phase1Site draw_phase1_site(const Tensor& image, int piece_size, Rng& rng) {
  Phase1Site site;
  site.dir = uniform_index(rng, 2) == 0 ? Direction::Right : Direction::Down;
  const int need_h = site.dir == Direction::Down ? 2 * piece_size : piece_size;
  const int need_w = site.dir == Direction::Right ? 2 * piece_size : piece_size;
  if (image.rows() < need_h || image.cols() < need_w) {
    throw InvalidInput("corpus image too small for a pair of pieces");
  }
  site.row = uniform_index(rng, image.rows() - need_h + 1);
  site.col = uniform_index(rng, image.cols() - need_w + 1);
  return site;
}

PairSample phase1_example_at(const Tensor& image, const Phase1Site& site, const Phase1Options& opts) {
  const int s = opts.piece_size;
  const int w = opts.erosion_width;
  check_width(s, w);
  const int dr = row_step(site.dir) * s;
  const int dc = col_step(site.dir) * s;
  PieceImage x{0, image.crop(site.row, site.col, s, s), Mask(s, s, true)};
  PieceImage y{1, image.crop(site.row + dr, site.col + dc, s, s), Mask(s, s, true)};

  PairSample full = join_pair(x, y, site.dir, 0);
  Tensor original = full.input;
  if (opts.erode_outer_frame) {
    for (int ch = 0; ch < 3; ++ch) {
      for (int r = 0; r < s; ++r) {
        for (int c = 0; c < 2 * s; ++c) {
          if (r < w || r >= s - w || c < w || c >= 2 * s - w) original.at(ch, r, c) = 0.0;
        }
      }
    }
  }

  PairSample out;
  out.input = original;
  out.mask = Mask(s, 2 * s);
  for (int r = 0; r < s; ++r) {
    for (int c = s - w; c < s + w; ++c) {
      out.mask.set(r, c, true);
      for (int ch = 0; ch < 3; ++ch) out.input.at(ch, r, c) = 0.0;
    }
  }
  out.original = std::move(original);
  out.label = PairLabel::Positive;
  out.meta = PairMeta{0, 1, site.dir};
  out.erosion_width = w;
  return out;
}

PairSample make_phase1_example(const Tensor& image, const Phase1Options& opts, Rng& rng) {
  return phase1_example_at(image, draw_phase1_site(image, opts.piece_size, rng), opts);
}

std::vector<Adjacency> true_adjacencies(const Solution& solution) {
  const auto at = solution.piece_at_slots();
  std::vector<Adjacency> out;
  for (int r = 0; r < solution.rows; ++r) {
    for (int c = 0; c < solution.cols; ++c) {
      const int x = at[static_cast<std::size_t>(r) * solution.cols + c];
      if (c + 1 < solution.cols) out.push_back({x, at[static_cast<std::size_t>(r) * solution.cols + c + 1], Direction::Right});
      if (r + 1 < solution.rows) out.push_back({x, at[static_cast<std::size_t>(r + 1) * solution.cols + c], Direction::Down});
    }
  }
  return out;
}

LabeledPairs make_phase2_pair_at(const PuzzleBundle& bundle, const Solution& solution, const Adjacency& positive,
                                 Rng& rng) {
  const int n = bundle.piece_count();
  if (n < 3) throw InvalidInput("phase-2 sampling needs at least 3 pieces");
  if (solution.piece_count() != n) throw InvalidInput("solution does not match bundle");
  const int w = bundle.erosion_width;

  LabeledPairs out;
  out.positive = join_pair(bundle.pieces[positive.x], bundle.pieces[positive.y], positive.dir, w);
  out.positive.label = PairLabel::Positive;

  // Draw from the n-2 pieces other than x and y.
  const int lo = std::min(positive.x, positive.y);
  const int hi = std::max(positive.x, positive.y);
  int z = uniform_index(rng, n - 2);
  if (z >= lo) ++z;
  if (z >= hi) ++z;

  const bool keep_first = uniform_index(rng, 2) == 0;
  if (keep_first) {
    out.negative = join_pair(bundle.pieces[positive.x], bundle.pieces[z], positive.dir, w);
  } else {
    out.negative = join_pair(bundle.pieces[z], bundle.pieces[positive.y], positive.dir, w);
  }
  out.negative.label = PairLabel::Negative;
  return out;
}

LabeledPairs make_phase2_pair(const PuzzleBundle& bundle, const Solution& solution, Rng& rng) {
  if (bundle.piece_count() < 3) throw InvalidInput("phase-2 sampling needs at least 3 pieces");
  const auto adj = true_adjacencies(solution);
  if (adj.empty()) throw InvalidInput("puzzle has no adjacent pieces");
  return make_phase2_pair_at(bundle, solution, adj[uniform_index(rng, static_cast<int>(adj.size()))], rng);
}

}  // namespace jigsaw
