#include "jigsaw/puzzle_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <random>

#include "jigsaw/error.hpp"
#include "jigsaw/image_io.hpp"
#include "jigsaw/version.hpp"

namespace jigsaw {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<int> Solution::piece_at_slots() const {
  std::vector<int> at(static_cast<std::size_t>(rows) * cols, -1);
  for (int id = 0; id < piece_count(); ++id) {
    const Slot s = slot_of[id];
    if (s.row < 0 || s.col < 0 || s.row >= rows || s.col >= cols) {
      throw InvalidInput("solution slot outside grid for piece " + std::to_string(id));
    }
    auto& cell = at[static_cast<std::size_t>(s.row) * cols + s.col];
    if (cell >= 0) throw InvalidInput("solution is not a bijection");
    cell = id;
  }
  return at;
}

Board Solution::as_board() const {
  Board b(rows, cols);
  const auto at = piece_at_slots();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) b.set(r, c, at[static_cast<std::size_t>(r) * cols + c]);
  }
  return b;
}

SlicedPuzzle slice_image(const Tensor& image, int piece_size, std::string name) {
  if (piece_size <= 0) throw InvalidInput("piece size must be positive");
  if (image.channels() != 3) throw InvalidInput("slice_image expects a 3-channel raster");
  if (image.rows() < piece_size || image.cols() < piece_size) {
    throw InvalidInput("image " + std::to_string(image.rows()) + "x" + std::to_string(image.cols()) +
                       " is smaller than one " + std::to_string(piece_size) + "-pixel piece");
  }
  SlicedPuzzle out;
  auto& b = out.bundle;
  b.name = std::move(name);
  b.piece_size = piece_size;
  b.rows = image.rows() / piece_size;
  b.cols = image.cols() / piece_size;
  out.solution.rows = b.rows;
  out.solution.cols = b.cols;
  for (int r = 0; r < b.rows; ++r) {
    for (int c = 0; c < b.cols; ++c) {
      PieceImage p;
      p.id = static_cast<int>(b.pieces.size());
      p.pixels = image.crop(r * piece_size, c * piece_size, piece_size, piece_size);
      p.valid = Mask(piece_size, piece_size, true);
      b.pieces.push_back(std::move(p));
      out.solution.slot_of.push_back(Slot{r, c});
    }
  }
  return out;
}

int erosion_width_for(double erosion_pct, int piece_size) {
  if (!(erosion_pct >= 0.0) || erosion_pct >= 0.5) {
    throw InvalidInput("erosion fraction must lie in [0, 0.5)");
  }
  return static_cast<int>(std::floor(erosion_pct * piece_size));
}

PuzzleBundle erode(const PuzzleBundle& bundle, double erosion_pct) {
  const int w = erosion_width_for(erosion_pct, bundle.piece_size);
  PuzzleBundle out = bundle;
  out.erosion_width = std::max(bundle.erosion_width, w);
  out.erosion_pct = std::max(bundle.erosion_pct, erosion_pct);
  const int s = bundle.piece_size;
  for (auto& piece : out.pieces) {
    for (int r = 0; r < s; ++r) {
      for (int c = 0; c < s; ++c) {
        const bool frame = r < w || c < w || r >= s - w || c >= s - w;
        if (!frame) continue;
        piece.valid.set(r, c, false);
        for (int ch = 0; ch < 3; ++ch) piece.pixels.at(ch, r, c) = 0.0;
      }
    }
  }
  return out;
}

SlicedPuzzle shuffle(const PuzzleBundle& bundle, const Solution& truth, std::uint64_t seed) {
  const int n = bundle.piece_count();
  if (n < 1) throw InvalidInput("cannot shuffle an empty bundle");
  if (truth.piece_count() != n) throw InvalidInput("solution does not match bundle size");

  // Portable Fisher-Yates; std::shuffle's algorithm differs between libraries.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }

  SlicedPuzzle out;
  out.bundle = bundle;
  out.bundle.shuffled = true;
  out.solution.rows = truth.rows;
  out.solution.cols = truth.cols;
  out.solution.slot_of.resize(n);
  for (int new_id = 0; new_id < n; ++new_id) {
    out.bundle.pieces[new_id] = bundle.pieces[order[new_id]];
    out.bundle.pieces[new_id].id = new_id;
    out.solution.slot_of[new_id] = truth.slot_of[order[new_id]];
  }
  return out;
}

SlicedPuzzle shuffle(const PuzzleBundle& bundle, std::uint64_t seed) {
  if (bundle.shuffled) throw InvalidInput("bundle is already shuffled; pass its solution");
  Solution identity{bundle.rows, bundle.cols, {}};
  for (int r = 0; r < bundle.rows; ++r) {
    for (int c = 0; c < bundle.cols; ++c) identity.slot_of.push_back(Slot{r, c});
  }
  return shuffle(bundle, identity, seed);
}

Tensor render(const Board& board, const PuzzleBundle& bundle) {
  const int s = bundle.piece_size;
  Tensor out(3, board.rows() * s, board.cols() * s, 0.5);
  (void)board.positions(bundle.piece_count());  // throws on duplicates / bad ids
  for (int r = 0; r < board.rows(); ++r) {
    for (int c = 0; c < board.cols(); ++c) {
      const int id = board.at(r, c);
      if (id < 0) continue;
      const PieceImage& p = bundle.pieces[id];
      for (int ch = 0; ch < 3; ++ch) {
        for (int y = 0; y < s; ++y) {
          for (int x = 0; x < s; ++x) {
            out.at(ch, r * s + y, c * s + x) = p.valid.at(y, x) ? p.pixels.at(ch, y, x) : 0.0;
          }
        }
      }
    }
  }
  return out;
}

namespace {

std::string piece_filename(int id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "piece_%04d.png", id);
  return buf;
}

json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw LoadError("cannot open " + file.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw LoadError("corrupt JSON in " + file.string() + ": " + e.what());
  }
}

void write_json(const fs::path& file, const json& j) {
  std::ofstream out(file);
  if (!out) throw InvalidInput("cannot write " + file.string());
  out << j.dump(2) << "\n";
}

}  // namespace

void save_bundle(const fs::path& dir, const PuzzleBundle& bundle,
                 const std::map<std::string, std::string>& extra) {
  if (bundle.rows * bundle.cols != bundle.piece_count()) throw InvalidInput("bundle rows*cols != piece count");
  fs::create_directories(dir / "pieces");
  json files = json::array();
  for (const auto& p : bundle.pieces) {
    if (p.pixels.rows() != bundle.piece_size || p.pixels.cols() != bundle.piece_size) {
      throw InvalidInput("piece " + std::to_string(p.id) + " has the wrong size");
    }
    const std::string rel = "pieces/" + piece_filename(p.id);
    write_png(dir / rel, p.pixels, &p.valid);
    files.push_back(rel);
  }
  json provenance = json::object();
  for (const auto& [k, v] : extra) provenance[k] = v;
  json manifest = {
      {"format", "jigsaw-bundle"},
      {"format_version", 1},
      {"tool_version", std::string(tool_version())},
      {"name", bundle.name},
      {"piece_size", bundle.piece_size},
      {"rows", bundle.rows},
      {"cols", bundle.cols},
      {"erosion_width", bundle.erosion_width},
      {"erosion_pct", bundle.erosion_pct},
      {"shuffled", bundle.shuffled},
      {"pieces", files},
      {"provenance", provenance},
  };
  write_json(dir / "manifest.json", manifest);
}

PuzzleBundle load_bundle(const fs::path& dir) {
  const json m = read_json(dir / "manifest.json");
  PuzzleBundle b;
  std::vector<std::string> files;
  try {
    if (m.at("format").get<std::string>() != "jigsaw-bundle") throw LoadError("not a bundle manifest");
    b.name = m.value("name", std::string{});
    b.piece_size = m.at("piece_size").get<int>();
    b.rows = m.at("rows").get<int>();
    b.cols = m.at("cols").get<int>();
    b.erosion_width = m.at("erosion_width").get<int>();
    b.erosion_pct = m.at("erosion_pct").get<double>();
    b.shuffled = m.at("shuffled").get<bool>();
    files = m.at("pieces").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw LoadError("corrupt manifest in " + dir.string() + ": " + e.what());
  }
  if (b.piece_size <= 0 || b.rows <= 0 || b.cols <= 0 || b.erosion_width < 0 || 2 * b.erosion_width >= b.piece_size) {
    throw LoadError("manifest fields out of range in " + dir.string());
  }
  if (static_cast<std::size_t>(b.rows) * b.cols != files.size()) {
    throw LoadError("dimension mismatch: rows*cols = " + std::to_string(b.rows * b.cols) + " but manifest lists " +
                    std::to_string(files.size()) + " pieces");
  }
  for (std::size_t id = 0; id < files.size(); ++id) {
    const fs::path file = dir / files[id];
    if (!fs::exists(file)) throw LoadError("missing piece " + std::to_string(id) + " (" + file.string() + ")");
    DecodedImage img = read_png(file);
    if (img.rgb.rows() != b.piece_size || img.rgb.cols() != b.piece_size) {
      throw LoadError("dimension mismatch: piece " + std::to_string(id) + " is not " +
                      std::to_string(b.piece_size) + " pixels square");
    }
    b.pieces.push_back(PieceImage{static_cast<int>(id), std::move(img.rgb), std::move(img.opaque)});
  }
  return b;
}

void save_solution(const fs::path& file, const Solution& solution,
                   const std::map<std::string, std::string>& extra) {
  (void)solution.piece_at_slots();
  json slots = json::array();
  for (const Slot& s : solution.slot_of) slots.push_back({s.row, s.col});
  json j = {{"format", "jigsaw-solution"},
            {"tool_version", std::string(tool_version())},
            {"rows", solution.rows},
            {"cols", solution.cols},
            {"slot_of", slots}};
  for (const auto& [k, v] : extra) j["provenance"][k] = v;
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  write_json(file, j);
}

Solution load_solution(const fs::path& file) {
  const json j = read_json(file);
  Solution s;
  try {
    s.rows = j.at("rows").get<int>();
    s.cols = j.at("cols").get<int>();
    for (const auto& e : j.at("slot_of")) s.slot_of.push_back(Slot{e.at(0).get<int>(), e.at(1).get<int>()});
  } catch (const json::exception& e) {
    throw LoadError("corrupt solution " + file.string() + ": " + e.what());
  }
  if (s.rows * s.cols != s.piece_count()) throw LoadError("solution dimension mismatch in " + file.string());
  try {
    (void)s.piece_at_slots();
  } catch (const InvalidInput& e) {
    throw LoadError(std::string(e.what()) + " in " + file.string());
  }
  return s;
}

}  // namespace jigsaw
