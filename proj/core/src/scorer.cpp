#include "jigsaw/scorer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "jigsaw/error.hpp"
#include "jigsaw/losses.hpp"
#include "jigsaw/pairgen.hpp"
#include "jigsaw/trainer.hpp"
#include "jigsaw/version.hpp"

namespace jigsaw {

DissimilarityTensor::DissimilarityTensor(int n) : n_(n) {
  if (n < 0) throw InvalidInput("negative tensor size");
  values_.assign(static_cast<std::size_t>(n) * n * 4, kUnusedScore);
}

void DissimilarityTensor::set(int x, int y, Direction d, double value) {
  if (x == y) throw InvalidInput("a piece has no dissimilarity with itself");
  values_[offset(x, y, d)] = value;
  values_[offset(y, x, opposite(d))] = value;
}

bool DissimilarityTensor::consistent() const {
  for (int x = 0; x < n_; ++x) {
    for (int y = 0; y < n_; ++y) {
      for (Direction d : kAllDirections) {
        const double v = at(x, y, d);
        if (x == y) {
          if (v != kUnusedScore) return false;
          continue;
        }
        if (v != at(y, x, opposite(d))) return false;
        if (std::isnan(v) || v < 0) return false;
      }
    }
  }
  return true;
}

double dissimilarity_from_probability(double p) { return -std::log(clamp_probability(p)); }

DissimilarityTensor neural_dissimilarity(const ModelCheckpoint& model, const PuzzleBundle& bundle, int threads) {
  if (model.phase != ModelPhase::Classifier) throw InvalidInput("neural scoring needs a classifier-phase checkpoint");
  if (bundle.erosion_width != model.erosion_width) {
    throw InvalidInput("bundle erosion width " + std::to_string(bundle.erosion_width) +
                       " does not match the checkpoint's " + std::to_string(model.erosion_width));
  }
  if (bundle.piece_size != model.arch.piece_size) throw InvalidInput("bundle piece size does not match the checkpoint");
  const int n = bundle.piece_count();
  DissimilarityTensor out(n);

  auto work = [&](int first, int last) {
    for (int x = first; x < last; ++x) {
      for (int y = 0; y < n; ++y) {
        if (x == y) continue;
        for (Direction d : {Direction::Right, Direction::Down}) {
          const PairSample pair = join_pair(bundle.pieces[x], bundle.pieces[y], d, bundle.erosion_width);
          const double p = model.discriminator.forward(discriminator_view(model, pair)).probability;
          const double score = dissimilarity_from_probability(p);
          if (!std::isfinite(score)) {
            throw InternalError("non-finite dissimilarity for pair (" + std::to_string(x) + ", " + std::to_string(y) + ")");
          }
          out.set(x, y, d, score);
        }
      }
    }
  };

  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          work(n * t / threads, n * (t + 1) / threads);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  out.metadata["scorer"] = "neural";
  out.metadata["checkpoint_config_hash"] = model.info.count("config_hash") ? model.info.at("config_hash") : "unknown";
  return out;
}

namespace {

// Mean over channels and facing pixel pairs of the squared color difference.
// For Right, row r of x contributes its last valid column against the first
// valid column of y; Down is the same on columns.
double boundary_mse(const PieceImage& x, const PieceImage& y, Direction d) {
  const int s = x.size();
  double sum = 0;
  long count = 0;
  for (int i = 0; i < s; ++i) {
    int xi = -1, yi = -1;
    for (int k = s - 1; k >= 0; --k) {
      const bool ok = d == Direction::Right ? x.valid.at(i, k) : x.valid.at(k, i);
      if (ok) { xi = k; break; }
    }
    for (int k = 0; k < s; ++k) {
      const bool ok = d == Direction::Right ? y.valid.at(i, k) : y.valid.at(k, i);
      if (ok) { yi = k; break; }
    }
    if (xi < 0 || yi < 0) continue;
    for (int ch = 0; ch < 3; ++ch) {
      const double a = d == Direction::Right ? x.pixels.at(ch, i, xi) : x.pixels.at(ch, xi, i);
      const double b = d == Direction::Right ? y.pixels.at(ch, i, yi) : y.pixels.at(ch, yi, i);
      sum += (a - b) * (a - b);
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : kUnusedScore;
}

}  // namespace

DissimilarityTensor baseline_dissimilarity(const PuzzleBundle& bundle) {
  const int n = bundle.piece_count();
  DissimilarityTensor out(n);
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (x == y) continue;
      out.set(x, y, Direction::Right, boundary_mse(bundle.pieces[x], bundle.pieces[y], Direction::Right));
      out.set(x, y, Direction::Down, boundary_mse(bundle.pieces[x], bundle.pieces[y], Direction::Down));
    }
  }
  out.metadata["scorer"] = "baseline";
  return out;
}

DissimilarityTensor oracle_dissimilarity(const Solution& solution) {
  (void)solution.piece_at_slots();
  const int n = solution.piece_count();
  DissimilarityTensor out(n);
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (x == y) continue;
      for (Direction d : {Direction::Right, Direction::Down}) {
        const Slot a = solution.slot_of[x];
        const Slot b = solution.slot_of[y];
        const bool adjacent = b.row == a.row + row_step(d) && b.col == a.col + col_step(d);
        out.set(x, y, d, adjacent ? 0.0 : kOracleMismatch);
      }
    }
  }
  out.metadata["scorer"] = "oracle";
  return out;
}

namespace {

std::string format_value(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_tensor(const std::filesystem::path& path, const DissimilarityTensor& t) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write tensor " + path.string());
  out << "# jigsaw-dissimilarity v1\n";
  out << "# n=" << t.size() << "\n";
  for (const auto& [k, v] : t.metadata) {
    if (k == "n") continue;
    out << "# " << k << "=" << v << "\n";
  }
  out << "x,y,dir,value\n";
  for (int x = 0; x < t.size(); ++x) {
    for (int y = 0; y < t.size(); ++y) {
      if (x == y) continue;
      for (Direction d : kAllDirections) out << x << ',' << y << ',' << name(d) << ',' << format_value(t.at(x, y, d)) << '\n';
    }
  }
  if (!out) throw InvalidInput("failed writing tensor " + path.string());
}

DissimilarityTensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open tensor " + path.string());
  std::map<std::string, std::string> meta;
  std::string line;
  bool saw_columns = false;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq != std::string::npos) meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    if (line == "x,y,dir,value") {
      saw_columns = true;
      break;
    }
    throw LoadError("malformed tensor header in " + path.string());
  }
  if (!saw_columns || !meta.count("n")) throw LoadError("tensor header incomplete in " + path.string());
  int n = 0;
  try {
    n = std::stoi(meta["n"]);
  } catch (const std::exception&) {
    throw LoadError("bad tensor size in " + path.string());
  }
  if (n < 0) throw LoadError("bad tensor size in " + path.string());

  DissimilarityTensor t(n);
  std::vector<char> seen(static_cast<std::size_t>(n) * n * 4, 0);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string xs, ys, ds, vs;
    if (!std::getline(ss, xs, ',') || !std::getline(ss, ys, ',') || !std::getline(ss, ds, ',') || !std::getline(ss, vs)) {
      throw LoadError("malformed tensor row '" + line + "' in " + path.string());
    }
    int x, y;
    double v;
    try {
      x = std::stoi(xs);
      y = std::stoi(ys);
      v = std::stod(vs);
    } catch (const std::exception&) {
      throw LoadError("malformed tensor row '" + line + "' in " + path.string());
    }
    const auto d = parse_direction(ds);
    if (!d || x < 0 || y < 0 || x >= n || y >= n || x == y) {
      throw LoadError("tensor row out of range '" + line + "' in " + path.string());
    }
    char& flag = seen[(static_cast<std::size_t>(x) * n + y) * 4 + index(*d)];
    if (flag) throw LoadError("duplicate tensor row '" + line + "' in " + path.string());
    flag = 1;
    // Mirrors arrive as their own rows.
    t.set_one_sided(x, y, *d, v);
    ++rows;
  }
  const std::size_t expected = static_cast<std::size_t>(n) * (n > 0 ? n - 1 : 0) * 4;
  if (rows != expected) {
    throw LoadError("truncated tensor " + path.string() + ": " + std::to_string(rows) + " of " +
                    std::to_string(expected) + " rows");
  }
  if (!t.consistent()) throw LoadError("tensor violates the mirror identities: " + path.string());
  meta.erase("n");
  t.metadata = std::move(meta);
  return t;
}

}  // namespace jigsaw
