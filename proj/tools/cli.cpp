#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "jigsaw/error.hpp"
#include "jigsaw/image_io.hpp"
#include "jigsaw/kv_config.hpp"
#include "jigsaw/metrics.hpp"
#include "jigsaw/placer.hpp"
#include "jigsaw/puzzle_io.hpp"
#include "jigsaw/scorer.hpp"
#include "jigsaw/trainer.hpp"
#include "jigsaw/version.hpp"

namespace jigsaw::cli {

namespace fs = std::filesystem;

namespace {

using Header = std::map<std::string, std::string>;

struct Io {
  std::ostream& out;
  std::ostream& err;
};

std::string dashed(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (const std::string& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

// Options are registered under their config-file key (`--piece-size` is
// `piece_size`). Flags given on the command line override the --config file.
class Settings {
 public:
  explicit Settings(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_path_, "key=value file; command-line flags take precedence");
  }

  Settings& option(const std::string& key, const std::string& help, const std::string& alias = {}) {
    std::string names = "--" + dashed(key);
    if (!alias.empty()) names += ",--" + alias;
    options_[key] = app_->add_option(names, strings_[key], help);
    return *this;
  }
  Settings& list(const std::string& key, const std::string& help) {
    options_[key] = app_->add_option("--" + dashed(key), lists_[key], help);
    return *this;
  }
  Settings& flag(const std::string& key, const std::string& help) {
    options_[key] = app_->add_flag("--" + dashed(key), help);
    return *this;
  }

  KeyValueConfig resolve() const {
    KeyValueConfig kv = config_path_.empty() ? KeyValueConfig{} : KeyValueConfig::load(config_path_);
    for (const auto& [key, opt] : options_) {
      if (opt->count() == 0) continue;
      if (lists_.count(key)) {
        kv.set(key, join_list(lists_.at(key)));
      } else if (strings_.count(key)) {
        kv.set(key, strings_.at(key));
      } else {
        kv.set(key, "true");
      }
    }
    return kv;
  }

 private:
  CLI::App* app_;
  std::string config_path_;
  std::map<std::string, CLI::Option*> options_;
  std::map<std::string, std::string> strings_;
  std::map<std::string, std::vector<std::string>> lists_;
};

std::string require(const KeyValueConfig& kv, const std::string& key) {
  const auto v = kv.get(key);
  if (!v || v->empty()) throw InvalidInput("missing required --" + dashed(key));
  return *v;
}

std::uint64_t seed_of(const KeyValueConfig& kv) { return static_cast<std::uint64_t>(kv.get_int("seed", 0)); }

void log_config(const std::string& command, const KeyValueConfig& kv, std::ostream& err) {
  err << "[config] command=" << command << "\n";
  for (const auto& [k, v] : kv.values()) err << "[config] " << k << "=" << v << "\n";
}

Header provenance(const KeyValueConfig& kv) {
  return {{"tool_version", std::string(tool_version())}, {"seed", std::to_string(seed_of(kv))}};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// ------------------------------------------------------------------ commands

int cmd_generate(const KeyValueConfig& kv, Io io) {
  std::vector<fs::path> roots;
  for (const std::string& s : split_list(require(kv, "images"))) roots.emplace_back(s);
  const fs::path out = require(kv, "out");
  const int piece_size = static_cast<int>(kv.get_int("piece_size", 64));
  const double erosion_pct = kv.get_double("erosion_pct", 0.07);
  const std::uint64_t seed = seed_of(kv);
  const std::vector<fs::path> images = list_images(roots);
  if (images.empty()) throw InvalidInput("no PNG images found");

  fs::create_directories(out / "bundles");
  fs::create_directories(out / "solutions");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string stem = images[i].stem().string();
    const SlicedPuzzle sliced = slice_image(read_png(images[i]).rgb, piece_size, stem);
    const std::uint64_t puzzle_seed = seed + i;
    SlicedPuzzle shuffled = shuffle(erode(sliced.bundle, erosion_pct), sliced.solution, puzzle_seed);
    shuffled.bundle.name = stem;
    Header prov = provenance(kv);
    prov["seed"] = std::to_string(puzzle_seed);
    prov["run_seed"] = std::to_string(seed);
    prov["source"] = images[i].filename().string();
    save_bundle(out / "bundles" / stem, shuffled.bundle, prov);
    save_solution(out / "solutions" / (stem + ".json"), shuffled.solution, prov);
    io.out << stem << " " << shuffled.bundle.rows << "x" << shuffled.bundle.cols
           << " pieces=" << shuffled.bundle.piece_count() << " erosion_width=" << shuffled.bundle.erosion_width
           << "\n";
  }
  return 0;
}

ProgressFn progress_to(std::ostream& err) {
  return [&err](const std::string& line) { err << line << "\n"; };
}

int cmd_train_inpaint(const KeyValueConfig& kv, Io io) {
  const TrainConfig cfg = TrainConfig::from_kv(kv);
  if (cfg.out_dir.empty()) throw InvalidInput("missing required --out-dir");
  train_phase1(cfg, nullptr, progress_to(io.err));
  io.out << "checkpoint " << (cfg.out_dir / "inpainting.ckpt").string() << "\n";
  return 0;
}

int cmd_train_classify(const KeyValueConfig& given, Io io) {
  const ModelCheckpoint warm = load_checkpoint(require(given, "warm"));
  // Architecture and erosion default to the warm model's.
  KeyValueConfig kv = given;
  if (!kv.has("piece_size")) kv.set("piece_size", std::to_string(warm.arch.piece_size));
  if (!kv.has("base_width")) kv.set("base_width", std::to_string(warm.arch.base_width));
  if (!kv.has("erosion_pct") && warm.info.count("erosion_pct")) kv.set("erosion_pct", warm.info.at("erosion_pct"));
  const TrainConfig cfg = TrainConfig::from_kv(kv);
  if (cfg.out_dir.empty()) throw InvalidInput("missing required --out-dir");
  train_phase2(cfg, warm, nullptr, progress_to(io.err));
  io.out << "checkpoint " << (cfg.out_dir / "classifier.ckpt").string() << "\n";
  return 0;
}

int cmd_score(const KeyValueConfig& kv, Io io) {
  const fs::path bundle_dir = require(kv, "bundle");
  const fs::path out = require(kv, "out");
  const std::string scorer = kv.get_string("scorer", "neural");
  const PuzzleBundle bundle = load_bundle(bundle_dir);

  DissimilarityTensor t;
  if (scorer == "neural") {
    const ModelCheckpoint model = load_checkpoint(require(kv, "model"));
    t = neural_dissimilarity(model, bundle, static_cast<int>(kv.get_int("threads", 1)));
    t.metadata["model"] = fs::path(require(kv, "model")).filename().string();
  } else if (scorer == "baseline") {
    t = baseline_dissimilarity(bundle);
  } else if (scorer == "oracle") {
    const Solution solution = load_solution(require(kv, "solution"));
    if (solution.piece_count() != bundle.piece_count()) throw InvalidInput("solution does not match bundle size");
    t = oracle_dissimilarity(solution);
  } else {
    throw InvalidInput("unknown scorer '" + scorer + "' (neural, baseline or oracle)");
  }
  for (const auto& [k, v] : provenance(kv)) t.metadata[k] = v;
  t.metadata["bundle"] = bundle.name;
  t.metadata["rows"] = std::to_string(bundle.rows);
  t.metadata["cols"] = std::to_string(bundle.cols);
  t.metadata["piece_size"] = std::to_string(bundle.piece_size);
  t.metadata["erosion_width"] = std::to_string(bundle.erosion_width);
  t.metadata["erosion_pct"] = fmt(bundle.erosion_pct);
  save_tensor(out, t);
  io.out << "tensor " << out.string() << " n=" << t.size() << " scorer=" << scorer << "\n";
  return 0;
}

int meta_int(const DissimilarityTensor& t, const std::string& key) {
  const auto it = t.metadata.find(key);
  return it == t.metadata.end() ? 0 : std::stoi(it->second);
}

int cmd_solve(const KeyValueConfig& kv, Io io) {
  const fs::path tensor_path = require(kv, "tensor");
  const fs::path out = require(kv, "out");
  const DissimilarityTensor t = load_tensor(tensor_path);

  PlacementOptions opts;
  const std::string mode = kv.get_string("mode", "constrained");
  if (mode == "constrained") {
    opts.mode = FrameMode::Constrained;
  } else if (mode == "unbounded") {
    opts.mode = FrameMode::Unbounded;
  } else {
    throw InvalidInput("unknown mode '" + mode + "' (constrained or unbounded)");
  }
  opts.rows = static_cast<int>(kv.get_int("rows", meta_int(t, "rows")));
  opts.cols = static_cast<int>(kv.get_int("cols", meta_int(t, "cols")));
  opts.tiebreak_seed = seed_of(kv);
  const Board board = t.size() == 1 ? [&] {
    Board b(1, 1, opts.mode);
    b.set(0, 0, 0);
    return b;
  }()
                                    : solve(t, opts);

  Header header = provenance(kv);
  header["tensor"] = tensor_path.filename().string();
  for (const char* key : {"bundle", "scorer", "erosion_pct"}) {
    if (t.metadata.count(key)) header[key] = t.metadata.at(key);
  }
  save_board(out, board, header);
  io.out << "board " << out.string() << " " << board.rows() << "x" << board.cols() << "\n";
  return 0;
}

int cmd_evaluate(const KeyValueConfig& kv, Io io) {
  const std::vector<std::string> boards = split_list(require(kv, "board"));
  const std::vector<std::string> solutions = split_list(require(kv, "solution"));
  if (boards.size() != solutions.size()) throw InvalidInput("--board and --solution must be given in pairs");

  std::vector<PuzzleCase> cases;
  for (std::size_t i = 0; i < boards.size(); ++i) {
    Header header;
    PuzzleCase pc;
    pc.board = load_board(boards[i], &header);
    pc.solution = load_solution(solutions[i]);
    pc.id = header.count("bundle") ? header.at("bundle") : fs::path(boards[i]).stem().string();
    pc.scorer = header.count("scorer") ? header.at("scorer") : "unknown";
    pc.erosion_pct = header.count("erosion_pct") ? std::stod(header.at("erosion_pct")) : 0.0;
    cases.push_back(std::move(pc));
  }
  const EvalReport report = evaluate_dataset(cases);
  write_report_table(io.out, report);
  if (const auto csv = kv.get("csv"); csv && !csv->empty()) {
    std::ofstream f(*csv);
    if (!f) throw InvalidInput("cannot write " + *csv);
    for (const auto& [k, v] : provenance(kv)) f << "# " << k << "=" << v << "\n";
    write_report_csv(f, report);
  }
  return 0;
}

int cmd_render(const KeyValueConfig& kv, Io io) {
  const fs::path board_path = require(kv, "board");
  const fs::path out = require(kv, "out");
  Header header;
  const Board board = load_board(board_path, &header);
  const PuzzleBundle bundle = load_bundle(require(kv, "bundle"));
  Header text = provenance(kv);
  if (!kv.has("seed") && header.count("seed")) text["seed"] = header.at("seed");
  text["board"] = board_path.filename().string();
  text["bundle"] = bundle.name;
  write_png(out, render(board, bundle), nullptr, text);
  io.out << "image " << out.string() << "\n";
  return 0;
}

// score, solve and evaluate with the same resolved settings.
int cmd_pipeline(const KeyValueConfig& kv, Io io) {
  const fs::path out = require(kv, "out");
  fs::create_directories(out);
  KeyValueConfig step = kv;
  step.set("out", (out / "tensor.csv").string());
  cmd_score(step, io);
  step = kv;
  step.set("tensor", (out / "tensor.csv").string());
  step.set("out", (out / "board.txt").string());
  cmd_solve(step, io);
  step = kv;
  step.set("board", (out / "board.txt").string());
  step.set("csv", (out / "report.csv").string());
  return cmd_evaluate(step, io);
}

void add_training_options(Settings& s) {
  s.option("out_dir", "directory for checkpoints and loss logs")
      .option("phase1_corpus", "comma-separated images or directories for inpainting training")
      .option("phase2_corpus", "comma-separated images or directories for classification training")
      .option("seed", "random seed")
      .option("erosion_pct", "eroded fraction of the piece size per side", "erosion")
      .option("piece_size", "piece side in pixels", "pieces")
      .option("base_width", "channel width of the first network level")
      .option("lambda", "weight of the L1 term")
      .option("lr_generator", "generator learning rate")
      .option("lr_discriminator_phase1", "discriminator learning rate while inpainting")
      .option("lr_phase2", "discriminator learning rate while classifying")
      .option("adam_beta1", "first-moment decay")
      .option("adam_beta2", "second-moment decay")
      .option("epochs_phase1", "inpainting epochs")
      .option("epochs_phase2", "classification epochs")
      .option("batch_size", "examples per update")
      .option("examples_phase1", "inpainting examples per epoch")
      .option("examples_phase2", "positive pairs per classification epoch (0 = all)")
      .flag("erode_outer_frame", "erode the whole frame of training pairs, not only the facing edges")
      .flag("no_epoch_checkpoints", "only write the final checkpoint");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Eroded-boundary jigsaw puzzle solver", "jigsaw"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);

  using Command = std::function<int(const KeyValueConfig&, Io)>;
  struct Entry {
    CLI::App* app;
    std::unique_ptr<Settings> settings;
    Command run;
  };
  std::vector<Entry> entries;
  const auto add = [&](const std::string& name, const std::string& help, Command fn) -> Settings& {
    CLI::App* sub = app.add_subcommand(name, help);
    entries.push_back({sub, std::make_unique<Settings>(sub), std::move(fn)});
    return *entries.back().settings;
  };

  add("generate", "slice, erode and shuffle images into puzzle bundles", cmd_generate)
      .list("images", "PNG images or directories")
      .option("out", "output directory (bundles/ and solutions/)")
      .option("piece_size", "piece side in pixels", "pieces")
      .option("erosion_pct", "eroded fraction of the piece size per side", "erosion")
      .option("seed", "shuffle seed");

  add_training_options(add("train-inpaint", "train the inpainting generator and discriminator", cmd_train_inpaint));

  Settings& classify =
      add("train-classify", "fine-tune the discriminator as a neighbor classifier", cmd_train_classify);
  add_training_options(classify);
  classify.option("warm", "inpainting checkpoint to start from")
      .flag("cold_start", "start from a freshly initialised discriminator")
      .flag("no_inpainting", "classify raw gapped pairs (implies --cold-start)");

  add("score", "compute the dissimilarity tensor of a bundle", cmd_score)
      .option("bundle", "bundle directory")
      .option("scorer", "neural, baseline or oracle")
      .option("model", "classifier checkpoint (neural scorer)")
      .option("solution", "solution file (oracle scorer)")
      .option("threads", "worker threads for the neural scorer")
      .option("out", "tensor file to write")
      .option("seed", "recorded seed");

  add("solve", "place pieces from a dissimilarity tensor", cmd_solve)
      .option("tensor", "tensor file")
      .option("out", "board file to write")
      .option("mode", "constrained or unbounded")
      .option("rows", "grid rows (default: from the tensor)")
      .option("cols", "grid columns (default: from the tensor)")
      .option("seed", "tie-break seed");

  add("evaluate", "neighbor, direct and perfect measures", cmd_evaluate)
      .list("board", "board files")
      .list("solution", "solution files, one per board")
      .option("csv", "report CSV to write")
      .option("seed", "recorded seed");

  add("render", "draw a board as a PNG", cmd_render)
      .option("board", "board file")
      .option("bundle", "bundle directory")
      .option("out", "PNG to write")
      .option("seed", "recorded seed");

  add("pipeline", "score, solve and evaluate one bundle", cmd_pipeline)
      .option("bundle", "bundle directory")
      .option("solution", "solution file")
      .option("scorer", "neural, baseline or oracle")
      .option("model", "classifier checkpoint (neural scorer)")
      .option("threads", "worker threads for the neural scorer")
      .option("mode", "constrained or unbounded")
      .option("out", "output directory")
      .option("seed", "seed");

  std::vector<std::string> argv_store{"jigsaw"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  for (Entry& e : entries) {
    if (!e.app->parsed()) continue;
    try {
      KeyValueConfig kv = e.settings->resolve();
      if (kv.get_bool("no_epoch_checkpoints", false)) kv.set("epoch_checkpoints", "false");
      if (kv.get_bool("no_inpainting", false)) kv.set("cold_start", "true");
      log_config(e.app->get_name(), kv, err);
      return e.run(kv, Io{out, err});
    } catch (const InvalidInput& ex) {
      err << "error: " << ex.what() << "\n";
      return 2;
    } catch (const LoadError& ex) {
      err << "error: " << ex.what() << "\n";
      return 2;
    } catch (const std::exception& ex) {
      err << "error: " << ex.what() << "\n";
      return 1;
    }
  }
  return 2;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace jigsaw::cli
