#include "jigsaw/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "jigsaw/error.hpp"
#include "jigsaw/image_io.hpp"
#include "jigsaw/losses.hpp"
#include "jigsaw/version.hpp"

namespace jigsaw {

namespace fs = std::filesystem;

// ------------------------------------------------------------------- config

int TrainConfig::erosion_width() const { return erosion_width_for(erosion_pct, piece_size); }

std::vector<fs::path> list_images(const std::vector<fs::path>& roots) {
  std::vector<fs::path> out;
  for (const auto& root : roots) {
    if (fs::is_directory(root)) {
      for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") out.push_back(entry.path());
      }
    } else if (fs::is_regular_file(root)) {
      out.push_back(root);
    } else {
      throw LoadError("corpus path not found: " + root.string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void TrainConfig::validate() const {
  if (!(lr_generator > 0 && lr_discriminator_phase1 > 0 && lr_phase2 > 0)) {
    throw InvalidInput("learning rates must be positive");
  }
  if (lambda < 0) throw InvalidInput("lambda must be non-negative");
  if (epochs_phase1 < 0 || epochs_phase2 < 0) throw InvalidInput("epoch counts must be non-negative");
  if (batch_size < 1) throw InvalidInput("batch size must be at least 1");
  if (examples_phase1 < 1 || examples_phase2 < 0) throw InvalidInput("example counts out of range");
  architecture().validate();
  (void)erosion_width();
  if (!phase1_corpus.empty() && !phase2_corpus.empty()) {
    std::set<fs::path> seen;
    for (const auto& p : list_images(phase1_corpus)) seen.insert(fs::weakly_canonical(p));
    for (const auto& p : list_images(phase2_corpus)) {
      if (seen.count(fs::weakly_canonical(p))) {
        throw InvalidInput("phase-1 and phase-2 corpora overlap at " + p.string());
      }
    }
  }
}

namespace {

std::string join_paths(const std::vector<fs::path>& ps) {
  std::string s;
  for (const auto& p : ps) s += (s.empty() ? "" : ",") + p.string();
  return s;
}

std::vector<fs::path> split_paths(const std::string& s) {
  std::vector<fs::path> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.emplace_back(item);
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

KeyValueConfig TrainConfig::to_kv() const {
  KeyValueConfig kv;
  kv.set("lambda", fmt(lambda));
  kv.set("lr_generator", fmt(lr_generator));
  kv.set("lr_discriminator_phase1", fmt(lr_discriminator_phase1));
  kv.set("lr_phase2", fmt(lr_phase2));
  kv.set("adam_beta1", fmt(adam_beta1));
  kv.set("adam_beta2", fmt(adam_beta2));
  kv.set("epochs_phase1", std::to_string(epochs_phase1));
  kv.set("epochs_phase2", std::to_string(epochs_phase2));
  kv.set("batch_size", std::to_string(batch_size));
  kv.set("seed", std::to_string(seed));
  kv.set("erosion_pct", fmt(erosion_pct));
  kv.set("piece_size", std::to_string(piece_size));
  kv.set("base_width", std::to_string(base_width));
  kv.set("examples_phase1", std::to_string(examples_phase1));
  kv.set("examples_phase2", std::to_string(examples_phase2));
  kv.set("erode_outer_frame", erode_outer_frame ? "true" : "false");
  kv.set("cold_start", cold_start ? "true" : "false");
  kv.set("no_inpainting", no_inpainting ? "true" : "false");
  kv.set("epoch_checkpoints", epoch_checkpoints ? "true" : "false");
  kv.set("phase1_corpus", join_paths(phase1_corpus));
  kv.set("phase2_corpus", join_paths(phase2_corpus));
  kv.set("out_dir", out_dir.string());
  return kv;
}

TrainConfig TrainConfig::from_kv(const KeyValueConfig& kv) {
  TrainConfig c;
  c.lambda = kv.get_double("lambda", c.lambda);
  c.lr_generator = kv.get_double("lr_generator", c.lr_generator);
  c.lr_discriminator_phase1 = kv.get_double("lr_discriminator_phase1", c.lr_discriminator_phase1);
  c.lr_phase2 = kv.get_double("lr_phase2", c.lr_phase2);
  c.adam_beta1 = kv.get_double("adam_beta1", c.adam_beta1);
  c.adam_beta2 = kv.get_double("adam_beta2", c.adam_beta2);
  c.epochs_phase1 = static_cast<int>(kv.get_int("epochs_phase1", c.epochs_phase1));
  c.epochs_phase2 = static_cast<int>(kv.get_int("epochs_phase2", c.epochs_phase2));
  c.batch_size = static_cast<int>(kv.get_int("batch_size", c.batch_size));
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(c.seed)));
  c.erosion_pct = kv.get_double("erosion_pct", c.erosion_pct);
  c.piece_size = static_cast<int>(kv.get_int("piece_size", c.piece_size));
  c.base_width = static_cast<int>(kv.get_int("base_width", c.base_width));
  c.examples_phase1 = static_cast<int>(kv.get_int("examples_phase1", c.examples_phase1));
  c.examples_phase2 = static_cast<int>(kv.get_int("examples_phase2", c.examples_phase2));
  c.erode_outer_frame = kv.get_bool("erode_outer_frame", c.erode_outer_frame);
  c.cold_start = kv.get_bool("cold_start", c.cold_start);
  c.no_inpainting = kv.get_bool("no_inpainting", c.no_inpainting);
  c.epoch_checkpoints = kv.get_bool("epoch_checkpoints", c.epoch_checkpoints);
  c.phase1_corpus = split_paths(kv.get_string("phase1_corpus", ""));
  c.phase2_corpus = split_paths(kv.get_string("phase2_corpus", ""));
  c.out_dir = kv.get_string("out_dir", "");
  return c;
}

std::uint64_t TrainConfig::fingerprint() const {
  KeyValueConfig kv = to_kv();
  kv.set("out_dir", "");
  return fnv1a64(kv.to_text());
}

// --------------------------------------------------------------- objectives

Tensor discriminator_view(const ModelCheckpoint& model, const PairSample& sample) {
  if (!model.inpaint) return center_crop(sample.input);
  return center_crop(model.generator.forward(sample).image);
}

double phase1_discriminator_objective(const Discriminator& d, const Tensor& real_crop, const Tensor& fake_crop) {
  return discriminator_loss_phase1(d.forward(real_crop).probability, d.forward(fake_crop).probability);
}

double phase1_generator_objective(const Generator& g, const Discriminator& d, const PairSample& sample,
                                  double lambda) {
  const GeneratedPair gp = g.forward(sample);
  const double p = d.forward(center_crop(gp.image)).probability;
  return generator_loss(p, gp.original_band, gp.band, lambda);
}

double phase2_discriminator_objective(const Discriminator& d, const Tensor& positive_crop,
                                      const Tensor& negative_crop) {
  return discriminator_loss_phase2(d.forward(positive_crop).probability, d.forward(negative_crop).probability);
}

double accumulate_phase1_discriminator(Discriminator& d, const Tensor& real_crop, const Tensor& fake_crop,
                                       double scale) {
  Discriminator::Trace tr, tf;
  const double p_real = d.forward(real_crop, &tr).probability;
  const double p_fake = d.forward(fake_crop, &tf).probability;
  d.backward(tr, scale * 0.5 * bce_grad(p_real, 1.0), false);
  d.backward(tf, scale * 0.5 * bce_grad(p_fake, 0.0), false);
  return discriminator_loss_phase1(p_real, p_fake);
}

GeneratorLossParts accumulate_phase1_generator(Generator& g, const Discriminator& d, const PairSample& sample,
                                               double lambda, double scale) {
  if (!sample.original) throw InvalidInput("generator objective needs the original pair");
  const int s = sample.piece_size();
  Generator::Trace gt;
  const GeneratedPair gp = g.forward(sample, &gt);

  Discriminator::Trace dt;
  const double p = d.forward(center_crop(gp.image), &dt).probability;
  GeneratorLossParts parts;
  parts.p_fake = p;
  parts.adversarial = bce(p, 1.0);
  parts.l1 = mean_l1(gp.original_band, gp.band);
  parts.total = parts.adversarial + lambda * parts.l1;

  Tensor d_image(3, s, 2 * s);
  d_image.paste(d.input_gradient(dt, scale * bce_grad(p, 1.0)), 0, s / 2);
  if (!gp.band.empty() && lambda != 0.0) {
    const double k = scale * lambda / static_cast<double>(gp.band.size());
    std::size_t i = 0;
    for (int ch = 0; ch < 3; ++ch) {
      for (int r = 0; r < s; ++r) {
        for (int c = 0; c < 2 * s; ++c) {
          if (!sample.mask.at(r, c)) continue;
          const double diff = gp.band[i] - gp.original_band[i];
          d_image.at(ch, r, c) += diff > 0 ? k : diff < 0 ? -k : 0.0;
          ++i;
        }
      }
    }
  }
  g.backward(gt, sample.mask, d_image);
  return parts;
}

double accumulate_phase2_discriminator(Discriminator& d, const Tensor& positive_crop, const Tensor& negative_crop,
                                       double scale) {
  Discriminator::Trace tp, tn;
  const double p_pos = d.forward(positive_crop, &tp).probability;
  const double p_neg = d.forward(negative_crop, &tn).probability;
  d.backward(tp, scale * 0.5 * bce_grad(p_pos, 1.0), false);
  d.backward(tn, scale * 0.5 * bce_grad(p_neg, 0.0), false);
  return discriminator_loss_phase2(p_pos, p_neg);
}

// ------------------------------------------------------------------ loops

namespace {

void check_finite(double v, const char* what, long step) {
  if (!std::isfinite(v)) {
    throw TrainingDiverged(std::string("non-finite ") + what + " at step " + std::to_string(step));
  }
}

template <typename T>
void seeded_shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, static_cast<int>(i))]);
}

std::vector<Tensor> load_corpus(const std::vector<fs::path>& roots) {
  std::vector<Tensor> out;
  for (const auto& p : list_images(roots)) out.push_back(read_png(p).rgb);
  if (out.empty()) throw InvalidInput("training corpus is empty");
  return out;
}

void write_config(const TrainConfig& cfg, const std::string& file) {
  if (cfg.out_dir.empty()) return;
  fs::create_directories(cfg.out_dir);
  std::ofstream out(cfg.out_dir / file);
  out << "# tool_version=" << tool_version() << "\n" << cfg.to_kv().to_text();
}

void stamp(ModelCheckpoint& m, const TrainConfig& cfg, const nn::Adam& opt, const char* phase, int epochs_done) {
  std::ostringstream hash;
  hash << std::hex << cfg.fingerprint();
  m.info["seed"] = std::to_string(cfg.seed);
  m.info["config_hash"] = hash.str();
  m.info["optimizer"] = "adam(beta1=" + fmt(opt.beta1()) + ",beta2=" + fmt(opt.beta2()) + ",eps=1e-08)";
  m.info[std::string("epochs_") + phase] = std::to_string(epochs_done);
  m.info["erosion_pct"] = fmt(cfg.erosion_pct);
}

std::string epoch_name(const char* phase, int epoch) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_epoch_%03d.ckpt", phase, epoch);
  return buf;
}

}  // namespace

ModelCheckpoint train_phase1(const TrainConfig& cfg, TrainingLog* log, const ProgressFn& progress) {
  cfg.validate();
  if (cfg.phase1_corpus.empty()) throw InvalidInput("phase-1 corpus is empty");
  const std::vector<Tensor> corpus = load_corpus(cfg.phase1_corpus);
  write_config(cfg, "phase1_config.txt");

  const Phase1Options opts{cfg.piece_size, cfg.erosion_width(), cfg.erode_outer_frame};
  ModelCheckpoint model = ModelCheckpoint::fresh(cfg.architecture(), opts.erosion_width, cfg.seed);
  model.phase = ModelPhase::Inpainting;

  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  struct Site {
    int image;
    Phase1Site where;
  };
  std::vector<Site> sites;
  sites.reserve(cfg.examples_phase1);
  for (int i = 0; i < cfg.examples_phase1; ++i) {
    const int img = uniform_index(rng, static_cast<int>(corpus.size()));
    sites.push_back({img, draw_phase1_site(corpus[img], cfg.piece_size, rng)});
  }

  TrainingLog local;
  TrainingLog& out = log ? *log : local;
  {
    double sum = 0;
    for (const Site& s : sites) {
      const PairSample sample = phase1_example_at(corpus[s.image], s.where, opts);
      const GeneratedPair gp = model.generator.forward(sample);
      sum += mean_l1(gp.original_band, gp.band);
    }
    out.initial_l1 = sum / static_cast<double>(sites.size());
  }

  auto g_params = model.generator.parameters();
  auto d_params = model.discriminator.parameters();
  nn::Adam opt_g(g_params, cfg.lr_generator, cfg.adam_beta1, cfg.adam_beta2);
  nn::Adam opt_d(d_params, cfg.lr_discriminator_phase1, cfg.adam_beta1, cfg.adam_beta2);

  std::ofstream csv;
  if (!cfg.out_dir.empty()) {
    csv.open(cfg.out_dir / "phase1_loss.csv");
    csv << "# tool_version=" << tool_version() << " seed=" << cfg.seed << "\n";
    csv << "step,epoch,d_loss,g_adv,g_l1,g_total,p_real,p_fake\n";
  }

  long step = 0;
  const double scale = 1.0 / cfg.batch_size;
  for (int epoch = 1; epoch <= cfg.epochs_phase1; ++epoch) {
    seeded_shuffle(sites, rng);
    double sum_total = 0, sum_l1 = 0;
    for (std::size_t begin = 0; begin < sites.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(sites.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      std::vector<PairSample> batch;
      std::vector<Tensor> fake_crops;
      for (std::size_t i = begin; i < end; ++i) {
        batch.push_back(phase1_example_at(corpus[sites[i].image], sites[i].where, opts));
        fake_crops.push_back(center_crop(model.generator.forward(batch.back()).image));
      }

      // Discriminator: real = crop(OI), fake = crop(GI) with GI held fixed.
      opt_d.zero_grad();
      std::vector<Phase1Step> rows(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        Phase1Step& row = rows[i];
        const Tensor real_crop = center_crop(*batch[i].original);
        row.p_real = model.discriminator.forward(real_crop).probability;
        row.d_loss = accumulate_phase1_discriminator(model.discriminator, real_crop, fake_crops[i], scale);
        check_finite(row.d_loss, "discriminator loss", step);
      }
      opt_d.step();

      opt_g.zero_grad();
      for (std::size_t i = 0; i < batch.size(); ++i) {
        Phase1Step& row = rows[i];
        const GeneratorLossParts parts =
            accumulate_phase1_generator(model.generator, model.discriminator, batch[i], cfg.lambda, scale);
        check_finite(parts.total, "generator loss", step);
        row.g_adv = parts.adversarial;
        row.g_l1 = parts.l1;
        row.g_total = parts.total;
        row.p_fake = parts.p_fake;
      }
      opt_g.step();

      for (Phase1Step& row : rows) {
        row.step = step++;
        row.epoch = epoch;
        sum_total += row.g_total;
        sum_l1 += row.g_l1;
        if (csv.is_open()) {
          csv << row.step << ',' << row.epoch << ',' << fmt(row.d_loss) << ',' << fmt(row.g_adv) << ','
              << fmt(row.g_l1) << ',' << fmt(row.g_total) << ',' << fmt(row.p_real) << ',' << fmt(row.p_fake)
              << '\n';
        }
        out.phase1.push_back(row);
      }
    }
    const double n = static_cast<double>(sites.size());
    out.epochs.push_back(EpochSummary{epoch, sum_total / n, sum_l1 / n, 0, 0});
    stamp(model, cfg, opt_g, "phase1", epoch);
    if (!cfg.out_dir.empty() && cfg.epoch_checkpoints) save_checkpoint(cfg.out_dir / epoch_name("phase1", epoch), model);
    if (progress) {
      std::ostringstream msg;
      msg << "phase1 epoch " << epoch << "/" << cfg.epochs_phase1 << " mean_g_total=" << sum_total / n
          << " mean_l1=" << sum_l1 / n;
      progress(msg.str());
    }
  }
  stamp(model, cfg, opt_g, "phase1", cfg.epochs_phase1);
  if (!cfg.out_dir.empty()) save_checkpoint(cfg.out_dir / "inpainting.ckpt", model);
  return model;
}

std::vector<SlicedPuzzle> build_phase2_puzzles(const std::vector<fs::path>& images, int piece_size,
                                               double erosion_pct) {
  std::vector<SlicedPuzzle> out;
  for (const auto& path : list_images(images)) {
    SlicedPuzzle p = slice_image(read_png(path).rgb, piece_size, path.stem().string());
    if (p.bundle.piece_count() < 3) continue;
    p.bundle = erode(p.bundle, erosion_pct);
    out.push_back(std::move(p));
  }
  return out;
}

ModelCheckpoint train_phase2(const TrainConfig& cfg, const ModelCheckpoint& warm, TrainingLog* log,
                             const ProgressFn& progress) {
  cfg.validate();
  if (warm.phase != ModelPhase::Inpainting) {
    throw InvalidInput("phase-2 training needs an inpainting-phase checkpoint to start from");
  }
  if (warm.erosion_width != cfg.erosion_width()) {
    throw InvalidInput("warm checkpoint was trained for erosion width " + std::to_string(warm.erosion_width) +
                       ", config asks for " + std::to_string(cfg.erosion_width()));
  }
  if (!(warm.arch == cfg.architecture())) throw InvalidInput("warm checkpoint architecture differs from config");
  if (cfg.phase2_corpus.empty()) throw InvalidInput("phase-2 corpus is empty");
  const std::vector<SlicedPuzzle> puzzles = build_phase2_puzzles(cfg.phase2_corpus, cfg.piece_size, cfg.erosion_pct);
  if (puzzles.empty()) throw InvalidInput("phase-2 corpus yields no puzzle with at least 3 pieces");
  write_config(cfg, "phase2_config.txt");

  ModelCheckpoint model = warm;
  model.phase = ModelPhase::Classifier;
  if (cfg.cold_start || cfg.no_inpainting) {
    Rng init(cfg.seed ^ 0xd1b54a32d192ed03ULL);
    model.discriminator = Discriminator(cfg.architecture());
    model.discriminator.initialize(init);
  }
  model.inpaint = !cfg.no_inpainting;
  model.info["ablation"] = cfg.no_inpainting ? "no-inpainting" : cfg.cold_start ? "fresh-discriminator" : "none";

  struct Example {
    int puzzle;
    Adjacency adj;
  };
  std::vector<Example> examples;
  for (int i = 0; i < static_cast<int>(puzzles.size()); ++i) {
    for (const Adjacency& a : true_adjacencies(puzzles[i].solution)) examples.push_back({i, a});
  }
  Rng rng(cfg.seed ^ 0x94d049bb133111ebULL);
  if (cfg.examples_phase2 > 0 && cfg.examples_phase2 < static_cast<int>(examples.size())) {
    seeded_shuffle(examples, rng);
    examples.resize(cfg.examples_phase2);
  }

  auto d_params = model.discriminator.parameters();
  nn::Adam opt(d_params, cfg.lr_phase2, cfg.adam_beta1, cfg.adam_beta2);

  TrainingLog local;
  TrainingLog& out = log ? *log : local;
  std::ofstream csv;
  if (!cfg.out_dir.empty()) {
    csv.open(cfg.out_dir / "phase2_loss.csv");
    csv << "# tool_version=" << tool_version() << " seed=" << cfg.seed << "\n";
    csv << "step,epoch,d_loss,p_positive,p_negative\n";
  }

  long step = 0;
  const double scale = 1.0 / cfg.batch_size;
  for (int epoch = 1; epoch <= cfg.epochs_phase2; ++epoch) {
    seeded_shuffle(examples, rng);
    double sum = 0;
    long positives = 0, negatives = 0;
    for (std::size_t begin = 0; begin < examples.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(examples.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      opt.zero_grad();
      std::vector<Phase2Step> rows;
      for (std::size_t i = begin; i < end; ++i) {
        const SlicedPuzzle& pz = puzzles[examples[i].puzzle];
        const LabeledPairs pair = make_phase2_pair_at(pz.bundle, pz.solution, examples[i].adj, rng);
        const Tensor pos = discriminator_view(model, pair.positive);
        const Tensor neg = discriminator_view(model, pair.negative);
        Phase2Step row;
        row.p_positive = model.discriminator.forward(pos).probability;
        row.p_negative = model.discriminator.forward(neg).probability;
        row.d_loss = accumulate_phase2_discriminator(model.discriminator, pos, neg, scale);
        check_finite(row.d_loss, "classification loss", step);
        ++positives;
        ++negatives;
        rows.push_back(row);
      }
      opt.step();
      for (Phase2Step& row : rows) {
        row.step = step++;
        row.epoch = epoch;
        sum += row.d_loss;
        if (csv.is_open()) {
          csv << row.step << ',' << row.epoch << ',' << fmt(row.d_loss) << ',' << fmt(row.p_positive) << ','
              << fmt(row.p_negative) << '\n';
        }
        out.phase2.push_back(row);
      }
    }
    out.epochs.push_back(EpochSummary{epoch, sum / static_cast<double>(examples.size()), 0, positives, negatives});
    stamp(model, cfg, opt, "phase2", epoch);
    if (!cfg.out_dir.empty() && cfg.epoch_checkpoints) save_checkpoint(cfg.out_dir / epoch_name("phase2", epoch), model);
    if (progress) {
      std::ostringstream msg;
      msg << "phase2 epoch " << epoch << "/" << cfg.epochs_phase2 << " mean_d_loss=" << sum / examples.size();
      progress(msg.str());
    }
  }
  stamp(model, cfg, opt, "phase2", cfg.epochs_phase2);
  if (!cfg.out_dir.empty()) save_checkpoint(cfg.out_dir / "classifier.ckpt", model);
  return model;
}

}  // namespace jigsaw
