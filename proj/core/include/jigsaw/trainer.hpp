#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "jigsaw/kv_config.hpp"
#include "jigsaw/netcore.hpp"
#include "jigsaw/pairgen.hpp"

namespace jigsaw {

// A loss went NaN or infinite.
class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(const std::string& what) : std::runtime_error(what) {}
};

struct TrainConfig {
  double lambda = 100.0;
  double lr_generator = 0.0002;
  double lr_discriminator_phase1 = 0.0001;
  double lr_phase2 = 0.0002;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  int epochs_phase1 = 48;
  int epochs_phase2 = 40;
  int batch_size = 1;
  std::uint64_t seed = 0;
  double erosion_pct = 0.07;
  int piece_size = 64;
  int base_width = 64;
  // Pairs drawn from the phase-1 corpus per epoch list.
  int examples_phase1 = 45000;
  // Positive adjacencies used per phase-2 epoch; 0 means all of them.
  int examples_phase2 = 0;
  bool erode_outer_frame = false;
  // Phase-2 ablations: a freshly initialised discriminator, and additionally
  // skipping the generator so raw gapped pairs are classified.
  bool cold_start = false;
  bool no_inpainting = false;
  bool epoch_checkpoints = true;
  std::vector<std::filesystem::path> phase1_corpus;
  std::vector<std::filesystem::path> phase2_corpus;
  std::filesystem::path out_dir;  // checkpoints, loss CSVs; empty = write nothing

  int erosion_width() const;
  Architecture architecture() const { return Architecture{piece_size, base_width}; }
  // Throws InvalidInput on non-positive rates, overlapping corpora and the like.
  void validate() const;

  KeyValueConfig to_kv() const;
  static TrainConfig from_kv(const KeyValueConfig& kv);
  std::uint64_t fingerprint() const;
};

// PNG files named directly or found (non-recursively) in the given directories, sorted.
std::vector<std::filesystem::path> list_images(const std::vector<std::filesystem::path>& roots);

struct Phase1Step {
  long step = 0;
  int epoch = 0;
  double d_loss = 0, g_adv = 0, g_l1 = 0, g_total = 0, p_real = 0, p_fake = 0;
};

struct Phase2Step {
  long step = 0;
  int epoch = 0;
  double d_loss = 0, p_positive = 0, p_negative = 0;
};

struct EpochSummary {
  int epoch = 0;
  double mean_loss = 0;     // d_loss for phase 2, g_total for phase 1
  double mean_l1 = 0;       // phase 1 only
  long positives = 0;       // phase 2 only
  long negatives = 0;
};

struct TrainingLog {
  std::vector<Phase1Step> phase1;
  std::vector<Phase2Step> phase2;
  std::vector<EpochSummary> epochs;
  // Mean L1 band error of the untrained generator over the phase-1 example list.
  double initial_l1 = 0;
};

using ProgressFn = std::function<void(const std::string&)>;

// Adversarial inpainting: per batch one discriminator step on the real/fake
// objective (generated images detached), then one generator step on the
// adversarial + L1 objective.
ModelCheckpoint train_phase1(const TrainConfig& cfg, TrainingLog* log = nullptr, const ProgressFn& progress = {});

// Neighbor classification: the generator is frozen, the discriminator keeps
// training from its phase-1 weights on one positive and one negative pair per
// iteration.
ModelCheckpoint train_phase2(const TrainConfig& cfg, const ModelCheckpoint& warm, TrainingLog* log = nullptr,
                             const ProgressFn& progress = {});

// Builds grid-aligned, eroded phase-2 bundles from corpus images.
std::vector<SlicedPuzzle> build_phase2_puzzles(const std::vector<std::filesystem::path>& images, int piece_size,
                                               double erosion_pct);

// ---- single-example objectives, exposed for gradient checking ----

// What the discriminator sees for a pair: the center crop of G(I), or of I
// itself when inpainting is disabled.
Tensor discriminator_view(const ModelCheckpoint& model, const PairSample& sample);

// Forward-only loss values.
double phase1_discriminator_objective(const Discriminator& d, const Tensor& real_crop, const Tensor& fake_crop);
double phase1_generator_objective(const Generator& g, const Discriminator& d, const PairSample& sample, double lambda);
double phase2_discriminator_objective(const Discriminator& d, const Tensor& positive_crop, const Tensor& negative_crop);

// Same objectives, accumulating scale * gradient into the parameter buffers.
// Return the loss value.
double accumulate_phase1_discriminator(Discriminator& d, const Tensor& real_crop, const Tensor& fake_crop,
                                       double scale = 1.0);
struct GeneratorLossParts {
  double adversarial = 0, l1 = 0, total = 0, p_fake = 0;
};
// Leaves discriminator gradients untouched.
GeneratorLossParts accumulate_phase1_generator(Generator& g, const Discriminator& d, const PairSample& sample,
                                               double lambda, double scale = 1.0);
double accumulate_phase2_discriminator(Discriminator& d, const Tensor& positive_crop, const Tensor& negative_crop,
                                       double scale = 1.0);

}  // namespace jigsaw
