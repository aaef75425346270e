#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "jigsaw/nn.hpp"
#include "jigsaw/pairgen.hpp"
#include "jigsaw/random.hpp"
#include "jigsaw/tensor.hpp"

namespace jigsaw {

inline constexpr int kGeneratorLevels = 6;
inline constexpr int kDiscriminatorLevels = 3;
inline constexpr double kLeakySlope = 0.2;

// Shape parameters of the networks. Level counts, kernels and activations are
// fixed; only the piece size and the channel base width vary.
struct Architecture {
  int piece_size = 64;
  int base_width = 64;

  // Encoder widths b, 2b, 4b, 8b, 8b, 8b (decoder mirrored).
  std::array<int, kGeneratorLevels> generator_widths() const;
  // b, 2b, 4b.
  std::array<int, kDiscriminatorLevels> discriminator_widths() const;
  // Side of the discriminator's patch map: S/8 - 2 (6 for S = 64).
  int patch_grid() const { return piece_size / 8 - 2; }

  // Canonical text form; its hash guards checkpoint loading.
  std::string descriptor() const;
  std::uint64_t fingerprint() const;
  void validate() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

// GI plus the masked-band views used by the L1 term.
struct GeneratedPair {
  Tensor image;                 // GI
  std::vector<double> band;     // GB: GI on the mask, (channel, row, col) order
  std::vector<double> original_band;  // OB, empty unless the sample has an original
};

// Values of t on the mask, channel-major.
std::vector<double> masked_values(const Tensor& t, const Mask& mask);

// Six-level encoder/decoder with skip connections between mirrored levels and
// no bottleneck. Known pixels are copied through from the input after the
// network runs, so GI differs from the input only inside the mask.
class Generator {
 public:
  Generator() = default;
  explicit Generator(const Architecture& arch);

  struct Trace {
    Tensor input;
    std::array<Tensor, kGeneratorLevels> enc_pre;    // conv outputs
    std::array<Tensor, kGeneratorLevels> enc_act;    // leaky-relu outputs
    std::array<Tensor, kGeneratorLevels> dec_in;     // decoder layer inputs
    std::array<Tensor, kGeneratorLevels - 1> dec_pre;
    Tensor out;                                      // sigmoid output (pre copy-through)
  };

  void initialize(Rng& rng);
  // Network output in [0,1] before copy-through.
  Tensor raw_forward(const Tensor& input, Trace* trace = nullptr) const;
  GeneratedPair forward(const PairSample& sample, Trace* trace = nullptr) const;
  // dL/dGI -> parameter gradients. Only masked positions reach the network.
  void backward(const Trace& trace, const Mask& mask, const Tensor& d_image);

  std::vector<nn::Param> parameters();
  const Architecture& architecture() const { return arch_; }

 private:
  Architecture arch_;
  std::array<nn::Conv2d, kGeneratorLevels> enc_;
  std::array<nn::ConvTranspose2d, kGeneratorLevels> dec_;
};

struct DiscriminatorOutput {
  double probability = 0.5;  // mean of the patch probabilities
  Tensor patches;            // 1 x P x P
};

// Mean of a patch-probability map.
double average_patches(const Tensor& patches);

// Three stride-2 conv levels followed by a 3x3 valid conv head that yields a
// P x P map of patch probabilities.
class Discriminator {
 public:
  Discriminator() = default;
  explicit Discriminator(const Architecture& arch);

  struct Trace {
    Tensor input;
    std::array<Tensor, kDiscriminatorLevels> pre;
    std::array<Tensor, kDiscriminatorLevels> act;
    Tensor patches;
  };

  void initialize(Rng& rng);
  DiscriminatorOutput forward(const Tensor& crop, Trace* trace = nullptr) const;
  // dL/dprobability -> parameter gradients; returns dL/dcrop when requested.
  Tensor backward(const Trace& trace, double d_probability, bool need_input_grad = true);
  // dL/dcrop without touching parameter gradients.
  Tensor input_gradient(const Trace& trace, double d_probability) const;

  std::vector<nn::Param> parameters();
  const Architecture& architecture() const { return arch_; }

 private:
  Architecture arch_;
  std::array<nn::Conv2d, kDiscriminatorLevels> enc_;
  nn::Conv2d head_;
};

enum class ModelPhase { Inpainting, Classifier };
std::string_view name(ModelPhase p);

struct ModelCheckpoint {
  Architecture arch;
  Generator generator;
  Discriminator discriminator;
  ModelPhase phase = ModelPhase::Inpainting;
  int erosion_width = 0;
  // False for the ablation that classifies raw gapped pairs without inpainting.
  bool inpaint = true;
  // Free-form training metadata (epochs, seeds, config hash, optimizer...).
  std::map<std::string, std::string> info;

  static ModelCheckpoint fresh(const Architecture& arch, int erosion_width, std::uint64_t seed);
};

// Writes `path` (binary tensors) and `path` + ".meta" (key=value text).
void save_checkpoint(const std::filesystem::path& path, ModelCheckpoint& ckpt);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);
// Like load_checkpoint, but also requires the stored architecture to equal `expected`.
ModelCheckpoint load_checkpoint(const std::filesystem::path& path, const Architecture& expected);

}  // namespace jigsaw
