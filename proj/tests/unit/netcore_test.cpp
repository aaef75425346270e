#include <gtest/gtest.h>

#include <fstream>

#include "jigsaw/error.hpp"
#include "jigsaw/netcore.hpp"
#include "jigsaw/pairgen.hpp"
#include "test_support.hpp"

namespace jigsaw {
namespace {

using testing::random_tensor;
using testing::TempDir;

PairSample random_sample(Rng& rng, int s, int w) {
  PairSample p;
  p.input = random_tensor(3, s, 2 * s, rng);
  p.mask = Mask(s, 2 * s);
  for (int r = 0; r < s; ++r)
    for (int c = s - w; c < s + w; ++c) {
      p.mask.set(r, c, true);
      for (int ch = 0; ch < 3; ++ch) p.input.at(ch, r, c) = 0.0;
    }
  p.erosion_width = w;
  return p;
}

std::vector<double> flatten(std::vector<nn::Param> params) {
  std::vector<double> out;
  for (const nn::Param& p : params) out.insert(out.end(), p.value->values().begin(), p.value->values().end());
  return out;
}

TEST(Architecture, WidthsAndPatchGrid) {
  const Architecture a{64, 8};
  EXPECT_EQ(a.generator_widths(), (std::array<int, 6>{8, 16, 32, 64, 64, 64}));
  EXPECT_EQ(a.discriminator_widths(), (std::array<int, 3>{8, 16, 32}));
  EXPECT_EQ(a.patch_grid(), 6);
  EXPECT_NE(a.fingerprint(), (Architecture{64, 16}.fingerprint()));
  EXPECT_THROW((Architecture{48, 8}.validate()), InvalidInput);
  EXPECT_THROW((Architecture{64, 0}.validate()), InvalidInput);
}

TEST(Generator, EncoderReachesUnitHeight) {
  Rng rng(1);
  Generator g(Architecture{64, 2});
  g.initialize(rng);
  Generator::Trace trace;
  const Tensor out = g.raw_forward(random_tensor(3, 64, 128, rng), &trace);
  EXPECT_EQ(trace.enc_act[5].rows(), 1);
  EXPECT_EQ(trace.enc_act[5].cols(), 2);
  EXPECT_EQ(out.rows(), 64);
  EXPECT_EQ(out.cols(), 128);
  EXPECT_EQ(out.channels(), 3);
}

// Property: outside the mask the generated pair is the input, bit for bit;
// inside it lies in [0, 1].
TEST(Generator, CopyThroughProperty) {
  Rng rng(2);
  for (int trial = 0; trial < 12; ++trial) {
    Generator g(Architecture{64, 1 + uniform_index(rng, 3)});
    g.initialize(rng);
    const PairSample s = random_sample(rng, 64, uniform_index(rng, 12));
    const GeneratedPair gp = g.forward(s);
    for (int ch = 0; ch < 3; ++ch)
      for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 128; ++c) {
          const double v = gp.image.at(ch, r, c);
          if (s.mask.at(r, c)) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
          } else {
            EXPECT_EQ(v, s.input.at(ch, r, c));
          }
        }
    EXPECT_EQ(gp.band.size(), 3 * s.mask.count());
  }
}

TEST(Generator, RejectsWrongSize) {
  Generator g(Architecture{64, 2});
  Rng rng(3);
  g.initialize(rng);
  PairSample s = random_sample(rng, 64, 4);
  s.input = Tensor(3, 32, 64);
  s.mask = Mask(32, 64);
  EXPECT_THROW(g.forward(s), InvalidInput);
}

TEST(Generator, BandViewsFollowMask) {
  Rng rng(4);
  Generator g(Architecture{64, 1});
  g.initialize(rng);
  PairSample s = random_sample(rng, 64, 2);
  s.original = random_tensor(3, 64, 128, rng);
  const GeneratedPair gp = g.forward(s);
  ASSERT_EQ(gp.original_band.size(), gp.band.size());
  // First band entry is channel 0, row 0, column S - w.
  EXPECT_EQ(gp.original_band[0], s.original->at(0, 0, 62));
  EXPECT_EQ(gp.band[0], gp.image.at(0, 0, 62));
}

TEST(Discriminator, ProbabilityIsMeanOfPatchMap) {
  Rng rng(5);
  Discriminator d(Architecture{64, 2});
  d.initialize(rng);
  const DiscriminatorOutput out = d.forward(random_tensor(3, 64, 64, rng));
  EXPECT_EQ(out.patches.rows(), 6);
  EXPECT_EQ(out.patches.cols(), 6);
  double s = 0;
  for (double v : out.patches.values()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
    s += v;
  }
  EXPECT_NEAR(out.probability, s / 36.0, 1e-15);
  EXPECT_THROW(d.forward(Tensor(3, 64, 128)), InvalidInput);
}

TEST(Discriminator, InputGradientMatchesBackward) {
  Rng rng(6);
  Discriminator d(Architecture{64, 2});
  d.initialize(rng);
  Discriminator::Trace trace;
  d.forward(random_tensor(3, 64, 64, rng), &trace);
  const Tensor a = d.input_gradient(trace, 0.7);
  for (const nn::Param& p : d.parameters())
    for (double g : p.grad->values()) EXPECT_EQ(g, 0.0);
  const Tensor b = d.backward(trace, 0.7);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.values()[i], b.values()[i], 1e-14);
}

TEST(Initialization, SeededAndDistinct) {
  const ModelCheckpoint a = ModelCheckpoint::fresh(Architecture{64, 2}, 4, 11);
  ModelCheckpoint b = ModelCheckpoint::fresh(Architecture{64, 2}, 4, 11);
  ModelCheckpoint c = ModelCheckpoint::fresh(Architecture{64, 2}, 4, 12);
  ModelCheckpoint a2 = a;
  EXPECT_EQ(flatten(a2.generator.parameters()), flatten(b.generator.parameters()));
  EXPECT_NE(flatten(a2.generator.parameters()), flatten(c.generator.parameters()));
}

TEST(Checkpoint, RoundTripPreservesEverything) {
  TempDir dir;
  ModelCheckpoint m = ModelCheckpoint::fresh(Architecture{64, 2}, 4, 21);
  m.phase = ModelPhase::Classifier;
  m.inpaint = false;
  m.info["note"] = "hello";
  save_checkpoint(dir / "m.ckpt", m);
  ModelCheckpoint back = load_checkpoint(dir / "m.ckpt", Architecture{64, 2});
  EXPECT_EQ(back.phase, ModelPhase::Classifier);
  EXPECT_EQ(back.erosion_width, 4);
  EXPECT_FALSE(back.inpaint);
  EXPECT_EQ(back.info.at("note"), "hello");
  EXPECT_EQ(flatten(back.generator.parameters()), flatten(m.generator.parameters()));
  EXPECT_EQ(flatten(back.discriminator.parameters()), flatten(m.discriminator.parameters()));

  std::ifstream meta(dir / "m.ckpt.meta");
  const std::string text((std::istreambuf_iterator<char>(meta)), std::istreambuf_iterator<char>());
  EXPECT_NE(text.find("tool_version="), std::string::npos);
}

TEST(Checkpoint, CorruptionAndMismatchAreLoadErrors) {
  TempDir dir;
  ModelCheckpoint m = ModelCheckpoint::fresh(Architecture{64, 1}, 4, 22);
  save_checkpoint(dir / "m.ckpt", m);
  EXPECT_THROW(load_checkpoint(dir / "m.ckpt", Architecture{64, 2}), LoadError);

  {
    std::fstream f(dir / "m.ckpt", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(200);
    f.put('\x7f');
  }
  EXPECT_THROW(load_checkpoint(dir / "m.ckpt"), LoadError);

  save_checkpoint(dir / "t.ckpt", m);
  std::filesystem::resize_file(dir / "t.ckpt", std::filesystem::file_size(dir / "t.ckpt") / 2);
  EXPECT_THROW(load_checkpoint(dir / "t.ckpt"), LoadError);

  save_checkpoint(dir / "n.ckpt", m);
  std::filesystem::remove(dir / "n.ckpt.meta");
  EXPECT_THROW(load_checkpoint(dir / "n.ckpt"), LoadError);
  EXPECT_THROW(load_checkpoint(dir / "absent.ckpt"), LoadError);
}

}  // namespace
}  // namespace jigsaw
