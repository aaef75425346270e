#include "jigsaw/netcore.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "jigsaw/error.hpp"
#include "jigsaw/version.hpp"

namespace jigsaw {

namespace {

constexpr std::string_view kLayoutTag =
    "G:unet6/conv4s2p1+lrelu0.2/deconv4s2p1+relu/skip-concat/sigmoid/copy-through;"
    "D:conv4s2p1+lrelu0.2x3/conv3s1p0/sigmoid/patch-mean";
constexpr char kCheckpointMagic[8] = {'J', 'G', 'C', 'K', 'P', 'T', '0', '1'};

double he_std(int fan_in, double slope) { return std::sqrt(2.0 / ((1.0 + slope * slope) * fan_in)); }

}  // namespace

std::array<int, kGeneratorLevels> Architecture::generator_widths() const {
  const int b = base_width;
  return {b, 2 * b, 4 * b, 8 * b, 8 * b, 8 * b};
}

std::array<int, kDiscriminatorLevels> Architecture::discriminator_widths() const {
  const int b = base_width;
  return {b, 2 * b, 4 * b};
}

std::string Architecture::descriptor() const {
  std::ostringstream os;
  os << kLayoutTag << ";S=" << piece_size << ";base=" << base_width;
  return os.str();
}

std::uint64_t Architecture::fingerprint() const { return fnv1a64(descriptor()); }

void Architecture::validate() const {
  if (piece_size <= 0 || piece_size % (1 << kGeneratorLevels) != 0) {
    throw InvalidInput("piece size must be a positive multiple of 64 for a 6-level generator");
  }
  if (base_width <= 0) throw InvalidInput("base width must be positive");
}

std::vector<double> masked_values(const Tensor& t, const Mask& mask) {
  std::vector<double> out;
  out.reserve(mask.count() * t.channels());
  for (int ch = 0; ch < t.channels(); ++ch) {
    for (int r = 0; r < t.rows(); ++r) {
      for (int c = 0; c < t.cols(); ++c) {
        if (mask.at(r, c)) out.push_back(t.at(ch, r, c));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- Generator

Generator::Generator(const Architecture& arch) : arch_(arch) {
  arch_.validate();
  const auto w = arch_.generator_widths();
  int in = 3;
  for (int i = 0; i < kGeneratorLevels; ++i) {
    enc_[i] = nn::Conv2d(in, w[i], 4, 2, 1);
    in = w[i];
  }
  // dec_[j] restores the resolution of encoder level 4-j; the last one
  // restores the input resolution and emits 3 channels.
  for (int j = 0; j < kGeneratorLevels; ++j) {
    const int from = j == 0 ? w[kGeneratorLevels - 1] : 2 * w[kGeneratorLevels - 1 - j];
    const int to = j == kGeneratorLevels - 1 ? 3 : w[kGeneratorLevels - 2 - j];
    dec_[j] = nn::ConvTranspose2d(from, to, 4, 2, 1);
  }
}

void Generator::initialize(Rng& rng) {
  int in = 3;
  for (auto& e : enc_) {
    e.init_normal(rng, he_std(in * 16, kLeakySlope));
    in = e.weight.channels();
  }
  for (int j = 0; j < kGeneratorLevels; ++j) {
    const int fan_in = dec_[j].weight.channels() * 4;  // k^2 / s^2 taps per output
    const bool last = j == kGeneratorLevels - 1;
    dec_[j].init_normal(rng, last ? std::sqrt(1.0 / fan_in) : he_std(fan_in, 0.0));
  }
}

Tensor Generator::raw_forward(const Tensor& input, Trace* trace) const {
  if (input.channels() != 3 || input.rows() != arch_.piece_size || input.cols() != 2 * arch_.piece_size) {
    throw InvalidInput("generator expects a 3 x " + std::to_string(arch_.piece_size) + " x " +
                       std::to_string(2 * arch_.piece_size) + " pair");
  }
  Trace local;
  Trace& t = trace ? *trace : local;
  t.input = input;
  const Tensor* x = &t.input;
  for (int i = 0; i < kGeneratorLevels; ++i) {
    t.enc_pre[i] = enc_[i].forward(*x);
    t.enc_act[i] = nn::leaky_relu(t.enc_pre[i], kLeakySlope);
    x = &t.enc_act[i];
  }
  t.dec_in[0] = t.enc_act[kGeneratorLevels - 1];
  for (int j = 0; j < kGeneratorLevels - 1; ++j) {
    t.dec_pre[j] = dec_[j].forward(t.dec_in[j]);
    t.dec_in[j + 1] = Tensor::concat_channels(nn::relu(t.dec_pre[j]), t.enc_act[kGeneratorLevels - 2 - j]);
  }
  t.out = nn::sigmoid(dec_[kGeneratorLevels - 1].forward(t.dec_in[kGeneratorLevels - 1]));
  return t.out;
}

GeneratedPair Generator::forward(const PairSample& sample, Trace* trace) const {
  if (sample.input.rows() % (1 << kGeneratorLevels) != 0) {
    throw InvalidInput("pair height must be divisible by 64");
  }
  Tensor raw = raw_forward(sample.input, trace);
  GeneratedPair out;
  out.image = sample.input;
  for (int ch = 0; ch < 3; ++ch) {
    for (int r = 0; r < raw.rows(); ++r) {
      for (int c = 0; c < raw.cols(); ++c) {
        if (sample.mask.at(r, c)) out.image.at(ch, r, c) = raw.at(ch, r, c);
      }
    }
  }
  out.band = masked_values(out.image, sample.mask);
  if (sample.original) out.original_band = masked_values(*sample.original, sample.mask);
  return out;
}

void Generator::backward(const Trace& t, const Mask& mask, const Tensor& d_image) {
  Tensor d_out = d_image;
  for (int ch = 0; ch < d_out.channels(); ++ch) {
    for (int r = 0; r < d_out.rows(); ++r) {
      for (int c = 0; c < d_out.cols(); ++c) {
        if (!mask.at(r, c)) d_out.at(ch, r, c) = 0.0;
      }
    }
  }
  std::array<Tensor, kGeneratorLevels> d_act;
  for (int i = 0; i < kGeneratorLevels; ++i) d_act[i] = Tensor(t.enc_act[i].channels(), t.enc_act[i].rows(), t.enc_act[i].cols());

  Tensor d_in = dec_[kGeneratorLevels - 1].backward(t.dec_in[kGeneratorLevels - 1], nn::sigmoid_backward(t.out, d_out));
  for (int j = kGeneratorLevels - 2; j >= 0; --j) {
    const int skip = kGeneratorLevels - 2 - j;
    auto [d_up, d_skip] = nn::split_channels(d_in, t.dec_pre[j].channels());
    auto& acc = d_act[skip].values();
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += d_skip.values()[k];
    d_in = dec_[j].backward(t.dec_in[j], nn::relu_backward(t.dec_pre[j], d_up));
  }
  {
    auto& acc = d_act[kGeneratorLevels - 1].values();
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += d_in.values()[k];
  }
  for (int i = kGeneratorLevels - 1; i >= 0; --i) {
    const Tensor d_pre = nn::leaky_relu_backward(t.enc_pre[i], d_act[i], kLeakySlope);
    const Tensor& x = i == 0 ? t.input : t.enc_act[i - 1];
    Tensor dx = enc_[i].backward(x, d_pre, i > 0);
    if (i > 0) {
      auto& acc = d_act[i - 1].values();
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += dx.values()[k];
    }
  }
}

std::vector<nn::Param> Generator::parameters() {
  std::vector<nn::Param> out;
  for (int i = 0; i < kGeneratorLevels; ++i) enc_[i].collect("gen.enc" + std::to_string(i), out);
  for (int j = 0; j < kGeneratorLevels; ++j) dec_[j].collect("gen.dec" + std::to_string(j), out);
  return out;
}

// ------------------------------------------------------------ Discriminator

double average_patches(const Tensor& patches) {
  if (patches.empty()) throw InvalidInput("empty patch map");
  return std::accumulate(patches.values().begin(), patches.values().end(), 0.0) / static_cast<double>(patches.size());
}

Discriminator::Discriminator(const Architecture& arch) : arch_(arch) {
  arch_.validate();
  const auto w = arch_.discriminator_widths();
  int in = 3;
  for (int i = 0; i < kDiscriminatorLevels; ++i) {
    enc_[i] = nn::Conv2d(in, w[i], 4, 2, 1);
    in = w[i];
  }
  head_ = nn::Conv2d(in, 1, 3, 1, 0);
}

void Discriminator::initialize(Rng& rng) {
  int in = 3;
  for (auto& e : enc_) {
    e.init_normal(rng, he_std(in * 16, kLeakySlope));
    in = e.weight.channels();
  }
  head_.init_normal(rng, std::sqrt(1.0 / (in * 9)));
}

DiscriminatorOutput Discriminator::forward(const Tensor& crop, Trace* trace) const {
  if (crop.channels() != 3 || crop.rows() != arch_.piece_size || crop.cols() != arch_.piece_size) {
    throw InvalidInput("discriminator expects a 3 x " + std::to_string(arch_.piece_size) + " x " +
                       std::to_string(arch_.piece_size) + " crop");
  }
  Trace local;
  Trace& t = trace ? *trace : local;
  t.input = crop;
  const Tensor* x = &t.input;
  for (int i = 0; i < kDiscriminatorLevels; ++i) {
    t.pre[i] = enc_[i].forward(*x);
    t.act[i] = nn::leaky_relu(t.pre[i], kLeakySlope);
    x = &t.act[i];
  }
  t.patches = nn::sigmoid(head_.forward(*x));
  return DiscriminatorOutput{average_patches(t.patches), t.patches};
}

Tensor Discriminator::backward(const Trace& t, double d_probability, bool need_input_grad) {
  Tensor d_patches(t.patches.channels(), t.patches.rows(), t.patches.cols(),
                   d_probability / static_cast<double>(t.patches.size()));
  Tensor d = head_.backward(t.act[kDiscriminatorLevels - 1], nn::sigmoid_backward(t.patches, d_patches));
  for (int i = kDiscriminatorLevels - 1; i >= 0; --i) {
    const Tensor d_pre = nn::leaky_relu_backward(t.pre[i], d, kLeakySlope);
    d = enc_[i].backward(i == 0 ? t.input : t.act[i - 1], d_pre, i > 0 || need_input_grad);
  }
  return d;
}

Tensor Discriminator::input_gradient(const Trace& t, double d_probability) const {
  Tensor d_patches(t.patches.channels(), t.patches.rows(), t.patches.cols(),
                   d_probability / static_cast<double>(t.patches.size()));
  Tensor d = head_.backward_data(t.act[kDiscriminatorLevels - 1], nn::sigmoid_backward(t.patches, d_patches));
  for (int i = kDiscriminatorLevels - 1; i >= 0; --i) {
    const Tensor d_pre = nn::leaky_relu_backward(t.pre[i], d, kLeakySlope);
    d = enc_[i].backward_data(i == 0 ? t.input : t.act[i - 1], d_pre);
  }
  return d;
}

std::vector<nn::Param> Discriminator::parameters() {
  std::vector<nn::Param> out;
  for (int i = 0; i < kDiscriminatorLevels; ++i) enc_[i].collect("disc.enc" + std::to_string(i), out);
  head_.collect("disc.head", out);
  return out;
}

// --------------------------------------------------------------- Checkpoint

std::string_view name(ModelPhase p) { return p == ModelPhase::Inpainting ? "inpainting" : "classifier"; }

ModelCheckpoint ModelCheckpoint::fresh(const Architecture& arch, int erosion_width, std::uint64_t seed) {
  ModelCheckpoint c;
  c.arch = arch;
  c.generator = Generator(arch);
  c.discriminator = Discriminator(arch);
  Rng rng(seed);
  c.generator.initialize(rng);
  c.discriminator.initialize(rng);
  c.erosion_width = erosion_width;
  c.info["init_seed"] = std::to_string(seed);
  return c;
}

namespace {

std::filesystem::path meta_path(const std::filesystem::path& p) { return p.string() + ".meta"; }

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw LoadError("truncated checkpoint " + path.string());
  return v;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, ModelCheckpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::vector<nn::Param> params = ckpt.generator.parameters();
  for (auto& p : ckpt.discriminator.parameters()) params.push_back(p);

  std::ostringstream payload;
  put(payload, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put(payload, static_cast<std::uint32_t>(p.name.size()));
    payload.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put(payload, static_cast<std::int32_t>(p.value->channels()));
    put(payload, static_cast<std::int32_t>(p.value->rows()));
    put(payload, static_cast<std::int32_t>(p.value->cols()));
    payload.write(reinterpret_cast<const char*>(p.value->data()),
                  static_cast<std::streamsize>(p.value->size() * sizeof(double)));
  }
  const std::string body = payload.str();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  put(out, static_cast<std::uint64_t>(body.size()));
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  put(out, fnv1a64(body));
  if (!out) throw InvalidInput("failed writing checkpoint " + path.string());

  std::ofstream meta(meta_path(path));
  meta << "format=jigsaw-checkpoint-v1\n";
  meta << "tool_version=" << tool_version() << "\n";
  meta << "architecture=" << ckpt.arch.descriptor() << "\n";
  meta << "architecture_hash=" << hex64(ckpt.arch.fingerprint()) << "\n";
  meta << "piece_size=" << ckpt.arch.piece_size << "\n";
  meta << "base_width=" << ckpt.arch.base_width << "\n";
  meta << "phase=" << name(ckpt.phase) << "\n";
  meta << "erosion_width=" << ckpt.erosion_width << "\n";
  meta << "inpaint=" << (ckpt.inpaint ? 1 : 0) << "\n";
  meta << "payload_hash=" << hex64(fnv1a64(body)) << "\n";
  for (const auto& [k, v] : ckpt.info) meta << "info." << k << "=" << v << "\n";
  if (!meta) throw InvalidInput("failed writing checkpoint metadata for " + path.string());
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream meta_in(meta_path(path));
  if (!meta_in) throw LoadError("missing checkpoint metadata " + meta_path(path).string());
  std::map<std::string, std::string> meta;
  for (std::string line; std::getline(meta_in, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  ModelCheckpoint ckpt;
  try {
    if (meta.at("format") != "jigsaw-checkpoint-v1") throw LoadError("unknown checkpoint format");
    ckpt.arch.piece_size = std::stoi(meta.at("piece_size"));
    ckpt.arch.base_width = std::stoi(meta.at("base_width"));
    ckpt.erosion_width = std::stoi(meta.at("erosion_width"));
    ckpt.inpaint = meta.at("inpaint") == "1";
    const std::string& phase = meta.at("phase");
    if (phase == "inpainting") ckpt.phase = ModelPhase::Inpainting;
    else if (phase == "classifier") ckpt.phase = ModelPhase::Classifier;
    else throw LoadError("unknown phase tag '" + phase + "'");
    if (meta.at("architecture") != ckpt.arch.descriptor() ||
        meta.at("architecture_hash") != hex64(ckpt.arch.fingerprint())) {
      throw LoadError("checkpoint architecture does not match this build: " + meta.at("architecture"));
    }
  } catch (const std::out_of_range&) {
    throw LoadError("incomplete checkpoint metadata for " + path.string());
  } catch (const std::invalid_argument&) {
    throw LoadError("malformed checkpoint metadata for " + path.string());
  }
  for (const auto& [k, v] : meta) {
    if (k.rfind("info.", 0) == 0) ckpt.info[k.substr(5)] = v;
  }
  try {
    ckpt.generator = Generator(ckpt.arch);
    ckpt.discriminator = Discriminator(ckpt.arch);
  } catch (const InvalidInput& e) {
    throw LoadError(std::string("invalid architecture in checkpoint: ") + e.what());
  }

  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint " + path.string());
  char magic[sizeof kCheckpointMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw LoadError("not a checkpoint file: " + path.string());
  }
  const auto body_size = get<std::uint64_t>(in, path);
  std::string body(body_size, '\0');
  if (!in.read(body.data(), static_cast<std::streamsize>(body_size))) throw LoadError("truncated checkpoint " + path.string());
  if (get<std::uint64_t>(in, path) != fnv1a64(body)) throw LoadError("checkpoint checksum mismatch " + path.string());

  std::istringstream is(body);
  std::vector<nn::Param> params = ckpt.generator.parameters();
  for (auto& p : ckpt.discriminator.parameters()) params.push_back(p);
  const auto count = get<std::uint32_t>(is, path);
  if (count != params.size()) throw LoadError("checkpoint tensor count mismatch in " + path.string());
  for (auto& p : params) {
    const auto len = get<std::uint32_t>(is, path);
    std::string nm(len, '\0');
    if (!is.read(nm.data(), len)) throw LoadError("truncated checkpoint " + path.string());
    const auto c = get<std::int32_t>(is, path);
    const auto r = get<std::int32_t>(is, path);
    const auto w = get<std::int32_t>(is, path);
    if (nm != p.name || c != p.value->channels() || r != p.value->rows() || w != p.value->cols()) {
      throw LoadError("checkpoint tensor '" + nm + "' does not match architecture slot '" + p.name + "'");
    }
    if (!is.read(reinterpret_cast<char*>(p.value->data()), static_cast<std::streamsize>(p.value->size() * sizeof(double)))) {
      throw LoadError("truncated checkpoint " + path.string());
    }
  }
  return ckpt;
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path, const Architecture& expected) {
  ModelCheckpoint c = load_checkpoint(path);
  if (!(c.arch == expected)) {
    throw LoadError("checkpoint architecture (" + c.arch.descriptor() + ") differs from expected (" +
                    expected.descriptor() + ")");
  }
  return c;
}

}  // namespace jigsaw
