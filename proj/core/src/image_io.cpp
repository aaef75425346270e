#include "jigsaw/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "jigsaw/error.hpp"

namespace jigsaw {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
  if (buf) *buf = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

DecodedImage read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw LoadError("cannot open image " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw LoadError("not a PNG file: " + path.string());
  }

  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw LoadError("libpng initialisation failed");
  }

  std::vector<png_byte> pixels;
  std::vector<png_bytep> row_ptrs;
  png_uint_32 width = 0, height = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw LoadError("corrupt PNG " + path.string() + ": " + err);
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_set_add_alpha(png, 0xFF, PNG_FILLER_AFTER);
  png_read_update_info(png, info);

  pixels.resize(static_cast<std::size_t>(width) * height * 4);
  row_ptrs.resize(height);
  for (png_uint_32 r = 0; r < height; ++r) row_ptrs[r] = pixels.data() + static_cast<std::size_t>(r) * width * 4;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  DecodedImage out{Tensor(3, static_cast<int>(height), static_cast<int>(width)),
                   Mask(static_cast<int>(height), static_cast<int>(width), true)};
  for (int r = 0; r < static_cast<int>(height); ++r) {
    for (int c = 0; c < static_cast<int>(width); ++c) {
      const png_byte* px = row_ptrs[r] + static_cast<std::size_t>(c) * 4;
      for (int ch = 0; ch < 3; ++ch) out.rgb.at(ch, r, c) = px[ch] / 255.0;
      out.opaque.set(r, c, px[3] >= 128);
    }
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Tensor& rgb, const Mask* alpha,
               const std::map<std::string, std::string>& text) {
  if (rgb.channels() != 3) throw InvalidInput("write_png expects a 3-channel raster");
  if (alpha && (alpha->rows() != rgb.rows() || alpha->cols() != rgb.cols())) {
    throw InvalidInput("write_png: alpha mask size mismatch");
  }
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw InvalidInput("cannot write image " + path.string());

  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw InternalError("libpng initialisation failed");
  }

  const int channels = alpha ? 4 : 3;
  const auto width = static_cast<std::size_t>(rgb.cols());
  std::vector<png_byte> pixels(width * rgb.rows() * channels);
  std::vector<png_bytep> row_ptrs(rgb.rows());
  for (int r = 0; r < rgb.rows(); ++r) {
    row_ptrs[r] = pixels.data() + static_cast<std::size_t>(r) * width * channels;
    for (int c = 0; c < rgb.cols(); ++c) {
      png_byte* px = row_ptrs[r] + static_cast<std::size_t>(c) * channels;
      for (int ch = 0; ch < 3; ++ch) px[ch] = quantize(rgb.at(ch, r, c));
      if (alpha) px[3] = alpha->at(r, c) ? 255 : 0;
    }
  }

  std::vector<png_text> chunks;
  chunks.reserve(text.size());
  for (const auto& [key, value] : text) {
    png_text t{};
    t.compression = PNG_TEXT_COMPRESSION_NONE;
    t.key = const_cast<char*>(key.c_str());
    t.text = const_cast<char*>(value.c_str());
    t.text_length = value.size();
    chunks.push_back(t);
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw InternalError("PNG encoding failed for " + path.string() + ": " + err);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(rgb.cols()), static_cast<png_uint_32>(rgb.rows()), 8,
               alpha ? PNG_COLOR_TYPE_RGBA : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (!chunks.empty()) png_set_text(png, info, chunks.data(), static_cast<int>(chunks.size()));
  png_write_info(png, info);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace jigsaw
