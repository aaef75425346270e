#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "jigsaw/tensor.hpp"

namespace jigsaw {

// A decoded raster: 3-channel color in [0,1] (k/255 for 8-bit sources) and an
// opacity mask taken from the alpha channel (all true if the file has none).
struct DecodedImage {
  Tensor rgb;
  Mask opaque;
};

DecodedImage read_png(const std::filesystem::path& path);

// Writes 8-bit RGB, or RGBA when `alpha` is given (true -> 255, false -> 0).
// `text` entries become PNG tEXt chunks.
void write_png(const std::filesystem::path& path, const Tensor& rgb, const Mask* alpha = nullptr,
               const std::map<std::string, std::string>& text = {});

}  // namespace jigsaw
