#pragma once

#include <cstdint>
#include <string>

#include "adgan/tensor.hpp"

namespace adgan {

// 8-bit RGB PNG codec. Grayscale and paletted inputs are expanded to RGB;
// alpha is stripped. Throws IoError on unreadable or malformed files.
TensorT<std::uint8_t> read_png_rgb(const std::string& path);
void write_png_rgb(const std::string& path, const TensorT<std::uint8_t>& rgb);

}  // namespace adgan
