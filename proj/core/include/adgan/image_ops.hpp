#pragma once

#include <cstdint>

#include "adgan/datamodel.hpp"
#include "adgan/tensor.hpp"

namespace adgan {

// Blur metric: variance of the 3x3 four-neighbour Laplacian response over the
// grayscale (unweighted channel mean) image. Borders wrap circularly.
double variance_of_laplacian(const ImageTensor& image);

// Bilinear resize of an 8-bit (3,H,W) image to target x target, half-pixel
// centers. Source must be square. Upscaling is allowed but ingestion only
// ever shrinks.
TensorT<std::uint8_t> resize_image(const TensorT<std::uint8_t>& raw, int target_size);

}  // namespace adgan
