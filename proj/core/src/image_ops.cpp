#include "adgan/image_ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "adgan/error.hpp"

namespace adgan {

double variance_of_laplacian(const ImageTensor& image) {
  const Tensor& px = image.pixels;
  if (px.rank() != 3 || px.dim(0) != 3) throw ShapeError("variance_of_laplacian: bad image");
  const int h = px.dim(1), w = px.dim(2);

  std::vector<double> gray(static_cast<std::size_t>(h) * w);
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (std::int64_t i = 0; i < plane; ++i)
    gray[static_cast<std::size_t>(i)] =
        (static_cast<double>(px[i]) + px[plane + i] + px[2 * plane + i]) / 3.0;

  // Circular boundary: the response of a cyclically shifted image is the
  // shifted response, so the variance is translation invariant.
  auto at = [&](int y, int x) -> double {
    y = (y + h) % h;
    x = (x + w) % w;
    return gray[static_cast<std::size_t>(y) * w + x];
  };

  // Kernel (0,1,0; 1,-4,1; 0,1,0).
  double sum = 0.0, sumsq = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double lap = at(y - 1, x) + at(y + 1, x) + at(y, x - 1) + at(y, x + 1) - 4.0 * at(y, x);
      sum += lap;
      sumsq += lap * lap;
    }
  }
  const double n = static_cast<double>(h) * w;
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  return var > 0.0 ? var : 0.0;
}

TensorT<std::uint8_t> resize_image(const TensorT<std::uint8_t>& raw, int target_size) {
  if (raw.rank() != 3 || raw.dim(0) != 3) throw ShapeError("resize_image: expected (3,H,W)");
  if (raw.dim(1) != raw.dim(2))
    throw ConfigError("resize_image: source must be square, got " + shape_str(raw.shape));
  if (target_size <= 0) throw ConfigError("resize_image: target size must be positive");
  const int src = raw.dim(1);
  if (src == target_size) return raw;

  TensorT<std::uint8_t> out({3, target_size, target_size});
  const double ratio = static_cast<double>(src) / target_size;
  for (int c = 0; c < 3; ++c) {
    const std::uint8_t* sp = raw.ptr() + static_cast<std::int64_t>(c) * src * src;
    std::uint8_t* dp = out.ptr() + static_cast<std::int64_t>(c) * target_size * target_size;
    for (int y = 0; y < target_size; ++y) {
      // Half-pixel-center sampling.
      const double sy = (y + 0.5) * ratio - 0.5;
      const int y0 = static_cast<int>(std::floor(sy));
      const double fy = sy - y0;
      const int y0c = std::clamp(y0, 0, src - 1);
      const int y1c = std::clamp(y0 + 1, 0, src - 1);
      for (int x = 0; x < target_size; ++x) {
        const double sx = (x + 0.5) * ratio - 0.5;
        const int x0 = static_cast<int>(std::floor(sx));
        const double fx = sx - x0;
        const int x0c = std::clamp(x0, 0, src - 1);
        const int x1c = std::clamp(x0 + 1, 0, src - 1);
        const double v = (1 - fy) * ((1 - fx) * sp[y0c * src + x0c] + fx * sp[y0c * src + x1c]) +
                         fy * ((1 - fx) * sp[y1c * src + x0c] + fx * sp[y1c * src + x1c]);
        dp[y * target_size + x] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

}  // namespace adgan
