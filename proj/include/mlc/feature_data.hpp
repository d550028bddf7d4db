#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mlc {

// Input features for one sample: either a grayscale image with intensities
// in [0,1], or a flat feature vector. height == 0 means "flat vector".
struct FeatureData {
  std::vector<double> values;
  std::size_t height = 0;
  std::size_t width = 0;

  bool is_image() const { return height > 0; }
  std::size_t dim() const { return values.size(); }

  static FeatureData image(std::size_t h, std::size_t w, std::vector<double> pixels) {
    if (h < 1 || w < 1) throw std::invalid_argument("image dims must be >= 1x1");
    if (pixels.size() != h * w)
      throw std::invalid_argument("pixel count does not match image dims");
    FeatureData f;
    f.values = std::move(pixels);
    f.height = h;
    f.width = w;
    return f;
  }

  static FeatureData vector(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("feature vector must be non-empty");
    FeatureData f;
    f.values = std::move(v);
    return f;
  }

  // Column-reversed copy; identity for flat vectors is not defined here,
  // callers must check is_image() first.
  FeatureData hflip() const {
    if (!is_image()) throw std::invalid_argument("hflip requires an image");
    FeatureData out = *this;
    for (std::size_t r = 0; r < height; ++r)
      for (std::size_t c = 0; c < width; ++c)
        out.values[r * width + c] = values[r * width + (width - 1 - c)];
    return out;
  }
};

}  // namespace mlc
