#ifndef HALFFACE_IMAGE_HPP
#define HALFFACE_IMAGE_HPP

#include <cstddef>
#include <vector>

#include "halfface/error.hpp"

namespace halfface {

/// Row-major grayscale raster with samples in [0, 1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0);

    double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }

    size_t size() const { return data.size(); }

    bool same_geometry(const GrayImage& other) const {
        return width == other.width && height == other.height;
    }

    /// Throws invariant_violation unless dimensions, length and sample range hold.
    void validate() const;

    bool operator==(const GrayImage& other) const = default;
};

/// Axis-aligned pixel rectangle, origin at the top-left corner.
struct Rect {
    int x0 = 0;
    int y0 = 0;
    int w = 0;
    int h = 0;

    bool fits_in(const GrayImage& img) const {
        return x0 >= 0 && y0 >= 0 && w >= 1 && h >= 1 &&
               x0 + w <= img.width && y0 + h <= img.height;
    }

    bool operator==(const Rect& other) const = default;
};

GrayImage crop(const GrayImage& img, const Rect& r);

/// output(x, y) = img(width - 1 - x, y)
GrayImage hflip(const GrayImage& img);

/// Zero mean, unit variance, then min-max remapped back into [0, 1].
/// Constant images map to the constant 0.5 image.
GrayImage photometric_normalize(const GrayImage& img);

} // namespace halfface

#endif
