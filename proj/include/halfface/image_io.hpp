#ifndef HALFFACE_IMAGE_IO_HPP
#define HALFFACE_IMAGE_IO_HPP

#include <string>

#include "halfface/image.hpp"

namespace halfface {

/// Loads a PGM (P5 or P2) or PNG (8-bit gray, or RGB reduced to luminance)
/// file. Samples are scaled to [0, 1].
GrayImage load_image(const std::string& path);

/// Writes binary P5 PGM, or PNG when the extension is .png. Quantizes with
/// round-half-up to 8-bit codes.
void save_image(const GrayImage& img, const std::string& path);

} // namespace halfface

#endif
