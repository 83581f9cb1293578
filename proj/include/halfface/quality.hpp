#ifndef HALFFACE_QUALITY_HPP
#define HALFFACE_QUALITY_HPP

#include "halfface/image.hpp"

namespace halfface {

struct QualityReport {
    double mse = 0.0; // on the 8-bit scale
    double cr = 0.0;
};

/// Mean squared pixel error on the 8-bit scale (values scaled by 255 before
/// differencing, to match conventional reporting).
double mse(const GrayImage& original, const GrayImage& stitched);

/// The literal unsquared mean difference, kept for fidelity with reports
/// that omit the square. Also on the 8-bit scale.
double mean_signed_error(const GrayImage& original, const GrayImage& stitched);

/// Pearson correlation over all pixels. Scale-free.
double cr(const GrayImage& original, const GrayImage& stitched);

QualityReport quality_report(const GrayImage& original, const GrayImage& stitched);

} // namespace halfface

#endif
