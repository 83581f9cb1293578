#ifndef HALFFACE_STITCH_HPP
#define HALFFACE_STITCH_HPP

#include <span>

#include "halfface/axis.hpp"
#include "halfface/image.hpp"

namespace halfface {

/// Integer displacement applied to the image being placed.
struct Offset {
    int i = 0; // horizontal
    int j = 0; // vertical
    bool operator==(const Offset&) const = default;
};

struct StitchParams {
    int search_radius = 10;
    int band_width = 16;
    int blend_levels = 4;
    int feather_width = 8;
};

struct StitchOutcome {
    GrayImage image;
    Offset offset;
    double peak_ncc = 0.0;
    SymmetryAxis axis;
    bool mirrored_from_right = false; // true when the right half was the source
};

namespace detail {
/// Pearson correlation of two equal-length sample spans.
/// Throws zero_variance when either span is constant.
double pearson(std::span<const double> a, std::span<const double> b);
} // namespace detail

/// Normalized cross-correlation between the pixels of `w_img` over `region`
/// and the pixels of `f_img` over the same region displaced by `off`.
double ncc(const GrayImage& w_img, const GrayImage& f_img, Offset off, const Rect& region);

/// Exhaustive seam-band alignment search. The rightmost band of `left` is the
/// template; it is compared against the leading columns of `right`, whose
/// nominal position has its first band coinciding with the template. Returns
/// the argmax offset and its NCC. Ties break toward smallest |i|+|j|, then
/// smallest j, then smallest i.
std::pair<Offset, double> find_best_offset(const GrayImage& left, const GrayImage& right,
                                           const StitchParams& p);

/// Laplacian-pyramid blend of `right` placed adjacent to `left`, right's
/// top-left landing at (left.width + off.i, off.j). blend_levels == 1
/// degenerates to linear feathering over feather_width columns.
GrayImage multiband_blend(const GrayImage& left, const GrayImage& right, Offset off,
                          const StitchParams& p);

/// Full half-face completion: crop the visible half at the axis, mirror it,
/// align with the seam-band NCC search, and blend.
StitchOutcome stitch_face(const GrayImage& img, const SymmetryAxis& axis, const StitchParams& p);

} // namespace halfface

#endif
