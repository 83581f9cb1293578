#include "halfface/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace halfface {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::io_failure: return "io failure";
        case ErrorCode::missing_file: return "missing file";
        case ErrorCode::unsupported_format: return "unsupported format";
        case ErrorCode::corrupt_header: return "corrupt header";
        case ErrorCode::corrupt_payload: return "corrupt payload";
        case ErrorCode::out_of_bounds: return "out of bounds";
        case ErrorCode::bad_argument: return "bad argument";
        case ErrorCode::zero_variance: return "zero variance";
        case ErrorCode::geometry_mismatch: return "geometry mismatch";
        case ErrorCode::invariant_violation: return "invariant violation";
        case ErrorCode::version_mismatch: return "version mismatch";
        case ErrorCode::cascade_invalid: return "invalid cascade";
        case ErrorCode::no_convergence: return "no convergence";
        case ErrorCode::infeasible_split: return "infeasible split";
        case ErrorCode::empty_corpus: return "empty corpus";
    }
    return "unknown error";
}

GrayImage::GrayImage(int w, int h, double fill) : width(w), height(h) {
    if (w < 1 || h < 1)
        throw Error(ErrorCode::bad_argument, "image dimensions must be >= 1");
    data.assign(static_cast<size_t>(w) * h, fill);
}

void GrayImage::validate() const {
    if (width < 1 || height < 1)
        throw Error(ErrorCode::invariant_violation, "image dimensions must be >= 1");
    if (data.size() != static_cast<size_t>(width) * height)
        throw Error(ErrorCode::invariant_violation, "data length != width * height");
    for (double v : data)
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw Error(ErrorCode::invariant_violation, "sample outside [0, 1]");
}

GrayImage crop(const GrayImage& img, const Rect& r) {
    if (!r.fits_in(img))
        throw Error(ErrorCode::out_of_bounds, "crop rect outside image");
    GrayImage out(r.w, r.h);
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x)
            out.at(x, y) = img.at(r.x0 + x, r.y0 + y);
    return out;
}

GrayImage hflip(const GrayImage& img) {
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(x, y) = img.at(img.width - 1 - x, y);
    return out;
}

GrayImage photometric_normalize(const GrayImage& img) {
    const size_t n = img.data.size();
    const double mean = std::accumulate(img.data.begin(), img.data.end(), 0.0) / n;
    double var = 0.0;
    for (double v : img.data) var += (v - mean) * (v - mean);
    var /= n;
    if (var < 1e-18)
        return GrayImage(img.width, img.height, 0.5);

    // Standardizing then min-max remapping: the remap alone determines the
    // output, so the whole map is the affine stretch of [min, max] onto [0, 1].
    const auto [lo_it, hi_it] = std::minmax_element(img.data.begin(), img.data.end());
    const double lo = *lo_it, hi = *hi_it;
    GrayImage out(img.width, img.height);
    for (size_t i = 0; i < n; ++i)
        out.data[i] = std::clamp((img.data[i] - lo) / (hi - lo), 0.0, 1.0);
    return out;
}

} // namespace halfface
