#include "halfface/quality.hpp"

#include "halfface/stitch.hpp"

namespace halfface {

namespace {
void check_geometry(const GrayImage& a, const GrayImage& b) {
    if (!a.same_geometry(b))
        throw Error(ErrorCode::geometry_mismatch, "images differ in size");
    if (a.size() == 0)
        throw Error(ErrorCode::bad_argument, "empty images");
}
} // namespace

double mse(const GrayImage& original, const GrayImage& stitched) {
    check_geometry(original, stitched);
    double acc = 0.0;
    for (size_t i = 0; i < original.size(); ++i) {
        const double d = (original.data[i] - stitched.data[i]) * 255.0;
        acc += d * d;
    }
    return acc / static_cast<double>(original.size());
}

double mean_signed_error(const GrayImage& original, const GrayImage& stitched) {
    check_geometry(original, stitched);
    double acc = 0.0;
    for (size_t i = 0; i < original.size(); ++i)
        acc += (original.data[i] - stitched.data[i]) * 255.0;
    return acc / static_cast<double>(original.size());
}

double cr(const GrayImage& original, const GrayImage& stitched) {
    check_geometry(original, stitched);
    return detail::pearson(original.data, stitched.data);
}

QualityReport quality_report(const GrayImage& original, const GrayImage& stitched) {
    return QualityReport{mse(original, stitched), cr(original, stitched)};
}

} // namespace halfface
