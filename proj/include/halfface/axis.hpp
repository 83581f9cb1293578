#ifndef HALFFACE_AXIS_HPP
#define HALFFACE_AXIS_HPP

#include <optional>
#include <string>
#include <vector>

#include "halfface/image.hpp"

namespace halfface {

struct BoundingBox {
    Rect rect;
    double score = 0.0;
};

enum class AxisMethod { cascade, mirror_search };

struct SymmetryAxis {
    double column = 0.0;
    AxisMethod method = AxisMethod::mirror_search;
    double confidence = 0.0;
};

/// One weighted rectangle of a Haar-like feature, in base-window coordinates.
struct FeatureRect {
    Rect rect;
    double weight = 0.0;
};

/// Decision stump over a single Haar feature.
struct WeakClassifier {
    std::vector<FeatureRect> rects;
    double threshold = 0.0; // on the area- and variance-normalized feature value
    double left_val = 0.0;
    double right_val = 0.0;
};

struct CascadeStage {
    double threshold = 0.0;
    std::vector<WeakClassifier> weak;
};

struct CascadeModel {
    int window_w = 0;
    int window_h = 0;
    std::vector<CascadeStage> stages;

    void validate() const;
};

/// Summed-area table: sum(x, y) over the inclusive rectangle [0,x]x[0,y].
class IntegralImage {
public:
    explicit IntegralImage(const GrayImage& img);

    double at(int x, int y) const { return table_[static_cast<size_t>(y + 1) * (w_ + 1) + (x + 1)]; }
    double rect_sum(const Rect& r) const;
    int width() const { return w_; }
    int height() const { return h_; }

private:
    int w_, h_;
    std::vector<double> table_; // (w+1) x (h+1), zero row/column border
};

/// Parses a legacy-format Haar cascade XML file (stump trees only).
CascadeModel load_cascade(const std::string& path);

std::optional<BoundingBox> detect_nose(const GrayImage& img, const CascadeModel& model,
                                       double scale_step = 1.1, int min_neighbors = 3);

/// Finds the column c in [c_min, c_max] maximizing the NCC between the band
/// left of c and the horizontally flipped band right of c. Band width is
/// min(c, width - 1 - c, 40). Smallest column wins ties.
SymmetryAxis mirror_search_axis(const GrayImage& img, int c_min, int c_max);

/// Default search range [0.25 * width, 0.75 * width].
SymmetryAxis mirror_search_axis(const GrayImage& img);

SymmetryAxis axis_from_nose(const BoundingBox& bb);

} // namespace halfface

#endif
