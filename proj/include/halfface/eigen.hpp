#ifndef HALFFACE_EIGEN_HPP
#define HALFFACE_EIGEN_HPP

#include <string>
#include <vector>

#include "halfface/image.hpp"

namespace halfface {

enum class DistanceMetric { squared_euclidean, city_block };

struct GalleryEntry {
    std::vector<double> coeffs; // length k
    std::string label;
};

struct EigenModel {
    int width = 0;  // face geometry
    int height = 0;
    size_t d = 0;                        // width * height
    std::vector<double> mean;            // length d
    std::vector<std::vector<double>> basis; // k eigenfaces, each length d
    std::vector<double> eigenvalues;     // k values, descending, >= 0
    std::vector<GalleryEntry> gallery;   // N entries
    double threshold_sed = 0.0;          // known/unknown cutoffs, one per metric
    double threshold_cityblock = 0.0;

    size_t k() const { return basis.size(); }
    double threshold(DistanceMetric m) const {
        return m == DistanceMetric::squared_euclidean ? threshold_sed : threshold_cityblock;
    }

    /// Checks orthonormality, eigenvalue ordering and gallery shape.
    void validate() const;
};

struct RecognitionResult {
    std::string label; // "unknown" when past the threshold
    double distance = 0.0;
    DistanceMetric metric = DistanceMetric::squared_euclidean;
    double runner_up_distance = 0.0;
    std::string nearest_label; // nearest gallery label even when rejected
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Returns
/// eigenvalues (descending) and the matching eigenvectors as rows.
/// `m` is a dense symmetric n x n matrix in row-major order.
std::pair<std::vector<double>, std::vector<std::vector<double>>>
jacobi_eigensymmetric(std::vector<double> m, size_t n);

/// Snapshot-method PCA over same-geometry face images. k <= N - 1.
EigenModel train(const std::vector<GrayImage>& images, const std::vector<std::string>& labels,
                 size_t k);

std::vector<double> project(const EigenModel& model, const GrayImage& img);

/// mean + B * c, reshaped; not clamped to [0, 1].
GrayImage reconstruct(const EigenModel& model, const std::vector<double>& coeffs);

double gallery_distance(const std::vector<double>& a, const std::vector<double>& b,
                        DistanceMetric metric);

/// Recomputes both known/unknown cutoffs from the gallery: mean + 2 sd of
/// within-class distances, +inf when any class is a singleton.
void calibrate_thresholds(EigenModel& model);

RecognitionResult classify(const EigenModel& model, const GrayImage& img, DistanceMetric metric);

/// Binary model file: "EIGF", version u16, d/k/N u32, then mean, basis,
/// eigenvalues, gallery coefficients as little-endian f64, labels as
/// length-prefixed UTF-8, CRC32 trailer. Thresholds are recomputed from the
/// gallery on load.
void save_model(const EigenModel& model, const std::string& path);
EigenModel load_model(const std::string& path);

} // namespace halfface

#endif
