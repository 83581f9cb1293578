#ifndef HALFFACE_HARNESS_HPP
#define HALFFACE_HARNESS_HPP

#include <string>
#include <utility>
#include <vector>

#include "halfface/eigen.hpp"
#include "halfface/image.hpp"
#include "halfface/stitch.hpp"

namespace halfface {

struct CorpusEntry {
    std::string person;
    std::string path;
};

struct Corpus {
    std::string root;
    std::vector<CorpusEntry> entries; // lexicographic by (person, path)
    int width = 0;
    int height = 0;

    size_t person_count() const;
};

enum class OcclusionMode { none, mask_right_half, mask_left_half };

struct ExperimentConfig {
    std::vector<size_t> k_values = {100, 150, 200, 250, 300};
    std::vector<DistanceMetric> metrics = {DistanceMetric::squared_euclidean,
                                           DistanceMetric::city_block};
    double train_fraction = 0.8; // used when train_count == 0
    size_t train_count = 0;      // exact per-person count when nonzero
    OcclusionMode occlusion = OcclusionMode::none;
    bool stitch_enabled = false;
    bool normalize = true;
    uint64_t seed = 42;
    StitchParams stitch_params;
};

struct SweepRow {
    size_t k = 0;
    DistanceMetric metric = DistanceMetric::squared_euclidean;
    size_t correct = 0;
    size_t total = 0;
    double rate = 0.0;
    double mean_mse = 0.0; // 0 when stitching is off
    double mean_cr = 0.0;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    ExperimentConfig config;
    double wall_seconds = 0.0;

    std::string to_csv() const;
    std::string to_json() const;
};

const char* to_string(DistanceMetric metric);
const char* to_string(OcclusionMode mode);
DistanceMetric metric_from_string(const std::string& name);
OcclusionMode occlusion_from_string(const std::string& name);

/// One subdirectory per person; person id = directory name. Deterministic
/// lexicographic enumeration, geometry validated against the first image.
Corpus ingest(const std::string& root);

/// Deterministic per-person split driven by the config seed.
std::pair<std::vector<CorpusEntry>, std::vector<CorpusEntry>>
split(const Corpus& corpus, const ExperimentConfig& cfg);

GrayImage occlude(const GrayImage& img, OcclusionMode mode);

/// The eigenface-count sweep: trains once per k on unoccluded originals,
/// then occludes, optionally stitches, normalizes and classifies every test
/// image under every configured metric.
SweepReport run_sweep(const Corpus& corpus, const ExperimentConfig& cfg);

/// Flat key/value TOML subset: booleans, integers, floats, strings, and
/// arrays of integers or strings.
ExperimentConfig load_config(const std::string& path);

} // namespace halfface

#endif
