#include "halfface/harness.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "halfface/axis.hpp"
#include "halfface/image_io.hpp"
#include "halfface/parallel.hpp"
#include "halfface/quality.hpp"

namespace fs = std::filesystem;

namespace halfface {

size_t Corpus::person_count() const {
    size_t count = 0;
    for (size_t i = 0; i < entries.size(); ++i)
        if (i == 0 || entries[i].person != entries[i - 1].person) ++count;
    return count;
}

const char* to_string(DistanceMetric metric) {
    return metric == DistanceMetric::squared_euclidean ? "squared_euclidean" : "city_block";
}

const char* to_string(OcclusionMode mode) {
    switch (mode) {
        case OcclusionMode::none: return "none";
        case OcclusionMode::mask_right_half: return "mask_right_half";
        case OcclusionMode::mask_left_half: return "mask_left_half";
    }
    return "none";
}

DistanceMetric metric_from_string(const std::string& name) {
    if (name == "sed" || name == "squared_euclidean") return DistanceMetric::squared_euclidean;
    if (name == "cityblock" || name == "city_block") return DistanceMetric::city_block;
    throw Error(ErrorCode::bad_argument, "unknown metric '" + name + "'");
}

OcclusionMode occlusion_from_string(const std::string& name) {
    if (name == "none") return OcclusionMode::none;
    if (name == "mask_right_half") return OcclusionMode::mask_right_half;
    if (name == "mask_left_half") return OcclusionMode::mask_left_half;
    throw Error(ErrorCode::bad_argument, "unknown occlusion mode '" + name + "'");
}

// ---------------------------------------------------------------------------
// Corpus

namespace {

bool supported_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".pgm" || ext == ".png";
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

Corpus ingest(const std::string& root) {
    if (!fs::is_directory(root))
        throw Error(ErrorCode::missing_file, root + " is not a directory");

    std::vector<std::string> persons;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) persons.push_back(entry.path().filename().string());
    std::sort(persons.begin(), persons.end());

    Corpus corpus;
    corpus.root = root;
    for (const auto& person : persons) {
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(fs::path(root) / person))
            if (entry.is_regular_file() && supported_extension(entry.path()))
                files.push_back(entry.path().string());
        std::sort(files.begin(), files.end());
        for (const auto& file : files) corpus.entries.push_back({person, file});
    }
    if (corpus.entries.empty())
        throw Error(ErrorCode::empty_corpus, "no images under " + root);

    for (const auto& entry : corpus.entries) {
        const GrayImage img = load_image(entry.path); // throws on unreadable files
        if (corpus.width == 0) {
            corpus.width = img.width;
            corpus.height = img.height;
        } else if (img.width != corpus.width || img.height != corpus.height) {
            throw Error(ErrorCode::geometry_mismatch,
                        entry.path + " does not match corpus geometry");
        }
    }
    return corpus;
}

std::pair<std::vector<CorpusEntry>, std::vector<CorpusEntry>>
split(const Corpus& corpus, const ExperimentConfig& cfg) {
    std::map<std::string, std::vector<CorpusEntry>> by_person;
    for (const auto& entry : corpus.entries) by_person[entry.person].push_back(entry);

    std::vector<CorpusEntry> train_set, test_set;
    for (auto& [person, entries] : by_person) {
        const size_t n = entries.size();
        size_t n_train;
        if (cfg.train_count > 0) {
            if (cfg.train_count > n - 1)
                throw Error(ErrorCode::infeasible_split,
                            "person '" + person + "' has only " + std::to_string(n) + " images");
            n_train = cfg.train_count;
        } else {
            if (n < 2)
                throw Error(ErrorCode::infeasible_split,
                            "person '" + person + "' has fewer than 2 images");
            n_train = std::clamp<size_t>(
                static_cast<size_t>(std::floor(cfg.train_fraction * static_cast<double>(n))),
                1, n - 1);
        }

        // Fisher-Yates with an explicit engine so the split is identical
        // across platforms and standard libraries.
        std::mt19937_64 rng(cfg.seed ^ fnv1a(person));
        for (size_t i = n - 1; i > 0; --i) {
            const size_t j = static_cast<size_t>(rng() % (i + 1));
            std::swap(entries[i], entries[j]);
        }
        for (size_t i = 0; i < n; ++i)
            (i < n_train ? train_set : test_set).push_back(entries[i]);
    }
    return {std::move(train_set), std::move(test_set)};
}

GrayImage occlude(const GrayImage& img, OcclusionMode mode) {
    if (mode == OcclusionMode::none) return img;
    GrayImage out = img;
    const int half = img.width / 2;
    if (mode == OcclusionMode::mask_right_half) {
        for (int y = 0; y < img.height; ++y)
            for (int x = half; x < img.width; ++x) out.at(x, y) = 0.0;
    } else {
        const int boundary = img.width - half; // mirror of the right mask
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < boundary; ++x) out.at(x, y) = 0.0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sweep

namespace {

// Left-top aligned fit; overshoot is cropped, undershoot edge-replicated.
GrayImage fit_to(const GrayImage& img, int w, int h) {
    if (img.width == w && img.height == h) return img;
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(x, y) = img.at(std::min(x, img.width - 1), std::min(y, img.height - 1));
    return out;
}

struct ProbeOutcome {
    std::vector<bool> correct; // one per metric
    double mse_value = 0.0;
    double cr_value = 0.0;
    bool stitched = false;
    bool failed = false;
    std::string error;
};

} // namespace

SweepReport run_sweep(const Corpus& corpus, const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.k_values.empty() || cfg.metrics.empty())
        throw Error(ErrorCode::bad_argument, "empty k_values or metrics");

    auto [train_entries, test_entries] = split(corpus, cfg);
    const size_t k_max = *std::max_element(cfg.k_values.begin(), cfg.k_values.end());
    if (k_max > train_entries.size() - 1)
        throw Error(ErrorCode::bad_argument, "max k exceeds |train| - 1");

    std::vector<GrayImage> train_images;
    std::vector<std::string> train_labels;
    train_images.reserve(train_entries.size());
    for (const auto& entry : train_entries) {
        GrayImage img = load_image(entry.path);
        train_images.push_back(cfg.normalize ? photometric_normalize(img) : std::move(img));
        train_labels.push_back(entry.person);
    }

    std::vector<GrayImage> test_images;
    test_images.reserve(test_entries.size());
    for (const auto& entry : test_entries) test_images.push_back(load_image(entry.path));

    // One snapshot decomposition covers every k; smaller models are prefixes.
    const EigenModel full = train(train_images, train_labels, k_max);
    std::vector<std::vector<double>> full_coeffs;
    full_coeffs.reserve(full.gallery.size());
    for (const auto& entry : full.gallery) full_coeffs.push_back(entry.coeffs);

    // Prepare each probe once: occlusion, optional stitch, normalization.
    std::vector<GrayImage> probes(test_entries.size());
    std::vector<ProbeOutcome> outcomes(test_entries.size());
    parallel_for(test_entries.size(), [&](size_t idx) {
        ProbeOutcome& outcome = outcomes[idx];
        const GrayImage& original = test_images[idx];
        GrayImage probe = occlude(original, cfg.occlusion);
        if (cfg.stitch_enabled) {
            try {
                SymmetryAxis axis;
                switch (cfg.occlusion) {
                    case OcclusionMode::mask_right_half:
                        axis = SymmetryAxis{static_cast<double>(original.width / 2),
                                            AxisMethod::mirror_search, 1.0};
                        break;
                    case OcclusionMode::mask_left_half:
                        axis = SymmetryAxis{
                            static_cast<double>(original.width - original.width / 2),
                            AxisMethod::mirror_search, 1.0};
                        break;
                    case OcclusionMode::none:
                        axis = mirror_search_axis(probe);
                        break;
                }
                const StitchOutcome stitched = stitch_face(probe, axis, cfg.stitch_params);
                probe = fit_to(stitched.image, original.width, original.height);
                outcome.stitched = true;
                outcome.mse_value = mse(original, probe);
                outcome.cr_value = cr(original, probe);
            } catch (const Error& e) {
                outcome.failed = true;
                outcome.error = e.what();
            }
        }
        probes[idx] = cfg.normalize ? photometric_normalize(probe) : std::move(probe);
    });

    SweepReport report;
    report.config = cfg;
    for (size_t k : cfg.k_values) {
        EigenModel model;
        model.width = full.width;
        model.height = full.height;
        model.d = full.d;
        model.mean = full.mean;
        model.basis.assign(full.basis.begin(), full.basis.begin() + static_cast<long>(k));
        model.eigenvalues.assign(full.eigenvalues.begin(),
                                 full.eigenvalues.begin() + static_cast<long>(k));
        for (size_t i = 0; i < full.gallery.size(); ++i) {
            GalleryEntry entry;
            entry.label = full.gallery[i].label;
            entry.coeffs.assign(full_coeffs[i].begin(),
                                full_coeffs[i].begin() + static_cast<long>(k));
            model.gallery.push_back(std::move(entry));
        }
        calibrate_thresholds(model);

        std::vector<std::vector<bool>> per_probe(test_entries.size());
        parallel_for(test_entries.size(), [&](size_t idx) {
            auto& verdicts = per_probe[idx];
            verdicts.assign(cfg.metrics.size(), false);
            if (outcomes[idx].failed) return; // stitch failure counts as a miss
            for (size_t m = 0; m < cfg.metrics.size(); ++m) {
                const RecognitionResult result = classify(model, probes[idx], cfg.metrics[m]);
                verdicts[m] = result.label == test_entries[idx].person;
            }
        });

        for (size_t m = 0; m < cfg.metrics.size(); ++m) {
            SweepRow row;
            row.k = k;
            row.metric = cfg.metrics[m];
            row.total = test_entries.size();
            for (size_t idx = 0; idx < test_entries.size(); ++idx)
                if (per_probe[idx][m]) ++row.correct;
            row.rate = row.total ? static_cast<double>(row.correct) / row.total : 0.0;
            if (cfg.stitch_enabled) {
                size_t stitched_count = 0;
                for (const auto& outcome : outcomes) {
                    if (!outcome.stitched) continue;
                    row.mean_mse += outcome.mse_value;
                    row.mean_cr += outcome.cr_value;
                    ++stitched_count;
                }
                if (stitched_count) {
                    row.mean_mse /= static_cast<double>(stitched_count);
                    row.mean_cr /= static_cast<double>(stitched_count);
                }
            }
            report.rows.push_back(row);
        }
    }

    for (const auto& outcome : outcomes)
        if (outcome.failed)
            std::cerr << "halfface: stitch failed for a probe: " << outcome.error << "\n";

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// ---------------------------------------------------------------------------
// Report emission

namespace {
std::string format_double(double v) {
    std::ostringstream out;
    out.imbue(std::locale::classic());
    out.precision(10);
    out << v;
    return out.str();
}
} // namespace

std::string SweepReport::to_csv() const {
    std::string out = "k,metric,correct,total,rate,mean_mse,mean_cr\n";
    for (const auto& row : rows) {
        out += std::to_string(row.k) + "," + to_string(row.metric) + "," +
               std::to_string(row.correct) + "," + std::to_string(row.total) + "," +
               format_double(row.rate) + "," + format_double(row.mean_mse) + "," +
               format_double(row.mean_cr) + "\n";
    }
    return out;
}

std::string SweepReport::to_json() const {
    nlohmann::json j;
    j["config"] = {
        {"k_values", config.k_values},
        {"metrics", [&] {
             std::vector<std::string> names;
             for (auto m : config.metrics) names.emplace_back(to_string(m));
             return names;
         }()},
        {"train_fraction", config.train_fraction},
        {"train_count", config.train_count},
        {"occlusion", to_string(config.occlusion)},
        {"stitch", config.stitch_enabled},
        {"normalize", config.normalize},
        {"seed", config.seed},
    };
    j["wall_seconds"] = wall_seconds;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : rows) {
        j["rows"].push_back({
            {"k", row.k},
            {"metric", to_string(row.metric)},
            {"correct", row.correct},
            {"total", row.total},
            {"rate", row.rate},
            {"mean_mse", row.mean_mse},
            {"mean_cr", row.mean_cr},
        });
    }
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Config file (flat TOML subset)

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// strips a trailing comment that is outside of quotes
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

std::vector<std::string> split_array(const std::string& body) {
    std::vector<std::string> items;
    std::string current;
    bool in_string = false;
    for (char c : body) {
        if (c == '"') in_string = !in_string;
        if (c == ',' && !in_string) {
            items.push_back(trim(current));
            current.clear();
        } else {
            current += c;
        }
    }
    if (!trim(current).empty()) items.push_back(trim(current));
    return items;
}

std::string unquote(const std::string& s, const std::string& key) {
    if (s.size() < 2 || s.front() != '"' || s.back() != '"')
        throw Error(ErrorCode::bad_argument, "config key '" + key + "': expected a string");
    return s.substr(1, s.size() - 2);
}

} // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::missing_file, path);

    ExperimentConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::bad_argument,
                        path + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "k_values") {
            if (value.size() < 2 || value.front() != '[' || value.back() != ']')
                throw Error(ErrorCode::bad_argument, "k_values must be an array");
            cfg.k_values.clear();
            for (const auto& item : split_array(value.substr(1, value.size() - 2)))
                cfg.k_values.push_back(static_cast<size_t>(std::stoull(item)));
        } else if (key == "metrics") {
            if (value.size() < 2 || value.front() != '[' || value.back() != ']')
                throw Error(ErrorCode::bad_argument, "metrics must be an array");
            cfg.metrics.clear();
            for (const auto& item : split_array(value.substr(1, value.size() - 2)))
                cfg.metrics.push_back(metric_from_string(unquote(item, key)));
        } else if (key == "train_fraction") {
            cfg.train_fraction = std::stod(value);
        } else if (key == "train_count") {
            cfg.train_count = static_cast<size_t>(std::stoull(value));
        } else if (key == "occlusion") {
            cfg.occlusion = occlusion_from_string(unquote(value, key));
        } else if (key == "stitch") {
            cfg.stitch_enabled = value == "true";
        } else if (key == "normalize") {
            cfg.normalize = value == "true";
        } else if (key == "seed") {
            cfg.seed = std::stoull(value);
        } else if (key == "search_radius") {
            cfg.stitch_params.search_radius = std::stoi(value);
        } else if (key == "band_width") {
            cfg.stitch_params.band_width = std::stoi(value);
        } else if (key == "blend_levels") {
            cfg.stitch_params.blend_levels = std::stoi(value);
        } else {
            throw Error(ErrorCode::bad_argument, "unknown config key '" + key + "'");
        }
    }
    if (cfg.k_values.empty())
        throw Error(ErrorCode::bad_argument, "k_values must not be empty");
    return cfg;
}

} // namespace halfface
