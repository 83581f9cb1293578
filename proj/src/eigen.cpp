#include "halfface/eigen.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

namespace halfface {

// ---------------------------------------------------------------------------
// Jacobi eigensolver

std::pair<std::vector<double>, std::vector<std::vector<double>>>
jacobi_eigensymmetric(std::vector<double> m, size_t n) {
    if (m.size() != n * n || n == 0)
        throw Error(ErrorCode::bad_argument, "matrix size mismatch");
    const auto at = [&m, n](size_t r, size_t c) -> double& { return m[r * n + c]; };

    std::vector<double> vecs(n * n, 0.0); // eigenvectors as columns
    for (size_t i = 0; i < n; ++i) vecs[i * n + i] = 1.0;

    double total_norm = 0.0;
    for (double v : m) total_norm += v * v;
    total_norm = std::sqrt(total_norm);
    const double tol = 1e-10 * std::max(total_norm, 1e-300);

    constexpr int kMaxSweeps = 100;
    int sweep = 0;
    for (; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0;
        for (size_t p = 0; p < n; ++p)
            for (size_t q = p + 1; q < n; ++q) off += 2.0 * at(p, q) * at(p, q);
        if (std::sqrt(off) < tol) break;

        for (size_t p = 0; p < n; ++p) {
            for (size_t q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (size_t i = 0; i < n; ++i) {
                    const double aip = at(i, p), aiq = at(i, q);
                    at(i, p) = c * aip - s * aiq;
                    at(i, q) = s * aip + c * aiq;
                }
                for (size_t i = 0; i < n; ++i) {
                    const double api = at(p, i), aqi = at(q, i);
                    at(p, i) = c * api - s * aqi;
                    at(q, i) = s * api + c * aqi;
                }
                for (size_t i = 0; i < n; ++i) {
                    const double vip = vecs[i * n + p], viq = vecs[i * n + q];
                    vecs[i * n + p] = c * vip - s * viq;
                    vecs[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }
    if (sweep == kMaxSweeps)
        throw Error(ErrorCode::no_convergence, "Jacobi sweeps exhausted");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return at(a, a) > at(b, b); });

    std::vector<double> values(n);
    std::vector<std::vector<double>> vectors(n, std::vector<double>(n));
    for (size_t r = 0; r < n; ++r) {
        values[r] = at(order[r], order[r]);
        for (size_t i = 0; i < n; ++i) vectors[r][i] = vecs[i * n + order[r]];
    }
    return {std::move(values), std::move(vectors)};
}

// ---------------------------------------------------------------------------
// Training

namespace {

void fix_sign(std::vector<double>& v) {
    double best = 0.0;
    for (double x : v)
        if (std::abs(x) > std::abs(best)) best = x;
    if (best < 0.0)
        for (double& x : v) x = -x;
}

// tau = mean + 2 sd of within-class gallery distances; +inf with any singleton class.
double calibrate_threshold(const std::vector<GalleryEntry>& gallery, DistanceMetric metric) {
    std::map<std::string, std::vector<size_t>> classes;
    for (size_t i = 0; i < gallery.size(); ++i) classes[gallery[i].label].push_back(i);
    for (const auto& [label, members] : classes)
        if (members.size() < 2) return std::numeric_limits<double>::infinity();

    std::vector<double> intra;
    for (const auto& [label, members] : classes)
        for (size_t a : members)
            for (size_t b : members)
                if (a != b)
                    intra.push_back(gallery_distance(gallery[a].coeffs, gallery[b].coeffs, metric));
    const double mean = std::accumulate(intra.begin(), intra.end(), 0.0) / intra.size();
    double var = 0.0;
    for (double v : intra) var += (v - mean) * (v - mean);
    var /= intra.size();
    return mean + 2.0 * std::sqrt(var);
}

} // namespace

void EigenModel::validate() const {
    if (d != static_cast<size_t>(width) * height || d == 0)
        throw Error(ErrorCode::invariant_violation, "model geometry inconsistent");
    if (mean.size() != d)
        throw Error(ErrorCode::invariant_violation, "mean length != d");
    for (const auto& v : basis)
        if (v.size() != d)
            throw Error(ErrorCode::invariant_violation, "basis vector length != d");
    if (eigenvalues.size() != basis.size())
        throw Error(ErrorCode::invariant_violation, "eigenvalue count != basis size");
    for (size_t i = 0; i < eigenvalues.size(); ++i) {
        if (eigenvalues[i] < 0.0)
            throw Error(ErrorCode::invariant_violation, "negative eigenvalue");
        if (i > 0 && eigenvalues[i] > eigenvalues[i - 1] + 1e-12)
            throw Error(ErrorCode::invariant_violation, "eigenvalues not descending");
    }
    // Orthonormality; all-zero vectors are tolerated for zero eigenvalues.
    for (size_t a = 0; a < basis.size(); ++a) {
        for (size_t b = a; b < basis.size(); ++b) {
            double dot = 0.0;
            for (size_t i = 0; i < d; ++i) dot += basis[a][i] * basis[b][i];
            const double want = (a == b) ? 1.0 : 0.0;
            if (a == b && std::abs(dot) < 1e-12) continue; // zero eigenvector
            if (std::abs(dot - want) > 1e-6)
                throw Error(ErrorCode::invariant_violation, "basis not orthonormal");
        }
    }
    for (const auto& entry : gallery)
        if (entry.coeffs.size() != basis.size())
            throw Error(ErrorCode::invariant_violation, "gallery coefficient length != k");
}

EigenModel train(const std::vector<GrayImage>& images, const std::vector<std::string>& labels,
                 size_t k) {
    const size_t n = images.size();
    if (n < 2)
        throw Error(ErrorCode::bad_argument, "need at least 2 training images");
    if (labels.size() != n)
        throw Error(ErrorCode::bad_argument, "label count != image count");
    if (k < 1 || k > n - 1)
        throw Error(ErrorCode::bad_argument, "k must lie in [1, N-1]");
    for (const auto& img : images)
        if (!img.same_geometry(images[0]))
            throw Error(ErrorCode::geometry_mismatch, "training images differ in size");

    EigenModel model;
    model.width = images[0].width;
    model.height = images[0].height;
    model.d = images[0].size();

    model.mean.assign(model.d, 0.0);
    for (const auto& img : images)
        for (size_t i = 0; i < model.d; ++i) model.mean[i] += img.data[i];
    for (double& v : model.mean) v /= static_cast<double>(n);

    // centered snapshots
    std::vector<std::vector<double>> centered(n, std::vector<double>(model.d));
    for (size_t s = 0; s < n; ++s)
        for (size_t i = 0; i < model.d; ++i)
            centered[s][i] = images[s].data[i] - model.mean[i];

    // Gram matrix A^T A (N x N); covariance eigenvalues are these over N.
    std::vector<double> gram(n * n);
    for (size_t a = 0; a < n; ++a)
        for (size_t b = a; b < n; ++b) {
            double dot = 0.0;
            for (size_t i = 0; i < model.d; ++i) dot += centered[a][i] * centered[b][i];
            gram[a * n + b] = dot;
            gram[b * n + a] = dot;
        }

    auto [gram_values, gram_vectors] = jacobi_eigensymmetric(std::move(gram), n);

    model.basis.reserve(k);
    model.eigenvalues.reserve(k);
    for (size_t r = 0; r < k; ++r) {
        std::vector<double> face(model.d, 0.0);
        for (size_t s = 0; s < n; ++s) {
            const double w = gram_vectors[r][s];
            if (w == 0.0) continue;
            for (size_t i = 0; i < model.d; ++i) face[i] += w * centered[s][i];
        }
        double norm = 0.0;
        for (double v : face) norm += v * v;
        norm = std::sqrt(norm);
        if (norm > 1e-12) {
            for (double& v : face) v /= norm;
            fix_sign(face);
        } else {
            std::fill(face.begin(), face.end(), 0.0);
        }
        model.basis.push_back(std::move(face));
        model.eigenvalues.push_back(std::max(0.0, gram_values[r] / static_cast<double>(n)));
    }

    model.gallery.reserve(n);
    for (size_t s = 0; s < n; ++s) {
        GalleryEntry entry;
        entry.label = labels[s];
        entry.coeffs.resize(k);
        for (size_t r = 0; r < k; ++r) {
            double c = 0.0;
            for (size_t i = 0; i < model.d; ++i) c += model.basis[r][i] * centered[s][i];
            entry.coeffs[r] = c;
        }
        model.gallery.push_back(std::move(entry));
    }

    calibrate_thresholds(model);
    return model;
}

void calibrate_thresholds(EigenModel& model) {
    model.threshold_sed = calibrate_threshold(model.gallery, DistanceMetric::squared_euclidean);
    model.threshold_cityblock = calibrate_threshold(model.gallery, DistanceMetric::city_block);
}

std::vector<double> project(const EigenModel& model, const GrayImage& img) {
    if (img.size() != model.d)
        throw Error(ErrorCode::geometry_mismatch, "probe geometry != model geometry");
    std::vector<double> coeffs(model.k());
    for (size_t r = 0; r < model.k(); ++r) {
        double c = 0.0;
        for (size_t i = 0; i < model.d; ++i)
            c += model.basis[r][i] * (img.data[i] - model.mean[i]);
        coeffs[r] = c;
    }
    return coeffs;
}

GrayImage reconstruct(const EigenModel& model, const std::vector<double>& coeffs) {
    if (coeffs.size() != model.k())
        throw Error(ErrorCode::bad_argument, "coefficient length != k");
    GrayImage out(model.width, model.height);
    out.data = model.mean;
    for (size_t r = 0; r < model.k(); ++r) {
        const double c = coeffs[r];
        if (c == 0.0) continue;
        for (size_t i = 0; i < model.d; ++i) out.data[i] += c * model.basis[r][i];
    }
    return out;
}

double gallery_distance(const std::vector<double>& a, const std::vector<double>& b,
                        DistanceMetric metric) {
    if (a.size() != b.size())
        throw Error(ErrorCode::bad_argument, "coefficient length mismatch");
    double acc = 0.0;
    if (metric == DistanceMetric::squared_euclidean) {
        for (size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[i];
            acc += d * d;
        }
    } else {
        for (size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    }
    return acc;
}

RecognitionResult classify(const EigenModel& model, const GrayImage& img, DistanceMetric metric) {
    if (model.gallery.empty())
        throw Error(ErrorCode::bad_argument, "empty gallery");
    const std::vector<double> probe = project(model, img);

    size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    double runner_up = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < model.gallery.size(); ++i) {
        const double d = gallery_distance(probe, model.gallery[i].coeffs, metric);
        if (d < best_d) {
            runner_up = best_d;
            best_d = d;
            best = i;
        } else if (d < runner_up) {
            runner_up = d;
        }
    }

    RecognitionResult result;
    result.metric = metric;
    result.distance = best_d;
    result.runner_up_distance = runner_up;
    result.nearest_label = model.gallery[best].label;
    result.label = best_d > model.threshold(metric) ? "unknown" : model.gallery[best].label;
    return result;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[4] = {'E', 'I', 'G', 'F'};
constexpr uint16_t kVersion = 1;

void put_u16(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
public:
    explicit Reader(std::string buf) : buf_(std::move(buf)) {}

    const char* take(size_t n) {
        if (pos_ + n > buf_.size())
            throw Error(ErrorCode::corrupt_payload, "model file truncated");
        const char* p = buf_.data() + pos_;
        pos_ += n;
        return p;
    }
    uint16_t u16() {
        const auto* p = reinterpret_cast<const uint8_t*>(take(2));
        return static_cast<uint16_t>(p[0] | (p[1] << 8));
    }
    uint32_t u32() {
        const auto* p = reinterpret_cast<const uint8_t*>(take(4));
        return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<uint32_t>(p[3]) << 24);
    }
    double f64() {
        const auto* p = reinterpret_cast<const uint8_t*>(take(8));
        uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(p[i]) << (8 * i);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    size_t pos() const { return pos_; }
    const std::string& buffer() const { return buf_; }
    bool exhausted() const { return pos_ == buf_.size(); }

private:
    std::string buf_;
    size_t pos_ = 0;
};

} // namespace

void save_model(const EigenModel& model, const std::string& path) {
    std::string out;
    out.append(kMagic, 4);
    put_u16(out, kVersion);
    put_u32(out, static_cast<uint32_t>(model.d));
    put_u32(out, static_cast<uint32_t>(model.k()));
    put_u32(out, static_cast<uint32_t>(model.gallery.size()));
    put_u32(out, static_cast<uint32_t>(model.width));
    put_u32(out, static_cast<uint32_t>(model.height));

    for (double v : model.mean) put_f64(out, v);
    for (const auto& face : model.basis)
        for (double v : face) put_f64(out, v);
    for (double v : model.eigenvalues) put_f64(out, v);
    for (const auto& entry : model.gallery)
        for (double v : entry.coeffs) put_f64(out, v);
    for (const auto& entry : model.gallery) {
        put_u32(out, static_cast<uint32_t>(entry.label.size()));
        out.append(entry.label);
    }

    const auto crc = static_cast<uint32_t>(
        crc32(0, reinterpret_cast<const Bytef*>(out.data()), static_cast<uInt>(out.size())));
    put_u32(out, crc);

    std::ofstream file(path, std::ios::binary);
    if (!file)
        throw Error(ErrorCode::io_failure, "cannot open " + path + " for writing");
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file)
        throw Error(ErrorCode::io_failure, "write failed for " + path);
}

EigenModel load_model(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file)
        throw Error(ErrorCode::missing_file, path);
    std::string buf((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

    if (buf.size() < 8)
        throw Error(ErrorCode::corrupt_payload, "model file too small");
    const auto stored_crc_pos = buf.size() - 4;
    const auto* tail = reinterpret_cast<const uint8_t*>(buf.data() + stored_crc_pos);
    const uint32_t stored_crc = tail[0] | (tail[1] << 8) | (tail[2] << 16) |
                                (static_cast<uint32_t>(tail[3]) << 24);
    const auto computed = static_cast<uint32_t>(
        crc32(0, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(stored_crc_pos)));
    if (stored_crc != computed)
        throw Error(ErrorCode::corrupt_payload, "model checksum mismatch");

    Reader in(buf.substr(0, stored_crc_pos));
    if (std::memcmp(in.take(4), kMagic, 4) != 0)
        throw Error(ErrorCode::corrupt_header, "bad model magic");
    if (in.u16() != kVersion)
        throw Error(ErrorCode::version_mismatch, "unsupported model version");

    EigenModel model;
    model.d = in.u32();
    const size_t k = in.u32();
    const size_t n = in.u32();
    model.width = static_cast<int>(in.u32());
    model.height = static_cast<int>(in.u32());

    model.mean.resize(model.d);
    for (double& v : model.mean) v = in.f64();
    model.basis.assign(k, std::vector<double>(model.d));
    for (auto& face : model.basis)
        for (double& v : face) v = in.f64();
    model.eigenvalues.resize(k);
    for (double& v : model.eigenvalues) v = in.f64();
    model.gallery.assign(n, GalleryEntry{});
    for (auto& entry : model.gallery) {
        entry.coeffs.resize(k);
        for (double& v : entry.coeffs) v = in.f64();
    }
    for (auto& entry : model.gallery) {
        const uint32_t len = in.u32();
        entry.label.assign(in.take(len), len);
    }
    if (!in.exhausted())
        throw Error(ErrorCode::corrupt_payload, "trailing bytes in model file");

    model.validate();
    calibrate_thresholds(model);
    return model;
}

} // namespace halfface
