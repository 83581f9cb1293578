#include "halfface/stitch.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace halfface {

namespace detail {

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty())
        throw Error(ErrorCode::bad_argument, "pearson: mismatched sample counts");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa < 1e-24 || sbb < 1e-24)
        throw Error(ErrorCode::zero_variance, "correlation undefined on constant samples");
    return sab / std::sqrt(saa * sbb);
}

} // namespace detail

double ncc(const GrayImage& w_img, const GrayImage& f_img, Offset off, const Rect& region) {
    if (!region.fits_in(w_img))
        throw Error(ErrorCode::out_of_bounds, "ncc region outside first image");
    const Rect shifted{region.x0 + off.i, region.y0 + off.j, region.w, region.h};
    if (!shifted.fits_in(f_img))
        throw Error(ErrorCode::out_of_bounds, "ncc shifted region outside second image");

    std::vector<double> w_samples, f_samples;
    w_samples.reserve(static_cast<size_t>(region.w) * region.h);
    f_samples.reserve(w_samples.capacity());
    for (int y = region.y0; y < region.y0 + region.h; ++y)
        for (int x = region.x0; x < region.x0 + region.w; ++x) {
            w_samples.push_back(w_img.at(x, y));
            f_samples.push_back(f_img.at(x + off.i, y + off.j));
        }
    return detail::pearson(w_samples, f_samples);
}

std::pair<Offset, double> find_best_offset(const GrayImage& left, const GrayImage& right,
                                           const StitchParams& p) {
    const int band = std::min({p.band_width, left.width, right.width});
    if (band < 2)
        throw Error(ErrorCode::bad_argument, "seam band narrower than 2 pixels");
    const int radius = p.search_radius;
    const int h = std::min(left.height, right.height);
    if (h < 2 * radius + 2)
        throw Error(ErrorCode::bad_argument, "images too short for the search radius");

    const int tx0 = left.width - band; // template origin in `left`

    bool any_defined = false;
    Offset best_off{0, 0};
    double best = -2.0;
    std::vector<double> a, b;
    for (int j = -radius; j <= radius; ++j) {
        for (int i = -radius; i <= radius; ++i) {
            const int x_lo = std::max(0, -i);
            const int x_hi = std::min(band, right.width - i);
            const int y_lo = std::max(0, -j);
            const int y_hi = std::min(h, right.height - j);
            if (x_hi - x_lo < 2 || y_hi - y_lo < 2) continue;
            a.clear();
            b.clear();
            for (int y = y_lo; y < y_hi; ++y)
                for (int x = x_lo; x < x_hi; ++x) {
                    a.push_back(left.at(tx0 + x, y));
                    b.push_back(right.at(x + i, y + j));
                }
            double score;
            try {
                score = detail::pearson(a, b);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::zero_variance) continue;
                throw;
            }
            const bool better =
                !any_defined || score > best ||
                (score == best &&
                 std::make_tuple(std::abs(i) + std::abs(j), j, i) <
                     std::make_tuple(std::abs(best_off.i) + std::abs(best_off.j), best_off.j,
                                     best_off.i));
            if (better) {
                best = score;
                best_off = Offset{i, j};
            }
            any_defined = true;
        }
    }
    if (!any_defined)
        throw Error(ErrorCode::zero_variance, "every candidate offset has constant bands");
    return {best_off, best};
}

// ---------------------------------------------------------------------------
// Pyramid machinery. Kernel [1, 4, 6, 4, 1] / 16, reflect padding.

namespace {

constexpr double kKernel[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

int reflect(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

GrayImage blur(const GrayImage& img) {
    GrayImage tmp(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int t = -2; t <= 2; ++t)
                acc += kKernel[t + 2] * img.at(reflect(x + t, img.width), y);
            tmp.at(x, y) = acc;
        }
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int t = -2; t <= 2; ++t)
                acc += kKernel[t + 2] * tmp.at(x, reflect(y + t, img.height));
            out.at(x, y) = acc;
        }
    return out;
}

GrayImage reduce(const GrayImage& img) {
    const GrayImage smooth = blur(img);
    GrayImage out((img.width + 1) / 2, (img.height + 1) / 2);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out.at(x, y) = smooth.at(2 * x, 2 * y);
    return out;
}

// Zero-stuffed upsample to (tw, th) followed by the doubled kernel; exactly
// inverts reduce on constant images.
GrayImage expand(const GrayImage& img, int tw, int th) {
    GrayImage up(tw, th, 0.0);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (2 * x < tw && 2 * y < th) up.at(2 * x, 2 * y) = img.at(x, y);

    GrayImage tmp(tw, th);
    for (int y = 0; y < th; ++y)
        for (int x = 0; x < tw; ++x) {
            double acc = 0.0;
            for (int t = -2; t <= 2; ++t)
                acc += 2.0 * kKernel[t + 2] * up.at(reflect(x + t, tw), y);
            tmp.at(x, y) = acc;
        }
    GrayImage out(tw, th);
    for (int y = 0; y < th; ++y)
        for (int x = 0; x < tw; ++x) {
            double acc = 0.0;
            for (int t = -2; t <= 2; ++t)
                acc += 2.0 * kKernel[t + 2] * tmp.at(x, reflect(y + t, th));
            out.at(x, y) = acc;
        }
    return out;
}

} // namespace

GrayImage multiband_blend(const GrayImage& left, const GrayImage& right, Offset off,
                          const StitchParams& p) {
    const int comp_w = left.width + right.width + off.i;
    const int comp_h = left.height;
    if (comp_w < 2)
        throw Error(ErrorCode::bad_argument, "composite would be empty");

    const int right_x0 = left.width + off.i; // composite column of right's first column
    const double seam = left.width + off.i / 2.0;

    // Full-size layers for the two sources. Where a layer has no content of
    // its own it borrows the other image's pixels, so that continuation-
    // consistent pairs blend without loss; pixels covered by neither image
    // fall back to edge replication.
    GrayImage l_ext(comp_w, comp_h);
    GrayImage r_ext(comp_w, comp_h);
    for (int y = 0; y < comp_h; ++y)
        for (int x = 0; x < comp_w; ++x) {
            const bool in_left = x < left.width;
            const int rx = x - right_x0;
            const int ry = y - off.j;
            const bool in_right = rx >= 0 && rx < right.width && ry >= 0 && ry < right.height;
            const double lv = in_left ? left.at(x, y) : 0.0;
            const double rv = in_right ? right.at(rx, ry) : 0.0;
            const double fallback = right.at(std::clamp(rx, 0, right.width - 1),
                                             std::clamp(ry, 0, right.height - 1));
            l_ext.at(x, y) = in_left ? lv : (in_right ? rv : fallback);
            r_ext.at(x, y) = in_right ? rv : (in_left ? lv : fallback);
        }

    int levels = std::max(1, p.blend_levels);
    while (levels > 1 && (comp_w < (1 << levels) || comp_h < (1 << levels)))
        --levels;

    GrayImage out(comp_w, comp_h);
    if (levels == 1) {
        // linear feather over feather_width columns centered on the seam
        const double fw = std::max(1, p.feather_width);
        for (int y = 0; y < comp_h; ++y)
            for (int x = 0; x < comp_w; ++x) {
                const double alpha = std::clamp(0.5 - (x + 0.5 - seam) / fw, 0.0, 1.0);
                out.at(x, y) = alpha * l_ext.at(x, y) + (1.0 - alpha) * r_ext.at(x, y);
            }
    } else {
        GrayImage mask(comp_w, comp_h);
        for (int y = 0; y < comp_h; ++y)
            for (int x = 0; x < comp_w; ++x)
                mask.at(x, y) = (x + 0.5 < seam) ? 1.0 : 0.0;

        std::vector<GrayImage> gl{l_ext}, gr{r_ext}, gm{mask};
        for (int l = 1; l < levels; ++l) {
            gl.push_back(reduce(gl.back()));
            gr.push_back(reduce(gr.back()));
            gm.push_back(reduce(gm.back()));
        }

        // Blend the residual (Laplacian) bands plus the coarsest level.
        GrayImage blended(gm.back().width, gm.back().height);
        for (size_t i = 0; i < blended.size(); ++i)
            blended.data[i] =
                gm.back().data[i] * gl.back().data[i] + (1.0 - gm.back().data[i]) * gr.back().data[i];
        for (int l = levels - 2; l >= 0; --l) {
            const GrayImage up_l = expand(gl[l + 1], gl[l].width, gl[l].height);
            const GrayImage up_r = expand(gr[l + 1], gr[l].width, gr[l].height);
            GrayImage up_b = expand(blended, gl[l].width, gl[l].height);
            for (size_t i = 0; i < up_b.size(); ++i) {
                const double lap_l = gl[l].data[i] - up_l.data[i];
                const double lap_r = gr[l].data[i] - up_r.data[i];
                up_b.data[i] += gm[l].data[i] * lap_l + (1.0 - gm[l].data[i]) * lap_r;
            }
            blended = std::move(up_b);
        }
        out = std::move(blended);
    }

    for (double& v : out.data) v = std::clamp(v, 0.0, 1.0);
    return out;
}

StitchOutcome stitch_face(const GrayImage& img, const SymmetryAxis& axis, const StitchParams& p) {
    const int cb = static_cast<int>(std::floor(axis.column));
    if (cb < 2 || cb > img.width - 2)
        throw Error(ErrorCode::bad_argument, "axis column leaves a side narrower than 2 pixels");

    // The wider side of the axis is the source half; equal widths fall to the
    // side with more pixel variation, so a blanked half is never the source.
    // A right-side source is handled by flipping the whole problem.
    bool use_right = img.width - cb > cb;
    if (img.width - cb == cb) {
        double left_mean = 0.0, right_mean = 0.0;
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < cb; ++x) {
                left_mean += img.at(x, y);
                right_mean += img.at(img.width - 1 - x, y);
            }
        const double count = static_cast<double>(cb) * img.height;
        left_mean /= count;
        right_mean /= count;
        double left_var = 0.0, right_var = 0.0;
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < cb; ++x) {
                const double dl = img.at(x, y) - left_mean;
                const double dr = img.at(img.width - 1 - x, y) - right_mean;
                left_var += dl * dl;
                right_var += dr * dr;
            }
        use_right = right_var > left_var;
    }
    if (use_right) {
        SymmetryAxis flipped_axis = axis;
        flipped_axis.column = img.width - cb;
        StitchOutcome out = stitch_face(hflip(img), flipped_axis, p);
        out.image = hflip(out.image);
        out.axis = axis;
        out.mirrored_from_right = true;
        return out;
    }

    GrayImage half = crop(img, Rect{0, 0, cb, img.height});
    GrayImage mirrored = hflip(half);

    // Search template: the mirror continuation of the seam band, so that
    // offset (0, 0) corresponds to placing the mirrored half flush with the
    // axis. Realized by swapping the seam band of the source half for its own
    // reflection before the generic band search.
    const int band = std::min(p.band_width, half.width);
    GrayImage search_left = half;
    for (int y = 0; y < half.height; ++y)
        for (int s = 0; s < band; ++s)
            search_left.at(half.width - band + s, y) = half.at(half.width - 1 - s, y);

    StitchParams sp = p;
    sp.search_radius = std::min(p.search_radius, std::max(0, (half.height - 2) / 2));
    const auto [off, peak] = find_best_offset(search_left, mirrored, sp);

    // A found displacement (i, j) means mirrored(x + i, y + j) continues the
    // face at composite (half.width + x, y); invert it for placement.
    GrayImage blended = multiband_blend(half, mirrored, Offset{-off.i, -off.j}, p);

    StitchOutcome out;
    out.image = std::move(blended);
    out.offset = off;
    out.peak_ncc = peak;
    out.axis = axis;
    return out;
}

} // namespace halfface
