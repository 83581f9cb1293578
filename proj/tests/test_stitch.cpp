#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "halfface/quality.hpp"
#include "halfface/stitch.hpp"
#include "test_util.hpp"

using namespace halfface;

namespace {

// Independent evaluation of the correlation double sums, kept deliberately
// naive: explicit mean passes and explicit numerator/denominator loops.
double ncc_oracle(const GrayImage& w_img, const GrayImage& f_img, Offset off, const Rect& region) {
    double w_mean = 0.0, f_mean = 0.0;
    const double count = static_cast<double>(region.w) * region.h;
    for (int y = region.y0; y < region.y0 + region.h; ++y)
        for (int x = region.x0; x < region.x0 + region.w; ++x) {
            w_mean += w_img.at(x, y);
            f_mean += f_img.at(x + off.i, y + off.j);
        }
    w_mean /= count;
    f_mean /= count;
    double num = 0.0, dw = 0.0, df = 0.0;
    for (int y = region.y0; y < region.y0 + region.h; ++y)
        for (int x = region.x0; x < region.x0 + region.w; ++x) {
            const double a = w_img.at(x, y) - w_mean;
            const double b = f_img.at(x + off.i, y + off.j) - f_mean;
            num += a * b;
            dw += a * a;
            df += b * b;
        }
    return num / std::sqrt(dw * df);
}

GrayImage invert(const GrayImage& img) {
    GrayImage out = img;
    for (double& v : out.data) v = 1.0 - v;
    return out;
}

} // namespace

TEST_CASE("ncc self-correlation and negation") {
    auto gen = test_util::rng(41);
    const GrayImage img = test_util::random_image(12, 10, gen);
    const Rect full{0, 0, 12, 10};
    CHECK(ncc(img, img, {0, 0}, full) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ncc(img, invert(img), {0, 0}, full) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("ncc matches the 3x3 hand fixture") {
    GrayImage w(3, 3), f(3, 3);
    w.data = {0, 1, 0, 1, 1, 1, 0, 1, 0};
    f.data = {1, 0, 1, 0, 0, 0, 1, 0, 1};
    const Rect full{0, 0, 3, 3};
    CHECK(ncc(w, f, {0, 0}, full) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(ncc(w, f, {0, 0}, full) == doctest::Approx(ncc_oracle(w, f, {0, 0}, full)));
}

TEST_CASE("ncc equals the brute-force oracle at random offsets") {
    auto gen = test_util::rng(42);
    const GrayImage w_img = test_util::random_image(20, 20, gen);
    const GrayImage f_img = test_util::random_image(30, 30, gen);
    for (int trial = 0; trial < 40; ++trial) {
        const Rect region{static_cast<int>(gen() % 8), static_cast<int>(gen() % 8),
                          3 + static_cast<int>(gen() % 6), 3 + static_cast<int>(gen() % 6)};
        const Offset off{static_cast<int>(gen() % 5), static_cast<int>(gen() % 5)};
        const double got = ncc(w_img, f_img, off, region);
        CHECK(got == doctest::Approx(ncc_oracle(w_img, f_img, off, region)).epsilon(1e-12));
        CHECK(got >= -1.0 - 1e-12);
        CHECK(got <= 1.0 + 1e-12);
    }
}

TEST_CASE("ncc is invariant under positive affine remaps") {
    auto gen = test_util::rng(43);
    const GrayImage a = test_util::random_image(9, 9, gen);
    const GrayImage b = test_util::random_image(9, 9, gen);
    const Rect full{0, 0, 9, 9};
    const double base = ncc(a, b, {0, 0}, full);
    GrayImage a2 = a, b2 = b;
    for (double& v : a2.data) v = 0.31 * v + 0.17;
    for (double& v : b2.data) v = 2.5 * v - 0.6;
    CHECK(ncc(a2, b2, {0, 0}, full) == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("ncc rejects zero-variance regions and out-of-bounds offsets") {
    const GrayImage flat(8, 8, 0.4);
    auto gen = test_util::rng(44);
    const GrayImage rnd = test_util::random_image(8, 8, gen);
    try {
        ncc(flat, rnd, {0, 0}, Rect{0, 0, 8, 8});
        FAIL("expected zero variance");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::zero_variance);
    }
    CHECK_THROWS_AS(ncc(rnd, rnd, {4, 0}, Rect{0, 0, 8, 8}), Error);
}

TEST_CASE("find_best_offset recovers a perfect overlapping split") {
    auto gen = test_util::rng(45);
    const GrayImage img = test_util::random_image(64, 64, gen);
    StitchParams p;
    // right begins exactly where the left's seam band starts
    const GrayImage left = crop(img, Rect{0, 0, 32, 64});
    const GrayImage right = crop(img, Rect{32 - p.band_width, 0, 32 + p.band_width, 64});
    const auto [off, peak] = find_best_offset(left, right, p);
    CHECK(off == Offset{0, 0});
    CHECK(peak == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("find_best_offset recovers a known vertical shift") {
    auto gen = test_util::rng(46);
    const GrayImage img = test_util::random_image(64, 80, gen);
    StitchParams p;
    const GrayImage left = crop(img, Rect{0, 8, 32, 64});
    // the matching band lives 3 rows higher in `right`, so the search must
    // report j = 3 to line it back up
    const GrayImage right = crop(img, Rect{32 - p.band_width, 5, 32 + p.band_width, 70});
    const auto [off, peak] = find_best_offset(left, right, p);
    CHECK(off == Offset{0, 3});
    CHECK(peak >= 0.99);
}

TEST_CASE("find_best_offset errors when all bands are constant") {
    StitchParams p;
    CHECK_THROWS_AS(find_best_offset(GrayImage(32, 40, 0.5), GrayImage(32, 40, 0.5), p), Error);
}

TEST_CASE("find_best_offset tie-break prefers the smallest displacement") {
    // a vertically constant integer ramp scores exactly 1.0 at every valid
    // displacement, so only the tie-break decides
    GrayImage grad(40, 40);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x) grad.at(x, y) = x;
    StitchParams p;
    const auto [off, peak] = find_best_offset(grad, grad, p);
    CHECK(off.j == 0);
    CHECK(peak == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("multiband_blend preserves constants and stays in range") {
    StitchParams p;
    const GrayImage blended = multiband_blend(GrayImage(30, 32, 0.37), GrayImage(30, 32, 0.37),
                                              {0, 0}, p);
    for (double v : blended.data) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));

    auto gen = test_util::rng(47);
    const GrayImage a = test_util::random_image(30, 32, gen);
    const GrayImage b = test_util::random_image(30, 32, gen);
    for (double v : multiband_blend(a, b, {-3, 2}, p).data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("multiband_blend reassembles an exact split") {
    const GrayImage img = test_util::symmetric_face(64, 64, 48);
    const GrayImage left = crop(img, Rect{0, 0, 30, 64});
    const GrayImage right = crop(img, Rect{30, 0, 34, 64});
    StitchParams p;
    const GrayImage blended = multiband_blend(left, right, {0, 0}, p);
    REQUIRE(blended.width == 64);
    REQUIRE(blended.height == 64);
    CHECK(mse(img, blended) < 1e-4);
}

TEST_CASE("single-level blend equals linear feathering") {
    auto gen = test_util::rng(49);
    const GrayImage left = test_util::random_image(20, 16, gen);
    const GrayImage right = test_util::random_image(20, 16, gen);
    StitchParams p;
    p.blend_levels = 1;
    const GrayImage blended = multiband_blend(left, right, {0, 0}, p);

    // manual feather: alpha ramps over feather_width columns around the seam
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < blended.width; ++x) {
            const double alpha = std::clamp(0.5 - (x + 0.5 - 20.0) / p.feather_width, 0.0, 1.0);
            const double lv = left.at(std::min(x, 19), y);
            const double rv = x >= 20 ? right.at(x - 20, y) : left.at(x, y);
            const double lv_layer = x < 20 ? lv : right.at(x - 20, y);
            const double expected = alpha * lv_layer + (1 - alpha) * rv;
            CHECK(blended.at(x, y) == doctest::Approx(expected).epsilon(1e-12));
        }
}

TEST_CASE("stitch_face reproduces an exactly symmetric face") {
    const GrayImage face = test_util::symmetric_face(180, 200, 51);
    const SymmetryAxis axis{90.0, AxisMethod::mirror_search, 1.0};
    const StitchOutcome outcome = stitch_face(face, axis, StitchParams{});
    REQUIRE(outcome.image.width == 180);
    REQUIRE(outcome.image.height == 200);
    CHECK(outcome.offset == Offset{0, 0});
    CHECK(outcome.peak_ncc == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cr(face, outcome.image) >= 0.999);
}

TEST_CASE("stitch_face from a blanked right half mirrors the left half") {
    GrayImage face = test_util::symmetric_face(180, 200, 52);
    for (int y = 0; y < 200; ++y)
        for (int x = 90; x < 180; ++x) face.at(x, y) = 0.0;
    const SymmetryAxis axis{90.0, AxisMethod::mirror_search, 1.0};
    const StitchOutcome outcome = stitch_face(face, axis, StitchParams{});
    REQUIRE(outcome.image.width == 180);
    for (int y = 0; y < 200; ++y)
        for (int x = 0; x < 90; ++x)
            CHECK(std::abs(outcome.image.at(179 - x, y) - face.at(x, y)) < 1e-6);
}

TEST_CASE("stitch_face uses the wider (right) side when the left is blanked") {
    GrayImage face = test_util::symmetric_face(180, 200, 53);
    for (int y = 0; y < 200; ++y)
        for (int x = 0; x < 90; ++x) face.at(x, y) = 0.0;
    const SymmetryAxis axis{90.0, AxisMethod::mirror_search, 1.0};
    const StitchOutcome outcome = stitch_face(face, axis, StitchParams{});
    CHECK(outcome.mirrored_from_right);
    REQUIRE(outcome.image.width == 180);
    for (int y = 0; y < 200; ++y)
        for (int x = 90; x < 180; ++x)
            CHECK(std::abs(outcome.image.at(179 - x, y) - face.at(x, y)) < 1e-6);
}

TEST_CASE("stitch_face output is mirror-symmetric at offset (0,0)") {
    const GrayImage face = test_util::symmetric_face(180, 200, 54);
    const StitchOutcome outcome =
        stitch_face(face, SymmetryAxis{90.0, AxisMethod::mirror_search, 1.0}, StitchParams{});
    REQUIRE(outcome.offset == Offset{0, 0});
    const GrayImage& out = outcome.image;
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width / 2; ++x)
            CHECK(out.at(x, y) == doctest::Approx(out.at(out.width - 1 - x, y)).epsilon(1e-9));
}

TEST_CASE("stitch_face rejects a border axis") {
    const GrayImage face = test_util::symmetric_face(64, 64, 55);
    CHECK_THROWS_AS(stitch_face(face, SymmetryAxis{0.0, AxisMethod::mirror_search, 1.0},
                                StitchParams{}),
                    Error);
    CHECK_THROWS_AS(stitch_face(face, SymmetryAxis{63.9, AxisMethod::mirror_search, 1.0},
                                StitchParams{}),
                    Error);
}

TEST_CASE("faces94-sized stitch matches reported quality magnitudes") {
    const GrayImage face = test_util::symmetric_face(180, 200, 56);
    GrayImage occluded = face;
    for (int y = 0; y < 200; ++y)
        for (int x = 90; x < 180; ++x) occluded.at(x, y) = 0.0;
    const StitchOutcome outcome =
        stitch_face(occluded, SymmetryAxis{90.0, AxisMethod::mirror_search, 1.0}, StitchParams{});
    REQUIRE(outcome.image.same_geometry(face));
    CHECK(mse(face, outcome.image) <= 15.0);
    CHECK(cr(face, outcome.image) > 0.97);
}
