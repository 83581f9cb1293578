#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "halfface/axis.hpp"
#include "test_util.hpp"

using namespace halfface;

namespace {

// Brute-force rectangle sum, the independent oracle for the integral image.
double brute_rect_sum(const GrayImage& img, const Rect& r) {
    double acc = 0.0;
    for (int y = r.y0; y < r.y0 + r.h; ++y)
        for (int x = r.x0; x < r.x0 + r.w; ++x) acc += img.at(x, y);
    return acc;
}

// Single-stage, single-stump cascade fixture: a center-surround contrast
// feature that fires on a dark blob inside the base window.
std::string blob_cascade_xml(double stump_threshold, double stage_threshold) {
    std::string xml = R"(<?xml version="1.0"?>
<opencv_storage>
<blob_detector type_id="opencv-haar-classifier">
  <size>24 24</size>
  <stages>
    <_>
      <trees>
        <_>
          <_>
            <feature>
              <rects>
                <_>0 0 24 24 1.0</_>
                <_>8 8 8 8 -9.0</_>
              </rects>
              <tilted>0</tilted>
            </feature>
            <threshold>)" + std::to_string(stump_threshold) + R"(</threshold>
            <left_val>-1.0</left_val>
            <right_val>1.0</right_val>
          </_>
        </_>
      </trees>
      <stage_threshold>)" + std::to_string(stage_threshold) + R"(</stage_threshold>
    </_>
  </stages>
</blob_detector>
</opencv_storage>
)";
    return xml;
}

GrayImage blob_image(int w, int h, int cx, int cy, int blob = 10) {
    GrayImage img(w, h, 0.9);
    for (int y = cy - blob / 2; y < cy + blob / 2; ++y)
        for (int x = cx - blob / 2; x < cx + blob / 2; ++x)
            if (x >= 0 && x < w && y >= 0 && y < h) img.at(x, y) = 0.05;
    return img;
}

CascadeModel write_and_load(const std::string& xml, const test_util::TempDir& dir,
                            const std::string& name = "cascade.xml") {
    std::ofstream(dir.file(name)) << xml;
    return load_cascade(dir.file(name));
}

} // namespace

TEST_CASE("integral image counting cases") {
    const GrayImage ones(3, 3, 1.0);
    const IntegralImage sat(ones);
    CHECK(sat.at(2, 2) == doctest::Approx(9.0));
    CHECK(sat.rect_sum(Rect{1, 1, 2, 2}) == doctest::Approx(4.0));
}

TEST_CASE("integral image equals brute force on every 5x5 sub-rectangle") {
    auto gen = test_util::rng(21);
    const GrayImage img = test_util::random_image(5, 5, gen);
    const IntegralImage sat(img);
    for (int y0 = 0; y0 < 5; ++y0)
        for (int x0 = 0; x0 < 5; ++x0)
            for (int h = 1; y0 + h <= 5; ++h)
                for (int w = 1; x0 + w <= 5; ++w) {
                    const Rect r{x0, y0, w, h};
                    CHECK(sat.rect_sum(r) == doctest::Approx(brute_rect_sum(img, r)).epsilon(1e-9));
                }
}

TEST_CASE("integral image brute-force property up to 32x32") {
    auto gen = test_util::rng(22);
    for (int trial = 0; trial < 5; ++trial) {
        const int w = 4 + static_cast<int>(gen() % 29);
        const int h = 4 + static_cast<int>(gen() % 29);
        const GrayImage img = test_util::random_image(w, h, gen);
        const IntegralImage sat(img);
        for (int t = 0; t < 50; ++t) {
            const int x0 = static_cast<int>(gen() % w);
            const int y0 = static_cast<int>(gen() % h);
            const int rw = 1 + static_cast<int>(gen() % (w - x0));
            const int rh = 1 + static_cast<int>(gen() % (h - y0));
            const Rect r{x0, y0, rw, rh};
            CHECK(std::abs(sat.rect_sum(r) - brute_rect_sum(img, r)) < 1e-9);
        }
    }
}

TEST_CASE("load_cascade parses the minimal fixture") {
    test_util::TempDir dir("cascade");
    const CascadeModel model = write_and_load(blob_cascade_xml(0.5, 0.0), dir);
    CHECK(model.window_w == 24);
    CHECK(model.window_h == 24);
    REQUIRE(model.stages.size() == 1);
    REQUIRE(model.stages[0].weak.size() == 1);
    CHECK(model.stages[0].weak[0].rects.size() == 2);
    CHECK(model.stages[0].weak[0].rects[1].weight == doctest::Approx(-9.0));
}

TEST_CASE("load_cascade rejects a feature rectangle at the window edge") {
    test_util::TempDir dir("cascade_oob");
    std::string xml = blob_cascade_xml(0.5, 0.0);
    // move the inner rect so it pokes past the 24-px window
    const auto pos = xml.find("<_>8 8 8 8 -9.0</_>");
    REQUIRE(pos != std::string::npos);
    xml.replace(pos, std::string("<_>8 8 8 8 -9.0</_>").size(), "<_>24 8 8 8 -9.0</_>");
    std::ofstream(dir.file("bad.xml")) << xml;
    try {
        load_cascade(dir.file("bad.xml"));
        FAIL("expected validation error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::cascade_invalid);
    }
}

TEST_CASE("load_cascade rejects empty stages") {
    test_util::TempDir dir("cascade_empty");
    std::ofstream(dir.file("empty.xml")) << R"(<?xml version="1.0"?>
<opencv_storage>
<c type_id="opencv-haar-classifier"><size>24 24</size><stages></stages></c>
</opencv_storage>)";
    try {
        load_cascade(dir.file("empty.xml"));
        FAIL("expected validation error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::cascade_invalid);
    }
}

TEST_CASE("detect_nose degenerate cascades") {
    test_util::TempDir dir("degenerate");
    auto gen = test_util::rng(23);
    const GrayImage img = test_util::random_image(48, 48, gen);

    // stump threshold so low every window passes
    const CascadeModel always = write_and_load(blob_cascade_xml(-1e9, 0.0), dir, "always.xml");
    const auto hit = detect_nose(img, always, 1.1, 1);
    REQUIRE(hit.has_value());
    CHECK(hit->rect.fits_in(img));

    // unreachable stage threshold
    const CascadeModel never = write_and_load(blob_cascade_xml(0.5, 1e9), dir, "never.xml");
    CHECK_FALSE(detect_nose(img, never, 1.1, 1).has_value());
}

TEST_CASE("detect_nose finds a dark centered blob within 2 px") {
    test_util::TempDir dir("blob");
    const CascadeModel model = write_and_load(blob_cascade_xml(1.0, 0.5), dir);
    const GrayImage img = blob_image(64, 64, 32, 30);
    const auto hit = detect_nose(img, model, 1.1, 2);
    REQUIRE(hit.has_value());
    const double centroid_x = hit->rect.x0 + hit->rect.w / 2.0;
    const double centroid_y = hit->rect.y0 + hit->rect.h / 2.0;
    CHECK(std::abs(centroid_x - 32.0) <= 2.0);
    CHECK(std::abs(centroid_y - 30.0) <= 2.0);
}

TEST_CASE("detect_nose is translation-consistent") {
    test_util::TempDir dir("translate");
    const CascadeModel model = write_and_load(blob_cascade_xml(1.0, 0.5), dir);
    const auto base = detect_nose(blob_image(64, 64, 28, 28), model, 1.1, 2);
    REQUIRE(base.has_value());
    for (const auto [dx, dy] : {std::pair{4, 0}, {0, 5}, {6, 6}}) {
        const auto shifted = detect_nose(blob_image(64, 64, 28 + dx, 28 + dy), model, 1.1, 2);
        REQUIRE(shifted.has_value());
        CHECK(std::abs(shifted->rect.x0 - base->rect.x0 - dx) <= 1);
        CHECK(std::abs(shifted->rect.y0 - base->rect.y0 - dy) <= 1);
    }
}

TEST_CASE("detect_nose rejects images smaller than the base window") {
    test_util::TempDir dir("small");
    const CascadeModel model = write_and_load(blob_cascade_xml(0.5, 0.0), dir);
    CHECK_THROWS_AS(detect_nose(GrayImage(10, 10, 0.5), model), Error);
}

TEST_CASE("mirror_search_axis on an exactly symmetric image") {
    const GrayImage face = test_util::symmetric_face(180, 200, 31);
    const SymmetryAxis axis = mirror_search_axis(face);
    CHECK(axis.column == 90.0);
    CHECK(axis.confidence >= 1.0 - 1e-6);
    CHECK(axis.method == AxisMethod::mirror_search);
}

TEST_CASE("mirror_search_axis errors on a constant image") {
    try {
        mirror_search_axis(GrayImage(64, 32, 0.3));
        FAIL("expected zero variance");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::zero_variance);
    }
}

TEST_CASE("mirror_search_axis locates a noisy off-center mirror within 1 px") {
    auto gen = test_util::rng(33);
    // build a 64-wide image mirrored about the boundary at column 20
    GrayImage img = test_util::random_image(64, 40, gen);
    for (int y = 0; y < 40; ++y)
        for (int s = 0; s < 20; ++s) img.at(20 + s, y) = img.at(19 - s, y);
    std::normal_distribution<double> noise(0.0, 0.01);
    for (double& v : img.data) v = std::clamp(v + noise(gen), 0.0, 1.0);
    const SymmetryAxis axis = mirror_search_axis(img, 10, 40);
    CHECK(std::abs(axis.column - 20.0) <= 1.0);
}

TEST_CASE("mirror symmetry property on randomized symmetric images") {
    for (uint64_t seed : {101ull, 102ull, 103ull}) {
        const GrayImage face = test_util::symmetric_face(120, 80, seed);
        const SymmetryAxis axis = mirror_search_axis(face);
        CHECK(axis.column == 60.0);
        CHECK(axis.confidence >= 1.0 - 1e-6);
    }
}

TEST_CASE("axis_from_nose arithmetic") {
    CHECK(axis_from_nose({Rect{80, 60, 20, 24}, 0.0}).column == doctest::Approx(90.0));
    CHECK(axis_from_nose({Rect{0, 0, 2, 2}, 0.0}).column == doctest::Approx(1.0));
    CHECK(axis_from_nose({Rect{85, 70, 21, 25}, 0.0}).column == doctest::Approx(95.5));
}

TEST_CASE("axis_from_nose scales linearly with the box") {
    const BoundingBox bb{Rect{40, 30, 10, 12}, 0.0};
    const double col = axis_from_nose(bb).column;
    for (int s : {2, 3, 5}) {
        const BoundingBox scaled{Rect{bb.rect.x0 * s, bb.rect.y0 * s, bb.rect.w * s, bb.rect.h * s},
                                 0.0};
        CHECK(axis_from_nose(scaled).column == doctest::Approx(col * s));
    }
}
