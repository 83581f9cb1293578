#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "halfface/image.hpp"
#include "halfface/image_io.hpp"
#include "test_util.hpp"

using namespace halfface;

TEST_CASE("P5 load scales bytes to [0, 1]") {
    test_util::TempDir dir("p5");
    {
        std::ofstream out(dir.file("a.pgm"), std::ios::binary);
        out << "P5\n2 2\n255\n";
        const unsigned char bytes[4] = {0, 255, 128, 64};
        out.write(reinterpret_cast<const char*>(bytes), 4);
    }
    const GrayImage img = load_image(dir.file("a.pgm"));
    CHECK(img.width == 2);
    CHECK(img.height == 2);
    CHECK(img.data[0] == doctest::Approx(0.0));
    CHECK(img.data[1] == doctest::Approx(1.0));
    CHECK(img.data[2] == doctest::Approx(128.0 / 255.0));
    CHECK(img.data[3] == doctest::Approx(64.0 / 255.0));
}

TEST_CASE("P2 load and maxval handling") {
    test_util::TempDir dir("p2");
    {
        std::ofstream out(dir.file("a.pgm"));
        out << "P2\n# comment\n3 1\n100\n0 50 100\n";
    }
    const GrayImage img = load_image(dir.file("a.pgm"));
    CHECK(img.width == 3);
    CHECK(img.data[1] == doctest::Approx(0.5));
    CHECK(img.data[2] == doctest::Approx(1.0));
}

TEST_CASE("truncated P5 payload is a corrupt-payload error") {
    test_util::TempDir dir("trunc");
    {
        std::ofstream out(dir.file("bad.pgm"), std::ios::binary);
        out << "P5\n2 2\n255\n";
        const unsigned char bytes[3] = {0, 1, 2}; // 3 of 4 pixels
        out.write(reinterpret_cast<const char*>(bytes), 3);
    }
    try {
        load_image(dir.file("bad.pgm"));
        FAIL("expected corrupt payload");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::corrupt_payload);
    }
}

TEST_CASE("missing file and unsupported format are distinct errors") {
    test_util::TempDir dir("errors");
    try {
        load_image(dir.file("nope.pgm"));
        FAIL("expected missing file");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::missing_file);
    }
    {
        std::ofstream out(dir.file("junk.bin"), std::ios::binary);
        out << "XYZW garbage";
    }
    try {
        load_image(dir.file("junk.bin"));
        FAIL("expected unsupported format");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::unsupported_format);
    }
}

TEST_CASE("save/load round trip stays within 8-bit quantization: PGM and PNG") {
    test_util::TempDir dir("roundtrip");
    auto gen = test_util::rng(7);
    const GrayImage img = test_util::random_image(13, 9, gen);
    for (const char* name : {"img.pgm", "img.png"}) {
        save_image(img, dir.file(name));
        const GrayImage back = load_image(dir.file(name));
        REQUIRE(back.same_geometry(img));
        for (size_t i = 0; i < img.size(); ++i)
            CHECK(std::abs(back.data[i] - img.data[i]) <= 1.0 / 510.0 + 1e-12);
    }
}

TEST_CASE("constant 0.5 quantizes to code 128 (round-half-up)") {
    test_util::TempDir dir("half");
    save_image(GrayImage(2, 2, 0.5), dir.file("half.pgm"));
    std::ifstream in(dir.file("half.pgm"), std::ios::binary);
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE(all.substr(0, 11) == "P5\n2 2\n255\n");
    for (int i = 0; i < 4; ++i)
        CHECK(static_cast<unsigned char>(all[11 + i]) == 128);
}

TEST_CASE("unwritable path raises io error") {
    CHECK_THROWS_AS(save_image(GrayImage(2, 2, 0.1), "/nonexistent_dir_zzz/out.pgm"), Error);
}

TEST_CASE("PNG RGB inputs reduce to BT.601 luminance") {
    test_util::TempDir dir("rgbpng");
    // hand-rolled RGB png via libpng is covered by the encoder; here we just
    // confirm a gray png written by us loads as gray
    const GrayImage img(4, 3, 0.25);
    save_image(img, dir.file("gray.png"));
    const GrayImage back = load_image(dir.file("gray.png"));
    CHECK(back.data[0] == doctest::Approx(64.0 / 255.0).epsilon(1e-9));
}

TEST_CASE("crop basics") {
    auto gen = test_util::rng(11);
    const GrayImage img = test_util::random_image(4, 4, gen);

    const GrayImage full = crop(img, Rect{0, 0, 4, 4});
    CHECK(full == img);

    const GrayImage left = crop(img, Rect{0, 0, 2, 4});
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 2; ++x) CHECK(left.at(x, y) == img.at(x, y));

    CHECK_THROWS_AS(crop(img, Rect{1, 0, 4, 4}), Error);
}

TEST_CASE("crop composition") {
    auto gen = test_util::rng(12);
    const GrayImage img = test_util::random_image(10, 8, gen);
    const Rect a{2, 1, 6, 5};
    const Rect b{1, 2, 3, 2};
    const GrayImage two_step = crop(crop(img, a), b);
    const GrayImage one_step = crop(img, Rect{a.x0 + b.x0, a.y0 + b.y0, b.w, b.h});
    CHECK(two_step == one_step);
}

TEST_CASE("hflip involution and definition") {
    auto gen = test_util::rng(13);
    const GrayImage img = test_util::random_image(7, 5, gen);
    CHECK(hflip(hflip(img)) == img);

    GrayImage column(1, 3);
    column.data = {0.1, 0.2, 0.3};
    CHECK(hflip(column) == column);

    GrayImage row(3, 1);
    row.data = {0.1, 0.2, 0.3};
    const GrayImage flipped = hflip(row);
    CHECK(flipped.data[0] == 0.3);
    CHECK(flipped.data[1] == 0.2);
    CHECK(flipped.data[2] == 0.1);
}

TEST_CASE("photometric_normalize degenerate, definition and idempotence") {
    CHECK(photometric_normalize(GrayImage(3, 3, 0.7)) == GrayImage(3, 3, 0.5));

    GrayImage two(2, 1);
    two.data = {0.2, 0.8};
    const GrayImage n = photometric_normalize(two);
    CHECK(n.data[0] == doctest::Approx(0.0));
    CHECK(n.data[1] == doctest::Approx(1.0));

    auto gen = test_util::rng(14);
    const GrayImage img = test_util::random_image(9, 9, gen);
    const GrayImage once = photometric_normalize(img);
    const GrayImage twice = photometric_normalize(once);
    for (size_t i = 0; i < once.size(); ++i) {
        CHECK(std::abs(once.data[i] - twice.data[i]) < 1e-9);
        CHECK(once.data[i] >= 0.0);
        CHECK(once.data[i] <= 1.0);
    }
}

TEST_CASE("hflip preserves the pixel multiset") {
    auto gen = test_util::rng(15);
    const GrayImage img = test_util::random_image(6, 4, gen);
    auto a = img.data;
    auto b = hflip(img).data;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
}
