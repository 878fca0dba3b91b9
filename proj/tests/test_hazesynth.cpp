#include <doctest.h>

#include <cmath>

#include "hazediff/hazesynth.hpp"

using namespace hazediff;

TEST_CASE("apply_asm composes the scattering model") {
    HazeScene scene;
    scene.clear = PixelImage(1, 2, 3);
    for (int c = 0; c < 3; ++c) {
        scene.clear.at(0, 0, c) = 0.2;
        scene.clear.at(0, 1, c) = 0.9;
    }
    scene.tmap = TransmissionMap(1, 2);
    scene.tmap.at(0, 0) = 0.5;
    scene.tmap.at(0, 1) = 0.25;
    scene.airlight = 0.8;

    const PixelImage hazy = apply_asm(scene);
    CHECK(hazy.at(0, 0, 0) == doctest::Approx(0.2 * 0.5 + 0.8 * 0.5).epsilon(1e-15));
    CHECK(hazy.at(0, 1, 0) == doctest::Approx(0.9 * 0.25 + 0.8 * 0.75).epsilon(1e-15));
    CHECK_NOTHROW(hazy.validate());

    HazeScene bad = scene;
    bad.tmap = TransmissionMap(2, 2);
    CHECK_THROWS_AS(apply_asm(bad), std::invalid_argument);
    bad = scene;
    bad.airlight = 0.0;
    CHECK_THROWS_AS(apply_asm(bad), std::invalid_argument);
}

TEST_CASE("invert_asm undoes apply_asm where transmission is bounded away from zero") {
    const std::vector<HazeScene> scenes = make_toy_dataset(3, 32, 515);
    for (const HazeScene& scene : scenes) {
        const PixelImage hazy = apply_asm(scene);
        const FieldImage recovered = invert_asm(hazy, scene.tmap, scene.airlight);
        for (std::size_t i = 0; i < recovered.data.size(); ++i)
            CHECK(recovered.data[i] ==
                  doctest::Approx(scene.clear.data[i]).epsilon(1e-10));
    }

    PixelImage hazy(2, 2, 1, 0.5);
    CHECK_THROWS_AS(invert_asm(hazy, TransmissionMap(3, 2), 0.8), std::invalid_argument);
}

TEST_CASE("smooth_field is seeded, normalized, and smooth") {
    Rng rng_a(99), rng_b(99);
    const FieldImage a = smooth_field(rng_a, 48, 48);
    const FieldImage b = smooth_field(rng_b, 48, 48);
    CHECK(a.data == b.data);

    double lo = 1e300, hi = -1e300;
    for (double v : a.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo == 0.0);  // min-max normalized
    CHECK(hi == 1.0);

    // Low-frequency waves change slowly at this size, unlike noise.
    for (int y = 0; y < 48; ++y)
        for (int x = 1; x < 48; ++x)
            CHECK(std::fabs(a.at(y, x) - a.at(y, x - 1)) < 0.35);
}

TEST_CASE("make_toy_dataset produces valid, reproducible scenes") {
    const std::vector<HazeScene> scenes = make_toy_dataset(6, 32, 77);
    REQUIRE(scenes.size() == 6);
    for (const HazeScene& s : scenes) {
        REQUIRE(s.clear.height == 32);
        REQUIRE(s.clear.width == 32);
        REQUIRE(s.clear.channels == 3);
        CHECK_NOTHROW(s.clear.validate());
        CHECK(s.airlight >= 0.7);
        CHECK(s.airlight <= 0.95);
        for (double v : s.tmap.values) {
            CHECK(v >= 0.1);
            CHECK(v <= 1.0);
        }
        CHECK_NOTHROW(apply_asm(s).validate());
    }

    const std::vector<HazeScene> again = make_toy_dataset(6, 32, 77);
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        CHECK(scenes[i].clear.data == again[i].clear.data);
        CHECK(scenes[i].tmap.values == again[i].tmap.values);
        CHECK(scenes[i].airlight == again[i].airlight);
    }

    const std::vector<HazeScene> other = make_toy_dataset(1, 32, 78);
    CHECK(other[0].clear.data != scenes[0].clear.data);

    CHECK(make_toy_dataset(0, 32, 1).empty());
    CHECK_THROWS_AS(make_toy_dataset(-1, 32, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_toy_dataset(1, 8, 1), std::invalid_argument);
}
