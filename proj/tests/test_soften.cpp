#include <doctest.h>

#include "softseg/soften.hpp"

#include <cmath>

#include "oracles.hpp"

using namespace softseg;

namespace {

LabelMap labels_from(AxisSizes dims, std::vector<std::int32_t> values, std::int32_t classes) {
    LabelMap map;
    map.num_classes = classes;
    map.labels = Grid<std::int32_t>(dims, 0);
    for (std::size_t i = 0; i < values.size(); ++i) map.labels[i] = values[i];
    return map;
}

// superpixels = connected components of the annotation itself
SuperpixelMap components_of(const LabelMap& map) {
    SlicParams params;
    params.target_count = map.labels.size();  // keep every component
    return enforce_connectivity(map.labels, params);
}

SuperpixelMap single_block(AxisSizes dims) {
    SuperpixelMap sp;
    sp.block_ids = Grid<std::int32_t>(dims, 0);
    sp.num_blocks = 1;
    return sp;
}

}  // namespace

TEST_CASE("dist_to_prob hits the anchor values") {
    CHECK(dist_to_prob(0.0) == 0.5);
    CHECK(dist_to_prob(1.0) == 0.75);
    CHECK(dist_to_prob(-1.0) == 0.25);
    CHECK(dist_to_prob(3.0) == 0.875);
    CHECK(dist_to_prob(-3.0) == 0.125);
}

TEST_CASE("dist_to_prob is strictly increasing and symmetric about 0.5") {
    oracles::TestRng rng(17);
    for (int i = 0; i < 1000; ++i) {
        const double d = rng.uniform(-20.0, 20.0);
        CHECK(dist_to_prob(d) + dist_to_prob(-d) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(dist_to_prob(d) > 0.0);
        CHECK(dist_to_prob(d) < 1.0);
        const double d2 = d + rng.uniform(0.0, 3.0) + 1e-9;
        CHECK(dist_to_prob(d2) > dist_to_prob(d));
    }
}

TEST_CASE("classify_relation matches the set-containment definitions") {
    Grid<std::uint8_t> plane({2, 2}, 0);
    const std::vector<std::size_t> block{0, 1};
    CHECK(classify_relation(std::span<const std::size_t>(block), plane) == Relation::Outside);
    plane[0] = plane[1] = plane[2] = plane[3] = 1;
    CHECK(classify_relation(std::span<const std::size_t>(block), plane) == Relation::Inside);
    plane[0] = 0;
    CHECK(classify_relation(std::span<const std::size_t>(block), plane) == Relation::Intersect);
    CHECK_THROWS_AS(classify_relation(std::span<const std::size_t>{}, plane),
                    std::invalid_argument);
}

TEST_CASE("soften on the 1x6 row with one covering superpixel") {
    const LabelMap map = labels_from({1, 6}, {0, 0, 1, 1, 1, 0}, 2);
    const OneHotStack hard = one_hot_encode(map);
    const SoftLabelStack soft = soften(hard, single_block({1, 6}), /*normalize=*/false);
    const std::vector<double> want1{1.0 / 6.0, 0.25, 0.5, 0.75, 0.5, 0.25};
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(soft.planes[1][i] == doctest::Approx(want1[i]).epsilon(1e-12));
    // class 0 softens against its own foreground {0, 1, 5}
    const std::vector<double> want0{0.75, 0.5, 0.25, 1.0 / 6.0, 0.25, 0.5};
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(soft.planes[0][i] == doctest::Approx(want0[i]).epsilon(1e-12));

    const SoftLabelStack norm = soften(hard, single_block({1, 6}), /*normalize=*/true);
    for (std::size_t i = 0; i < 6; ++i) {
        double sum = 0.0;
        for (const auto& p : norm.planes) sum += p[i];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("degeneration: component-aligned superpixels reproduce the hard stack bit-for-bit") {
    oracles::TestRng rng(404);
    for (int trial = 0; trial < 5; ++trial) {
        LabelMap map;
        map.num_classes = 3;
        map.labels = Grid<std::int32_t>({12, 12}, 0);
        // a few rectangles so components are non-trivial
        for (int r = 0; r < 3; ++r) {
            const std::size_t y0 = rng.index(8), x0 = rng.index(8);
            const std::size_t h = 2 + rng.index(4), w = 2 + rng.index(4);
            const auto cls = static_cast<std::int32_t>(1 + rng.index(2));
            for (std::size_t y = y0; y < std::min<std::size_t>(12, y0 + h); ++y)
                for (std::size_t x = x0; x < std::min<std::size_t>(12, x0 + w); ++x)
                    map.labels[y * 12 + x] = cls;
        }
        const OneHotStack hard = one_hot_encode(map);
        const SoftLabelStack soft = soften(hard, components_of(map), /*normalize=*/true);
        CHECK(soft.normalized);
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < map.labels.size(); ++i)
                CHECK(soft.planes[c][i] == static_cast<double>(hard.planes[c][i]));
    }
}

TEST_CASE("one superpixel per pixel degenerates soft labels to hard labels") {
    // constant image: seeds land on every pixel and stay, so each block is a
    // single pixel and no block can intersect a boundary
    const Grid<double> image({10, 10}, 0.5);
    SlicParams params;
    params.target_count = 100;
    const SuperpixelMap sp = slic_segment(image, params);
    REQUIRE(sp.num_blocks == 100);
    oracles::TestRng rng(66);
    LabelMap map;
    map.num_classes = 3;
    map.labels = Grid<std::int32_t>({10, 10}, 0);
    for (std::size_t i = 0; i < 100; ++i)
        map.labels[i] = static_cast<std::int32_t>(rng.index(3));
    const OneHotStack hard = one_hot_encode(map);
    const SoftLabelStack soft = soften(hard, sp, /*normalize=*/true);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < 100; ++i)
            CHECK(soft.planes[c][i] == static_cast<double>(hard.planes[c][i]));
}

TEST_CASE("locality: values change only inside Intersect blocks") {
    oracles::TestRng rng(2025);
    Grid<double> image({16, 16}, 0.0);
    for (std::size_t i = 0; i < image.size(); ++i) image[i] = rng.uniform();
    SlicParams params;
    params.target_count = 8;
    const SuperpixelMap sp = slic_segment(image, params);
    LabelMap map;
    map.num_classes = 2;
    map.labels = Grid<std::int32_t>({16, 16}, 0);
    for (std::size_t y = 5; y < 12; ++y)
        for (std::size_t x = 3; x < 10; ++x) map.labels[y * 16 + x] = 1;
    const OneHotStack hard = one_hot_encode(map);
    const SoftLabelStack soft = soften(hard, sp, /*normalize=*/false);

    const auto blocks = collect_block_pixels(sp);
    for (std::size_t c = 0; c < 2; ++c) {
        for (const auto& block : blocks) {
            const Relation rel =
                classify_relation(std::span<const std::size_t>(block), hard.planes[c]);
            for (std::size_t p : block) {
                if (rel == Relation::Intersect) {
                    // consistency with the sign of the distance
                    if (hard.planes[c][p])
                        CHECK(soft.planes[c][p] >= 0.5);
                    else
                        CHECK(soft.planes[c][p] < 0.5);
                } else {
                    CHECK(soft.planes[c][p] == static_cast<double>(hard.planes[c][p]));
                }
                CHECK(soft.planes[c][p] >= 0.0);
                CHECK(soft.planes[c][p] <= 1.0);
            }
        }
    }
}

TEST_CASE("soften rejects dimension mismatches") {
    const LabelMap map = labels_from({1, 6}, {0, 0, 1, 1, 1, 0}, 2);
    const OneHotStack hard = one_hot_encode(map);
    CHECK_THROWS_AS(soften(hard, single_block({1, 7}), true), std::invalid_argument);
}

TEST_CASE("gaussian_soften with a sub-pixel sigma is the identity") {
    const LabelMap map = labels_from({2, 3}, {0, 1, 1, 0, 0, 1}, 2);
    const OneHotStack hard = one_hot_encode(map);
    const SoftLabelStack soft = gaussian_soften(hard, 0.1);  // radius floor(0.3) = 0
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < 6; ++i)
            CHECK(soft.planes[c][i] == static_cast<double>(hard.planes[c][i]));
}

TEST_CASE("gaussian_soften keeps constant planes constant") {
    const LabelMap map = labels_from({4, 4}, std::vector<std::int32_t>(16, 0), 2);
    const SoftLabelStack soft = gaussian_soften(one_hot_encode(map), 1.5);
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK(soft.planes[0][i] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(soft.planes[1][i] == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("gaussian_soften matches the dense convolution oracle") {
    SUBCASE("1D step edge") {
        const std::size_t n = 20;
        std::vector<std::int32_t> row(n, 0);
        for (std::size_t i = 10; i < n; ++i) row[i] = 1;
        const LabelMap map = labels_from({1, n}, row, 2);
        const OneHotStack hard = one_hot_encode(map);
        const SoftLabelStack soft = gaussian_soften(hard, 1.0);
        for (std::size_t c = 0; c < 2; ++c) {
            Grid<double> plane({1, n}, 0.0);
            for (std::size_t i = 0; i < n; ++i) plane[i] = hard.planes[c][i] ? 1.0 : 0.0;
            const Grid<double> want = oracles::dense_gaussian_conv(plane, 1.0);
            // for C=2 the blurred planes already sum to 1, so the cross-class
            // renormalization changes nothing beyond rounding
            for (std::size_t i = 0; i < n; ++i)
                CHECK(soft.planes[c][i] == doctest::Approx(want[i]).epsilon(1e-9));
        }
    }
    SUBCASE("2D random plane against the full product kernel") {
        oracles::TestRng rng(31);
        LabelMap map;
        map.num_classes = 2;
        map.labels = Grid<std::int32_t>({9, 7}, 0);
        for (std::size_t i = 0; i < map.labels.size(); ++i)
            map.labels[i] = rng.uniform() < 0.5 ? 1 : 0;
        const OneHotStack hard = one_hot_encode(map);
        const SoftLabelStack soft = gaussian_soften(hard, 1.3);
        Grid<double> plane({9, 7}, 0.0);
        for (std::size_t i = 0; i < plane.size(); ++i)
            plane[i] = hard.planes[1][i] ? 1.0 : 0.0;
        const Grid<double> want = oracles::dense_gaussian_conv(plane, 1.3);
        for (std::size_t i = 0; i < plane.size(); ++i)
            CHECK(soft.planes[1][i] == doctest::Approx(want[i]).epsilon(1e-9));
    }
}

TEST_CASE("gaussian_soften output planes sum to one") {
    oracles::TestRng rng(8);
    LabelMap map;
    map.num_classes = 3;
    map.labels = Grid<std::int32_t>({8, 8}, 0);
    for (std::size_t i = 0; i < map.labels.size(); ++i)
        map.labels[i] = static_cast<std::int32_t>(rng.index(3));
    const SoftLabelStack soft = gaussian_soften(one_hot_encode(map), 2.0);
    CHECK(soft.normalized);
    for (std::size_t i = 0; i < map.labels.size(); ++i) {
        double sum = 0.0;
        for (const auto& p : soft.planes) sum += p[i];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}
