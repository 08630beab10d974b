#include <doctest.h>

#include "moodkit/volcore/morphology.hpp"

using namespace moodkit::volcore;

namespace {

BinaryMask3D cube(Dims d, int x0, int y0, int z0, int edge) {
    BinaryMask3D m(d);
    for (int z = z0; z < z0 + edge; ++z)
        for (int y = y0; y < y0 + edge; ++y)
            for (int x = x0; x < x0 + edge; ++x) m.set(x, y, z, true);
    return m;
}

} // namespace

TEST_CASE("ball offsets are the lattice points of the ball") {
    CHECK(ball_offsets(0).size() == 1);
    CHECK(ball_offsets(1).size() == 7);
    std::size_t brute = 0;
    for (int z = -5; z <= 5; ++z)
        for (int y = -5; y <= 5; ++y)
            for (int x = -5; x <= 5; ++x) brute += x * x + y * y + z * z <= 25;
    CHECK(ball_offsets(5).size() == brute);
}

TEST_CASE("dilation of a point is a ball, erosion undoes it") {
    BinaryMask3D m(Dims{21, 21, 21});
    m.set(10, 10, 10, true);
    const auto d = dilate_ball(m, 4);
    CHECK(d.count() == ball_offsets(4).size());
    CHECK(erode_ball(d, 4) == m);
}

TEST_CASE("erosion treats outside as foreground") {
    const BinaryMask3D full(Dims{6, 6, 6}, true);
    CHECK(erode_ball(full, 2) == full);
    CHECK(erode_cube(full, 4) == full);
}

TEST_CASE("closing bridges a one-voxel gap between two blocks") {
    const Dims d{24, 20, 20};
    const auto m = mask_or(cube(d, 2, 4, 4, 8), cube(d, 11, 4, 4, 8));
    CHECK_FALSE(m(10, 8, 8));
    const auto c = close_ball(m, 2);
    CHECK(c(10, 8, 8));
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i]) CHECK(c[i]);
}

TEST_CASE("cube opening keeps cubes of the element size and removes smaller objects") {
    const Dims d{20, 20, 20};
    const auto big = cube(d, 2, 2, 2, 6);
    CHECK(open_cube(big, 6) == big);
    const auto small = cube(d, 10, 10, 10, 5);
    CHECK(open_cube(small, 6).count() == 0);
    BinaryMask3D scattered(d);
    for (int i = 0; i < 20; i += 3) scattered.set(i, (i * 7) % 20, (i * 11) % 20, true);
    CHECK(open_cube(scattered, 6).count() == 0);
    CHECK(open_cube(mask_or(big, small), 6) == big);
}

TEST_CASE("opening is anti-extensive") {
    auto m = cube(Dims{24, 24, 24}, 3, 3, 3, 10);
    m.set(20, 20, 20, true);
    m.set(14, 5, 5, true);
    const auto o = open_cube(m, 6);
    for (std::size_t i = 0; i < m.size(); ++i)
        if (o[i]) CHECK(m[i]);
}

TEST_CASE("26-connected components") {
    BinaryMask3D m(Dims{10, 10, 10});
    m.set(1, 1, 1, true);
    m.set(2, 2, 2, true); // diagonal neighbour: same component
    m.set(7, 7, 7, true);
    const auto c = label_components(m);
    REQUIRE(c.sizes.size() == 2);
    CHECK(c.sizes[0] == 2);
    CHECK(c.sizes[1] == 1);
}

TEST_CASE("largest component keeps the bigger body") {
    const Dims d{40, 40, 40};
    const auto big = cube(d, 2, 2, 2, 22);   // ~10^4 voxels
    const auto small = cube(d, 30, 30, 30, 5); // ~10^2 voxels
    CHECK(largest_component(mask_or(big, small)) == big);
}

TEST_CASE("hole filling closes an interior cavity only") {
    auto m = cube(Dims{16, 16, 16}, 2, 2, 2, 10);
    const auto solid = m;
    for (int z = 5; z < 8; ++z)
        for (int y = 5; y < 8; ++y)
            for (int x = 5; x < 8; ++x) m.set(x, y, z, false);
    CHECK(fill_holes(m) == solid);
    // a channel to the border keeps the region open
    auto open = m;
    for (int x = 0; x < 8; ++x) open.set(x, 6, 6, false);
    CHECK(fill_holes(open) == open);
}
