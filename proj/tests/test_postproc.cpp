#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "moodkit/postproc/postproc.hpp"
#include "moodkit/synthdata/synthdata.hpp"
#include "moodkit/volcore/filters.hpp"

using namespace moodkit;
using namespace moodkit::postproc;

namespace {

Volume3D random_volume(Dims d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Volume3D v(d);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = u(rng);
    return v;
}

Volume3D bimodal(Dims d) {
    Volume3D v(d, 0.1f);
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = d.nx / 2; x < d.nx; ++x) v(x, y, z) = 0.9f;
    return v;
}

/// Brute-force Otsu over the 256-level histogram spanning [min, max].
double brute_otsu(const Volume3D& v) {
    const double lo = v.min(), hi = v.max();
    std::vector<double> h(256, 0.0);
    for (float x : v.values()) h[static_cast<std::size_t>(std::min(255.0, std::floor((x - lo) / (hi - lo) * 256.0)))] += 1;
    double best = -1.0;
    int cut = -1;
    for (int k = 0; k < 255; ++k) {
        double w0 = 0, w1 = 0, m0 = 0, m1 = 0;
        for (int i = 0; i <= k; ++i) {
            w0 += h[static_cast<std::size_t>(i)];
            m0 += i * h[static_cast<std::size_t>(i)];
        }
        for (int i = k + 1; i < 256; ++i) {
            w1 += h[static_cast<std::size_t>(i)];
            m1 += i * h[static_cast<std::size_t>(i)];
        }
        if (w0 == 0 || w1 == 0) continue;
        const double b = w0 * w1 * std::pow(m0 / w0 - m1 / w1, 2);
        if (b > best) {
            best = b;
            cut = k;
        }
    }
    return lo + (cut + 1) * (hi - lo) / 256.0;
}

} // namespace

TEST_CASE("Otsu threshold of a bimodal volume") {
    const auto v = bimodal(Dims{16, 16, 16});
    const auto o = otsu_threshold(v);
    REQUIRE(o.defined);
    CHECK(o.threshold > 0.1);
    CHECK(o.threshold < 0.9);
    CHECK_FALSE(otsu_threshold(Volume3D(Dims{4, 4, 4}, 0.3f)).defined);
}

TEST_CASE("Otsu agrees with brute force on a phantom") {
    const auto v = synthdata::generate_phantom(3, Dims{32, 32, 32});
    const auto o = otsu_threshold(v);
    REQUIRE(o.defined);
    // the chosen cut separates the same voxels as the brute-force cut
    const double b = brute_otsu(v);
    std::size_t diff = 0;
    for (float x : v.values()) diff += (x > o.threshold) != (x >= b);
    CHECK(diff == 0);
}

TEST_CASE("body mask covers the phantom and fills cavities") {
    const Dims d{48, 48, 48};
    Volume3D v(d);
    for (int z = 0; z < 48; ++z)
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 48; ++x) {
                const double r2 = std::pow((x - 24) / 15.0, 2) + std::pow((y - 24) / 12.0, 2) + std::pow((z - 24) / 13.0, 2);
                const double c2 = std::pow((x - 24) / 4.0, 2) + std::pow((y - 24) / 4.0, 2) + std::pow((z - 24) / 4.0, 2);
                if (r2 <= 1.0 && c2 > 1.0) v(x, y, z) = 0.8f;
            }
    const auto body = body_mask(v, PostprocConfig{});
    CHECK_FALSE(body.degenerate);
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] > 0.0f) CHECK(body.mask[i]);
    CHECK(body.mask(24, 24, 24)); // the cavity centre
}

TEST_CASE("body mask keeps the largest body only") {
    const Dims d{60, 60, 60};
    Volume3D v(d);
    for (int z = 5; z < 27; ++z) // 22^3 ~ 10^4 voxels
        for (int y = 5; y < 27; ++y)
            for (int x = 5; x < 27; ++x) v(x, y, z) = 0.7f;
    for (int z = 50; z < 55; ++z) // 5^3 ~ 10^2 voxels
        for (int y = 50; y < 55; ++y)
            for (int x = 50; x < 55; ++x) v(x, y, z) = 0.7f;
    const auto body = body_mask(v, PostprocConfig{});
    CHECK(body.mask(15, 15, 15));
    CHECK_FALSE(body.mask(52, 52, 52));
}

TEST_CASE("body mask of a constant volume is degenerate") {
    const auto body = body_mask(Volume3D(Dims{8, 8, 8}, 0.4f), PostprocConfig{});
    CHECK(body.degenerate);
    CHECK(body.mask.count() == 0);
}

TEST_CASE("body mask is invariant to halving the foreground") {
    const auto v = bimodal(Dims{20, 20, 20});
    auto half = v;
    for (std::size_t i = 0; i < half.size(); ++i)
        if (half[i] > 0.5f) half[i] *= 0.5f;
    CHECK(body_mask(v, PostprocConfig{}).mask == body_mask(half, PostprocConfig{}).mask);
}

TEST_CASE("SSIM of a volume with itself is one") {
    const auto v = random_volume(Dims{12, 10, 9}, 1);
    const auto s = ssim_map(v, v, PostprocConfig{});
    for (float x : s.values()) CHECK(x == doctest::Approx(1.0f).epsilon(1e-6));
}

TEST_CASE("SSIM of constant zero against constant one") {
    const Dims d{10, 10, 10};
    const auto s = ssim_map(Volume3D(d, 0.0f), Volume3D(d, 1.0f), PostprocConfig{});
    const double expected = 1e-4 / (1.0 + 1e-4);
    for (float x : s.values()) CHECK(std::abs(x - expected) <= 1e-9);
}

TEST_CASE("SSIM is symmetric bit for bit and bounded") {
    const auto a = random_volume(Dims{11, 13, 9}, 2);
    const auto b = random_volume(Dims{11, 13, 9}, 3);
    const auto ab = ssim_map(a, b, PostprocConfig{});
    const auto ba = ssim_map(b, a, PostprocConfig{});
    CHECK(std::memcmp(ab.values().data(), ba.values().data(), ab.size() * sizeof(float)) == 0);
    for (float x : ab.values()) {
        CHECK(x >= -1.0f);
        CHECK(x <= 1.0f);
    }
    CHECK_THROWS_AS(ssim_map(a, Volume3D(Dims{2, 2, 2}), PostprocConfig{}), InvalidArgument);
}

TEST_CASE("sigma and ball radii scale with the working grid") {
    const PostprocConfig cfg;
    CHECK(cfg.sigma_for(Dims{256, 256, 256}) == 15.0);
    CHECK(cfg.sigma_for(Dims{64, 64, 64}) == 3.75);
    CHECK(cfg.radius_for(Dims{256, 256, 256}, 5) == 5);
    CHECK(cfg.radius_for(Dims{64, 64, 64}, 5) == 1);
    CHECK(cfg.radius_for(Dims{512, 512, 512}, 5) == 10);
    CHECK(cfg.radius_for(Dims{16, 16, 16}, 5) == 1);
}

TEST_CASE("score_pixels: perfect SSIM flags nothing") {
    const Dims d{32, 32, 32};
    const BinaryMask3D body(d, true);
    CHECK(score_pixels(Volume3D(d, 1.0f), body, PostprocConfig{}).count() == 0);
}

TEST_CASE("score_pixels: a zero-SSIM ball at 256^3 is flagged around its centre") {
    const Dims d{256, 256, 256};
    Volume3D s(d, 1.0f);
    for (int z = 98; z <= 158; ++z)
        for (int y = 98; y <= 158; ++y)
            for (int x = 98; x <= 158; ++x)
                if ((x - 128) * (x - 128) + (y - 128) * (y - 128) + (z - 128) * (z - 128) <= 900) s(x, y, z) = 0.0f;
    const auto m = score_pixels(s, BinaryMask3D(d, true), PostprocConfig{});
    CHECK(m.count() > 0);
    CHECK(m(128, 128, 128));
    CHECK_FALSE(m(10, 10, 10));
}

TEST_CASE("score_pixels: a single zero voxel is diluted away") {
    const Dims d{64, 64, 64};
    Volume3D s(d, 1.0f);
    s(32, 32, 32) = 0.0f;
    CHECK(score_pixels(s, BinaryMask3D(d, true), PostprocConfig{}).count() == 0);
}

TEST_CASE("score_pixels ignores SSIM outside the body and is monotone") {
    const Dims d{32, 32, 32};
    BinaryMask3D body(d);
    for (int z = 8; z < 24; ++z)
        for (int y = 8; y < 24; ++y)
            for (int x = 8; x < 24; ++x) body.set(x, y, z, true);
    Volume3D outside(d, 0.0f);
    for (std::size_t i = 0; i < outside.size(); ++i)
        if (body[i]) outside[i] = 1.0f;
    CHECK(score_pixels(outside, body, PostprocConfig{}).count() == 0);

    auto s = random_volume(d, 5);
    const auto before = score_pixels(s, body, PostprocConfig{});
    for (std::size_t i = 0; i < s.size(); i += 7) s[i] *= 0.5f;
    const auto after = score_pixels(s, body, PostprocConfig{});
    for (std::size_t i = 0; i < s.size(); ++i)
        if (before[i]) CHECK(after[i]);
    for (std::size_t i = 0; i < s.size(); ++i)
        if (after[i]) CHECK(body[i]);
}

TEST_CASE("finalize applies the any-voxel rule and upsamples") {
    const BinaryMask3D empty(Dims{8, 8, 8});
    const auto r0 = finalize(empty, Dims{8, 8, 8});
    CHECK(r0.sample_score == 0);
    CHECK(r0.pixel_mask == empty);

    BinaryMask3D one(Dims{8, 8, 8});
    one.set(3, 4, 5, true);
    const auto same = finalize(one, Dims{8, 8, 8});
    CHECK(same.pixel_mask == one);
    const auto up = finalize(one, Dims{16, 16, 16});
    CHECK(up.sample_score == 1);
    CHECK(up.pixel_mask.count() >= 1);
    CHECK(up.diagnostics.voxels_flagged == up.pixel_mask.count());
}
