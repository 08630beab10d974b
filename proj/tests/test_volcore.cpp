#include <doctest.h>

#include <cmath>
#include <random>

#include "moodkit/volcore/filters.hpp"
#include "moodkit/volcore/manifest.hpp"
#include "moodkit/volcore/volume.hpp"

using namespace moodkit;
using namespace moodkit::volcore;

namespace {

Volume3D random_volume(Dims d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Volume3D v(d);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = u(rng);
    return v;
}

} // namespace

TEST_CASE("normalize rescales affinely") {
    Volume3D v(Dims{3, 1, 1}, std::vector<float>{0.0f, 5.0f, 10.0f});
    const auto n = normalize(v);
    CHECK(n[0] == 0.0f);
    CHECK(n[1] == 0.5f);
    CHECK(n[2] == 1.0f);
}

TEST_CASE("normalize maps a constant volume to zeros") {
    const auto n = normalize(Volume3D(Dims{4, 4, 4}, 7.0f));
    for (float x : n.values()) CHECK(x == 0.0f);
}

TEST_CASE("normalize leaves a [0,1] volume with min 0 and max 1 unchanged") {
    auto v = random_volume(Dims{6, 5, 4}, 3);
    v[0] = 0.0f;
    v[1] = 1.0f;
    CHECK(normalize(v) == v);
}

TEST_CASE("normalize is idempotent") {
    auto v = random_volume(Dims{7, 7, 7}, 11);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 3.0f * v[i] - 1.3f;
    const auto once = normalize(v);
    CHECK(normalize(once) == once);
}

TEST_CASE("normalize rejects an empty volume") { CHECK_THROWS_AS(normalize(Volume3D{}), InvalidVolume); }

TEST_CASE("resample to the same dims is the identity") {
    const auto v = random_volume(Dims{9, 8, 7}, 5);
    const auto r = resample_trilinear(v, v.dims());
    REQUIRE(r.dims() == v.dims());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(r[i] - v[i]) <= 1e-6f);
}

TEST_CASE("resample of a constant volume is constant") {
    const Volume3D v(Dims{8, 8, 8}, 0.37f);
    for (Dims t : {Dims{3, 5, 7}, Dims{16, 16, 16}, Dims{1, 1, 1}}) {
        const auto r = resample_trilinear(v, t);
        REQUIRE(r.dims() == t);
        for (float x : r.values()) CHECK(x == doctest::Approx(0.37f).epsilon(1e-6));
    }
}

TEST_CASE("resample halves a 32^3 grid and stays within the input range") {
    const auto v = random_volume(Dims{32, 32, 32}, 9);
    const auto r = resample_trilinear(v, Dims{16, 16, 16});
    CHECK(r.dims() == Dims{16, 16, 16});
    CHECK(r.min() >= v.min());
    CHECK(r.max() <= v.max());
}

TEST_CASE("resample uses cell-centre alignment") {
    // Halving a linear ramp: output cell i covers input cells 2i and 2i+1, centre at 2i + 0.5.
    Volume3D v(Dims{8, 1, 1});
    for (int x = 0; x < 8; ++x) v(x, 0, 0) = static_cast<float>(x);
    const auto r = resample_trilinear(v, Dims{4, 1, 1});
    for (int x = 0; x < 4; ++x) CHECK(r(x, 0, 0) == doctest::Approx(2.0 * x + 0.5));
}

TEST_CASE("resample rejects non-positive target dims") {
    CHECK_THROWS_AS(resample_trilinear(Volume3D(Dims{2, 2, 2}), Dims{0, 2, 2}), InvalidArgument);
}

TEST_CASE("nearest mask upsampling of one voxel gives a 2x2x2 block") {
    BinaryMask3D m(Dims{4, 4, 4});
    m.set(1, 2, 3, true);
    const auto up = resample_mask_nearest(m, Dims{8, 8, 8});
    CHECK(up.count() == 8);
    for (int z = 6; z < 8; ++z)
        for (int y = 4; y < 6; ++y)
            for (int x = 2; x < 4; ++x) CHECK(up(x, y, z));
}

TEST_CASE("nearest mask resampling keeps all-false and all-true") {
    const auto f = resample_mask_nearest(BinaryMask3D(Dims{5, 5, 5}, false), Dims{9, 3, 12});
    CHECK(f.count() == 0);
    const auto t = resample_mask_nearest(BinaryMask3D(Dims{5, 5, 5}, true), Dims{9, 3, 12});
    CHECK(t.count() == t.size());
    for (auto b : t.bytes()) CHECK((b == 0 || b == 1));
}

TEST_CASE("dice of overlapping masks") {
    BinaryMask3D a(Dims{4, 1, 1}), b(Dims{4, 1, 1});
    a.set(0, true);
    a.set(1, true);
    b.set(1, true);
    b.set(2, true);
    CHECK(dice(a, b) == doctest::Approx(0.5));
    CHECK(dice(BinaryMask3D(Dims{2, 2, 2}), BinaryMask3D(Dims{2, 2, 2})) == 1.0);
}

TEST_CASE("gaussian kernel is normalized and symmetric") {
    const auto k = gaussian_kernel(1.5);
    double s = 0.0;
    for (double x : k) s += x;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(k.size() % 2 == 1);
    for (std::size_t i = 0; i < k.size(); ++i) CHECK(k[i] == k[k.size() - 1 - i]);
    CHECK(k.size() == 2 * 6 + 1); // truncate at 4 sigma: radius ceil(6)
}

TEST_CASE("gaussian filter preserves constants and interior mass") {
    const auto c = gaussian_filter(Volume3D(Dims{10, 10, 10}, 0.25f), 2.0);
    for (float x : c.values()) CHECK(x == doctest::Approx(0.25f).epsilon(1e-6));

    Volume3D v(Dims{24, 24, 24});
    v(12, 12, 12) = 1.0f;
    v(11, 13, 12) = 0.5f;
    const auto g = gaussian_filter(v, 2.0);
    CHECK(g.sum() == doctest::Approx(v.sum()).epsilon(1e-5));
}

TEST_CASE("box mean of a constant field is that constant") {
    const Dims d{5, 6, 7};
    std::vector<double> f(d.count(), 2.5);
    for (double x : box_mean(f, d, 3)) CHECK(x == doctest::Approx(2.5));
}

TEST_CASE("manifest round trip and validation") {
    DatasetManifest m;
    ManifestEntry a;
    a.path = "a.rvol";
    a.split = Split::train;
    ManifestEntry b;
    b.path = "b.rvol";
    b.mask = "b_mask.rvol";
    b.label = Label::blur;
    b.severity = Severity::high;
    b.seed = 42;
    b.parameter = 4.0;
    m.entries = {a, b};
    const auto dir = std::filesystem::temp_directory_path() / "moodkit_test_manifest";
    std::filesystem::create_directories(dir);
    write_manifest(m, dir / "manifest.json");
    const auto r = read_manifest(dir / "manifest.json");
    REQUIRE(r.entries.size() == 2);
    CHECK(r.entries[1].label == Label::blur);
    CHECK(r.entries[1].severity == Severity::high);
    CHECK(r.entries[1].seed == 42);
    CHECK(r.entries[1].parameter == 4.0);
    CHECK(r.entries[0].split == Split::train);
    CHECK(r.filter(Split::train).size() == 1);
    CHECK(resolve_entry_path(dir / "manifest.json", "a.rvol") == dir / "a.rvol");

    DatasetManifest dup;
    dup.entries = {a, a};
    CHECK_THROWS_AS(dup.validate(), FormatError);
    DatasetManifest no_mask;
    b.mask.clear();
    no_mask.entries = {b};
    CHECK_THROWS_AS(no_mask.validate(), FormatError);
    std::filesystem::remove_all(dir);
}
