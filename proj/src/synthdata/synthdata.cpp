#include "moodkit/synthdata/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdio>
#include <random>
#include <string>

#include "moodkit/error.hpp"
#include "moodkit/volcore/filters.hpp"
#include "moodkit/volcore/io.hpp"

namespace moodkit::synthdata {

std::string_view to_string(TransformKind k) {
    switch (k) {
    case TransformKind::elastic: return "elastic";
    case TransformKind::blur: return "blur";
    case TransformKind::bias: return "bias";
    case TransformKind::swap: return "swap";
    case TransformKind::black_slice: return "black_slice";
    case TransformKind::toy_sphere: return "toy_sphere";
    }
    return "unknown";
}

void PhantomConfig::validate() const {
    if (!std::isfinite(base_level) || !std::isfinite(radial_gain))
        throw InvalidArgument("body intensity profile must be finite");
    if (!(stripe_amplitude >= 0.0)) throw InvalidArgument("stripe amplitude must be >= 0");
    if (!(stripe_cycles > 0.0)) throw InvalidArgument("stripe cycles must be positive");
    if (!(texture_amplitude >= 0.0)) throw InvalidArgument("texture amplitude must be >= 0");
    if (!(texture_sigma_fine > 0.0) || !(texture_sigma_coarse > texture_sigma_fine))
        throw InvalidArgument("texture sigmas must satisfy 0 < fine < coarse");
}

namespace {

BinaryMask3D changed_mask(const Volume3D& before, const Volume3D& after) {
    BinaryMask3D m(before.dims());
    for (std::size_t i = 0; i < before.size(); ++i) m.set(i, std::fabs(after[i] - before[i]) > kChangeTolerance);
    return m;
}

OodSample unchanged(const Volume3D& v, TransformSpec spec) {
    return OodSample{v, BinaryMask3D(v.dims()), spec};
}

struct Box {
    std::array<int, 3> lo{};
    std::array<int, 3> hi{}; ///< inclusive
    bool empty = true;
};

Box foreground_box(const Volume3D& v) {
    Box b;
    const Dims& d = v.dims();
    b.lo = {d.nx, d.ny, d.nz};
    b.hi = {-1, -1, -1};
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                if (!(v(x, y, z) > 0.0f)) continue;
                const std::array<int, 3> p{x, y, z};
                for (int k = 0; k < 3; ++k) {
                    b.lo[k] = std::min(b.lo[k], p[k]);
                    b.hi[k] = std::max(b.hi[k], p[k]);
                }
                b.empty = false;
            }
    return b;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    // 53 random bits mapped into [0, 1); avoids implementation-defined distributions.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    // inclusive range; modulo bias is negligible for the small ranges used here
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(rng() % span);
}

double standard_normal(std::mt19937_64& rng) {
    // Box-Muller with a guard against log(0)
    const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

float trilinear(const Volume3D& v, double x, double y, double z) {
    const Dims& d = v.dims();
    x = std::clamp(x, 0.0, static_cast<double>(d.nx - 1));
    y = std::clamp(y, 0.0, static_cast<double>(d.ny - 1));
    z = std::clamp(z, 0.0, static_cast<double>(d.nz - 1));
    const int x0 = std::min(static_cast<int>(x), d.nx - 1);
    const int y0 = std::min(static_cast<int>(y), d.ny - 1);
    const int z0 = std::min(static_cast<int>(z), d.nz - 1);
    const int x1 = std::min(x0 + 1, d.nx - 1);
    const int y1 = std::min(y0 + 1, d.ny - 1);
    const int z1 = std::min(z0 + 1, d.nz - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double fz = z - z0;
    const double c00 = v(x0, y0, z0) * (1 - fx) + v(x1, y0, z0) * fx;
    const double c10 = v(x0, y1, z0) * (1 - fx) + v(x1, y1, z0) * fx;
    const double c01 = v(x0, y0, z1) * (1 - fx) + v(x1, y0, z1) * fx;
    const double c11 = v(x0, y1, z1) * (1 - fx) + v(x1, y1, z1) * fx;
    const double c0 = c00 * (1 - fy) + c10 * fy;
    const double c1 = c01 * (1 - fy) + c11 * fy;
    return static_cast<float>(c0 * (1 - fz) + c1 * fz);
}

} // namespace

Volume3D generate_phantom(std::uint64_t seed, Dims dims, const PhantomConfig& cfg) {
    cfg.validate();
    if (dims.nx < 16 || dims.ny < 16 || dims.nz < 16) throw InvalidArgument("phantom dims must be at least 16^3");
    std::mt19937_64 rng(seed);
    std::array<double, 3> centre{};
    std::array<double, 3> axes{};
    for (int k = 0; k < 3; ++k) centre[k] = 0.5 + uniform(rng, -0.04, 0.04);
    for (int k = 0; k < 3; ++k) axes[k] = uniform(rng, 0.38, 0.44);
    const double offset = uniform(rng, -0.05, 0.05);
    std::array<double, 3> lobe_centre{};
    std::array<double, 3> lobe_axes{};
    for (int k = 0; k < 3; ++k) lobe_centre[k] = centre[k] + uniform(rng, -0.05, 0.05);
    for (int k = 0; k < 3; ++k) lobe_axes[k] = axes[k] * uniform(rng, 0.25, 0.35);

    const double stripe_phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);

    std::vector<double> texture;
    double tex_scale = 0.0;
    if (cfg.texture_amplitude > 0.0) {
        Volume3D white(dims);
        for (std::size_t i = 0; i < white.size(); ++i) white[i] = static_cast<float>(standard_normal(rng));
        const Volume3D fine = volcore::gaussian_filter(white, cfg.texture_sigma_fine);
        const Volume3D coarse = volcore::gaussian_filter(white, cfg.texture_sigma_coarse);
        texture.resize(white.size());
        double sum_sq = 0.0;
        for (std::size_t i = 0; i < texture.size(); ++i) {
            texture[i] = static_cast<double>(fine[i]) - static_cast<double>(coarse[i]);
            sum_sq += texture[i] * texture[i];
        }
        if (sum_sq > 0.0) tex_scale = cfg.texture_amplitude / std::sqrt(sum_sq / static_cast<double>(texture.size()));
    }

    Volume3D out(dims);
    const std::array<int, 3> n{dims.nx, dims.ny, dims.nz};
    for (int z = 0; z < dims.nz; ++z)
        for (int y = 0; y < dims.ny; ++y)
            for (int x = 0; x < dims.nx; ++x) {
                const std::array<double, 3> p{(x + 0.5) / n[0], (y + 0.5) / n[1], (z + 0.5) / n[2]};
                double rr = 0.0;
                double rr_lobe = 0.0;
                for (int k = 0; k < 3; ++k) {
                    const double a = (p[k] - centre[k]) / axes[k];
                    const double b = (p[k] - lobe_centre[k]) / lobe_axes[k];
                    rr += a * a;
                    rr_lobe += b * b;
                }
                if (rr >= 1.0) continue;
                double u = cfg.base_level + cfg.radial_gain * (1.0 - rr) + offset;
                if (rr_lobe < 1.0) u -= 0.2;
                const std::size_t i = dims.index(x, y, z);
                u += cfg.stripe_amplitude * std::sin(2.0 * std::numbers::pi * cfg.stripe_cycles * p[0] + stripe_phase);
                if (!texture.empty()) u += tex_scale * texture[i];
                // smooth map into (0.05, 0.95): no clipping, so no artificial histogram spikes
                out[i] = static_cast<float>(0.5 + 0.45 * std::tanh((u - 0.5) / 0.45));
            }
    return out;
}

OodSample insert_toy_sphere(const Volume3D& v, std::array<int, 3> center, double radius, double intensity) {
    TransformSpec spec{TransformKind::toy_sphere, radius, 0, intensity};
    if (!(intensity > 0.0 && intensity <= 1.0)) throw InvalidArgument("sphere intensity must be in (0, 1]");
    if (radius <= 0.0) return unchanged(v, spec);
    const Box box = foreground_box(v);
    const int r = static_cast<int>(std::floor(radius));
    for (int k = 0; k < 3; ++k)
        if (box.empty || center[k] - r < box.lo[k] || center[k] + r > box.hi[k])
            throw InvalidArgument("sphere does not fit inside the foreground bounding box");
    OodSample s{v, BinaryMask3D(v.dims()), spec};
    const double r2 = radius * radius;
    for (int dz = -r; dz <= r; ++dz)
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                if (dx * dx + dy * dy + dz * dz > r2) continue;
                const int x = center[0] + dx;
                const int y = center[1] + dy;
                const int z = center[2] + dz;
                s.image(x, y, z) = static_cast<float>(intensity);
                s.truth_mask.set(x, y, z, true);
            }
    return s;
}

OodSample apply_elastic(const Volume3D& v, double max_displacement, std::uint64_t seed) {
    TransformSpec spec{TransformKind::elastic, max_displacement, seed, std::nullopt};
    if (!(max_displacement >= 0.0)) throw InvalidArgument("max displacement must be >= 0");
    if (max_displacement == 0.0) return unchanged(v, spec);
    constexpr int kGrid = 7;
    std::mt19937_64 rng(seed);
    // control[axis][(gz * 7 + gy) * 7 + gx]
    std::array<std::vector<double>, 3> control;
    for (auto& c : control) {
        c.resize(kGrid * kGrid * kGrid);
        for (double& x : c) x = uniform(rng, -max_displacement, max_displacement);
    }
    const Dims& d = v.dims();
    auto grid_coord = [&](int i, int n) {
        return n > 1 ? static_cast<double>(i) * (kGrid - 1) / (n - 1) : 0.0;
    };
    auto sample_control = [&](const std::vector<double>& c, double gx, double gy, double gz) {
        const int x0 = std::min(static_cast<int>(gx), kGrid - 2);
        const int y0 = std::min(static_cast<int>(gy), kGrid - 2);
        const int z0 = std::min(static_cast<int>(gz), kGrid - 2);
        const double fx = gx - x0;
        const double fy = gy - y0;
        const double fz = gz - z0;
        auto at = [&](int x, int y, int z) { return c[static_cast<std::size_t>((z * kGrid + y) * kGrid + x)]; };
        const double c00 = at(x0, y0, z0) * (1 - fx) + at(x0 + 1, y0, z0) * fx;
        const double c10 = at(x0, y0 + 1, z0) * (1 - fx) + at(x0 + 1, y0 + 1, z0) * fx;
        const double c01 = at(x0, y0, z0 + 1) * (1 - fx) + at(x0 + 1, y0, z0 + 1) * fx;
        const double c11 = at(x0, y0 + 1, z0 + 1) * (1 - fx) + at(x0 + 1, y0 + 1, z0 + 1) * fx;
        return (c00 * (1 - fy) + c10 * fy) * (1 - fz) + (c01 * (1 - fy) + c11 * fy) * fz;
    };
    Volume3D out(d, 0.0f, v.spacing());
    for (int z = 0; z < d.nz; ++z) {
        const double gz = grid_coord(z, d.nz);
        for (int y = 0; y < d.ny; ++y) {
            const double gy = grid_coord(y, d.ny);
            for (int x = 0; x < d.nx; ++x) {
                const double gx = grid_coord(x, d.nx);
                const double sx = x + sample_control(control[0], gx, gy, gz);
                const double sy = y + sample_control(control[1], gx, gy, gz);
                const double sz = z + sample_control(control[2], gx, gy, gz);
                out(x, y, z) = trilinear(v, sx, sy, sz);
            }
        }
    }
    BinaryMask3D mask = changed_mask(v, out);
    return OodSample{std::move(out), std::move(mask), spec};
}

OodSample apply_blur(const Volume3D& v, double std_dev, std::uint64_t seed) {
    TransformSpec spec{TransformKind::blur, std_dev, seed, std::nullopt};
    if (!(std_dev >= 0.0)) throw InvalidArgument("blur std must be >= 0");
    if (std_dev < 0.25) return unchanged(v, spec);
    Volume3D out = volcore::gaussian_filter(v, std_dev);
    BinaryMask3D mask = changed_mask(v, out);
    return OodSample{std::move(out), std::move(mask), spec};
}

OodSample apply_bias_field(const Volume3D& v, double coefficients, std::uint64_t seed) {
    TransformSpec spec{TransformKind::bias, coefficients, seed, std::nullopt};
    if (!(coefficients >= 0.0)) throw InvalidArgument("bias coefficients must be >= 0");
    if (coefficients == 0.0) return unchanged(v, spec);
    constexpr int kOrder = 3;
    struct Term {
        int i, j, k;
        double c;
    };
    std::mt19937_64 rng(seed);
    std::vector<Term> terms;
    for (int i = 0; i <= kOrder; ++i)
        for (int j = 0; j <= kOrder - i; ++j)
            for (int k = 0; k <= kOrder - i - j; ++k) terms.push_back({i, j, k, uniform(rng, -coefficients, coefficients)});
    const Dims& d = v.dims();
    auto coord = [](int i, int n) { return n > 1 ? -1.0 + 2.0 * i / (n - 1) : 0.0; };
    Volume3D out(d, 0.0f, v.spacing());
    for (int z = 0; z < d.nz; ++z) {
        const double cz = coord(z, d.nz);
        for (int y = 0; y < d.ny; ++y) {
            const double cy = coord(y, d.ny);
            for (int x = 0; x < d.nx; ++x) {
                const double cx = coord(x, d.nx);
                double p = 0.0;
                for (const auto& t : terms) p += t.c * std::pow(cx, t.i) * std::pow(cy, t.j) * std::pow(cz, t.k);
                const double val = static_cast<double>(v(x, y, z)) * std::exp(p);
                out(x, y, z) = static_cast<float>(std::clamp(val, 0.0, 1.0));
            }
        }
    }
    BinaryMask3D mask = changed_mask(v, out);
    return OodSample{std::move(out), std::move(mask), spec};
}

namespace {

bool patches_differ(const Volume3D& v, const SwapPlacement& p) {
    for (int dz = 0; dz < p.edge; ++dz)
        for (int dy = 0; dy < p.edge; ++dy)
            for (int dx = 0; dx < p.edge; ++dx)
                if (v(p.first[0] + dx, p.first[1] + dy, p.first[2] + dz) != v(p.second[0] + dx, p.second[1] + dy, p.second[2] + dz))
                    return true;
    return false;
}

} // namespace

SwapPlacement choose_swap_placement(const Volume3D& v, int patch_size, std::uint64_t seed) {
    if (patch_size < 1) throw InvalidArgument("swap patch size must be >= 1");
    const Box box = foreground_box(v);
    if (box.empty) throw InvalidArgument("swap needs a non-empty foreground");
    for (int k = 0; k < 3; ++k)
        if (box.hi[k] - box.lo[k] + 1 < patch_size)
            throw InvalidArgument("swap patch size " + std::to_string(patch_size) + " exceeds the foreground bounding box");
    std::mt19937_64 rng(seed);
    // Placements whose patches hold identical content (both in the background, say) would
    // leave the image unchanged; those are redrawn, up to a limit for uniform inputs.
    constexpr int kMaxTries = 100000;
    constexpr int kMaxIdentical = 1000;
    std::optional<SwapPlacement> fallback;
    int identical = 0;
    for (int attempt = 0; attempt < kMaxTries; ++attempt) {
        SwapPlacement p;
        p.edge = patch_size;
        for (int k = 0; k < 3; ++k) p.first[k] = uniform_int(rng, box.lo[k], box.hi[k] - patch_size + 1);
        for (int k = 0; k < 3; ++k) p.second[k] = uniform_int(rng, box.lo[k], box.hi[k] - patch_size + 1);
        bool separated = false;
        for (int k = 0; k < 3; ++k) separated |= std::abs(p.first[k] - p.second[k]) >= patch_size;
        if (!separated) continue;
        if (patches_differ(v, p)) return p;
        if (!fallback) fallback = p;
        if (++identical >= kMaxIdentical) return *fallback;
    }
    if (fallback) return *fallback;
    throw InvalidArgument("no room for two non-overlapping swap patches of edge " + std::to_string(patch_size));
}

Volume3D swap_patches(const Volume3D& v, const SwapPlacement& p) {
    Volume3D out = v;
    for (int dz = 0; dz < p.edge; ++dz)
        for (int dy = 0; dy < p.edge; ++dy)
            for (int dx = 0; dx < p.edge; ++dx) {
                const int ax = p.first[0] + dx, ay = p.first[1] + dy, az = p.first[2] + dz;
                const int bx = p.second[0] + dx, by = p.second[1] + dy, bz = p.second[2] + dz;
                out(ax, ay, az) = v(bx, by, bz);
                out(bx, by, bz) = v(ax, ay, az);
            }
    return out;
}

OodSample apply_swap(const Volume3D& v, double patch_size, std::uint64_t seed) {
    TransformSpec spec{TransformKind::swap, patch_size, seed, std::nullopt};
    const auto edge = static_cast<int>(std::lround(patch_size));
    const SwapPlacement p = choose_swap_placement(v, edge, seed);
    Volume3D out = swap_patches(v, p);
    BinaryMask3D mask = changed_mask(v, out);
    return OodSample{std::move(out), std::move(mask), spec};
}

OodSample apply_black_slice(const Volume3D& v, double thickness, std::uint64_t seed) {
    TransformSpec spec{TransformKind::black_slice, thickness, seed, std::nullopt};
    const auto th = static_cast<int>(std::lround(thickness));
    if (th < 1) throw InvalidArgument("slice thickness must be >= 1");
    const Dims& d = v.dims();
    if (th >= d.nx || th >= d.ny || th >= d.nz) throw InvalidArgument("slice thickness must be smaller than every axis");
    std::mt19937_64 rng(seed);
    const int axis = uniform_int(rng, 0, 2);
    const Box box = foreground_box(v);
    int lo = box.empty ? 0 : box.lo[axis];
    int hi = box.empty ? d[axis] - 1 : box.hi[axis];
    // the slab start ranges over positions keeping it inside the extent, or the grid if the extent is thinner
    int first_max = hi - th + 1;
    if (first_max < lo) {
        lo = std::max(0, std::min(lo, d[axis] - th));
        first_max = lo;
    }
    const int start = uniform_int(rng, lo, first_max);
    Volume3D out = v;
    BinaryMask3D mask(d);
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                const int c = axis == 0 ? x : (axis == 1 ? y : z);
                if (c < start || c >= start + th) continue;
                if (v(x, y, z) != 0.0f) mask.set(x, y, z, true);
                out(x, y, z) = 0.0f;
            }
    return OodSample{std::move(out), std::move(mask), spec};
}

OodSample apply_transform(const Volume3D& v, const TransformSpec& spec) {
    switch (spec.kind) {
    case TransformKind::elastic: return apply_elastic(v, spec.parameter, spec.seed);
    case TransformKind::blur: return apply_blur(v, spec.parameter, spec.seed);
    case TransformKind::bias: return apply_bias_field(v, spec.parameter, spec.seed);
    case TransformKind::swap: return apply_swap(v, spec.parameter, spec.seed);
    case TransformKind::black_slice: return apply_black_slice(v, spec.parameter, spec.seed);
    case TransformKind::toy_sphere: {
        const Box box = foreground_box(v);
        if (box.empty) throw InvalidArgument("toy sphere needs a non-empty foreground");
        std::array<int, 3> c{};
        for (int k = 0; k < 3; ++k) c[k] = (box.lo[k] + box.hi[k]) / 2;
        OodSample s = insert_toy_sphere(v, c, spec.parameter, spec.aux.value_or(0.24));
        s.spec.seed = spec.seed;
        return s;
    }
    }
    throw InvalidArgument("unknown transform kind");
}

std::vector<BenchmarkCell> benchmark_cells(histood::Region region) {
    using volcore::Severity;
    const bool brain = region == histood::Region::brain;
    return {
        {TransformKind::elastic, Severity::low, brain ? 30.0 : 50.0},
        {TransformKind::elastic, Severity::high, brain ? 40.0 : 80.0},
        {TransformKind::blur, Severity::low, brain ? 2.0 : 3.0},
        {TransformKind::blur, Severity::high, brain ? 4.0 : 5.0},
        {TransformKind::bias, Severity::low, 1.0},
        {TransformKind::bias, Severity::high, 2.0},
        {TransformKind::swap, Severity::low, brain ? 30.0 : 50.0},
        {TransformKind::swap, Severity::high, brain ? 80.0 : 100.0},
        {TransformKind::black_slice, Severity::low, 1.0},
        {TransformKind::black_slice, Severity::high, brain ? 5.0 : 7.0},
    };
}

int native_dim(histood::Region region) { return region == histood::Region::abdomen ? 512 : 256; }

double scaled_parameter(const BenchmarkCell& cell, const Dims& dims, histood::Region region) {
    const double scale = (dims.nx + dims.ny + dims.nz) / 3.0 / native_dim(region);
    switch (cell.kind) {
    case TransformKind::bias: return cell.nominal;
    case TransformKind::swap:
    case TransformKind::black_slice: return std::max(1.0, std::round(cell.nominal * scale));
    default: return cell.nominal * scale;
    }
}

volcore::Label label_of(TransformKind k) {
    using volcore::Label;
    switch (k) {
    case TransformKind::elastic: return Label::deform;
    case TransformKind::blur: return Label::blur;
    case TransformKind::bias: return Label::bias;
    case TransformKind::swap: return Label::swap;
    case TransformKind::black_slice: return Label::black_slice;
    case TransformKind::toy_sphere: return Label::toy;
    }
    return Label::in_distribution;
}

namespace {

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string numbered(std::string_view stem, int i, std::string_view suffix) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d", i);
    return std::string(stem) + "_" + buf + std::string(suffix);
}

} // namespace

volcore::DatasetManifest build_benchmark(const std::vector<Volume3D>& sources, int n_id, int n_per_cell,
                                         const std::filesystem::path& out_dir, std::uint64_t seed,
                                         histood::Region region) {
    if (sources.empty()) throw InvalidArgument("benchmark needs at least one source volume");
    if (n_id < 0 || n_per_cell < 0) throw InvalidArgument("benchmark counts must be >= 0");
    ensure_dir(out_dir);
    volcore::DatasetManifest manifest;
    for (int i = 0; i < n_id; ++i) {
        const auto& src = sources[static_cast<std::size_t>(i) % sources.size()];
        volcore::ManifestEntry e;
        e.path = numbered("id", i, ".rvol");
        e.split = volcore::Split::val;
        e.seed = static_cast<std::uint64_t>(i);
        volcore::write_volume(src, out_dir / e.path);
        manifest.entries.push_back(std::move(e));
    }
    std::uint64_t counter = 0;
    for (const auto& cell : benchmark_cells(region)) {
        for (int i = 0; i < n_per_cell; ++i, ++counter) {
            const auto& src = sources[static_cast<std::size_t>(i) % sources.size()];
            const std::uint64_t sample_seed = seed * 1000003ULL + counter;
            const TransformSpec spec{cell.kind, scaled_parameter(cell, src.dims(), region), sample_seed, std::nullopt};
            OodSample s = apply_transform(src, spec);
            const std::string stem = std::string(to_string(cell.kind)) + "_" + std::string(volcore::to_string(cell.severity));
            volcore::ManifestEntry e;
            e.path = numbered(stem, i, ".rvol");
            e.mask = numbered(stem, i, "_mask.rvol");
            e.split = volcore::Split::val;
            e.label = label_of(cell.kind);
            e.severity = cell.severity;
            e.seed = sample_seed;
            e.parameter = cell.nominal;
            volcore::write_volume(s.image, out_dir / e.path);
            volcore::write_mask(s.truth_mask, out_dir / e.mask);
            manifest.entries.push_back(std::move(e));
        }
    }
    manifest.validate();
    volcore::write_manifest(manifest, out_dir / "manifest.json");
    return manifest;
}

volcore::DatasetManifest generate_corpus(const std::filesystem::path& out_dir, int count, int dim,
                                         std::uint64_t seed, const PhantomConfig& cfg) {
    if (count < 1) throw InvalidArgument("phantom count must be >= 1");
    ensure_dir(out_dir);
    const int n_train = count - count / 10;
    volcore::DatasetManifest manifest;
    for (int i = 0; i < count; ++i) {
        const std::uint64_t s = seed * 1000003ULL + static_cast<std::uint64_t>(i);
        const Volume3D v = generate_phantom(s, Dims{dim, dim, dim}, cfg);
        volcore::ManifestEntry e;
        e.path = numbered("phantom", i, ".rvol");
        e.split = i < n_train ? volcore::Split::train : volcore::Split::val;
        e.seed = s;
        volcore::write_volume(v, out_dir / e.path);
        manifest.entries.push_back(std::move(e));
    }
    volcore::write_manifest(manifest, out_dir / "manifest.json");
    return manifest;
}

} // namespace moodkit::synthdata
