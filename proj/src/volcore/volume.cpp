#include "moodkit/volcore/volume.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace moodkit::volcore {

Volume3D::Volume3D(Dims dims, float fill, Spacing spacing)
    : dims_(dims), spacing_(spacing), data_(dims.positive() ? dims.count() : 0, fill) {}

Volume3D::Volume3D(Dims dims, std::vector<float> data, Spacing spacing)
    : dims_(dims), spacing_(spacing), data_(std::move(data)) {
    if (!dims_.positive() || data_.size() != dims_.count()) {
        throw InvalidVolume("volume data length " + std::to_string(data_.size()) + " does not match dims");
    }
}

float Volume3D::clamped(int x, int y, int z) const noexcept {
    x = std::clamp(x, 0, dims_.nx - 1);
    y = std::clamp(y, 0, dims_.ny - 1);
    z = std::clamp(z, 0, dims_.nz - 1);
    return data_[dims_.index(x, y, z)];
}

float Volume3D::min() const {
    if (data_.empty()) throw InvalidVolume("min of empty volume");
    return *std::min_element(data_.begin(), data_.end());
}

float Volume3D::max() const {
    if (data_.empty()) throw InvalidVolume("max of empty volume");
    return *std::max_element(data_.begin(), data_.end());
}

double Volume3D::sum() const noexcept {
    double s = 0.0;
    for (float v : data_) s += v;
    return s;
}

BinaryMask3D::BinaryMask3D(Dims dims, bool fill)
    : dims_(dims), data_(dims.positive() ? dims.count() : 0, fill ? 1 : 0) {}

BinaryMask3D::BinaryMask3D(Dims dims, std::vector<std::uint8_t> data) : dims_(dims), data_(std::move(data)) {
    if (!dims_.positive() || data_.size() != dims_.count()) {
        throw InvalidVolume("mask data length does not match dims");
    }
    for (auto& b : data_) b = b != 0 ? 1 : 0;
}

std::size_t BinaryMask3D::count() const noexcept {
    return static_cast<std::size_t>(std::count_if(data_.begin(), data_.end(), [](std::uint8_t b) { return b != 0; }));
}

bool BinaryMask3D::any() const noexcept {
    return std::any_of(data_.begin(), data_.end(), [](std::uint8_t b) { return b != 0; });
}

Volume3D normalize(const Volume3D& v) {
    if (v.empty()) throw InvalidVolume("cannot normalize an empty volume");
    const float lo = v.min();
    const float hi = v.max();
    Volume3D out(v.dims(), 0.0f, v.spacing());
    if (!(hi > lo)) return out;
    // Computed in double so that normalize(normalize(v)) reproduces the same floats.
    const double range = static_cast<double>(hi) - static_cast<double>(lo);
    auto src = v.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double r = (static_cast<double>(src[i]) - lo) / range;
        dst[i] = static_cast<float>(std::clamp(r, 0.0, 1.0));
    }
    return out;
}

namespace {

struct Tap {
    int i0;
    int i1;
    float w1;
};

// Cell-centre mapping of output index onto fractional input index, clamped to the grid.
std::vector<Tap> linear_taps(int n_in, int n_out) {
    std::vector<Tap> taps(static_cast<std::size_t>(n_out));
    const double scale = static_cast<double>(n_in) / n_out;
    for (int i = 0; i < n_out; ++i) {
        double pos = (i + 0.5) * scale - 0.5;
        pos = std::clamp(pos, 0.0, static_cast<double>(n_in - 1));
        const int i0 = static_cast<int>(std::floor(pos));
        const int i1 = std::min(i0 + 1, n_in - 1);
        taps[static_cast<std::size_t>(i)] = {i0, i1, static_cast<float>(pos - i0)};
    }
    return taps;
}

std::vector<int> nearest_taps(int n_in, int n_out) {
    std::vector<int> idx(static_cast<std::size_t>(n_out));
    for (int i = 0; i < n_out; ++i) {
        // floor((i + 0.5) * n_in / n_out) in exact integer arithmetic
        const long long num = (2LL * i + 1) * n_in;
        idx[static_cast<std::size_t>(i)] = std::min(static_cast<int>(num / (2LL * n_out)), n_in - 1);
    }
    return idx;
}

} // namespace

Volume3D resample_trilinear(const Volume3D& v, Dims target) {
    if (!target.positive()) throw InvalidArgument("resample target dims must be positive");
    if (v.empty()) throw InvalidVolume("cannot resample an empty volume");
    const Dims& src = v.dims();
    Spacing sp = v.spacing();
    for (int a = 0; a < 3; ++a) sp[static_cast<std::size_t>(a)] *= static_cast<float>(src[a]) / static_cast<float>(target[a]);
    if (src == target) return Volume3D(target, std::vector<float>(v.values().begin(), v.values().end()), sp);

    const auto tx = linear_taps(src.nx, target.nx);
    const auto ty = linear_taps(src.ny, target.ny);
    const auto tz = linear_taps(src.nz, target.nz);
    Volume3D out(target, 0.0f, sp);
    for (int z = 0; z < target.nz; ++z) {
        const Tap& cz = tz[static_cast<std::size_t>(z)];
        for (int y = 0; y < target.ny; ++y) {
            const Tap& cy = ty[static_cast<std::size_t>(y)];
            for (int x = 0; x < target.nx; ++x) {
                const Tap& cx = tx[static_cast<std::size_t>(x)];
                auto lerp_x = [&](int yy, int zz) {
                    const float a = v(cx.i0, yy, zz);
                    const float b = v(cx.i1, yy, zz);
                    return a + cx.w1 * (b - a);
                };
                const float c00 = lerp_x(cy.i0, cz.i0);
                const float c10 = lerp_x(cy.i1, cz.i0);
                const float c01 = lerp_x(cy.i0, cz.i1);
                const float c11 = lerp_x(cy.i1, cz.i1);
                const float c0 = c00 + cy.w1 * (c10 - c00);
                const float c1 = c01 + cy.w1 * (c11 - c01);
                out(x, y, z) = c0 + cz.w1 * (c1 - c0);
            }
        }
    }
    return out;
}

BinaryMask3D resample_mask_nearest(const BinaryMask3D& m, Dims target) {
    if (!target.positive()) throw InvalidArgument("resample target dims must be positive");
    const Dims& src = m.dims();
    if (src == target) return m;
    const auto ix = nearest_taps(src.nx, target.nx);
    const auto iy = nearest_taps(src.ny, target.ny);
    const auto iz = nearest_taps(src.nz, target.nz);
    BinaryMask3D out(target);
    for (int z = 0; z < target.nz; ++z)
        for (int y = 0; y < target.ny; ++y)
            for (int x = 0; x < target.nx; ++x)
                out.set(x, y, z,
                        m(ix[static_cast<std::size_t>(x)], iy[static_cast<std::size_t>(y)], iz[static_cast<std::size_t>(z)]));
    return out;
}

double dice(const BinaryMask3D& a, const BinaryMask3D& b) {
    if (!(a.dims() == b.dims())) throw InvalidArgument("dice: mask dims differ");
    std::size_t inter = 0;
    std::size_t total = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        inter += (a[i] && b[i]) ? 1 : 0;
        total += (a[i] ? 1 : 0) + (b[i] ? 1 : 0);
    }
    if (total == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

BinaryMask3D mask_and(const BinaryMask3D& a, const BinaryMask3D& b) {
    if (!(a.dims() == b.dims())) throw InvalidArgument("mask_and: mask dims differ");
    BinaryMask3D out(a.dims());
    for (std::size_t i = 0; i < a.size(); ++i) out.set(i, a[i] && b[i]);
    return out;
}

BinaryMask3D mask_or(const BinaryMask3D& a, const BinaryMask3D& b) {
    if (!(a.dims() == b.dims())) throw InvalidArgument("mask_or: mask dims differ");
    BinaryMask3D out(a.dims());
    for (std::size_t i = 0; i < a.size(); ++i) out.set(i, a[i] || b[i]);
    return out;
}

} // namespace moodkit::volcore
