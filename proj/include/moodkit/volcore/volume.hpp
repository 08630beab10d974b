#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "moodkit/error.hpp"

namespace moodkit::volcore {

struct Dims {
    int nx = 0;
    int ny = 0;
    int nz = 0;

    std::size_t count() const noexcept {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
    }
    bool positive() const noexcept { return nx > 0 && ny > 0 && nz > 0; }
    std::size_t index(int x, int y, int z) const noexcept {
        return (static_cast<std::size_t>(z) * static_cast<std::size_t>(ny) + static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(nx) +
               static_cast<std::size_t>(x);
    }
    bool contains(int x, int y, int z) const noexcept {
        return x >= 0 && y >= 0 && z >= 0 && x < nx && y < ny && z < nz;
    }
    int operator[](int axis) const noexcept { return axis == 0 ? nx : (axis == 1 ? ny : nz); }
    friend bool operator==(const Dims&, const Dims&) = default;
};

using Spacing = std::array<float, 3>;

/// Dense 3D scalar field, x-fastest. Intensities are float32.
class Volume3D {
public:
    Volume3D() = default;
    explicit Volume3D(Dims dims, float fill = 0.0f, Spacing spacing = {1.0f, 1.0f, 1.0f});
    Volume3D(Dims dims, std::vector<float> data, Spacing spacing = {1.0f, 1.0f, 1.0f});

    const Dims& dims() const noexcept { return dims_; }
    const Spacing& spacing() const noexcept { return spacing_; }
    void set_spacing(Spacing s) noexcept { spacing_ = s; }

    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    float operator()(int x, int y, int z) const noexcept { return data_[dims_.index(x, y, z)]; }
    float& operator()(int x, int y, int z) noexcept { return data_[dims_.index(x, y, z)]; }
    float operator[](std::size_t i) const noexcept { return data_[i]; }
    float& operator[](std::size_t i) noexcept { return data_[i]; }

    std::span<const float> values() const noexcept { return data_; }
    std::span<float> values() noexcept { return data_; }

    /// Value with coordinates clamped to the grid (edge replication).
    float clamped(int x, int y, int z) const noexcept;

    float min() const;
    float max() const;
    double sum() const noexcept;

    friend bool operator==(const Volume3D&, const Volume3D&) = default;

private:
    Dims dims_{};
    Spacing spacing_{1.0f, 1.0f, 1.0f};
    std::vector<float> data_;
};

/// Per-voxel boolean volume, stored one byte per voxel.
class BinaryMask3D {
public:
    BinaryMask3D() = default;
    explicit BinaryMask3D(Dims dims, bool fill = false);
    BinaryMask3D(Dims dims, std::vector<std::uint8_t> data);

    const Dims& dims() const noexcept { return dims_; }
    std::size_t size() const noexcept { return data_.size(); }

    bool operator()(int x, int y, int z) const noexcept { return data_[dims_.index(x, y, z)] != 0; }
    bool operator[](std::size_t i) const noexcept { return data_[i] != 0; }
    void set(std::size_t i, bool v) noexcept { data_[i] = v ? 1 : 0; }
    void set(int x, int y, int z, bool v) noexcept { data_[dims_.index(x, y, z)] = v ? 1 : 0; }

    std::span<const std::uint8_t> bytes() const noexcept { return data_; }
    std::span<std::uint8_t> bytes() noexcept { return data_; }

    std::size_t count() const noexcept;
    bool any() const noexcept;

    friend bool operator==(const BinaryMask3D&, const BinaryMask3D&) = default;

private:
    Dims dims_{};
    std::vector<std::uint8_t> data_;
};

/// Rescale to [0, 1] by (v - min) / (max - min). A constant volume maps to zeros.
Volume3D normalize(const Volume3D& v);

/// Trilinear resampling with cell-centre alignment: output voxel i sits at
/// (i + 0.5) / n_out of the unit cube, mapped back onto the input grid.
Volume3D resample_trilinear(const Volume3D& v, Dims target);

/// Nearest-neighbour resampling with the same cell-centre alignment.
BinaryMask3D resample_mask_nearest(const BinaryMask3D& m, Dims target);

/// Dice overlap; two empty masks score 1.
double dice(const BinaryMask3D& a, const BinaryMask3D& b);

BinaryMask3D mask_and(const BinaryMask3D& a, const BinaryMask3D& b);
BinaryMask3D mask_or(const BinaryMask3D& a, const BinaryMask3D& b);

} // namespace moodkit::volcore
