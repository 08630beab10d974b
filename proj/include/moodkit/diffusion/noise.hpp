#pragma once

#include <cstdint>
#include <vector>

namespace moodkit::diffusion {

enum class NoiseKind { simplex, gaussian };

struct SimplexNoiseConfig {
    NoiseKind kind = NoiseKind::simplex;
    int octaves = 6;
    double base_frequency = 1.0 / 64.0; ///< cycles per pixel of the first octave
    double persistence = 0.8;
    bool normalize_to_unit = true;

    void validate() const;
    friend bool operator==(const SimplexNoiseConfig&, const SimplexNoiseConfig&) = default;
};

/// splitmix64 finaliser; used to derive independent stream seeds from keys.
std::uint64_t mix_seed(std::uint64_t x) noexcept;
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept;

/// Single-octave 2D simplex noise in roughly [-1, 1] over a seeded permutation table.
class Simplex2D {
public:
    explicit Simplex2D(std::uint64_t seed);
    double operator()(double x, double y) const noexcept;

private:
    std::uint8_t perm_[512];
};

/// Row-major (y-major, x-fastest) field of height * width values.
/// Sum over octaves o of persistence^o * simplex(p * base_frequency * 2^o), then
/// shifted and scaled to zero mean and unit variance when normalize_to_unit.
/// With kind == gaussian, i.i.d. standard normal values instead.
std::vector<double> sample_simplex_noise(int width, int height, const SimplexNoiseConfig& cfg, std::uint64_t seed);

/// Lag-1 autocorrelation along x, averaged over rows.
double lag1_autocorrelation(const std::vector<double>& field, int width, int height);

} // namespace moodkit::diffusion
