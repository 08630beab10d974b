#include "moodkit/diffusion/noise.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "moodkit/error.hpp"

namespace moodkit::diffusion {

void SimplexNoiseConfig::validate() const {
    if (octaves < 1) throw InvalidArgument("simplex noise needs at least one octave");
    if (!(persistence > 0.0 && persistence <= 1.0)) throw InvalidArgument("simplex persistence must be in (0, 1]");
    if (!(base_frequency > 0.0)) throw InvalidArgument("simplex base frequency must be positive");
}

std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
    return mix_seed(mix_seed(mix_seed(seed) ^ a) ^ b);
}

namespace {

constexpr double kF2 = 0.36602540378443864676; // (sqrt(3) - 1) / 2
constexpr double kG2 = 0.21132486540518711775; // (3 - sqrt(3)) / 6
constexpr double kGrad[8][2] = {{1, 1}, {-1, 1}, {1, -1}, {-1, -1}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}};

double corner(double x, double y, int gi) {
    double t = 0.5 - x * x - y * y;
    if (t <= 0.0) return 0.0;
    t *= t;
    return t * t * (kGrad[gi & 7][0] * x + kGrad[gi & 7][1] * y);
}

} // namespace

Simplex2D::Simplex2D(std::uint64_t seed) {
    std::uint8_t p[256];
    std::iota(p, p + 256, std::uint8_t{0});
    std::mt19937_64 rng(seed);
    for (int i = 255; i > 0; --i) {
        const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(p[i], p[j]);
    }
    for (int i = 0; i < 512; ++i) perm_[i] = p[i & 255];
}

double Simplex2D::operator()(double x, double y) const noexcept {
    const double s = (x + y) * kF2;
    const double fi = std::floor(x + s);
    const double fj = std::floor(y + s);
    const double t = (fi + fj) * kG2;
    const double x0 = x - (fi - t);
    const double y0 = y - (fj - t);
    const int i1 = x0 > y0 ? 1 : 0;
    const int j1 = 1 - i1;
    const double x1 = x0 - i1 + kG2;
    const double y1 = y0 - j1 + kG2;
    const double x2 = x0 - 1.0 + 2.0 * kG2;
    const double y2 = y0 - 1.0 + 2.0 * kG2;
    const int ii = static_cast<int>(static_cast<long long>(fi) & 255);
    const int jj = static_cast<int>(static_cast<long long>(fj) & 255);
    const double n0 = corner(x0, y0, perm_[ii + perm_[jj]]);
    const double n1 = corner(x1, y1, perm_[ii + i1 + perm_[jj + j1]]);
    const double n2 = corner(x2, y2, perm_[ii + 1 + perm_[jj + 1]]);
    return 70.0 * (n0 + n1 + n2);
}

std::vector<double> sample_simplex_noise(int width, int height, const SimplexNoiseConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (width <= 0 || height <= 0) throw InvalidArgument("noise field dims must be positive");
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    std::vector<double> field(n, 0.0);
    std::mt19937_64 rng(mix_seed(seed));

    if (cfg.kind == NoiseKind::gaussian) {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (auto& v : field) v = normal(rng);
        return field;
    }

    const Simplex2D simplex(rng());
    std::uniform_real_distribution<double> shift(0.0, 256.0);
    double amplitude = 1.0;
    double freq = cfg.base_frequency;
    for (int o = 0; o < cfg.octaves; ++o) {
        // each octave samples a different region of the lattice
        const double ox = shift(rng);
        const double oy = shift(rng);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                field[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] +=
                    amplitude * simplex(x * freq + ox, y * freq + oy);
        amplitude *= cfg.persistence;
        freq *= 2.0;
    }

    if (cfg.normalize_to_unit) {
        double mean = 0.0;
        for (double v : field) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (auto& v : field) {
            v -= mean;
            var += v * v;
        }
        var /= static_cast<double>(n);
        const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
        for (auto& v : field) v *= inv;
    }
    return field;
}

double lag1_autocorrelation(const std::vector<double>& field, int width, int height) {
    double mean = 0.0;
    for (double v : field) mean += v;
    mean /= static_cast<double>(field.size());
    double num = 0.0;
    double den = 0.0;
    for (int y = 0; y < height; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * static_cast<std::size_t>(width);
        for (int x = 0; x < width; ++x) {
            const double a = field[row + static_cast<std::size_t>(x)] - mean;
            den += a * a;
            if (x + 1 < width) num += a * (field[row + static_cast<std::size_t>(x) + 1] - mean);
        }
    }
    return den > 0.0 ? num / den : 0.0;
}

} // namespace moodkit::diffusion
