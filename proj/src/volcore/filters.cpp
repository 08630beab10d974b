#include "moodkit/volcore/filters.hpp"

#include <algorithm>
#include <cmath>

namespace moodkit::volcore {

std::vector<double> gaussian_kernel(double sigma, double truncate) {
    const int radius = std::max(0, static_cast<int>(truncate * sigma + 0.5));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = w;
        total += w;
    }
    for (auto& w : k) w /= total;
    return k;
}

namespace {

// Correlate every line along `axis` with `taps` (centred), replicating edges.
void convolve_axis(std::vector<double>& field, const Dims& d, int axis, const std::vector<double>& taps) {
    const int n = d[axis];
    const int radius = static_cast<int>(taps.size() / 2);
    const int a1 = axis == 0 ? 1 : 0;
    const int a2 = axis == 2 ? 1 : 2;
    const std::size_t stride = axis == 0 ? 1 : (axis == 1 ? static_cast<std::size_t>(d.nx)
                                                           : static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.ny));
    std::vector<double> line(static_cast<std::size_t>(n));
    for (int j = 0; j < d[a2]; ++j) {
        for (int k = 0; k < d[a1]; ++k) {
            int c[3] = {0, 0, 0};
            c[a1] = k;
            c[a2] = j;
            const std::size_t base = d.index(c[0], c[1], c[2]);
            for (int i = 0; i < n; ++i) line[static_cast<std::size_t>(i)] = field[base + static_cast<std::size_t>(i) * stride];
            for (int i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int t = -radius; t <= radius; ++t) {
                    const int src = std::clamp(i + t, 0, n - 1);
                    acc += taps[static_cast<std::size_t>(t + radius)] * line[static_cast<std::size_t>(src)];
                }
                field[base + static_cast<std::size_t>(i) * stride] = acc;
            }
        }
    }
}

} // namespace

Volume3D gaussian_filter(const Volume3D& v, double sigma, double truncate) {
    if (!(sigma > 0.0)) return v;
    const auto taps = gaussian_kernel(sigma, truncate);
    std::vector<double> field(v.values().begin(), v.values().end());
    for (int axis = 0; axis < 3; ++axis) convolve_axis(field, v.dims(), axis, taps);
    Volume3D out(v.dims(), 0.0f, v.spacing());
    for (std::size_t i = 0; i < field.size(); ++i) out[i] = static_cast<float>(field[i]);
    return out;
}

std::vector<double> box_mean(const std::vector<double>& field, const Dims& dims, int edge) {
    const std::vector<double> taps(static_cast<std::size_t>(edge), 1.0 / edge);
    std::vector<double> out = field;
    for (int axis = 0; axis < 3; ++axis) convolve_axis(out, dims, axis, taps);
    return out;
}

} // namespace moodkit::volcore
