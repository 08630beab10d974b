#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "moodkit/diffusion/noise.hpp"
#include "moodkit/diffusion/schedule.hpp"
#include "moodkit/volcore/volume.hpp"

namespace moodkit::diffusion {

/// `count` single-channel slices of height x width, each x-fastest, stored back to back.
struct SliceBatch {
    int count = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    SliceBatch() = default;
    SliceBatch(int n, int h, int w, float fill = 0.0f);

    std::size_t slice_size() const noexcept { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
    std::span<float> slice(int i) noexcept { return std::span<float>(data).subspan(static_cast<std::size_t>(i) * slice_size(), slice_size()); }
    std::span<const float> slice(int i) const noexcept {
        return std::span<const float>(data).subspan(static_cast<std::size_t>(i) * slice_size(), slice_size());
    }
    bool same_shape(const SliceBatch& o) const noexcept { return count == o.count && height == o.height && width == o.width; }
};

/// The noise-prediction contract: eps_hat = f(x_t, t), one timestep per slice.
/// Implementations must be deterministic and safe to call concurrently.
class NoisePredictor {
public:
    virtual ~NoisePredictor() = default;
    virtual SliceBatch predict_noise(const SliceBatch& x, std::span<const int> t) const = 0;
};

/// x_t = sqrt(alpha_bar[t]) * x0 + sqrt(1 - alpha_bar[t]) * eps, evaluated in double.
void forward_noise(std::span<const float> x0, std::span<const float> eps, int t, const ScheduleTable& table,
                   std::span<float> out);
/// Inverse of forward_noise given the noise: (x_t - sqrt(1 - alpha_bar[t]) * eps) / sqrt(alpha_bar[t]).
void estimate_x0(std::span<const float> xt, std::span<const float> eps, int t, const ScheduleTable& table,
                 std::span<float> out);

// Diffusion steps t are 1-based: step t applies schedule entry t - 1, so x_t has been
// noised with alpha_bar[t - 1] and the alpha_bar "before" entry 0 is 1. The tables
// themselves (and forward_noise / estimate_x0) are indexed 0-based.

/// Posterior standard deviation of the reverse step from t to t - 1, t in [1, T]:
/// sqrt((1 - alpha_bar[t - 2]) / (1 - alpha_bar[t - 1]) * beta[t - 1]), zero at t = 1.
double reverse_sigma(const ScheduleTable& table, int t);

/// One noise field for slice `index` at reverse step `t` (t = 0 is the forward jump).
std::vector<float> slice_noise(int width, int height, const SimplexNoiseConfig& cfg, std::uint64_t seed,
                               std::uint64_t index, int t);

struct ReconstructConfig {
    int t_start = 200;
    std::uint64_t seed = 0;
    int threads = 1; ///< worker threads over slices; results do not depend on this
    bool clamp_output = true; ///< clip the final reconstruction to [0, 1]

    void validate(const ScheduleTable& table) const;
};

/// Noises one slice to step t_start (forward_noise with entry t_start - 1) and runs the
/// ancestral reverse chain t = t_start..1 down to the clean image:
/// x_{t-1} = (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps_hat(x_t, t)) / sqrt(alpha_t) + sigma_t * z_t,
/// z_t fresh noise for t > 1 and z_1 = 0. The last step is the exact algebraic inverse of
/// the first noising step. Noise streams are keyed by (seed, index, t); t = 0 keys the jump.
std::vector<float> reconstruct_slice(std::span<const float> x0, int width, int height, std::uint64_t index,
                                     const NoisePredictor& model, const ScheduleTable& table,
                                     const SimplexNoiseConfig& noise, const ReconstructConfig& cfg);

/// Reconstructs the axial (z) slices of a normalized volume. Slices with
/// `selected[z] == false` are copied from the input; an empty selection means all slices.
volcore::Volume3D reconstruct(const volcore::Volume3D& v, const NoisePredictor& model, const ScheduleTable& table,
                              const SimplexNoiseConfig& noise, const ReconstructConfig& cfg,
                              const std::vector<bool>& selected = {});

} // namespace moodkit::diffusion
