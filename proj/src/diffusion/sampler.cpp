#include "moodkit/diffusion/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "moodkit/error.hpp"
#include "moodkit/parallel.hpp"

namespace moodkit::diffusion {

SliceBatch::SliceBatch(int n, int h, int w, float fill) : count(n), height(h), width(w) {
    if (n < 0 || h < 0 || w < 0) throw InvalidArgument("slice batch dims must be >= 0");
    data.assign(static_cast<std::size_t>(n) * slice_size(), fill);
}

namespace {

void check_step(const ScheduleTable& table, int t) {
    if (t < 0 || t >= table.num_steps())
        throw InvalidArgument("timestep " + std::to_string(t) + " outside [0, " + std::to_string(table.num_steps()) + ")");
}

} // namespace

void forward_noise(std::span<const float> x0, std::span<const float> eps, int t, const ScheduleTable& table,
                   std::span<float> out) {
    check_step(table, t);
    if (x0.size() != eps.size() || out.size() != x0.size()) throw InvalidArgument("forward_noise: size mismatch");
    const double a = std::sqrt(table.alpha_bar[static_cast<std::size_t>(t)]);
    const double b = std::sqrt(1.0 - table.alpha_bar[static_cast<std::size_t>(t)]);
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = static_cast<float>(a * x0[i] + b * eps[i]);
}

void estimate_x0(std::span<const float> xt, std::span<const float> eps, int t, const ScheduleTable& table,
                 std::span<float> out) {
    check_step(table, t);
    if (xt.size() != eps.size() || out.size() != xt.size()) throw InvalidArgument("estimate_x0: size mismatch");
    const double a = std::sqrt(table.alpha_bar[static_cast<std::size_t>(t)]);
    const double b = std::sqrt(1.0 - table.alpha_bar[static_cast<std::size_t>(t)]);
    for (std::size_t i = 0; i < xt.size(); ++i) out[i] = static_cast<float>((xt[i] - b * eps[i]) / a);
}

double reverse_sigma(const ScheduleTable& table, int t) {
    if (t < 1 || t > table.num_steps())
        throw InvalidArgument("reverse step " + std::to_string(t) + " outside [1, " + std::to_string(table.num_steps()) + "]");
    const auto i = static_cast<std::size_t>(t - 1);
    const double prev = i == 0 ? 1.0 : table.alpha_bar[i - 1];
    return std::sqrt((1.0 - prev) / (1.0 - table.alpha_bar[i]) * table.beta[i]);
}

std::vector<float> slice_noise(int width, int height, const SimplexNoiseConfig& cfg, std::uint64_t seed,
                               std::uint64_t index, int t) {
    const auto field = sample_simplex_noise(width, height, cfg, stream_key(seed, index, static_cast<std::uint64_t>(t)));
    return std::vector<float>(field.begin(), field.end());
}

void ReconstructConfig::validate(const ScheduleTable& table) const {
    if (t_start < 1 || t_start >= table.num_steps())
        throw InvalidArgument("t_start " + std::to_string(t_start) + " outside [1, " + std::to_string(table.num_steps()) +
                              ")");
    if (threads < 1) throw InvalidArgument("thread count must be >= 1");
}

std::vector<float> reconstruct_slice(std::span<const float> x0, int width, int height, std::uint64_t index,
                                     const NoisePredictor& model, const ScheduleTable& table,
                                     const SimplexNoiseConfig& noise, const ReconstructConfig& cfg) {
    cfg.validate(table);
    SliceBatch x(1, height, width);
    if (x0.size() != x.slice_size()) throw InvalidArgument("reconstruct_slice: slice size mismatch");
    {
        const auto eps = slice_noise(width, height, noise, cfg.seed, index, 0);
        forward_noise(x0, eps, cfg.t_start - 1, table, x.slice(0));
    }
    for (int t = cfg.t_start; t >= 1; --t) {
        const int steps[1] = {t};
        const SliceBatch eps_hat = model.predict_noise(x, steps);
        const auto i = static_cast<std::size_t>(t - 1);
        const double coef = table.beta[i] / std::sqrt(1.0 - table.alpha_bar[i]);
        const double inv_sqrt_alpha = 1.0 / std::sqrt(table.alpha[i]);
        if (t > 1) {
            const auto z = slice_noise(width, height, noise, cfg.seed, index, t);
            const double sigma = reverse_sigma(table, t);
            for (std::size_t k = 0; k < x.data.size(); ++k)
                x.data[k] = static_cast<float>((x.data[k] - coef * eps_hat.data[k]) * inv_sqrt_alpha + sigma * z[k]);
        } else {
            for (std::size_t k = 0; k < x.data.size(); ++k)
                x.data[k] = static_cast<float>((x.data[k] - coef * eps_hat.data[k]) * inv_sqrt_alpha);
        }
    }
    if (cfg.clamp_output)
        for (float& v : x.data) v = std::clamp(v, 0.0f, 1.0f);
    return std::move(x.data);
}

volcore::Volume3D reconstruct(const volcore::Volume3D& v, const NoisePredictor& model, const ScheduleTable& table,
                              const SimplexNoiseConfig& noise, const ReconstructConfig& cfg,
                              const std::vector<bool>& selected) {
    cfg.validate(table);
    if (v.empty()) throw InvalidVolume("cannot reconstruct an empty volume");
    const auto& d = v.dims();
    if (!selected.empty() && static_cast<int>(selected.size()) != d.nz)
        throw InvalidArgument("slice selection length does not match the volume depth");
    volcore::Volume3D out = v;
    const std::size_t plane = static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.ny);
    std::vector<int> todo;
    for (int z = 0; z < d.nz; ++z)
        if (selected.empty() || selected[static_cast<std::size_t>(z)]) todo.push_back(z);
    parallel_for(static_cast<int>(todo.size()), cfg.threads, [&](int k) {
        const int z = todo[static_cast<std::size_t>(k)];
        const auto in = v.values().subspan(static_cast<std::size_t>(z) * plane, plane);
        const auto rec = reconstruct_slice(in, d.nx, d.ny, static_cast<std::uint64_t>(z), model, table, noise, cfg);
        std::copy(rec.begin(), rec.end(), out.values().begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(z) * plane));
    });
    return out;
}

} // namespace moodkit::diffusion
