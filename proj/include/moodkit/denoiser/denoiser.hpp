#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "moodkit/diffusion/noise.hpp"
#include "moodkit/diffusion/sampler.hpp"
#include "moodkit/diffusion/schedule.hpp"

namespace moodkit::denoiser {

using diffusion::SliceBatch;

enum class Activation { silu, identity };

/// Stack of 3x3 convolutions with zero padding (padding == dilation keeps the shape).
/// A sinusoidal embedding of t is mapped by a learned affine map to a per-channel bias
/// added after each layer listed in `time_layers`. Every layer but the last is followed
/// by the activation.
struct Architecture {
    std::vector<int> widths{1, 16, 32, 16, 1}; ///< channels; front and back must be 1
    std::vector<int> dilations{1, 1, 1, 1};    ///< one per conv layer
    int kernel = 3;
    int time_dim = 32;
    std::vector<int> time_layers{0, 1};
    Activation activation = Activation::silu;

    int num_layers() const noexcept { return static_cast<int>(widths.size()) - 1; }
    void validate() const;
    std::string to_json() const;
    static Architecture from_json(const std::string& text);
    friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Named slice of the flat parameter vector.
struct ParamBlock {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;

    friend bool operator==(const ParamBlock&, const ParamBlock&) = default;
};

/// Offsets of conv{l}.weight [out][in][k][k], conv{l}.bias, time{l}.weight [out][time_dim]
/// and time{l}.bias for every layer, in that order per layer.
std::vector<ParamBlock> parameter_layout(const Architecture& arch);
std::size_t parameter_count(const Architecture& arch);

/// Sinusoidal embedding: [sin(t * f_i), cos(t * f_i)], f_i = 10000^(-i / (dim / 2)).
std::vector<double> time_embedding(int t, int dim);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainConfig {
    double learning_rate = 1e-3; ///< desk default; 2.5e-5 is the large-model preset
    int batch_size = 4;
    int epochs = 20;
    AdamConfig adam;
    std::uint64_t seed = 0;
    /// Exclusive upper bound of the sampled timestep; 0 means the schedule length.
    int max_train_step = 0;
    int threads = 1; ///< workers over batch items; the update does not depend on this

    void validate() const;
};

class Model final : public diffusion::NoisePredictor {
public:
    Model() = default;
    explicit Model(Architecture arch);

    const Architecture& architecture() const noexcept { return arch_; }
    std::span<const float> params() const noexcept { return params_; }
    std::span<float> params() noexcept { return params_; }
    const std::vector<ParamBlock>& layout() const noexcept { return layout_; }
    const ParamBlock& block(const std::string& name) const;

    /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights; biases zero.
    void init(std::uint64_t seed);

    SliceBatch predict_noise(const SliceBatch& x, std::span<const int> t) const override;
    /// Threads over batch items; output does not depend on the thread count.
    SliceBatch predict_noise(const SliceBatch& x, std::span<const int> t, int threads) const;

    /// Mean squared error against `target` and its gradient w.r.t. every parameter,
    /// accumulated in double. Batch items are reduced in index order.
    double loss_and_gradient(const SliceBatch& x, std::span<const int> t, const SliceBatch& target,
                             std::vector<double>& grad) const;
    /// The same loss evaluated entirely in double with the given parameter values; the
    /// gradient is filled when `grad` is non-null.
    double loss_double(std::span<const double> params, const SliceBatch& x, std::span<const int> t,
                       const SliceBatch& target, std::vector<double>* grad = nullptr) const;

    friend bool operator==(const Model& a, const Model& b) {
        return a.arch_ == b.arch_ && a.layout_ == b.layout_ && a.params_ == b.params_;
    }

private:
    Architecture arch_;
    std::vector<ParamBlock> layout_;
    std::vector<float> params_;
};

/// Adam state over the flat parameter vector.
struct AdamState {
    std::vector<float> m;
    std::vector<float> v;
    std::uint64_t step = 0;

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

void adam_update(std::span<float> params, std::span<const double> grad, AdamState& state, double lr,
                 const AdamConfig& cfg);

/// Everything needed to resume training or run inference.
struct Checkpoint {
    Model model;
    AdamState optimizer;
    int epoch = 0;
    std::vector<double> loss_history; ///< mean loss per completed epoch
    diffusion::SchedulerConfig scheduler;
    diffusion::SimplexNoiseConfig noise;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Draws the 1-based step t uniform in [1, max_t), noise per slice, forms x_t with schedule
/// entry t - 1, takes the MSE between the added and the predicted noise, backpropagates
/// and applies one Adam update.
double train_step(Model& model, AdamState& optimizer, const SliceBatch& x0, const diffusion::ScheduleTable& table,
                  const diffusion::SimplexNoiseConfig& noise, const TrainConfig& cfg, std::mt19937_64& rng);

struct TrainProgress {
    int epoch = 0;
    double mean_loss = 0.0;
    double seconds = 0.0;
};

/// Trains over all slices for cfg.epochs epochs, reshuffling every epoch. The callback
/// (optional) is invoked after every epoch.
void train(Checkpoint& ckpt, const std::vector<std::vector<float>>& slices, int height, int width,
           const TrainConfig& cfg, const std::function<void(const TrainProgress&)>& on_epoch = {});

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    std::string worst_param;
};

/// Central finite differences (step h on double shadow parameters) against the analytic
/// gradient for `samples` parameters drawn without replacement.
GradCheckResult check_gradients(const Model& model, const SliceBatch& x, std::span<const int> t,
                                const SliceBatch& target, std::size_t samples = 256, double h = 1e-3,
                                std::uint64_t seed = 0);

// "DENO0001" | u32 version | u32 json length | json (architecture, scheduler, noise,
// epoch) | u64 n | f32 params[n] | f32 m[n] | f32 v[n] | u64 adam step | u32 k | f64 losses[k]
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
/// Throws ConfigMismatch when `expected` is given and differs from the stored schedule.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<diffusion::SchedulerConfig>& expected = std::nullopt);

} // namespace moodkit::denoiser
