#pragma once

#include <filesystem>
#include <vector>

namespace moodkit::diffusion {

enum class ScheduleKind { scaled_linear };

struct SchedulerConfig {
    int num_steps = 1000;
    double beta_start = 0.001;
    double beta_end = 0.015;
    ScheduleKind kind = ScheduleKind::scaled_linear;

    void validate() const;
    friend bool operator==(const SchedulerConfig&, const SchedulerConfig&) = default;
};

/// Precomputed per-step coefficients. Index t runs over [0, num_steps).
struct ScheduleTable {
    std::vector<double> beta;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;

    int num_steps() const noexcept { return static_cast<int>(beta.size()); }
};

/// beta[t] = (sqrt(beta_start) + t / (T - 1) * (sqrt(beta_end) - sqrt(beta_start)))^2,
/// alpha = 1 - beta, alpha_bar = running product of alpha.
ScheduleTable build_schedule(const SchedulerConfig& cfg);

/// Debug dump: "t,beta,alpha_bar" per line with a header.
void write_schedule_csv(const ScheduleTable& table, const std::filesystem::path& path);

} // namespace moodkit::diffusion
