#include "moodkit/diffusion/schedule.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "moodkit/error.hpp"

namespace moodkit::diffusion {

void SchedulerConfig::validate() const {
    if (num_steps < 2) throw InvalidArgument("scheduler needs at least 2 steps");
    if (!(beta_start > 0.0 && beta_start < beta_end && beta_end < 1.0))
        throw InvalidArgument("scheduler requires 0 < beta_start < beta_end < 1");
}

ScheduleTable build_schedule(const SchedulerConfig& cfg) {
    cfg.validate();
    const auto n = static_cast<std::size_t>(cfg.num_steps);
    ScheduleTable table;
    table.beta.resize(n);
    table.alpha.resize(n);
    table.alpha_bar.resize(n);
    const double lo = std::sqrt(cfg.beta_start);
    const double hi = std::sqrt(cfg.beta_end);
    const double last = static_cast<double>(n - 1);
    double running = 1.0;
    for (std::size_t t = 0; t < n; ++t) {
        double b = 0.0;
        // pin the endpoints so beta[0] and beta[T-1] are the configured values exactly
        if (t == 0)
            b = cfg.beta_start;
        else if (t == n - 1)
            b = cfg.beta_end;
        else {
            const double s = lo + (static_cast<double>(t) / last) * (hi - lo);
            b = s * s;
        }
        table.beta[t] = b;
        table.alpha[t] = 1.0 - b;
        running *= table.alpha[t];
        table.alpha_bar[t] = running;
    }
    return table;
}

void write_schedule_csv(const ScheduleTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "t,beta,alpha_bar\n";
    char line[96];
    for (int t = 0; t < table.num_steps(); ++t) {
        const auto i = static_cast<std::size_t>(t);
        std::snprintf(line, sizeof(line), "%d,%.17g,%.17g\n", t, table.beta[i], table.alpha_bar[i]);
        out << line;
    }
}

} // namespace moodkit::diffusion
