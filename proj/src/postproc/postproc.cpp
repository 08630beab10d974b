#include "moodkit/postproc/postproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "moodkit/volcore/filters.hpp"
#include "moodkit/volcore/morphology.hpp"

namespace moodkit::postproc {

void PostprocConfig::validate() const {
    if (otsu_dilation_radius < 1 || closing_radius < 1) throw InvalidArgument("morphology radii must be >= 1");
    if (!(ssim_threshold > 0.0 && ssim_threshold < 1.0)) throw InvalidArgument("ssim threshold must be in (0, 1)");
    if (ssim_window < 1 || ssim_window % 2 == 0) throw InvalidArgument("ssim window must be odd");
    if (ssim_border_pad < 0) throw InvalidArgument("ssim border pad must be >= 0");
    if (!(gaussian_sigma > 0.0) || !(reference_dim > 0.0)) throw InvalidArgument("gaussian sigma must be positive");
}

namespace {

double mean_edge(const Dims& dims) { return (dims.nx + dims.ny + dims.nz) / 3.0; }

} // namespace

double PostprocConfig::sigma_for(const Dims& dims) const { return gaussian_sigma * mean_edge(dims) / reference_dim; }

int PostprocConfig::radius_for(const Dims& dims, int radius) const {
    return std::max(1, static_cast<int>(std::lround(radius * mean_edge(dims) / reference_dim)));
}

OtsuResult otsu_threshold(const Volume3D& v) {
    constexpr int kLevels = 256;
    OtsuResult r;
    if (v.empty()) return r;
    const double lo = v.min();
    const double hi = v.max();
    if (!(hi > lo)) return r;
    std::array<double, kLevels> hist{};
    const double scale = kLevels / (hi - lo);
    for (float x : v.values()) {
        const int b = std::min(kLevels - 1, static_cast<int>((x - lo) * scale));
        hist[static_cast<std::size_t>(b)] += 1.0;
    }
    const double total = static_cast<double>(v.size());
    double total_moment = 0.0;
    for (int i = 0; i < kLevels; ++i) total_moment += i * hist[static_cast<std::size_t>(i)];

    double w0 = 0.0;
    double m0 = 0.0;
    double best = -1.0;
    for (int k = 0; k < kLevels - 1; ++k) {
        w0 += hist[static_cast<std::size_t>(k)];
        m0 += k * hist[static_cast<std::size_t>(k)];
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double mu0 = m0 / w0;
        const double mu1 = (total_moment - m0) / w1;
        const double between = (w0 / total) * (w1 / total) * (mu0 - mu1) * (mu0 - mu1);
        if (between > best) {
            best = between;
            r.level = k;
        }
    }
    if (r.level < 0) return r;
    r.defined = true;
    r.threshold = lo + (r.level + 1) / scale;
    return r;
}

BodyMask body_mask(const Volume3D& v, const PostprocConfig& cfg) {
    cfg.validate();
    BodyMask out;
    out.mask = BinaryMask3D(v.dims());
    const auto otsu = otsu_threshold(v);
    if (!otsu.defined) {
        out.degenerate = true;
        return out;
    }
    out.otsu_threshold = otsu.threshold;
    BinaryMask3D fg(v.dims());
    for (std::size_t i = 0; i < v.size(); ++i) fg.set(i, v[i] > otsu.threshold);
    fg = volcore::dilate_ball(fg, cfg.radius_for(v.dims(), cfg.otsu_dilation_radius));
    fg = volcore::largest_component(fg);
    fg = volcore::close_ball(fg, cfg.radius_for(v.dims(), cfg.closing_radius));
    out.mask = volcore::fill_holes(fg);
    return out;
}

namespace {

std::vector<double> padded(const Volume3D& v, int pad, Dims& pd) {
    const Dims& d = v.dims();
    pd = Dims{d.nx + 2 * pad, d.ny + 2 * pad, d.nz + 2 * pad};
    std::vector<double> out(pd.count());
    for (int z = 0; z < pd.nz; ++z)
        for (int y = 0; y < pd.ny; ++y)
            for (int x = 0; x < pd.nx; ++x) out[pd.index(x, y, z)] = v.clamped(x - pad, y - pad, z - pad);
    return out;
}

} // namespace

Volume3D ssim_map(const Volume3D& x, const Volume3D& y, const PostprocConfig& cfg) {
    cfg.validate();
    if (!(x.dims() == y.dims())) throw InvalidArgument("ssim_map: dims differ");
    const int pad = cfg.ssim_border_pad;
    Dims pd;
    const auto px = padded(x, pad, pd);
    const auto py = padded(y, pad, pd);
    std::vector<double> xx(px.size());
    std::vector<double> yy(px.size());
    std::vector<double> xy(px.size());
    for (std::size_t i = 0; i < px.size(); ++i) {
        xx[i] = px[i] * px[i];
        yy[i] = py[i] * py[i];
        xy[i] = px[i] * py[i];
    }
    const int w = cfg.ssim_window;
    const auto mx = volcore::box_mean(px, pd, w);
    const auto my = volcore::box_mean(py, pd, w);
    const auto mxx = volcore::box_mean(xx, pd, w);
    const auto myy = volcore::box_mean(yy, pd, w);
    const auto mxy = volcore::box_mean(xy, pd, w);

    const double c1 = (cfg.ssim_k1 * cfg.dynamic_range) * (cfg.ssim_k1 * cfg.dynamic_range);
    const double c2 = (cfg.ssim_k2 * cfg.dynamic_range) * (cfg.ssim_k2 * cfg.dynamic_range);
    const Dims& d = x.dims();
    Volume3D out(d, 0.0f, x.spacing());
    for (int z = 0; z < d.nz; ++z)
        for (int yi = 0; yi < d.ny; ++yi)
            for (int xi = 0; xi < d.nx; ++xi) {
                const std::size_t i = pd.index(xi + pad, yi + pad, z + pad);
                const double ux = mx[i];
                const double uy = my[i];
                const double vx = mxx[i] - ux * ux;
                const double vy = myy[i] - uy * uy;
                const double cov = mxy[i] - ux * uy;
                const double s = ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
                out(xi, yi, z) = static_cast<float>(std::clamp(s, -1.0, 1.0));
            }
    return out;
}

BinaryMask3D score_pixels(const Volume3D& ssim, const BinaryMask3D& body, const PostprocConfig& cfg) {
    cfg.validate();
    if (!(ssim.dims() == body.dims())) throw InvalidArgument("score_pixels: dims differ");
    Volume3D masked = ssim;
    for (std::size_t i = 0; i < masked.size(); ++i)
        if (!body[i]) masked[i] = 1.0f;
    const Volume3D smooth = volcore::gaussian_filter(masked, cfg.sigma_for(ssim.dims()));
    BinaryMask3D out(ssim.dims());
    for (std::size_t i = 0; i < out.size(); ++i) out.set(i, body[i] && smooth[i] < cfg.ssim_threshold);
    return out;
}

std::string_view to_string(Branch b) {
    switch (b) {
    case Branch::histogram: return "histogram";
    case Branch::diffusion: return "diffusion";
    default: return "none";
    }
}

PredictionResult finalize(const BinaryMask3D& working_mask, const Dims& original_dims) {
    PredictionResult r;
    r.pixel_mask = volcore::resample_mask_nearest(working_mask, original_dims);
    r.diagnostics.voxels_flagged = r.pixel_mask.count();
    r.sample_score = r.diagnostics.voxels_flagged > 0 ? 1 : 0;
    return r;
}

} // namespace moodkit::postproc
