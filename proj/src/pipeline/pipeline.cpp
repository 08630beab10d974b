#include "moodkit/pipeline/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "moodkit/diffusion/sampler.hpp"
#include "moodkit/error.hpp"
#include "moodkit/volcore/io.hpp"

namespace moodkit::pipeline {

std::string_view to_string(Preset p) { return p == Preset::full ? "full" : "desk"; }

Preset parse_preset(std::string_view s) {
    if (s == "desk") return Preset::desk;
    if (s == "full") return Preset::full;
    throw InvalidArgument("unknown preset '" + std::string(s) + "' (expected desk or full)");
}

int preset_edge(Preset p) { return p == Preset::full ? 256 : 64; }

PipelineConfig PipelineConfig::for_region(Region r, Preset preset) {
    PipelineConfig cfg;
    cfg.region = r;
    cfg.hist = histood::HistDetectorConfig::for_region(r);
    const int e = preset_edge(preset);
    cfg.working_dims = Dims{e, e, e};
    return cfg;
}

Dims PipelineConfig::working_for(const Dims& input) const { return working_dims ? *working_dims : input; }

Pipeline::Pipeline(histood::HistogramReference ref, denoiser::Checkpoint ckpt, PipelineConfig cfg)
    : ref_(std::move(ref)), ckpt_(std::move(ckpt)), table_(diffusion::build_schedule(ckpt_.scheduler)), cfg_(cfg) {
    cfg_.hist.validate();
    cfg_.post.validate();
    if (cfg_.t_start < 1 || cfg_.t_start >= table_.num_steps())
        throw InvalidArgument("t_start " + std::to_string(cfg_.t_start) + " outside the checkpoint's schedule");
    if (cfg_.threads < 1) throw InvalidArgument("thread count must be >= 1");
    if (ref_.region != cfg_.region)
        throw ConfigMismatch("histogram reference was built for region " + std::string(histood::to_string(ref_.region)) +
                             ", pipeline runs " + std::string(histood::to_string(cfg_.region)));
}

std::vector<bool> body_slices(const volcore::BinaryMask3D& body, int margin) {
    const Dims& d = body.dims();
    const std::size_t plane = static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.ny);
    std::vector<bool> hit(static_cast<std::size_t>(d.nz), false);
    const auto bytes = body.bytes();
    for (int z = 0; z < d.nz; ++z) {
        const auto first = bytes.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(z) * plane);
        if (std::any_of(first, first + static_cast<std::ptrdiff_t>(plane), [](std::uint8_t b) { return b != 0; }))
            hit[static_cast<std::size_t>(z)] = true;
    }
    std::vector<bool> out(hit.size(), false);
    for (int z = 0; z < d.nz; ++z) {
        if (!hit[static_cast<std::size_t>(z)]) continue;
        for (int k = std::max(0, z - margin); k <= std::min(d.nz - 1, z + margin); ++k) out[static_cast<std::size_t>(k)] = true;
    }
    return out;
}

Volume3D Pipeline::reconstruct(const Volume3D& working_normalized, std::uint64_t sample_key,
                               const std::vector<bool>& selected) const {
    diffusion::ReconstructConfig rc;
    rc.t_start = cfg_.t_start;
    rc.seed = diffusion::stream_key(cfg_.seed, sample_key);
    rc.threads = cfg_.threads;
    return diffusion::reconstruct(working_normalized, ckpt_.model, table_, ckpt_.noise, rc, selected);
}

PredictionResult Pipeline::predict(const Volume3D& input, std::uint64_t sample_key) const {
    if (input.empty()) throw InvalidVolume("cannot predict on an empty volume");
    const Dims original = input.dims();
    const Dims working = cfg_.working_for(original);
    Volume3D v = working == original ? input : volcore::resample_trilinear(input, working);
    v = volcore::normalize(v);

    const double expected_voxels = static_cast<double>(working.count());
    if (std::abs(ref_.voxels_per_volume() - expected_voxels) > 0.5)
        throw ConfigMismatch("histogram reference describes volumes of " + std::to_string(ref_.voxels_per_volume()) +
                             " voxels, working grid has " + std::to_string(working.count()));

    const auto hist = histood::detect(v, ref_, cfg_.hist);
    if (hist.detected) {
        PredictionResult r = postproc::finalize(*hist.mask, original);
        r.branch = postproc::Branch::histogram;
        r.diagnostics.peak_intensity = hist.peak_intensity;
        return r;
    }

    const auto body = postproc::body_mask(v, cfg_.post);
    if (body.degenerate || !body.mask.any()) {
        PredictionResult r = postproc::finalize(volcore::BinaryMask3D(working), original);
        r.branch = postproc::Branch::none;
        return r;
    }
    // SSIM windows reach half a window past the body, so those slices are reconstructed too
    const auto selected = body_slices(body.mask, cfg_.post.ssim_window / 2);
    Volume3D recon = reconstruct(v, sample_key, selected);
    for (std::size_t i = 0; i < recon.size(); ++i)
        if (!body.mask[i]) recon[i] = 0.0f;
    const Volume3D ssim = postproc::ssim_map(v, recon, cfg_.post);
    const auto pixels = postproc::score_pixels(ssim, body.mask, cfg_.post);

    PredictionResult r = postproc::finalize(pixels, original);
    r.branch = r.sample_score ? postproc::Branch::diffusion : postproc::Branch::none;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < ssim.size(); ++i)
        if (body.mask[i]) {
            sum += ssim[i];
            ++n;
        }
    r.diagnostics.mean_ssim = n ? sum / static_cast<double>(n) : 1.0;
    return r;
}

std::vector<Volume3D> load_training_volumes(const std::filesystem::path& manifest_path, const PipelineConfig& cfg) {
    const auto manifest = volcore::read_manifest(manifest_path);
    std::vector<Volume3D> out;
    for (const auto& e : manifest.entries) {
        if (e.split != volcore::Split::train || e.is_ood()) continue;
        Volume3D v = volcore::read_volume(volcore::resolve_entry_path(manifest_path, e.path));
        const Dims working = cfg.working_for(v.dims());
        if (!(working == v.dims())) v = volcore::resample_trilinear(v, working);
        out.push_back(volcore::normalize(v));
    }
    if (out.empty()) throw InvalidArgument("manifest " + manifest_path.string() + " has no in-distribution training entries");
    for (const auto& v : out)
        if (!(v.dims() == out.front().dims())) throw InvalidVolume("training volumes have different working dims");
    return out;
}

std::vector<std::vector<float>> training_slices(const std::vector<Volume3D>& volumes) {
    std::vector<std::vector<float>> out;
    for (const auto& v : volumes) {
        const Dims& d = v.dims();
        const std::size_t plane = static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.ny);
        for (int z = 0; z < d.nz; ++z) {
            const auto s = v.values().subspan(static_cast<std::size_t>(z) * plane, plane);
            if (std::any_of(s.begin(), s.end(), [](float x) { return x != 0.0f; })) out.emplace_back(s.begin(), s.end());
        }
    }
    return out;
}

void write_sample_score(int score, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << (score ? "1\n" : "0\n");
    if (!out) throw IoError("short write to " + path.string());
}

} // namespace moodkit::pipeline
