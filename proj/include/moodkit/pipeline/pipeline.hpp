#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "moodkit/denoiser/denoiser.hpp"
#include "moodkit/diffusion/schedule.hpp"
#include "moodkit/histood/histood.hpp"
#include "moodkit/postproc/postproc.hpp"
#include "moodkit/volcore/manifest.hpp"
#include "moodkit/volcore/volume.hpp"

namespace moodkit::pipeline {

using histood::Region;
using postproc::PredictionResult;
using volcore::Dims;
using volcore::Volume3D;

/// Working-grid presets: desk runs on 64^3, full on the 256^3 challenge grid.
enum class Preset { desk, full };
std::string_view to_string(Preset p);
Preset parse_preset(std::string_view s);
/// Cubic working grid edge of a preset.
int preset_edge(Preset p);

struct PipelineConfig {
    Region region = Region::brain;
    /// Grid the detectors run on; unset means the input grid.
    std::optional<Dims> working_dims;
    histood::HistDetectorConfig hist;
    postproc::PostprocConfig post;
    int t_start = 200;
    std::uint64_t seed = 0;
    int threads = 1;

    /// Region defaults (histogram k) on the preset's working grid.
    static PipelineConfig for_region(Region r, Preset preset = Preset::desk);
    Dims working_for(const Dims& input) const;
};

/// A trained detector: histogram reference plus denoiser checkpoint.
class Pipeline {
public:
    Pipeline(histood::HistogramReference ref, denoiser::Checkpoint ckpt, PipelineConfig cfg);

    /// Resize to the working grid, normalize, try the histogram branch and fall back to
    /// diffusion reconstruction plus SSIM scoring. `sample_key` selects the noise stream.
    PredictionResult predict(const Volume3D& input, std::uint64_t sample_key = 0) const;

    /// Working-grid normalized image and its reconstruction over the body slices.
    Volume3D reconstruct(const Volume3D& working_normalized, std::uint64_t sample_key,
                         const std::vector<bool>& selected = {}) const;

    const PipelineConfig& config() const noexcept { return cfg_; }
    const denoiser::Checkpoint& checkpoint() const noexcept { return ckpt_; }

private:
    histood::HistogramReference ref_;
    denoiser::Checkpoint ckpt_;
    diffusion::ScheduleTable table_;
    PipelineConfig cfg_;
};

/// Slices whose body mask is non-empty, widened by `margin` slices on both sides.
std::vector<bool> body_slices(const volcore::BinaryMask3D& body, int margin);

struct SampleOutcome {
    std::string path;
    volcore::Label label = volcore::Label::in_distribution;
    volcore::Severity severity = volcore::Severity::none;
    int score = 0;
    postproc::Branch branch = postproc::Branch::none;
    std::size_t voxels_flagged = 0;
    std::optional<double> dice;
    std::optional<double> mean_ssim;
    std::optional<double> peak_intensity;
};

struct GroupStats {
    std::size_t n = 0;
    std::size_t positives = 0; ///< samples scored 1
    std::optional<double> rate() const;
};

struct EvalReport {
    std::vector<SampleOutcome> samples;
    /// Keyed by OOD label and by label_severity; values are sensitivity counts.
    std::map<std::string, GroupStats> groups;
    std::size_t id_total = 0;
    std::size_t id_negatives = 0; ///< in-distribution samples scored 0

    std::optional<double> sensitivity(const std::string& group) const;
    std::optional<double> specificity() const;
};

/// Builds the report from per-sample outcomes. Every benchmark label and label_severity
/// cell is present, with n = 0 when no sample falls in it.
EvalReport summarize(std::vector<SampleOutcome> samples);

/// Progress callback: (index, total, outcome).
using EvalProgress = std::function<void(std::size_t, std::size_t, const SampleOutcome&)>;

/// Runs predict over every manifest entry with noise stream key = entry index.
EvalReport evaluate(const std::filesystem::path& manifest_path, const Pipeline& pipeline,
                    const EvalProgress& progress = {});

/// "group,n,sensitivity" with groups sorted; an empty group leaves the value blank; the
/// in-distribution row is named "specificity" and carries TN / (TN + FP).
void report_csv(const EvalReport& report, const std::filesystem::path& path);
/// One row per sample: path,label,severity,score,branch,voxels_flagged,dice,mean_ssim,peak_intensity.
void report_samples_csv(const EvalReport& report, const std::filesystem::path& path);
/// Path of the per-sample table written next to a group CSV: stem + "_samples.csv".
std::filesystem::path samples_csv_path(const std::filesystem::path& group_csv);

/// Train-split in-distribution volumes of a manifest, resampled to the working grid and
/// normalized.
std::vector<Volume3D> load_training_volumes(const std::filesystem::path& manifest_path, const PipelineConfig& cfg);
/// Axial slices of the volumes that contain at least one non-zero voxel.
std::vector<std::vector<float>> training_slices(const std::vector<Volume3D>& volumes);

/// Writes "0\n" or "1\n".
void write_sample_score(int score, const std::filesystem::path& path);

} // namespace moodkit::pipeline
