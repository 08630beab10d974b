#pragma once

#include <optional>
#include <string_view>

#include "moodkit/volcore/volume.hpp"

namespace moodkit::postproc {

using volcore::BinaryMask3D;
using volcore::Dims;
using volcore::Volume3D;

struct PostprocConfig {
    int otsu_dilation_radius = 5; ///< at the 256-voxel reference resolution
    int closing_radius = 5;       ///< at the 256-voxel reference resolution
    int ssim_border_pad = 3;
    double gaussian_sigma = 15.0; ///< at the 256-voxel reference resolution
    double reference_dim = 256.0;
    double ssim_threshold = 0.5;
    int ssim_window = 7;
    double ssim_k1 = 0.01;
    double ssim_k2 = 0.03;
    double dynamic_range = 1.0;

    void validate() const;
    /// Gaussian sigma in voxels for a grid of the given dims (scaled linearly with the mean edge).
    double sigma_for(const Dims& dims) const;
    /// A reference-resolution ball radius scaled the same way, rounded, at least 1.
    int radius_for(const Dims& dims, int radius) const;
};

struct OtsuResult {
    double threshold = 0.0; ///< foreground is value > threshold
    int level = -1;         ///< last level of the lower class, -1 if undefined
    bool defined = false;
};

/// Exhaustive search over the 256-level histogram spanning [min, max] for the cut
/// maximizing between-class variance w0 * w1 * (mu0 - mu1)^2. Ties go to the lowest cut.
OtsuResult otsu_threshold(const Volume3D& v);

struct BodyMask {
    BinaryMask3D mask;
    double otsu_threshold = 0.0;
    bool degenerate = false; ///< constant input, Otsu undefined, mask empty
};

/// Otsu foreground, ball dilation, largest 26-connected component, ball closing, hole fill.
/// Both radii are scaled to the grid with radius_for.
BodyMask body_mask(const Volume3D& v, const PostprocConfig& cfg);

/// Per-voxel SSIM over a cubic uniform window after replicate-padding both inputs by
/// cfg.ssim_border_pad; cropped back to the input dims.
Volume3D ssim_map(const Volume3D& x, const Volume3D& y, const PostprocConfig& cfg);

/// SSIM forced to 1 outside the body, Gaussian-smoothed, flagged where below threshold,
/// intersected with the body.
BinaryMask3D score_pixels(const Volume3D& ssim, const BinaryMask3D& body, const PostprocConfig& cfg);

enum class Branch { none, histogram, diffusion };
std::string_view to_string(Branch b);

struct Diagnostics {
    std::optional<double> peak_intensity;
    std::optional<double> mean_ssim; ///< mean SSIM inside the body
    std::size_t voxels_flagged = 0;
};

struct PredictionResult {
    BinaryMask3D pixel_mask; ///< at the original input resolution
    int sample_score = 0;    ///< 1 iff pixel_mask has any voxel set
    Branch branch = Branch::none;
    Diagnostics diagnostics;
};

/// Nearest-neighbour upsample to the original grid; sample score from the any-voxel rule.
PredictionResult finalize(const BinaryMask3D& working_mask, const Dims& original_dims);

} // namespace moodkit::postproc
