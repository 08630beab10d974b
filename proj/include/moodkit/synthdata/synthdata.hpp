#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "moodkit/histood/histood.hpp"
#include "moodkit/volcore/manifest.hpp"
#include "moodkit/volcore/volume.hpp"

namespace moodkit::synthdata {

using volcore::BinaryMask3D;
using volcore::Dims;
using volcore::Volume3D;

enum class TransformKind { elastic, blur, bias, swap, black_slice, toy_sphere };

std::string_view to_string(TransformKind k);

struct TransformSpec {
    TransformKind kind = TransformKind::blur;
    /// max_displacement | std | coefficients | patch_size | slice_thickness | sphere_radius
    double parameter = 0.0;
    std::uint64_t seed = 0;
    std::optional<double> aux; ///< sphere intensity for toy_sphere
};

struct OodSample {
    Volume3D image;
    BinaryMask3D truth_mask;
    TransformSpec spec;
};

/// Voxels whose value moved by more than this count as changed in truth masks.
inline constexpr float kChangeTolerance = 1e-6f;

struct PhantomConfig {
    /// Body intensity before the range map: base_level + radial_gain * (1 - r^2), r the
    /// normalized ellipsoid radius. A bright, nearly flat body leaves little coarse
    /// structure for a relocated patch to disturb.
    double base_level = 0.7;
    double radial_gain = 0.05;
    /// Striation: amplitude * sin(2 pi * cycles * x / nx + random phase), constant along y and z.
    double stripe_amplitude = 0.2;
    double stripe_cycles = 18.0; ///< periods across the grid; 64 / 18 ~ 3.6 voxels at 64^3
    /// Optional isotropic difference-of-Gaussians texture (std before the soft range map).
    double texture_amplitude = 0.0;
    double texture_sigma_fine = 0.7;
    double texture_sigma_coarse = 1.4;

    void validate() const;
};

/// Ellipsoidal body with a shallow radial intensity profile, an inner low-intensity lobe, a
/// striated texture along x with random phase and optional band-limited noise texture,
/// mapped smoothly into (0.05, 0.95].
/// Background is exactly 0. Deterministic per seed.
Volume3D generate_phantom(std::uint64_t seed, Dims dims, const PhantomConfig& cfg = {});

/// Sets the digital ball |p - center| <= radius to `intensity`. The ball must lie inside
/// the foreground bounding box. Radius <= 0 leaves the image unchanged with an empty mask.
OodSample insert_toy_sphere(const Volume3D& v, std::array<int, 3> center, double radius, double intensity);

/// Random 7x7x7 control-grid displacement (uniform in [-d, d] per axis), trilinearly
/// upsampled, backward-warped with trilinear sampling and edge clamping.
OodSample apply_elastic(const Volume3D& v, double max_displacement, std::uint64_t seed);

/// Isotropic Gaussian blur (truncated at 4 std, edge replicate). std < 0.25 is the identity.
OodSample apply_blur(const Volume3D& v, double std_dev, std::uint64_t seed);

/// Multiplies by exp(P) with P an order-3 polynomial on [-1, 1]^3 whose 20 monomial
/// coefficients are uniform in [-c, c]; result clipped to [0, 1].
OodSample apply_bias_field(const Volume3D& v, double coefficients, std::uint64_t seed);

struct SwapPlacement {
    std::array<int, 3> first{};
    std::array<int, 3> second{};
    int edge = 0;
};

/// Two non-overlapping cubic patches inside the foreground bounding box, uniform corners.
/// Draws whose patches have identical content are rejected (unless the volume offers no other).
SwapPlacement choose_swap_placement(const Volume3D& v, int patch_size, std::uint64_t seed);
/// Exchanges the two patches; applying the same placement twice restores the input.
Volume3D swap_patches(const Volume3D& v, const SwapPlacement& p);
OodSample apply_swap(const Volume3D& v, double patch_size, std::uint64_t seed);

/// Zeroes a slab of `thickness` slices along a random axis within the foreground extent.
OodSample apply_black_slice(const Volume3D& v, double thickness, std::uint64_t seed);

/// Dispatches on spec.kind. toy_sphere places the ball at the foreground centroid with
/// intensity spec.aux (default 0.24).
OodSample apply_transform(const Volume3D& v, const TransformSpec& spec);

/// One (transform, severity) cell of the validation-set table.
struct BenchmarkCell {
    TransformKind kind;
    volcore::Severity severity;
    double nominal; ///< value at the region's native resolution
};

/// The ten cells for a region, ordered elastic, blur, bias, swap, black_slice; low then high.
std::vector<BenchmarkCell> benchmark_cells(histood::Region region);

/// Native edge length the nominal values refer to: 256 (brain) or 512 (abdomen).
int native_dim(histood::Region region);

/// Nominal value rescaled to a grid of the given dims. Spatial parameters scale with
/// mean_edge / native_dim (blur, elastic: real-valued; swap, black slice: rounded, >= 1);
/// bias coefficients are dimensionless and never scaled.
double scaled_parameter(const BenchmarkCell& cell, const Dims& dims, histood::Region region);

volcore::Label label_of(TransformKind k);

/// Writes n_id copies of source volumes as in-distribution validation entries and,
/// for each benchmark cell, n_per_cell transformed samples with masks, cycling through
/// the sources. Files go to out_dir; the manifest is written to out_dir/manifest.json
/// and returned. Deterministic per seed.
volcore::DatasetManifest build_benchmark(const std::vector<Volume3D>& sources, int n_id, int n_per_cell,
                                         const std::filesystem::path& out_dir, std::uint64_t seed,
                                         histood::Region region);

/// Writes `count` phantoms and a manifest (first count - count / 10 entries train, the
/// rest val) to out_dir.
volcore::DatasetManifest generate_corpus(const std::filesystem::path& out_dir, int count, int dim,
                                         std::uint64_t seed, const PhantomConfig& cfg = {});

} // namespace moodkit::synthdata
