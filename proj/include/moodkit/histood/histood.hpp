#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "moodkit/volcore/manifest.hpp"
#include "moodkit/volcore/volume.hpp"

namespace moodkit::histood {

using volcore::BinaryMask3D;
using volcore::Volume3D;

inline constexpr int kDefaultBins = 4096;

enum class Region : std::uint8_t { brain = 0, abdomen = 1 };

std::string_view to_string(Region r);
Region parse_region(std::string_view s);

/// Per-bin mean and population standard deviation of training-set histogram counts.
struct HistogramReference {
    int n_bins = kDefaultBins;
    std::vector<double> bin_mean;
    std::vector<double> bin_std;
    Region region = Region::brain;

    /// Voxels per training volume implied by the stored means.
    double voxels_per_volume() const;
};

struct HistDetectorConfig {
    double k_sigma = 64.0;
    bool zero_bin_discard = true;
    int morph_size = 6;
    double min_peak_excess = 50.0;

    static HistDetectorConfig for_region(Region r);
    void validate() const;
};

struct HistDetection {
    bool detected = false;
    std::optional<int> peak_bin;
    std::optional<double> peak_intensity; ///< bin centre, normalized units
    double peak_excess = 0.0;
    std::optional<BinaryMask3D> mask;
};

/// Counts per bin with bin = min(floor(x * n_bins), n_bins - 1). Input must lie in [0, 1].
std::vector<std::uint64_t> compute_histogram(const Volume3D& v, int n_bins = kDefaultBins);

/// Training volumes must already be normalized.
HistogramReference build_reference(std::span<const Volume3D> training, Region region = Region::brain,
                                   int n_bins = kDefaultBins);

/// Loads the train-split in-distribution entries of a manifest, normalizes each
/// volume (resampled to `working` when given) and builds the reference.
HistogramReference build_reference(const std::filesystem::path& manifest_path, Region region = Region::brain,
                                   int n_bins = kDefaultBins, std::optional<volcore::Dims> working = std::nullopt);

/// Per-bin excess of the test histogram over mean + k * std; bin 0 zeroed when discarding.
std::vector<double> excess_counts(std::span<const std::uint64_t> hist, const HistogramReference& ref,
                                  const HistDetectorConfig& cfg);

/// Peak search only; never builds a mask.
HistDetection detect_peak(const Volume3D& v, const HistogramReference& ref, const HistDetectorConfig& cfg);

/// Peak search plus anomaly mask. A peak whose mask opens to nothing is reported as
/// not detected, with peak_bin still set.
HistDetection detect(const Volume3D& v, const HistogramReference& ref, const HistDetectorConfig& cfg);

/// Voxels in `peak_bin`, cleaned by a cubic opening of edge cfg.morph_size.
BinaryMask3D make_mask(const Volume3D& v, int peak_bin, const HistDetectorConfig& cfg, int n_bins = kDefaultBins);

// "HREF0001" | u32 n_bins | f64 means[n] | f64 stds[n] | u8 region
void write_reference(const HistogramReference& ref, const std::filesystem::path& path);
HistogramReference read_reference(const std::filesystem::path& path);

} // namespace moodkit::histood
