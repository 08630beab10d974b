#include "moodkit/histood/histood.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "moodkit/error.hpp"
#include "moodkit/volcore/io.hpp"
#include "moodkit/volcore/morphology.hpp"

namespace moodkit::histood {

std::string_view to_string(Region r) { return r == Region::abdomen ? "abdomen" : "brain"; }

Region parse_region(std::string_view s) {
    if (s == "brain") return Region::brain;
    if (s == "abdomen") return Region::abdomen;
    throw InvalidArgument("unknown region '" + std::string(s) + "' (expected brain or abdomen)");
}

double HistogramReference::voxels_per_volume() const {
    double total = 0.0;
    for (double m : bin_mean) total += m;
    return total;
}

HistDetectorConfig HistDetectorConfig::for_region(Region r) {
    HistDetectorConfig cfg;
    cfg.k_sigma = r == Region::abdomen ? 128.0 : 64.0;
    return cfg;
}

void HistDetectorConfig::validate() const {
    if (!(k_sigma > 0.0)) throw InvalidArgument("k_sigma must be positive");
    if (morph_size < 1) throw InvalidArgument("morph_size must be >= 1");
}

namespace {

int bin_of(float x, int n_bins) {
    const auto b = static_cast<int>(std::floor(static_cast<double>(x) * n_bins));
    return std::min(b, n_bins - 1);
}

} // namespace

std::vector<std::uint64_t> compute_histogram(const Volume3D& v, int n_bins) {
    if (n_bins < 1) throw InvalidArgument("histogram needs at least one bin");
    if (v.empty()) throw InvalidVolume("histogram of an empty volume");
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(n_bins), 0);
    for (float x : v.values()) {
        if (!(x >= 0.0f && x <= 1.0f)) throw InvalidVolume("histogram input is not normalized to [0, 1]");
        ++counts[static_cast<std::size_t>(bin_of(x, n_bins))];
    }
    return counts;
}

HistogramReference build_reference(std::span<const Volume3D> training, Region region, int n_bins) {
    if (training.empty()) throw InvalidArgument("cannot build a histogram reference from no training volumes");
    const auto nb = static_cast<std::size_t>(n_bins);
    std::vector<double> sum(nb, 0.0);
    std::vector<double> sum_sq(nb, 0.0);
    for (const auto& v : training) {
        const auto h = compute_histogram(v, n_bins);
        for (std::size_t i = 0; i < nb; ++i) {
            const auto c = static_cast<double>(h[i]);
            sum[i] += c;
            sum_sq[i] += c * c;
        }
    }
    HistogramReference ref;
    ref.n_bins = n_bins;
    ref.region = region;
    ref.bin_mean.resize(nb);
    ref.bin_std.resize(nb);
    const auto n = static_cast<double>(training.size());
    for (std::size_t i = 0; i < nb; ++i) {
        const double mean = sum[i] / n;
        // counts are integers, so this is exact whenever all volumes agree
        const double var = std::max(0.0, sum_sq[i] / n - mean * mean);
        ref.bin_mean[i] = mean;
        ref.bin_std[i] = std::sqrt(var);
    }
    return ref;
}

HistogramReference build_reference(const std::filesystem::path& manifest_path, Region region, int n_bins,
                                   std::optional<volcore::Dims> working) {
    const auto manifest = volcore::read_manifest(manifest_path);
    std::vector<Volume3D> training;
    for (const auto& e : manifest.entries) {
        if (e.split != volcore::Split::train || e.is_ood()) continue;
        Volume3D v = volcore::read_volume(volcore::resolve_entry_path(manifest_path, e.path));
        if (working && !(v.dims() == *working)) v = volcore::resample_trilinear(v, *working);
        training.push_back(volcore::normalize(v));
    }
    if (training.empty()) throw InvalidArgument("manifest " + manifest_path.string() + " has no in-distribution training entries");
    return build_reference(training, region, n_bins);
}

std::vector<double> excess_counts(std::span<const std::uint64_t> hist, const HistogramReference& ref,
                                  const HistDetectorConfig& cfg) {
    if (static_cast<int>(hist.size()) != ref.n_bins || ref.bin_mean.size() != hist.size() ||
        ref.bin_std.size() != hist.size())
        throw ConfigMismatch("histogram has " + std::to_string(hist.size()) + " bins, reference has " +
                             std::to_string(ref.n_bins));
    std::vector<double> excess(hist.size(), 0.0);
    for (std::size_t i = 0; i < hist.size(); ++i) {
        const double limit = ref.bin_mean[i] + cfg.k_sigma * ref.bin_std[i];
        excess[i] = std::max(0.0, static_cast<double>(hist[i]) - limit);
    }
    if (cfg.zero_bin_discard && !excess.empty()) excess[0] = 0.0;
    return excess;
}

HistDetection detect_peak(const Volume3D& v, const HistogramReference& ref, const HistDetectorConfig& cfg) {
    cfg.validate();
    const auto hist = compute_histogram(v, ref.n_bins);
    const auto excess = excess_counts(hist, ref, cfg);
    // max_element returns the first maximum, so ties resolve to the lowest bin
    const auto it = std::max_element(excess.begin(), excess.end());
    HistDetection out;
    out.peak_excess = *it;
    if (*it > cfg.min_peak_excess) {
        const int bin = static_cast<int>(it - excess.begin());
        out.detected = true;
        out.peak_bin = bin;
        out.peak_intensity = (bin + 0.5) / ref.n_bins;
    }
    return out;
}

HistDetection detect(const Volume3D& v, const HistogramReference& ref, const HistDetectorConfig& cfg) {
    HistDetection out = detect_peak(v, ref, cfg);
    if (!out.detected) return out;
    BinaryMask3D mask = make_mask(v, *out.peak_bin, cfg, ref.n_bins);
    if (!mask.any()) {
        out.detected = false;
        return out;
    }
    out.mask = std::move(mask);
    return out;
}

BinaryMask3D make_mask(const Volume3D& v, int peak_bin, const HistDetectorConfig& cfg, int n_bins) {
    if (peak_bin < 0 || peak_bin >= n_bins) throw InvalidArgument("peak bin " + std::to_string(peak_bin) + " out of range");
    cfg.validate();
    BinaryMask3D selected(v.dims());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const float x = v[i];
        selected.set(i, x >= 0.0f && x <= 1.0f && bin_of(x, n_bins) == peak_bin);
    }
    return volcore::open_cube(selected, cfg.morph_size);
}

namespace {
constexpr char kMagic[8] = {'H', 'R', 'E', 'F', '0', '0', '0', '1'};
}

void write_reference(const HistogramReference& ref, const std::filesystem::path& path) {
    if (ref.bin_mean.size() != static_cast<std::size_t>(ref.n_bins) || ref.bin_std.size() != ref.bin_mean.size())
        throw InvalidArgument("histogram reference arrays do not match n_bins");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kMagic, 8);
    const auto n = static_cast<std::uint32_t>(ref.n_bins);
    out.write(reinterpret_cast<const char*>(&n), 4);
    out.write(reinterpret_cast<const char*>(ref.bin_mean.data()), static_cast<std::streamsize>(8 * ref.bin_mean.size()));
    out.write(reinterpret_cast<const char*>(ref.bin_std.data()), static_cast<std::streamsize>(8 * ref.bin_std.size()));
    const auto tag = static_cast<std::uint8_t>(ref.region);
    out.write(reinterpret_cast<const char*>(&tag), 1);
    if (!out) throw IoError("short write to " + path.string());
}

HistogramReference read_reference(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8] = {};
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
        throw FormatError(FormatErrc::bad_magic, path.string() + ": not a histogram reference");
    std::uint32_t n = 0;
    in.read(reinterpret_cast<char*>(&n), 4);
    if (in.gcount() != 4 || n == 0 || n > (1u << 24))
        throw FormatError(FormatErrc::truncated, path.string() + ": bad bin count");
    HistogramReference ref;
    ref.n_bins = static_cast<int>(n);
    ref.bin_mean.resize(n);
    ref.bin_std.resize(n);
    in.read(reinterpret_cast<char*>(ref.bin_mean.data()), static_cast<std::streamsize>(8 * n));
    in.read(reinterpret_cast<char*>(ref.bin_std.data()), static_cast<std::streamsize>(8 * n));
    std::uint8_t tag = 0;
    in.read(reinterpret_cast<char*>(&tag), 1);
    if (!in) throw FormatError(FormatErrc::truncated, path.string() + ": truncated histogram reference");
    if (tag > 1) throw FormatError(FormatErrc::bad_header, path.string() + ": unknown region tag");
    ref.region = static_cast<Region>(tag);
    return ref;
}

} // namespace moodkit::histood
