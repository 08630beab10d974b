#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace moodkit::volcore {

enum class Split { train, val };

enum class Label { in_distribution, toy, deform, blur, bias, swap, black_slice };

enum class Severity { none, low, high };

std::string_view to_string(Split s);
std::string_view to_string(Label l);
std::string_view to_string(Severity s);
Split parse_split(std::string_view s);
Label parse_label(std::string_view s);
Severity parse_severity(std::string_view s);

/// Marker stored in place of a mask path for OOD entries scored at sample level only.
inline constexpr std::string_view kSampleOnly = "sample_only";

struct ManifestEntry {
    std::string path;
    std::string mask; ///< mask path, kSampleOnly, or empty for in-distribution entries
    Split split = Split::val;
    Label label = Label::in_distribution;
    Severity severity = Severity::none;
    std::uint64_t seed = 0;
    std::optional<double> parameter; ///< transform parameter as listed in the benchmark table

    bool is_ood() const noexcept { return label != Label::in_distribution; }
    bool has_mask() const noexcept { return !mask.empty() && mask != kSampleOnly; }
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    /// Paths unique; every OOD entry carries a mask path or the sample_only marker.
    void validate() const;
    std::vector<ManifestEntry> filter(Split split) const;
};

/// Relative paths inside the manifest are resolved against the manifest's directory.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);
std::filesystem::path resolve_entry_path(const std::filesystem::path& manifest_path, const std::string& entry_path);

} // namespace moodkit::volcore
