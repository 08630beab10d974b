#include "moodkit/volcore/manifest.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <fstream>
#include <set>
#include <utility>

#include "moodkit/error.hpp"

namespace moodkit::volcore {

namespace {

constexpr std::array<std::pair<Label, std::string_view>, 7> kLabels{{
    {Label::in_distribution, "in_distribution"},
    {Label::toy, "toy"},
    {Label::deform, "deform"},
    {Label::blur, "blur"},
    {Label::bias, "bias"},
    {Label::swap, "swap"},
    {Label::black_slice, "black_slice"},
}};

} // namespace

std::string_view to_string(Split s) { return s == Split::train ? "train" : "val"; }

std::string_view to_string(Label l) {
    for (const auto& [k, v] : kLabels)
        if (k == l) return v;
    return "?";
}

std::string_view to_string(Severity s) {
    switch (s) {
    case Severity::low: return "low";
    case Severity::high: return "high";
    default: return "none";
    }
}

Split parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    throw FormatError(FormatErrc::bad_header, "unknown split '" + std::string(s) + "'");
}

Label parse_label(std::string_view s) {
    for (const auto& [k, v] : kLabels)
        if (v == s) return k;
    throw FormatError(FormatErrc::bad_header, "unknown label '" + std::string(s) + "'");
}

Severity parse_severity(std::string_view s) {
    if (s == "none") return Severity::none;
    if (s == "low") return Severity::low;
    if (s == "high") return Severity::high;
    throw FormatError(FormatErrc::bad_header, "unknown severity '" + std::string(s) + "'");
}

void DatasetManifest::validate() const {
    std::set<std::string> seen;
    for (const auto& e : entries) {
        if (!seen.insert(e.path).second) throw FormatError(FormatErrc::bad_header, "duplicate manifest path " + e.path);
        if (e.is_ood() && e.mask.empty())
            throw FormatError(FormatErrc::bad_header, "OOD entry " + e.path + " has neither a mask nor sample_only");
    }
}

std::vector<ManifestEntry> DatasetManifest::filter(Split split) const {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries)
        if (e.split == split) out.push_back(e);
    return out;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(FormatErrc::bad_header, path.string() + ": " + e.what());
    }
    DatasetManifest m;
    try {
        for (const auto& je : j.at("entries")) {
            ManifestEntry e;
            e.path = je.at("path").get<std::string>();
            e.mask = je.value("mask", std::string{});
            e.split = parse_split(je.value("split", std::string{"val"}));
            e.label = parse_label(je.value("label", std::string{"in_distribution"}));
            e.severity = parse_severity(je.value("severity", std::string{"none"}));
            e.seed = je.value("seed", std::uint64_t{0});
            if (je.contains("parameter") && je["parameter"].is_number()) e.parameter = je["parameter"].get<double>();
            m.entries.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(FormatErrc::bad_header, path.string() + ": " + e.what());
    }
    m.validate();
    return m;
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
    m.validate();
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : m.entries) {
        nlohmann::json je;
        je["path"] = e.path;
        if (!e.mask.empty()) je["mask"] = e.mask;
        je["split"] = to_string(e.split);
        je["label"] = to_string(e.label);
        je["severity"] = to_string(e.severity);
        je["seed"] = e.seed;
        if (e.parameter) je["parameter"] = *e.parameter;
        entries.push_back(std::move(je));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest " + path.string());
    out << nlohmann::json{{"entries", entries}}.dump(2) << '\n';
    if (!out) throw IoError("short write to " + path.string());
}

std::filesystem::path resolve_entry_path(const std::filesystem::path& manifest_path, const std::string& entry_path) {
    const std::filesystem::path p(entry_path);
    if (p.is_absolute()) return p;
    return manifest_path.parent_path() / p;
}

} // namespace moodkit::volcore
