#include <cstdio>
#include <fstream>

#include "moodkit/error.hpp"
#include "moodkit/pipeline/pipeline.hpp"
#include "moodkit/volcore/io.hpp"

namespace moodkit::pipeline {

std::optional<double> GroupStats::rate() const {
    if (n == 0) return std::nullopt;
    return static_cast<double>(positives) / static_cast<double>(n);
}

std::optional<double> EvalReport::sensitivity(const std::string& group) const {
    const auto it = groups.find(group);
    if (it == groups.end()) return std::nullopt;
    return it->second.rate();
}

std::optional<double> EvalReport::specificity() const {
    if (id_total == 0) return std::nullopt;
    return static_cast<double>(id_negatives) / static_cast<double>(id_total);
}

namespace {

std::string cell_name(volcore::Label l, volcore::Severity s) {
    return std::string(volcore::to_string(l)) + "_" + std::string(volcore::to_string(s));
}

} // namespace

EvalReport summarize(std::vector<SampleOutcome> samples) {
    using volcore::Label;
    using volcore::Severity;
    EvalReport r;
    for (Label l : {Label::deform, Label::blur, Label::bias, Label::swap, Label::black_slice}) {
        r.groups[std::string(volcore::to_string(l))];
        for (Severity s : {Severity::low, Severity::high}) r.groups[cell_name(l, s)];
    }
    for (const auto& s : samples) {
        if (s.label == Label::in_distribution) {
            ++r.id_total;
            if (s.score == 0) ++r.id_negatives;
            continue;
        }
        auto bump = [&](const std::string& key) {
            auto& g = r.groups[key];
            ++g.n;
            if (s.score) ++g.positives;
        };
        bump(std::string(volcore::to_string(s.label)));
        if (s.severity != Severity::none) bump(cell_name(s.label, s.severity));
    }
    r.samples = std::move(samples);
    return r;
}

EvalReport evaluate(const std::filesystem::path& manifest_path, const Pipeline& pipeline, const EvalProgress& progress) {
    const auto manifest = volcore::read_manifest(manifest_path);
    if (manifest.entries.empty()) throw InvalidArgument("manifest " + manifest_path.string() + " is empty");
    std::vector<SampleOutcome> out;
    out.reserve(manifest.entries.size());
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const auto& e = manifest.entries[i];
        const Volume3D v = volcore::read_volume(volcore::resolve_entry_path(manifest_path, e.path));
        const auto pred = pipeline.predict(v, static_cast<std::uint64_t>(i));
        SampleOutcome s;
        s.path = e.path;
        s.label = e.label;
        s.severity = e.severity;
        s.score = pred.sample_score;
        s.branch = pred.branch;
        s.voxels_flagged = pred.diagnostics.voxels_flagged;
        s.mean_ssim = pred.diagnostics.mean_ssim;
        s.peak_intensity = pred.diagnostics.peak_intensity;
        if (e.has_mask()) {
            const auto truth = volcore::read_mask(volcore::resolve_entry_path(manifest_path, e.mask));
            if (truth.dims() == pred.pixel_mask.dims()) s.dice = volcore::dice(pred.pixel_mask, truth);
        }
        if (progress) progress(i, manifest.entries.size(), s);
        out.push_back(std::move(s));
    }
    return summarize(std::move(out));
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

} // namespace

void report_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::map<std::string, std::string> rows;
    for (const auto& [name, g] : report.groups) rows[name] = std::to_string(g.n) + "," + fmt(g.rate());
    rows["specificity"] = std::to_string(report.id_total) + "," + fmt(report.specificity());
    auto out = open_out(path);
    out << "group,n,sensitivity\n";
    for (const auto& [name, rest] : rows) out << name << ',' << rest << '\n';
    if (!out) throw IoError("short write to " + path.string());
}

void report_samples_csv(const EvalReport& report, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "path,label,severity,score,branch,voxels_flagged,dice,mean_ssim,peak_intensity\n";
    for (const auto& s : report.samples)
        out << s.path << ',' << volcore::to_string(s.label) << ',' << volcore::to_string(s.severity) << ',' << s.score
            << ',' << postproc::to_string(s.branch) << ',' << s.voxels_flagged << ',' << fmt(s.dice) << ','
            << fmt(s.mean_ssim) << ',' << fmt(s.peak_intensity) << '\n';
    if (!out) throw IoError("short write to " + path.string());
}

std::filesystem::path samples_csv_path(const std::filesystem::path& group_csv) {
    auto p = group_csv;
    p.replace_filename(group_csv.stem().string() + "_samples.csv");
    return p;
}

} // namespace moodkit::pipeline
