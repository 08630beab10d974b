#include "moodkit/pipeline/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "moodkit/denoiser/denoiser.hpp"
#include "moodkit/error.hpp"
#include "moodkit/histood/histood.hpp"
#include "moodkit/parallel.hpp"
#include "moodkit/pipeline/pipeline.hpp"
#include "moodkit/synthdata/synthdata.hpp"
#include "moodkit/volcore/io.hpp"

namespace moodkit::pipeline {

namespace {

namespace fs = std::filesystem;

bool is_volume_file(const fs::path& p) {
    const std::string name = p.filename().string();
    auto ends = [&](std::string_view s) { return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0; };
    return (ends(".rvol") && !ends("_mask.rvol")) || ends(".nii") || ends(".nii.gz");
}

/// Volumes listed in DIR/manifest.json, or every volume file in DIR sorted by name.
std::vector<volcore::Volume3D> load_sources(const fs::path& dir) {
    std::vector<fs::path> paths;
    const fs::path manifest = dir / "manifest.json";
    if (fs::exists(manifest)) {
        for (const auto& e : volcore::read_manifest(manifest).entries) paths.push_back(volcore::resolve_entry_path(manifest, e.path));
    } else {
        std::error_code ec;
        for (const auto& entry : fs::directory_iterator(dir, ec))
            if (entry.is_regular_file() && is_volume_file(entry.path())) paths.push_back(entry.path());
        if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
        std::sort(paths.begin(), paths.end());
    }
    if (paths.empty()) throw IoError("no volumes found in " + dir.string());
    std::vector<volcore::Volume3D> out;
    for (const auto& p : paths) out.push_back(volcore::read_volume(p));
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw InvalidArgument("bad integer list '" + s + "'");
        }
    }
    return out;
}

diffusion::NoiseKind parse_noise(const std::string& s) {
    if (s == "simplex") return diffusion::NoiseKind::simplex;
    if (s == "gaussian") return diffusion::NoiseKind::gaussian;
    throw InvalidArgument("unknown noise kind '" + s + "' (expected simplex or gaussian)");
}

struct Options {
    // shared
    std::string out, in, manifest, ref, ckpt, input, region = "brain", preset = "desk";
    std::uint64_t seed = 0;
    int threads = 1;
    // gen-phantoms
    int count = 0, dims = 64;
    double texture = synthdata::PhantomConfig{}.texture_amplitude;
    double stripes = synthdata::PhantomConfig{}.stripe_amplitude;
    // gen-benchmark
    int per_cell = 0, n_id = -1;
    // build-ref
    int bins = histood::kDefaultBins;
    // train
    int epochs = 20, batch = 4, max_t = 0;
    double lr = 1e-3;
    std::string noise = "simplex", dilations = "1,1,1,1", widths = "1,16,32,16,1", resume;
    // predict / evaluate / recon
    std::string out_pixel, out_sample, out_csv;
    int t_start = 200;
};

histood::HistogramReference load_reference(const Options& o) { return histood::read_reference(o.ref); }

PipelineConfig pipeline_config(const Options& o) {
    return PipelineConfig::for_region(histood::parse_region(o.region), parse_preset(o.preset));
}

Pipeline make_pipeline(const Options& o) {
    PipelineConfig cfg = pipeline_config(o);
    cfg.t_start = o.t_start;
    cfg.seed = o.seed;
    cfg.threads = o.threads;
    return Pipeline(load_reference(o), denoiser::load_checkpoint(o.ckpt, diffusion::SchedulerConfig{}), cfg);
}

int cmd_gen_phantoms(const Options& o, std::ostream& out) {
    synthdata::PhantomConfig pc;
    pc.texture_amplitude = o.texture;
    pc.stripe_amplitude = o.stripes;
    const auto m = synthdata::generate_corpus(o.out, o.count, o.dims, o.seed, pc);
    out << "wrote " << m.entries.size() << " phantoms to " << o.out << "\n";
    return kOk;
}

int cmd_gen_benchmark(const Options& o, std::ostream& out) {
    const auto sources = load_sources(o.in);
    const int n_id = o.n_id >= 0 ? o.n_id : static_cast<int>(sources.size());
    const auto m = synthdata::build_benchmark(sources, n_id, o.per_cell, o.out, o.seed, histood::parse_region(o.region));
    out << "wrote " << m.entries.size() << " benchmark entries to " << o.out << "\n";
    return kOk;
}

int cmd_build_ref(const Options& o, std::ostream& out) {
    const auto region = histood::parse_region(o.region);
    const PipelineConfig cfg = pipeline_config(o);
    const auto volumes = load_training_volumes(o.manifest, cfg);
    const auto ref = histood::build_reference(volumes, region, o.bins);
    histood::write_reference(ref, o.out);
    out << "reference from " << volumes.size() << " volumes, " << o.bins << " bins -> " << o.out << "\n";
    return kOk;
}

int cmd_train(const Options& o, std::ostream& out) {
    const PipelineConfig cfg = pipeline_config(o);
    const auto volumes = load_training_volumes(o.manifest, cfg);
    const auto slices = training_slices(volumes);
    const auto& d = volumes.front().dims();

    denoiser::Checkpoint ckpt;
    if (!o.resume.empty()) {
        ckpt = denoiser::load_checkpoint(o.resume);
    } else {
        denoiser::Architecture arch;
        arch.widths = parse_int_list(o.widths);
        arch.dilations = parse_int_list(o.dilations);
        ckpt.model = denoiser::Model(arch);
        ckpt.model.init(diffusion::stream_key(o.seed, 0x696e6974ULL));
        ckpt.noise.kind = parse_noise(o.noise);
    }
    denoiser::TrainConfig tc;
    tc.learning_rate = o.lr;
    tc.batch_size = o.batch;
    tc.epochs = o.epochs;
    tc.seed = o.seed;
    tc.max_train_step = o.max_t;
    tc.threads = o.threads;
    out << "training on " << slices.size() << " slices of " << d.nx << "x" << d.ny << ", "
        << ckpt.model.params().size() << " parameters\n";
    denoiser::train(ckpt, slices, d.ny, d.nx, tc, [&](const denoiser::TrainProgress& p) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "epoch %d loss %.6f (%.1fs)\n", p.epoch, p.mean_loss, p.seconds);
        out << buf << std::flush;
    });
    denoiser::save_checkpoint(ckpt, o.out);
    return kOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
    const Pipeline p = make_pipeline(o);
    const auto input = volcore::read_volume(o.input);
    const auto r = p.predict(input, 0);
    volcore::write_mask(r.pixel_mask, o.out_pixel, input.spacing());
    write_sample_score(r.sample_score, o.out_sample);
    out << "score " << r.sample_score << " branch " << postproc::to_string(r.branch) << " voxels "
        << r.diagnostics.voxels_flagged << "\n";
    return kOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
    const Pipeline p = make_pipeline(o);
    const auto report = evaluate(o.manifest, p, [&](std::size_t i, std::size_t n, const SampleOutcome& s) {
        out << "[" << (i + 1) << "/" << n << "] " << s.path << " score " << s.score << " ("
            << postproc::to_string(s.branch) << ")\n"
            << std::flush;
    });
    report_csv(report, o.out_csv);
    report_samples_csv(report, samples_csv_path(o.out_csv));
    if (const auto sp = report.specificity()) out << "specificity " << *sp << "\n";
    return kOk;
}

int cmd_recon(const Options& o, std::ostream& out) {
    const auto ckpt = denoiser::load_checkpoint(o.ckpt, diffusion::SchedulerConfig{});
    const auto table = diffusion::build_schedule(ckpt.scheduler);
    const auto input = volcore::normalize(volcore::read_volume(o.input));
    diffusion::ReconstructConfig rc;
    rc.t_start = o.t_start;
    rc.seed = diffusion::stream_key(o.seed, 0);
    rc.threads = o.threads;
    const auto recon = diffusion::reconstruct(input, ckpt.model, table, ckpt.noise, rc);
    volcore::write_volume(recon, o.out);
    out << "reconstruction from t=" << o.t_start << " -> " << o.out << "\n";
    return kOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"moodkit: volumetric out-of-distribution detection"};
    app.require_subcommand(1);
    Options o;
    const std::vector<std::string> regions{"brain", "abdomen"};
    auto threads_opt = [&](CLI::App* c) {
        c->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
    };
    auto preset_opt = [&](CLI::App* c) {
        c->add_option("--preset", o.preset, "Working grid: desk (64^3) or full (256^3)")
            ->check(CLI::IsMember({"desk", "full"}));
    };

    auto* gp = app.add_subcommand("gen-phantoms", "Generate an in-distribution phantom corpus");
    gp->add_option("--out", o.out, "Output directory")->required();
    gp->add_option("--count", o.count, "Number of phantoms")->required()->check(CLI::PositiveNumber);
    gp->add_option("--dims", o.dims, "Edge length")->required()->check(CLI::Range(16, 1024));
    gp->add_option("--seed", o.seed, "Seed")->required();
    gp->add_option("--texture", o.texture, "Isotropic noise texture amplitude")->check(CLI::NonNegativeNumber);
    gp->add_option("--stripes", o.stripes, "Striation amplitude")->check(CLI::NonNegativeNumber);

    auto* gb = app.add_subcommand("gen-benchmark", "Build the OOD validation benchmark");
    gb->add_option("--in", o.in, "Directory of in-distribution source volumes")->required()->check(CLI::ExistingDirectory);
    gb->add_option("--out", o.out, "Output directory")->required();
    gb->add_option("--region", o.region, "brain or abdomen")->required()->check(CLI::IsMember(regions));
    gb->add_option("--per-cell", o.per_cell, "Samples per transform/severity cell")->required()->check(CLI::NonNegativeNumber);
    gb->add_option("--seed", o.seed, "Seed")->required();
    gb->add_option("--n-id", o.n_id, "In-distribution samples (default: one per source)")->check(CLI::NonNegativeNumber);

    auto* br = app.add_subcommand("build-ref", "Build the histogram reference");
    br->add_option("--manifest", o.manifest, "Training manifest")->required();
    br->add_option("--out", o.out, "Reference file")->required();
    br->add_option("--bins", o.bins, "Histogram bins")->required()->check(CLI::PositiveNumber);
    br->add_option("--region", o.region, "brain or abdomen")->check(CLI::IsMember(regions));
    preset_opt(br);

    auto* tr = app.add_subcommand("train", "Train the denoiser");
    tr->add_option("--manifest", o.manifest, "Training manifest")->required();
    tr->add_option("--out", o.out, "Checkpoint file")->required();
    tr->add_option("--epochs", o.epochs, "Epochs")->required()->check(CLI::NonNegativeNumber);
    tr->add_option("--lr", o.lr, "Learning rate")->required()->check(CLI::NonNegativeNumber);
    tr->add_option("--batch", o.batch, "Batch size")->required()->check(CLI::PositiveNumber);
    tr->add_option("--seed", o.seed, "Seed")->required();
    tr->add_option("--region", o.region, "brain or abdomen")->check(CLI::IsMember(regions));
    tr->add_option("--noise", o.noise, "simplex or gaussian")->check(CLI::IsMember({"simplex", "gaussian"}));
    tr->add_option("--widths", o.widths, "Comma-separated channel widths");
    tr->add_option("--dilations", o.dilations, "Comma-separated per-layer dilations");
    tr->add_option("--max-t", o.max_t, "Exclusive upper bound of sampled timesteps (0: schedule length)")
        ->check(CLI::NonNegativeNumber);
    tr->add_option("--resume", o.resume, "Continue from this checkpoint");
    threads_opt(tr);
    preset_opt(tr);

    auto* pr = app.add_subcommand("predict", "Score one volume");
    pr->add_option("--input", o.input, "Input volume")->required();
    pr->add_option("--ref", o.ref, "Histogram reference")->required();
    pr->add_option("--ckpt", o.ckpt, "Denoiser checkpoint")->required();
    pr->add_option("--region", o.region, "brain or abdomen")->required()->check(CLI::IsMember(regions));
    pr->add_option("--out-pixel", o.out_pixel, "Pixel-level prediction")->required();
    pr->add_option("--out-sample", o.out_sample, "Sample-level score file")->required();
    pr->add_option("--t-start", o.t_start, "Reconstruction start step")->check(CLI::PositiveNumber);
    pr->add_option("--seed", o.seed, "Seed");
    threads_opt(pr);
    preset_opt(pr);

    auto* ev = app.add_subcommand("evaluate", "Evaluate on a benchmark manifest");
    ev->add_option("--manifest", o.manifest, "Benchmark manifest")->required();
    ev->add_option("--ref", o.ref, "Histogram reference")->required();
    ev->add_option("--ckpt", o.ckpt, "Denoiser checkpoint")->required();
    ev->add_option("--region", o.region, "brain or abdomen")->required()->check(CLI::IsMember(regions));
    ev->add_option("--out-csv", o.out_csv, "Group report CSV")->required();
    ev->add_option("--t-start", o.t_start, "Reconstruction start step")->check(CLI::PositiveNumber);
    ev->add_option("--seed", o.seed, "Seed");
    threads_opt(ev);
    preset_opt(ev);

    auto* rc = app.add_subcommand("recon", "Dump a diffusion reconstruction");
    rc->add_option("--input", o.input, "Input volume")->required();
    rc->add_option("--ckpt", o.ckpt, "Denoiser checkpoint")->required();
    rc->add_option("--t-start", o.t_start, "Reconstruction start step")->required()->check(CLI::PositiveNumber);
    rc->add_option("--out", o.out, "Output volume")->required();
    rc->add_option("--seed", o.seed, "Seed");
    threads_opt(rc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kBadArguments;
    }

    try {
        if (gp->parsed()) return cmd_gen_phantoms(o, out);
        if (gb->parsed()) return cmd_gen_benchmark(o, out);
        if (br->parsed()) return cmd_build_ref(o, out);
        if (tr->parsed()) return cmd_train(o, out);
        if (pr->parsed()) return cmd_predict(o, out);
        if (ev->parsed()) return cmd_evaluate(o, out);
        if (rc->parsed()) return cmd_recon(o, out);
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return kBadArguments;
    } catch (const ConfigMismatch& e) {
        err << "error: " << e.what() << "\n";
        return kConfigMismatch;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const InvalidVolume& e) {
        err << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kBadArguments;
}

} // namespace moodkit::pipeline
