// interior-ct: simulate truncated fan-beam scans, reconstruct, export datasets, evaluate.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include <interior_ct.hpp>

namespace ict = interior_ct;
namespace fs = std::filesystem;

namespace {

constexpr int exit_validation = 2;
constexpr int exit_divergence = 3;

/// Relative output paths land under $INTERIOR_CT_OUTPUT_DIR when it is set.
fs::path output_path(const std::string& p) {
    fs::path path(p);
    if (path.is_absolute()) return path;
    if (const char* dir = std::getenv("INTERIOR_CT_OUTPUT_DIR"); dir && *dir) return fs::path(dir) / path;
    return path;
}

fs::path with_suffix(const fs::path& stem, const std::string& suffix) {
    fs::path p = stem;
    if (p.extension() == ".json" || p.extension() == ".raw") p.replace_extension();
    p += suffix;
    return p;
}

std::vector<double> parse_numbers(const std::string& s, std::size_t expected, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ict::ValidationError(std::string(what) + ": '" + item + "' is not a number");
        }
    }
    ict::require(out.size() == expected,
                 std::string(what) + ": expected " + std::to_string(expected) + " comma-separated values");
    return out;
}

ict::Phantom load_phantom(const std::string& path) {
    const fs::path p(path);
    std::ifstream in(p);
    if (!in) throw ict::IoError("cannot open phantom file '" + p.string() + "'");
    try {
        return nlohmann::json::parse(in).get<ict::Phantom>();
    } catch (const nlohmann::json::parse_error& e) {
        throw ict::FormatError("malformed phantom JSON in '" + p.string() + "': " + e.what());
    }
}

struct GeometryFlags {
    int n_det = 1440;
    double pitch = 1.0;
    int n_views = 1200;
    double dso = 800.0;
    double dsd = 1400.0;
    int n_pix = 512;
    double fov = 0.0;
    double scan_range = ict::two_pi;
    double start_angle = 0.0;

    void add(CLI::App& app) {
        app.add_option("--n-det", n_det, "Detector channels")->capture_default_str();
        app.add_option("--pitch", pitch, "Detector pitch at the detector (mm)")->capture_default_str();
        app.add_option("--views", n_views, "Views over the scan range")->capture_default_str();
        app.add_option("--dso", dso, "Source to isocenter (mm)")->capture_default_str();
        app.add_option("--dsd", dsd, "Source to detector (mm)")->capture_default_str();
        app.add_option("--n-pix", n_pix, "Image side in pixels")->capture_default_str();
        app.add_option("--fov", fov, "Image side (mm); 0 fits the full detector field of view");
        app.add_option("--scan-range", scan_range, "Scan range (rad)")->capture_default_str();
        app.add_option("--start-angle", start_angle, "First view angle (rad)")->capture_default_str();
    }

    ict::Geometry build() const {
        ict::require(n_det >= 1 && pitch > 0.0 && dso > 0.0 && dsd > dso, "invalid detector geometry flags");
        const double f = fov > 0.0 ? fov : ict::default_fov(n_det, pitch, dso, dsd);
        return ict::make_geometry(n_det, pitch, n_views, dso, dsd, n_pix, f, scan_range, start_angle);
    }
};

void write_metrics(const ict::MetricReport& m, const fs::path& stem) {
    const nlohmann::json j = m;
    std::ofstream(with_suffix(stem, "_metrics.json")) << j.dump(2) << "\n";
    std::ofstream(with_suffix(stem, "_metrics.csv")) << ict::metric_csv_header() << "\n" << ict::metric_csv_row(m) << "\n";
    std::cout << ict::metric_csv_header() << "\n" << ict::metric_csv_row(m) << "\n";
}

// ---- phantom ----

struct PhantomCmd {
    std::string kind = "body";
    int profile = 0;
    std::uint64_t seed = 0;
    std::string out;

    void run() const {
        ict::Phantom p;
        if (kind == "body") p = ict::body_phantom(profile);
        else if (kind == "smooth") p = ict::smooth_phantom();
        else if (kind == "uniform") p = ict::uniform_body_phantom();
        else if (kind == "random") {
            ict::UniformSource rng(seed);
            p = ict::random_phantom(rng, profile);
        } else throw ict::ValidationError("unknown phantom kind '" + kind + "'");
        const fs::path path = output_path(out);
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        std::ofstream os(path);
        if (!os) throw ict::IoError("cannot write '" + path.string() + "'");
        os << nlohmann::json(p).dump(2) << "\n";
    }
};

// ---- simulate ----

struct SimulateCmd {
    std::string phantom;
    std::string out;
    GeometryFlags geom;
    bool analytic = false;
    int truncate = 0;
    int supersample = 2;
    std::string truth;

    void run() const {
        const ict::Geometry g = geom.build();
        const ict::Phantom p = load_phantom(phantom);
        ict::Sinogram s;
        if (analytic) {
            s = ict::analytic_sinogram(p, g);
        } else {
            s = ict::forward_project(ict::rasterize(p, g.n_pix, g.fov, supersample), g);
        }
        if (truncate > 0) s = ict::truncate(s, truncate);
        ict::save_sinogram(s, output_path(out));
        if (!truth.empty()) ict::save_image(ict::rasterize(p, g.n_pix, g.fov, supersample), output_path(truth));
    }
};

// ---- recon ----

struct ReconCmd {
    std::string sino;
    std::string out;
    std::string method = "fbp";
    int truncate = 0;
    int views = 0;
    std::optional<double> start_angle;
    std::optional<double> scan_range;
    std::optional<double> pixel_size;
    std::optional<int> n_pix;
    std::string filter = "ramp";
    double direction = 0.0;
    std::string reference;
    std::string profile;
    int profile_samples = 256;
    std::string window = "-150,300";
    bool allow_illposed = false;
    ict::TvParams tv;
    bool no_nonneg = false;

    void run() const {
        ict::Sinogram s = ict::load_sinogram(sino);
        if (start_angle || scan_range)
            s = ict::select_arc(s, start_angle.value_or(s.geom.start_angle), scan_range.value_or(ict::two_pi));
        if (views > 0) s = ict::subsample_views(s, views);
        if (truncate > 0) s = ict::truncate(s, truncate);
        ict::Geometry g = s.geom;
        ict::require(!(pixel_size && n_pix), "--pixel-size and --n-pix are mutually exclusive");
        if (pixel_size) {
            ict::require(*pixel_size > 0.0, "--pixel-size must be positive");
            g.n_pix = static_cast<int>(std::lround(g.fov / *pixel_size));
            ict::require(g.n_pix >= 1, "--pixel-size exceeds the field of view");
        }
        if (n_pix) g.n_pix = *n_pix;
        ict::validate(g);
        const std::vector<double> win = parse_numbers(window, 2, "--window");
        const fs::path stem = output_path(out);

        ict::Image img;
        if (method == "fbp") {
            img = ict::fbp_reconstruct(s, g, ict::FilterSpec{ict::parse_filter_kind(filter)});
        } else if (method == "bpf") {
            ict::require(!s.truncated() || allow_illposed,
                         "bpf on truncated data is ill-posed without prior knowledge; use --method tv or pass "
                         "--allow-illposed to see the failure");
            img = ict::bpf_reconstruct(s, g, direction, {}, allow_illposed);
        } else if (method == "tv") {
            ict::TvParams p = tv;
            p.nonneg = !no_nonneg;
            ict::TvResult r;
            try {
                r = ict::tv_pocs_reconstruct(s, g, p);
            } catch (const ict::DivergenceError& e) {
                ict::save_image(e.partial().image, stem);
                std::ofstream csv(with_suffix(stem, "_residual.csv"));
                ict::write_residual_csv(csv, e.partial().log);
                throw;
            }
            img = std::move(r.image);
            std::ofstream csv(with_suffix(stem, "_residual.csv"));
            ict::write_residual_csv(csv, r.log);
        } else if (method == "dbp") {
            const ict::DbpImage d = ict::dbp_image(s, g, direction);
            ict::save_dbp_image(d, stem);
            img = d.image;
        } else {
            throw ict::ValidationError("unknown method '" + method + "' (expected fbp, bpf, tv or dbp)");
        }
        if (method != "dbp") ict::save_image(img, stem);
        ict::save_png(img, with_suffix(stem, ".png"), ict::DisplayWindow{win[0], win[1]});
        if (!profile.empty()) {
            const std::vector<double> l = parse_numbers(profile, 4, "--profile");
            ict::save_profile_csv(ict::line_profile(img, l[0], l[1], l[2], l[3], profile_samples),
                                  with_suffix(stem, "_profile.csv"));
        }
        if (!reference.empty()) {
            const ict::Image ref = ict::load_image(reference);
            const ict::Mask2D* mask = img.roi_mask ? &*img.roi_mask : nullptr;
            write_metrics(ict::evaluate(img.data, ref.data, mask), stem);
        }
    }
};

// ---- dataset ----

struct DatasetCmd {
    int type = 1;
    std::vector<int> detectors{240, 380, 600, 1440};
    int n_phantoms = 8;
    std::vector<std::string> phantom_files;
    std::uint64_t seed = 0;
    bool augment = false;
    std::string flip_policy = "none";
    GeometryFlags geom;
    std::string out;

    void run() const {
        const ict::Geometry g = geom.build();
        ict::validate_detector_list(detectors, g);
        std::vector<ict::Phantom> phantoms;
        for (const auto& f : phantom_files) phantoms.push_back(load_phantom(f));
        if (phantom_files.empty()) {
            ict::require(n_phantoms >= 0, "--phantoms must be >= 0");
            ict::UniformSource rng(seed);
            for (int k = 0; k < n_phantoms; ++k) phantoms.push_back(ict::random_phantom(rng));
        }
        std::vector<ict::PhantomVariant> variants = ict::plain_variants(phantoms);
        if (augment) {
            ict::AugmentOptions opt;
            opt.flips = ict::parse_flip_policy(flip_policy);
            opt.seed = seed;
            variants = ict::augment(variants, opt);
        } else {
            ict::require(flip_policy == "none", "--flip-policy requires --augment");
        }
        const auto pairs = ict::build_pairs(variants, g, detectors, ict::parse_pair_type(type));
        const auto m = ict::write_dataset(pairs, g, ict::parse_pair_type(type), output_path(out));
        std::cout << "wrote " << m.pairs.size() << " pairs\n";
    }
};

// ---- eval ----

struct EvalCmd {
    std::string est;
    std::string ref;
    std::optional<double> roi;
    std::string out;

    void run() const {
        const ict::Image e = ict::load_image(est);
        const ict::Image r = ict::load_image(ref);
        ict::require(e.data.same_shape(r.data) && std::abs(e.fov - r.fov) <= 1e-9 * r.fov,
                     "eval: estimate and reference grids differ");
        std::optional<ict::Mask2D> mask;
        if (roi) {
            ict::require(*roi > 0.0, "--roi must be positive");
            mask = ict::disk_mask(r.n_pix(), r.fov, *roi);
        }
        const ict::MetricReport m = ict::evaluate(e.data, r.data, mask ? &*mask : nullptr);
        if (out.empty()) {
            std::cout << ict::metric_csv_header() << "\n" << ict::metric_csv_row(m) << "\n";
        } else {
            const fs::path stem = output_path(out);
            if (stem.has_parent_path()) fs::create_directories(stem.parent_path());
            write_metrics(m, stem);
        }
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interior tomography toolkit"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Cap on worker threads (0 = runtime default)");

    PhantomCmd ph;
    auto* c_ph = app.add_subcommand("phantom", "Write a phantom description (JSON)");
    c_ph->add_option("--kind", ph.kind, "body, smooth, uniform or random")->capture_default_str();
    c_ph->add_option("--profile", ph.profile, "Body density profile exponent")->capture_default_str();
    c_ph->add_option("--seed", ph.seed, "Seed for --kind random")->capture_default_str();
    c_ph->add_option("--out", ph.out, "Output JSON path")->required();

    SimulateCmd sim;
    auto* c_sim = app.add_subcommand("simulate", "Simulate a fan-beam sinogram");
    c_sim->add_option("--phantom", sim.phantom, "Phantom JSON")->required();
    c_sim->add_option("--out", sim.out, "Output stem (.json/.raw)")->required();
    c_sim->add_flag("--analytic", sim.analytic, "Exact line integrals instead of projecting the rasterized phantom");
    c_sim->add_option("--truncate", sim.truncate, "Keep only the central N channels");
    c_sim->add_option("--supersample", sim.supersample, "Rasterization supersampling")->capture_default_str();
    c_sim->add_option("--truth", sim.truth, "Also write the rasterized phantom as an image stem");
    sim.geom.add(*c_sim);

    ReconCmd rec;
    auto* c_rec = app.add_subcommand("recon", "Reconstruct an image from a sinogram");
    c_rec->add_option("--sino", rec.sino, "Sinogram stem")->required();
    c_rec->add_option("--out", rec.out, "Output stem")->required();
    c_rec->add_option("--method", rec.method, "fbp, bpf, tv or dbp")->capture_default_str();
    c_rec->add_option("--truncate", rec.truncate, "Keep only the central N channels");
    c_rec->add_option("--views", rec.views, "Resample to V views");
    c_rec->add_option("--start-angle", rec.start_angle, "Arc start (rad) for a short scan");
    c_rec->add_option("--scan-range", rec.scan_range, "Arc length (rad) for a short scan");
    c_rec->add_option("--pixel-size", rec.pixel_size, "Reconstruction pixel size (mm)");
    c_rec->add_option("--n-pix", rec.n_pix, "Reconstruction grid size");
    c_rec->add_option("--filter", rec.filter, "ramp or ramp-hann")->capture_default_str();
    c_rec->add_option("--direction", rec.direction, "Hilbert / chord direction (rad)")->capture_default_str();
    c_rec->add_option("--reference", rec.reference, "Reference image stem for metrics");
    c_rec->add_option("--profile", rec.profile, "x0,y0,x1,y1 (mm): export a line profile CSV");
    c_rec->add_option("--profile-samples", rec.profile_samples)->capture_default_str();
    c_rec->add_option("--window", rec.window, "PNG window lo,hi (HU)")->capture_default_str();
    c_rec->add_flag("--allow-illposed", rec.allow_illposed, "Run bpf on truncated data anyway");
    c_rec->add_option("--tv-iters", rec.tv.n_outer)->capture_default_str();
    c_rec->add_option("--tv-step", rec.tv.tv_step)->capture_default_str();
    c_rec->add_option("--tv-inner", rec.tv.tv_inner)->capture_default_str();
    c_rec->add_option("--relaxation", rec.tv.relaxation)->capture_default_str();
    c_rec->add_option("--data-tol", rec.tv.data_tol)->capture_default_str();
    c_rec->add_option("--views-per-subset", rec.tv.views_per_subset)->capture_default_str();
    c_rec->add_flag("--no-nonneg", rec.no_nonneg, "Disable the nonnegativity clamp");

    DatasetCmd ds;
    auto* c_ds = app.add_subcommand("dataset", "Export a Type 1 (FBP) or Type 2 (DBP) training dataset");
    c_ds->add_option("--type", ds.type, "1 = truncated FBP input, 2 = truncated DBP input")->capture_default_str();
    c_ds->add_option("--detectors", ds.detectors, "Detector counts, comma separated")->delimiter(',');
    c_ds->add_option("--phantoms", ds.n_phantoms, "Number of random phantoms")->capture_default_str();
    c_ds->add_option("--phantom-file", ds.phantom_files, "Phantom JSON files (replace random phantoms)");
    c_ds->add_option("--seed", ds.seed)->capture_default_str();
    c_ds->add_flag("--augment", ds.augment, "Add 45/90/135 degree rotations");
    c_ds->add_option("--flip-policy", ds.flip_policy, "none, append or random")->capture_default_str();
    c_ds->add_option("--out", ds.out, "Manifest path (.json; blob goes next to it)")->required();
    ds.geom.n_pix = 256;
    ds.geom.add(*c_ds);

    EvalCmd ev;
    auto* c_ev = app.add_subcommand("eval", "Compare an image with a reference");
    c_ev->add_option("--est", ev.est, "Estimate image stem")->required();
    c_ev->add_option("--ref", ev.ref, "Reference image stem")->required();
    c_ev->add_option("--roi", ev.roi, "Restrict metrics to the centered disk of this radius (mm)");
    c_ev->add_option("--out", ev.out, "Output stem for metrics JSON/CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_validation;
    }

    try {
        ict::set_thread_cap(threads);
        if (*c_ph) ph.run();
        else if (*c_sim) sim.run();
        else if (*c_rec) rec.run();
        else if (*c_ds) ds.run();
        else if (*c_ev) ev.run();
    } catch (const ict::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_divergence;
    } catch (const ict::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const ict::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_validation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
