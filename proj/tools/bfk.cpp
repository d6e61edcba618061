// bfk: bias field correction toolkit.
//
// Subcommands: correct (estimate and remove the bias field of one image),
// simulate (synthesize ground-truth phantoms and biased observations),
// evaluate (per-class CV / SSIM / PSNR report), sweep (condition grid with
// aggregated CSV output).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bfk/io.hpp"
#include "bfk/metrics.hpp"
#include "bfk/solver.hpp"
#include "bfk/synth.hpp"
#include "bfk/version.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bfk;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitEmptyMask = 3;

std::uint64_t env_default_seed() {
    if (const char* s = std::getenv("BFK_SEED")) return std::strtoull(s, nullptr, 10);
    return 0;
}

// Decorrelates the noise stream from the weight stream of the same pair seed.
std::uint64_t noise_seed(std::uint64_t pair_seed) { return pair_seed ^ 0x9e3779b97f4a7c15ull; }

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

// Solver options shared by correct and sweep. Precedence: built-in defaults,
// then the config file, then explicit command-line flags.
struct SolverFlags {
    SolverConfig cfg;
    std::string config_path;
    CLI::Option* opt[9] = {};

    void add(CLI::App& app) {
        cfg.seed = env_default_seed();
        opt[0] = app.add_option("--classes", cfg.n_classes, "number of tissue classes");
        opt[1] = app.add_option("--fuzziness", cfg.fuzziness, "membership exponent p");
        opt[2] = app.add_option("--kernel-size", cfg.kernel_size, "Gaussian kernel size (odd)");
        opt[3] = app.add_option("--kernel-sigma", cfg.kernel_sigma,
                                "Gaussian sigma (0 = kernel size / 3)");
        opt[4] = app.add_option("--max-iters", cfg.max_iters, "iteration cap");
        opt[5] = app.add_option("--epsilon", cfg.epsilon, "mean squared bias change threshold");
        opt[6] = app.add_option("--clamp-lo", cfg.clamp_lo, "bias lower clamp");
        opt[7] = app.add_option("--clamp-hi", cfg.clamp_hi, "bias upper clamp");
        opt[8] = app.add_option("--seed", cfg.seed, "run seed (default: BFK_SEED or 0)");
        app.add_option("--config", config_path, "JSON config file (defaults < file < flags)");
    }

    void overlay(const json& j) {
        auto take = [&](int i, const char* key, auto& field) {
            if (j.contains(key) && (!opt[i] || opt[i]->count() == 0))
                field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        take(0, "classes", cfg.n_classes);
        take(1, "fuzziness", cfg.fuzziness);
        take(2, "kernel_size", cfg.kernel_size);
        take(3, "kernel_sigma", cfg.kernel_sigma);
        take(4, "max_iters", cfg.max_iters);
        take(5, "epsilon", cfg.epsilon);
        take(6, "clamp_lo", cfg.clamp_lo);
        take(7, "clamp_hi", cfg.clamp_hi);
        take(8, "seed", cfg.seed);
    }

    // Applies the config file, if any. Returns false (config error) on a
    // missing or malformed file.
    bool resolve() {
        if (config_path.empty()) return true;
        std::ifstream in(config_path);
        if (!in) return false;
        json j = json::parse(in, nullptr, false);
        if (j.is_discarded() || !j.is_object()) return false;
        overlay(j);
        return true;
    }

    json resolved_json() const {
        return json{{"classes", cfg.n_classes},
                    {"fuzziness", cfg.fuzziness},
                    {"kernel_size", cfg.kernel_size},
                    {"kernel_sigma", cfg.resolved_sigma()},
                    {"max_iters", cfg.max_iters},
                    {"epsilon", cfg.epsilon},
                    {"clamp_lo", cfg.clamp_lo},
                    {"clamp_hi", cfg.clamp_hi},
                    {"seed", cfg.seed}};
    }
};

struct PhantomFlags {
    int width = 128;
    int height = 128;
    int classes = 4;
    std::vector<double> intensities = {0.25, 0.5, 0.75, 1.0};
    std::string geometry = "concentric-disks";
    int voronoi_sites = 16;
    double noise_sigma = 0.0;

    void add(CLI::App& app) {
        app.add_option("--width", width, "phantom width");
        app.add_option("--height", height, "phantom height");
        app.add_option("--classes", classes, "number of classes");
        app.add_option("--intensities", intensities, "class intensities, ascending in (0,1]")
            ->delimiter(',');
        app.add_option("--geometry", geometry, "concentric-disks or voronoi");
        app.add_option("--voronoi-sites", voronoi_sites, "site count for voronoi geometry");
        app.add_option("--noise-sigma", noise_sigma, "additive Gaussian noise sd");
    }

    PhantomSpec spec(std::uint64_t seed) const {
        PhantomSpec ps;
        ps.width = width;
        ps.height = height;
        ps.n_classes = classes;
        ps.class_intensities = intensities;
        if (geometry == "concentric-disks") {
            ps.geometry = PhantomGeometry::kConcentricDisks;
        } else if (geometry == "voronoi") {
            ps.geometry = PhantomGeometry::kVoronoiCells;
            ps.voronoi_sites = voronoi_sites;
        } else {
            throw std::invalid_argument("unknown geometry: " + geometry);
        }
        ps.noise_sigma = noise_sigma;
        ps.seed = seed;
        return ps;
    }

    json to_json() const {
        return json{{"width", width},           {"height", height},
                    {"classes", classes},       {"intensities", intensities},
                    {"geometry", geometry},     {"voronoi_sites", voronoi_sites},
                    {"noise_sigma", noise_sigma}};
    }
};

struct BiasFlags {
    int legendre_degree = 15;
    int trig_degree = 2;
    double weight_lo = -20.0;
    double weight_hi = 20.0;
    double bias_lo = 0.8;
    double bias_hi = 1.2;

    void add(CLI::App& app) {
        app.add_option("--legendre-degree", legendre_degree, "Legendre expansion degree");
        app.add_option("--trig-degree", trig_degree, "trigonometric expansion degree");
        app.add_option("--weight-lo", weight_lo, "weight range lower bound");
        app.add_option("--weight-hi", weight_hi, "weight range upper bound");
        app.add_option("--bias-lo", bias_lo, "bias rescale lower bound");
        app.add_option("--bias-hi", bias_hi, "bias rescale upper bound");
    }

    BiasSynthSpec spec(std::uint64_t seed) const {
        BiasSynthSpec bs;
        bs.legendre_degree = legendre_degree;
        bs.trig_degree = trig_degree;
        bs.weight_lo = weight_lo;
        bs.weight_hi = weight_hi;
        bs.rescale_lo = bias_lo;
        bs.rescale_hi = bias_hi;
        bs.seed = seed;
        return bs;
    }

    json to_json() const {
        return json{{"legendre_degree", legendre_degree},
                    {"trig_degree", trig_degree},
                    {"weight_lo", weight_lo},
                    {"weight_hi", weight_hi},
                    {"bias_lo", bias_lo},
                    {"bias_hi", bias_hi}};
    }
};

void write_manifest(const fs::path& dir, const std::string& command, const json& config,
                    const json& inputs, const json& outputs, std::uint64_t seed,
                    double duration_seconds) {
    json m{{"command", command},     {"version", kVersion}, {"config", config},
           {"inputs", inputs},       {"outputs", outputs},  {"seed", seed},
           {"duration_seconds", duration_seconds}};
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << m.dump(2) << "\n";
}

// Stored images live in [0,1]. A biased observation can exceed 1, in which
// case the whole image is divided by its max: a pure gain, which the solver
// is equivariant to and which leaves the zero background intact.
ScalarField to_storage_range(ScalarField f) {
    double mx = 0.0;
    for (double v : f.data) mx = std::max(mx, v);
    if (mx > 1.0)
        for (double& v : f.data) v /= mx;
    return f;
}

ScalarField clip01(ScalarField f) {
    for (double& v : f.data) v = std::clamp(v, 0.0, 1.0);
    return f;
}

LabelField argmax_labels(const MembershipMap& u, const Mask& mask) {
    LabelField lf;
    lf.width = u.width();
    lf.height = u.height();
    lf.ids.assign(static_cast<std::size_t>(lf.width) * lf.height, kBackgroundLabel);
    for (std::size_t i = 0; i < lf.ids.size(); ++i) {
        if (!mask.on[i]) continue;
        int best = 0;
        for (int k = 1; k < u.classes(); ++k)
            if (u.planes[k].data[i] > u.planes[best].data[i]) best = k;
        lf.ids[i] = static_cast<std::uint8_t>(best);
    }
    return lf;
}

int run_correct(const std::string& input, const std::string& out_dir, SolverFlags& sf) {
    Timer timer;
    if (!sf.resolve()) {
        std::cerr << "bfk: cannot read config file " << sf.config_path << "\n";
        return kExitConfig;
    }
    try {
        sf.cfg.validate();
    } catch (const std::invalid_argument& e) {
        std::cerr << "bfk: invalid config: " << e.what() << "\n";
        return kExitConfig;
    }

    ImageGrid img;
    try {
        img = read_image(input);
    } catch (const std::exception& e) {
        std::cerr << "bfk: " << e.what() << "\n";
        return kExitIo;
    }

    std::vector<TraceRow> trace;
    CorrectionResult res;
    try {
        res = fit(img, sf.cfg, &trace);
    } catch (const EmptyMaskError& e) {
        std::cerr << "bfk: " << e.what() << "\n";
        return kExitEmptyMask;
    }

    try {
        fs::create_directories(out_dir);
        fs::path dir(out_dir);
        Mask mask = img.effective_mask();

        write_image(clip01(res.corrected), (dir / "corrected.pgm").string(), false, 16);
        write_field(res.bias, (dir / "bias.bfk").string());
        write_image(res.bias, (dir / "bias_preview.pgm").string(), true, 8);
        write_labels(argmax_labels(res.membership, mask), (dir / "labels.pgm").string());

        std::ofstream csv(dir / "trace.csv", std::ios::binary);
        csv << "iteration,energy,bias_ms_change";
        for (int k = 0; k < sf.cfg.n_classes; ++k) csv << ",c_" << k;
        csv << "\n";
        for (const auto& row : trace) {
            csv << row.iteration << "," << format_g9(row.energy) << ","
                << format_g9(row.bias_ms_change);
            for (double c : row.centers) csv << "," << format_g9(c);
            csv << "\n";
        }

        write_manifest(dir, "correct", sf.resolved_json(), json{{"image", input}},
                       json{{"corrected", "corrected.pgm"},
                            {"bias", "bias.bfk"},
                            {"bias_preview", "bias_preview.pgm"},
                            {"labels", "labels.pgm"},
                            {"trace", "trace.csv"}},
                       sf.cfg.seed, timer.seconds());
    } catch (const std::exception& e) {
        std::cerr << "bfk: " << e.what() << "\n";
        return kExitIo;
    }

    std::cout << "converged=" << (res.converged ? "true" : "false")
              << " iterations=" << res.iterations << " energy=" << format_g9(res.final_energy)
              << "\n";
    return kExitOk;
}

int run_simulate(const std::string& out_dir, PhantomFlags& pf, BiasFlags& bf, int count,
                 std::uint64_t seed) {
    Timer timer;
    Phantom ph;
    try {
        if (count < 0) throw std::invalid_argument("--count must be >= 0");
        // The ground-truth phantom stays noiseless; --noise-sigma is the
        // observation noise added when the bias is applied.
        PhantomSpec ps = pf.spec(seed);
        ps.noise_sigma = 0.0;
        ph = make_phantom(ps);
        bf.spec(seed).validate();
    } catch (const std::invalid_argument& e) {
        std::cerr << "bfk: invalid spec: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        fs::create_directories(out_dir);
        fs::path dir(out_dir);
        write_image(ph.image, (dir / "clean.pgm").string(), false, 16);
        write_labels(ph.labels, (dir / "labels.pgm").string());

        Mask mask = ph.image.effective_mask();
        for (int i = 0; i < count; ++i) {
            std::uint64_t pair_seed = seed + static_cast<std::uint64_t>(i);
            ScalarField bias = synth_bias(pf.width, pf.height, bf.spec(pair_seed));
            ImageGrid biased = apply_bias(ph.image, bias, pf.noise_sigma, noise_seed(pair_seed));

            ScalarField stored = biased.values;
            for (std::size_t px = 0; px < stored.size(); ++px)
                if (!mask.on[px]) stored.data[px] = 0.0;  // keep the mask file-representable
            stored = to_storage_range(std::move(stored));

            char name[64];
            std::snprintf(name, sizeof(name), "biased_%03d.pgm", i);
            write_image(stored, (dir / name).string(), false, 16);
            std::snprintf(name, sizeof(name), "true_bias_%03d.bfk", i);
            write_field(bias, (dir / name).string());
        }

        write_manifest(dir, "simulate",
                       json{{"phantom", pf.to_json()}, {"bias", bf.to_json()}, {"count", count}},
                       json::object(),
                       json{{"clean", "clean.pgm"},
                            {"labels", "labels.pgm"},
                            {"pairs", count}},
                       seed, timer.seconds());
    } catch (const std::exception& e) {
        std::cerr << "bfk: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}

int run_evaluate(const std::string& clean_path, const std::string& labels_path,
                 const std::string& corrected_path, const std::string& input_path,
                 const std::string& report_path) {
    ImageGrid clean, corrected, input;
    LabelField labels;
    try {
        clean = read_image(clean_path);
        labels = read_labels(labels_path);
        corrected = read_image(corrected_path);
        input = read_image(input_path);
    } catch (const std::exception& e) {
        std::cerr << "bfk: " << e.what() << "\n";
        return kExitIo;
    }

    MetricReport rep_in, rep_corr;
    try {
        rep_in = evaluate_report(clean, input, labels);
        rep_corr = evaluate_report(clean, corrected, labels);
    } catch (const std::invalid_argument& e) {
        std::cerr << "bfk: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        std::ofstream csv(report_path, std::ios::binary);
        if (!csv) throw std::runtime_error(report_path + ": cannot open for writing");
        csv << "image," << rep_in.csv_header() << "\n";
        csv << "input," << rep_in.csv_row() << "\n";
        csv << "corrected," << rep_corr.csv_row() << "\n";

        std::ofstream js(report_path + ".json", std::ios::binary);
        js << "{\"input\": " << rep_in.to_json() << ", \"corrected\": " << rep_corr.to_json()
           << "}\n";
    } catch (const std::exception& e) {
        std::cerr << "bfk: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}

struct CellMetrics {
    std::vector<double> cv_in, cv_corr;  // one entry per class
    double ssim_in = 0, ssim_corr = 0, psnr_in = 0, psnr_corr = 0;
};

struct Aggregate {
    double mean = 0, sd = 0;
};

Aggregate aggregate(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<double>(v.size()))};
}

int run_sweep(const std::string& spec_path, const std::string& out_dir, SolverFlags& sf) {
    Timer timer;
    std::ifstream in(spec_path);
    if (!in) {
        std::cerr << "bfk: cannot read sweep spec " << spec_path << "\n";
        return kExitConfig;
    }
    json spec = json::parse(in, nullptr, false);
    if (spec.is_discarded() || !spec.is_object() || !spec.contains("conditions") ||
        !spec["conditions"].is_array() || spec["conditions"].empty()) {
        std::cerr << "bfk: malformed sweep spec (needs a non-empty conditions array)\n";
        return kExitConfig;
    }

    PhantomFlags pf;
    try {
        if (spec.contains("phantom")) {
            const json& p = spec["phantom"];
            if (p.contains("width")) pf.width = p["width"];
            if (p.contains("height")) pf.height = p["height"];
            if (p.contains("classes")) pf.classes = p["classes"];
            if (p.contains("intensities"))
                pf.intensities = p["intensities"].get<std::vector<double>>();
            if (p.contains("geometry")) pf.geometry = p["geometry"];
            if (p.contains("voronoi_sites")) pf.voronoi_sites = p["voronoi_sites"];
        }
        if (spec.contains("solver")) sf.overlay(spec["solver"]);
        sf.cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "bfk: malformed sweep spec: " << e.what() << "\n";
        return kExitConfig;
    }

    struct ConditionResult {
        std::string name;
        int runs = 0;
        std::vector<std::vector<double>> cv_in, cv_corr;  // [class][run]
        std::vector<double> ssim_in, ssim_corr, psnr_in, psnr_corr;
    };
    std::vector<ConditionResult> results;

    try {
        for (const json& cond : spec["conditions"]) {
            BiasFlags bf;
            double noise = 0.0;
            std::vector<std::uint64_t> seeds;
            std::string name = cond.value("name", std::string("condition"));
            if (cond.contains("bias_lo")) bf.bias_lo = cond["bias_lo"];
            if (cond.contains("bias_hi")) bf.bias_hi = cond["bias_hi"];
            if (cond.contains("legendre_degree")) bf.legendre_degree = cond["legendre_degree"];
            if (cond.contains("trig_degree")) bf.trig_degree = cond["trig_degree"];
            if (cond.contains("noise_sigma")) noise = cond["noise_sigma"];
            if (cond.contains("seeds")) seeds = cond["seeds"].get<std::vector<std::uint64_t>>();
            if (seeds.empty()) throw std::invalid_argument("condition without seeds");

            PhantomSpec ps = pf.spec(seeds.front());
            ps.noise_sigma = 0.0;  // noiseless reference; noise goes on the observation
            Phantom ph = make_phantom(ps);
            Mask mask = ph.image.effective_mask();

            ConditionResult cr;
            cr.name = name;
            cr.cv_in.resize(pf.classes);
            cr.cv_corr.resize(pf.classes);

            for (std::uint64_t seed : seeds) {
                ScalarField bias = synth_bias(pf.width, pf.height, bf.spec(seed));
                ImageGrid biased = apply_bias(ph.image, bias, noise, noise_seed(seed));

                // Mirror what simulate writes and correct reads back.
                ScalarField stored = biased.values;
                for (std::size_t px = 0; px < stored.size(); ++px)
                    if (!mask.on[px]) stored.data[px] = 0.0;
                ImageGrid input(to_storage_range(std::move(stored)));

                SolverConfig cfg = sf.cfg;
                cfg.seed = seed;
                CorrectionResult res = fit(input, cfg);
                ImageGrid corrected(clip01(res.corrected));

                MetricReport rep_in = evaluate_report(ph.image, input, ph.labels);
                MetricReport rep_corr = evaluate_report(ph.image, corrected, ph.labels);
                for (int k = 0; k < pf.classes; ++k) {
                    cr.cv_in[k].push_back(rep_in.per_class_cv[k].second);
                    cr.cv_corr[k].push_back(rep_corr.per_class_cv[k].second);
                }
                cr.ssim_in.push_back(rep_in.ssim);
                cr.ssim_corr.push_back(rep_corr.ssim);
                cr.psnr_in.push_back(rep_in.psnr_db);
                cr.psnr_corr.push_back(rep_corr.psnr_db);
                ++cr.runs;
            }
            results.push_back(std::move(cr));
        }
    } catch (const std::exception& e) {
        std::cerr << "bfk: sweep failed: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        fs::create_directories(out_dir);
        fs::path dir(out_dir);
        std::ofstream csv(dir / "sweep.csv", std::ios::binary);
        csv << "condition,runs";
        for (const char* side : {"input", "corrected"})
            for (int k = 0; k < pf.classes; ++k)
                csv << "," << side << "_cv_" << k << "_mean," << side << "_cv_" << k << "_std";
        for (const char* side : {"input", "corrected"})
            csv << "," << side << "_ssim_mean," << side << "_ssim_std";
        for (const char* side : {"input", "corrected"})
            csv << "," << side << "_psnr_mean," << side << "_psnr_std";
        csv << "\n";
        for (const auto& cr : results) {
            csv << cr.name << "," << cr.runs;
            for (const auto* cvs : {&cr.cv_in, &cr.cv_corr})
                for (int k = 0; k < pf.classes; ++k) {
                    Aggregate a = aggregate((*cvs)[k]);
                    csv << "," << format_g9(a.mean) << "," << format_g9(a.sd);
                }
            for (const auto* v : {&cr.ssim_in, &cr.ssim_corr, &cr.psnr_in, &cr.psnr_corr}) {
                Aggregate a = aggregate(*v);
                csv << "," << format_g9(a.mean) << "," << format_g9(a.sd);
            }
            csv << "\n";
        }

        write_manifest(dir, "sweep",
                       json{{"solver", sf.resolved_json()}, {"spec_file", spec_path}},
                       json{{"spec", spec_path}}, json{{"csv", "sweep.csv"}}, sf.cfg.seed,
                       timer.seconds());
    } catch (const std::exception& e) {
        std::cerr << "bfk: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bias field correction toolkit"};
    app.require_subcommand(1);

    // correct
    auto* correct = app.add_subcommand("correct", "remove the bias field from an image");
    std::string input_path, out_dir;
    correct->add_option("input", input_path, "input image (P5 graymap)")->required();
    correct->add_option("--out", out_dir, "output directory")->required();
    SolverFlags correct_flags;
    correct_flags.add(*correct);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "write a phantom and biased observations");
    std::string sim_out;
    int count = 20;
    simulate->add_option("--out", sim_out, "output directory")->required();
    simulate->add_option("--count", count, "number of (biased image, true bias) pairs");
    std::uint64_t sim_seed = env_default_seed();
    simulate->add_option("--seed", sim_seed, "base seed (pair i uses seed+i)");
    PhantomFlags phantom_flags;
    phantom_flags.add(*simulate);
    BiasFlags bias_flags;
    bias_flags.add(*simulate);

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "metric report for a corrected image");
    std::string clean_path, labels_path, corrected_path, eval_input_path, report_path;
    evaluate->add_option("--clean", clean_path, "bias-free reference image")->required();
    evaluate->add_option("--labels", labels_path, "class label map")->required();
    evaluate->add_option("--corrected", corrected_path, "corrected image")->required();
    evaluate->add_option("--input", eval_input_path, "uncorrected input image")->required();
    evaluate->add_option("--report", report_path, "output CSV path")->required();

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run a condition grid and aggregate metrics");
    std::string sweep_spec, sweep_out;
    sweep->add_option("spec", sweep_spec, "JSON grid spec")->required();
    sweep->add_option("--out", sweep_out, "output directory")->required();
    SolverFlags sweep_flags;
    sweep_flags.add(*sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (correct->parsed()) return run_correct(input_path, out_dir, correct_flags);
    if (simulate->parsed())
        return run_simulate(sim_out, phantom_flags, bias_flags, count, sim_seed);
    if (evaluate->parsed())
        return run_evaluate(clean_path, labels_path, corrected_path, eval_input_path, report_path);
    if (sweep->parsed()) return run_sweep(sweep_spec, sweep_out, sweep_flags);
    return kExitConfig;
}
