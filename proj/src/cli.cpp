#include "warpforge/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "warpforge/amoe.hpp"
#include "warpforge/error.hpp"
#include "warpforge/evaluation.hpp"
#include "warpforge/image_io.hpp"
#include "warpforge/stitcher.hpp"

namespace warpforge {

namespace {

std::string kebab(std::string s) {
    std::replace(s.begin(), s.end(), '_', '-');
    return s;
}

std::vector<std::pair<int, int>> parse_resolutions(const std::string& list) {
    std::vector<std::pair<int, int>> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto x = item.find('x');
        int h = 0, w = 0;
        try {
            if (x == std::string::npos) throw std::invalid_argument(item);
            h = std::stoi(item.substr(0, x));
            w = std::stoi(item.substr(x + 1));
        } catch (const std::exception&) {
            throw InputError("resolution '" + item + "' is not HxW");
        }
        if (h <= 0 || w <= 0) throw InputError("resolution '" + item + "' must be positive");
        out.emplace_back(h, w);
    }
    if (out.empty()) throw InputError("no resolutions given");
    return out;
}

Homography parse_homography(const std::string& text) {
    std::string s = text;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    Eigen::Matrix3d m;
    for (int i = 0; i < 9; ++i)
        if (!(in >> m(i / 3, i % 3))) throw InputError("--homography needs 9 comma-separated numbers");
    std::string rest;
    if (in >> rest) throw InputError("--homography needs exactly 9 numbers");
    return Homography(m);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
}

struct StitchArgs {
    std::string ref, tgt, out = "panorama.png", report = "report.json", flows_prefix, config;
    std::map<std::string, std::string> settings;
};

int cmd_stitch(const StitchArgs& a, CLI::App& sub, std::ostream& out) {
    StitchConfig cfg;
    if (!a.config.empty()) load_config_file(cfg, a.config);
    for (const auto& key : config_keys()) {
        const std::string flag = "--" + kebab(key);
        if (sub.count(flag) > 0) apply_setting(cfg, key, a.settings.at(key));
    }
    if (cfg.points.empty()) throw InputError("stitch: no match file (--points)");
    const Image ref = io::read_image(a.ref);
    const Image tgt = io::read_image(a.tgt);
    const MatchSet matches = ingest_matches(cfg.points);
    const StitchResult r = stitch(cfg, ref, tgt, matches);
    io::write_image(a.out, r.panorama);
    write_text(a.report, r.report.to_json());
    if (!a.flows_prefix.empty()) {
        io::write_flow(a.flows_prefix + "_ref.wff", r.flow_ref);
        io::write_flow(a.flows_prefix + "_tgt.wff", r.flow_tgt);
    }
    out << "homography_stage_mpsnr=" << format_db(r.report.metrics.homography.mpsnr) << '\n'
        << r.report.metrics.final.to_text() << "iterations=" << r.report.trace.size() - 1 << '\n'
        << "stop_reason=" << r.report.stop_reason << '\n';
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    apply_thread_env();
    CLI::App app{"warpforge: homography + thin-plate-spline image stitching toolkit", "warpforge"};
    app.require_subcommand(1);

    // stitch
    StitchArgs sa;
    CLI::App* stitch_cmd = app.add_subcommand("stitch", "stitch an image pair given matched keypoints");
    stitch_cmd->add_option("--ref", sa.ref, "reference image")->required();
    stitch_cmd->add_option("--tgt", sa.tgt, "target image")->required();
    stitch_cmd->add_option("--out", sa.out, "panorama output (PNG)");
    stitch_cmd->add_option("--report", sa.report, "run report output (JSON)");
    stitch_cmd->add_option("--flows-prefix", sa.flows_prefix, "write canvas flows as <prefix>_ref.wff/_tgt.wff");
    stitch_cmd->add_option("--config", sa.config, "key = value defaults; flags override");
    for (const auto& key : config_keys()) stitch_cmd->add_option("--" + kebab(key), sa.settings[key]);

    // bench
    std::string resolutions = "566x800,1329x2000", bench_out;
    int bench_u = 12, bench_v = 12, repeats = 3;
    std::uint64_t bench_seed = 7;
    bool serial_only = false;
    std::size_t bench_budget = TpsEvalOptions{}.max_matrix_bytes;
    CLI::App* bench_cmd = app.add_subcommand("bench", "time vanilla vs FFD thin-plate-spline evaluation");
    bench_cmd->add_option("--resolutions", resolutions, "comma-separated HxW list");
    bench_cmd->add_option("--grid-u", bench_u);
    bench_cmd->add_option("--grid-v", bench_v);
    bench_cmd->add_option("--repeats", repeats);
    bench_cmd->add_option("--seed", bench_seed);
    bench_cmd->add_option("--max-matrix-bytes", bench_budget, "vanilla kernel-matrix block budget (0 = whole)");
    bench_cmd->add_flag("--serial-only", serial_only, "skip the OpenMP rows");
    bench_cmd->add_option("--out", bench_out, "CSV path (default stdout)");

    // metrics
    std::string ma, mb, mask, mask_a, mask_b;
    bool csv = false;
    CLI::App* metrics_cmd = app.add_subcommand("metrics", "masked PSNR/SSIM of two aligned images");
    metrics_cmd->add_option("--a", ma)->required();
    metrics_cmd->add_option("--b", mb)->required();
    metrics_cmd->add_option("--mask", mask, "overlap mask");
    metrics_cmd->add_option("--mask-a", mask_a, "validity mask of --a");
    metrics_cmd->add_option("--mask-b", mask_b, "validity mask of --b");
    metrics_cmd->add_flag("--csv", csv, "print a CSV row instead of key=value lines");

    // fuse-demo
    std::string f_s_path, f_g_path, blob_path, fused_out, example_dir;
    std::uint64_t fuse_seed = 0;
    double lambda_e = LossConfig{}.lambda_e;
    CLI::App* fuse_cmd = app.add_subcommand("fuse-demo", "route and fuse two feature maps with an AMOE blob");
    fuse_cmd->add_option("--semantic", f_s_path, "WFM1 semantic feature map");
    fuse_cmd->add_option("--geometric", f_g_path, "WFM1 geometric feature map");
    fuse_cmd->add_option("--blob", blob_path, "AMOE parameter blob");
    fuse_cmd->add_option("--out", fused_out, "fused WFM1 output");
    fuse_cmd->add_option("--lambda-e", lambda_e);
    fuse_cmd->add_option("--write-example", example_dir, "write seeded example inputs into this directory and exit");
    fuse_cmd->add_option("--seed", fuse_seed);

    // synth
    std::string base_path, size = "320x320", synth_dir = ".";
    std::uint64_t synth_seed = 1;
    double hom_mag = 0.03, tps_mag = 0.02;
    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic pair with exact matches");
    synth_cmd->add_option("--base", base_path, "base image (default: procedural texture)");
    synth_cmd->add_option("--size", size, "procedural base size HxW");
    synth_cmd->add_option("--seed", synth_seed);
    synth_cmd->add_option("--homography", hom_mag, "corner offsets as a fraction of the frame");
    synth_cmd->add_option("--tps", tps_mag, "residual peak as a fraction of the frame diagonal");
    synth_cmd->add_option("--out-dir", synth_dir);

    // warp
    std::string warp_image, warp_flow, warp_h, warp_out, warp_mask;
    CLI::App* warp_cmd = app.add_subcommand("warp", "backward-warp an image by a flow or a homography");
    warp_cmd->add_option("--image", warp_image)->required();
    auto* flow_opt = warp_cmd->add_option("--flow", warp_flow, "WFF1 flow (output p samples p + flow)");
    auto* h_opt = warp_cmd->add_option("--homography", warp_h, "9 row-major values mapping input to output");
    flow_opt->excludes(h_opt);
    warp_cmd->add_option("--out", warp_out)->required();
    warp_cmd->add_option("--mask-out", warp_mask, "validity mask output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (stitch_cmd->parsed()) return cmd_stitch(sa, *stitch_cmd, out);

        if (bench_cmd->parsed()) {
            BenchConfig bc;
            bc.resolutions = parse_resolutions(resolutions);
            bc.U = bench_u;
            bc.V = bench_v;
            bc.repeats = repeats;
            bc.seed = bench_seed;
            bc.multithreaded = !serial_only;
            bc.vanilla.max_matrix_bytes = bench_budget;
            const std::string text = bench_csv(bench_tps(bc));
            if (bench_out.empty())
                out << text;
            else
                write_text(bench_out, text);
            return 0;
        }

        if (metrics_cmd->parsed()) {
            const Image a = io::read_image(ma);
            const Image b = io::read_image(mb);
            Mask m = Mask::ones(a.height, a.width);
            if (!mask.empty()) m = io::read_mask(mask);
            if (!mask_a.empty() || !mask_b.empty()) {
                const Mask a_m = mask_a.empty() ? Mask::ones(a.height, a.width) : io::read_mask(mask_a);
                const Mask b_m = mask_b.empty() ? Mask::ones(b.height, b.width) : io::read_mask(mask_b);
                if (a_m.height != m.height || a_m.width != m.width || b_m.height != m.height || b_m.width != m.width)
                    throw InputError("metrics: mask sizes differ from the images");
                m = overlap_mask(overlap_mask(m, a_m), b_m);
            }
            const MetricReport r = evaluate_pair(a, b, m);
            if (csv)
                out << MetricReport::csv_header() << '\n' << r.csv_row() << '\n';
            else
                out << r.to_text();
            return 0;
        }

        if (fuse_cmd->parsed()) {
            if (!example_dir.empty()) {
                const std::filesystem::path dir(example_dir);
                std::filesystem::create_directories(dir);
                constexpr int c = 8;
                std::mt19937_64 rng(fuse_seed);
                FeatureMap f_s(c, 16, 16), f_g(c, 16, 16);
                for (double& v : f_s.data) v = uniform(rng, -1.0, 1.0);
                for (double& v : f_g.data) v = uniform(rng, -1.0, 1.0);
                write_feature_map(dir / "semantic.wfm", f_s);
                write_feature_map(dir / "geometric.wfm", f_g);
                write_amoe_blob(dir / "amoe.bin", RouterParams::random(c, fuse_seed + 1),
                                ExpertParams::random(c, fuse_seed + 2));
                out << "wrote " << (dir / "semantic.wfm").string() << ", " << (dir / "geometric.wfm").string()
                    << ", " << (dir / "amoe.bin").string() << '\n';
                return 0;
            }
            if (f_s_path.empty() || f_g_path.empty() || blob_path.empty())
                throw InputError("fuse-demo: --semantic, --geometric and --blob are required");
            const FeatureMap f_s = read_feature_map(f_s_path);
            const FeatureMap f_g = read_feature_map(f_g_path);
            const auto [router, experts] = read_amoe_blob(blob_path);
            const FusionWeights w = route(router, f_s, f_g);
            const FeatureMap fused = fuse(experts, w, f_s, f_g);
            if (!fused_out.empty()) write_feature_map(fused_out, fused);
            out.precision(17);
            out << "w_semantic=" << w.s << "\nw_geometric=" << w.g << "\nw_heterogeneous=" << w.h
                << "\nreg=" << reg_loss(w, lambda_e) << '\n';
            return 0;
        }

        if (synth_cmd->parsed()) {
            Image base;
            if (base_path.empty()) {
                const auto dims = parse_resolutions(size);
                if (dims.size() != 1) throw InputError("synth: --size takes one HxW");
                base = procedural_texture(dims[0].first, dims[0].second, synth_seed);
            } else {
                base = io::read_image(base_path);
            }
            const SyntheticPair pair = generate_synthetic_pair(base, synth_seed, hom_mag, tps_mag);
            const std::filesystem::path dir(synth_dir);
            std::filesystem::create_directories(dir);
            io::write_png(dir / "ref.png", pair.ref);
            io::write_png(dir / "tgt.png", pair.tgt);
            io::write_flow(dir / "truth.wff", pair.truth);
            write_matches(dir / "matches.txt", pair.matches);
            const auto h = pair.generator.values();
            std::ostringstream hs;
            hs.precision(17);
            for (std::size_t i = 0; i < h.size(); ++i) hs << (i ? "," : "") << h[i];
            write_text(dir / "generator_homography.txt", hs.str() + "\n");
            out << "frame=" << pair.ref.height << "x" << pair.ref.width << "\nmatches=" << pair.matches.pairs.size()
                << "\ngenerator_homography=" << hs.str() << '\n';
            return 0;
        }

        if (warp_cmd->parsed()) {
            const Image img = io::read_image(warp_image);
            FlowField flow;
            if (!warp_flow.empty()) {
                flow = io::read_flow(warp_flow);
            } else if (!warp_h.empty()) {
                flow = homography_to_flow(parse_homography(warp_h), img.height, img.width);
            } else {
                throw InputError("warp: give --flow or --homography");
            }
            const Warped w = warp_with_flow(img, flow);
            io::write_image(warp_out, w.image);
            if (!warp_mask.empty()) io::write_mask(warp_mask, w.mask);
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.is_numerical() ? 2 : 1;
    } catch (const std::bad_alloc&) {
        err << "error: out of memory\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace warpforge
