// Command-line front end for the UWF RI/FA registration and evaluation toolkit.

#include <uwfkit/uwfkit.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace uwfkit;

namespace {

PipelineConfig base_config(const std::string& config_path) {
    PipelineConfig cfg;
    std::string path = config_path;
    if (path.empty()) {
        if (const char* env = std::getenv("UWFKIT_CONFIG")) path = env;
    }
    if (!path.empty()) cfg = load_config(path, cfg);
    return cfg;
}

SplitRatio parse_ratio(const std::string& s) {
    int a, b, c;
    char c1, c2;
    std::istringstream is(s);
    if (!(is >> a >> c1 >> b >> c2 >> c) || c1 != ':' || c2 != ':' || a <= 0 || b <= 0 || c <= 0)
        throw CLI::ValidationError("--ratio", "expected a:b:c with positive integers");
    return {a, b, c};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << text;
}

int run(int argc, char** argv) {
    CLI::App app{"UWF retinal image registration and generation-quality evaluation toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "TOML config file (or set UWFKIT_CONFIG)");

    // vesselmap
    auto* sc_vessel = app.add_subcommand("vesselmap", "Extract a vesselness response image");
    std::string vm_in, vm_out, vm_polarity = "bright", vm_scales;
    sc_vessel->add_option("in", vm_in, "input image")->required();
    sc_vessel->add_option("out", vm_out, "output image (png/pgm)")->required();
    sc_vessel->add_option("--polarity", vm_polarity, "bright|dark (vessels vs background)")
        ->check(CLI::IsMember({"bright", "dark"}));
    sc_vessel->add_option("--scales", vm_scales, "comma-separated Gaussian sigmas");

    // register
    auto* sc_reg = app.add_subcommand("register", "Register one RI/FA pair");
    std::string rg_ri, rg_fa, rg_out;
    uint64_t rg_seed = 0;
    bool rg_seed_set = false;
    sc_reg->add_option("--ri", rg_ri, "fixed RI image")->required();
    sc_reg->add_option("--fa", rg_fa, "moving FA image")->required();
    sc_reg->add_option("--out", rg_out, "output JSON")->required();
    sc_reg->add_option("--seed", rg_seed, "RANSAC seed")->each([&](const std::string&) {
        rg_seed_set = true;
    });

    // batch
    auto* sc_batch = app.add_subcommand("batch", "Register every pair in a manifest");
    std::string bt_in, bt_out;
    int bt_workers = 1;
    uint64_t bt_seed = 0;
    bool bt_seed_set = false;
    sc_batch->add_option("--manifest-in", bt_in, "input JSONL manifest")->required();
    sc_batch->add_option("--out", bt_out, "output JSONL manifest")->required();
    sc_batch->add_option("--workers", bt_workers, "worker threads");
    sc_batch->add_option("--seed", bt_seed, "base seed")->each([&](const std::string&) {
        bt_seed_set = true;
    });

    // gate
    auto* sc_gate = app.add_subcommand("gate", "Apply the dice quality gate");
    std::string gt_manifest, gt_out;
    double gt_dice_min = 0.5;
    sc_gate->add_option("--manifest", gt_manifest, "input JSONL manifest")->required();
    sc_gate->add_option("--dice-min", gt_dice_min, "dice gate (pairs with dice < gate rejected)");
    sc_gate->add_option("--out", gt_out, "output JSONL manifest")->required();

    // phase-bin
    auto* sc_phase = app.add_subcommand(
        "phase-bin", "Assign FA phases from injection-elapsed seconds "
                     "(early [25,60] s, mid (60,300] s, late > 300 s, else unknown)");
    std::string ph_manifest, ph_out;
    sc_phase->add_option("--manifest", ph_manifest, "input JSONL manifest")->required();
    sc_phase->add_option("--out", ph_out, "output JSONL manifest")->required();

    // split
    auto* sc_split = app.add_subcommand("split", "Patient-level train/val/test split");
    std::string sp_manifest, sp_out, sp_ratio = "8:1:1";
    uint64_t sp_seed = 0;
    sc_split->add_option("--manifest", sp_manifest, "input JSONL manifest")->required();
    sc_split->add_option("--ratio", sp_ratio, "a:b:c split ratio");
    sc_split->add_option("--seed", sp_seed, "split seed");
    sc_split->add_option("--out", sp_out, "output JSONL manifest")->required();

    // evaluate
    auto* sc_eval = app.add_subcommand("evaluate", "Fidelity metrics for a generated frame");
    std::string ev_pred, ev_target, ev_out;
    sc_eval->add_option("--pred", ev_pred, "generated image")->required();
    sc_eval->add_option("--target", ev_target, "ground-truth image")->required();
    sc_eval->add_option("--out", ev_out, "output JSON")->required();

    // report
    auto* sc_report = app.add_subcommand("report", "Per-phase metric summary table");
    std::string rp_manifest, rp_out;
    sc_report->add_option("--manifest", rp_manifest, "input JSONL manifest")->required();
    sc_report->add_option("--out", rp_out, "output .json or .txt")->required();

    // synth
    auto* sc_synth = app.add_subcommand("synth", "Emit synthetic fixed/moving/truth triples");
    std::string sy_dir;
    uint64_t sy_seed = 0;
    int sy_count = 1, sy_size = 1024;
    sc_synth->add_option("--seed", sy_seed, "base seed")->required();
    sc_synth->add_option("--out-dir", sy_dir, "output directory")->required();
    sc_synth->add_option("--count", sy_count, "number of pairs");
    sc_synth->add_option("--size", sy_size, "image side length");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2; // usage error
    }

    PipelineConfig cfg = base_config(config_path);

    if (*sc_vessel) {
        Raster img = to_grayscale(decode_image(vm_in));
        auto [cropped, valid] = peripheral_crop(img, cfg.crop_margin_frac);
        VesselParams vp = cfg.vessel;
        vp.polarity = vm_polarity == "dark" ? Polarity::DarkOnBright : Polarity::BrightOnDark;
        if (!vm_scales.empty()) {
            vp.scales.clear();
            std::istringstream is(vm_scales);
            std::string tok;
            while (std::getline(is, tok, ','))
                vp.scales.push_back(std::stof(tok));
        }
        encode_image(clamp01(frangi_vesselness(cropped, vp)), vm_out);
    } else if (*sc_reg) {
        if (rg_seed_set) cfg.seed = rg_seed;
        PairRecord rec = register_pair(rg_ri, rg_fa, cfg);
        write_text(rg_out, to_json(rec).dump(2) + "\n");
        std::cerr << (rec.accepted ? "accepted" : "rejected: " + rec.reject_reason) << "\n";
    } else if (*sc_batch) {
        if (bt_seed_set) cfg.seed = bt_seed;
        auto records = read_manifest(bt_in);
        auto out = run_batch(std::move(records), cfg, bt_workers);
        write_manifest(out, bt_out);
        size_t accepted = 0;
        for (const auto& r : out) accepted += r.accepted;
        std::cerr << accepted << "/" << out.size() << " pairs accepted\n";
    } else if (*sc_gate) {
        auto records = read_manifest(gt_manifest);
        auto [accepted, rejected] = qc_gate(records, gt_dice_min);
        std::vector<PairRecord> all = accepted;
        all.insert(all.end(), rejected.begin(), rejected.end());
        std::sort(all.begin(), all.end(), [](const PairRecord& a, const PairRecord& b) {
            return std::tie(a.patient_id, a.visit_id, a.fa_path) <
                   std::tie(b.patient_id, b.visit_id, b.fa_path);
        });
        write_manifest(all, gt_out);
        std::cerr << accepted.size() << " accepted, " << rejected.size() << " rejected\n";
    } else if (*sc_phase) {
        auto records = read_manifest(ph_manifest);
        for (auto& r : records) r.phase = phase_bin(r.injection_elapsed_s);
        write_manifest(records, ph_out);
    } else if (*sc_split) {
        auto records = read_manifest(sp_manifest);
        patient_split(records, parse_ratio(sp_ratio), sp_seed);
        write_manifest(records, sp_out);
    } else if (*sc_eval) {
        MetricReport rep = evaluate_pair(ev_pred, ev_target, cfg);
        write_text(ev_out, detail::to_json(rep).dump(2) + "\n");
    } else if (*sc_report) {
        auto records = read_manifest(rp_manifest);
        std::vector<std::pair<Phase, MetricReport>> reports;
        for (const auto& r : records)
            if (r.metrics) reports.emplace_back(r.phase, *r.metrics);
        auto agg = aggregate_report(reports);
        if (detail::ends_with_ci(rp_out, ".json"))
            write_text(rp_out, report_to_json(agg).dump(2) + "\n");
        else
            write_text(rp_out, report_to_text(agg));
    } else if (*sc_synth) {
        fs::create_directories(sy_dir);
        SynthParams params;
        params.width = params.height = sy_size;
        for (int k = 0; k < sy_count; ++k) {
            SynthPair p = synth_pair(sy_seed + uint64_t(k), params);
            std::string stem = (fs::path(sy_dir) / ("pair" + std::to_string(k))).string();
            encode_image(p.fixed, stem + "_fixed.png");
            encode_image(p.moving, stem + "_moving.png");
            auto [scale, rotation] = similarity_decompose(p.true_h);
            nlohmann::ordered_json j;
            j["seed"] = sy_seed + uint64_t(k);
            j["homography"] = {{p.true_h.m(0, 0), p.true_h.m(0, 1), p.true_h.m(0, 2)},
                               {p.true_h.m(1, 0), p.true_h.m(1, 1), p.true_h.m(1, 2)},
                               {p.true_h.m(2, 0), p.true_h.m(2, 1), p.true_h.m(2, 2)}};
            j["scale"] = scale;
            j["rotation"] = rotation;
            write_text(stem + "_truth.json", j.dump(2) + "\n");
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::ParseError&) {
        return 2;
    } catch (const uwfkit::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
