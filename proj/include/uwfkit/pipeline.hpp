#ifndef UWFKIT_PIPELINE_HPP
#define UWFKIT_PIPELINE_HPP

#include "core.hpp"
#include "features.hpp"
#include "geometry.hpp"
#include "image_io.hpp"
#include "imgproc.hpp"
#include "metrics.hpp"
#include "scale_space.hpp"
#include "synth.hpp"
#include "vesselness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

namespace uwfkit {

enum class Phase { Early, Mid, Late, Unknown };

inline const char* phase_name(Phase p) {
    switch (p) {
    case Phase::Early: return "early";
    case Phase::Mid: return "mid";
    case Phase::Late: return "late";
    default: return "unknown";
    }
}

inline Phase phase_from_name(const std::string& s) {
    if (s == "early") return Phase::Early;
    if (s == "mid") return Phase::Mid;
    if (s == "late") return Phase::Late;
    return Phase::Unknown;
}

/// FA phase from seconds after injection. Pre-venous frames ([0,25) s) map to
/// unknown; boundaries: [25,60] early, (60,300] mid, (300,inf) late.
inline Phase phase_bin(std::optional<double> elapsed_s) {
    if (!elapsed_s) return Phase::Unknown;
    double t = *elapsed_s;
    if (t < 0) throw NegativeElapsed("phase_bin: negative elapsed time");
    if (t < 25) return Phase::Unknown;
    if (t <= 60) return Phase::Early;
    if (t <= 300) return Phase::Mid;
    return Phase::Late;
}

struct SplitRatio {
    int train = 8, val = 1, test = 1;
};

struct PipelineConfig {
    int working_resolution = 1024;
    double crop_margin_frac = 0.02;
    VesselParams vessel; // polarity chosen per modality at use sites
    int octaves = 4;
    int sublevels = 4;
    float detect_threshold = 1e-3f;
    double match_ratio = 0.8;
    double ransac_thresh_px = 3.0;
    double ransac_conf = 0.995;
    int ransac_max_iter = 2000;
    double dice_gate = 0.5;
    SplitRatio split_ratio;
    uint64_t seed = 0;
};

enum class Split { None, Train, Val, Test };

inline const char* split_name(Split s) {
    switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    default: return "";
    }
}

struct PairRecord {
    std::string patient_id;
    std::string eye;      // "left" | "right"
    std::string visit_id;
    std::string ri_path;
    std::string fa_path;
    std::optional<double> injection_elapsed_s;
    Phase phase = Phase::Unknown;
    std::optional<RegistrationResult> registration;
    std::optional<MetricReport> metrics;
    bool accepted = false;
    std::string reject_reason; // empty when accepted or not yet registered
    Split split = Split::None;
};

// ---------------------------------------------------------------------------
// manifest (JSON Lines) serialization

namespace detail {

inline nlohmann::ordered_json to_json(const RegistrationResult& r) {
    nlohmann::ordered_json j;
    j["homography"] = {{r.homography.m(0, 0), r.homography.m(0, 1), r.homography.m(0, 2)},
                       {r.homography.m(1, 0), r.homography.m(1, 1), r.homography.m(1, 2)},
                       {r.homography.m(2, 0), r.homography.m(2, 1), r.homography.m(2, 2)}};
    j["inlier_count"] = r.inlier_count;
    j["total_matches"] = r.total_matches;
    j["scale"] = r.scale;
    j["rotation"] = r.rotation;
    j["validity"] = {{"pass", r.validity.pass}, {"reason", r.validity.reason}};
    j["dice"] = r.dice;
    return j;
}

inline RegistrationResult registration_from_json(const nlohmann::ordered_json& j) {
    RegistrationResult r;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            r.homography.m(a, b) = j["homography"][a][b].get<double>();
    r.inlier_count = j["inlier_count"].get<int>();
    r.total_matches = j["total_matches"].get<int>();
    r.scale = j["scale"].get<double>();
    r.rotation = j["rotation"].get<double>();
    r.validity.pass = j["validity"]["pass"].get<bool>();
    r.validity.reason = j["validity"]["reason"].get<std::string>();
    r.dice = j["dice"].get<double>();
    return r;
}

inline nlohmann::ordered_json to_json(const MetricReport& m) {
    nlohmann::ordered_json j;
    j["mae"] = m.mae;
    j["psnr"] = std::isinf(m.psnr) ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(m.psnr);
    j["ssim"] = m.ssim;
    j["ms_ssim"] = m.ms_ssim;
    j["gv"] = m.gv;
    return j;
}

inline MetricReport metrics_from_json(const nlohmann::ordered_json& j) {
    MetricReport m;
    m.mae = j["mae"].get<double>();
    m.psnr = j["psnr"].is_string() ? std::numeric_limits<double>::infinity()
                                   : j["psnr"].get<double>();
    m.ssim = j["ssim"].get<double>();
    m.ms_ssim = j["ms_ssim"].get<double>();
    m.gv = j["gv"].get<double>();
    return m;
}

} // namespace detail

inline nlohmann::ordered_json to_json(const PairRecord& r) {
    nlohmann::ordered_json j;
    j["patient_id"] = r.patient_id;
    j["eye"] = r.eye;
    j["visit_id"] = r.visit_id;
    j["ri_path"] = r.ri_path;
    j["fa_path"] = r.fa_path;
    if (r.injection_elapsed_s)
        j["injection_elapsed_s"] = *r.injection_elapsed_s;
    else
        j["injection_elapsed_s"] = nullptr;
    j["phase"] = phase_name(r.phase);
    j["registration"] = r.registration ? detail::to_json(*r.registration)
                                       : nlohmann::ordered_json(nullptr);
    j["metrics"] = r.metrics ? detail::to_json(*r.metrics) : nlohmann::ordered_json(nullptr);
    j["status"] = r.accepted ? "accepted" : (r.reject_reason.empty() ? "pending" : "rejected");
    j["reject_reason"] = r.reject_reason;
    j["split"] = split_name(r.split);
    return j;
}

inline PairRecord record_from_json(const nlohmann::ordered_json& j) {
    PairRecord r;
    r.patient_id = j.value("patient_id", "");
    r.eye = j.value("eye", "");
    r.visit_id = j.value("visit_id", "");
    r.ri_path = j.value("ri_path", "");
    r.fa_path = j.value("fa_path", "");
    if (j.contains("injection_elapsed_s") && !j["injection_elapsed_s"].is_null())
        r.injection_elapsed_s = j["injection_elapsed_s"].get<double>();
    r.phase = phase_from_name(j.value("phase", "unknown"));
    if (j.contains("registration") && !j["registration"].is_null())
        r.registration = detail::registration_from_json(j["registration"]);
    if (j.contains("metrics") && !j["metrics"].is_null())
        r.metrics = detail::metrics_from_json(j["metrics"]);
    std::string status = j.value("status", "pending");
    r.accepted = status == "accepted";
    r.reject_reason = j.value("reject_reason", "");
    std::string sp = j.value("split", "");
    r.split = sp == "train" ? Split::Train : sp == "val" ? Split::Val
              : sp == "test" ? Split::Test : Split::None;
    return r;
}

inline std::vector<PairRecord> read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open manifest: " + path);
    std::vector<PairRecord> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        out.push_back(record_from_json(nlohmann::ordered_json::parse(line)));
    }
    return out;
}

inline void write_manifest(const std::vector<PairRecord>& records, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open manifest for writing: " + path);
    for (const auto& r : records)
        f << to_json(r).dump() << "\n";
    if (!f) throw IoError("manifest write failed: " + path);
}

// ---------------------------------------------------------------------------
// patient-level splitting

namespace detail {

inline uint64_t fnv1a64(uint64_t seed, const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (int i = 0; i < 8; ++i) {
        h ^= (seed >> (8 * i)) & 0xff;
        h *= 0x100000001b3ull;
    }
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace detail

/// Assigns every record of a patient to exactly one split. Patients are ordered
/// by a keyed hash of (seed, patient_id) so the assignment is independent of
/// input order, then allocated to train/val/test by largest remainder.
inline void patient_split(std::vector<PairRecord>& records, SplitRatio ratio, uint64_t seed) {
    if (records.empty()) throw EmptyInput("patient_split: no records");
    assert(ratio.train > 0 && ratio.val > 0 && ratio.test > 0);
    std::map<std::string, uint64_t> patients;
    for (const auto& r : records) {
        if (r.patient_id.empty()) throw EmptyInput("patient_split: empty patient_id");
        patients.emplace(r.patient_id, detail::fnv1a64(seed, r.patient_id));
    }
    std::vector<std::pair<uint64_t, std::string>> order;
    order.reserve(patients.size());
    for (const auto& [pid, h] : patients) order.emplace_back(h, pid);
    std::sort(order.begin(), order.end());

    const size_t n = order.size();
    const double total = ratio.train + ratio.val + ratio.test;
    double shares[3] = {n * ratio.train / total, n * ratio.val / total, n * ratio.test / total};
    size_t counts[3];
    size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        counts[i] = size_t(shares[i]);
        assigned += counts[i];
    }
    // distribute leftovers by largest fractional remainder (ties to train first)
    while (assigned < n) {
        int best = 0;
        double best_frac = -1;
        for (int i = 0; i < 3; ++i) {
            double frac = shares[i] - double(counts[i]);
            if (frac > best_frac + 1e-12) {
                best_frac = frac;
                best = i;
            }
        }
        ++counts[best];
        ++assigned;
    }

    std::map<std::string, Split> assignment;
    size_t idx = 0;
    for (int part = 0; part < 3; ++part) {
        Split s = part == 0 ? Split::Train : part == 1 ? Split::Val : Split::Test;
        for (size_t k = 0; k < counts[part]; ++k, ++idx)
            assignment[order[idx].second] = s;
    }
    for (auto& r : records) r.split = assignment[r.patient_id];
}

// ---------------------------------------------------------------------------
// end-to-end registration

struct RegistrationDebug {
    BinaryMask ri_vessel_mask, fa_vessel_mask, valid_mask;
    int fa_keypoints = 0, ri_keypoints = 0, matches = 0;
};

/// Registration chain on already-decoded rasters. FA is the moving image, RI is
/// the fixed image; the returned homography maps FA coordinates to RI
/// coordinates at the working resolution.
inline RegistrationResult register_rasters(const Raster& ri, const Raster& fa,
                                           const PipelineConfig& cfg,
                                           RegistrationDebug* debug = nullptr) {
    const int res = cfg.working_resolution;
    Raster ri_g = resize_bilinear(to_grayscale(ri), res, res);
    Raster fa_g = resize_bilinear(to_grayscale(fa), res, res);
    auto [ri_c, valid] = peripheral_crop(ri_g, cfg.crop_margin_frac);
    auto [fa_c, valid2] = peripheral_crop(fa_g, cfg.crop_margin_frac);

    // expected polarity per modality (RI vessels dark, fluorescein bright), but
    // keep whichever response carries more energy so mislabeled or self-paired
    // inputs still register
    auto vessel_auto = [&](const Raster& img, Polarity expected) {
        VesselParams vp = cfg.vessel;
        vp.polarity = expected;
        Raster a = frangi_vesselness(img, vp);
        vp.polarity = expected == Polarity::DarkOnBright ? Polarity::BrightOnDark
                                                         : Polarity::DarkOnBright;
        Raster b = frangi_vesselness(img, vp);
        // squared response favors the polarity with strong sparse ridges over
        // diffuse low-level response between vessels
        double ea = 0, eb = 0;
        for (size_t i = 0; i < a.size(); ++i) {
            ea += double(a.data()[i]) * a.data()[i];
            eb += double(b.data()[i]) * b.data()[i];
        }
        return eb > ea ? b : a;
    };
    Raster ri_v = vessel_auto(ri_c, Polarity::DarkOnBright);
    Raster fa_v = vessel_auto(fa_c, Polarity::BrightOnDark);
    BinaryMask ri_mask = binarize_mask(ri_v, valid);
    BinaryMask fa_mask = binarize_mask(fa_v, valid);

    ScaleSpace ri_ss = build_scale_space(ri_v, cfg.octaves, cfg.sublevels);
    ScaleSpace fa_ss = build_scale_space(fa_v, cfg.octaves, cfg.sublevels);
    KeypointSet ri_kps = detect_keypoints(ri_ss, cfg.detect_threshold, valid);
    KeypointSet fa_kps = detect_keypoints(fa_ss, cfg.detect_threshold, valid);
    DescriptorSet ri_desc = describe_keypoints(ri_ss, ri_kps);
    DescriptorSet fa_desc = describe_keypoints(fa_ss, fa_kps);

    MatchSet matches = match_descriptors(fa_desc, ri_desc, cfg.match_ratio);
    if (debug) {
        debug->ri_vessel_mask = ri_mask;
        debug->fa_vessel_mask = fa_mask;
        debug->valid_mask = valid;
        debug->fa_keypoints = int(fa_kps.size());
        debug->ri_keypoints = int(ri_kps.size());
        debug->matches = int(matches.size());
    }

    RegistrationResult res_out = ransac_homography(matches, fa_kps, ri_kps, cfg.ransac_thresh_px,
                                                   cfg.ransac_conf, cfg.ransac_max_iter, cfg.seed);
    // dense subpixel polish on the vesselness responses
    {
        // refine with FA as the reference frame and RI as the resampled image:
        // the RI response is the cleaner of the two to interpolate
        Homography inv;
        inv.m = res_out.homography.m.inverse();
        inv.m /= inv.m(2, 2);
        Homography ref = refine_homography(fa_v, ri_v, inv, valid, &valid);
        res_out.homography.m = ref.m.inverse();
        res_out.homography.m /= res_out.homography.m(2, 2);
    }
    auto [scale, rotation] = similarity_decompose(res_out.homography);
    res_out.scale = scale;
    res_out.rotation = rotation;
    res_out.validity = validity_check(res_out.homography);
    if (res_out.validity.pass) {
        BinaryMask warped_fa = warp_mask(fa_mask, res_out.homography, res, res);
        BinaryMask warped_valid = warp_mask(valid, res_out.homography, res, res);
        BinaryMask both(res, res);
        for (int y = 0; y < res; ++y)
            for (int x = 0; x < res; ++x)
                both.set(x, y, valid.at(x, y) && warped_valid.at(x, y));
        res_out.dice = dice_coefficient(warped_fa, ri_mask, both);
    }
    return res_out;
}

/// File-level wrapper that folds any module error into a rejected record
/// instead of aborting the batch.
inline PairRecord register_pair(const PairRecord& input, const PipelineConfig& cfg) {
    PairRecord rec = input;
    rec.phase = phase_bin(rec.injection_elapsed_s);
    try {
        Raster ri = decode_image(rec.ri_path);
        Raster fa = decode_image(rec.fa_path);
        RegistrationResult reg = register_rasters(ri, fa, cfg);
        rec.registration = reg;
        if (!reg.validity.pass) {
            rec.accepted = false;
            rec.reject_reason = "validity: " + reg.validity.reason;
        } else if (reg.dice < cfg.dice_gate) {
            rec.accepted = false;
            std::ostringstream os;
            os << "dice " << reg.dice << " < " << cfg.dice_gate;
            rec.reject_reason = os.str();
        } else {
            rec.accepted = true;
            rec.reject_reason.clear();
        }
    } catch (const Error& e) {
        rec.accepted = false;
        rec.reject_reason = e.what();
    }
    return rec;
}

inline PairRecord register_pair(const std::string& ri_path, const std::string& fa_path,
                                const PipelineConfig& cfg) {
    PairRecord rec;
    rec.ri_path = ri_path;
    rec.fa_path = fa_path;
    return register_pair(rec, cfg);
}

/// Partition registered records at the dice gate. Validity failures and module
/// errors stay rejected regardless of dice.
inline std::pair<std::vector<PairRecord>, std::vector<PairRecord>>
qc_gate(const std::vector<PairRecord>& records, double gate) {
    std::vector<PairRecord> accepted, rejected;
    for (PairRecord r : records) {
        if (!r.registration) {
            if (r.reject_reason.empty()) r.reject_reason = "no registration result";
            r.accepted = false;
            rejected.push_back(std::move(r));
            continue;
        }
        if (!r.registration->validity.pass) {
            r.accepted = false;
            r.reject_reason = "validity: " + r.registration->validity.reason;
            rejected.push_back(std::move(r));
        } else if (r.registration->dice < gate) {
            r.accepted = false;
            std::ostringstream os;
            os << "dice " << r.registration->dice << " < " << gate;
            r.reject_reason = os.str();
            rejected.push_back(std::move(r));
        } else {
            r.accepted = true;
            r.reject_reason.clear();
            accepted.push_back(std::move(r));
        }
    }
    return {std::move(accepted), std::move(rejected)};
}

// ---------------------------------------------------------------------------
// evaluation

/// All five fidelity metrics inside the shared peripheral validity mask.
/// MAE/PSNR average over mask pixels only; the windowed metrics see both
/// images zeroed outside the mask.
inline MetricReport evaluate_rasters(const Raster& pred, const Raster& target,
                                     const PipelineConfig& cfg) {
    if (pred.width() != target.width() || pred.height() != target.height())
        throw DimensionMismatch("evaluate: generated and ground-truth frame sizes differ");
    const int res = cfg.working_resolution;
    Raster p = resize_bilinear(to_grayscale(pred), res, res);
    Raster t = resize_bilinear(to_grayscale(target), res, res);
    auto [pc, valid] = peripheral_crop(p, cfg.crop_margin_frac);
    auto [tc, valid2] = peripheral_crop(t, cfg.crop_margin_frac);
    MetricReport r;
    r.mae = mae(pc, tc, &valid);
    r.psnr = psnr(pc, tc, &valid);
    r.ssim = ssim(pc, tc);
    r.ms_ssim = ms_ssim(pc, tc);
    r.gv = gradient_variance(pc, tc);
    return r;
}

inline MetricReport evaluate_pair(const std::string& pred_path, const std::string& target_path,
                                  const PipelineConfig& cfg) {
    return evaluate_rasters(decode_image(pred_path), decode_image(target_path), cfg);
}

// ---------------------------------------------------------------------------
// aggregation

struct MetricStats {
    double mean = 0, sd = 0;
    size_t n = 0;
    size_t skipped = 0; // +inf PSNR sentinels excluded from the mean
};

struct PhaseSummary {
    MetricStats mae, psnr, ssim, ms_ssim, gv;
    size_t count = 0;
};

using AggregateReport = std::map<std::string, PhaseSummary>;

namespace detail {

inline MetricStats stats_of(const std::vector<double>& values, size_t skipped = 0) {
    MetricStats s;
    s.n = values.size();
    s.skipped = skipped;
    if (values.empty()) return s;
    double sum = 0;
    for (double v : values) sum += v;
    s.mean = sum / double(values.size());
    if (values.size() > 1) {
        double ss = 0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / double(values.size() - 1));
    }
    return s;
}

} // namespace detail

/// Per-phase mean and sample SD of every metric; +inf PSNR sentinels are
/// excluded from the PSNR stats and counted.
inline AggregateReport aggregate_report(const std::vector<std::pair<Phase, MetricReport>>& reports) {
    if (reports.empty()) throw EmptyInput("aggregate_report: no reports");
    std::map<std::string, std::vector<MetricReport>> by_phase;
    for (const auto& [phase, rep] : reports)
        by_phase[phase_name(phase)].push_back(rep);
    AggregateReport out;
    for (const auto& [phase, reps] : by_phase) {
        PhaseSummary s;
        s.count = reps.size();
        std::vector<double> v_mae, v_psnr, v_ssim, v_msssim, v_gv;
        size_t inf_count = 0;
        for (const auto& r : reps) {
            v_mae.push_back(r.mae);
            if (std::isinf(r.psnr)) ++inf_count;
            else v_psnr.push_back(r.psnr);
            v_ssim.push_back(r.ssim);
            v_msssim.push_back(r.ms_ssim);
            v_gv.push_back(r.gv);
        }
        s.mae = detail::stats_of(v_mae);
        s.psnr = detail::stats_of(v_psnr, inf_count);
        s.ssim = detail::stats_of(v_ssim);
        s.ms_ssim = detail::stats_of(v_msssim);
        s.gv = detail::stats_of(v_gv);
        out[phase] = s;
    }
    return out;
}

inline nlohmann::ordered_json report_to_json(const AggregateReport& rep) {
    nlohmann::ordered_json j;
    auto stat = [](const MetricStats& s) {
        return nlohmann::ordered_json{
            {"mean", s.mean}, {"sd", s.sd}, {"n", s.n}, {"skipped", s.skipped}};
    };
    for (const auto& [phase, s] : rep) {
        j[phase] = {{"count", s.count}, {"mae", stat(s.mae)},     {"psnr", stat(s.psnr)},
                    {"ssim", stat(s.ssim)}, {"ms_ssim", stat(s.ms_ssim)}, {"gv", stat(s.gv)}};
    }
    return j;
}

inline std::string report_to_text(const AggregateReport& rep) {
    std::ostringstream os;
    os << "Phase        MAE              PSNR             SSIM             MS-SSIM          GV\n";
    char buf[256];
    std::vector<std::string> empty_phases;
    for (const char* name : {"early", "mid", "late", "unknown"}) {
        auto it = rep.find(name);
        if (it == rep.end()) {
            empty_phases.push_back(name);
            continue;
        }
        const PhaseSummary& s = it->second;
        auto cell = [&](const MetricStats& m) {
            char c[64];
            std::snprintf(c, sizeof(c), "%.2f (+-%.2f)", m.mean, m.sd);
            return std::string(c);
        };
        std::snprintf(buf, sizeof(buf), "%-12s %-16s %-16s %-16s %-16s %-16s\n", name,
                      cell(s.mae).c_str(), cell(s.psnr).c_str(), cell(s.ssim).c_str(),
                      cell(s.ms_ssim).c_str(), cell(s.gv).c_str());
        os << buf;
    }
    if (!empty_phases.empty()) {
        os << "no reports for:";
        for (const auto& p : empty_phases) os << " " << p;
        os << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// batch driver

/// Processes all pairs with a bounded worker pool. Records are canonically
/// sorted before processing and per-record seeds derive from record identity,
/// so the output is byte-identical for any worker count or input order.
inline std::vector<PairRecord> run_batch(std::vector<PairRecord> records,
                                         const PipelineConfig& cfg, int workers = 1) {
    std::sort(records.begin(), records.end(), [](const PairRecord& a, const PairRecord& b) {
        return std::tie(a.patient_id, a.visit_id, a.fa_path) <
               std::tie(b.patient_id, b.visit_id, b.fa_path);
    });
    std::vector<PairRecord> out(records.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= records.size()) break;
            PipelineConfig local = cfg;
            local.seed = detail::fnv1a64(cfg.seed, records[i].patient_id + "|" +
                                                       records[i].visit_id + "|" +
                                                       records[i].fa_path);
            out[i] = register_pair(records[i], local);
        }
    };
    workers = std::max(1, workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return out;
}

// ---------------------------------------------------------------------------
// config file (flat TOML subset: sections, key = value)

namespace detail {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace detail

/// Loads a flat TOML config (sections are ignored for addressing; keys are
/// globally unique). Unknown keys raise an error so typos do not pass silently.
inline PipelineConfig load_config(const std::string& path, PipelineConfig base = {}) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::string s = detail::trim(line);
        if (s.empty() || s[0] == '#' || s[0] == '[') continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw CorruptFile("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::trim(s.substr(0, eq));
        std::string val = detail::trim(s.substr(eq + 1));
        if (size_t h = val.find('#'); h != std::string::npos) val = detail::trim(val.substr(0, h));
        auto as_double = [&] { return std::stod(val); };
        auto as_int = [&] { return std::stoi(val); };
        if (key == "working_resolution") base.working_resolution = as_int();
        else if (key == "crop_margin_frac") base.crop_margin_frac = as_double();
        else if (key == "octaves") base.octaves = as_int();
        else if (key == "sublevels") base.sublevels = as_int();
        else if (key == "detect_threshold") base.detect_threshold = float(as_double());
        else if (key == "match_ratio") base.match_ratio = as_double();
        else if (key == "ransac_thresh_px") base.ransac_thresh_px = as_double();
        else if (key == "ransac_conf") base.ransac_conf = as_double();
        else if (key == "ransac_max_iter") base.ransac_max_iter = as_int();
        else if (key == "dice_gate") base.dice_gate = as_double();
        else if (key == "seed") base.seed = uint64_t(std::stoull(val));
        else if (key == "vessel_beta") base.vessel.beta = float(as_double());
        else if (key == "vessel_scales") {
            // array like [1, 2, 4, 8]
            base.vessel.scales.clear();
            std::string inner = val;
            for (char& c : inner)
                if (c == '[' || c == ']' || c == ',') c = ' ';
            std::istringstream is(inner);
            float v;
            while (is >> v) base.vessel.scales.push_back(v);
            if (base.vessel.scales.empty())
                throw CorruptFile("config: vessel_scales must be a nonempty array");
        } else if (key == "split_ratio") {
            // "8:1:1"
            std::string v = val;
            if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
            int a, b, c;
            char c1, c2;
            std::istringstream is(v);
            if (!(is >> a >> c1 >> b >> c2 >> c) || c1 != ':' || c2 != ':')
                throw CorruptFile("config: split_ratio must look like 8:1:1");
            base.split_ratio = {a, b, c};
        } else {
            throw CorruptFile("config: unknown key '" + key + "'");
        }
    }
    if (base.dice_gate < 0 || base.dice_gate > 1)
        throw CorruptFile("config: dice_gate outside [0,1]");
    if (base.split_ratio.train <= 0 || base.split_ratio.val <= 0 || base.split_ratio.test <= 0)
        throw CorruptFile("config: split ratio components must be positive");
    return base;
}

} // namespace uwfkit

#endif
