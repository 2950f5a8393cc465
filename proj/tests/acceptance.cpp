// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dir_snapshot.hpp"
#include "gradcheck.hpp"
#include "mitoforge/datasetgen.hpp"
#include "mitoforge/implicit_fit.hpp"
#include "mitoforge/io_util.hpp"
#include "mitoforge/mesh_query.hpp"
#include "mitoforge/metrics.hpp"
#include "mitoforge/microscope.hpp"
#include "mitoforge/occupancy.hpp"
#include "mitoforge/volume.hpp"
#include "oracles.hpp"

using namespace mitoforge;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome optical_resolution() {
    const std::pair<const char*, double> table[] = {{"Con1", 152}, {"Epi1", 245}, {"Epi2", 217}};
    bool ok = true;
    std::string d;
    for (const auto& [name, expect] : table) {
        const double r = lateral_resolution(preset(name));
        ok &= std::abs(r - expect) <= 3.0;
        d += fmt("%s %.1f nm (table %.0f) ", name, r, expect);
    }
    return {ok, d + "tol 3 nm"};
}

Outcome connected_components_oracle() {
    std::mt19937_64 g(20240601);
    std::uniform_real_distribution<double> density(0.05, 0.5);
    std::size_t agree = 0, total = 0;
    for (int v = 0; v < 200; ++v) {
        const auto vol = oracle::random_volume(g(), {64, 64, 64}, density(g));
        for (int conn : {6, 26}) {
            ++total;
            agree += oracle::same_partition(connected_components(vol, conn).labels.data(), oracle::flood_fill(vol, conn));
        }
    }
    return {agree == total, fmt("%zu/%zu labelings identical (200 volumes x {6,26})", agree, total)};
}

Outcome mesh_pipeline() {
    const std::size_t n = 28;
    VoxelVolume ball({n, n, n}, 1.0);
    const double c = (double(n) - 1) / 2;
    oracle::paint_ball(ball, {c, c, c}, 10);
    const auto mesh = marching_cubes(ball, 0.5);
    const bool watertight = is_watertight(mesh);
    const double analytic = 4.0 / 3.0 * oracle::kPi * 1000.0;
    const double vol_err = std::abs(mesh_volume(mesh) - analytic) / analytic;
    const MeshQuery q(mesh);
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> u(-0.5, double(n) - 0.5);
    std::size_t agree = 0;
    const std::size_t samples = 10000;
    for (std::size_t s = 0; s < samples; ++s) {
        const Vec3 p{u(g), u(g), u(g)};
        const bool voxel = ball.at(std::size_t(std::lround(p.x)), std::size_t(std::lround(p.y)), std::size_t(std::lround(p.z))) != 0;
        agree += q.contains(p) == voxel;
    }
    const double frac = double(agree) / double(samples);
    return {watertight && vol_err <= 0.05 && frac >= 0.99,
            fmt("watertight=%s volume error %.2f%% (<=5%%) point agreement %.4f (>=0.99)", watertight ? "yes" : "no",
                100 * vol_err, frac)};
}

Outcome occupancy_statistics() {
    const auto cube = make_box({-0.25, -0.25, -0.25}, {0.25, 0.25, 0.25});
    const auto set = sample_occupancy(cube, 10000, 7);
    const double sigma = std::sqrt(0.125 * 0.875 / 10000.0);
    const double f = set.inside_fraction();
    return {std::abs(f - 0.125) <= 3 * sigma, fmt("inside fraction %.4f, |f-0.125| = %.2f sigma (<=3)", f, std::abs(f - 0.125) / sigma)};
}

Outcome implicit_fit_quality() {
    const auto sphere = make_icosphere(0.35, 4);
    const auto samples = sample_occupancy(sphere, 10000, 11, "sphere");
    FitConfig cfg;
    cfg.epochs = 100;
    cfg.seed = 5;
    const auto t0 = std::chrono::steady_clock::now();
    const auto model = fit(samples, cfg).model;
    const auto recon = extract_mesh(model, 128, 0.5);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double iou = volumetric_iou(recon, sphere, kDefaultIouSamples, 1);

    const auto gc = oracle::gradient_check({64, 5, Activation::Softplus}, 0, 16, 100);
    return {iou >= 0.90 && secs <= 300 && gc.max_rel <= 1e-5,
            fmt("IoU %.4f (>=0.90) fit+extract %.1f s (<=300) gradient max rel err %.2e over %zu params (<=1e-5)", iou,
                secs, gc.max_rel, gc.checked)};
}

Outcome zstack_geometry() {
    const auto& cfg = preset("Epi1");
    const std::vector<Vec3> e{{0, 0, 250}};
    const auto st = render_zstack(e, cfg, FieldOfView{32, 32, 0, 0});
    const bool offsets = st.z_offsets == std::vector<double>{-250, 0, 250};
    std::size_t best = 0;
    for (std::size_t k = 1; k < st.slices.size(); ++k)
        if (st.slices[k].max() > st.slices[best].max()) best = k;
    const bool peak = offsets && best == 2;
    return {offsets && peak, fmt("offsets (%.0f, %.0f, %.0f) nm, emitter at +250 nm peaks in slice n=%+d",
                                 st.z_offsets[0], st.z_offsets[1], st.z_offsets[2], int(best) - 1)};
}

Outcome noise_model() {
    const auto& cfg = preset("Epi1");
    const auto shape = make_synthetic_mitochondrion(21);
    const auto emitters = sample_surface(shape, 30.0, 4).positions;
    const auto clean = render_slice(emitters, cfg, FieldOfView{64, 64, 0, 0}, 0.0);
    const double peak = clean.max();
    std::size_t peak_idx = 0;
    for (std::size_t k = 0; k < clean.data.size(); ++k)
        if (clean.data[k] == peak) peak_idx = k;

    double bg_sum = 0, sbr_sum = 0;
    std::size_t bg_n = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto n = add_noise(clean, cfg, 3.0, s);
        double local = 0;
        std::size_t cnt = 0;
        for (std::size_t k = 0; k < clean.data.size(); ++k)
            if (clean.data[k] <= 1e-4 * peak) {
                local += n.counts.data[k];
                ++cnt;
            }
        bg_sum += local;
        bg_n += cnt;
        sbr_sum += n.counts.data[peak_idx] / (local / double(cnt));
    }
    const double bg = bg_sum / double(bg_n), sbr = sbr_sum / 100.0;
    double lo = INFINITY, hi = -INFINITY;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const double t = add_noise(clean, cfg, std::nullopt, 1000 + s).target_sbr;
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
    const bool ok = std::abs(bg - 100.0) <= 2.0 && std::abs(sbr - 3.0) <= 0.3 && lo >= 2.0 && hi <= 4.0;
    return {ok, fmt("background mean %.2f (100 +-2%%) measured SBR %.3f (3 +-10%%) sampled SBR range [%.3f, %.3f] within [2, 4]",
                    bg, sbr, lo, hi)};
}

Outcome metrics_calibration() {
    const auto shape = normalize_unit_cube(make_synthetic_mitochondrion(2)).mesh;
    const double self = volumetric_iou(shape, shape, kDefaultIouSamples, 1);
    const auto a = make_box({0, 0, 0}, {1, 1, 1}), b = make_box({0.5, 0, 0}, {1.5, 1, 1});
    const double half = volumetric_iou(a, b, 100000, 2);
    const double ch = chamfer_l1(shape, shape, kDefaultChamferPoints, 3);

    std::size_t exact = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        std::mt19937_64 g(s);
        const double p = std::uniform_real_distribution<double>(0.0, 0.8)(g);
        const auto pred = oracle::random_mask(g(), 64, 48, p), gt = oracle::random_mask(g(), 64, 48, p);
        const auto c = oracle::confusion(pred, gt);
        bool ok = true;
        for (bool fg : {true, false}) {
            const auto m = mask_scores(pred, gt, fg);
            // pooled over both classes, background tp = tn and the error counts swap roles
            const std::size_t tp = fg ? c.tp : c.tp + c.tn;
            const std::size_t fp = fg ? c.fp : c.fp + c.fn;
            const std::size_t fn = fg ? c.fn : c.fn + c.fp;
            ok &= m.tp == tp && m.fp == fp && m.fn == fn;
            const double denom = double(2 * tp + fp + fn);
            const double dice = denom == 0 ? 1.0 : 2.0 * double(tp) / denom;
            const double iou = denom == 0 ? 1.0 : double(tp) / double(tp + fp + fn);
            ok &= m.dice == dice && m.iou == iou;
            ok &= std::abs(m.f1 - m.dice) <= 1e-12 && std::abs(m.dice - 2 * m.iou / (1 + m.iou)) <= 1e-12;
        }
        exact += ok;
    }
    const bool pass = self >= 0.999 && std::abs(half - 1.0 / 3.0) <= 0.02 && ch == 0.0 && exact == 100;
    return {pass, fmt("self IoU %.4f (>=0.999) half-offset cubes %.4f (1/3 +-0.02) chamfer self %.3g (0) mask identities %zu/100",
                      self, half, ch, exact)};
}

Outcome determinism() {
    const auto corpus = synthetic_corpus(10, 77);
    SegmentationConfig cfg;
    cfg.count = 20;
    const auto root = fs::temp_directory_path() / "mitoforge_acceptance_seg";
    fs::remove_all(root);
    gen_segmentation_dataset(corpus, cfg, 2024, root / "a", 1);
    gen_segmentation_dataset(corpus, cfg, 2024, root / "b", 1);
    gen_segmentation_dataset(corpus, cfg, 2024, root / "c", 8);
    io::write_text(root / "seg.json", R"({"count": 20, "corpus": {"synthetic": 10, "seed": 77}})");
    const std::string cmd = std::string(MITOFORGE_CLI) + " dataset seg --config " + (root / "seg.json").string() +
                            " --seed 2024 --jobs 8 --out " + (root / "cli").string() + " > /dev/null 2>&1";
    const bool cli_ok = std::system(cmd.c_str()) == 0;
    const auto a = oracle::snapshot(root / "a");
    const bool same = cli_ok && a == oracle::snapshot(root / "b") && a == oracle::snapshot(root / "c") &&
                      a == oracle::snapshot(root / "cli");
    const auto img = read_pgm(root / "a" / "images" / "seg_000019.pgm");
    const bool dims = img.width == 256 && img.height == 256;
    const bool verified = verify_manifest(root / "c").empty();
    fs::remove_all(root);
    return {same && dims && verified, fmt("%zu files byte-identical across reruns, library jobs=8 and CLI --jobs 8: %s; montage %zux%zu; manifest verified: %s",
                                          a.size(), same ? "yes" : "no", img.width, img.height, verified ? "yes" : "no")};
}

Outcome microscope_to_microscope() {
    const std::vector<Vec3> e{{0, 0, 0}};
    const auto& epi = preset("Epi1");
    const auto& con = preset("Con1");
    auto fwhm = [&](const MicroscopeConfig& cfg) {
        const auto px = std::size_t(std::lround(7000.0 / cfg.pixel_size_nm));
        return measure_fwhm(render_slice(e, cfg, FieldOfView{px, px, 0, 0}, 0.0), cfg.pixel_size_nm);
    };
    const double fe = fwhm(epi), fc = fwhm(con);
    const double expect = lateral_resolution(con) / lateral_resolution(epi);
    const double ratio = fc / fe;
    return {fc < fe && std::abs(ratio - expect) <= 0.1 * expect,
            fmt("FWHM Epi1 %.1f nm, Con1 %.1f nm, ratio %.4f vs preset %.4f (+-10%%)", fe, fc, ratio, expect)};
}

}  // namespace

int main() {
    const std::vector<std::tuple<int, const char*, double, std::function<Outcome()>>> criteria{
        {1, "optical resolution", 1, optical_resolution},
        {2, "connected components vs flood fill", 30, connected_components_oracle},
        {3, "mesh pipeline fidelity", 10, mesh_pipeline},
        {4, "occupancy statistics", 5, occupancy_statistics},
        {5, "implicit fit quality", 0, implicit_fit_quality},
        {6, "z-stack geometry", 5, zstack_geometry},
        {7, "noise model", 30, noise_model},
        {8, "metrics calibration", 30, metrics_calibration},
        {9, "end-to-end determinism", 120, determinism},
        {10, "microscope-to-microscope", 10, microscope_to_microscope},
    };
    int failed = 0;
    for (const auto& [id, name, budget, run] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        // criterion 5 carries its own budget inside the outcome
        const bool in_time = budget == 0 || secs <= budget;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::printf("%s criterion %2d %-36s %s [%.1f s%s]\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs,
                    in_time ? "" : " over budget");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
