#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mitoforge/io_util.hpp"
#include "mitoforge/mesh.hpp"
#include "mitoforge/volume.hpp"
#include "oracles.hpp"

using namespace mitoforge;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run cli(const std::string& args) {
    const std::string cmd = std::string(MITOFORGE_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::vector<json> lines(const std::string& s) {
    std::vector<json> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);)
        if (!l.empty()) out.push_back(json::parse(l));
    return out;
}

fs::path workdir(const std::string& name) {
    const auto d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("presets list prints three records") {
    const auto r = cli("presets list");
    REQUIRE(r.code == 0);
    const auto recs = lines(r.out);
    REQUIRE(recs.size() == 3);
    CHECK(recs[0]["name"] == "Con1");
    CHECK(recs[1]["optical_resolution_nm"].get<double>() == doctest::Approx(242.25).epsilon(1e-3));
}

TEST_CASE("exit codes for config and input failures") {
    CHECK(cli("").code == 2);
    CHECK(cli("frobnicate").code == 2);
    CHECK(cli("metrics iou a.off b.off").code == 2);  // --seed missing
    CHECK(cli("metrics iou /nonexistent/a.off /nonexistent/b.off --seed 1").code == 3);
    CHECK(cli("render slice /nonexistent.csv --preset Nope --out /tmp/x").code == 2);
    CHECK(cli("--help").code == 0);
}

TEST_CASE("volume cc counts five separated balls") {
    const auto d = workdir("mitoforge_cli_cc");
    VoxelVolume v({40, 40, 40}, 8.0);
    oracle::paint_ball(v, {8, 8, 8}, 4);
    oracle::paint_ball(v, {30, 8, 8}, 4);
    oracle::paint_ball(v, {8, 30, 8}, 5);
    oracle::paint_ball(v, {30, 30, 30}, 4);
    oracle::paint_ball(v, {8, 8, 30}, 3);
    v.at(20, 20, 20) = 1;  // below the default size filter
    save_volume(d / "balls.raw", v, 8);
    const auto r = cli("volume cc " + (d / "balls.raw").string() + " --out " + (d / "out").string());
    REQUIRE(r.code == 0);
    const auto rec = lines(r.out).back();
    CHECK(rec["components"] == 5);
    CHECK(fs::exists(d / "out" / "balls_labels.raw"));
    CHECK(lines(cli("volume cc " + (d / "balls.raw").string() + " --min-voxels 0").out).back()["components"] == 6);
    fs::remove_all(d);
}

TEST_CASE("metrics iou is deterministic for a fixed seed") {
    const auto d = workdir("mitoforge_cli_iou");
    write_mesh(d / "a.off", make_box({0, 0, 0}, {1, 1, 1}));
    write_mesh(d / "b.off", make_box({0.5, 0, 0}, {1.5, 1, 1}));
    const auto args = "metrics iou " + (d / "a.off").string() + " " + (d / "b.off").string() + " --seed 4 --n 20000";
    const auto a = cli(args), b = cli(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(lines(a.out)[0]["iou"].get<double>() == doctest::Approx(1.0 / 3).epsilon(0.1));
    fs::remove_all(d);
}

TEST_CASE("shape pipeline: synth, sample, fit, extract, chamfer") {
    const auto d = workdir("mitoforge_cli_pipe");
    const auto s = d.string();
    REQUIRE(cli("mesh synth --count 1 --seed 3 --out " + s + "/shapes").code == 0);
    const auto shape = s + "/shapes/synth_0000.off";
    REQUIRE(fs::exists(shape));
    REQUIRE(cli("sample " + shape + " --n 2000 --seed 1 --out " + s + "/occ").code == 0);
    const auto fit = cli("fit " + s + "/occ/synth_0000.occ --epochs 3 --hidden 16 --blocks 1 --seed 2 --out " + s + "/model");
    REQUIRE(fit.code == 0);
    CHECK(lines(fit.out)[0]["parameters"] == 4 * 16 + 2 * (16 * 16 + 16) + 17);
    const auto ev = cli("eval " + s + "/model/synth_0000.ckpt --samples " + s + "/occ/synth_0000.occ");
    REQUIRE(ev.code == 0);
    CHECK(lines(ev.out)[0]["accuracy"].get<double>() > 0.5);
    const auto ex = cli("extract " + s + "/model/synth_0000.ckpt --resolution 24 --threshold 0.3 --normalization " + s +
                        "/occ/synth_0000.norm.json --out " + s + "/mesh");
    // a 3-epoch model may not cross the threshold; either outcome must be a clean exit code
    CHECK((ex.code == 0 || ex.code == 3));
    REQUIRE(cli("mesh emitters " + shape + " --seed 5 --out " + s + "/em").code == 0);
    const auto r = cli("render stack " + s + "/em/synth_0000_emitters.csv --noise --seed 1 --sbr 3 --out " + s + "/stack");
    REQUIRE(r.code == 0);
    CHECK(fs::exists(d / "stack" / "synth_0000_emitters_stack_z2.pgm"));
    const auto c = cli("metrics chamfer " + shape + " " + shape + " --seed 1 --n 2000");
    REQUIRE(c.code == 0);
    CHECK(lines(c.out)[0]["chamfer_l1"] == 0.0);
    fs::remove_all(d);
}

TEST_CASE("dataset seg through the CLI: dry run, generation, split, verify") {
    const auto d = workdir("mitoforge_cli_ds");
    io::write_text(d / "seg.json", R"({"microscope": {"preset": "Epi2"}, "count": 2,
        "corpus": {"synthetic": 6, "seed": 1}, "split": {"fractions": [0.5, 0.25, 0.25]}})");
    const auto cfg = (d / "seg.json").string();
    const auto dry = cli("dataset seg --config " + cfg + " --seed 4 --out " + (d / "dry").string() + " --dry-run");
    REQUIRE(dry.code == 0);
    CHECK_FALSE(fs::exists(d / "dry"));
    const auto r = cli("dataset seg --config " + cfg + " --seed 4 --out " + (d / "out").string() + " --jobs 2");
    REQUIRE(r.code == 0);
    CHECK(lines(r.out).back()["items"] == 2);
    const auto v = cli("dataset verify " + (d / "out").string());
    CHECK(v.code == 0);
    CHECK(lines(v.out)[0]["valid"] == true);
    const auto m = json::parse(io::read_text(d / "out" / "manifest.json"));
    CHECK(m["split"].size() == 6);
    fs::remove(d / "out" / "images" / "seg_000001.pgm");
    CHECK(cli("dataset verify " + (d / "out").string()).code == 3);
    io::write_text(d / "bad.json", R"({"corpus": {"synthetic": 2}, "count": 1, "bogus": true})");
    CHECK(cli("dataset seg --config " + (d / "bad.json").string() + " --seed 1 --out " + (d / "b").string()).code == 2);
    fs::remove_all(d);
}
