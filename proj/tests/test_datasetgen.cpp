#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "dir_snapshot.hpp"
#include "mitoforge/datasetgen.hpp"
#include "mitoforge/error.hpp"
#include "mitoforge/io_util.hpp"

using namespace mitoforge;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    return d;
}

}  // namespace

TEST_CASE("synthetic mitochondria are watertight, mitochondrion-sized and seeded") {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto m = make_synthetic_mitochondrion(s);
        CHECK(is_watertight(m));
        const auto e = m.bounds().extent();
        const double longest = std::max({e.x, e.y, e.z}), shortest = std::min({e.x, e.y, e.z});
        CHECK(longest > 400);
        CHECK(longest < 2200);
        CHECK(shortest > 180);
        CHECK(norm(m.bounds().center()) < 1e-6);
        CHECK(mesh_volume(m) > 0);
    }
    CHECK(make_synthetic_mitochondrion(3).vertices == make_synthetic_mitochondrion(3).vertices);
    const auto c = synthetic_corpus(4, 1);
    CHECK(c.size() == 4);
    CHECK(std::set<std::string>(c.ids.begin(), c.ids.end()).size() == 4);
}

TEST_CASE("split sizes are largest-remainder and within one") {
    CHECK(split_sizes(10, {0.7, 0.1, 0.2}) == std::array<std::size_t, 3>{7, 1, 2});
    for (std::size_t n = 3; n < 60; ++n) {
        const std::array<double, 3> f{0.6, 0.25, 0.15};
        const auto s = split_sizes(n, f);
        CHECK(s[0] + s[1] + s[2] == n);
        for (int k = 0; k < 3; ++k) CHECK(std::abs(double(s[k]) - f[k] * double(n)) <= 1.0);
    }
    SplitSpec bad;
    bad.fractions = {0.5, 0.5, 0.5};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("split partitions shapes disjointly and deterministically") {
    GenerationManifest m;
    m.kind = "stack2shape";
    for (int i = 0; i < 10; ++i) {
        m.shape_ids.push_back("s" + std::to_string(i));
        ManifestItem it;
        it.index = std::size_t(i);
        it.shape_ids = {m.shape_ids.back()};
        m.items.push_back(it);
    }
    ManifestItem both;
    both.index = 10;
    both.shape_ids = {"s0", "s1", "s2", "s3", "s4", "s5", "s6", "s7"};
    m.items.push_back(both);
    const auto a = split(m, SplitSpec{{0.7, 0.1, 0.2}, 4});
    CHECK(a.shape_split.size() == 10);
    std::map<std::string, int> counts;
    for (const auto& [id, s] : a.shape_split) ++counts[s];
    CHECK(counts["train"] == 7);
    CHECK(counts["val"] == 1);
    CHECK(counts["test"] == 2);
    for (std::size_t i = 0; i < 10; ++i) CHECK(a.items[i].split == a.shape_split.at(a.items[i].shape_ids[0]));
    CHECK(a.items[10].split == "mixed");
    CHECK(split(m, SplitSpec{{0.7, 0.1, 0.2}, 4}).shape_split == a.shape_split);
    GenerationManifest tiny;
    tiny.shape_ids = {"a", "b"};
    CHECK_THROWS_AS(split(tiny, SplitSpec{}), ConfigError);
}

TEST_CASE("segmentation dataset: layout, determinism across jobs, verification") {
    const auto corpus = synthetic_corpus(4, 7);
    SegmentationConfig cfg;
    cfg.count = 3;
    const auto d1 = fresh_dir("mitoforge_seg_a"), d2 = fresh_dir("mitoforge_seg_b");
    const auto m = gen_segmentation_dataset(corpus, cfg, 99, d1, 1);
    gen_segmentation_dataset(corpus, cfg, 99, d2, 3);
    CHECK(oracle::snapshot(d1) == oracle::snapshot(d2));
    REQUIRE(m.items.size() == 3);
    CHECK(m.items[0].shape_ids.size() == 8);
    const auto img = read_pgm(d1 / "images" / "seg_000000.pgm");
    CHECK(img.width == 256);
    CHECK(img.height == 256);
    const auto mask = read_pgm(d1 / "masks" / "seg_000000.pgm");
    for (double v : mask.data) CHECK((v == 0 || v == 255));
    CHECK(mask.sum() > 0);
    CHECK(verify_manifest(d1).empty());
    CHECK(read_manifest(d1).items.size() == 3);

    {
        std::ofstream extra(d1 / "images" / "stray.pgm");
        extra << "x";
    }
    CHECK(verify_manifest(d1).size() == 1);
    fs::remove(d1 / "images" / "stray.pgm");
    {
        std::fstream f(d1 / "masks" / "seg_000001.pgm", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(40);
        f.put('\x07');
    }
    CHECK(verify_manifest(d1).size() == 1);
    fs::remove(d1 / "images" / "seg_000002.pgm");
    CHECK(verify_manifest(d1).size() == 2);

    const auto d3 = fresh_dir("mitoforge_seg_c");
    gen_segmentation_dataset(corpus, cfg, 100, d3, 1);
    CHECK(oracle::snapshot(d3) != oracle::snapshot(d2));
    for (const auto& d : {d1, d2, d3}) fs::remove_all(d);
}

TEST_CASE("stack2shape dataset file counts") {
    const auto corpus = synthetic_corpus(2, 3);
    Stack2ShapeConfig cfg;
    cfg.perspectives = {{0, 0, 0}, {1.5707963267948966, 0, 0}};
    cfg.occupancy_samples = 500;
    cfg.fov_pixels = 32;
    const auto d = fresh_dir("mitoforge_s2s");
    const auto m = gen_stack2shape_dataset(corpus, cfg, 5, d, 2);
    CHECK(m.items.size() == 4);
    const auto snap = oracle::snapshot(d);
    // per shape: .occ + .norm.json; per perspective: 3 slices + stack json
    CHECK(snap.size() == 2 * (2 + 2 * 4) + 1);
    CHECK(snap.count("stacks/" + corpus.ids[1] + "_p1_z2.pgm") == 1);
    CHECK(read_samples(d / "occupancy" / (corpus.ids[0] + ".occ")).size() == 500);
    CHECK(verify_manifest(d).empty());
    fs::remove_all(d);
}

TEST_CASE("m2m: pixel counts per microscope and identity transform") {
    const auto corpus = synthetic_corpus(1, 8);
    MicroscopeTransformConfig cfg;
    cfg.perspectives = {{0, 0, 0}};
    cfg.noisy = true;
    const auto d = fresh_dir("mitoforge_m2m");
    gen_m2m_dataset(corpus, cfg, 3, d, 1);
    const auto stem = corpus.ids[0] + "_p0";
    CHECK(read_pgm(d / "stacks" / "from" / (stem + "_z0.pgm")).width == 64);
    CHECK(read_pgm(d / "stacks" / "to" / (stem + "_z0.pgm")).width == 100);

    cfg.to = cfg.from;
    const auto same = fresh_dir("mitoforge_m2m_same");
    gen_m2m_dataset(corpus, cfg, 3, same, 1);
    for (int k = 0; k < 3; ++k) {
        const auto name = stem + "_z" + std::to_string(k) + ".pgm";
        CHECK(io::read_text(same / "stacks" / "from" / name) == io::read_text(same / "stacks" / "to" / name));
    }
    fs::remove_all(d);
    fs::remove_all(same);
}

TEST_CASE("microscope_transform on a fitted model reuses the mesh path") {
    const auto norm = normalize_unit_cube(make_synthetic_mitochondrion(2));
    MicroscopeTransformConfig cfg;
    cfg.extraction_resolution = 16;
    const auto pair = microscope_transform(norm.mesh, norm.record, cfg, {0, 0, 0}, 4);
    CHECK(pair.from.slices.size() == 3);
    CHECK(pair.to.width == 100);
    CHECK_FALSE(pair.emitters.empty());
    CHECK(microscope_transform(norm.mesh, norm.record, cfg, {0, 0, 0}, 4).emitters == pair.emitters);
}

TEST_CASE("dataset configs parse, round trip and reject unknown keys") {
    const auto seg = segmentation_config_from_json({{"microscope", {{"preset", "Epi1"}}}, {"count", 5}, {"target_sbr", 3}});
    CHECK(seg.microscope.name == "Epi1");
    CHECK(seg.count == 5);
    CHECK(seg.target_sbr == 3.0);
    CHECK(segmentation_config_from_json(to_json(seg)).count == 5);
    CHECK_FALSE(segmentation_config_from_json({{"target_sbr", "sample"}}).target_sbr.has_value());
    CHECK_THROWS_AS(segmentation_config_from_json({{"colour", 1}}), ConfigError);
    CHECK_THROWS_AS(segmentation_config_from_json({{"count", 0}}), ConfigError);
    const auto s2s = stack2shape_config_from_json({{"perspectives", {{0, 0, 0}}}, {"dz_nm", 100}});
    CHECK(s2s.perspectives.size() == 1);
    CHECK(s2s.dz_nm == 100.0);
    const auto m2m = transform_config_from_json({{"from", {{"preset", "Epi2"}}}, {"noisy", true}});
    CHECK(m2m.from.name == "Epi2");
    CHECK(m2m.to.name == "Con1");
    CHECK(transform_config_from_json(to_json(m2m)).noisy);
    CHECK_THROWS_AS(corpus_from_json({{"nothing", 1}}), ConfigError);
    CHECK_THROWS_AS(corpus_from_json({{"dir", "/nonexistent/dir"}}), InputError);
}
