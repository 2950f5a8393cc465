#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mitoforge/error.hpp"
#include "mitoforge/io_util.hpp"
#include "mitoforge/mesh.hpp"
#include "mitoforge/occupancy.hpp"

using namespace mitoforge;
namespace fs = std::filesystem;

TEST_CASE("cube fixture inside fraction is binomial around its volume") {
    const auto cube = make_box({-0.25, -0.25, -0.25}, {0.25, 0.25, 0.25});
    double sum = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto set = sample_occupancy(cube, 10000, s);
        CHECK(set.size() == 10000);
        const double sigma = std::sqrt(0.125 * 0.875 / 10000.0);
        CHECK(std::abs(set.inside_fraction() - 0.125) <= 3 * sigma);
        sum += set.inside_fraction();
    }
    CHECK(std::abs(sum / 10 - 0.125) < 3 * std::sqrt(0.125 * 0.875 / 100000.0));
}

TEST_CASE("labels match a direct box test and points stay in the unit cube") {
    const auto cube = make_box({-0.3, -0.1, -0.2}, {0.2, 0.4, 0.1});
    const auto set = sample_occupancy(cube, 5000, 12);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& p = set.points[i];
        for (float c : p) REQUIRE((c >= -0.5f && c <= 0.5f));
        const bool in = p[0] >= -0.3f && p[0] <= 0.2f && p[1] >= -0.1f && p[1] <= 0.4f && p[2] >= -0.2f && p[2] <= 0.1f;
        CHECK(set.labels[i] == (in ? 1 : 0));
    }
}

TEST_CASE("sampling is deterministic and rejects unnormalized meshes") {
    const auto s = make_icosphere(0.4, 3);
    CHECK(sample_occupancy(s, 1000, 3) == sample_occupancy(s, 1000, 3));
    CHECK_FALSE(sample_occupancy(s, 1000, 3) == sample_occupancy(s, 1000, 4));
    CHECK_THROWS_AS(sample_occupancy(make_icosphere(2.0, 2), 100, 0), InputError);
    auto open = s;
    open.triangles.pop_back();
    CHECK_THROWS_AS(sample_occupancy(open, 100, 0), InputError);
}

TEST_CASE("sample file round trip, corruption and truncation") {
    const auto set = sample_occupancy(make_icosphere(0.45, 3), 777, 21, "sphere");
    const auto bytes = encode_samples(set);
    CHECK(decode_samples(bytes) == set);
    CHECK(bytes.size() == 8 + 4 + 8 + 8 + 4 + 6 + 777 * 13 + 4);

    auto bad = bytes;
    bad[100] ^= 0x40;
    CHECK_THROWS_AS(decode_samples(bad), InputError);
    auto cut = bytes;
    cut.resize(cut.size() - 9);
    CHECK_THROWS_AS(decode_samples(cut), InputError);
    auto magic = bytes;
    magic[0] = 'X';
    CHECK_THROWS_AS(decode_samples(magic), InputError);

    const auto dir = fs::temp_directory_path() / "mitoforge_occ_test";
    fs::create_directories(dir);
    write_samples(set, dir / "s.occ");
    CHECK(read_samples(dir / "s.occ") == set);
    write_samples_csv(set, dir / "s.csv");
    CHECK(io::read_text(dir / "s.csv").rfind("x,y,z,label\n", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("encoding is stable across runs") {
    OccupancySampleSet set;
    set.points = {{0.f, 0.f, 0.f}, {0.25f, -0.5f, 0.125f}};
    set.labels = {1, 0};
    set.seed = 42;
    set.source = "fixture";
    const auto bytes = encode_samples(set);
    CHECK(io::crc32_hex(bytes) == io::crc32_hex(encode_samples(set)));
    // header: magic, version 1, count 2, seed 42
    CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "MFOCCSET");
    CHECK(bytes[8] == 1);
    CHECK(bytes[12] == 2);
    CHECK(bytes[20] == 42);
}

TEST_CASE("occupancy grid of a box") {
    const auto g = occupancy_grid(make_box({-0.25, -0.25, -0.25}, {0.25, 0.25, 0.25}), 16);
    CHECK(g.resolution == 16);
    CHECK(g.values.size() == 16 * 16 * 16);
    CHECK(g.foreground_fraction() == doctest::Approx(0.125));
    const auto sg = g.as_scalar_grid();
    CHECK(sg.origin.x == doctest::Approx(-0.5 + 0.5 / 16));
    CHECK(sg.spacing == doctest::Approx(1.0 / 16));
}
