#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mitoforge/error.hpp"
#include "mitoforge/io_util.hpp"
#include "mitoforge/microscope.hpp"
#include "oracles.hpp"

using namespace mitoforge;
namespace fs = std::filesystem;

TEST_CASE("preset table and derived resolution") {
    REQUIRE(presets().size() == 3);
    const auto& c = preset("Con1");
    CHECK(c.kind == MicroscopeKind::Confocal);
    CHECK(c.emission_wavelength_nm == 600);
    CHECK(c.numerical_aperture == 1.4);
    CHECK(c.magnification == 63);
    CHECK(c.dof_nm == 250);
    CHECK(lateral_resolution(c) == doctest::Approx(600.0 / (2 * 1.4) / std::sqrt(2.0)));
    CHECK(lateral_resolution(preset("Epi1")) == doctest::Approx(688.0 / 2.84));
    CHECK(lateral_resolution(preset("Epi2")) == doctest::Approx(608.0 / 2.8));
    CHECK(preset("Epi1").pixel_size_nm == 109);
    CHECK(preset("Epi2").pixel_size_nm == 80);
    CHECK(psf_sigma(preset("Epi1")).xy == doctest::Approx(lateral_resolution(preset("Epi1")) / 2.3548));
    for (const auto& p : presets()) {
        CHECK(p.background == 100);
        CHECK(p.sbr_range == std::array<double, 2>{2, 4});
        CHECK_NOTHROW(p.validate());
    }
    CHECK_THROWS_AS(preset("Epi9"), ConfigError);
}

TEST_CASE("config JSON round trip, overrides and rejection") {
    for (const auto& p : presets()) CHECK(microscope_from_json(to_json(p)) == p);
    const auto o = microscope_from_json({{"preset", "Epi1"}, {"numerical_aperture", 1.2}});
    CHECK(o.numerical_aperture == 1.2);
    CHECK(o.pixel_size_nm == 109);
    CHECK_THROWS_AS(microscope_from_json({{"preset", "Epi1"}, {"pinhole", 1}}), ConfigError);
    CHECK_THROWS_AS(microscope_from_json({{"preset", "Epi1"}, {"numerical_aperture", -1}}), ConfigError);
    CHECK_THROWS_AS(microscope_from_json({{"preset", "Epi1"}, {"sbr_range", {4, 2}}}), ConfigError);
}

TEST_CASE("axial weight is a unit-peak Gaussian") {
    const auto& e = preset("Epi1");
    CHECK(axial_weight(e, 0) == 1.0);
    CHECK(axial_weight(e, 100) == doctest::Approx(axial_weight(e, -100)));
    const double s = psf_sigma(e).z;
    CHECK(axial_weight(e, s) == doctest::Approx(std::exp(-0.5)));
}

TEST_CASE("single emitter: symmetric spot, unit energy, erf oracle") {
    const auto& cfg = preset("Epi1");
    const double p = cfg.pixel_size_nm;
    const FieldOfView fov{33, 33, 0, 0};
    const std::vector<Vec3> e{{0, 0, 0}};
    const auto img = render_slice(e, cfg, fov, 0.0, 1000.0);
    CHECK(img.sum() == doctest::Approx(1000.0).epsilon(1e-6));
    for (std::size_t j = 0; j < 33; ++j)
        for (std::size_t i = 0; i < 33; ++i) {
            CHECK(img.at(i, j) == doctest::Approx(img.at(32 - i, j)).epsilon(1e-9));
            CHECK(img.at(i, j) == doctest::Approx(img.at(j, i)).epsilon(1e-9));
        }
    const double s = psf_sigma(cfg).xy;
    const double w = oracle::pixel_integral_1d(-p / 2, p / 2, 0, s);
    CHECK(img.at(16, 16) == doctest::Approx(1000.0 * w * w).epsilon(1e-9));
    CHECK(img.max() == img.at(16, 16));
}

TEST_CASE("rendering is linear and translation-equivariant") {
    const auto& cfg = preset("Epi2");
    const double p = cfg.pixel_size_nm;
    const FieldOfView fov{40, 30, 100, -50};
    const std::vector<Vec3> a{{110, -40, 30}}, b{{-300, 200, -120}}, ab{{110, -40, 30}, {-300, 200, -120}};
    const auto ia = render_slice(a, cfg, fov, 0), ib = render_slice(b, cfg, fov, 0), iab = render_slice(ab, cfg, fov, 0);
    for (std::size_t k = 0; k < iab.data.size(); ++k) CHECK(iab.data[k] == doctest::Approx(ia.data[k] + ib.data[k]));
    const std::vector<Vec3> shifted{{110 + 3 * p, -40 - 2 * p, 30}};
    const auto is = render_slice(shifted, cfg, fov, 0);
    for (std::size_t j = 5; j < 25; ++j)
        for (std::size_t i = 5; i < 35; ++i) CHECK(is.at(i, j - 2) == doctest::Approx(ia.at(i - 3, j)).epsilon(1e-9));
    const auto twice = render_slice(a, cfg, fov, 0, 2000.0);
    CHECK(twice.sum() == doctest::Approx(2 * ia.sum()));
}

TEST_CASE("defocus dims the spot by the axial weight") {
    const auto& cfg = preset("Con1");
    const FieldOfView fov{31, 31, 0, 0};
    const std::vector<Vec3> e{{0, 0, 120}};
    const auto img = render_slice(e, cfg, fov, 0.0);
    CHECK(img.sum() == doctest::Approx(1000.0 * axial_weight(cfg, 120)).epsilon(1e-6));
    const std::vector<Vec3> far{{0, 0, 5000}};
    CHECK(render_slice(far, cfg, fov, 0.0).sum() == 0.0);
}

TEST_CASE("z-stack offsets and slice peaks") {
    const auto& cfg = preset("Epi1");
    const FieldOfView fov{21, 21, 0, 0};
    const std::vector<Vec3> e{{0, 0, 250}};
    const auto st = render_zstack(e, cfg, fov);
    REQUIRE(st.z_offsets == std::vector<double>{-250, 0, 250});
    CHECK(st.slices.size() == 3);
    CHECK(st.pixel_size_nm == 109);
    CHECK(st.slices[2].max() > st.slices[1].max());
    CHECK(st.slices[1].max() > st.slices[0].max());
    const auto custom = render_zstack(e, cfg, fov, 100.0, {-2, 0, 3});
    CHECK(custom.z_offsets == std::vector<double>{-200, 0, 300});
    CHECK_THROWS_AS(render_zstack(e, cfg, fov, -5.0), ConfigError);
}

TEST_CASE("noise: background mean and variance, target SBR scaling, seeding") {
    const auto& cfg = preset("Epi1");
    const Image2D flat(64, 64, 0.0);
    auto n = add_noise(flat, cfg, 1.0, 3);
    double mean = 0, var = 0;
    for (double v : n.counts.data) mean += v;
    mean /= double(n.counts.data.size());
    for (double v : n.counts.data) var += (v - mean) * (v - mean);
    var /= double(n.counts.data.size() - 1);
    CHECK(std::abs(mean - 100) < 4 * std::sqrt(100.0 / 4096));
    CHECK(var == doctest::Approx(100).epsilon(0.1));
    for (double v : n.counts.data) CHECK(v == std::round(v));

    const std::vector<Vec3> e{{0, 0, 0}};
    const auto img = render_slice(e, cfg, FieldOfView{25, 25, 0, 0}, 0);
    const auto a = add_noise(img, cfg, 3.0, 5);
    CHECK(a.signal_scale * img.max() == doctest::Approx(200.0));
    CHECK(add_noise(img, cfg, 3.0, 5).counts == a.counts);
    CHECK_FALSE(add_noise(img, cfg, 3.0, 6).counts == a.counts);
    for (std::uint64_t s = 0; s < 50; ++s) {
        const double t = add_noise(img, cfg, std::nullopt, s).target_sbr;
        CHECK(t >= 2.0);
        CHECK(t <= 4.0);
    }
    CHECK_THROWS_AS(add_noise(flat, cfg, 3.0, 0), InputError);
    CHECK_THROWS_AS(add_noise(img, cfg, 0.5, 0), ConfigError);
}

TEST_CASE("stack noise shares one SBR across slices") {
    const auto& cfg = preset("Epi1");
    const std::vector<Vec3> e{{0, 0, 250}};
    const auto st = render_zstack(e, cfg, FieldOfView{21, 21, 0, 0});
    const auto noisy = add_noise(st, cfg, 3.0, 11);
    CHECK(noisy.noisy);
    CHECK(noisy.seed == 11u);
    CHECK(add_noise(st, cfg, 3.0, 11).slices == noisy.slices);
    // the brightest slice reaches the target on average, dimmer slices proportionally less
    CHECK(noisy.slices[2].max() > noisy.slices[0].max());
}

TEST_CASE("dof mask and ground-truth mask") {
    const auto& cfg = preset("Epi2");  // dof 500
    const std::vector<Vec3> e{{0, 0, 0}, {0, 0, 249}, {0, 0, -251}, {500, 0, 100}};
    const auto in = dof_mask(e, cfg, 0.0);
    CHECK(in.size() == 3);
    const FieldOfView fov{32, 32, 0, 0};
    const auto m = ground_truth_mask(e, cfg, fov, 0.0);
    const double r = lateral_resolution(cfg) / 2, p = cfg.pixel_size_nm;
    // brute-force oracle over pixel centres
    for (std::size_t j = 0; j < 32; ++j)
        for (std::size_t i = 0; i < 32; ++i) {
            const double x = -16 * p + (i + 0.5) * p, y = -16 * p + (j + 0.5) * p;
            bool want = false;
            for (const auto& q : in) want |= (x - q.x) * (x - q.x) + (y - q.y) * (y - q.y) <= r * r;
            CHECK(m.at(i, j) == (want ? 1.0 : 0.0));
        }
    const auto big = ground_truth_mask(e, cfg, fov, 0.0, 300.0);
    CHECK(big.sum() > m.sum());
}

TEST_CASE("measured FWHM recovers the PSF width") {
    for (const auto& cfg : presets()) {
        CAPTURE(cfg.name);
        const std::vector<Vec3> e{{0, 0, 0}};
        const auto img = render_slice(e, cfg, FieldOfView{41, 41, 0, 0}, 0);
        CHECK(measure_fwhm(img, cfg.pixel_size_nm) == doctest::Approx(lateral_resolution(cfg)).epsilon(0.02));
    }
    CHECK_THROWS_AS(measure_fwhm(Image2D(5, 5), 100), InputError);
}

TEST_CASE("image I/O round trips") {
    const auto dir = fs::temp_directory_path() / "mitoforge_img_test";
    fs::create_directories(dir);
    Image2D img(7, 5);
    for (std::size_t k = 0; k < img.data.size(); ++k) img.data[k] = double(k * 977 % 70000);
    write_pgm16(dir / "a.pgm", img);
    const auto back = read_pgm(dir / "a.pgm");
    REQUIRE(back.width == 7);
    for (std::size_t k = 0; k < img.data.size(); ++k) CHECK(back.data[k] == std::min(img.data[k], 65535.0));
    const auto mask = oracle::random_mask(1, 9, 4, 0.4);
    write_pgm8_mask(dir / "m.pgm", mask);
    const auto mb = read_pgm(dir / "m.pgm");
    for (std::size_t k = 0; k < mask.data.size(); ++k) CHECK(mb.data[k] == mask.data[k] * 255);
    Image2D f(6, 3);
    for (std::size_t k = 0; k < f.data.size(); ++k) f.data[k] = 0.25 * double(k);
    write_float_raw(dir / "f.f32", f, 80);
    CHECK(read_float_raw(dir / "f.f32") == f);

    const std::vector<Vec3> e{{0, 0, 0}};
    const auto st = render_zstack(e, preset("Epi1"), FieldOfView{8, 8, 0, 0});
    CHECK(write_stack(dir / "clean", "s", st).size() == 7);
    CHECK(write_stack(dir / "noisy", "s", add_noise(st, preset("Epi1"), 3.0, 1)).size() == 4);
    CHECK(fs::exists(dir / "noisy" / "s_z1.pgm"));
    CHECK_THROWS_AS(read_pgm(dir / "missing.pgm"), InputError);
    io::write_text(dir / "bad.pgm", "P2\n1 1\n255\n0\n");
    CHECK_THROWS_AS(read_pgm(dir / "bad.pgm"), InputError);
    fs::remove_all(dir);
}
