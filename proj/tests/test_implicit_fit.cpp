#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gradcheck.hpp"
#include "mitoforge/error.hpp"
#include "mitoforge/implicit_fit.hpp"
#include "mitoforge/mesh_query.hpp"

using namespace mitoforge;
namespace fs = std::filesystem;

namespace {

OccupancySampleSet constant_set(std::size_t n, std::uint8_t label) {
    OccupancySampleSet s;
    for (std::size_t i = 0; i < n; ++i) {
        const float t = float(i) / float(n) - 0.5f;
        s.points.push_back({t, -t * 0.5f, t * 0.25f});
        s.labels.push_back(label);
    }
    return s;
}

}  // namespace

TEST_CASE("parameter count of the default architecture") {
    const MlpArchitecture a;
    CHECK(a.parameter_count() == 4 * 64 + 5 * 2 * (64 * 64 + 64) + 64 + 1);
    CHECK(a.parameter_count() == 41921);
    CHECK(MlpOccupancy(a).parameters().size() == 41921);
    CHECK(MlpArchitecture{8, 0}.parameter_count() == 4 * 8 + 8 + 1);
}

TEST_CASE("fresh model predicts 0.5 and has BCE ln 2") {
    const auto m = MlpOccupancy::initialized({}, 3);
    CHECK(m.forward({0.1, 0.2, -0.3}) == 0.5);
    const auto set = sample_occupancy(make_icosphere(0.3, 2), 200, 1);
    CHECK(loss(m, whole(set)) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("initialization is seeded") {
    const auto a = MlpOccupancy::initialized({}, 1), b = MlpOccupancy::initialized({}, 1),
               c = MlpOccupancy::initialized({}, 2);
    CHECK(a == b);
    CHECK_FALSE(a == c);
}

TEST_CASE("forward_batch matches forward") {
    auto m = MlpOccupancy::initialized({16, 2, Activation::Relu}, 4);
    std::mt19937_64 g(4);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    for (auto& p : m.parameters()) p += u(g);
    std::vector<double> xyz, out(37);
    for (std::size_t i = 0; i < 37; ++i) xyz.insert(xyz.end(), {u(g) * 5, u(g) * 5, u(g) * 5});
    m.forward_batch(xyz, out);
    for (std::size_t i = 0; i < 37; ++i)
        CHECK(out[i] == doctest::Approx(m.forward({xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]})).epsilon(1e-12));
}

TEST_CASE("softplus gradient matches central differences") {
    const MlpArchitecture arch{64, 5, Activation::Softplus};
    for (std::uint64_t seed : {0u, 1u}) {
        const auto r = oracle::gradient_check(arch, seed, 16, 40);
        CHECK(r.max_rel <= 1e-5);
    }
}

TEST_CASE("relu gradient matches central differences on a small network") {
    // Tiny gradients get an absolute floor: their differences are roundoff-dominated.
    const MlpArchitecture arch{8, 1, Activation::Relu};
    const auto r = oracle::gradient_check(arch, 5, 8, 60, 1e-5, 1e-6);
    CHECK(r.max_rel <= 1e-5);
}

TEST_CASE("clipped samples contribute no gradient") {
    auto m = MlpOccupancy(MlpArchitecture{4, 0});
    // bias of the output layer drives every logit to +40
    m.parameters()[m.parameters().size() - 1] = 40.0;
    const auto set = constant_set(10, 1);
    const auto g = gradient(m, whole(set));
    for (double x : g.gradient) CHECK(x == 0.0);
    CHECK(g.loss == doctest::Approx(-std::log1p(-1e-7)).epsilon(1e-6));
    const auto wrong = constant_set(10, 0);
    CHECK(loss(m, whole(wrong)) == doctest::Approx(-std::log(1e-7)).epsilon(1e-6));
}

TEST_CASE("fit drives an all-inside set to one") {
    const auto set = constant_set(256, 1);
    FitConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 64;
    cfg.learning_rate = 1e-2;
    cfg.architecture = {16, 1};
    cfg.seed = 9;
    const auto r = fit(set, cfg);
    CHECK(r.epoch_loss.size() == 30);
    CHECK(r.epoch_loss.back() < 0.05);
    CHECK(r.model.forward({0, 0, 0}) > 0.95);
}

TEST_CASE("fit is deterministic and reduces the loss") {
    const auto set = sample_occupancy(make_icosphere(0.35, 3), 2000, 2);
    FitConfig cfg;
    cfg.epochs = 5;
    cfg.architecture = {32, 2};
    cfg.seed = 17;
    const auto a = fit(set, cfg), b = fit(set, cfg);
    CHECK(a.model == b.model);
    CHECK(a.epoch_loss == b.epoch_loss);
    CHECK(a.epoch_loss.back() < a.epoch_loss.front());
    cfg.seed = 18;
    CHECK_FALSE(fit(set, cfg).model == a.model);
}

TEST_CASE("fit config validation") {
    const auto set = constant_set(8, 1);
    FitConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(fit(set, cfg), ConfigError);
    cfg = {};
    cfg.learning_rate = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.beta1 = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(fit(OccupancySampleSet{}, FitConfig{}), InputError);
    CHECK_THROWS_AS(parse_activation("tanh"), ConfigError);
}

TEST_CASE("checkpoint round trip and corruption") {
    auto m = MlpOccupancy::initialized({12, 2, Activation::Softplus}, 6);
    const auto bytes = encode_checkpoint(m);
    CHECK(decode_checkpoint(bytes) == m);
    auto bad = bytes;
    bad[bad.size() / 2] ^= 1;
    CHECK_THROWS_AS(decode_checkpoint(bad), InputError);
    auto cut = bytes;
    cut.resize(20);
    CHECK_THROWS_AS(decode_checkpoint(cut), InputError);
    const auto dir = fs::temp_directory_path() / "mitoforge_ckpt_test";
    fs::create_directories(dir);
    save_checkpoint(m, dir / "m.ckpt");
    CHECK(load_checkpoint(dir / "m.ckpt") == m);
    fs::remove_all(dir);
}

TEST_CASE("extracted level sets are nested in the threshold") {
    const auto set = sample_occupancy(make_icosphere(0.35, 3), 4000, 8);
    FitConfig cfg;
    cfg.epochs = 40;
    cfg.learning_rate = 1e-2;
    cfg.architecture = {32, 2};
    cfg.seed = 1;
    const auto model = fit(set, cfg).model;
    const auto grid = evaluate_grid(model, 24);
    CHECK(grid.foreground_fraction(0.3) >= grid.foreground_fraction(0.5));
    CHECK(grid.foreground_fraction(0.5) >= grid.foreground_fraction(0.7));
    const auto lo = extract_mesh(model, 32, 0.35), hi = extract_mesh(model, 32, 0.65);
    CHECK(is_watertight(lo));
    CHECK(is_watertight(hi));
    CHECK(mesh_volume(lo) >= mesh_volume(hi));
    // every vertex of the tighter surface lies inside the looser one
    const MeshQuery q(lo);
    std::size_t inside = 0;
    for (const auto& v : hi.vertices) inside += q.contains(v);
    CHECK(double(inside) / double(hi.vertices.size()) > 0.99);
    CHECK_THROWS_AS(extract_mesh(MlpOccupancy::initialized({}, 0), 8, 0.9), InputError);
}
