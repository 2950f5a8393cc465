#include <doctest.h>

#include <cmath>
#include <random>

#include "mitoforge/error.hpp"
#include "mitoforge/kdtree.hpp"
#include "mitoforge/metrics.hpp"
#include "oracles.hpp"

using namespace mitoforge;

TEST_CASE("kd-tree nearest neighbour equals brute force") {
    std::mt19937_64 g(2);
    std::uniform_real_distribution<double> u(-1, 1);
    for (std::size_t n : {1u, 7u, 100u, 2000u}) {
        std::vector<Vec3> pts(n);
        for (auto& p : pts) p = {u(g), u(g), u(g)};
        const KdTree tree(pts);
        for (int t = 0; t < 200; ++t) {
            const Vec3 q{u(g) * 1.5, u(g) * 1.5, u(g) * 1.5};
            double best = INFINITY;
            for (const auto& p : pts) best = std::min(best, norm(p - q));
            const auto hit = tree.nearest(q);
            CHECK(hit.distance == doctest::Approx(best));
            CHECK(norm(pts[hit.index] - q) == doctest::Approx(best));
        }
    }
    const std::vector<Vec3> none;
    CHECK_THROWS_AS(KdTree(none).nearest({0, 0, 0}), InputError);
}

TEST_CASE("kd-tree handles duplicate points") {
    std::vector<Vec3> pts(50, Vec3{1, 1, 1});
    pts.push_back({0, 0, 0});
    const KdTree tree(pts);
    CHECK(tree.nearest({0.1, 0, 0}).index == 50);
    CHECK(tree.nearest({2, 2, 2}).distance == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("volumetric IoU calibration") {
    const auto a = make_box({0, 0, 0}, {1, 1, 1});
    CHECK(volumetric_iou(a, a, 20000, 1) >= 0.999);
    const auto b = make_box({0.5, 0, 0}, {1.5, 1, 1});
    CHECK(volumetric_iou(a, b, 100000, 2) == doctest::Approx(1.0 / 3.0).epsilon(0.06));
    const auto far = make_box({5, 5, 5}, {6, 6, 6});
    CHECK(volumetric_iou(a, far, 20000, 3) == 0.0);
    // nested spheres: IoU = (r1/r2)^3
    const auto s1 = make_icosphere(0.5, 4), s2 = make_icosphere(1.0, 4);
    CHECK(volumetric_iou(s1, s2, 100000, 4) == doctest::Approx(mesh_volume(s1) / mesh_volume(s2)).epsilon(0.05));
    CHECK(volumetric_iou(a, b, 5000, 9) == volumetric_iou(a, b, 5000, 9));
    auto open = a;
    open.triangles.pop_back();
    CHECK_THROWS_AS(volumetric_iou(open, a, 100, 0), InputError);
}

TEST_CASE("Chamfer-L1 of parallel squares and self-distance") {
    // two unit squares 0.3 apart: every nearest neighbour is straight across
    std::vector<Vec3> a, b;
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) {
            a.push_back({i / 19.0, j / 19.0, 0});
            b.push_back({i / 19.0, j / 19.0, 0.3});
        }
    CHECK(chamfer_l1(a, b) == doctest::Approx(0.3));
    CHECK(chamfer_l1(a, a) == 0.0);
    const auto s = make_icosphere(1.0, 3);
    CHECK(chamfer_l1(s, s, 5000, 7) == 0.0);
    const auto bigger = make_icosphere(1.2, 3);
    CHECK(chamfer_l1(s, bigger, 5000, 7) == doctest::Approx(0.2).epsilon(0.05));
    const std::vector<Vec3> one{{0, 0, 0}}, two{{3, 4, 0}, {0, 0, 0}};
    CHECK(chamfer_l1(one, two) == doctest::Approx(0.5 * (0.0 + 2.5)));
}

TEST_CASE("compare_meshes reports its settings") {
    const auto s = make_icosphere(1.0, 3);
    const auto c = compare_meshes(s, s, 4000, 3000, 5);
    CHECK(c.iou >= 0.999);
    CHECK(c.chamfer_l1 == 0.0);
    CHECK(c.n_samples == 4000);
    CHECK(c.n_points == 3000);
    CHECK(c.seed == 5u);
}

TEST_CASE("mask scores match the pixel-loop oracle") {
    for (std::uint64_t s = 0; s < 30; ++s) {
        const auto p = oracle::random_mask(s, 31, 17, 0.3), g = oracle::random_mask(s + 1000, 31, 17, 0.4);
        const auto c = oracle::confusion(p, g);
        const auto m = mask_scores(p, g);
        CHECK(m.tp == c.tp);
        CHECK(m.fp == c.fp);
        CHECK(m.fn == c.fn);
        CHECK(m.dice == doctest::Approx(2.0 * c.tp / double(2 * c.tp + c.fp + c.fn)));
        CHECK(m.iou == doctest::Approx(double(c.tp) / double(c.tp + c.fp + c.fn)));
        CHECK(m.f1 == doctest::Approx(m.dice).epsilon(1e-12));
        CHECK(m.dice == doctest::Approx(2 * m.iou / (1 + m.iou)).epsilon(1e-12));
        const auto all = mask_scores(p, g, false);
        CHECK(all.tp == c.tp + c.tn);
        CHECK(all.fp + all.fn == 2 * (c.fp + c.fn));
    }
    const Image2D empty(4, 4);
    CHECK(mask_scores(empty, empty).dice == 1.0);
    CHECK_THROWS_AS(mask_scores(empty, Image2D(4, 5)), InputError);
}
