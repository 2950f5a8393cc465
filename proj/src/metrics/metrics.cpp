#include "mitoforge/metrics.hpp"

#include <random>

#include "mitoforge/error.hpp"
#include "mitoforge/kdtree.hpp"
#include "mitoforge/mesh_query.hpp"
#include "mitoforge/rng.hpp"

namespace mitoforge {

double volumetric_iou(const TriangleMesh& a, const TriangleMesh& b, std::size_t n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw ConfigError("metrics", "IoU sample count must be >= 1");
    if (!is_watertight(a) || !is_watertight(b)) throw InputError("metrics", "volumetric IoU needs watertight meshes");
    const MeshQuery qa(a), qb(b);
    Aabb box = qa.bounds();
    box.expand(qb.bounds().lo);
    box.expand(qb.bounds().hi);
    const Vec3 c = box.center(), half = box.extent() * (0.5 * 1.05);
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::size_t inter = 0, uni = 0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        const Vec3 p{c.x + half.x * u(rng), c.y + half.y * u(rng), c.z + half.z * u(rng)};
        const bool ia = qa.contains(p), ib = qb.contains(p);
        inter += ia && ib;
        uni += ia || ib;
    }
    if (uni == 0) throw InputError("metrics", "no IoU sample fell inside either mesh (empty union)");
    return double(inter) / double(uni);
}

namespace {

double mean_nn(std::span<const Vec3> from, const KdTree& to) {
    double s = 0.0;
    for (const auto& p : from) s += to.nearest(p).distance;
    return s / double(from.size());
}

}  // namespace

double chamfer_l1(std::span<const Vec3> a, std::span<const Vec3> b) {
    if (a.empty() || b.empty()) throw InputError("metrics", "Chamfer distance needs non-empty point sets");
    const KdTree ta(a), tb(b);
    return 0.5 * (mean_nn(a, tb) + mean_nn(b, ta));
}

double chamfer_l1(const TriangleMesh& a, const TriangleMesh& b, std::size_t n_points, std::uint64_t seed) {
    if (n_points < 1) throw ConfigError("metrics", "Chamfer point count must be >= 1");
    if (!(surface_area(a) > 0) || !(surface_area(b) > 0)) throw InputError("metrics", "zero-area mesh");
    const auto pa = sample_surface_points(a, n_points, seed);
    const auto pb = sample_surface_points(b, n_points, seed);
    return chamfer_l1(pa, pb);
}

MeshComparison compare_meshes(const TriangleMesh& pred, const TriangleMesh& gt, std::size_t n_samples,
                              std::size_t n_points, std::uint64_t seed) {
    MeshComparison c;
    c.n_samples = n_samples;
    c.n_points = n_points;
    c.seed = seed;
    c.iou = volumetric_iou(pred, gt, n_samples, seed);
    c.chamfer_l1 = chamfer_l1(pred, gt, n_points, seed);
    return c;
}

MaskScores mask_scores(const Image2D& pred, const Image2D& gt, bool foreground_only) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw InputError("metrics", "mask shapes differ: " + std::to_string(pred.width) + "x" +
                                        std::to_string(pred.height) + " vs " + std::to_string(gt.width) + "x" +
                                        std::to_string(gt.height));
    MaskScores s;
    std::size_t tn = 0;
    for (std::size_t k = 0; k < pred.data.size(); ++k) {
        const bool p = pred.data[k] != 0.0, g = gt.data[k] != 0.0;
        s.tp += p && g;
        s.fp += p && !g;
        s.fn += !p && g;
        tn += !p && !g;
    }
    if (!foreground_only) {
        // background class: its true positives are tn, its fp are the foreground fn and vice versa
        const std::size_t fp = s.fp, fn = s.fn;
        s.tp += tn;
        s.fp = fp + fn;
        s.fn = fn + fp;
    }
    const double denom = double(2 * s.tp + s.fp + s.fn);
    if (denom == 0.0) {
        s.dice = s.iou = s.f1 = 1.0;
        return s;
    }
    s.dice = 2.0 * double(s.tp) / denom;
    s.iou = double(s.tp) / double(s.tp + s.fp + s.fn);
    const double precision = s.tp + s.fp ? double(s.tp) / double(s.tp + s.fp) : 0.0;
    const double recall = s.tp + s.fn ? double(s.tp) / double(s.tp + s.fn) : 0.0;
    s.f1 = precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    return s;
}

}  // namespace mitoforge
