#include <algorithm>
#include <cmath>
#include <random>

#include "mitoforge/error.hpp"
#include "mitoforge/mesh.hpp"
#include "mitoforge/rng.hpp"

namespace mitoforge {

namespace {

// Cumulative triangle areas for area-proportional triangle choice.
std::vector<double> area_cdf(const TriangleMesh& mesh) {
    std::vector<double> cdf(mesh.triangles.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        const auto& a = mesh.vertices[tri[0]];
        acc += 0.5 * norm(cross(mesh.vertices[tri[1]] - a, mesh.vertices[tri[2]] - a));
        cdf[t] = acc;
    }
    return cdf;
}

std::vector<Vec3> draw(const TriangleMesh& mesh, const std::vector<double>& cdf, std::size_t n, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double total = cdf.back();
    std::vector<Vec3> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        const double r = unit(rng) * total;
        auto t = std::size_t(std::upper_bound(cdf.begin(), cdf.end(), r) - cdf.begin());
        t = std::min(t, cdf.size() - 1);
        const auto& tri = mesh.triangles[t];
        // Uniform barycentric via the square-root warp.
        const double r1 = std::sqrt(unit(rng)), r2 = unit(rng);
        const Vec3& a = mesh.vertices[tri[0]];
        const Vec3& b = mesh.vertices[tri[1]];
        const Vec3& c = mesh.vertices[tri[2]];
        out.push_back(a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2));
    }
    return out;
}

}  // namespace

std::vector<Vec3> sample_surface_points(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
    validate_mesh(mesh);
    if (mesh.triangles.empty()) throw InputError("mesh", "cannot sample an empty mesh");
    const auto cdf = area_cdf(mesh);
    if (!(cdf.back() > 0.0)) throw InputError("mesh", "cannot sample a zero-area mesh");
    auto rng = make_rng(seed);
    return draw(mesh, cdf, n, rng);
}

EmitterSet sample_surface(const TriangleMesh& mesh, double density_per_um2, std::uint64_t seed) {
    if (!(density_per_um2 > 0.0) || !std::isfinite(density_per_um2))
        throw ConfigError("mesh", "emitter density must be positive");
    validate_mesh(mesh);
    if (mesh.triangles.empty()) throw InputError("mesh", "cannot sample an empty mesh");
    const auto cdf = area_cdf(mesh);
    if (!(cdf.back() > 0.0)) throw InputError("mesh", "cannot sample a zero-area mesh");
    const double area_um2 = cdf.back() * 1e-6;
    auto rng = make_rng(seed);
    std::poisson_distribution<std::uint64_t> count(area_um2 * density_per_um2);
    const auto n = std::size_t(count(rng));
    return EmitterSet{draw(mesh, cdf, n, rng), density_per_um2, seed};
}

}  // namespace mitoforge
