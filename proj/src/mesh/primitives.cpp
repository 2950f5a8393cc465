#include <cmath>
#include <map>
#include <numbers>

#include "mitoforge/error.hpp"
#include "mitoforge/mesh.hpp"

namespace mitoforge {

namespace {

TriangleMesh outward(TriangleMesh m) { return mesh_volume(m) < 0 ? flip_orientation(std::move(m)) : m; }

}  // namespace

TriangleMesh make_box(const Vec3& lo, const Vec3& hi) {
    if (!(hi.x > lo.x && hi.y > lo.y && hi.z > lo.z)) throw ConfigError("mesh", "box must have positive extent");
    TriangleMesh m;
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j)
            for (int i = 0; i < 2; ++i) m.vertices.push_back({i ? hi.x : lo.x, j ? hi.y : lo.y, k ? hi.z : lo.z});
    m.triangles = {{0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}, {0, 1, 5}, {0, 5, 4},
                   {2, 6, 7}, {2, 7, 3}, {0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}};
    return m;
}

TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center) {
    if (!(radius > 0) || subdivisions < 0) throw ConfigError("mesh", "icosphere needs radius > 0 and subdivisions >= 0");
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                        {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& p : v) p *= 1.0 / norm(p);
    std::vector<Triangle> f{{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                            {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
                            {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
        auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
            const auto key = std::minmax(a, b);
            if (auto it = mid.find(key); it != mid.end()) return it->second;
            Vec3 m = 0.5 * (v[a] + v[b]);
            m *= 1.0 / norm(m);
            const auto id = std::uint32_t(v.size());
            v.push_back(m);
            mid.emplace(key, id);
            return id;
        };
        std::vector<Triangle> next;
        next.reserve(f.size() * 4);
        for (const auto& tri : f) {
            const auto a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]), c = midpoint(tri[2], tri[0]);
            next.push_back({tri[0], a, c});
            next.push_back({tri[1], b, a});
            next.push_back({tri[2], c, b});
            next.push_back({a, b, c});
        }
        f = std::move(next);
    }
    TriangleMesh m;
    for (const auto& p : v) m.vertices.push_back(center + p * radius);
    m.triangles = std::move(f);
    return outward(std::move(m));
}

TriangleMesh make_torus(double major_radius, double minor_radius, std::size_t major_segments,
                        std::size_t minor_segments, const Vec3& center) {
    if (!(major_radius > minor_radius && minor_radius > 0) || major_segments < 3 || minor_segments < 3)
        throw ConfigError("mesh", "torus needs R > r > 0 and at least 3 segments per direction");
    TriangleMesh m;
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < major_segments; ++i) {
        const double th = two_pi * double(i) / double(major_segments);
        for (std::size_t j = 0; j < minor_segments; ++j) {
            const double ph = two_pi * double(j) / double(minor_segments);
            const double ring = major_radius + minor_radius * std::cos(ph);
            m.vertices.push_back(center + Vec3{ring * std::cos(th), ring * std::sin(th), minor_radius * std::sin(ph)});
        }
    }
    auto id = [&](std::size_t i, std::size_t j) {
        return std::uint32_t((i % major_segments) * minor_segments + (j % minor_segments));
    };
    for (std::size_t i = 0; i < major_segments; ++i)
        for (std::size_t j = 0; j < minor_segments; ++j) {
            m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    return outward(std::move(m));
}

}  // namespace mitoforge
