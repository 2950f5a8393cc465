#include <cmath>
#include <unordered_map>

#include "mc_table.hpp"
#include "mitoforge/error.hpp"
#include "mitoforge/mesh.hpp"

namespace mitoforge {

TriangleMesh marching_cubes(const ScalarGrid& grid, double iso) {
    const auto& d = grid.dims;
    if (d[0] < 1 || d[1] < 1 || d[2] < 1 || grid.values.size() != d[0] * d[1] * d[2])
        throw InputError("mesh", "scalar grid dimensions do not match its values");
    if (!std::isfinite(iso)) throw ConfigError("mesh", "iso level must be finite");
    bool any_inside = false;
    for (double v : grid.values) {
        if (!std::isfinite(v)) throw NumericError("mesh", "scalar grid contains non-finite values");
        any_inside = any_inside || v >= iso;
    }
    if (!any_inside) throw InputError("mesh", "empty level set: no grid value reaches the iso level");

    const double background = iso > 0.0 ? 0.0 : iso - 1.0;
    // Padded node coordinates run over [0, n + 1]; padded index p maps to grid index p - 1.
    const std::int64_t nx = std::int64_t(d[0]) + 2, ny = std::int64_t(d[1]) + 2, nz = std::int64_t(d[2]) + 2;
    auto value = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
        if (i < 1 || j < 1 || k < 1 || i > std::int64_t(d[0]) || j > std::int64_t(d[1]) || k > std::int64_t(d[2]))
            return background;
        return grid.at(std::size_t(i - 1), std::size_t(j - 1), std::size_t(k - 1));
    };
    auto position = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
        return grid.origin + Vec3{double(i - 1), double(j - 1), double(k - 1)} * grid.spacing;
    };

    TriangleMesh mesh;
    std::unordered_map<std::uint64_t, std::uint32_t> edge_vertex;
    const auto& table = mc::case_table();

    // Vertex on the grid edge leaving node (i, j, k) along `axis`.
    auto vertex_on = [&](std::int64_t i, std::int64_t j, std::int64_t k, int axis) -> std::uint32_t {
        const std::uint64_t key = std::uint64_t(((k * ny + j) * nx + i) * 3 + axis);
        if (auto it = edge_vertex.find(key); it != edge_vertex.end()) return it->second;
        const std::int64_t i1 = i + (axis == 0), j1 = j + (axis == 1), k1 = k + (axis == 2);
        const double v0 = value(i, j, k), v1 = value(i1, j1, k1);
        const double t = (iso - v0) / (v1 - v0);
        const Vec3 p0 = position(i, j, k), p1 = position(i1, j1, k1);
        const auto id = std::uint32_t(mesh.vertices.size());
        mesh.vertices.push_back(p0 + (p1 - p0) * t);
        edge_vertex.emplace(key, id);
        return id;
    };

    std::array<double, 8> corner_value{};
    std::vector<std::uint32_t> ring;
    for (std::int64_t k = 0; k + 1 < nz; ++k)
        for (std::int64_t j = 0; j + 1 < ny; ++j)
            for (std::int64_t i = 0; i + 1 < nx; ++i) {
                int config = 0;
                for (int c = 0; c < 8; ++c) {
                    const auto& o = mc::kCorner[c];
                    corner_value[c] = value(i + o[0], j + o[1], k + o[2]);
                    if (corner_value[c] >= iso) config |= 1 << c;
                }
                if (config == 0 || config == 255) continue;
                const auto& cs = table[config];
                for (const auto& loop : cs.loops) {
                    ring.clear();
                    for (auto e : loop) {
                        const auto& ca = mc::kCorner[mc::kEdgeCorners[e][0]];
                        const auto& cb = mc::kCorner[mc::kEdgeCorners[e][1]];
                        const int axis = ca[0] != cb[0] ? 0 : (ca[1] != cb[1] ? 1 : 2);
                        ring.push_back(vertex_on(i + std::min(ca[0], cb[0]), j + std::min(ca[1], cb[1]),
                                                 k + std::min(ca[2], cb[2]), axis));
                    }
                    if (ring.size() == 3 || !cs.ambiguous_face) {
                        for (std::size_t q = 1; q + 1 < ring.size(); ++q)
                            mesh.triangles.push_back({ring[0], ring[q], ring[q + 1]});
                    } else {
                        // A fan diagonal could coincide with one from the neighbouring cube across
                        // the ambiguous face; a private centre vertex keeps every edge 2-manifold.
                        Vec3 c{};
                        for (auto v : ring) c += mesh.vertices[v];
                        const auto centre = std::uint32_t(mesh.vertices.size());
                        mesh.vertices.push_back(c * (1.0 / double(ring.size())));
                        for (std::size_t q = 0; q < ring.size(); ++q)
                            mesh.triangles.push_back({centre, ring[q], ring[(q + 1) % ring.size()]});
                    }
                }
            }
    return mesh;
}

TriangleMesh marching_cubes(const VoxelVolume& mask, double iso) {
    if (!(iso > 0.0 && iso < 1.0)) throw ConfigError("mesh", "iso level must lie in (0, 1)");
    if (!mask.is_binary()) throw InputError("mesh", "marching cubes expects a binary mask");
    if (mask.count_nonzero() == 0) throw InputError("mesh", "marching cubes on an empty mask");
    ScalarGrid grid;
    grid.dims = mask.dims();
    grid.spacing = mask.voxel_size();
    grid.origin = mask.origin();
    grid.values.assign(mask.data().begin(), mask.data().end());
    return marching_cubes(grid, iso);
}

}  // namespace mitoforge
