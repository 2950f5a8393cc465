#pragma once

#include <array>
#include <vector>

#include "mitoforge/mesh.hpp"

namespace mitoforge {

/// Closest point on triangle (a, b, c) to p.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) noexcept;
inline double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) noexcept {
    return norm(p - closest_point_on_triangle(p, a, b, c));
}

/// Inside/outside oracle for a watertight mesh, built once and then queried from any
/// number of threads. Points on the surface (within 1e-9 of the bounding-box diagonal)
/// count as inside.
///
/// Queries cast an axis-aligned ray and count crossings using a column grid over the
/// two transverse axes. A ray that grazes an edge or vertex is re-cast along another
/// axis; if all three are degenerate the generalized winding number decides.
class MeshQuery {
public:
    /// Throws InputError unless the mesh passes the watertight edge audit.
    explicit MeshQuery(TriangleMesh mesh);

    bool contains(const Vec3& p) const;
    /// Generalized winding number (≈1 inside, ≈0 outside for outward meshes).
    double winding_number(const Vec3& p) const;
    /// Brute-force unsigned distance to the surface.
    double distance(const Vec3& p) const;

    const TriangleMesh& mesh() const noexcept { return mesh_; }
    const Aabb& bounds() const noexcept { return box_; }

private:
    enum class Cast { Outside, Inside, OnSurface, Degenerate };

    struct ColumnGrid {
        int u = 0, v = 0;  // transverse axes
        std::size_t nu = 1, nv = 1;
        double u0 = 0, v0 = 0, du = 1, dv = 1;
        std::vector<std::uint32_t> start;  // CSR offsets, nu*nv + 1
        std::vector<std::uint32_t> tris;
    };

    void build_grid(int axis);
    Cast cast(int axis, const Vec3& p) const;

    TriangleMesh mesh_;
    Aabb box_;
    double surface_eps_ = 0.0;
    double orient_eps_ = 0.0;
    std::array<ColumnGrid, 3> grids_;
};

/// One-shot convenience; prefer MeshQuery for repeated queries.
bool point_in_mesh(const TriangleMesh& mesh, const Vec3& p);

}  // namespace mitoforge
