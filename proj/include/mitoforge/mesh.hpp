#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "mitoforge/vec3.hpp"
#include "mitoforge/volume.hpp"

namespace mitoforge {

using Triangle = std::array<std::uint32_t, 3>;

/// Indexed triangle surface. Positions are nanometres for physical meshes and
/// unit-cube units for normalized ones.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;
    std::optional<std::uint32_t> provenance;

    Aabb bounds() const noexcept;
};

/// Throws InputError on non-finite coordinates, out-of-range or repeated indices.
void validate_mesh(const TriangleMesh& mesh);

struct EdgeAudit {
    std::size_t boundary_edges = 0;      // used by one triangle
    std::size_t nonmanifold_edges = 0;   // used by three or more triangles
    std::size_t misoriented_edges = 0;   // two users traversing it in the same direction
    bool watertight() const noexcept { return boundary_edges == 0 && nonmanifold_edges == 0 && misoriented_edges == 0; }
};

/// Edge-incidence audit: watertight means every undirected edge has exactly two
/// triangles that traverse it in opposite directions.
EdgeAudit audit_edges(const TriangleMesh& mesh);
inline bool is_watertight(const TriangleMesh& mesh) { return audit_edges(mesh).watertight(); }

/// Sum of triangle areas in mesh units squared.
double surface_area(const TriangleMesh& mesh);
/// Signed tetrahedron-sum volume in mesh units cubed; positive for outward orientation.
/// Throws InputError if the mesh is not watertight.
double mesh_volume(const TriangleMesh& mesh);
/// Nanometre meshes reported in µm² / µm³.
inline double surface_area_um2(const TriangleMesh& mesh) { return surface_area(mesh) * 1e-6; }
inline double mesh_volume_um3(const TriangleMesh& mesh) { return mesh_volume(mesh) * 1e-9; }

TriangleMesh flip_orientation(TriangleMesh mesh);
TriangleMesh translate(TriangleMesh mesh, const Vec3& offset);
TriangleMesh scale(TriangleMesh mesh, double factor);

// --- construction -----------------------------------------------------------

/// Scalar samples on a regular grid; node (i, j, k) sits at origin + (i, j, k) * spacing.
struct ScalarGrid {
    Dims dims{0, 0, 0};
    double spacing = 1.0;
    Vec3 origin{};
    std::vector<double> values;

    double at(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return values[i + dims[0] * (j + dims[1] * k)];
    }
};

/// Isosurface of the superlevel set {value >= iso}. The grid is padded with one layer of
/// -infinity-like background (value below iso) so the result is always closed.
/// Throws InputError if no node reaches iso.
TriangleMesh marching_cubes(const ScalarGrid& grid, double iso);
/// Binary mask variant: foreground = nonzero, vertices in physical nanometres.
TriangleMesh marching_cubes(const VoxelVolume& mask, double iso = 0.5);

/// Closes every boundary loop by planar ear-clipping triangulation.
/// Throws InputError for non-orientable meshes or non-simple boundary loops.
TriangleMesh make_watertight(const TriangleMesh& mesh);

// --- normalization ----------------------------------------------------------

/// normalized = (physical - translation) * scale
struct NormalizationRecord {
    double scale = 1.0;
    Vec3 translation{};

    Vec3 apply(const Vec3& p) const noexcept { return (p - translation) * scale; }
    Vec3 invert(const Vec3& q) const noexcept { return q * (1.0 / scale) + translation; }
};

struct NormalizedMesh {
    TriangleMesh mesh;
    NormalizationRecord record;
};

/// Centres the bounding box at the origin and scales isotropically so the longest side is 1.
NormalizedMesh normalize_unit_cube(const TriangleMesh& mesh);
TriangleMesh denormalize(const TriangleMesh& mesh, const NormalizationRecord& record);

// --- emitters ---------------------------------------------------------------

struct EmitterSet {
    std::vector<Vec3> positions;  // nanometres
    double density = 0.0;         // molecules per µm²
    std::uint64_t seed = 0;
};

/// Poisson(area·density) points, uniform over the surface of a nanometre mesh.
EmitterSet sample_surface(const TriangleMesh& mesh, double density_per_um2, std::uint64_t seed);
/// Exactly n area-uniform surface points (mesh units).
std::vector<Vec3> sample_surface_points(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

/// Applies Rz(gamma) · Ry(beta) · Rx(alpha) about `origin`.
std::vector<Vec3> rotate(std::span<const Vec3> points, double alpha, double beta, double gamma, const Vec3& origin = {});
std::array<std::array<double, 3>, 3> rotation_matrix(double alpha, double beta, double gamma);
Vec3 centroid(std::span<const Vec3> points);

// --- I/O --------------------------------------------------------------------

TriangleMesh read_mesh(const std::filesystem::path& path);   // by extension: .off or .obj
void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh);
TriangleMesh read_off(const std::filesystem::path& path);
TriangleMesh read_obj(const std::filesystem::path& path);
void write_off(const std::filesystem::path& path, const TriangleMesh& mesh);
void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

void write_emitters_csv(const std::filesystem::path& path, const EmitterSet& set);
EmitterSet read_emitters_csv(const std::filesystem::path& path);
void write_emitters_bin(const std::filesystem::path& path, const EmitterSet& set);
EmitterSet read_emitters_bin(const std::filesystem::path& path);

// --- fixtures ---------------------------------------------------------------

/// Axis-aligned box surface (12 triangles), outward orientation.
TriangleMesh make_box(const Vec3& lo, const Vec3& hi);
/// Subdivided icosahedron projected on a sphere.
TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center = {});
/// Torus around the z axis.
TriangleMesh make_torus(double major_radius, double minor_radius, std::size_t major_segments,
                        std::size_t minor_segments, const Vec3& center = {});

}  // namespace mitoforge
