#pragma once

#include <cstdint>
#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mitoforge/mesh.hpp"

namespace mitoforge {

/// Query points in the centred unit cube [-0.5, 0.5]^3 with inside(1)/outside(0) labels.
struct OccupancySampleSet {
    std::vector<std::array<float, 3>> points;
    std::vector<std::uint8_t> labels;
    std::string source;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return points.size(); }
    double inside_fraction() const noexcept;
    friend bool operator==(const OccupancySampleSet&, const OccupancySampleSet&) = default;
};

/// Values at the cell centres of a res^3 partition of the unit cube.
struct OccupancyGrid {
    std::size_t resolution = 0;
    std::vector<double> values;  // x fastest
    /// Physical (mesh-unit) position of the grid: p = origin + index * spacing.
    Vec3 origin{};
    double spacing = 0.0;

    ScalarGrid as_scalar_grid() const;
    double foreground_fraction(double threshold = 0.5) const noexcept;
};

inline constexpr std::size_t kDefaultOccupancySamples = 10000;

/// n i.i.d. uniform points in the unit cube labelled by point_in_mesh. The mesh must be
/// watertight and normalized (contained in the unit cube).
OccupancySampleSet sample_occupancy(const TriangleMesh& normalized_mesh, std::size_t n = kDefaultOccupancySamples,
                                    std::uint64_t seed = 0, std::string source = {});

/// Hard 0/1 inside test at every cell centre.
OccupancyGrid occupancy_grid(const TriangleMesh& mesh, std::size_t resolution);

/// Binary format: header (magic, version, N, seed, provenance length + bytes), N records of
/// three little-endian float32 coordinates and one label byte, then a CRC-32 trailer.
std::vector<std::uint8_t> encode_samples(const OccupancySampleSet& set);
OccupancySampleSet decode_samples(std::span<const std::uint8_t> bytes, const std::string& context = "samples");
void write_samples(const OccupancySampleSet& set, const std::filesystem::path& path);
OccupancySampleSet read_samples(const std::filesystem::path& path);
void write_samples_csv(const OccupancySampleSet& set, const std::filesystem::path& path);

}  // namespace mitoforge
