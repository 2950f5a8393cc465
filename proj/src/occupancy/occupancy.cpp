#include "mitoforge/occupancy.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "mitoforge/error.hpp"
#include "mitoforge/io_util.hpp"
#include "mitoforge/mesh_query.hpp"
#include "mitoforge/rng.hpp"

namespace mitoforge {

namespace {

constexpr char kMagic[8] = {'M', 'F', 'O', 'C', 'C', 'S', 'E', 'T'};
constexpr std::uint32_t kVersion = 1;

void require_normalized(const TriangleMesh& mesh) {
    const auto box = mesh.bounds();
    const double tol = 1e-9;
    if (box.lo.x < -0.5 - tol || box.lo.y < -0.5 - tol || box.lo.z < -0.5 - tol || box.hi.x > 0.5 + tol ||
        box.hi.y > 0.5 + tol || box.hi.z > 0.5 + tol)
        throw InputError("occupancy", "mesh is not normalized to the centred unit cube");
}

}  // namespace

double OccupancySampleSet::inside_fraction() const noexcept {
    if (labels.empty()) return 0.0;
    std::size_t in = 0;
    for (auto l : labels) in += l;
    return double(in) / double(labels.size());
}

ScalarGrid OccupancyGrid::as_scalar_grid() const {
    return ScalarGrid{{resolution, resolution, resolution}, spacing, origin, values};
}

double OccupancyGrid::foreground_fraction(double threshold) const noexcept {
    if (values.empty()) return 0.0;
    std::size_t in = 0;
    for (double v : values) in += v >= threshold;
    return double(in) / double(values.size());
}

OccupancySampleSet sample_occupancy(const TriangleMesh& normalized_mesh, std::size_t n, std::uint64_t seed,
                                    std::string source) {
    if (n < 1) throw ConfigError("occupancy", "sample count must be >= 1");
    require_normalized(normalized_mesh);
    const MeshQuery query(normalized_mesh);
    auto rng = make_rng(seed);
    std::uniform_real_distribution<float> unit(-0.5f, 0.5f);
    OccupancySampleSet set;
    set.source = std::move(source);
    set.seed = seed;
    set.points.resize(n);
    set.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& p = set.points[i];
        p = {unit(rng), unit(rng), unit(rng)};
        set.labels[i] = query.contains({double(p[0]), double(p[1]), double(p[2])}) ? 1 : 0;
    }
    return set;
}

OccupancyGrid occupancy_grid(const TriangleMesh& mesh, std::size_t resolution) {
    if (resolution < 2) throw ConfigError("occupancy", "grid resolution must be >= 2");
    const MeshQuery query(mesh);
    OccupancyGrid g;
    g.resolution = resolution;
    g.spacing = 1.0 / double(resolution);
    g.origin = Vec3{-0.5, -0.5, -0.5} + Vec3{0.5, 0.5, 0.5} * g.spacing;
    g.values.resize(resolution * resolution * resolution);
    std::size_t idx = 0;
    for (std::size_t k = 0; k < resolution; ++k)
        for (std::size_t j = 0; j < resolution; ++j)
            for (std::size_t i = 0; i < resolution; ++i)
                g.values[idx++] = query.contains(g.origin + Vec3{double(i), double(j), double(k)} * g.spacing) ? 1.0 : 0.0;
    return g;
}

std::vector<std::uint8_t> encode_samples(const OccupancySampleSet& set) {
    if (set.points.size() != set.labels.size()) throw InputError("occupancy", "points and labels differ in length");
    io::ByteWriter w;
    w.bytes({kMagic, 8});
    w.u32(kVersion);
    w.u64(set.points.size());
    w.u64(set.seed);
    w.u32(std::uint32_t(set.source.size()));
    w.bytes(set.source);
    for (std::size_t i = 0; i < set.points.size(); ++i) {
        w.f32(set.points[i][0]);
        w.f32(set.points[i][1]);
        w.f32(set.points[i][2]);
        w.u8(set.labels[i]);
    }
    w.u32(io::crc32(w.buffer()));
    return std::move(w.buffer());
}

OccupancySampleSet decode_samples(std::span<const std::uint8_t> bytes, const std::string& context) {
    io::ByteReader r(bytes, context);
    if (r.str(8) != std::string(kMagic, 8)) throw InputError("occupancy", context + ": bad magic");
    if (const auto v = r.u32(); v != kVersion)
        throw InputError("occupancy", context + ": unsupported version " + std::to_string(v));
    OccupancySampleSet set;
    const auto n = r.u64();
    set.seed = r.u64();
    const auto slen = r.u32();
    set.source = r.str(slen);
    if (r.remaining() != n * 13 + 4)
        throw InputError("occupancy", context + ": truncated or oversized file (record count mismatch)");
    set.points.resize(n);
    set.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        set.points[i] = {r.f32(), r.f32(), r.f32()};
        set.labels[i] = r.u8();
        if (set.labels[i] > 1) throw InputError("occupancy", context + ": label outside {0,1}");
    }
    const auto body = r.offset();
    if (r.u32() != io::crc32(bytes.subspan(0, body))) throw InputError("occupancy", context + ": checksum mismatch");
    return set;
}

void write_samples(const OccupancySampleSet& set, const std::filesystem::path& path) {
    io::write_file(path, encode_samples(set));
}

OccupancySampleSet read_samples(const std::filesystem::path& path) {
    return decode_samples(io::read_file(path), "samples '" + path.string() + "'");
}

void write_samples_csv(const OccupancySampleSet& set, const std::filesystem::path& path) {
    std::string s = "x,y,z,label\n";
    char buf[96];
    for (std::size_t i = 0; i < set.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%u\n", set.points[i][0], set.points[i][1], set.points[i][2],
                      unsigned(set.labels[i]));
        s += buf;
    }
    io::write_text(path, s);
}

}  // namespace mitoforge
