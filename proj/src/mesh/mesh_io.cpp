#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>
#include <string>

#include "mitoforge/error.hpp"
#include "mitoforge/io_util.hpp"
#include "mitoforge/mesh.hpp"

namespace mitoforge {

namespace {

std::string lower_ext(const std::filesystem::path& p) {
    auto e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    return e;
}

// Fan-triangulates polygons; OFF and OBJ both allow n-gons.
void add_polygon(TriangleMesh& mesh, const std::vector<std::uint32_t>& poly, const std::string& where) {
    if (poly.size() < 3) throw InputError("mesh", where + ": face with fewer than 3 vertices");
    for (std::size_t i = 1; i + 1 < poly.size(); ++i) mesh.triangles.push_back({poly[0], poly[i], poly[i + 1]});
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

TriangleMesh read_off(const std::filesystem::path& path) {
    std::istringstream in(io::read_text(path));
    const std::string where = "OFF '" + path.string() + "'";
    // Tokenize while skipping comments.
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) tokens.push_back(tok);
    }
    std::size_t pos = 0;
    auto next = [&]() -> const std::string& {
        if (pos >= tokens.size()) throw InputError("mesh", where + ": unexpected end of file");
        return tokens[pos++];
    };
    auto next_num = [&]() -> double {
        const auto& t = next();
        try {
            std::size_t used = 0;
            double v = std::stod(t, &used);
            if (used != t.size()) throw std::invalid_argument(t);
            return v;
        } catch (const std::exception&) {
            throw InputError("mesh", where + ": bad number '" + t + "'");
        }
    };
    if (next() != "OFF") throw InputError("mesh", where + ": missing OFF magic");
    const auto nv = std::size_t(next_num()), nf = std::size_t(next_num());
    next_num();  // edge count, unused
    TriangleMesh mesh;
    mesh.vertices.reserve(nv);
    for (std::size_t i = 0; i < nv; ++i) {
        const double x = next_num(), y = next_num(), z = next_num();
        mesh.vertices.push_back({x, y, z});
    }
    for (std::size_t f = 0; f < nf; ++f) {
        const auto n = std::size_t(next_num());
        std::vector<std::uint32_t> poly(n);
        for (auto& v : poly) v = std::uint32_t(next_num());
        add_polygon(mesh, poly, where);
    }
    validate_mesh(mesh);
    return mesh;
}

TriangleMesh read_obj(const std::filesystem::path& path) {
    std::istringstream in(io::read_text(path));
    const std::string where = "OBJ '" + path.string() + "'";
    TriangleMesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x >> p.y >> p.z)) throw InputError("mesh", where + ": bad vertex line");
            mesh.vertices.push_back(p);
        } else if (tag == "f") {
            std::vector<std::uint32_t> poly;
            std::string ref;
            while (ls >> ref) {
                // "i", "i/t", "i//n", "i/t/n"; negative indices are relative.
                long idx = 0;
                try {
                    idx = std::stol(ref.substr(0, ref.find('/')));
                } catch (const std::exception&) {
                    throw InputError("mesh", where + ": bad face index '" + ref + "'");
                }
                if (idx < 0) idx += long(mesh.vertices.size()) + 1;
                if (idx < 1) throw InputError("mesh", where + ": face index out of range");
                poly.push_back(std::uint32_t(idx - 1));
            }
            add_polygon(mesh, poly, where);
        }
    }
    validate_mesh(mesh);
    return mesh;
}

TriangleMesh read_mesh(const std::filesystem::path& path) {
    const auto ext = lower_ext(path);
    if (ext == ".off") return read_off(path);
    if (ext == ".obj") return read_obj(path);
    throw InputError("mesh", "unsupported mesh format '" + ext + "' (expected .off or .obj)");
}

void write_off(const std::filesystem::path& path, const TriangleMesh& mesh) {
    std::string s = "OFF\n" + std::to_string(mesh.vertices.size()) + " " + std::to_string(mesh.triangles.size()) + " 0\n";
    for (const auto& v : mesh.vertices) s += format_double(v.x) + " " + format_double(v.y) + " " + format_double(v.z) + "\n";
    for (const auto& t : mesh.triangles)
        s += "3 " + std::to_string(t[0]) + " " + std::to_string(t[1]) + " " + std::to_string(t[2]) + "\n";
    io::write_text(path, s);
}

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
    std::string s;
    for (const auto& v : mesh.vertices)
        s += "v " + format_double(v.x) + " " + format_double(v.y) + " " + format_double(v.z) + "\n";
    for (const auto& t : mesh.triangles)
        s += "f " + std::to_string(t[0] + 1) + " " + std::to_string(t[1] + 1) + " " + std::to_string(t[2] + 1) + "\n";
    io::write_text(path, s);
}

void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh) {
    const auto ext = lower_ext(path);
    if (ext == ".off") return write_off(path, mesh);
    if (ext == ".obj") return write_obj(path, mesh);
    throw InputError("mesh", "unsupported mesh format '" + ext + "' (expected .off or .obj)");
}

void write_emitters_csv(const std::filesystem::path& path, const EmitterSet& set) {
    std::string s = "# density_per_um2=" + format_double(set.density) + " seed=" + std::to_string(set.seed) + "\n";
    s += "x_nm,y_nm,z_nm\n";
    for (const auto& p : set.positions) s += format_double(p.x) + "," + format_double(p.y) + "," + format_double(p.z) + "\n";
    io::write_text(path, s);
}

EmitterSet read_emitters_csv(const std::filesystem::path& path) {
    std::istringstream in(io::read_text(path));
    EmitterSet set;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            double d = 0;
            unsigned long long seed = 0;
            if (std::sscanf(line.c_str(), "# density_per_um2=%lf seed=%llu", &d, &seed) == 2) {
                set.density = d;
                set.seed = seed;
            }
            continue;
        }
        if (!header_seen && line.rfind("x_nm", 0) == 0) {
            header_seen = true;
            continue;
        }
        Vec3 p;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &p.x, &p.y, &p.z) != 3)
            throw InputError("mesh", "malformed emitter row in '" + path.string() + "'");
        set.positions.push_back(p);
    }
    return set;
}

namespace {
constexpr char kEmitterMagic[8] = {'M', 'F', 'E', 'M', 'I', 'T', '0', '1'};
}

void write_emitters_bin(const std::filesystem::path& path, const EmitterSet& set) {
    io::ByteWriter w;
    w.bytes({kEmitterMagic, 8});
    w.u64(set.positions.size());
    w.f64(set.density);
    w.u64(set.seed);
    for (const auto& p : set.positions) {
        w.f64(p.x);
        w.f64(p.y);
        w.f64(p.z);
    }
    w.u32(io::crc32(w.buffer()));
    io::write_file(path, w.buffer());
}

EmitterSet read_emitters_bin(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    io::ByteReader r(bytes, "emitters '" + path.string() + "'");
    if (r.str(8) != std::string(kEmitterMagic, 8)) throw InputError("mesh", "bad emitter file magic");
    EmitterSet set;
    const auto n = r.u64();
    set.density = r.f64();
    set.seed = r.u64();
    if (n > r.remaining() / 24) throw InputError("mesh", "emitter file truncated");
    set.positions.resize(n);
    for (auto& p : set.positions) p = {r.f64(), r.f64(), r.f64()};
    const auto body = r.offset();
    const auto stored = r.u32();
    if (stored != io::crc32({bytes.data(), body})) throw InputError("mesh", "emitter file checksum mismatch");
    return set;
}

}  // namespace mitoforge
