#include "mitoforge/datasetgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>

#include "mitoforge/error.hpp"
#include "mitoforge/io_util.hpp"
#include "mitoforge/log.hpp"
#include "mitoforge/occupancy.hpp"
#include "mitoforge/parallel.hpp"
#include "mitoforge/rng.hpp"

namespace mitoforge {

using nlohmann::json;

// --- corpus -----------------------------------------------------------------

ShapeCorpus load_corpus(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw InputError("datasetgen", "corpus directory '" + dir.string() + "' not found");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        const auto ext = e.path().extension().string();
        if (e.is_regular_file() && (ext == ".off" || ext == ".obj")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    ShapeCorpus c;
    for (const auto& f : files) {
        c.ids.push_back(f.stem().string());
        c.meshes.push_back(read_mesh(f));
    }
    if (c.size() == 0) throw InputError("datasetgen", "corpus directory '" + dir.string() + "' holds no .off/.obj meshes");
    return c;
}

TriangleMesh make_synthetic_mitochondrion(std::uint64_t seed) {
    auto rng = make_rng(seed);
    auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    const double length = uni(500.0, 1600.0);
    const double radius = uni(110.0, 170.0);
    const double bend = uni(0.0, 0.35) * length;
    const double phi = uni(0.0, 2.0 * std::numbers::pi);
    // quadratic Bézier centreline
    const Vec3 p0{-length / 2, 0, 0}, p1{0, bend * std::cos(phi), bend * std::sin(phi)}, p2{length / 2, 0, 0};
    constexpr int kSegments = 24;
    std::vector<Vec3> line;
    for (int s = 0; s <= kSegments; ++s) {
        const double t = double(s) / kSegments;
        line.push_back(p0 * ((1 - t) * (1 - t)) + p1 * (2 * t * (1 - t)) + p2 * (t * t));
    }
    Aabb box;
    for (const auto& p : line) box.expand(p);
    const double h = 24.0;  // grid spacing in nm
    const Vec3 lo = box.lo - Vec3{1, 1, 1} * (radius + 2 * h);
    const Vec3 ext = box.extent() + Vec3{1, 1, 1} * (2 * radius + 4 * h);
    ScalarGrid g;
    g.spacing = h;
    g.origin = lo;
    g.dims = {std::size_t(std::ceil(ext.x / h)) + 1, std::size_t(std::ceil(ext.y / h)) + 1,
              std::size_t(std::ceil(ext.z / h)) + 1};
    g.values.resize(g.dims[0] * g.dims[1] * g.dims[2]);
    std::size_t idx = 0;
    for (std::size_t k = 0; k < g.dims[2]; ++k)
        for (std::size_t j = 0; j < g.dims[1]; ++j)
            for (std::size_t i = 0; i < g.dims[0]; ++i) {
                const Vec3 p = lo + Vec3{double(i), double(j), double(k)} * h;
                double d2 = std::numeric_limits<double>::infinity();
                for (int s = 0; s < kSegments; ++s) {
                    const Vec3 a = line[s], ab = line[s + 1] - a;
                    const double t = std::clamp(dot(p - a, ab) / dot(ab, ab), 0.0, 1.0);
                    d2 = std::min(d2, norm2(p - (a + ab * t)));
                }
                g.values[idx++] = radius - std::sqrt(d2);
            }
    auto mesh = marching_cubes(g, 0.0);
    const Vec3 c = mesh.bounds().center();
    return translate(std::move(mesh), c * -1.0);
}

ShapeCorpus synthetic_corpus(std::size_t count, std::uint64_t seed) {
    if (count < 1) throw ConfigError("datasetgen", "synthetic corpus needs at least one shape");
    ShapeCorpus c;
    for (std::size_t i = 0; i < count; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "synth_%04zu", i);
        c.ids.push_back(id);
        c.meshes.push_back(make_synthetic_mitochondrion(derive_seed(seed, i)));
    }
    return c;
}

namespace {

/// Reads typed fields from a JSON object and rejects keys nobody asked for.
class Fields {
public:
    Fields(const json& j, std::string context) : j_(j), context_(std::move(context)) {
        if (!j.is_object()) throw ConfigError("datasetgen", context_ + " must be a JSON object");
    }
    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }
    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }
    template <class T>
    void get(const std::string& key, T& out) {
        if (!has(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("datasetgen", context_ + ": field '" + key + "' has the wrong type");
        }
    }
    void sbr(const std::string& key, std::optional<double>& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (v.is_string() && v.get<std::string>() == "sample") out.reset();
        else if (v.is_number()) out = v.get<double>();
        else throw ConfigError("datasetgen", context_ + ": '" + key + "' must be a number or \"sample\"");
    }
    /// Number, or null / absent for "use the default".
    void optional_number(const std::string& key, std::optional<double>& out) {
        if (!has(key) || j_.at(key).is_null()) return;
        if (!j_.at(key).is_number()) throw ConfigError("datasetgen", context_ + ": '" + key + "' must be a number or null");
        out = j_.at(key).get<double>();
    }
    void finish() const {
        for (const auto& [key, _] : j_.items())
            if (!seen_.count(key)) throw ConfigError("datasetgen", context_ + ": unknown field '" + key + "'");
    }

private:
    const json& j_;
    std::string context_;
    std::set<std::string> seen_;
};

json sbr_json(const std::optional<double>& s) { return s ? json(*s) : json("sample"); }

void check_sbr(const std::optional<double>& s) {
    if (s && (!std::isfinite(*s) || *s < 1.0)) throw ConfigError("datasetgen", "target_sbr must be >= 1");
}

void check_positive(double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v)) throw ConfigError("datasetgen", std::string(name) + " must be > 0");
}

}  // namespace

ShapeCorpus corpus_from_json(const json& j, const std::filesystem::path& base) {
    Fields f(j, "corpus");
    std::string dir;
    std::size_t synthetic = 0;
    std::uint64_t seed = 0;
    f.get("dir", dir);
    f.get("synthetic", synthetic);
    f.get("seed", seed);
    f.finish();
    if (!dir.empty() == (synthetic > 0))
        throw ConfigError("datasetgen", "corpus needs exactly one of \"dir\" or \"synthetic\"");
    if (!dir.empty()) {
        const std::filesystem::path p(dir);
        return load_corpus(p.is_absolute() ? p : base / p);
    }
    return synthetic_corpus(synthetic, seed);
}

std::vector<EulerAngles> default_perspectives() {
    constexpr double h = std::numbers::pi / 2, q = std::numbers::pi / 4;
    return {{0, 0, 0}, {h, 0, 0}, {0, h, 0}, {0, 0, h}, {q, q, 0}, {q, 0, q}};
}

// --- configs ----------------------------------------------------------------

void SegmentationConfig::validate() const {
    microscope.validate();
    if (count < 1 || count > 10'000'000) throw ConfigError("datasetgen", "count must lie in [1, 1e7]");
    if (tile_size < 8 || tile_size > 4096) throw ConfigError("datasetgen", "tile_size must lie in [8, 4096]");
    if (shapes_per_tile < 1) throw ConfigError("datasetgen", "shapes_per_tile must be >= 1");
    if (max_attempts < 1) throw ConfigError("datasetgen", "max_attempts must be >= 1");
    check_positive(density_per_um2, "density_per_um2");
    check_positive(photons_per_emitter, "photons_per_emitter");
    check_sbr(target_sbr);
}

void Stack2ShapeConfig::validate() const {
    microscope.validate();
    if (perspectives.empty()) throw ConfigError("datasetgen", "perspectives must not be empty");
    if (slice_indices.empty()) throw ConfigError("datasetgen", "slice_indices must not be empty");
    if (fov_pixels < 1) throw ConfigError("datasetgen", "fov_pixels must be >= 1");
    if (dz_nm) check_positive(*dz_nm, "dz_nm");
    if (occupancy_samples < 1) throw ConfigError("datasetgen", "occupancy_samples must be >= 1");
    check_positive(density_per_um2, "density_per_um2");
    check_positive(photons_per_emitter, "photons_per_emitter");
    check_sbr(target_sbr);
}

void MicroscopeTransformConfig::validate() const {
    from.validate();
    to.validate();
    if (perspectives.empty()) throw ConfigError("datasetgen", "perspectives must not be empty");
    if (slice_indices.empty()) throw ConfigError("datasetgen", "slice_indices must not be empty");
    check_positive(fov_nm, "fov_nm");
    if (dz_nm) check_positive(*dz_nm, "dz_nm");
    check_positive(density_per_um2, "density_per_um2");
    check_positive(photons_per_emitter, "photons_per_emitter");
    if (extraction_resolution < 2) throw ConfigError("datasetgen", "extraction_resolution must be >= 2");
    check_sbr(target_sbr);
}

SegmentationConfig segmentation_config_from_json(const json& j) {
    SegmentationConfig c;
    Fields f(j, "segmentation config");
    if (f.has("microscope")) c.microscope = microscope_from_json(f.raw("microscope"));
    f.get("count", c.count);
    f.get("tile_size", c.tile_size);
    f.get("shapes_per_tile", c.shapes_per_tile);
    f.get("density_per_um2", c.density_per_um2);
    f.get("photons_per_emitter", c.photons_per_emitter);
    f.sbr("target_sbr", c.target_sbr);
    f.get("mask_radius_nm", c.mask_radius_nm);
    f.get("max_attempts", c.max_attempts);
    f.finish();
    c.validate();
    return c;
}

Stack2ShapeConfig stack2shape_config_from_json(const json& j) {
    Stack2ShapeConfig c;
    Fields f(j, "stack2shape config");
    if (f.has("microscope")) c.microscope = microscope_from_json(f.raw("microscope"));
    f.get("perspectives", c.perspectives);
    f.get("fov_pixels", c.fov_pixels);
    f.optional_number("dz_nm", c.dz_nm);
    f.get("slice_indices", c.slice_indices);
    f.get("density_per_um2", c.density_per_um2);
    f.get("photons_per_emitter", c.photons_per_emitter);
    f.sbr("target_sbr", c.target_sbr);
    f.get("occupancy_samples", c.occupancy_samples);
    f.finish();
    c.validate();
    return c;
}

MicroscopeTransformConfig transform_config_from_json(const json& j) {
    MicroscopeTransformConfig c;
    Fields f(j, "m2m config");
    if (f.has("from")) c.from = microscope_from_json(f.raw("from"));
    if (f.has("to")) c.to = microscope_from_json(f.raw("to"));
    f.get("perspectives", c.perspectives);
    f.get("fov_nm", c.fov_nm);
    f.optional_number("dz_nm", c.dz_nm);
    f.get("slice_indices", c.slice_indices);
    f.get("density_per_um2", c.density_per_um2);
    f.get("photons_per_emitter", c.photons_per_emitter);
    f.get("noisy", c.noisy);
    f.sbr("target_sbr", c.target_sbr);
    f.get("extraction_resolution", c.extraction_resolution);
    f.finish();
    c.validate();
    return c;
}

json to_json(const SegmentationConfig& c) {
    return {{"microscope", to_json(c.microscope)},
            {"count", c.count},
            {"tile_size", c.tile_size},
            {"shapes_per_tile", c.shapes_per_tile},
            {"density_per_um2", c.density_per_um2},
            {"photons_per_emitter", c.photons_per_emitter},
            {"target_sbr", sbr_json(c.target_sbr)},
            {"mask_radius_nm", c.mask_radius_nm > 0 ? c.mask_radius_nm : lateral_resolution(c.microscope) / 2},
            {"max_attempts", c.max_attempts}};
}

json to_json(const Stack2ShapeConfig& c) {
    return {{"microscope", to_json(c.microscope)},
            {"perspectives", c.perspectives},
            {"fov_pixels", c.fov_pixels},
            {"dz_nm", c.dz_nm.value_or(c.microscope.dof_nm / 2)},
            {"slice_indices", c.slice_indices},
            {"density_per_um2", c.density_per_um2},
            {"photons_per_emitter", c.photons_per_emitter},
            {"target_sbr", sbr_json(c.target_sbr)},
            {"occupancy_samples", c.occupancy_samples}};
}

json to_json(const MicroscopeTransformConfig& c) {
    json j{{"from", to_json(c.from)},
           {"to", to_json(c.to)},
           {"perspectives", c.perspectives},
           {"fov_nm", c.fov_nm},
           {"slice_indices", c.slice_indices},
           {"density_per_um2", c.density_per_um2},
           {"photons_per_emitter", c.photons_per_emitter},
           {"noisy", c.noisy},
           {"target_sbr", sbr_json(c.target_sbr)},
           {"extraction_resolution", c.extraction_resolution}};
    j["dz_nm"] = c.dz_nm ? json(*c.dz_nm) : json(nullptr);  // null: each microscope uses dof / 2
    return j;
}

// --- generation helpers -------------------------------------------------------

namespace {

FileRecord emit(const std::filesystem::path& root, const std::string& rel, const std::vector<std::uint8_t>& bytes) {
    io::write_file(root / rel, bytes);
    return {rel, io::crc32_hex(bytes), bytes.size()};
}

FileRecord record(const std::filesystem::path& root, const std::filesystem::path& path) {
    return {std::filesystem::relative(path, root).generic_string(), io::file_crc32_hex(path),
            std::uint64_t(std::filesystem::file_size(path))};
}

std::string numbered(const char* prefix, std::size_t i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%06zu", prefix, i);
    return buf;
}

/// Emitters rotated about their centroid and moved so the centroid sits at the origin
/// (the focal plane z = 0 passes through the shape's centre).
std::vector<Vec3> oriented(const std::vector<Vec3>& emitters, const EulerAngles& a) {
    if (emitters.empty()) return {};
    const Vec3 c = centroid(emitters);
    auto out = rotate(emitters, a[0], a[1], a[2], c);
    for (auto& p : out) p = p - c;
    return out;
}

void require_corpus(const ShapeCorpus& shapes) {
    if (shapes.size() == 0) throw InputError("datasetgen", "shape corpus is empty");
    if (shapes.ids.size() != shapes.meshes.size()) throw InputError("datasetgen", "corpus ids and meshes differ in count");
}

struct SegItem {
    ManifestItem item;
    std::vector<std::string> skipped;
};

SegItem make_seg_item(const ShapeCorpus& shapes, const SegmentationConfig& cfg, std::uint64_t master,
                      std::size_t index, const std::filesystem::path& out) {
    const auto& mic = cfg.microscope;
    const std::size_t T = cfg.tile_size, W = 2 * T;
    const double ps = mic.pixel_size_nm, extent = double(T) * ps;
    const double radius = cfg.mask_radius_nm > 0 ? cfg.mask_radius_nm : lateral_resolution(mic) / 2;
    const FieldOfView fov{T, T, 0.0, 0.0};

    SegItem res;
    auto& item = res.item;
    item.index = index;
    item.seed = derive_seed(master, index);
    Image2D image(W, W), mask(W, W);
    json tiles = json::array();

    for (std::size_t t = 0; t < 4; ++t) {
        const std::uint64_t tseed = derive_seed(item.seed, t);
        auto rng = make_rng(tseed);
        std::uniform_int_distribution<std::size_t> pick(0, shapes.size() - 1);
        std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
        std::uniform_real_distribution<double> offset(-extent / 2, extent / 2);
        std::vector<Vec3> emitters;
        json placed = json::array();

        for (std::size_t k = 0; k < cfg.shapes_per_tile; ++k) {
            const std::size_t s = pick(rng);
            const EulerAngles rot{angle(rng), angle(rng), angle(rng)};
            const auto sample = sample_surface(shapes.meshes[s], cfg.density_per_um2, derive_seed(tseed, 1 + k));
            const auto body = oriented(sample.positions, rot);
            auto skip = [&](const std::string& why) {
                res.skipped.push_back(numbered("item", index) + " tile " + std::to_string(t) + " shape " + shapes.ids[s] +
                                      ": " + why);
                log::warn("placement skipped", {{"item", index}, {"tile", t}, {"shape", shapes.ids[s]}, {"reason", why}});
            };
            const auto in_dof = dof_mask(body, mic, 0.0);
            if (in_dof.empty()) {
                skip("no emitters within the depth of field");
                continue;
            }
            Aabb box;
            for (const auto& p : in_dof) box.expand(p);
            box.lo = box.lo - Vec3{radius, radius, 0};
            box.hi = box.hi + Vec3{radius, radius, 0};
            if (box.hi.x - box.lo.x > extent || box.hi.y - box.lo.y > extent) {
                skip("in-focus projection larger than the tile");
                continue;
            }
            bool ok = false;
            double ox = 0, oy = 0;
            for (std::size_t a = 0; a < cfg.max_attempts && !ok; ++a) {
                ox = offset(rng);
                oy = offset(rng);
                ok = box.lo.x + ox >= -extent / 2 && box.hi.x + ox <= extent / 2 && box.lo.y + oy >= -extent / 2 &&
                     box.hi.y + oy <= extent / 2;
            }
            if (!ok) {
                skip("no valid offset after " + std::to_string(cfg.max_attempts) + " attempts");
                continue;
            }
            for (const auto& p : body) emitters.push_back(p + Vec3{ox, oy, 0});
            item.shape_ids.push_back(shapes.ids[s]);
            item.rotations.push_back(rot);
            placed.push_back({{"shape", shapes.ids[s]},
                              {"rotation", rot},
                              {"offset_nm", {ox, oy}},
                              {"emitters", body.size()},
                              {"in_dof_emitters", in_dof.size()}});
        }

        const auto clean = render_slice(emitters, mic, fov, 0.0, cfg.photons_per_emitter);
        const auto target = clean.max() > 0 ? cfg.target_sbr : std::optional<double>(1.0);
        const auto noisy = add_noise(clean, mic, target, derive_seed(tseed, 1000));
        const auto tile_mask = ground_truth_mask(emitters, mic, fov, 0.0, radius);
        const std::size_t x0 = (t % 2) * T, y0 = (t / 2) * T;
        for (std::size_t j = 0; j < T; ++j)
            for (std::size_t i = 0; i < T; ++i) {
                image.at(x0 + i, y0 + j) = noisy.counts.at(i, j);
                mask.at(x0 + i, y0 + j) = tile_mask.at(i, j);
            }
        tiles.push_back({{"tile", t}, {"seed", tseed}, {"target_sbr", noisy.target_sbr}, {"placed", placed}});
    }

    const auto stem = numbered("seg_", index);
    item.files.push_back(emit(out, "images/" + stem + ".pgm", encode_pgm16(image)));
    item.files.push_back(emit(out, "masks/" + stem + ".pgm", encode_pgm8_mask(mask)));
    item.details = {{"tiles", tiles}};
    return res;
}

GenerationManifest base_manifest(const char* kind, std::uint64_t seed, const std::string& preset_name, json params,
                                 const ShapeCorpus& shapes) {
    GenerationManifest m;
    m.kind = kind;
    m.master_seed = seed;
    m.preset = preset_name;
    m.parameters = std::move(params);
    m.shape_ids = shapes.ids;
    return m;
}

}  // namespace

GenerationManifest gen_segmentation_dataset(const ShapeCorpus& shapes, const SegmentationConfig& config,
                                            std::uint64_t seed, const std::filesystem::path& out, std::size_t jobs) {
    config.validate();
    require_corpus(shapes);
    std::filesystem::create_directories(out / "images");
    std::filesystem::create_directories(out / "masks");
    std::vector<SegItem> items(config.count);
    parallel_for(config.count, jobs, [&](std::size_t i) { items[i] = make_seg_item(shapes, config, seed, i, out); });

    auto m = base_manifest("seg", seed, config.microscope.name, to_json(config), shapes);
    for (auto& it : items) {
        m.items.push_back(std::move(it.item));
        for (auto& s : it.skipped) m.skipped.push_back(std::move(s));
    }
    write_manifest(out, m);
    log::info("segmentation dataset written", {{"out", out.string()}, {"items", m.items.size()}, {"skipped", m.skipped.size()}});
    return m;
}

GenerationManifest gen_stack2shape_dataset(const ShapeCorpus& shapes, const Stack2ShapeConfig& config,
                                           std::uint64_t seed, const std::filesystem::path& out, std::size_t jobs) {
    config.validate();
    require_corpus(shapes);
    const auto& mic = config.microscope;
    const std::size_t P = config.perspectives.size();
    std::filesystem::create_directories(out / "occupancy");
    std::filesystem::create_directories(out / "stacks");
    std::vector<ManifestItem> items(shapes.size() * P);

    parallel_for(shapes.size(), jobs, [&](std::size_t s) {
        const auto& id = shapes.ids[s];
        const std::uint64_t shape_seed = derive_seed(seed, s);
        const auto norm = normalize_unit_cube(shapes.meshes[s]);
        const auto occ = sample_occupancy(norm.mesh, config.occupancy_samples, derive_seed(shape_seed, 0), id);
        const auto occ_file = emit(out, "occupancy/" + id + ".occ", encode_samples(occ));
        const json rec{{"scale", norm.record.scale},
                       {"translation_nm", {norm.record.translation.x, norm.record.translation.y, norm.record.translation.z}},
                       {"convention", "normalized = (physical - translation) * scale"}};
        const auto dump = rec.dump(2) + "\n";
        const auto norm_file = emit(out, "occupancy/" + id + ".norm.json", {dump.begin(), dump.end()});

        const auto emitters = sample_surface(shapes.meshes[s], config.density_per_um2, derive_seed(shape_seed, 1));
        const FieldOfView fov{config.fov_pixels, config.fov_pixels, 0.0, 0.0};
        for (std::size_t p = 0; p < P; ++p) {
            auto& item = items[s * P + p];
            item.index = s * P + p;
            item.seed = derive_seed(shape_seed, 2 + p);
            const auto body = oriented(emitters.positions, config.perspectives[p]);
            const auto clean = render_zstack(body, mic, fov, config.dz_nm, config.slice_indices, config.photons_per_emitter);
            const auto noisy = add_noise(clean, mic, config.target_sbr, item.seed);
            const auto stem = id + "_p" + std::to_string(p);
            for (const auto& path : write_stack(out / "stacks", stem, noisy)) item.files.push_back(record(out, path));
            item.files.push_back(occ_file);
            item.files.push_back(norm_file);
            item.shape_ids = {id};
            item.rotations = {config.perspectives[p]};
            item.details = {{"perspective", p},
                            {"stack", "stacks/" + stem + ".json"},
                            {"occupancy", occ_file.path},
                            {"normalization", norm_file.path},
                            {"z_offsets_nm", noisy.z_offsets},
                            {"emitters", body.size()}};
        }
    });

    auto m = base_manifest("stack2shape", seed, mic.name, to_json(config), shapes);
    m.items = std::move(items);
    write_manifest(out, m);
    log::info("stack2shape dataset written", {{"out", out.string()}, {"items", m.items.size()}});
    return m;
}

StackPair microscope_transform(const TriangleMesh& normalized_shape, const NormalizationRecord& source_scale,
                               const MicroscopeTransformConfig& config, const EulerAngles& perspective,
                               std::uint64_t seed) {
    config.validate();
    const auto physical = denormalize(normalized_shape, source_scale);
    const auto emitters = sample_surface(physical, config.density_per_um2, derive_seed(seed, 0));
    StackPair pair;
    pair.emitters = oriented(emitters.positions, perspective);
    auto render = [&](const MicroscopeConfig& mic) {
        const auto px = std::size_t(std::max(1L, std::lround(config.fov_nm / mic.pixel_size_nm)));
        auto stack = render_zstack(pair.emitters, mic, FieldOfView{px, px, 0.0, 0.0}, config.dz_nm,
                                   config.slice_indices, config.photons_per_emitter);
        return config.noisy ? add_noise(stack, mic, config.target_sbr, derive_seed(seed, 1)) : stack;
    };
    pair.from = render(config.from);
    pair.to = render(config.to);
    return pair;
}

StackPair microscope_transform(const MlpOccupancy& model, const NormalizationRecord& source_scale,
                               const MicroscopeTransformConfig& config, const EulerAngles& perspective,
                               std::uint64_t seed) {
    config.validate();
    return microscope_transform(extract_mesh(model, config.extraction_resolution, 0.5), source_scale, config,
                                perspective, seed);
}

GenerationManifest gen_m2m_dataset(const ShapeCorpus& shapes, const MicroscopeTransformConfig& config,
                                   std::uint64_t seed, const std::filesystem::path& out, std::size_t jobs) {
    config.validate();
    require_corpus(shapes);
    const std::size_t P = config.perspectives.size();
    std::filesystem::create_directories(out / "stacks" / "from");
    std::filesystem::create_directories(out / "stacks" / "to");
    std::vector<ManifestItem> items(shapes.size() * P);

    parallel_for(shapes.size(), jobs, [&](std::size_t s) {
        const auto& id = shapes.ids[s];
        const std::uint64_t shape_seed = derive_seed(seed, s);
        const auto norm = normalize_unit_cube(shapes.meshes[s]);
        for (std::size_t p = 0; p < P; ++p) {
            auto& item = items[s * P + p];
            item.index = s * P + p;
            item.seed = derive_seed(shape_seed, p);
            const auto pair = microscope_transform(norm.mesh, norm.record, config, config.perspectives[p], item.seed);
            const auto stem = id + "_p" + std::to_string(p);
            for (const auto& path : write_stack(out / "stacks" / "from", stem, pair.from)) item.files.push_back(record(out, path));
            for (const auto& path : write_stack(out / "stacks" / "to", stem, pair.to)) item.files.push_back(record(out, path));
            item.shape_ids = {id};
            item.rotations = {config.perspectives[p]};
            item.details = {{"perspective", p},
                            {"from", config.from.name},
                            {"to", config.to.name},
                            {"emitters", pair.emitters.size()}};
        }
    });

    auto m = base_manifest("m2m", seed, config.from.name + "->" + config.to.name, to_json(config), shapes);
    m.items = std::move(items);
    write_manifest(out, m);
    log::info("m2m dataset written", {{"out", out.string()}, {"items", m.items.size()}});
    return m;
}

}  // namespace mitoforge
