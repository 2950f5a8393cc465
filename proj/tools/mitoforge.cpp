#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mitoforge/datasetgen.hpp"
#include "mitoforge/error.hpp"
#include "mitoforge/implicit_fit.hpp"
#include "mitoforge/io_util.hpp"
#include "mitoforge/log.hpp"
#include "mitoforge/mesh.hpp"
#include "mitoforge/metrics.hpp"
#include "mitoforge/microscope.hpp"
#include "mitoforge/occupancy.hpp"
#include "mitoforge/simd/kernels.hpp"
#include "mitoforge/volume.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mitoforge;

namespace {

void emit(const json& record) { std::cout << record.dump() << "\n" << std::flush; }

json parse_json_file(const fs::path& path) {
    try {
        return json::parse(io::read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("cli", "config '" + path.string() + "' is not valid JSON: " + e.what());
    }
}

fs::path out_file(const fs::path& out, const std::string& name) {
    fs::create_directories(out);
    return out / name;
}

json stats_json(const TriangleMesh& m) {
    const auto audit = audit_edges(m);
    json j{{"vertices", m.vertices.size()},
           {"triangles", m.triangles.size()},
           {"watertight", audit.watertight()},
           {"boundary_edges", audit.boundary_edges},
           {"nonmanifold_edges", audit.nonmanifold_edges},
           {"misoriented_edges", audit.misoriented_edges},
           {"surface_area", surface_area(m)}};
    if (audit.watertight()) j["volume"] = mesh_volume(m);
    return j;
}

json record_json(const NormalizationRecord& r) {
    return {{"scale", r.scale},
            {"translation_nm", {r.translation.x, r.translation.y, r.translation.z}},
            {"convention", "normalized = (physical - translation) * scale"}};
}

NormalizationRecord record_from_file(const fs::path& path) {
    const auto j = parse_json_file(path);
    try {
        NormalizationRecord r;
        r.scale = j.at("scale").get<double>();
        const auto t = j.at("translation_nm").get<std::array<double, 3>>();
        r.translation = {t[0], t[1], t[2]};
        if (!(r.scale > 0)) throw ConfigError("cli", "normalization scale must be > 0");
        return r;
    } catch (const json::exception& e) {
        throw InputError("cli", "normalization record '" + path.string() + "': " + e.what());
    }
}

LabeledVolume labelled(const VoxelVolume& vol, int connectivity, std::size_t min_voxels) {
    auto cc = connected_components(vol, connectivity);
    return min_voxels > 0 ? filter_small_components(cc, min_voxels) : cc;
}

std::vector<Vec3> load_emitters(const fs::path& path) {
    return path.extension() == ".bin" ? read_emitters_bin(path).positions : read_emitters_csv(path).positions;
}

// Shared microscope selection: --preset or --microscope file (a preset-relative record allowed).
struct MicroscopeOption {
    std::string preset = "Epi1";
    std::string file;

    void add(CLI::App* app, const std::string& default_preset) {
        preset = default_preset;
        app->add_option("--preset", preset, "Microscope preset (Con1, Epi1, Epi2)")->capture_default_str();
        app->add_option("--microscope", file, "Microscope config JSON (overrides --preset)");
    }
    MicroscopeConfig resolve() const {
        return file.empty() ? mitoforge::preset(preset) : microscope_from_json(parse_json_file(file));
    }
};

std::optional<double> parse_sbr(const std::string& s) {
    if (s == "sample") return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("cli", "--sbr must be a number or 'sample'");
    }
}

struct Runner {
    std::function<void()> action;
    json resolved = json::object();
};

// --- volume ------------------------------------------------------------------

void add_volume(CLI::App& app, Runner& r) {
    auto* vol = app.add_subcommand("volume", "Segmented volume operations (raw file + .json sidecar)");
    vol->require_subcommand(1);

    {
        auto* c = vol->add_subcommand("info", "Print the volume header and foreground statistics");
        static std::string in;
        c->add_option("input", in, "Raw volume path")->required();
        c->callback([&r] {
            r.action = [] {
                const auto v = load_volume(in);
                emit({{"dims", v.dims()},
                      {"voxel_size_nm", v.voxel_size()},
                      {"origin_nm", {v.origin().x, v.origin().y, v.origin().z}},
                      {"binary", v.is_binary()},
                      {"nonzero", v.count_nonzero()}});
            };
        });
    }
    {
        auto* c = vol->add_subcommand("downsample", "Majority-vote block downsampling");
        static std::string in, out;
        static std::size_t factor = 3;
        c->add_option("input", in, "Raw volume path")->required();
        c->add_option("--factor", factor, "Integer block size")->capture_default_str();
        c->add_option("--out", out, "Output directory")->required();
        c->callback([&r] {
            r.resolved = {{"factor", factor}};
            r.action = [] {
                const auto v = downsample(load_volume(in), factor);
                const auto path = out_file(out, fs::path(in).stem().string() + "_ds" + std::to_string(factor) + ".raw");
                save_volume(path, v, 8);
                emit({{"output", path.string()}, {"dims", v.dims()}, {"voxel_size_nm", v.voxel_size()}});
            };
        });
    }
    {
        auto* c = vol->add_subcommand("cc", "Connected components of a binary volume");
        static std::string in, out;
        static int connectivity = 26;
        static std::size_t min_voxels = 27;
        c->add_option("input", in, "Raw volume path")->required();
        c->add_option("--connectivity", connectivity, "6, 18 or 26")->capture_default_str();
        c->add_option("--min-voxels", min_voxels, "Drop components smaller than this (0 keeps all)")
            ->capture_default_str();
        c->add_option("--out", out, "Write the label volume into this directory");
        c->callback([&r] {
            r.resolved = {{"connectivity", connectivity}, {"min_voxels", min_voxels}};
            r.action = [] {
                const auto lab = labelled(load_volume(in), connectivity, min_voxels);
                json inst = json::array();
                for (const auto& i : lab.instances)
                    inst.push_back({{"id", i.instance_id},
                                    {"voxels", i.voxel_count},
                                    {"bbox_min", i.bbox_min},
                                    {"bbox_max", i.bbox_max}});
                json rec{{"components", lab.instances.size()}, {"connectivity", connectivity}, {"instances", inst}};
                if (!out.empty()) {
                    const auto path = out_file(out, fs::path(in).stem().string() + "_labels.raw");
                    save_volume(path, lab.labels, 32);
                    rec["output"] = path.string();
                }
                emit(rec);
            };
        });
    }
    {
        auto* c = vol->add_subcommand("extract", "Crop one connected component as a binary mask");
        static std::string in, out;
        static int connectivity = 26;
        static std::size_t min_voxels = 27, pad = 1;
        static std::uint32_t id = 1;
        c->add_option("input", in, "Raw volume path")->required();
        c->add_option("--id", id, "Instance id (1 = largest)")->capture_default_str();
        c->add_option("--connectivity", connectivity, "6, 18 or 26")->capture_default_str();
        c->add_option("--min-voxels", min_voxels, "Drop components smaller than this (0 keeps all)")
            ->capture_default_str();
        c->add_option("--pad", pad, "Background voxels added per side")->capture_default_str();
        c->add_option("--out", out, "Output directory")->required();
        c->callback([&r] {
            r.resolved = {{"id", id}, {"connectivity", connectivity}, {"min_voxels", min_voxels}, {"pad", pad}};
            r.action = [] {
                const auto inst = extract_instance(labelled(load_volume(in), connectivity, min_voxels), id, pad);
                const auto path = out_file(out, "instance_" + std::to_string(id) + ".raw");
                save_volume(path, inst, 8);
                emit({{"output", path.string()}, {"dims", inst.dims()}, {"voxels", inst.count_nonzero()}});
            };
        });
    }
}

// --- mesh --------------------------------------------------------------------

void add_mesh(CLI::App& app, Runner& r) {
    auto* mesh = app.add_subcommand("mesh", "Surface extraction, repair, normalization and emitters");
    mesh->require_subcommand(1);
    {
        auto* c = mesh->add_subcommand("build", "Marching cubes on a binary mask volume");
        static std::string in, out;
        static double iso = 0.5;
        c->add_option("input", in, "Raw binary volume")->required();
        c->add_option("--iso", iso, "Iso level in (0, 1)")->capture_default_str();
        c->add_option("--out", out, "Output directory")->required();
        c->callback([&r] {
            r.resolved = {{"iso", iso}};
            r.action = [] {
                auto m = marching_cubes(load_volume(in), iso);
                if (!is_watertight(m)) m = make_watertight(m);
                const auto path = out_file(out, fs::path(in).stem().string() + ".off");
                write_mesh(path, m);
                auto rec = stats_json(m);
                rec["output"] = path.string();
                emit(rec);
            };
        });
    }
    {
        auto* c = mesh->add_subcommand("watertight", "Close boundary loops");
        static std::string in, out;
        c->add_option("input", in, "Mesh (.off/.obj)")->required();
        c->add_option("--out", out, "Output directory")->required();
        c->callback([&r] {
            r.action = [] {
                const auto m = make_watertight(read_mesh(in));
                const auto path = out_file(out, fs::path(in).stem().string() + "_watertight.off");
                write_mesh(path, m);
                auto rec = stats_json(m);
                rec["output"] = path.string();
                emit(rec);
            };
        });
    }
    {
        auto* c = mesh->add_subcommand("normalize", "Fit into the centred unit cube");
        static std::string in, out;
        c->add_option("input", in, "Mesh (.off/.obj)")->required();
        c->add_option("--out", out, "Output directory")->required();
        c->callback([&r] {
            r.action = [] {
                const auto n = normalize_unit_cube(read_mesh(in));
                const auto stem = fs::path(in).stem().string();
                const auto path = out_file(out, stem + "_normalized.off");
                write_mesh(path, n.mesh);
                const auto rec_path = out / fs::path(stem + ".norm.json");
                io::write_text(rec_path, record_json(n.record).dump(2) + "\n");
                emit({{"output", path.string()}, {"normalization", rec_path.string()}, {"record", record_json(n.record)}});
            };
        });
    }
    {
        auto* c = mesh->add_subcommand("info", "Edge audit, area and volume");
        static std::string in;
        c->add_option("input", in, "Mesh (.off/.obj)")->required();
        c->callback([&r] {
            r.action = [] {
                const auto m = read_mesh(in);
                auto rec = stats_json(m);
                rec["input"] = in;
                rec["surface_area_um2"] = surface_area_um2(m);
                if (rec.contains("volume")) rec["volume_um3"] = mesh_volume_um3(m);
                emit(rec);
            };
        });
    }
    {
        auto* c = mesh->add_subcommand("emitters", "Sample fluorophore positions on a nanometre mesh");
        static std::string in, out;
        static double density = 30.0;
        static std::uint64_t seed = 0;
        static bool binary = false;
        c->add_option("input", in, "Mesh in nanometres")->required();
        c->add_option("--density", density, "Molecules per square micrometre")->capture_default_str();
        c->add_option("--seed", seed, "Random seed")->required();
        c->add_flag("--binary", binary, "Write the binary emitter format instead of CSV");
        c->add_option("--out", out, "Output directory")->required();
        c->callback([&r] {
            r.resolved = {{"density", density}, {"seed", seed}};
            r.action = [] {
                const auto set = sample_surface(read_mesh(in), density, seed);
                const auto path = out_file(out, fs::path(in).stem().string() + (binary ? "_emitters.bin" : "_emitters.csv"));
                if (binary) write_emitters_bin(path, set);
                else write_emitters_csv(path, set);
                emit({{"output", path.string()}, {"count", set.positions.size()}, {"density", density}, {"seed", seed}});
            };
        });
    }
    {
        auto* c = mesh->add_subcommand("synth", "Generate synthetic mitochondrion-like meshes");
        static std::string out;
        static std::size_t count = 10;
        static std::uint64_t seed = 0;
        c->add_option("--count", count, "Number of shapes")->capture_default_str();
        c->add_option("--seed", seed, "Random seed")->required();
        c->add_option("--out", out, "Output directory")->required();
        c->callback([&r] {
            r.resolved = {{"count", count}, {"seed", seed}};
            r.action = [] {
                const auto corpus = synthetic_corpus(count, seed);
                for (std::size_t i = 0; i < corpus.size(); ++i) write_mesh(out_file(out, corpus.ids[i] + ".off"), corpus.meshes[i]);
                emit({{"output", out}, {"count", corpus.size()}, {"seed", seed}});
            };
        });
    }
}

// --- occupancy and fitting ------------------------------------------------------

void add_fit(CLI::App& app, Runner& r) {
    {
        auto* c = app.add_subcommand("sample", "Occupancy samples in the unit cube for a mesh");
        static std::string in, out;
        static std::size_t n = kDefaultOccupancySamples;
        static std::uint64_t seed = 0;
        static bool csv = false;
        c->add_option("input", in, "Watertight mesh (normalized first if needed)")->required();
        c->add_option("--n", n, "Number of query points")->capture_default_str();
        c->add_option("--seed", seed, "Random seed")->required();
        c->add_flag("--csv", csv, "Also write a CSV copy");
        c->add_option("--out", out, "Output directory")->required();
        c->callback([&r] {
            r.resolved = {{"n", n}, {"seed", seed}};
            r.action = [] {
                const auto norm = normalize_unit_cube(read_mesh(in));
                const auto stem = fs::path(in).stem().string();
                const auto set = sample_occupancy(norm.mesh, n, seed, stem);
                const auto path = out_file(out, stem + ".occ");
                write_samples(set, path);
                io::write_text(out / fs::path(stem + ".norm.json"), record_json(norm.record).dump(2) + "\n");
                if (csv) write_samples_csv(set, out / fs::path(stem + ".csv"));
                emit({{"output", path.string()}, {"n", n}, {"seed", seed}, {"inside_fraction", set.inside_fraction()}});
            };
        });
    }
    {
        auto* c = app.add_subcommand("fit", "Fit an occupancy MLP to a sample file");
        static std::string in, out, config, activation = "relu";
        static std::uint64_t seed = 0;
        static FitConfig fc;
        c->add_option("input", in, "Sample file (.occ)")->required();
        c->add_option("--config", config, "FitConfig JSON (flags override it)");
        c->add_option("--seed", seed, "Random seed")->required();
        c->add_option("--epochs", fc.epochs, "Epochs")->capture_default_str();
        c->add_option("--batch", fc.batch_size, "Batch size")->capture_default_str();
        c->add_option("--lr", fc.learning_rate, "Adam step size")->capture_default_str();
        c->add_option("--hidden", fc.architecture.hidden, "Hidden width")->capture_default_str();
        c->add_option("--blocks", fc.architecture.blocks, "Residual blocks")->capture_default_str();
        c->add_option("--activation", activation, "relu or softplus")->capture_default_str();
        c->add_option("--out", out, "Output directory")->required();
        c->callback([&r, c] {
            if (!config.empty()) {
                // config file first, then explicit flags win
                const auto j = parse_json_file(config);
                static const std::set<std::string> known{"epochs", "batch_size", "learning_rate", "beta1", "beta2",
                                                         "epsilon", "hidden", "blocks", "activation"};
                for (const auto& [k, _] : j.items())
                    if (!known.count(k)) throw ConfigError("cli", "unknown fit config field '" + k + "'");
                auto take = [&](const char* key, const char* flag, auto& field) {
                    if (j.contains(key) && c->count(flag) == 0) field = j[key].get<std::decay_t<decltype(field)>>();
                };
                take("epochs", "--epochs", fc.epochs);
                take("batch_size", "--batch", fc.batch_size);
                take("learning_rate", "--lr", fc.learning_rate);
                take("hidden", "--hidden", fc.architecture.hidden);
                take("blocks", "--blocks", fc.architecture.blocks);
                take("activation", "--activation", activation);
                if (j.contains("beta1")) fc.beta1 = j["beta1"].get<double>();
                if (j.contains("beta2")) fc.beta2 = j["beta2"].get<double>();
                if (j.contains("epsilon")) fc.epsilon = j["epsilon"].get<double>();
            }
            fc.seed = seed;
            fc.architecture.activation = parse_activation(activation);
            fc.validate();
            r.resolved = {{"epochs", fc.epochs},       {"batch_size", fc.batch_size}, {"learning_rate", fc.learning_rate},
                          {"beta1", fc.beta1},         {"beta2", fc.beta2},           {"epsilon", fc.epsilon},
                          {"hidden", fc.architecture.hidden}, {"blocks", fc.architecture.blocks},
                          {"activation", activation},  {"seed", seed}};
            r.action = [] {
                const auto samples = read_samples(in);
                const auto res = fit(samples, fc, [](std::size_t e, double l) {
                    if (e % 50 == 0) log::info("epoch", {{"epoch", e}, {"loss", l}});
                });
                const auto path = out_file(out, fs::path(in).stem().string() + ".ckpt");
                save_checkpoint(res.model, path);
                io::write_text(out / fs::path(fs::path(in).stem().string() + ".loss.json"),
                               json{{"epoch_loss", res.epoch_loss}, {"seed", seed}}.dump() + "\n");
                emit({{"output", path.string()},
                      {"parameters", res.model.parameters().size()},
                      {"final_loss", res.epoch_loss.back()},
                      {"seed", seed}});
            };
        });
    }
    {
        auto* c = app.add_subcommand("eval", "Evaluate a checkpoint at points or on a sample file");
        static std::string in, samples;
        static std::vector<double> point;
        c->add_option("checkpoint", in, "Model checkpoint")->required();
        c->add_option("--point", point, "x y z in unit-cube coordinates")->expected(3);
        c->add_option("--samples", samples, "Sample file: report loss and accuracy");
        c->callback([&r] {
            if (point.empty() == samples.empty()) throw ConfigError("cli", "eval needs exactly one of --point or --samples");
            r.action = [] {
                const auto model = load_checkpoint(in);
                if (!point.empty()) {
                    emit({{"point", point}, {"occupancy", model.forward({point[0], point[1], point[2]})}});
                    return;
                }
                const auto set = read_samples(samples);
                std::vector<double> xyz, p(set.size());
                for (const auto& q : set.points) xyz.insert(xyz.end(), {q[0], q[1], q[2]});
                model.forward_batch(xyz, p);
                std::size_t correct = 0;
                for (std::size_t i = 0; i < set.size(); ++i) correct += (p[i] >= 0.5) == (set.labels[i] != 0);
                emit({{"samples", set.size()},
                      {"loss", loss(model, whole(set))},
                      {"accuracy", double(correct) / double(set.size())}});
            };
        });
    }
    {
        auto* c = app.add_subcommand("extract", "Mesh the level set of a checkpoint");
        static std::string in, out, normalization;
        static std::size_t resolution = 128;
        static double threshold = 0.5;
        c->add_option("checkpoint", in, "Model checkpoint")->required();
        c->add_option("--resolution", resolution, "Grid cells per axis")->capture_default_str();
        c->add_option("--threshold", threshold, "Occupancy threshold in (0, 1)")->capture_default_str();
        c->add_option("--normalization", normalization, "Also write a nanometre mesh using this record");
        c->add_option("--out", out, "Output directory")->required();
        c->callback([&r] {
            r.resolved = {{"resolution", resolution}, {"threshold", threshold}};
            r.action = [] {
                const auto m = extract_mesh(load_checkpoint(in), resolution, threshold);
                const auto stem = fs::path(in).stem().string();
                const auto path = out_file(out, stem + "_extracted.off");
                write_mesh(path, m);
                auto rec = stats_json(m);
                rec["output"] = path.string();
                if (!normalization.empty()) {
                    const auto p2 = out / fs::path(stem + "_extracted_nm.off");
                    write_mesh(p2, denormalize(m, record_from_file(normalization)));
                    rec["output_nm"] = p2.string();
                }
                emit(rec);
            };
        });
    }
}

// --- rendering -------------------------------------------------------------------

struct RenderOptions {
    MicroscopeOption microscope;
    std::string in, out, sbr = "sample";
    std::size_t width = 64, height = 64;
    std::optional<double> cx, cy, z;
    double photons = kDefaultPhotons;
    bool noise = false;
    std::optional<std::uint64_t> seed;

    void add(CLI::App* c) {
        c->add_option("emitters", in, "Emitter file (.csv or .bin), nanometres")->required();
        microscope.add(c, "Epi1");
        c->add_option("--width", width, "Pixels")->capture_default_str();
        c->add_option("--height", height, "Pixels")->capture_default_str();
        c->add_option("--cx", cx, "FOV centre x in nm (default: emitter centroid)");
        c->add_option("--cy", cy, "FOV centre y in nm (default: emitter centroid)");
        c->add_option("--z", z, "Focal plane z in nm (default: emitter centroid)");
        c->add_option("--photons", photons, "Photons per emitter")->capture_default_str();
        c->add_flag("--noise", noise, "Add background and Poisson noise (needs --seed)");
        c->add_option("--sbr", sbr, "Target SBR or 'sample'")->capture_default_str();
        c->add_option("--seed", seed, "Noise seed");
        c->add_option("--out", out, "Output directory")->required();
    }
    void check() const {
        if (noise && !seed) throw ConfigError("cli", "--noise requires --seed");
        if (noise) parse_sbr(sbr);
    }
    json describe(const MicroscopeConfig& cfg) const {
        json j{{"microscope", to_json(cfg)}, {"width", width}, {"height", height}, {"photons", photons}, {"noise", noise}};
        if (seed) j["seed"] = *seed;
        return j;
    }
};

void add_render(CLI::App& app, Runner& r) {
    auto* render = app.add_subcommand("render", "Noise-free or noisy fluorescence images from emitters");
    render->require_subcommand(1);
    static RenderOptions so, zo;
    static double dz = 0;
    static std::vector<int> slices = kDefaultSliceIndices;

    auto frame = [](const RenderOptions& o, const std::vector<Vec3>& es) {
        const Vec3 c = es.empty() ? Vec3{} : centroid(es);
        return std::pair{FieldOfView{o.width, o.height, o.cx.value_or(c.x), o.cy.value_or(c.y)}, o.z.value_or(c.z)};
    };
    {
        auto* c = render->add_subcommand("slice", "Render one focal plane");
        so.add(c);
        c->callback([&r, frame] {
            so.check();
            const auto cfg = so.microscope.resolve();
            r.resolved = so.describe(cfg);
            r.action = [cfg, frame] {
                const auto es = load_emitters(so.in);
                const auto [fov, zf] = frame(so, es);
                const auto img = render_slice(es, cfg, fov, zf, so.photons);
                const auto stem = fs::path(so.in).stem().string();
                const auto raw = out_file(so.out, stem + "_slice.f32");
                write_float_raw(raw, img, cfg.pixel_size_nm);
                json rec{{"output", raw.string()}, {"z_focal_nm", zf}, {"sum", img.sum()}, {"max", img.max()}};
                if (so.noise) {
                    const auto n = add_noise(img, cfg, parse_sbr(so.sbr), *so.seed);
                    const auto pgm = so.out + "/" + stem + "_slice.pgm";
                    write_pgm16(pgm, n.counts);
                    rec["noisy_output"] = pgm;
                    rec["target_sbr"] = n.target_sbr;
                }
                emit(rec);
            };
        });
    }
    {
        auto* c = render->add_subcommand("stack", "Render a z-stack at n·dz focal offsets");
        zo.add(c);
        c->add_option("--dz", dz, "Slice spacing in nm (default: dof/2)");
        c->add_option("--slices", slices, "Slice indices n")->capture_default_str()->delimiter(',');
        c->callback([&r, frame, c] {
            zo.check();
            const auto cfg = zo.microscope.resolve();
            const std::optional<double> step = c->count("--dz") ? std::optional<double>(dz) : std::nullopt;
            r.resolved = zo.describe(cfg);
            r.resolved["dz_nm"] = step.value_or(cfg.dof_nm / 2);
            r.resolved["slices"] = slices;
            r.action = [cfg, step, frame] {
                const auto es = load_emitters(zo.in);
                auto [fov, zf] = frame(zo, es);
                // stack offsets are relative to the chosen focal reference
                std::vector<Vec3> shifted(es);
                for (auto& p : shifted) p.z -= zf;
                auto stack = render_zstack(shifted, cfg, fov, step, slices, zo.photons);
                if (zo.noise) stack = add_noise(stack, cfg, parse_sbr(zo.sbr), *zo.seed);
                fs::create_directories(zo.out);
                const auto files = write_stack(zo.out, fs::path(zo.in).stem().string() + "_stack", stack);
                json list = json::array();
                for (const auto& f : files) list.push_back(f.string());
                emit({{"files", list}, {"z_offsets_nm", stack.z_offsets}, {"reference_z_nm", zf}});
            };
        });
    }
    {
        auto* c = app.add_subcommand("noise", "Add background + Poisson noise to a float raster");
        static MicroscopeOption mo;
        static std::string in, out, sbr = "sample";
        static std::uint64_t seed = 0;
        c->add_option("input", in, "Float raster (.f32 with .json header)")->required();
        mo.add(c, "Epi1");
        c->add_option("--sbr", sbr, "Target SBR or 'sample'")->capture_default_str();
        c->add_option("--seed", seed, "Random seed")->required();
        c->add_option("--out", out, "Output directory")->required();
        c->callback([&r] {
            const auto cfg = mo.resolve();
            const auto target = parse_sbr(sbr);
            r.resolved = {{"microscope", to_json(cfg)}, {"sbr", sbr}, {"seed", seed}};
            r.action = [cfg, target] {
                const auto n = add_noise(read_float_raw(in), cfg, target, seed);
                const auto path = out_file(out, fs::path(in).stem().string() + "_noisy.pgm");
                write_pgm16(path, n.counts);
                emit({{"output", path.string()}, {"target_sbr", n.target_sbr}, {"seed", seed}});
            };
        });
    }
}

// --- metrics -----------------------------------------------------------------------

void add_metrics(CLI::App& app, Runner& r) {
    auto* m = app.add_subcommand("metrics", "Mesh and mask evaluation");
    m->require_subcommand(1);
    {
        auto* c = m->add_subcommand("iou", "Monte-Carlo volumetric IoU of two watertight meshes");
        static std::string a, b;
        static std::size_t n = kDefaultIouSamples;
        static std::uint64_t seed = 0;
        c->add_option("a", a, "Mesh A")->required();
        c->add_option("b", b, "Mesh B")->required();
        c->add_option("--n", n, "Sample count")->capture_default_str();
        c->add_option("--seed", seed, "Random seed")->required();
        c->callback([&r] {
            r.resolved = {{"n", n}, {"seed", seed}};
            r.action = [] {
                const double v = volumetric_iou(read_mesh(a), read_mesh(b), n, seed);
                emit({{"metric", "iou"}, {"a", a}, {"b", b}, {"iou", v}, {"n", n}, {"seed", seed}});
            };
        });
    }
    {
        auto* c = m->add_subcommand("chamfer", "Chamfer-L1 distance between two surfaces");
        static std::string a, b, normalization;
        static std::size_t n = kDefaultChamferPoints;
        static std::uint64_t seed = 0;
        c->add_option("a", a, "Mesh A")->required();
        c->add_option("b", b, "Mesh B")->required();
        c->add_option("--n", n, "Surface points per mesh")->capture_default_str();
        c->add_option("--seed", seed, "Random seed")->required();
        c->add_option("--normalization", normalization, "Also report nanometres via this record");
        c->callback([&r] {
            r.resolved = {{"n", n}, {"seed", seed}};
            r.action = [] {
                const double d = chamfer_l1(read_mesh(a), read_mesh(b), n, seed);
                json rec{{"metric", "chamfer_l1"}, {"a", a}, {"b", b}, {"chamfer_l1", d}, {"n", n}, {"seed", seed}};
                if (!normalization.empty()) rec["chamfer_l1_nm"] = d / record_from_file(normalization).scale;
                emit(rec);
            };
        });
    }
    {
        auto* c = m->add_subcommand("mask", "Dice / IoU / F1 of two binary PGM masks");
        static std::string pred, gt;
        static bool all_classes = false;
        c->add_option("pred", pred, "Predicted mask")->required();
        c->add_option("gt", gt, "Ground-truth mask")->required();
        c->add_flag("--all-classes", all_classes, "Score foreground and background pixels together");
        c->callback([&r] {
            r.action = [] {
                const auto s = mask_scores(read_pgm(pred), read_pgm(gt), !all_classes);
                emit({{"metric", "mask"}, {"pred", pred}, {"gt", gt}, {"dice", s.dice}, {"iou", s.iou}, {"f1", s.f1},
                      {"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn}, {"foreground_only", !all_classes}});
            };
        });
    }
}

// --- datasets -------------------------------------------------------------------------

void add_dataset(CLI::App& app, Runner& r) {
    auto* d = app.add_subcommand("dataset", "Dataset generation, splitting and verification");
    d->require_subcommand(1);

    struct Common {
        std::string config, out, preset;
        std::uint64_t seed = 0;
        std::size_t jobs = 1;
        bool dry_run = false;
        std::optional<std::size_t> count;
    };
    static Common seg, s2s, m2m;
    auto add_common = [](CLI::App* c, Common& o) {
        c->add_option("--config", o.config, "Dataset config JSON")->required();
        c->add_option("--seed", o.seed, "Master seed")->required();
        c->add_option("--out", o.out, "Output directory")->required();
        c->add_option("--jobs", o.jobs, "Worker threads (output does not depend on it)")->capture_default_str();
        c->add_flag("--dry-run", o.dry_run, "Validate the config and print the plan without writing");
    };

    // Config layout: generator fields plus "corpus" and an optional "split".
    struct Parsed {
        json generator;
        json corpus;
        std::optional<SplitSpec> split;
        fs::path base;
    };
    auto parse = [](const Common& o) {
        Parsed p;
        p.base = fs::path(o.config).parent_path();
        p.generator = parse_json_file(o.config);
        if (!p.generator.is_object()) throw ConfigError("cli", "dataset config must be a JSON object");
        if (!p.generator.contains("corpus")) throw ConfigError("cli", "dataset config needs a \"corpus\" entry");
        p.corpus = p.generator["corpus"];
        p.generator.erase("corpus");
        if (p.generator.contains("split")) {
            const auto& s = p.generator["split"];
            SplitSpec spec;
            try {
                spec.fractions = s.at("fractions").get<std::array<double, 3>>();
                spec.seed = s.value("seed", o.seed);
            } catch (const json::exception& e) {
                throw ConfigError("cli", std::string("split: ") + e.what());
            }
            spec.validate();
            p.split = spec;
            p.generator.erase("split");
        }
        if (!o.preset.empty()) {
            auto& mic = p.generator.contains("from") ? p.generator["from"] : p.generator["microscope"];
            mic = json{{"preset", o.preset}};
        }
        if (o.count) p.generator["count"] = *o.count;
        return p;
    };
    auto finish = [](const Common& o, const Parsed& p, GenerationManifest m) {
        if (p.split) {
            m = split(std::move(m), *p.split);
            write_manifest(o.out, m);
        }
        emit({{"output", o.out}, {"kind", m.kind}, {"items", m.items.size()}, {"skipped", m.skipped.size()},
              {"seed", o.seed}});
    };
    auto plan = [](const Common& o, const char* kind, const json& cfg, std::size_t items) {
        emit({{"dry_run", true}, {"kind", kind}, {"seed", o.seed}, {"items", items}, {"config", cfg}, {"out", o.out}});
    };

    {
        auto* c = d->add_subcommand("seg", "2D segmentation image/mask montages");
        add_common(c, seg);
        c->add_option("--preset", seg.preset, "Override the config's microscope with a preset");
        c->add_option("--count", seg.count, "Override the config's item count");
        c->callback([&r, parse, finish, plan] {
            auto p = parse(seg);
            const auto cfg = segmentation_config_from_json(p.generator);
            r.resolved = {{"generator", to_json(cfg)}, {"corpus", p.corpus}, {"seed", seg.seed}, {"jobs", seg.jobs}};
            r.action = [p, cfg, finish, plan] {
                if (seg.dry_run) return plan(seg, "seg", to_json(cfg), cfg.count);
                const auto corpus = corpus_from_json(p.corpus, p.base);
                finish(seg, p, gen_segmentation_dataset(corpus, cfg, seg.seed, seg.out, seg.jobs));
            };
        });
    }
    {
        auto* c = d->add_subcommand("stack2shape", "z-stacks per perspective with occupancy samples");
        add_common(c, s2s);
        c->add_option("--preset", s2s.preset, "Override the config's microscope with a preset");
        c->callback([&r, parse, finish, plan] {
            auto p = parse(s2s);
            const auto cfg = stack2shape_config_from_json(p.generator);
            r.resolved = {{"generator", to_json(cfg)}, {"corpus", p.corpus}, {"seed", s2s.seed}, {"jobs", s2s.jobs}};
            r.action = [p, cfg, finish, plan] {
                if (s2s.dry_run) return plan(s2s, "stack2shape", to_json(cfg), cfg.perspectives.size());
                const auto corpus = corpus_from_json(p.corpus, p.base);
                finish(s2s, p, gen_stack2shape_dataset(corpus, cfg, s2s.seed, s2s.out, s2s.jobs));
            };
        });
    }
    {
        auto* c = d->add_subcommand("m2m", "Paired stacks of the same emitters under two microscopes");
        add_common(c, m2m);
        c->callback([&r, parse, finish, plan] {
            auto p = parse(m2m);
            const auto cfg = transform_config_from_json(p.generator);
            r.resolved = {{"generator", to_json(cfg)}, {"corpus", p.corpus}, {"seed", m2m.seed}, {"jobs", m2m.jobs}};
            r.action = [p, cfg, finish, plan] {
                if (m2m.dry_run) return plan(m2m, "m2m", to_json(cfg), cfg.perspectives.size());
                const auto corpus = corpus_from_json(p.corpus, p.base);
                finish(m2m, p, gen_m2m_dataset(corpus, cfg, m2m.seed, m2m.out, m2m.jobs));
            };
        });
    }
    {
        auto* c = d->add_subcommand("split", "Assign shapes of an existing dataset to train/val/test");
        static std::string dir;
        static std::vector<double> fractions{0.7, 0.1, 0.2};
        static std::uint64_t seed = 0;
        c->add_option("dataset", dir, "Dataset directory (its manifest is rewritten)")->required();
        c->add_option("--fractions", fractions, "train,val,test")->delimiter(',')->expected(3)->capture_default_str();
        c->add_option("--seed", seed, "Shuffle seed")->required();
        c->callback([&r] {
            r.resolved = {{"fractions", fractions}, {"seed", seed}};
            r.action = [] {
                SplitSpec spec{{fractions[0], fractions[1], fractions[2]}, seed};
                const auto m = split(read_manifest(dir), spec);
                write_manifest(dir, m);
                json counts = json::object();
                for (const auto& [_, s] : m.shape_split) counts[s] = counts.value(s, 0) + 1;
                emit({{"dataset", dir}, {"shape_counts", counts}, {"seed", seed}});
            };
        });
    }
    {
        auto* c = d->add_subcommand("verify", "Check manifest checksums and look for unlisted files");
        static std::string dir;
        c->add_option("dataset", dir, "Dataset directory")->required();
        c->callback([&r] {
            r.action = [] {
                const auto problems = verify_manifest(dir);
                emit({{"dataset", dir}, {"valid", problems.empty()}, {"problems", problems}});
                if (!problems.empty()) throw InputError("datasetgen", std::to_string(problems.size()) + " manifest problem(s)");
            };
        });
    }
}

void add_presets(CLI::App& app, Runner& r) {
    auto* p = app.add_subcommand("presets", "Shipped microscope configurations");
    p->require_subcommand(1);
    auto* list = p->add_subcommand("list", "Print every preset with derived PSF widths");
    list->callback([&r] {
        r.action = [] {
            for (const auto& cfg : presets()) {
                auto j = to_json(cfg);
                const auto s = psf_sigma(cfg);
                j["optical_resolution_nm"] = lateral_resolution(cfg);
                j["optical_resolution_px"] = lateral_resolution(cfg) / cfg.pixel_size_nm;
                j["sigma_xy_nm"] = s.xy;
                j["sigma_z_nm"] = s.z;
                emit(j);
            }
        };
    });
}

int report(ErrorKind kind, const std::string& module, const std::string& what) {
    json rec{{"level", "error"}, {"error", to_string(kind)}, {"module", module}, {"msg", what}, {"exit_code", exit_code_for(kind)}};
    std::fputs((rec.dump() + "\n").c_str(), stderr);
    return exit_code_for(kind);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mitoforge: EM segmentations to meshes, occupancy fits and simulated fluorescence data"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "debug, info, warn or error")->capture_default_str();

    Runner runner;
    add_presets(app, runner);
    add_volume(app, runner);
    add_mesh(app, runner);
    add_fit(app, runner);
    add_render(app, runner);
    add_metrics(app, runner);
    add_dataset(app, runner);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return report(ErrorKind::Config, "cli", e.what());
    } catch (const Error& e) {
        return report(e.kind(), e.module(), e.what());
    } catch (const json::exception& e) {
        return report(ErrorKind::Config, "cli", e.what());
    }

    if (log_level == "debug") log::set_min_level(log::Level::Debug);
    else if (log_level == "warn") log::set_min_level(log::Level::Warn);
    else if (log_level == "error") log::set_min_level(log::Level::Error);
    else if (log_level != "info") return report(ErrorKind::Config, "cli", "unknown --log-level '" + log_level + "'");

    std::vector<std::string> args(argv + 1, argv + argc);
    log::info("run", {{"args", args}, {"resolved", runner.resolved}, {"simd", std::string(simd::active().name)}});
    try {
        if (runner.action) runner.action();
        return 0;
    } catch (const Error& e) {
        return report(e.kind(), e.module(), e.what());
    } catch (const fs::filesystem_error& e) {
        return report(ErrorKind::Input, "io", e.what());
    } catch (const json::exception& e) {
        return report(ErrorKind::Input, "cli", e.what());
    } catch (const std::exception& e) {
        std::fputs((json{{"level", "error"}, {"error", "internal"}, {"msg", e.what()}, {"exit_code", 1}}.dump() + "\n").c_str(), stderr);
        return 1;
    }
}
