#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mitoforge/implicit_fit.hpp"
#include "mitoforge/mesh.hpp"
#include "mitoforge/microscope.hpp"

namespace mitoforge {

// --- corpus -----------------------------------------------------------------

/// Nanometre meshes with stable ids.
struct ShapeCorpus {
    std::vector<std::string> ids;
    std::vector<TriangleMesh> meshes;
    std::size_t size() const noexcept { return meshes.size(); }
};

/// Every .off/.obj file in `dir` (sorted by name; id = file stem).
ShapeCorpus load_corpus(const std::filesystem::path& dir);

/// Curved tube with rounded ends, in nanometres and centred at the origin: a stand-in for
/// an EM-derived mitochondrion when no segmentation is at hand.
TriangleMesh make_synthetic_mitochondrion(std::uint64_t seed);
ShapeCorpus synthetic_corpus(std::size_t count, std::uint64_t seed);

/// {"dir": path} or {"synthetic": count, "seed": u64}.
ShapeCorpus corpus_from_json(const nlohmann::json& j, const std::filesystem::path& base = {});

// --- manifest ---------------------------------------------------------------

struct FileRecord {
    std::string path;  // relative to the dataset root, '/' separated
    std::string crc32;
    std::uint64_t bytes = 0;
};

struct ManifestItem {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> shape_ids;
    std::vector<std::array<double, 3>> rotations;
    std::vector<FileRecord> files;
    std::string split;
    nlohmann::json details = nlohmann::json::object();
};

struct GenerationManifest {
    std::string kind;  // "seg", "stack2shape" or "m2m"
    std::uint64_t master_seed = 0;
    std::string preset;
    nlohmann::json parameters = nlohmann::json::object();
    std::vector<std::string> shape_ids;
    std::vector<ManifestItem> items;
    std::map<std::string, std::string> shape_split;  // filled by split()
    std::vector<std::string> skipped;                // generation log of skipped placements
};

nlohmann::json to_json(const GenerationManifest& m);
GenerationManifest manifest_from_json(const nlohmann::json& j);
inline constexpr const char* kManifestName = "manifest.json";
void write_manifest(const std::filesystem::path& root, const GenerationManifest& m);
GenerationManifest read_manifest(const std::filesystem::path& root);
/// Problems found: missing files, checksum or size mismatches, files not listed. Empty = valid.
std::vector<std::string> verify_manifest(const std::filesystem::path& root);

// --- splits -----------------------------------------------------------------

struct SplitSpec {
    std::array<double, 3> fractions{0.7, 0.1, 0.2};  // train, val, test
    std::uint64_t seed = 0;
    void validate() const;
};

inline const std::array<std::string, 3> kSplitNames{"train", "val", "test"};

/// Largest-remainder sizes for n shapes; each within 1 of fraction·n.
std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& fractions);

/// Partitions the manifest's shapes (not items) after a seeded shuffle. An item takes the
/// split of its shapes; an item whose shapes span several splits gets "mixed".
/// Throws ConfigError if there are fewer shapes than splits.
GenerationManifest split(GenerationManifest manifest, const SplitSpec& spec);

// --- generation -------------------------------------------------------------

using EulerAngles = std::array<double, 3>;  // α, β, γ (radians)

/// (0,0,0), (π/2,0,0), (0,π/2,0), (0,0,π/2), (π/4,π/4,0), (π/4,0,π/4)
std::vector<EulerAngles> default_perspectives();

struct SegmentationConfig {
    MicroscopeConfig microscope = preset("Epi2");
    std::size_t count = 1;
    std::size_t tile_size = 128;
    std::size_t shapes_per_tile = 2;
    double density_per_um2 = 30.0;
    double photons_per_emitter = kDefaultPhotons;
    std::optional<double> target_sbr;  // sampled from the preset's range when absent
    double mask_radius_nm = 0.0;       // <= 0: half the lateral resolution
    std::size_t max_attempts = 100;

    void validate() const;
};

struct Stack2ShapeConfig {
    MicroscopeConfig microscope = preset("Epi1");
    std::vector<EulerAngles> perspectives = default_perspectives();
    std::size_t fov_pixels = 64;
    std::optional<double> dz_nm;  // default dof / 2
    std::vector<int> slice_indices = kDefaultSliceIndices;
    double density_per_um2 = 30.0;
    double photons_per_emitter = kDefaultPhotons;
    std::optional<double> target_sbr;
    std::size_t occupancy_samples = kDefaultOccupancySamples;

    void validate() const;
};

struct MicroscopeTransformConfig {
    MicroscopeConfig from = preset("Epi1");
    MicroscopeConfig to = preset("Con1");
    std::vector<EulerAngles> perspectives = default_perspectives();
    double fov_nm = 7000.0;  // square field of view; pixel count per microscope = round(fov / pixel)
    std::optional<double> dz_nm;
    std::vector<int> slice_indices = kDefaultSliceIndices;
    double density_per_um2 = 30.0;
    double photons_per_emitter = kDefaultPhotons;
    bool noisy = false;
    std::optional<double> target_sbr;
    std::size_t extraction_resolution = 128;  // for model inputs

    void validate() const;
};

/// Config files: {"microscope": {...}, ...fields}. Unknown keys are rejected.
SegmentationConfig segmentation_config_from_json(const nlohmann::json& j);
Stack2ShapeConfig stack2shape_config_from_json(const nlohmann::json& j);
MicroscopeTransformConfig transform_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SegmentationConfig& c);
nlohmann::json to_json(const Stack2ShapeConfig& c);
nlohmann::json to_json(const MicroscopeTransformConfig& c);

/// Writes images/ and masks/ (256×256 montages of four 128×128 tiles) plus the manifest.
GenerationManifest gen_segmentation_dataset(const ShapeCorpus& shapes, const SegmentationConfig& config,
                                            std::uint64_t seed, const std::filesystem::path& out,
                                            std::size_t jobs = 1);

/// Per shape: occupancy/<id>.occ, occupancy/<id>.norm.json, and one noisy stack per perspective
/// under stacks/.
GenerationManifest gen_stack2shape_dataset(const ShapeCorpus& shapes, const Stack2ShapeConfig& config,
                                           std::uint64_t seed, const std::filesystem::path& out,
                                           std::size_t jobs = 1);

struct StackPair {
    ImageStack from;
    ImageStack to;
    std::vector<Vec3> emitters;  // rotated, centred, nanometres
};

/// Rescales a normalized shape to nanometres, samples emitters once and renders them under both
/// microscopes over the same physical field of view.
StackPair microscope_transform(const TriangleMesh& normalized_shape, const NormalizationRecord& source_scale,
                               const MicroscopeTransformConfig& config, const EulerAngles& perspective,
                               std::uint64_t seed);
/// Model input: extract_mesh at config.extraction_resolution, then as above.
StackPair microscope_transform(const MlpOccupancy& model, const NormalizationRecord& source_scale,
                               const MicroscopeTransformConfig& config, const EulerAngles& perspective,
                               std::uint64_t seed);

/// Normalizes each corpus shape, then writes paired stacks under stacks/<from>/ and stacks/<to>/.
GenerationManifest gen_m2m_dataset(const ShapeCorpus& shapes, const MicroscopeTransformConfig& config,
                                   std::uint64_t seed, const std::filesystem::path& out, std::size_t jobs = 1);

}  // namespace mitoforge
