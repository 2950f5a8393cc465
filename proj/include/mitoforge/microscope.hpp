#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mitoforge/mesh.hpp"

namespace mitoforge {

enum class MicroscopeKind { Widefield, Confocal };

std::string to_string(MicroscopeKind k);

struct MicroscopeConfig {
    std::string name;
    MicroscopeKind kind = MicroscopeKind::Widefield;
    double emission_wavelength_nm = 0.0;
    double numerical_aperture = 0.0;
    double magnification = 0.0;
    double pixel_size_nm = 0.0;  // sample plane
    double dof_nm = 0.0;
    double background = 100.0;   // mean counts b
    std::array<double, 2> sbr_range{2.0, 4.0};

    /// Throws ConfigError on any invalid field.
    void validate() const;
    friend bool operator==(const MicroscopeConfig&, const MicroscopeConfig&) = default;
};

nlohmann::json to_json(const MicroscopeConfig& cfg);
/// Either a full record or {"preset": name, ...field overrides}. Unknown keys are rejected.
MicroscopeConfig microscope_from_json(const nlohmann::json& j);

/// Con1, Epi1, Epi2.
const std::vector<MicroscopeConfig>& presets();
/// Throws ConfigError for unknown names.
const MicroscopeConfig& preset(const std::string& name);

/// λ/(2·NA) widefield, λ/(2·√2·NA) confocal.
double lateral_resolution(const MicroscopeConfig& cfg);

inline constexpr double kFwhmPerSigma = 2.3548;

struct PsfSigma {
    double xy = 0.0;  // nm
    double z = 0.0;   // nm
};
PsfSigma psf_sigma(const MicroscopeConfig& cfg);

/// Axial Gaussian weight G_z(dz) with G_z(0) = 1.
double axial_weight(const MicroscopeConfig& cfg, double dz_nm);
inline constexpr double kAxialCutoff = 1e-6;

/// Lateral image extent. Pixel (i, j) covers
/// x ∈ [cx − W·p/2 + i·p, cx − W·p/2 + (i+1)·p), and likewise for y with rows j.
struct FieldOfView {
    std::size_t width = 0;
    std::size_t height = 0;
    double center_x_nm = 0.0;
    double center_y_nm = 0.0;
};

/// Row-major real image; value(i, j) is column i, row j.
struct Image2D {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> data;

    Image2D() = default;
    Image2D(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), data(w * h, fill) {}
    double& at(std::size_t i, std::size_t j) noexcept { return data[j * width + i]; }
    double at(std::size_t i, std::size_t j) const noexcept { return data[j * width + i]; }
    double sum() const noexcept;
    double max() const noexcept;
    friend bool operator==(const Image2D&, const Image2D&) = default;
};

inline constexpr double kDefaultPhotons = 1000.0;

/// Noise-free image: each emitter adds photons · (pixel-integrated lateral Gaussian) ·
/// axial weight of (z − z_focal). Emitters below kAxialCutoff are skipped.
Image2D render_slice(std::span<const Vec3> emitters, const MicroscopeConfig& cfg, const FieldOfView& fov,
                     double z_focal_nm, double photons_per_emitter = kDefaultPhotons);

struct ImageStack {
    std::size_t width = 0;
    std::size_t height = 0;
    double pixel_size_nm = 0.0;
    std::vector<double> z_offsets;
    std::vector<Image2D> slices;
    bool noisy = false;
    std::optional<std::uint64_t> seed;
};

inline const std::vector<int> kDefaultSliceIndices{-1, 0, 1};

/// Slice k is rendered at z_focal = n_k · Δz; Δz defaults to dof / 2.
ImageStack render_zstack(std::span<const Vec3> emitters, const MicroscopeConfig& cfg, const FieldOfView& fov,
                         std::optional<double> dz_nm = std::nullopt, const std::vector<int>& n_list = kDefaultSliceIndices,
                         double photons_per_emitter = kDefaultPhotons);

struct NoisyImage {
    Image2D counts;       // integer-valued
    double target_sbr = 0.0;
    double signal_scale = 0.0;
    std::uint64_t seed = 0;
};

/// Scales the signal so (peak + b)/b = target (drawn uniformly from sbr_range if absent),
/// then draws each pixel from Poisson(scaled + b).
NoisyImage add_noise(const Image2D& image, const MicroscopeConfig& cfg, std::optional<double> target_sbr,
                     std::uint64_t seed);
/// Applies add_noise to every slice with seeds derived from `seed`.
ImageStack add_noise(const ImageStack& stack, const MicroscopeConfig& cfg, std::optional<double> target_sbr,
                     std::uint64_t seed);

/// Emitters with |z − z_focal| ≤ dof/2.
std::vector<Vec3> dof_mask(std::span<const Vec3> emitters, const MicroscopeConfig& cfg, double z_focal_nm);

/// 1 where the pixel centre lies within `dilation_radius_nm` of an in-DOF emitter's lateral
/// projection. A non-positive radius selects the default, half the lateral resolution.
Image2D ground_truth_mask(std::span<const Vec3> emitters, const MicroscopeConfig& cfg, const FieldOfView& fov,
                          double z_focal_nm, double dilation_radius_nm = 0.0);

/// Lateral FWHM (nm) of a single-spot image from the intensity-weighted second moments,
/// corrected for pixel integration (σ² − p²/12) and averaged over x and y.
double measure_fwhm(const Image2D& image, double pixel_size_nm);

// --- I/O --------------------------------------------------------------------

/// Binary PGM (P5). 16-bit values are rounded and clamped to [0, 65535].
void write_pgm16(const std::filesystem::path& path, const Image2D& image);
/// Nonzero pixels become 255.
void write_pgm8_mask(const std::filesystem::path& path, const Image2D& mask);
Image2D read_pgm(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_pgm16(const Image2D& image);
std::vector<std::uint8_t> encode_pgm8_mask(const Image2D& mask);

/// Little-endian float32 raster plus "<path>.json" header (width, height, pixel size).
void write_float_raw(const std::filesystem::path& path, const Image2D& image, double pixel_size_nm);
Image2D read_float_raw(const std::filesystem::path& path);

/// One file per slice (`<stem>_z<k>.pgm` when noisy, `.f32` otherwise) plus
/// `<stem>.json` listing z offsets and files. Returns every written path.
std::vector<std::filesystem::path> write_stack(const std::filesystem::path& dir, const std::string& stem,
                                               const ImageStack& stack);

}  // namespace mitoforge
