#include <algorithm>
#include <cmath>

#include "mitoforge/error.hpp"
#include "mitoforge/microscope.hpp"
#include "mitoforge/simd/kernels.hpp"

namespace mitoforge {

namespace {

// Pixel-integrated 1D Gaussian weights for pixels [first, first + n) along one axis.
void axis_weights(double start, double pixel, double mu, double sigma, long first, std::size_t n, double* w) {
    const double inv = 1.0 / (std::sqrt(2.0) * sigma);
    double lo = std::erf((start + double(first) * pixel - mu) * inv);
    for (std::size_t k = 0; k < n; ++k) {
        const double hi = std::erf((start + double(first + long(k) + 1) * pixel - mu) * inv);
        w[k] = 0.5 * (hi - lo);
        lo = hi;
    }
}

void check_fov(const FieldOfView& fov) {
    if (fov.width < 1 || fov.height < 1) throw ConfigError("microscope", "field of view must be at least 1x1 pixels");
    if (!std::isfinite(fov.center_x_nm) || !std::isfinite(fov.center_y_nm))
        throw ConfigError("microscope", "field of view centre must be finite");
}

}  // namespace

double Image2D::sum() const noexcept {
    double s = 0.0;
    for (double v : data) s += v;
    return s;
}

double Image2D::max() const noexcept { return data.empty() ? 0.0 : *std::max_element(data.begin(), data.end()); }

Image2D render_slice(std::span<const Vec3> emitters, const MicroscopeConfig& cfg, const FieldOfView& fov,
                     double z_focal_nm, double photons) {
    cfg.validate();
    check_fov(fov);
    if (!(photons >= 0) || !std::isfinite(photons)) throw ConfigError("microscope", "photons per emitter must be >= 0");
    Image2D img(fov.width, fov.height);
    const auto sigma = psf_sigma(cfg);
    const double ps = cfg.pixel_size_nm;
    const double x0 = fov.center_x_nm - 0.5 * double(fov.width) * ps;
    const double y0 = fov.center_y_nm - 0.5 * double(fov.height) * ps;
    const long reach = long(std::ceil(8.0 * sigma.xy / ps)) + 1;
    std::vector<double> wx(2 * reach + 1), wy(2 * reach + 1);
    const auto& kernels = simd::active();

    for (const auto& e : emitters) {
        if (!is_finite(e)) throw InputError("microscope", "non-finite emitter coordinate");
        const double wz = axial_weight(cfg, e.z - z_focal_nm);
        if (wz < kAxialCutoff) continue;
        const long ci = long(std::floor((e.x - x0) / ps));
        const long cj = long(std::floor((e.y - y0) / ps));
        const long i0 = std::max(0L, ci - reach), i1 = std::min(long(fov.width) - 1, ci + reach);
        const long j0 = std::max(0L, cj - reach), j1 = std::min(long(fov.height) - 1, cj + reach);
        if (i0 > i1 || j0 > j1) continue;
        const std::size_t nx = std::size_t(i1 - i0 + 1), ny = std::size_t(j1 - j0 + 1);
        axis_weights(x0, ps, e.x, sigma.xy, i0, nx, wx.data());
        axis_weights(y0, ps, e.y, sigma.xy, j0, ny, wy.data());
        kernels.outer_accumulate(ny, nx, photons * wz, wy.data(), wx.data(),
                                 img.data.data() + std::size_t(j0) * fov.width + std::size_t(i0), fov.width);
    }
    return img;
}

ImageStack render_zstack(std::span<const Vec3> emitters, const MicroscopeConfig& cfg, const FieldOfView& fov,
                         std::optional<double> dz_nm, const std::vector<int>& n_list, double photons) {
    if (n_list.empty()) throw ConfigError("microscope", "z-stack needs at least one slice index");
    const double dz = dz_nm.value_or(cfg.dof_nm / 2.0);
    if (!(dz > 0) || !std::isfinite(dz)) throw ConfigError("microscope", "slice spacing must be > 0");
    ImageStack s;
    s.width = fov.width;
    s.height = fov.height;
    s.pixel_size_nm = cfg.pixel_size_nm;
    for (int n : n_list) {
        s.z_offsets.push_back(double(n) * dz);
        s.slices.push_back(render_slice(emitters, cfg, fov, s.z_offsets.back(), photons));
    }
    return s;
}

std::vector<Vec3> dof_mask(std::span<const Vec3> emitters, const MicroscopeConfig& cfg, double z_focal_nm) {
    std::vector<Vec3> out;
    for (const auto& e : emitters)
        if (std::abs(e.z - z_focal_nm) <= cfg.dof_nm / 2.0) out.push_back(e);
    return out;
}

Image2D ground_truth_mask(std::span<const Vec3> emitters, const MicroscopeConfig& cfg, const FieldOfView& fov,
                          double z_focal_nm, double radius) {
    cfg.validate();
    check_fov(fov);
    if (!(radius > 0)) radius = lateral_resolution(cfg) / 2.0;
    Image2D mask(fov.width, fov.height);
    const double ps = cfg.pixel_size_nm;
    const double x0 = fov.center_x_nm - 0.5 * double(fov.width) * ps;
    const double y0 = fov.center_y_nm - 0.5 * double(fov.height) * ps;
    const double r2 = radius * radius;
    for (const auto& e : dof_mask(emitters, cfg, z_focal_nm)) {
        // pixel centres: x0 + (i + 0.5)·ps
        const long i0 = std::max(0L, long(std::floor((e.x - radius - x0) / ps - 0.5)));
        const long i1 = std::min(long(fov.width) - 1, long(std::ceil((e.x + radius - x0) / ps - 0.5)));
        const long j0 = std::max(0L, long(std::floor((e.y - radius - y0) / ps - 0.5)));
        const long j1 = std::min(long(fov.height) - 1, long(std::ceil((e.y + radius - y0) / ps - 0.5)));
        for (long j = j0; j <= j1; ++j) {
            const double dy = y0 + (double(j) + 0.5) * ps - e.y;
            for (long i = i0; i <= i1; ++i) {
                const double dx = x0 + (double(i) + 0.5) * ps - e.x;
                if (dx * dx + dy * dy <= r2) mask.at(std::size_t(i), std::size_t(j)) = 1.0;
            }
        }
    }
    return mask;
}

double measure_fwhm(const Image2D& image, double pixel_size_nm) {
    double total = 0.0, mx = 0.0, my = 0.0;
    for (std::size_t j = 0; j < image.height; ++j)
        for (std::size_t i = 0; i < image.width; ++i) {
            const double v = image.at(i, j);
            total += v;
            mx += v * double(i);
            my += v * double(j);
        }
    if (!(total > 0)) throw InputError("microscope", "cannot measure FWHM of an empty image");
    mx /= total;
    my /= total;
    double vx = 0.0, vy = 0.0;
    for (std::size_t j = 0; j < image.height; ++j)
        for (std::size_t i = 0; i < image.width; ++i) {
            const double v = image.at(i, j);
            vx += v * (double(i) - mx) * (double(i) - mx);
            vy += v * (double(j) - my) * (double(j) - my);
        }
    const double var = 0.5 * (vx + vy) / total - 1.0 / 12.0;  // pixel units
    if (!(var > 0)) throw InputError("microscope", "spot narrower than a pixel");
    return kFwhmPerSigma * std::sqrt(var) * pixel_size_nm;
}

}  // namespace mitoforge
