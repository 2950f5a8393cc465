#include <cmath>
#include <random>

#include "mitoforge/error.hpp"
#include "mitoforge/microscope.hpp"
#include "mitoforge/rng.hpp"

namespace mitoforge {

NoisyImage add_noise(const Image2D& image, const MicroscopeConfig& cfg, std::optional<double> target_sbr,
                     std::uint64_t seed) {
    cfg.validate();
    auto rng = make_rng(seed);
    NoisyImage out;
    out.seed = seed;
    if (target_sbr) {
        if (!std::isfinite(*target_sbr) || *target_sbr < 1.0) throw ConfigError("microscope", "target SBR must be >= 1");
        out.target_sbr = *target_sbr;
    } else {
        out.target_sbr = std::uniform_real_distribution<double>(cfg.sbr_range[0], cfg.sbr_range[1])(rng);
    }
    for (double v : image.data)
        if (!(v >= 0) || !std::isfinite(v)) throw InputError("microscope", "image intensities must be finite and >= 0");
    const double peak = image.max();
    const double b = cfg.background;
    if (peak <= 0) {
        if (out.target_sbr != 1.0)
            throw InputError("microscope", "cannot scale an all-zero image to a signal-to-background ratio above 1");
        out.signal_scale = 0.0;
    } else {
        out.signal_scale = (out.target_sbr - 1.0) * b / peak;
    }
    out.counts = Image2D(image.width, image.height);
    for (std::size_t k = 0; k < image.data.size(); ++k) {
        std::poisson_distribution<long> poisson(out.signal_scale * image.data[k] + b);
        out.counts.data[k] = double(poisson(rng));
    }
    return out;
}

ImageStack add_noise(const ImageStack& stack, const MicroscopeConfig& cfg, std::optional<double> target_sbr,
                     std::uint64_t seed) {
    ImageStack out = stack;
    out.noisy = true;
    out.seed = seed;
    // One SBR for the whole stack so slices stay comparable; the signal is scaled by the
    // brightest slice.
    std::optional<double> target = target_sbr;
    if (!target) {
        auto rng = make_rng(derive_seed(seed, 0));
        target = std::uniform_real_distribution<double>(cfg.sbr_range[0], cfg.sbr_range[1])(rng);
    }
    double peak = 0.0;
    for (const auto& s : stack.slices) peak = std::max(peak, s.max());
    for (std::size_t k = 0; k < stack.slices.size(); ++k) {
        const auto& s = stack.slices[k];
        // Apply the stack-wide scale by rescaling the slice target: per-slice peak ratio.
        const double local = s.max();
        const double slice_target = local > 0 ? 1.0 + (*target - 1.0) * local / peak : 1.0;
        out.slices[k] = add_noise(s, cfg, slice_target, derive_seed(seed, k + 1)).counts;
    }
    return out;
}

}  // namespace mitoforge
