#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "mitoforge/implicit_fit.hpp"
#include "mitoforge/mesh.hpp"
#include "mitoforge/occupancy.hpp"

namespace oracle {

struct GradCheck {
    double max_rel = 0.0;
    std::size_t checked = 0;
};

/// Central differences against gradient() on `n_params` randomly chosen parameters.
/// The output layer is randomized: at its zero initialization every other gradient vanishes.
/// rel = |analytic − fd| / max(|analytic|, |fd|, floor), 0 when the denominator is zero.
inline GradCheck gradient_check(mitoforge::MlpArchitecture arch, std::uint64_t seed, std::size_t batch,
                                std::size_t n_params, double h = 1e-6, double floor = 0.0) {
    using namespace mitoforge;
    const auto set = sample_occupancy(make_icosphere(0.35, 3), batch, 100 + seed);
    auto model = MlpOccupancy::initialized(arch, seed);
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(-0.125, 0.125);
    auto p = model.parameters();
    for (std::size_t i = p.size() - arch.hidden - 1; i < p.size(); ++i) p[i] = u(g);
    const auto grad = gradient(model, whole(set));
    GradCheck r;
    for (std::size_t t = 0; t < n_params; ++t) {
        const std::size_t k = g() % p.size();
        const double orig = p[k];
        p[k] = orig + h;
        const double lp = loss(model, whole(set));
        p[k] = orig - h;
        const double lm = loss(model, whole(set));
        p[k] = orig;
        const double fd = (lp - lm) / (2 * h), an = grad.gradient[k];
        const double den = std::max({std::abs(fd), std::abs(an), floor});
        r.max_rel = std::max(r.max_rel, den > 0 ? std::abs(fd - an) / den : 0.0);
        ++r.checked;
    }
    return r;
}

}  // namespace oracle
