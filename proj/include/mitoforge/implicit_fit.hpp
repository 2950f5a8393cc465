#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mitoforge/mesh.hpp"
#include "mitoforge/occupancy.hpp"

namespace mitoforge {

enum class Activation : std::uint32_t { Relu = 0, Softplus = 1 };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

/// 3 -> hidden, `blocks` pre-activation residual blocks (h + W1·act(W0·act(h))), act -> 1.
struct MlpArchitecture {
    std::size_t hidden = 64;
    std::size_t blocks = 5;
    Activation activation = Activation::Relu;

    std::size_t parameter_count() const noexcept;
    friend bool operator==(const MlpArchitecture&, const MlpArchitecture&) = default;
};

/// Occupancy MLP f(p) = logistic(net(p)). Parameters are one flat array; each dense layer
/// stores its weight as an (in × out) row-major matrix followed by its bias.
class MlpOccupancy {
public:
    explicit MlpOccupancy(MlpArchitecture arch = {});

    /// Fan-in uniform weights and biases from `seed`; the output layer starts at zero so the
    /// initial field is exactly 0.5.
    static MlpOccupancy initialized(MlpArchitecture arch, std::uint64_t seed);

    const MlpArchitecture& architecture() const noexcept { return arch_; }
    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }

    double forward(const Vec3& p) const;
    double logit(const Vec3& p) const;
    /// Probabilities for `n` points stored as consecutive xyz triples. Thread-safe.
    void forward_batch(std::span<const double> xyz, std::span<double> out) const;

    friend bool operator==(const MlpOccupancy&, const MlpOccupancy&) = default;

private:
    MlpArchitecture arch_;
    std::vector<double> params_;
};

/// A batch view: parallel point and label arrays.
struct SampleBatch {
    std::span<const std::array<float, 3>> points;
    std::span<const std::uint8_t> labels;
};
SampleBatch whole(const OccupancySampleSet& set) noexcept;

inline constexpr double kProbabilityClip = 1e-7;

/// Mean binary cross-entropy with probabilities clipped to [1e-7, 1 - 1e-7].
double loss(const MlpOccupancy& model, SampleBatch batch);

struct LossGradient {
    double loss = 0.0;
    std::vector<double> gradient;  // same layout as MlpOccupancy::parameters()
};
/// Exact reverse-mode gradient of loss(). Clipped samples contribute no gradient.
LossGradient gradient(const MlpOccupancy& model, SampleBatch batch);

struct FitConfig {
    std::size_t epochs = 2000;
    std::size_t batch_size = 512;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    MlpArchitecture architecture{};

    void validate() const;
};

struct FitResult {
    MlpOccupancy model;
    std::vector<double> epoch_loss;  // mean batch loss per epoch
};

/// Adam on shuffled minibatches. Deterministic given (samples, config).
/// Throws NumericError if the loss becomes non-finite.
FitResult fit(const OccupancySampleSet& samples, const FitConfig& config,
              const std::function<void(std::size_t epoch, double loss)>& on_epoch = {});

/// Model probabilities at the cell centres of a res^3 partition of the unit cube.
OccupancyGrid evaluate_grid(const MlpOccupancy& model, std::size_t resolution);
/// Marching cubes on evaluate_grid at `threshold`. Throws InputError on an empty level set.
TriangleMesh extract_mesh(const MlpOccupancy& model, std::size_t resolution = 128, double threshold = 0.5);

std::vector<std::uint8_t> encode_checkpoint(const MlpOccupancy& model);
MlpOccupancy decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& context = "checkpoint");
void save_checkpoint(const MlpOccupancy& model, const std::filesystem::path& path);
MlpOccupancy load_checkpoint(const std::filesystem::path& path);

}  // namespace mitoforge
