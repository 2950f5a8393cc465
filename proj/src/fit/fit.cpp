#include <algorithm>
#include <cmath>
#include <numeric>

#include "mitoforge/error.hpp"
#include "mitoforge/io_util.hpp"
#include "mitoforge/rng.hpp"
#include "mlp_internal.hpp"

namespace mitoforge {

namespace {
constexpr char kMagic[8] = {'M', 'F', 'M', 'L', 'P', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void FitConfig::validate() const {
    if (epochs < 1) throw ConfigError("implicit_fit", "epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("implicit_fit", "batch_size must be >= 1");
    if (!(learning_rate > 0)) throw ConfigError("implicit_fit", "learning_rate must be > 0");
    if (!(beta1 > 0 && beta1 < 1) || !(beta2 > 0 && beta2 < 1))
        throw ConfigError("implicit_fit", "Adam moments must lie in (0, 1)");
    if (!(epsilon > 0)) throw ConfigError("implicit_fit", "epsilon must be > 0");
    if (architecture.hidden < 1 || architecture.blocks < 1)
        throw ConfigError("implicit_fit", "hidden width and block count must be >= 1");
}

FitResult fit(const OccupancySampleSet& samples, const FitConfig& config,
              const std::function<void(std::size_t, double)>& on_epoch) {
    config.validate();
    if (samples.size() == 0) throw InputError("implicit_fit", "no training samples");
    if (samples.points.size() != samples.labels.size())
        throw InputError("implicit_fit", "points and labels differ in length");

    // Separate streams for initialization and shuffling.
    FitResult result{MlpOccupancy::initialized(config.architecture, derive_seed(config.seed, 0)), {}};
    auto& model = result.model;
    auto shuffle_rng = make_rng(derive_seed(config.seed, 1));

    const std::size_t n = samples.size();
    const std::size_t np = model.parameters().size();
    std::vector<double> m(np, 0.0), v(np, 0.0), grad(np), xyz, dz;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::array<float, 3>> bp;
    std::vector<std::uint8_t> bl;
    detail::Workspace ws(config.architecture);
    double b1t = 1.0, b2t = 1.0;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t s = 0; s < n; s += config.batch_size) {
            const std::size_t e = std::min(n, s + config.batch_size);
            bp.clear();
            bl.clear();
            for (std::size_t i = s; i < e; ++i) {
                bp.push_back(samples.points[order[i]]);
                bl.push_back(samples.labels[order[i]]);
            }
            const double l = detail::train_step(ws, model, {bp, bl}, xyz, dz, grad);
            if (!std::isfinite(l))
                throw NumericError("implicit_fit", "loss became non-finite at epoch " + std::to_string(epoch) +
                                                       " (lr " + std::to_string(config.learning_rate) + ")");
            sum += l;
            ++batches;

            b1t *= config.beta1;
            b2t *= config.beta2;
            const double c1 = 1.0 / (1.0 - b1t), c2 = 1.0 / (1.0 - b2t);
            auto params = model.parameters();
            for (std::size_t k = 0; k < np; ++k) {
                m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * grad[k];
                v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * grad[k] * grad[k];
                params[k] -= config.learning_rate * (m[k] * c1) / (std::sqrt(v[k] * c2) + config.epsilon);
            }
        }
        const double mean = sum / double(batches);
        result.epoch_loss.push_back(mean);
        if (on_epoch) on_epoch(epoch, mean);
    }
    for (double p : model.parameters())
        if (!std::isfinite(p)) throw NumericError("implicit_fit", "parameters became non-finite");
    return result;
}

OccupancyGrid evaluate_grid(const MlpOccupancy& model, std::size_t resolution) {
    if (resolution < 2) throw ConfigError("implicit_fit", "grid resolution must be >= 2");
    OccupancyGrid g;
    g.resolution = resolution;
    g.spacing = 1.0 / double(resolution);
    g.origin = Vec3{-0.5, -0.5, -0.5} + Vec3{0.5, 0.5, 0.5} * g.spacing;
    const std::size_t plane = resolution * resolution;
    g.values.resize(plane * resolution);
    std::vector<double> xyz(plane * 3);
    for (std::size_t k = 0; k < resolution; ++k) {
        std::size_t idx = 0;
        for (std::size_t j = 0; j < resolution; ++j)
            for (std::size_t i = 0; i < resolution; ++i, ++idx) {
                const Vec3 p = g.origin + Vec3{double(i), double(j), double(k)} * g.spacing;
                xyz[3 * idx] = p.x;
                xyz[3 * idx + 1] = p.y;
                xyz[3 * idx + 2] = p.z;
            }
        model.forward_batch(xyz, std::span<double>(g.values.data() + k * plane, plane));
    }
    return g;
}

TriangleMesh extract_mesh(const MlpOccupancy& model, std::size_t resolution, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("implicit_fit", "threshold must lie in (0, 1)");
    return marching_cubes(evaluate_grid(model, resolution).as_scalar_grid(), threshold);
}

std::vector<std::uint8_t> encode_checkpoint(const MlpOccupancy& model) {
    const auto& a = model.architecture();
    io::ByteWriter w;
    w.bytes({kMagic, 8});
    w.u32(kVersion);
    w.u32(std::uint32_t(a.hidden));
    w.u32(std::uint32_t(a.blocks));
    w.u32(static_cast<std::uint32_t>(a.activation));
    w.u64(model.parameters().size());
    for (double p : model.parameters()) w.f64(p);
    w.u32(io::crc32(w.buffer()));
    return std::move(w.buffer());
}

MlpOccupancy decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& context) {
    io::ByteReader r(bytes, context);
    if (r.str(8) != std::string(kMagic, 8)) throw InputError("implicit_fit", context + ": bad magic");
    if (r.u32() != kVersion) throw InputError("implicit_fit", context + ": unsupported version");
    MlpArchitecture a;
    a.hidden = r.u32();
    a.blocks = r.u32();
    const auto act = r.u32();
    if (act > 1) throw InputError("implicit_fit", context + ": unknown activation code");
    a.activation = static_cast<Activation>(act);
    if (a.hidden < 1 || a.hidden > 4096 || a.blocks > 256)
        throw InputError("implicit_fit", context + ": implausible architecture");
    const auto count = r.u64();
    if (count != a.parameter_count())
        throw InputError("implicit_fit", context + ": parameter count does not match architecture");
    if (r.remaining() != count * 8 + 4) throw InputError("implicit_fit", context + ": truncated or oversized file");
    MlpOccupancy m(a);
    for (auto& p : m.parameters()) p = r.f64();
    const auto body = r.offset();
    if (r.u32() != io::crc32(bytes.subspan(0, body))) throw InputError("implicit_fit", context + ": checksum mismatch");
    return m;
}

void save_checkpoint(const MlpOccupancy& model, const std::filesystem::path& path) {
    io::write_file(path, encode_checkpoint(model));
}

MlpOccupancy load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(io::read_file(path), "checkpoint '" + path.string() + "'");
}

}  // namespace mitoforge
