#include <algorithm>
#include <cmath>
#include <random>

#include "mitoforge/error.hpp"
#include "mitoforge/rng.hpp"
#include "mitoforge/simd/kernels.hpp"
#include "mlp_internal.hpp"

namespace mitoforge {

namespace {

inline double act(Activation a, double x) noexcept {
    if (a == Activation::Relu) return x > 0.0 ? x : 0.0;
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double act_grad(Activation a, double x) noexcept {
    if (a == Activation::Relu) return x > 0.0 ? 1.0 : 0.0;
    return 1.0 / (1.0 + std::exp(-x));
}

inline double logistic(double z) noexcept {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^x) without overflow
inline double softplus(double x) noexcept {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Clipping p to [c, 1-c] is the same as clipping the logit to [-L, L].
const double kLogitClip = std::log((1.0 - kProbabilityClip) / kProbabilityClip);

void check_batch(const MlpOccupancy&, SampleBatch batch) {
    if (batch.points.empty()) throw InputError("implicit_fit", "empty batch");
    if (batch.points.size() != batch.labels.size())
        throw InputError("implicit_fit", "points and labels differ in length");
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::Relu ? "relu" : "softplus"; }

Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::Relu;
    if (name == "softplus") return Activation::Softplus;
    throw ConfigError("implicit_fit", "unknown activation '" + name + "' (expected relu or softplus)");
}

std::size_t MlpArchitecture::parameter_count() const noexcept {
    const auto h = hidden;
    return (3 * h + h) + blocks * 2 * (h * h + h) + (h + 1);
}

MlpOccupancy::MlpOccupancy(MlpArchitecture arch) : arch_(arch), params_(arch.parameter_count(), 0.0) {
    if (arch.hidden < 1) throw ConfigError("implicit_fit", "hidden width must be >= 1");
}

MlpOccupancy MlpOccupancy::initialized(MlpArchitecture arch, std::uint64_t seed) {
    MlpOccupancy m(arch);
    const detail::Layout layout(arch);
    auto rng = make_rng(seed);
    auto fill = [&](const detail::Layer& l) {
        const double bound = 1.0 / std::sqrt(double(l.in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::size_t i = 0; i < l.in * l.out; ++i) m.params_[l.weight + i] = u(rng);
        for (std::size_t i = 0; i < l.out; ++i) m.params_[l.bias + i] = u(rng);
    };
    fill(layout.input);
    for (std::size_t b = 0; b < arch.blocks; ++b) {
        fill(layout.fc0[b]);
        fill(layout.fc1[b]);
    }
    return m;
}

double MlpOccupancy::logit(const Vec3& p) const {
    detail::Workspace ws(arch_);
    const double xyz[3] = {p.x, p.y, p.z};
    ws.forward(*this, xyz, 1);
    return ws.logits()[0];
}

double MlpOccupancy::forward(const Vec3& p) const { return logistic(logit(p)); }

void MlpOccupancy::forward_batch(std::span<const double> xyz, std::span<double> out) const {
    if (xyz.size() != 3 * out.size()) throw InputError("implicit_fit", "forward_batch size mismatch");
    constexpr std::size_t kChunk = 2048;
    detail::Workspace ws(arch_);
    for (std::size_t s = 0; s < out.size(); s += kChunk) {
        const std::size_t n = std::min(kChunk, out.size() - s);
        ws.forward(*this, xyz.data() + 3 * s, n);
        for (std::size_t i = 0; i < n; ++i) out[s + i] = logistic(ws.logits()[i]);
    }
}

SampleBatch whole(const OccupancySampleSet& set) noexcept { return {set.points, set.labels}; }

namespace detail {

Layout::Layout(const MlpArchitecture& arch) {
    std::size_t off = 0;
    auto layer = [&](std::size_t in, std::size_t out) {
        Layer l{in, out, off, off + in * out};
        off += in * out + out;
        return l;
    };
    input = layer(3, arch.hidden);
    for (std::size_t b = 0; b < arch.blocks; ++b) {
        fc0.push_back(layer(arch.hidden, arch.hidden));
        fc1.push_back(layer(arch.hidden, arch.hidden));
    }
    output = layer(arch.hidden, 1);
    total = off;
}

Workspace::Workspace(const MlpArchitecture& arch)
    : arch_(arch), layout_(arch), h_(arch.blocks + 1), a_(arch.blocks + 1), z0_(arch.blocks), a2_(arch.blocks) {}

void Workspace::reserve(std::size_t rows) {
    rows_ = rows;
    const std::size_t n = rows * arch_.hidden;
    x_.resize(rows * 3);
    for (auto& v : h_) v.resize(n);
    for (auto& v : a_) v.resize(n);
    for (auto& v : z0_) v.resize(n);
    for (auto& v : a2_) v.resize(n);
    logits_.resize(rows);
}

namespace {

// y = x·W + b for a row-major batch
void dense(const Layer& l, const double* params, const double* x, std::size_t rows, double* y) {
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(params + l.bias, l.out, y + r * l.out);
    simd::active().gemm_nn(rows, l.out, l.in, x, params + l.weight, y);
}

// Given dy, accumulate dW, db and (optionally) overwrite dx.
void dense_backward(const Layer& l, const double* params, const double* x, const double* dy, std::size_t rows,
                    double* grad, double* dx) {
    const auto& k = simd::active();
    k.gemm_tn(l.in, l.out, rows, x, dy, grad + l.weight);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < l.out; ++j) grad[l.bias + j] += dy[r * l.out + j];
    if (dx) {
        std::fill_n(dx, rows * l.in, 0.0);
        k.gemm_nt(rows, l.in, l.out, dy, params + l.weight, dx);
    }
}

}  // namespace

void Workspace::forward(const MlpOccupancy& model, const double* xyz, std::size_t rows) {
    reserve(rows);
    const double* p = model.parameters().data();
    const auto act_fn = arch_.activation;
    std::copy_n(xyz, rows * 3, x_.data());
    dense(layout_.input, p, x_.data(), rows, h_[0].data());
    for (std::size_t b = 0; b <= arch_.blocks; ++b) {
        auto& h = h_[b];
        auto& a = a_[b];
        for (std::size_t i = 0; i < h.size(); ++i) a[i] = act(act_fn, h[i]);
        if (b == arch_.blocks) break;
        dense(layout_.fc0[b], p, a.data(), rows, z0_[b].data());
        for (std::size_t i = 0; i < z0_[b].size(); ++i) a2_[b][i] = act(act_fn, z0_[b][i]);
        auto& next = h_[b + 1];
        dense(layout_.fc1[b], p, a2_[b].data(), rows, next.data());
        for (std::size_t i = 0; i < next.size(); ++i) next[i] += h[i];
    }
    dense(layout_.output, p, a_[arch_.blocks].data(), rows, logits_.data());
}

void Workspace::backward(const MlpOccupancy& model, const double* dlogit, double* grad) {
    const double* p = model.parameters().data();
    const auto act_fn = arch_.activation;
    const std::size_t n = rows_ * arch_.hidden;
    dh_.resize(n);
    dtmp_.resize(n);
    dz0_.resize(n);
    const std::size_t L = arch_.blocks;

    dense_backward(layout_.output, p, a_[L].data(), dlogit, rows_, grad, dtmp_.data());
    for (std::size_t i = 0; i < n; ++i) dh_[i] = dtmp_[i] * act_grad(act_fn, h_[L][i]);

    for (std::size_t b = L; b-- > 0;) {
        // dh_ currently holds dL/dh_{b+1}; it is also dL/dz1 of block b.
        dense_backward(layout_.fc1[b], p, a2_[b].data(), dh_.data(), rows_, grad, dtmp_.data());
        for (std::size_t i = 0; i < n; ++i) dz0_[i] = dtmp_[i] * act_grad(act_fn, z0_[b][i]);
        dense_backward(layout_.fc0[b], p, a_[b].data(), dz0_.data(), rows_, grad, dtmp_.data());
        for (std::size_t i = 0; i < n; ++i) dh_[i] += dtmp_[i] * act_grad(act_fn, h_[b][i]);
    }
    dense_backward(layout_.input, p, x_.data(), dh_.data(), rows_, grad, nullptr);
}

}  // namespace detail

namespace {

void to_xyz(SampleBatch batch, std::vector<double>& xyz) {
    xyz.resize(batch.points.size() * 3);
    for (std::size_t i = 0; i < batch.points.size(); ++i)
        for (int c = 0; c < 3; ++c) xyz[3 * i + c] = batch.points[i][c];
}

// Mean clipped BCE and, if dz is non-null, dL/dlogit per row.
double bce(const std::vector<double>& z, SampleBatch batch, double* dz) {
    const double inv = 1.0 / double(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double zc = std::clamp(z[i], -kLogitClip, kLogitClip);
        const bool y = batch.labels[i] != 0;
        // -log(sigmoid(zc)) = softplus(-zc); -log(1 - sigmoid(zc)) = softplus(zc)
        sum += y ? softplus(-zc) : softplus(zc);
        if (dz) dz[i] = (z[i] > -kLogitClip && z[i] < kLogitClip) ? (logistic(z[i]) - (y ? 1.0 : 0.0)) * inv : 0.0;
    }
    return sum * inv;
}

}  // namespace

double loss(const MlpOccupancy& model, SampleBatch batch) {
    check_batch(model, batch);
    std::vector<double> xyz;
    to_xyz(batch, xyz);
    detail::Workspace ws(model.architecture());
    ws.forward(model, xyz.data(), batch.points.size());
    return bce(ws.logits(), batch, nullptr);
}

LossGradient gradient(const MlpOccupancy& model, SampleBatch batch) {
    check_batch(model, batch);
    std::vector<double> xyz;
    to_xyz(batch, xyz);
    detail::Workspace ws(model.architecture());
    ws.forward(model, xyz.data(), batch.points.size());
    std::vector<double> dz(batch.points.size());
    LossGradient out;
    out.loss = bce(ws.logits(), batch, dz.data());
    out.gradient.assign(model.parameters().size(), 0.0);
    ws.backward(model, dz.data(), out.gradient.data());
    return out;
}

namespace detail {

double train_step(Workspace& ws, const MlpOccupancy& model, SampleBatch batch, std::vector<double>& xyz,
                  std::vector<double>& dz, std::vector<double>& grad) {
    to_xyz(batch, xyz);
    ws.forward(model, xyz.data(), batch.points.size());
    dz.resize(batch.points.size());
    const double l = bce(ws.logits(), batch, dz.data());
    std::fill(grad.begin(), grad.end(), 0.0);
    ws.backward(model, dz.data(), grad.data());
    return l;
}

}  // namespace detail

}  // namespace mitoforge
