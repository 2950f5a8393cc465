#pragma once

#include <vector>

#include "mitoforge/implicit_fit.hpp"

namespace mitoforge::detail {

/// Offsets of each dense layer inside the flat parameter array.
struct Layer {
    std::size_t in = 0, out = 0;
    std::size_t weight = 0, bias = 0;
};

struct Layout {
    Layer input;
    std::vector<Layer> fc0, fc1;  // one per residual block
    Layer output;
    std::size_t total = 0;

    explicit Layout(const MlpArchitecture& arch);
};

/// Activations cached by a batch forward pass, reused by the backward pass.
class Workspace {
public:
    explicit Workspace(const MlpArchitecture& arch);

    /// Fills logits (size rows) for rows points (xyz triples).
    void forward(const MlpOccupancy& model, const double* xyz, std::size_t rows);
    /// Accumulates dL/dparams into grad given dL/dlogit per row. Requires a preceding forward.
    void backward(const MlpOccupancy& model, const double* dlogit, double* grad);

    const std::vector<double>& logits() const noexcept { return logits_; }
    const Layout& layout() const noexcept { return layout_; }

private:
    void reserve(std::size_t rows);

    MlpArchitecture arch_;
    Layout layout_;
    std::size_t rows_ = 0;
    std::vector<double> x_;
    std::vector<std::vector<double>> h_, a_;    // per stage 0..blocks: pre-activation stream and act(h)
    std::vector<std::vector<double>> z0_, a2_;  // per block: inner pre-activation and act(z0)
    std::vector<double> logits_;
    std::vector<double> dh_, dtmp_, dz0_;
};

/// Forward + backward on one batch; returns the batch loss and overwrites grad.
double train_step(Workspace& ws, const MlpOccupancy& model, SampleBatch batch, std::vector<double>& xyz,
                  std::vector<double>& dz, std::vector<double>& grad);

}  // namespace mitoforge::detail
