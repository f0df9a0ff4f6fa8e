#pragma once

// Minimal deterministic neural-network engine: dense/conv1d/pool/activation
// layers with hand-derived backward passes, a joint classification +
// localization loss, and an Adam optimizer. 64-bit floats throughout; no
// external ML dependency.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace otdr::nn {

// Dense buffer with a (rows, cols) shape, row-major. For 1D feature maps
// rows = channels and cols = spatial length.
struct TensorBuf {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    TensorBuf() = default;
    TensorBuf(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::size_t size() const { return data.size(); }
};

enum class LayerKind { Conv1d, ReLU, MaxPool1d, Dense, Softmax };

const char* to_string(LayerKind k);
std::optional<LayerKind> layer_kind_from_string(const std::string& s);

// One layer of a sequential model. Parameter layout:
//   Conv1d: weights[out_ch][in_ch][kernel] flattened, bias[out_ch];
//           valid (no padding) cross-correlation with the given stride.
//   Dense:  weights[out][in] flattened, bias[out]; input is flattened.
//   ReLU / MaxPool1d / Softmax: parameter-free.
struct Layer {
    LayerKind kind = LayerKind::ReLU;
    std::size_t in_ch = 0, out_ch = 0, kernel = 0, stride = 1;  // Conv1d
    std::size_t pool_width = 0;                                 // MaxPool1d
    std::size_t in_dim = 0, out_dim = 0;                        // Dense
    std::vector<double> weights;
    std::vector<double> bias;

    static Layer conv1d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                        std::size_t stride = 1);
    static Layer relu();
    static Layer maxpool1d(std::size_t width);
    static Layer dense(std::size_t in_dim, std::size_t out_dim);
    static Layer softmax();

    std::size_t param_count() const { return weights.size() + bias.size(); }
};

using Model = std::vector<Layer>;

// Output shape of a layer given its input shape; throws std::invalid_argument
// when shapes do not compose (kernel larger than input, bad dims).
std::pair<std::size_t, std::size_t> output_shape(const Layer& layer, std::size_t rows,
                                                 std::size_t cols);

// Everything backward needs: the input of every layer plus per-layer argmax
// bookkeeping for pools and cached outputs for softmax.
struct ForwardCache {
    std::vector<TensorBuf> inputs;                   // inputs[i] = input of layer i
    TensorBuf output;                                // final output
    std::vector<std::vector<std::size_t>> pool_arg;  // argmax per pooled cell
};

TensorBuf forward(const Model& model, const TensorBuf& x, ForwardCache* cache = nullptr);

// Per-layer parameter gradients, same layout as the layer parameters.
struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> bias;

    void init_like(const Model& model);
    void accumulate(const Gradients& other, double scale);
    void scale(double s);
};

// Exact reverse-mode gradients of forward; returns the gradient w.r.t. the
// model input. ReLU subgradient at 0 is 0; MaxPool routes gradient to the
// first maximal element of each window.
TensorBuf backward(const Model& model, const ForwardCache& cache, const TensorBuf& grad_out,
                   Gradients& grads);

struct JointLoss {
    double loss = 0.0;
    double ce = 0.0;
    double pos = 0.0;
    std::vector<double> dlogits;  // gradient w.r.t. the raw class logits
    double dpos = 0.0;            // gradient w.r.t. the position prediction
};

// Cross-entropy over softmax(logits) for the class target plus
// lambda * smoothL1(pos_pred - pos_target); the position term is present iff
// the target class is not 0 (the no-fault class). Positions are expected
// normalized to [0, 1]. Throws std::invalid_argument on a bad label index.
JointLoss loss_ce_smoothl1(const TensorBuf& logits, int class_target, double pos_pred,
                           std::optional<double> pos_target, double lambda);

// Numerically stabilized softmax of a flat vector.
std::vector<double> softmax(const std::vector<double>& logits);

struct OptimizerState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    std::vector<std::vector<double>> m_w, v_w, m_b, v_b;

    void init_like(const Model& model);
};

// Standard bias-corrected adaptive-moment update, in place.
void adam_step(Model& model, const Gradients& grads, OptimizerState& state);

}  // namespace otdr::nn
