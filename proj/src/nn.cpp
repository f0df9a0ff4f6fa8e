#include "otdr/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace otdr::nn {

const char* to_string(LayerKind k) {
    switch (k) {
        case LayerKind::Conv1d:    return "Conv1d";
        case LayerKind::ReLU:      return "ReLU";
        case LayerKind::MaxPool1d: return "MaxPool1d";
        case LayerKind::Dense:     return "Dense";
        case LayerKind::Softmax:   return "Softmax";
    }
    return "?";
}

std::optional<LayerKind> layer_kind_from_string(const std::string& s) {
    if (s == "Conv1d") return LayerKind::Conv1d;
    if (s == "ReLU") return LayerKind::ReLU;
    if (s == "MaxPool1d") return LayerKind::MaxPool1d;
    if (s == "Dense") return LayerKind::Dense;
    if (s == "Softmax") return LayerKind::Softmax;
    return std::nullopt;
}

Layer Layer::conv1d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                    std::size_t stride) {
    Layer l;
    l.kind = LayerKind::Conv1d;
    l.in_ch = in_ch;
    l.out_ch = out_ch;
    l.kernel = kernel;
    l.stride = stride;
    l.weights.assign(out_ch * in_ch * kernel, 0.0);
    l.bias.assign(out_ch, 0.0);
    return l;
}

Layer Layer::relu() {
    Layer l;
    l.kind = LayerKind::ReLU;
    return l;
}

Layer Layer::maxpool1d(std::size_t width) {
    Layer l;
    l.kind = LayerKind::MaxPool1d;
    l.pool_width = width;
    return l;
}

Layer Layer::dense(std::size_t in_dim, std::size_t out_dim) {
    Layer l;
    l.kind = LayerKind::Dense;
    l.in_dim = in_dim;
    l.out_dim = out_dim;
    l.weights.assign(out_dim * in_dim, 0.0);
    l.bias.assign(out_dim, 0.0);
    return l;
}

Layer Layer::softmax() {
    Layer l;
    l.kind = LayerKind::Softmax;
    return l;
}

std::pair<std::size_t, std::size_t> output_shape(const Layer& layer, std::size_t rows,
                                                 std::size_t cols) {
    switch (layer.kind) {
        case LayerKind::Conv1d: {
            if (rows != layer.in_ch)
                throw std::invalid_argument("conv1d: channel mismatch");
            if (cols < layer.kernel)
                throw std::invalid_argument("conv1d: kernel larger than input");
            return {layer.out_ch, (cols - layer.kernel) / layer.stride + 1};
        }
        case LayerKind::ReLU:
        case LayerKind::Softmax:
            return {rows, cols};
        case LayerKind::MaxPool1d: {
            if (layer.pool_width == 0 || cols < layer.pool_width)
                throw std::invalid_argument("maxpool1d: window larger than input");
            return {rows, cols / layer.pool_width};
        }
        case LayerKind::Dense: {
            if (rows * cols != layer.in_dim)
                throw std::invalid_argument("dense: input size mismatch");
            return {1, layer.out_dim};
        }
    }
    throw std::invalid_argument("unknown layer kind");
}

namespace {

void forward_conv1d(const Layer& l, const TensorBuf& x, TensorBuf& y) {
    const std::size_t out_len = y.cols;
    for (std::size_t oc = 0; oc < l.out_ch; ++oc) {
        for (std::size_t t = 0; t < out_len; ++t) {
            double acc = l.bias[oc];
            const std::size_t base = t * l.stride;
            for (std::size_t ic = 0; ic < l.in_ch; ++ic) {
                const double* w = &l.weights[(oc * l.in_ch + ic) * l.kernel];
                const double* xin = &x.data[ic * x.cols + base];
                for (std::size_t k = 0; k < l.kernel; ++k) acc += w[k] * xin[k];
            }
            y.at(oc, t) = acc;
        }
    }
}

void forward_maxpool(const Layer& l, const TensorBuf& x, TensorBuf& y,
                     std::vector<std::size_t>* arg) {
    if (arg) arg->assign(y.size(), 0);
    for (std::size_t c = 0; c < x.rows; ++c) {
        for (std::size_t t = 0; t < y.cols; ++t) {
            std::size_t best = t * l.pool_width;
            double best_v = x.at(c, best);
            for (std::size_t k = 1; k < l.pool_width; ++k) {
                double v = x.at(c, t * l.pool_width + k);
                if (v > best_v) {  // strict: ties go to the first maximum
                    best_v = v;
                    best = t * l.pool_width + k;
                }
            }
            y.at(c, t) = best_v;
            if (arg) (*arg)[c * y.cols + t] = best;
        }
    }
}

void forward_dense(const Layer& l, const TensorBuf& x, TensorBuf& y) {
    for (std::size_t o = 0; o < l.out_dim; ++o) {
        double acc = l.bias[o];
        const double* w = &l.weights[o * l.in_dim];
        for (std::size_t i = 0; i < l.in_dim; ++i) acc += w[i] * x.data[i];
        y.data[o] = acc;
    }
}

}  // namespace

std::vector<double> softmax(const std::vector<double>& logits) {
    double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

TensorBuf forward(const Model& model, const TensorBuf& x, ForwardCache* cache) {
    if (cache) {
        cache->inputs.clear();
        cache->pool_arg.assign(model.size(), {});
    }
    TensorBuf cur = x;
    for (std::size_t li = 0; li < model.size(); ++li) {
        const Layer& l = model[li];
        auto [r, c] = output_shape(l, cur.rows, cur.cols);
        if (cache) cache->inputs.push_back(cur);
        TensorBuf next(r, c);
        switch (l.kind) {
            case LayerKind::Conv1d:
                forward_conv1d(l, cur, next);
                break;
            case LayerKind::ReLU:
                for (std::size_t i = 0; i < cur.size(); ++i)
                    next.data[i] = cur.data[i] > 0.0 ? cur.data[i] : 0.0;
                break;
            case LayerKind::MaxPool1d:
                forward_maxpool(l, cur, next, cache ? &cache->pool_arg[li] : nullptr);
                break;
            case LayerKind::Dense:
                forward_dense(l, cur, next);
                break;
            case LayerKind::Softmax: {
                auto sm = softmax(cur.data);
                std::copy(sm.begin(), sm.end(), next.data.begin());
                break;
            }
        }
        cur = std::move(next);
    }
    if (cache) cache->output = cur;
    return cur;
}

void Gradients::init_like(const Model& model) {
    weights.resize(model.size());
    bias.resize(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) {
        weights[i].assign(model[i].weights.size(), 0.0);
        bias[i].assign(model[i].bias.size(), 0.0);
    }
}

void Gradients::accumulate(const Gradients& other, double s) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
        for (std::size_t j = 0; j < weights[i].size(); ++j) weights[i][j] += s * other.weights[i][j];
        for (std::size_t j = 0; j < bias[i].size(); ++j) bias[i][j] += s * other.bias[i][j];
    }
}

void Gradients::scale(double s) {
    for (auto& w : weights)
        for (double& v : w) v *= s;
    for (auto& b : bias)
        for (double& v : b) v *= s;
}

TensorBuf backward(const Model& model, const ForwardCache& cache, const TensorBuf& grad_out,
                   Gradients& grads) {
    if (cache.inputs.size() != model.size())
        throw std::invalid_argument("backward: cache does not match model");
    if (grads.weights.size() != model.size()) grads.init_like(model);

    TensorBuf g = grad_out;
    for (std::size_t li = model.size(); li-- > 0;) {
        const Layer& l = model[li];
        const TensorBuf& x = cache.inputs[li];
        TensorBuf gx(x.rows, x.cols);
        switch (l.kind) {
            case LayerKind::Conv1d: {
                for (std::size_t oc = 0; oc < l.out_ch; ++oc) {
                    for (std::size_t t = 0; t < g.cols; ++t) {
                        const double go = g.at(oc, t);
                        if (go == 0.0) continue;
                        grads.bias[li][oc] += go;
                        const std::size_t base = t * l.stride;
                        for (std::size_t ic = 0; ic < l.in_ch; ++ic) {
                            double* wg = &grads.weights[li][(oc * l.in_ch + ic) * l.kernel];
                            const double* w = &l.weights[(oc * l.in_ch + ic) * l.kernel];
                            const double* xin = &x.data[ic * x.cols + base];
                            double* gxin = &gx.data[ic * gx.cols + base];
                            for (std::size_t k = 0; k < l.kernel; ++k) {
                                wg[k] += go * xin[k];
                                gxin[k] += go * w[k];
                            }
                        }
                    }
                }
                break;
            }
            case LayerKind::ReLU: {
                for (std::size_t i = 0; i < x.size(); ++i)
                    gx.data[i] = x.data[i] > 0.0 ? g.data[i] : 0.0;
                break;
            }
            case LayerKind::MaxPool1d: {
                const auto& arg = cache.pool_arg[li];
                for (std::size_t c = 0; c < x.rows; ++c)
                    for (std::size_t t = 0; t < g.cols; ++t)
                        gx.data[c * gx.cols + arg[c * g.cols + t]] += g.at(c, t);
                break;
            }
            case LayerKind::Dense: {
                for (std::size_t o = 0; o < l.out_dim; ++o) {
                    const double go = g.data[o];
                    grads.bias[li][o] += go;
                    if (go == 0.0) continue;
                    double* wg = &grads.weights[li][o * l.in_dim];
                    const double* w = &l.weights[o * l.in_dim];
                    for (std::size_t i = 0; i < l.in_dim; ++i) {
                        wg[i] += go * x.data[i];
                        gx.data[i] += go * w[i];
                    }
                }
                break;
            }
            case LayerKind::Softmax: {
                // dx_i = y_i * (g_i - sum_j g_j y_j)
                auto y = softmax(x.data);
                double dot = 0.0;
                for (std::size_t i = 0; i < y.size(); ++i) dot += g.data[i] * y[i];
                for (std::size_t i = 0; i < y.size(); ++i)
                    gx.data[i] = y[i] * (g.data[i] - dot);
                break;
            }
        }
        g = std::move(gx);
    }
    return g;
}

JointLoss loss_ce_smoothl1(const TensorBuf& logits, int class_target, double pos_pred,
                           std::optional<double> pos_target, double lambda) {
    if (class_target < 0 || static_cast<std::size_t>(class_target) >= logits.size())
        throw std::invalid_argument("loss: label index out of range");

    JointLoss out;
    auto probs = softmax(logits.data);
    out.ce = -std::log(std::max(probs[static_cast<std::size_t>(class_target)], 1e-300));
    out.dlogits = probs;
    out.dlogits[static_cast<std::size_t>(class_target)] -= 1.0;

    if (class_target != 0) {
        if (!pos_target.has_value())
            throw std::invalid_argument("loss: faulty class requires a position target");
        const double d = pos_pred - *pos_target;
        if (std::abs(d) < 1.0) {
            out.pos = lambda * 0.5 * d * d;
            out.dpos = lambda * d;
        } else {
            out.pos = lambda * (std::abs(d) - 0.5);
            out.dpos = lambda * (d > 0.0 ? 1.0 : -1.0);
        }
    }
    out.loss = out.ce + out.pos;
    return out;
}

void OptimizerState::init_like(const Model& model) {
    step = 0;
    m_w.resize(model.size());
    v_w.resize(model.size());
    m_b.resize(model.size());
    v_b.resize(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) {
        m_w[i].assign(model[i].weights.size(), 0.0);
        v_w[i].assign(model[i].weights.size(), 0.0);
        m_b[i].assign(model[i].bias.size(), 0.0);
        v_b[i].assign(model[i].bias.size(), 0.0);
    }
}

namespace {

void adam_update(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                 std::vector<double>& v, const OptimizerState& s, double c1, double c2) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        p[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
    }
}

}  // namespace

void adam_step(Model& model, const Gradients& grads, OptimizerState& state) {
    if (state.m_w.size() != model.size()) state.init_like(model);
    for (std::size_t i = 0; i < model.size(); ++i)
        if (grads.weights[i].size() != model[i].weights.size() ||
            grads.bias[i].size() != model[i].bias.size())
            throw std::invalid_argument("adam_step: gradient shape mismatch");

    state.step += 1;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < model.size(); ++i) {
        adam_update(model[i].weights, grads.weights[i], state.m_w[i], state.v_w[i], state, c1, c2);
        adam_update(model[i].bias, grads.bias[i], state.m_b[i], state.v_b[i], state, c1, c2);
    }
}

}  // namespace otdr::nn
