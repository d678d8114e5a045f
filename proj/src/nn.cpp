#include "faircv/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace faircv::nn {

namespace {

constexpr double kLogFloor = 1e-12;

void check_mul(const Matrix& a, const Matrix& b, const char* what) {
    if (a.cols != b.rows) {
        throw DataError(std::string(what) + ": inner dimensions disagree (" + std::to_string(a.cols) + " vs " +
                        std::to_string(b.rows) + ")");
    }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_mul(a, b, "matmul");
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + static_cast<size_t>(i) * a.cols;
        double* crow = c.data.data() + static_cast<size_t>(i) * c.cols;
        for (int k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.data.data() + static_cast<size_t>(k) * b.cols;
            for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) throw DataError("matmul_tn: row counts disagree");
    Matrix c(a.cols, b.cols);
    for (int k = 0; k < a.rows; ++k) {
        const double* arow = a.data.data() + static_cast<size_t>(k) * a.cols;
        const double* brow = b.data.data() + static_cast<size_t>(k) * b.cols;
        for (int i = 0; i < a.cols; ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            double* crow = c.data.data() + static_cast<size_t>(i) * c.cols;
            for (int j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) throw DataError("matmul_nt: column counts disagree");
    Matrix c(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + static_cast<size_t>(i) * a.cols;
        for (int j = 0; j < b.rows; ++j) {
            const double* brow = b.data.data() + static_cast<size_t>(j) * b.cols;
            double sum = 0.0;
            for (int k = 0; k < a.cols; ++k) sum += arow[k] * brow[k];
            c.at(i, j) = sum;
        }
    }
    return c;
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::ReLU: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Tanh: return "tanh";
        case Activation::Softmax: return "softmax";
    }
    return "?";
}

size_t MLP::parameter_count() const {
    size_t n = 0;
    for (const auto& layer : layers) n += layer.weights.data.size() + layer.bias.data.size();
    return n;
}

bool MLP::all_finite() const {
    for (const auto& layer : layers) {
        for (double w : layer.weights.data)
            if (!std::isfinite(w)) return false;
        for (double b : layer.bias.data)
            if (!std::isfinite(b)) return false;
    }
    return true;
}

MLP make_mlp(int input_dim, const std::vector<int>& widths, const std::vector<Activation>& activations, Rng& rng) {
    if (widths.size() != activations.size()) throw DataError("make_mlp: widths and activations must pair up");
    if (widths.empty()) throw DataError("make_mlp: at least one layer required");
    MLP net;
    net.input_dim = input_dim;
    int fan_in = input_dim;
    for (size_t l = 0; l < widths.size(); ++l) {
        Layer layer;
        const int fan_out = widths[l];
        layer.activation = activations[l];
        layer.weights = Matrix(fan_in, fan_out);
        layer.bias = Matrix(1, fan_out);
        const double limit = layer.activation == Activation::ReLU
                                 ? std::sqrt(6.0 / fan_in)
                                 : std::sqrt(6.0 / (fan_in + fan_out));
        for (double& w : layer.weights.data) w = (2.0 * rng.uniform() - 1.0) * limit;
        net.layers.push_back(std::move(layer));
        fan_in = fan_out;
    }
    return net;
}

namespace {

void apply_activation(Activation act, const Matrix& pre, Matrix& post) {
    post = pre;
    switch (act) {
        case Activation::Identity:
            break;
        case Activation::ReLU:
            for (double& v : post.data) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::Sigmoid:
            for (double& v : post.data) v = 1.0 / (1.0 + std::exp(-v));
            break;
        case Activation::Tanh:
            for (double& v : post.data) v = std::tanh(v);
            break;
        case Activation::Softmax:
            for (int r = 0; r < post.rows; ++r) {
                auto row = post.row(r);
                const double mx = *std::max_element(row.begin(), row.end());
                double sum = 0.0;
                for (double& v : row) {
                    v = std::exp(v - mx);
                    sum += v;
                }
                for (double& v : row) v /= sum;
            }
            break;
    }
}

}  // namespace

ForwardTrace forward(const MLP& net, const Matrix& batch) {
    if (batch.cols != net.input_dim) {
        throw DataError("forward: batch width " + std::to_string(batch.cols) + " does not match input_dim " +
                        std::to_string(net.input_dim));
    }
    ForwardTrace trace;
    trace.input = batch;
    trace.pre.reserve(net.layers.size());
    trace.post.reserve(net.layers.size());
    const Matrix* current = &trace.input;
    for (size_t l = 0; l < net.layers.size(); ++l) {
        const Layer& layer = net.layers[l];
        if (current->cols != layer.in_dim()) {
            throw DataError("forward: layer " + std::to_string(l) + " expects width " + std::to_string(layer.in_dim()) +
                            ", got " + std::to_string(current->cols));
        }
        Matrix pre = matmul(*current, layer.weights);
        for (int r = 0; r < pre.rows; ++r) {
            auto row = pre.row(r);
            for (int c = 0; c < pre.cols; ++c) row[c] += layer.bias.at(0, c);
        }
        Matrix post;
        apply_activation(layer.activation, pre, post);
        trace.pre.push_back(std::move(pre));
        trace.post.push_back(std::move(post));
        current = &trace.post.back();
    }
    return trace;
}

Matrix predict(const MLP& net, const Matrix& batch) { return forward(net, batch).output(); }

bool Gradients::all_finite() const {
    for (const auto& m : weights)
        for (double v : m.data)
            if (!std::isfinite(v)) return false;
    for (const auto& m : bias)
        for (double v : m.data)
            if (!std::isfinite(v)) return false;
    return true;
}

Gradients backward(const MLP& net, const ForwardTrace& trace, const Matrix& output_grad) {
    const size_t n_layers = net.layers.size();
    if (trace.pre.size() != n_layers || trace.input.cols != net.input_dim) {
        throw DataError("backward: trace does not match network");
    }
    if (!output_grad.same_shape(trace.post.back())) {
        throw DataError("backward: output gradient shape does not match forward output");
    }

    Gradients grads;
    grads.weights.resize(n_layers);
    grads.bias.resize(n_layers);

    Matrix delta;  // dLoss/dPost for the layer being processed
    for (size_t li = n_layers; li-- > 0;) {
        const Layer& layer = net.layers[li];
        const Matrix& pre = trace.pre[li];
        const Matrix& post = trace.post[li];
        const Matrix& upstream = (li == n_layers - 1) ? output_grad : delta;

        // dLoss/dPre through the activation
        Matrix dpre(pre.rows, pre.cols);
        switch (layer.activation) {
            case Activation::Identity:
                dpre = upstream;
                break;
            case Activation::ReLU:
                for (size_t i = 0; i < dpre.data.size(); ++i)
                    dpre.data[i] = pre.data[i] > 0.0 ? upstream.data[i] : 0.0;
                break;
            case Activation::Sigmoid:
                for (size_t i = 0; i < dpre.data.size(); ++i) {
                    const double a = post.data[i];
                    dpre.data[i] = upstream.data[i] * a * (1.0 - a);
                }
                break;
            case Activation::Tanh:
                for (size_t i = 0; i < dpre.data.size(); ++i) {
                    const double a = post.data[i];
                    dpre.data[i] = upstream.data[i] * (1.0 - a * a);
                }
                break;
            case Activation::Softmax:
                // dz_i = p_i * (da_i - sum_j p_j da_j), rowwise
                for (int r = 0; r < dpre.rows; ++r) {
                    auto p = post.row(r);
                    auto da = upstream.row(r);
                    double dot = 0.0;
                    for (int c = 0; c < dpre.cols; ++c) dot += p[c] * da[c];
                    auto dz = dpre.row(r);
                    for (int c = 0; c < dpre.cols; ++c) dz[c] = p[c] * (da[c] - dot);
                }
                break;
        }

        const Matrix& below = (li == 0) ? trace.input : trace.post[li - 1];
        grads.weights[li] = matmul_tn(below, dpre);
        grads.bias[li] = Matrix(1, layer.out_dim());
        for (int r = 0; r < dpre.rows; ++r)
            for (int c = 0; c < dpre.cols; ++c) grads.bias[li].at(0, c) += dpre.at(r, c);

        delta = matmul_nt(dpre, layer.weights);
    }
    grads.input = std::move(delta);
    return grads;
}

AdamState make_adam(const MLP& net, double lr) {
    AdamState state;
    state.lr = lr;
    for (const auto& layer : net.layers) {
        state.m_weights.emplace_back(layer.weights.rows, layer.weights.cols);
        state.v_weights.emplace_back(layer.weights.rows, layer.weights.cols);
        state.m_bias.emplace_back(1, layer.bias.cols);
        state.v_bias.emplace_back(1, layer.bias.cols);
    }
    return state;
}

namespace {

void adam_update(std::vector<double>& params, const std::vector<double>& grads, std::vector<double>& m,
                 std::vector<double>& v, const AdamState& s) {
    const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
    const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
    for (size_t i = 0; i < params.size(); ++i) {
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grads[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grads[i] * grads[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        params[i] -= s.lr * m_hat / (std::sqrt(v_hat) + s.epsilon);
    }
}

}  // namespace

void adam_step(MLP& net, const Gradients& grads, AdamState& state) {
    if (grads.weights.size() != net.layers.size()) throw DataError("adam_step: gradient shapes do not match network");
    if (!grads.all_finite()) throw NumericalError("adam_step: non-finite gradient");
    state.t += 1;
    for (size_t l = 0; l < net.layers.size(); ++l) {
        if (!grads.weights[l].same_shape(net.layers[l].weights) || !grads.bias[l].same_shape(net.layers[l].bias)) {
            throw DataError("adam_step: gradient shape mismatch at layer " + std::to_string(l));
        }
        adam_update(net.layers[l].weights.data, grads.weights[l].data, state.m_weights[l].data, state.v_weights[l].data,
                    state);
        adam_update(net.layers[l].bias.data, grads.bias[l].data, state.m_bias[l].data, state.v_bias[l].data, state);
    }
}

LossResult mae_loss(const Matrix& pred, const Matrix& target) {
    if (!pred.same_shape(target)) throw DataError("mae_loss: prediction/target shapes disagree");
    if (pred.data.empty()) throw DataError("mae_loss: empty batch");
    LossResult result;
    result.grad = Matrix(pred.rows, pred.cols);
    const double inv_n = 1.0 / static_cast<double>(pred.data.size());
    double sum = 0.0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const double r = pred.data[i] - target.data[i];
        sum += std::abs(r);
        result.grad.data[i] = r > 0.0 ? inv_n : (r < 0.0 ? -inv_n : 0.0);
    }
    result.value = sum * inv_n;
    return result;
}

LossResult ce_loss(const Matrix& softmax_out, const std::vector<int>& classes) {
    if (softmax_out.rows == 0) throw DataError("ce_loss: empty batch");
    if (static_cast<int>(classes.size()) != softmax_out.rows) throw DataError("ce_loss: one label per row required");
    LossResult result;
    result.grad = Matrix(softmax_out.rows, softmax_out.cols);
    const double inv_n = 1.0 / softmax_out.rows;
    double sum = 0.0;
    for (int r = 0; r < softmax_out.rows; ++r) {
        const int c = classes[static_cast<size_t>(r)];
        if (c < 0 || c >= softmax_out.cols) throw DataError("ce_loss: label out of range at row " + std::to_string(r));
        const double p = std::max(softmax_out.at(r, c), kLogFloor);
        sum += -std::log(p);
        result.grad.at(r, c) = -inv_n / p;
    }
    result.value = sum * inv_n;
    return result;
}

double confusion_term(std::span<const double> softmax_row) {
    double entropy = 0.0;
    for (double p : softmax_row) {
        if (p > 0.0) entropy -= p * std::log(p);
    }
    return std::log(static_cast<double>(softmax_row.size())) - entropy;
}

LossResult confusion_loss(const Matrix& softmax_out) {
    if (softmax_out.rows == 0) throw DataError("confusion_loss: empty batch");
    LossResult result;
    result.grad = Matrix(softmax_out.rows, softmax_out.cols);
    const double inv_n = 1.0 / softmax_out.rows;
    double sum = 0.0;
    for (int r = 0; r < softmax_out.rows; ++r) {
        auto p = softmax_out.row(r);
        sum += confusion_term(p);
        auto g = result.grad.row(r);
        for (int c = 0; c < softmax_out.cols; ++c) {
            g[c] = (std::log(std::max(p[c], kLogFloor)) + 1.0) * inv_n;
        }
    }
    result.value = sum * inv_n;
    return result;
}

LossResult uniform_ce_loss(const Matrix& softmax_out) {
    if (softmax_out.rows == 0) throw DataError("uniform_ce_loss: empty batch");
    LossResult result;
    result.grad = Matrix(softmax_out.rows, softmax_out.cols);
    const double inv_n = 1.0 / softmax_out.rows;
    const double inv_k = 1.0 / softmax_out.cols;
    double sum = 0.0;
    for (int r = 0; r < softmax_out.rows; ++r) {
        auto p = softmax_out.row(r);
        auto g = result.grad.row(r);
        for (int c = 0; c < softmax_out.cols; ++c) {
            const double pc = std::max(p[c], kLogFloor);
            sum += -inv_k * std::log(pc);
            g[c] = -inv_k * inv_n / pc;
        }
    }
    result.value = sum * inv_n;
    return result;
}

int argmax_row(std::span<const double> row) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(row.size()); ++i) {
        if (row[static_cast<size_t>(i)] > row[static_cast<size_t>(best)]) best = i;
    }
    return best;
}

double accuracy(const Matrix& softmax_out, const std::vector<int>& labels) {
    if (softmax_out.rows == 0) throw DataError("accuracy: empty input");
    if (static_cast<int>(labels.size()) != softmax_out.rows) throw DataError("accuracy: one label per row required");
    int correct = 0;
    for (int r = 0; r < softmax_out.rows; ++r) {
        if (argmax_row(softmax_out.row(r)) == labels[static_cast<size_t>(r)]) ++correct;
    }
    return static_cast<double>(correct) / softmax_out.rows;
}

namespace {

Matrix take_rows(const Matrix& m, const std::vector<size_t>& order, size_t begin, size_t end) {
    Matrix out(static_cast<int>(end - begin), m.cols);
    for (size_t i = begin; i < end; ++i) {
        const auto src = m.row(static_cast<int>(order[i]));
        std::copy(src.begin(), src.end(), out.row(static_cast<int>(i - begin)).begin());
    }
    return out;
}

// Shared minibatch loop; `batch_loss` runs forward+loss and returns the output
// gradient, `full_loss` evaluates the epoch metric on a whole set.
template <typename BatchLoss, typename FullLoss>
TrainHistory train_loop(MLP& net, int n_samples, const TrainOptions& options, BatchLoss&& batch_loss,
                        FullLoss&& full_loss) {
    if (n_samples == 0) throw DataError("train: empty training set");
    if (options.epochs < 1 || options.batch_size < 1) throw ConfigError("train: epochs and batch size must be >= 1");

    Rng rng(options.seed);
    AdamState adam = make_adam(net, options.lr);
    std::vector<size_t> order(static_cast<size_t>(n_samples));
    std::iota(order.begin(), order.end(), size_t{0});

    TrainHistory history;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        rng.shuffle(order);
        const size_t batch = static_cast<size_t>(options.batch_size);
        for (size_t start = 0; start < order.size(); start += batch) {
            const size_t end = std::min(start + batch, order.size());
            const double loss = batch_loss(net, adam, order, start, end);
            if (!std::isfinite(loss)) {
                throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                     std::to_string(start / batch));
            }
        }
        if (!net.all_finite()) {
            throw NumericalError("train: non-finite parameters after epoch " + std::to_string(epoch));
        }
        auto [train_l, val_l] = full_loss(net);
        history.train_loss.push_back(train_l);
        history.val_loss.push_back(val_l);
    }
    return history;
}

}  // namespace

TrainHistory train_regression(MLP& net, const Matrix& x, const Matrix& y, const Matrix& x_val, const Matrix& y_val,
                              const TrainOptions& options) {
    if (x.rows != y.rows) throw DataError("train_regression: input/target row counts disagree");
    if (x_val.rows != y_val.rows) throw DataError("train_regression: validation row counts disagree");
    if (x_val.rows == 0) throw DataError("train_regression: empty validation set");
    return train_loop(
        net, x.rows, options,
        [&](MLP& n, AdamState& adam, const std::vector<size_t>& order, size_t begin, size_t end) {
            const Matrix xb = take_rows(x, order, begin, end);
            const Matrix yb = take_rows(y, order, begin, end);
            const ForwardTrace trace = forward(n, xb);
            const LossResult loss = mae_loss(trace.output(), yb);
            adam_step(n, backward(n, trace, loss.grad), adam);
            return loss.value;
        },
        [&](const MLP& n) {
            const double train_l = mae_loss(predict(n, x), y).value;
            const double val_l = mae_loss(predict(n, x_val), y_val).value;
            return std::pair{train_l, val_l};
        });
}

TrainHistory train_classifier(MLP& net, const Matrix& x, const std::vector<int>& labels, const Matrix& x_val,
                              const std::vector<int>& val_labels, const TrainOptions& options) {
    if (static_cast<int>(labels.size()) != x.rows) throw DataError("train_classifier: one label per row required");
    if (static_cast<int>(val_labels.size()) != x_val.rows || x_val.rows == 0) {
        throw DataError("train_classifier: invalid validation set");
    }
    return train_loop(
        net, x.rows, options,
        [&](MLP& n, AdamState& adam, const std::vector<size_t>& order, size_t begin, size_t end) {
            const Matrix xb = take_rows(x, order, begin, end);
            std::vector<int> lb(end - begin);
            for (size_t i = begin; i < end; ++i) lb[i - begin] = labels[order[i]];
            const ForwardTrace trace = forward(n, xb);
            const LossResult loss = ce_loss(trace.output(), lb);
            adam_step(n, backward(n, trace, loss.grad), adam);
            return loss.value;
        },
        [&](const MLP& n) {
            const double train_l = ce_loss(predict(n, x), labels).value;
            const double val_l = ce_loss(predict(n, x_val), val_labels).value;
            return std::pair{train_l, val_l};
        });
}

namespace {

constexpr char kModelMagic[4] = {'F', 'C', 'N', 'N'};
constexpr uint32_t kModelVersion = 1;

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("model file truncated");
    return v;
}

}  // namespace

void save_model(const MLP& net, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open model file for writing: " + path.string());
    out.write(kModelMagic, 4);
    write_raw(out, kModelVersion);
    write_raw(out, static_cast<uint32_t>(net.input_dim));
    write_raw(out, static_cast<uint32_t>(net.layers.size()));
    for (const auto& layer : net.layers) {
        write_raw(out, static_cast<uint32_t>(layer.out_dim()));
        write_raw(out, static_cast<uint32_t>(layer.activation));
    }
    for (const auto& layer : net.layers) {
        out.write(reinterpret_cast<const char*>(layer.weights.data.data()),
                  static_cast<std::streamsize>(layer.weights.data.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(layer.bias.data.data()),
                  static_cast<std::streamsize>(layer.bias.data.size() * sizeof(double)));
    }
    if (!out) throw DataError("failed writing model file: " + path.string());
}

MLP load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kModelMagic, 4) != 0) throw DataError("not a model file: " + path.string());
    const auto version = read_raw<uint32_t>(in);
    if (version != kModelVersion) throw DataError("unsupported model version " + std::to_string(version));
    MLP net;
    net.input_dim = static_cast<int>(read_raw<uint32_t>(in));
    const auto n_layers = read_raw<uint32_t>(in);
    int fan_in = net.input_dim;
    for (uint32_t l = 0; l < n_layers; ++l) {
        Layer layer;
        const int out_dim = static_cast<int>(read_raw<uint32_t>(in));
        const auto act = read_raw<uint32_t>(in);
        if (act > static_cast<uint32_t>(Activation::Softmax)) throw DataError("model file has unknown activation");
        layer.activation = static_cast<Activation>(act);
        layer.weights = Matrix(fan_in, out_dim);
        layer.bias = Matrix(1, out_dim);
        net.layers.push_back(std::move(layer));
        fan_in = out_dim;
    }
    for (auto& layer : net.layers) {
        in.read(reinterpret_cast<char*>(layer.weights.data.data()),
                static_cast<std::streamsize>(layer.weights.data.size() * sizeof(double)));
        in.read(reinterpret_cast<char*>(layer.bias.data.data()),
                static_cast<std::streamsize>(layer.bias.data.size() * sizeof(double)));
        if (!in) throw DataError("model file truncated: " + path.string());
    }
    return net;
}

}  // namespace faircv::nn
