#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "faircv/common.hpp"

namespace faircv::nn {

// Dense row-major matrix of doubles. Rows index samples throughout.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), 0.0) {}

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    std::span<double> row(int r) { return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)}; }
    std::span<const double> row(int r) const {
        return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
    }

    bool same_shape(const Matrix& other) const { return rows == other.rows && cols == other.cols; }
    bool operator==(const Matrix&) const = default;
};

// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// C = A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);

enum class Activation : uint32_t { Identity = 0, ReLU = 1, Sigmoid = 2, Tanh = 3, Softmax = 4 };

std::string to_string(Activation a);

struct Layer {
    Matrix weights;  // in x out
    Matrix bias;     // 1 x out
    Activation activation = Activation::Identity;

    int in_dim() const { return weights.rows; }
    int out_dim() const { return weights.cols; }
};

// Feedforward network. Layer dimensions chain; parameters stay finite for the
// whole lifetime of a training run (checked, aborts on NaN/Inf).
struct MLP {
    int input_dim = 0;
    std::vector<Layer> layers;

    int output_dim() const { return layers.empty() ? input_dim : layers.back().out_dim(); }
    size_t parameter_count() const;
    bool all_finite() const;
};

// He-uniform init for ReLU layers, Xavier-uniform for everything else.
MLP make_mlp(int input_dim, const std::vector<int>& widths, const std::vector<Activation>& activations, Rng& rng);

// Intermediate state of one forward pass, retained for backward().
struct ForwardTrace {
    Matrix input;
    std::vector<Matrix> pre;   // per layer, before activation
    std::vector<Matrix> post;  // per layer, after activation
    const Matrix& output() const { return post.empty() ? input : post.back(); }
};

ForwardTrace forward(const MLP& net, const Matrix& batch);

// Convenience single forward without retaining intermediates.
Matrix predict(const MLP& net, const Matrix& batch);

struct Gradients {
    std::vector<Matrix> weights;  // shapes mirror net.layers[i].weights
    std::vector<Matrix> bias;
    Matrix input;  // batch x input_dim, gradient w.r.t. the network input

    bool all_finite() const;
};

// Exact analytic gradients. `output_grad` is dLoss/dOutput for every sample;
// the loss functions below fold the 1/N batch averaging into it, so the
// returned parameter gradients are batch means.
Gradients backward(const MLP& net, const ForwardTrace& trace, const Matrix& output_grad);

struct AdamState {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long t = 0;
    std::vector<Matrix> m_weights, v_weights, m_bias, v_bias;
};

AdamState make_adam(const MLP& net, double lr = 0.001);

// Standard Adam update with bias correction. Throws NumericalError on
// non-finite gradients.
void adam_step(MLP& net, const Gradients& grads, AdamState& state);

struct LossResult {
    double value = 0.0;
    Matrix grad;  // w.r.t. predictions, 1/N already applied
};

// mean |pred - target|; subgradient at ties is 0.
LossResult mae_loss(const Matrix& pred, const Matrix& target);

// -log p_class per row, averaged. `softmax_out` must be the output of a
// Softmax layer.
LossResult ce_loss(const Matrix& softmax_out, const std::vector<int>& classes);

// log K - H(p) per row, averaged. Zero iff every row is uniform.
LossResult confusion_loss(const Matrix& softmax_out);

// Cross-entropy from the uniform distribution to p: -(1/K) sum_k log p_k per
// row, averaged. Minimized exactly at uniform output like confusion_loss, but
// its gradient does not vanish on confident rows; adversarial unlearning
// descends this one.
LossResult uniform_ce_loss(const Matrix& softmax_out);

// log K - H(p) for a single softmax row.
double confusion_term(std::span<const double> softmax_row);

struct TrainHistory {
    std::vector<double> train_loss;  // post-epoch full-set evaluations
    std::vector<double> val_loss;
};

struct TrainOptions {
    int epochs = 10;
    int batch_size = 128;
    double lr = 0.001;
    uint64_t seed = 0;
};

// Seeded-shuffle minibatch training; the last partial batch is trained on.
// Deterministic given the seed. Net is updated in place.
TrainHistory train_regression(MLP& net, const Matrix& x, const Matrix& y, const Matrix& x_val, const Matrix& y_val,
                              const TrainOptions& options);

TrainHistory train_classifier(MLP& net, const Matrix& x, const std::vector<int>& labels, const Matrix& x_val,
                              const std::vector<int>& val_labels, const TrainOptions& options);

// Fraction of rows whose argmax matches the label. Ties resolve to the lowest
// class index.
double accuracy(const Matrix& softmax_out, const std::vector<int>& labels);

int argmax_row(std::span<const double> row);

// Versioned binary checkpoint: header with dims/activations, then row-major
// parameters at full precision. Round-trip exact.
void save_model(const MLP& net, const std::filesystem::path& path);
MLP load_model(const std::filesystem::path& path);

}  // namespace faircv::nn
