#include "rinf/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rinf/errors.hpp"
#include "rinf/rng.hpp"

namespace rinf::nn {

namespace {

Eigen::Vector2d softmax2(double g0, double g1) {
    const double m = std::max(g0, g1);
    const double e0 = std::exp(g0 - m);
    const double e1 = std::exp(g1 - m);
    const double z = e0 + e1;
    return {e0 / z, e1 / z};
}

struct ForwardTrace {
    Vector a1;  // tanh(W1 x + b1)
    Vector a2;  // tanh(W2 a1 + b2)
    Eigen::Vector2d logits;
};

ForwardTrace forward_trace(const std::array<Matrix, 3>& w, const std::array<Vector, 3>& b,
                           const Vector& x) {
    ForwardTrace t;
    t.a1 = (w[0] * x + b[0]).array().tanh();
    t.a2 = (w[1] * t.a1 + b[1]).array().tanh();
    t.logits = w[2] * t.a2 + b[2];
    return t;
}

} // namespace

MlpClassifier MlpClassifier::init_random(int input_dim, std::pair<int, int> hidden_sizes,
                                         std::uint64_t seed, double init_scale) {
    if (input_dim < 1 || hidden_sizes.first < 1 || hidden_sizes.second < 1)
        throw ConfigError("init_random: all layer sizes must be positive");
    if (init_scale <= 0.0)
        throw ConfigError("init_random: init_scale must be positive");

    MlpClassifier m;
    const std::array<int, 4> dims{input_dim, hidden_sizes.first, hidden_sizes.second, 2};
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int l = 0; l < 3; ++l) {
        const double bound = init_scale / std::sqrt(static_cast<double>(dims[l]));
        m.weights_[l] = Matrix(dims[l + 1], dims[l]);
        for (int r = 0; r < m.weights_[l].rows(); ++r)
            for (int c = 0; c < m.weights_[l].cols(); ++c)
                m.weights_[l](r, c) = bound * unit(rng);
        m.biases_[l] = Vector::Zero(dims[l + 1]);
    }
    return m;
}

void MlpClassifier::check_input(const Vector& x) const {
    if (x.size() != weights_[0].cols())
        throw ShapeError("input dimension " + std::to_string(x.size()) + " != model input dim " +
                         std::to_string(weights_[0].cols()));
}

std::pair<double, double> MlpClassifier::forward_logits(const Vector& x) const {
    check_input(x);
    const auto t = forward_trace(weights_, biases_, x);
    return {t.logits(0), t.logits(1)};
}

int MlpClassifier::predict(const Vector& x) const {
    const auto [g0, g1] = forward_logits(x);
    return g1 > g0 ? 1 : 0;
}

std::pair<double, ParamGradient> MlpClassifier::loss_and_gradient(const Vector& x, int y) const {
    check_input(x);
    if (y != 0 && y != 1) throw ConfigError("label must be 0 or 1");
    if (!x.allFinite()) throw NumericError("loss_and_gradient: non-finite input");

    const auto t = forward_trace(weights_, biases_, x);
    const Eigen::Vector2d p = softmax2(t.logits(0), t.logits(1));
    const double loss = -std::log(std::max(p(y), 1e-300));

    // dL/dg = softmax - onehot
    Eigen::Vector2d dg = p;
    dg(y) -= 1.0;

    ParamGradient g;
    g.weights[2] = dg * t.a2.transpose();
    g.biases[2] = dg;

    Vector da2 = weights_[2].transpose() * dg;
    Vector dz2 = da2.array() * (1.0 - t.a2.array().square());
    g.weights[1] = dz2 * t.a1.transpose();
    g.biases[1] = dz2;

    Vector da1 = weights_[1].transpose() * dz2;
    Vector dz1 = da1.array() * (1.0 - t.a1.array().square());
    g.weights[0] = dz1 * x.transpose();
    g.biases[0] = dz1;

    return {loss, std::move(g)};
}

Vector MlpClassifier::input_gradient(const Vector& x, int y) const {
    check_input(x);
    if (!x.allFinite()) throw NumericError("input_gradient: non-finite input");
    const auto t = forward_trace(weights_, biases_, x);
    Eigen::Vector2d dg = softmax2(t.logits(0), t.logits(1));
    dg(y) -= 1.0;
    Vector dz2 = (weights_[2].transpose() * dg).array() * (1.0 - t.a2.array().square());
    Vector dz1 = (weights_[1].transpose() * dz2).array() * (1.0 - t.a1.array().square());
    return weights_[0].transpose() * dz1;
}

void MlpClassifier::apply_gradient(const ParamGradient& grad, double lr) {
    for (int l = 0; l < 3; ++l) {
        weights_[l] -= lr * grad.weights[l];
        biases_[l] -= lr * grad.biases[l];
    }
}

void MlpClassifier::sgd_step(const Vector& x, int y, double lr) {
    if (lr < 0.0) throw ConfigError("learning rate must be nonnegative");
    auto [loss, grad] = loss_and_gradient(x, y);
    (void)loss;
    apply_gradient(grad, lr);
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (epochs < 0) throw ConfigError("epochs must be nonnegative");
    if (init_scale <= 0.0) throw ConfigError("init_scale must be positive");
    if (hidden_sizes.first < 1 || hidden_sizes.second < 1)
        throw ConfigError("hidden sizes must be positive");
}

MlpClassifier train(MlpClassifier model, const data::Dataset& dataset, const TrainConfig& cfg) {
    cfg.validate();
    if (dataset.size() == 0) throw DataError("train: empty dataset");
    const bool has0 = std::find(dataset.labels.begin(), dataset.labels.end(), 0) != dataset.labels.end();
    const bool has1 = std::find(dataset.labels.begin(), dataset.labels.end(), 1) != dataset.labels.end();
    if (!has0 || !has1) throw DataError("train: both classes must be present");

    std::vector<int> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    auto rng = make_rng(derive_seed(cfg.seed, 0x747261696eULL));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (int i : order) model.sgd_step(dataset.row(i), dataset.labels[i], cfg.learning_rate);
    }
    return model;
}

double f1_score(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.size() != y_pred.size())
        throw ShapeError("f1_score: length mismatch");
    if (y_true.empty()) throw ShapeError("f1_score: empty input");
    int tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_pred[i] == 1 && y_true[i] == 1) ++tp;
        else if (y_pred[i] == 1 && y_true[i] == 0) ++fp;
        else if (y_pred[i] == 0 && y_true[i] == 1) ++fn;
    }
    const double denom = 2.0 * tp + fp + fn;
    return denom == 0.0 ? 0.0 : 2.0 * tp / denom;
}

double f1_on(const MlpClassifier& model, const data::Dataset& dataset) {
    std::vector<int> pred(dataset.size());
    for (int i = 0; i < dataset.size(); ++i) pred[i] = model.predict(dataset.row(i));
    return f1_score(dataset.labels, pred);
}

} // namespace rinf::nn
