#ifndef RINF_NEURALNET_HPP
#define RINF_NEURALNET_HPP

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <utility>

#include "rinf/data.hpp"

namespace rinf::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Parameter-shaped gradient: one matrix/vector per layer.
struct ParamGradient {
    std::array<Matrix, 3> weights;
    std::array<Vector, 3> biases;
};

// Feed-forward classifier with exactly two tanh hidden layers and two raw
// output logits (g0, g1). Trained with per-sample SGD on softmax
// cross-entropy; all gradients are computed by manual backpropagation.
class MlpClassifier {
public:
    MlpClassifier() = default;

    static MlpClassifier init_random(int input_dim, std::pair<int, int> hidden_sizes,
                                     std::uint64_t seed, double init_scale = 1.0);

    std::pair<double, double> forward_logits(const Vector& x) const;
    int predict(const Vector& x) const;

    // Softmax cross-entropy of the logits against y in {0,1} and its
    // gradient with respect to all parameters.
    std::pair<double, ParamGradient> loss_and_gradient(const Vector& x, int y) const;

    // Gradient of the same loss with respect to the input x.
    Vector input_gradient(const Vector& x, int y) const;

    // theta -= lr * grad
    void apply_gradient(const ParamGradient& grad, double lr);

    // One gradient-descent step on a single sample.
    void sgd_step(const Vector& x, int y, double lr);

    int input_dim() const { return static_cast<int>(weights_[0].cols()); }

    std::array<Matrix, 3> weights_;
    std::array<Vector, 3> biases_;

private:
    void check_input(const Vector& x) const;
};

struct TrainConfig {
    double learning_rate = 0.05;
    int epochs = 5;
    std::uint64_t seed = 0;
    double init_scale = 1.0;                 // scales the 1/sqrt(fan_in) init bound
    std::pair<int, int> hidden_sizes{16, 16};

    void validate() const;
};

// Full training run: `epochs` passes of per-sample SGD over a
// seed-determined shuffle. Deterministic for a fixed config.
MlpClassifier train(MlpClassifier model, const data::Dataset& dataset, const TrainConfig& cfg);

// F1 with positive class y=1; 0 when precision+recall is 0.
double f1_score(std::span<const int> y_true, std::span<const int> y_pred);

double f1_on(const MlpClassifier& model, const data::Dataset& dataset);

} // namespace rinf::nn

#endif // RINF_NEURALNET_HPP
