#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace replimit {

struct DenoiserConfig {
    std::size_t latent_dim = 64;
    std::size_t time_dim = 32;
    std::size_t text_dim = 64;
    std::size_t hidden = 256;

    std::size_t input_dim() const { return latent_dim + time_dim + text_dim; }
    std::size_t param_count() const {
        return input_dim() * hidden + hidden + hidden * hidden + hidden + hidden * latent_dim + latent_dim;
    }
    bool operator==(const DenoiserConfig&) const = default;
};

// Sinusoidal embedding of an integer step: sin(t f_i) for the first half,
// cos(t f_i) for the second, f_i = 10000^(-i/half).
std::vector<double> time_embedding(int t, std::size_t dim);

// Rows are samples: [noisy latent | time embedding | text embedding].
Eigen::MatrixXd assemble_input(const Eigen::MatrixXd& latents, std::span<const int> steps, const Eigen::MatrixXd& text,
                               const DenoiserConfig& config);

// Noise predictor: two hidden layers with x*sigmoid(x) activations and a linear
// output of latent dimension. All parameters live in one flat vector in the
// order W1, b1, W2, b2, W3, b3 (weights column-major, shaped in x out).
class DenoiserNet {
public:
    explicit DenoiserNet(const DenoiserConfig& config);  // all-zero parameters
    static DenoiserNet initialized(const DenoiserConfig& config, std::uint64_t seed);

    const DenoiserConfig& config() const { return config_; }
    const Eigen::VectorXd& params() const { return params_; }
    Eigen::VectorXd& params() { return params_; }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;

    // Mean squared error between predicted and true noise, averaged over
    // samples and latent components. Writes dLoss/dparams into grad.
    double loss_and_gradient(const Eigen::MatrixXd& input, const Eigen::MatrixXd& noise, Eigen::VectorXd& grad) const;
    double loss(const Eigen::MatrixXd& input, const Eigen::MatrixXd& noise) const;

    bool all_finite() const { return params_.allFinite(); }

private:
    struct Offsets {
        std::size_t w1, b1, w2, b2, w3, b3;
    };
    Offsets offsets() const;
    struct View;
    View view() const;

    DenoiserConfig config_;
    Eigen::VectorXd params_;
};

double mse_loss(std::span<const double> noise, std::span<const double> predicted);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    Adam(std::size_t n, AdamConfig config = {});
    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
    long steps() const { return steps_; }
    const AdamConfig& config() const { return config_; }

private:
    AdamConfig config_;
    Eigen::VectorXd m_;
    Eigen::VectorXd v_;
    long steps_ = 0;
};

}  // namespace replimit
