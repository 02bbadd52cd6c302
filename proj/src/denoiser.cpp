#include "replimit/denoiser.hpp"

#include <cmath>

#include "replimit/errors.hpp"
#include "replimit/rng.hpp"

namespace replimit {

std::vector<double> time_embedding(int t, std::size_t dim) {
    std::vector<double> e(dim, 0.0);
    const std::size_t half = dim / 2;
    for (std::size_t i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
        e[i] = std::sin(t * freq);
        e[half + i] = std::cos(t * freq);
    }
    return e;
}

Eigen::MatrixXd assemble_input(const Eigen::MatrixXd& latents, std::span<const int> steps, const Eigen::MatrixXd& text,
                               const DenoiserConfig& config) {
    const auto batch = latents.rows();
    if (static_cast<std::size_t>(latents.cols()) != config.latent_dim ||
        static_cast<std::size_t>(text.cols()) != config.text_dim || text.rows() != batch ||
        steps.size() != static_cast<std::size_t>(batch))
        throw ContractError("assemble_input: shape mismatch");
    Eigen::MatrixXd x(batch, static_cast<Eigen::Index>(config.input_dim()));
    const auto L = static_cast<Eigen::Index>(config.latent_dim);
    const auto T = static_cast<Eigen::Index>(config.time_dim);
    x.leftCols(L) = latents;
    for (Eigen::Index i = 0; i < batch; ++i) {
        const auto te = time_embedding(steps[static_cast<std::size_t>(i)], config.time_dim);
        for (Eigen::Index k = 0; k < T; ++k) x(i, L + k) = te[static_cast<std::size_t>(k)];
    }
    x.rightCols(static_cast<Eigen::Index>(config.text_dim)) = text;
    return x;
}

namespace {

using Eigen::ArrayXXd;
using Eigen::Index;
using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;

ArrayXXd sigmoid(const ArrayXXd& a) { return 1.0 / (1.0 + (-a).exp()); }

}  // namespace

DenoiserNet::DenoiserNet(const DenoiserConfig& config)
    : config_(config), params_(VectorXd::Zero(static_cast<Index>(config.param_count()))) {
    if (config.latent_dim == 0 || config.hidden == 0) throw ContractError("denoiser needs latent_dim and hidden > 0");
}

DenoiserNet DenoiserNet::initialized(const DenoiserConfig& config, std::uint64_t seed) {
    DenoiserNet net(config);
    Rng rng(seed);
    const auto o = net.offsets();
    auto fill = [&](std::size_t offset, std::size_t fan_in, std::size_t count) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
        for (std::size_t i = 0; i < count; ++i) net.params_[static_cast<Index>(offset + i)] = scale * rng.normal();
    };
    fill(o.w1, config.input_dim(), config.input_dim() * config.hidden);
    fill(o.w2, config.hidden, config.hidden * config.hidden);
    fill(o.w3, config.hidden, config.hidden * config.latent_dim);
    return net;
}

DenoiserNet::Offsets DenoiserNet::offsets() const {
    Offsets o{};
    const auto in = config_.input_dim(), h = config_.hidden, out = config_.latent_dim;
    o.w1 = 0;
    o.b1 = o.w1 + in * h;
    o.w2 = o.b1 + h;
    o.b2 = o.w2 + h * h;
    o.w3 = o.b2 + h;
    o.b3 = o.w3 + h * out;
    return o;
}

namespace {

struct Layers {
    Map<const MatrixXd> w1, w2, w3;
    Map<const VectorXd> b1, b2, b3;
};

struct Activations {
    MatrixXd a1, h1, a2, h2, y;
};

Activations run_forward(const Layers& p, const MatrixXd& x) {
    Activations act;
    act.a1 = x * p.w1;
    act.a1.rowwise() += p.b1.transpose();
    act.h1 = (act.a1.array() * sigmoid(act.a1.array())).matrix();
    act.a2 = act.h1 * p.w2;
    act.a2.rowwise() += p.b2.transpose();
    act.h2 = (act.a2.array() * sigmoid(act.a2.array())).matrix();
    act.y = act.h2 * p.w3;
    act.y.rowwise() += p.b3.transpose();
    return act;
}

// d silu(a) / da = s (1 + a (1 - s)), s = sigmoid(a)
ArrayXXd silu_grad(const MatrixXd& a) {
    const ArrayXXd s = sigmoid(a.array());
    return s * (1.0 + a.array() * (1.0 - s));
}

}  // namespace

struct DenoiserNet::View {
    Index in, hid, out;
    Layers p;
};

DenoiserNet::View DenoiserNet::view() const {
    const auto o = offsets();
    const auto in = static_cast<Index>(config_.input_dim());
    const auto hid = static_cast<Index>(config_.hidden);
    const auto out = static_cast<Index>(config_.latent_dim);
    const double* d = params_.data();
    return {in, hid, out,
            Layers{Map<const MatrixXd>(d + o.w1, in, hid), Map<const MatrixXd>(d + o.w2, hid, hid),
                   Map<const MatrixXd>(d + o.w3, hid, out), Map<const VectorXd>(d + o.b1, hid),
                   Map<const VectorXd>(d + o.b2, hid), Map<const VectorXd>(d + o.b3, out)}};
}

MatrixXd DenoiserNet::forward(const MatrixXd& input) const {
    const auto [in, hid, out, p] = view();
    if (input.cols() != in) throw ContractError("denoiser: input width mismatch");
    return run_forward(p, input).y;
}

double DenoiserNet::loss(const MatrixXd& input, const MatrixXd& noise) const {
    const MatrixXd y = forward(input);
    if (noise.rows() != y.rows() || noise.cols() != y.cols()) throw ContractError("denoiser: noise shape mismatch");
    return (y - noise).squaredNorm() / static_cast<double>(y.size());
}

double DenoiserNet::loss_and_gradient(const MatrixXd& input, const MatrixXd& noise, VectorXd& grad) const {
    const auto o = offsets();
    const auto [in, hid, out, p] = view();
    if (input.cols() != in) throw ContractError("denoiser: input width mismatch");
    if (noise.rows() != input.rows() || noise.cols() != out) throw ContractError("denoiser: noise shape mismatch");
    const auto act = run_forward(p, input);
    const MatrixXd diff = act.y - noise;
    const double denom = static_cast<double>(diff.size());
    const double loss = diff.squaredNorm() / denom;

    grad.resize(params_.size());
    Map<MatrixXd> gw1(grad.data() + o.w1, in, hid), gw2(grad.data() + o.w2, hid, hid), gw3(grad.data() + o.w3, hid, out);
    Map<VectorXd> gb1(grad.data() + o.b1, hid), gb2(grad.data() + o.b2, hid), gb3(grad.data() + o.b3, out);

    const MatrixXd dy = (2.0 / denom) * diff;
    gw3.noalias() = act.h2.transpose() * dy;
    gb3 = dy.colwise().sum().transpose();
    const MatrixXd da2 = ((dy * p.w3.transpose()).array() * silu_grad(act.a2)).matrix();
    gw2.noalias() = act.h1.transpose() * da2;
    gb2 = da2.colwise().sum().transpose();
    const MatrixXd da1 = ((da2 * p.w2.transpose()).array() * silu_grad(act.a1)).matrix();
    gw1.noalias() = input.transpose() * da1;
    gb1 = da1.colwise().sum().transpose();
    return loss;
}

double mse_loss(std::span<const double> noise, std::span<const double> predicted) {
    if (noise.size() != predicted.size() || noise.empty()) throw ContractError("mse_loss: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < noise.size(); ++i) {
        const double d = noise[i] - predicted[i];
        s += d * d;
    }
    return s / static_cast<double>(noise.size());
}

Adam::Adam(std::size_t n, AdamConfig config)
    : config_(config), m_(VectorXd::Zero(static_cast<Index>(n))), v_(VectorXd::Zero(static_cast<Index>(n))) {}

void Adam::step(VectorXd& params, const VectorXd& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) throw ContractError("Adam: size mismatch");
    ++steps_;
    m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * grad;
    v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
    params.array() -= config_.lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + config_.eps);
}

}  // namespace replimit
