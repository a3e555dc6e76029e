#pragma once

#include "eps/rng.hpp"
#include "eps/tensor.hpp"

#include <cstddef>

namespace eps {

enum class Padding { Symmetric, Causal };
enum class Mode { Train, Eval };

// Dilated 1-D cross-correlation, zero padded so output length equals input length.
// Symmetric: d*(k-1)/2 on each side (floor left, ceil right when odd).
// Causal: d*(k-1) on the left only.
class Conv1d {
public:
    Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size, std::size_t dilation,
           Padding padding = Padding::Symmetric);

    // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and bias.
    void initialize(Rng& rng);

    // [B, in, L] -> [B, out, L]
    Tensor forward(const Tensor& x) const;
    // Accumulates into grad_weight/grad_bias; returns dL/dx.
    Tensor backward(const Tensor& x, const Tensor& grad_out);

    std::size_t in_channels() const noexcept { return in_; }
    std::size_t out_channels() const noexcept { return out_; }
    std::size_t kernel_size() const noexcept { return k_; }
    std::size_t dilation() const noexcept { return d_; }
    Padding padding() const noexcept { return padding_; }
    std::size_t left_pad() const noexcept;

    Tensor weight;  // [out, in, k]
    Tensor bias;    // [out]
    Tensor grad_weight;
    Tensor grad_bias;

private:
    void check_input(const Tensor& x) const;

    std::size_t in_, out_, k_, d_;
    Padding padding_;
};

// Per-channel batch normalization over (batch, length).
// Train mode normalizes with the biased batch variance and folds the unbiased
// variance into the running estimate; eval mode uses the running statistics.
class BatchNorm1d {
public:
    explicit BatchNorm1d(std::size_t channels, double momentum = 0.1, double epsilon = 1e-5);

    Tensor forward(const Tensor& x, Mode mode);
    Tensor forward_eval(const Tensor& x) const;
    // Gradient for the mode used in the matching forward call.
    Tensor backward(const Tensor& x, const Tensor& grad_out, Mode mode);

    std::size_t channels() const noexcept { return channels_; }
    double momentum() const noexcept { return momentum_; }
    double epsilon() const noexcept { return epsilon_; }

    Tensor gamma;
    Tensor beta;
    Tensor running_mean;
    Tensor running_var;
    Tensor grad_gamma;
    Tensor grad_beta;

private:
    void check_input(const Tensor& x) const;
    void batch_stats(const Tensor& x, std::vector<double>& mean, std::vector<double>& var) const;

    std::size_t channels_;
    double momentum_;
    double epsilon_;
};

class Linear {
public:
    Linear(std::size_t in_features, std::size_t out_features);

    void initialize(Rng& rng);

    // [B, in] -> [B, out]
    Tensor forward(const Tensor& x) const;
    Tensor backward(const Tensor& x, const Tensor& grad_out);

    std::size_t in_features() const noexcept { return in_; }
    std::size_t out_features() const noexcept { return out_; }

    Tensor weight;  // [out, in]
    Tensor bias;    // [out]
    Tensor grad_weight;
    Tensor grad_bias;

private:
    std::size_t in_, out_;
};

Tensor relu(const Tensor& x);
// grad * (pre > 0)
Tensor relu_backward(const Tensor& pre, const Tensor& grad_out);

}  // namespace eps
