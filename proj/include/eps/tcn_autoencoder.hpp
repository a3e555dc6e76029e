#pragma once

#include "eps/layers.hpp"
#include "eps/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace eps {

// Architecture constants. The reference network is
//   encoder  TCNBlock(1->4, k=5, d=1), TCNBlock(4->8, k=5, d=2), flatten 8x36 -> 288
//   latent   Linear 288->10, Linear 10->288
//   decoder  reshape 288 -> 8x36, TCNBlock(8->4, k=5, d=1), TCNBlock(4->1, k=5, d=2)
// with TCNBlock = Conv1d -> BatchNorm1d -> ReLU. Smaller instances of the same
// topology are used by the gradient tests.
struct ArchConfig {
    std::size_t seq_len = 36;
    std::vector<std::size_t> channels{4, 8};
    std::vector<std::size_t> dilations{1, 2};
    std::size_t kernel_size = 5;
    std::size_t latent = 10;
    Padding padding = Padding::Symmetric;
    double bn_momentum = 0.1;
    double bn_epsilon = 1e-5;

    static ArchConfig reference() { return {}; }
    void validate() const;
    bool operator==(const ArchConfig&) const = default;
};

struct TcnBlock {
    TcnBlock(std::size_t in, std::size_t out, std::size_t k, std::size_t d, const ArchConfig& arch);

    Conv1d conv;
    BatchNorm1d bn;
};

// Named handle on a trainable tensor and its gradient accumulator.
struct ParamRef {
    std::string name;
    Tensor* value;
    Tensor* grad;
};

struct BufferRef {
    std::string name;
    Tensor* value;
};

// Activations retained by a forward pass for the matching backward pass.
struct ForwardTrace {
    Mode mode = Mode::Train;
    struct Block {
        Tensor input;
        Tensor conv_out;
        Tensor bn_out;
    };
    std::vector<Block> encoder;
    Tensor flat;
    Tensor latent;
    std::vector<Block> decoder;
};

class TcnAutoencoder {
public:
    explicit TcnAutoencoder(ArchConfig arch = ArchConfig::reference(), std::uint64_t seed = 0);

    const ArchConfig& arch() const noexcept { return arch_; }

    // Eval-mode forward; never mutates the network. [B,1,L] -> [B,1,L]
    Tensor infer(const Tensor& x) const;

    // Forward in `mode` keeping activations. Train mode updates running statistics.
    Tensor forward(const Tensor& x, Mode mode, ForwardTrace& trace);

    // Accumulates parameter gradients for dL/d(output) = grad_out.
    void backward(const ForwardTrace& trace, const Tensor& grad_out);

    void zero_grad();

    std::vector<ParamRef> parameters();
    std::vector<BufferRef> buffers();
    // Read-only views in the same order as parameters() / buffers().
    std::vector<const Tensor*> parameter_values() const;
    std::vector<const Tensor*> buffer_values() const;
    std::size_t parameter_count() const;

    const std::vector<TcnBlock>& encoder() const noexcept { return encoder_; }
    const std::vector<TcnBlock>& decoder() const noexcept { return decoder_; }
    const Linear& to_latent() const noexcept { return to_latent_; }
    const Linear& from_latent() const noexcept { return from_latent_; }

    bool operator==(const TcnAutoencoder& other) const;

private:
    void check_input(const Tensor& x) const;

    template <typename Self, typename F>
    static void visit_parameters(Self& self, F&& f);
    template <typename Self, typename F>
    static void visit_buffers(Self& self, F&& f);

    ArchConfig arch_;
    std::vector<TcnBlock> encoder_;
    Linear to_latent_;
    Linear from_latent_;
    std::vector<TcnBlock> decoder_;
};

double mse_loss(const Tensor& output, const Tensor& target);
// d(scale * mse)/d(output)
Tensor mse_loss_grad(const Tensor& output, const Tensor& target, double scale = 1.0);

struct GradientTape {
    double loss = 0.0;
    std::vector<std::string> names;
    std::vector<Tensor> grads;
};

// Zeroes gradients, runs forward/backward of scale * mse(net(batch), target) and
// returns a copy of every parameter gradient in parameters() order.
GradientTape compute_gradients(TcnAutoencoder& net, const Tensor& batch, const Tensor& target,
                               Mode mode = Mode::Train, double loss_scale = 1.0);

// [N] windows -> [N,1,L]
Tensor make_batch(const std::vector<std::vector<double>>& rows);

}  // namespace eps
