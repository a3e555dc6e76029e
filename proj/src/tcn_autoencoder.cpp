#include "eps/tcn_autoencoder.hpp"

#include "eps/error.hpp"

namespace eps {

void ArchConfig::validate() const
{
    if (seq_len == 0 || kernel_size == 0 || latent == 0)
        throw Error(ErrorKind::InvalidInput, "architecture sizes must be positive");
    if (channels.empty() || channels.size() != dilations.size())
        throw Error(ErrorKind::InvalidInput, "channels and dilations must be non-empty and equal length");
    for (std::size_t c : channels)
        if (c == 0)
            throw Error(ErrorKind::InvalidInput, "channel counts must be positive");
    for (std::size_t d : dilations)
        if (d == 0)
            throw Error(ErrorKind::InvalidInput, "dilations must be positive");
    if (!(bn_momentum >= 0.0 && bn_momentum <= 1.0) || !(bn_epsilon > 0.0))
        throw Error(ErrorKind::InvalidInput, "invalid batch-norm constants");
}

TcnBlock::TcnBlock(std::size_t in, std::size_t out, std::size_t k, std::size_t d, const ArchConfig& arch)
    : conv(in, out, k, d, arch.padding), bn(out, arch.bn_momentum, arch.bn_epsilon)
{
}

namespace {

std::size_t flat_size(const ArchConfig& a)
{
    return a.channels.back() * a.seq_len;
}

}  // namespace

TcnAutoencoder::TcnAutoencoder(ArchConfig arch, std::uint64_t seed)
    : arch_((arch.validate(), std::move(arch))),
      to_latent_(flat_size(arch_), arch_.latent),
      from_latent_(arch_.latent, flat_size(arch_))
{
    const auto& ch = arch_.channels;
    const auto& dil = arch_.dilations;
    const std::size_t n = ch.size();
    for (std::size_t i = 0; i < n; ++i)
        encoder_.emplace_back(i == 0 ? 1 : ch[i - 1], ch[i], arch_.kernel_size, dil[i], arch_);
    // Mirrored channel path, same dilation order as the encoder.
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t in = ch[n - 1 - i];
        const std::size_t out = i + 1 < n ? ch[n - 2 - i] : 1;
        decoder_.emplace_back(in, out, arch_.kernel_size, dil[i], arch_);
    }

    Rng rng(seed);
    for (auto& b : encoder_)
        b.conv.initialize(rng);
    to_latent_.initialize(rng);
    from_latent_.initialize(rng);
    for (auto& b : decoder_)
        b.conv.initialize(rng);
}

void TcnAutoencoder::check_input(const Tensor& x) const
{
    if (x.rank() != 3 || x.dim(1) != 1 || x.dim(2) != arch_.seq_len || x.dim(0) == 0)
        throw Error(ErrorKind::Shape, "autoencoder expects [B,1," + std::to_string(arch_.seq_len) + "], got " +
                                          shape_string(x.shape()));
}

Tensor TcnAutoencoder::infer(const Tensor& x) const
{
    check_input(x);
    const std::size_t batch = x.dim(0);
    Tensor h = x;
    for (const auto& b : encoder_)
        h = relu(b.bn.forward_eval(b.conv.forward(h)));
    h = from_latent_.forward(to_latent_.forward(h.reshaped({batch, flat_size(arch_)})));
    h = h.reshaped({batch, arch_.channels.back(), arch_.seq_len});
    for (const auto& b : decoder_)
        h = relu(b.bn.forward_eval(b.conv.forward(h)));
    return h;
}

Tensor TcnAutoencoder::forward(const Tensor& x, Mode mode, ForwardTrace& trace)
{
    check_input(x);
    const std::size_t batch = x.dim(0);
    trace.mode = mode;
    trace.encoder.clear();
    trace.decoder.clear();

    auto run_block = [mode](TcnBlock& b, const Tensor& in, std::vector<ForwardTrace::Block>& out) {
        ForwardTrace::Block rec;
        rec.input = in;
        rec.conv_out = b.conv.forward(in);
        rec.bn_out = b.bn.forward(rec.conv_out, mode);
        Tensor y = relu(rec.bn_out);
        out.push_back(std::move(rec));
        return y;
    };

    Tensor h = x;
    for (auto& b : encoder_)
        h = run_block(b, h, trace.encoder);
    trace.flat = h.reshaped({batch, flat_size(arch_)});
    trace.latent = to_latent_.forward(trace.flat);
    h = from_latent_.forward(trace.latent).reshaped({batch, arch_.channels.back(), arch_.seq_len});
    for (auto& b : decoder_)
        h = run_block(b, h, trace.decoder);
    return h;
}

void TcnAutoencoder::backward(const ForwardTrace& trace, const Tensor& grad_out)
{
    if (trace.encoder.size() != encoder_.size() || trace.decoder.size() != decoder_.size())
        throw Error(ErrorKind::Shape, "trace does not match network");
    const std::size_t batch = trace.flat.dim(0);

    auto block_back = [&trace](TcnBlock& b, const ForwardTrace::Block& rec, const Tensor& g) {
        const Tensor g_bn = relu_backward(rec.bn_out, g);
        const Tensor g_conv = b.bn.backward(rec.conv_out, g_bn, trace.mode);
        return b.conv.backward(rec.input, g_conv);
    };

    Tensor g = grad_out;
    for (std::size_t i = decoder_.size(); i-- > 0;)
        g = block_back(decoder_[i], trace.decoder[i], g);
    g = from_latent_.backward(trace.latent, g.reshaped({batch, flat_size(arch_)}));
    g = to_latent_.backward(trace.flat, g);
    g = g.reshaped({batch, arch_.channels.back(), arch_.seq_len});
    for (std::size_t i = encoder_.size(); i-- > 0;)
        g = block_back(encoder_[i], trace.encoder[i], g);
}

template <typename Self, typename F>
void TcnAutoencoder::visit_parameters(Self& self, F&& f)
{
    auto block = [&f](const std::string& prefix, auto& b) {
        f(prefix + ".conv.weight", b.conv.weight, b.conv.grad_weight);
        f(prefix + ".conv.bias", b.conv.bias, b.conv.grad_bias);
        f(prefix + ".bn.gamma", b.bn.gamma, b.bn.grad_gamma);
        f(prefix + ".bn.beta", b.bn.beta, b.bn.grad_beta);
    };
    for (std::size_t i = 0; i < self.encoder_.size(); ++i)
        block("encoder." + std::to_string(i), self.encoder_[i]);
    f("latent.in.weight", self.to_latent_.weight, self.to_latent_.grad_weight);
    f("latent.in.bias", self.to_latent_.bias, self.to_latent_.grad_bias);
    f("latent.out.weight", self.from_latent_.weight, self.from_latent_.grad_weight);
    f("latent.out.bias", self.from_latent_.bias, self.from_latent_.grad_bias);
    for (std::size_t i = 0; i < self.decoder_.size(); ++i)
        block("decoder." + std::to_string(i), self.decoder_[i]);
}

template <typename Self, typename F>
void TcnAutoencoder::visit_buffers(Self& self, F&& f)
{
    auto block = [&f](const std::string& prefix, auto& b) {
        f(prefix + ".bn.running_mean", b.bn.running_mean);
        f(prefix + ".bn.running_var", b.bn.running_var);
    };
    for (std::size_t i = 0; i < self.encoder_.size(); ++i)
        block("encoder." + std::to_string(i), self.encoder_[i]);
    for (std::size_t i = 0; i < self.decoder_.size(); ++i)
        block("decoder." + std::to_string(i), self.decoder_[i]);
}

std::vector<ParamRef> TcnAutoencoder::parameters()
{
    std::vector<ParamRef> out;
    visit_parameters(*this, [&out](std::string name, Tensor& v, Tensor& g) { out.push_back({std::move(name), &v, &g}); });
    return out;
}

std::vector<BufferRef> TcnAutoencoder::buffers()
{
    std::vector<BufferRef> out;
    visit_buffers(*this, [&out](std::string name, Tensor& v) { out.push_back({std::move(name), &v}); });
    return out;
}

std::vector<const Tensor*> TcnAutoencoder::parameter_values() const
{
    std::vector<const Tensor*> out;
    visit_parameters(*this, [&out](const std::string&, const Tensor& v, const Tensor&) { out.push_back(&v); });
    return out;
}

std::vector<const Tensor*> TcnAutoencoder::buffer_values() const
{
    std::vector<const Tensor*> out;
    visit_buffers(*this, [&out](const std::string&, const Tensor& v) { out.push_back(&v); });
    return out;
}

std::size_t TcnAutoencoder::parameter_count() const
{
    std::size_t n = 0;
    for (const Tensor* t : parameter_values())
        n += t->size();
    return n;
}

void TcnAutoencoder::zero_grad()
{
    for (auto& p : parameters())
        p.grad->fill(0.0);
}

bool TcnAutoencoder::operator==(const TcnAutoencoder& other) const
{
    if (!(arch_ == other.arch_))
        return false;
    const auto a = parameter_values();
    const auto b = other.parameter_values();
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!(*a[i] == *b[i]))
            return false;
    const auto ab = buffer_values();
    const auto bb = other.buffer_values();
    for (std::size_t i = 0; i < ab.size(); ++i)
        if (!(*ab[i] == *bb[i]))
            return false;
    return true;
}

double mse_loss(const Tensor& output, const Tensor& target)
{
    if (!output.same_shape(target))
        throw Error(ErrorKind::Shape, "mse shapes differ: " + shape_string(output.shape()) + " vs " +
                                          shape_string(target.shape()));
    if (output.size() == 0)
        throw Error(ErrorKind::Shape, "mse over empty tensors");
    double s = 0.0;
    for (std::size_t i = 0; i < output.size(); ++i) {
        const double d = output[i] - target[i];
        s += d * d;
    }
    return s / static_cast<double>(output.size());
}

Tensor mse_loss_grad(const Tensor& output, const Tensor& target, double scale)
{
    if (!output.same_shape(target))
        throw Error(ErrorKind::Shape, "mse shapes differ");
    Tensor g(output.shape());
    const double k = 2.0 * scale / static_cast<double>(output.size());
    for (std::size_t i = 0; i < output.size(); ++i)
        g[i] = k * (output[i] - target[i]);
    return g;
}

GradientTape compute_gradients(TcnAutoencoder& net, const Tensor& batch, const Tensor& target, Mode mode,
                               double loss_scale)
{
    net.zero_grad();
    ForwardTrace trace;
    const Tensor out = net.forward(batch, mode, trace);
    GradientTape tape;
    tape.loss = loss_scale * mse_loss(out, target);
    net.backward(trace, mse_loss_grad(out, target, loss_scale));
    for (auto& p : net.parameters()) {
        tape.names.push_back(p.name);
        tape.grads.push_back(*p.grad);
    }
    return tape;
}

Tensor make_batch(const std::vector<std::vector<double>>& rows)
{
    if (rows.empty())
        throw Error(ErrorKind::Shape, "empty batch");
    const std::size_t len = rows.front().size();
    Tensor t({rows.size(), 1, len});
    for (std::size_t b = 0; b < rows.size(); ++b) {
        if (rows[b].size() != len)
            throw Error(ErrorKind::Shape, "ragged batch");
        std::copy(rows[b].begin(), rows[b].end(), t.raw() + b * len);
    }
    return t;
}

}  // namespace eps
