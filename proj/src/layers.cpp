#include "eps/layers.hpp"

#include "eps/error.hpp"

#include <cmath>

namespace eps {

namespace {

void fill_uniform(Tensor& t, Rng& rng, double bound)
{
    for (double& v : t.data())
        v = rng.uniform(-bound, bound);
}

}  // namespace

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size, std::size_t dilation,
               Padding padding)
    : weight({out_channels, in_channels, kernel_size}),
      bias({out_channels}),
      grad_weight({out_channels, in_channels, kernel_size}),
      grad_bias({out_channels}),
      in_(in_channels),
      out_(out_channels),
      k_(kernel_size),
      d_(dilation),
      padding_(padding)
{
    if (in_ == 0 || out_ == 0 || k_ == 0 || d_ == 0)
        throw Error(ErrorKind::InvalidInput, "conv1d dimensions must be positive");
}

void Conv1d::initialize(Rng& rng)
{
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_ * k_));
    fill_uniform(weight, rng, bound);
    fill_uniform(bias, rng, bound);
}

std::size_t Conv1d::left_pad() const noexcept
{
    const std::size_t span = d_ * (k_ - 1);
    return padding_ == Padding::Causal ? span : span / 2;
}

void Conv1d::check_input(const Tensor& x) const
{
    if (x.rank() != 3 || x.dim(1) != in_)
        throw Error(ErrorKind::Shape, "conv1d expects [B," + std::to_string(in_) + ",L], got " +
                                          shape_string(x.shape()));
}

Tensor Conv1d::forward(const Tensor& x) const
{
    check_input(x);
    const std::size_t batch = x.dim(0);
    const std::size_t len = x.dim(2);
    const auto pad = static_cast<std::ptrdiff_t>(left_pad());
    Tensor y({batch, out_, len});
    const double* w = weight.raw();
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < out_; ++o) {
            double* yrow = &y.at(b, o, 0);
            for (std::size_t t = 0; t < len; ++t)
                yrow[t] = bias[o];
            for (std::size_t i = 0; i < in_; ++i) {
                const double* xrow = &x.at(b, i, 0);
                for (std::size_t j = 0; j < k_; ++j) {
                    const double wv = w[(o * in_ + i) * k_ + j];
                    const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j * d_) - pad;
                    // valid t satisfies 0 <= t + shift < len
                    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
                    const std::ptrdiff_t hi =
                        std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(len), static_cast<std::ptrdiff_t>(len) - shift);
                    for (std::ptrdiff_t t = lo; t < hi; ++t)
                        yrow[t] += wv * xrow[t + shift];
                }
            }
        }
    }
    return y;
}

Tensor Conv1d::backward(const Tensor& x, const Tensor& grad_out)
{
    check_input(x);
    const std::size_t batch = x.dim(0);
    const std::size_t len = x.dim(2);
    if (grad_out.shape() != std::vector<std::size_t>{batch, out_, len})
        throw Error(ErrorKind::Shape, "conv1d grad shape mismatch");
    const auto pad = static_cast<std::ptrdiff_t>(left_pad());
    Tensor dx({batch, in_, len});
    double* gw = grad_weight.raw();
    const double* w = weight.raw();
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < out_; ++o) {
            const double* grow = &grad_out.at(b, o, 0);
            double gb = 0.0;
            for (std::size_t t = 0; t < len; ++t)
                gb += grow[t];
            grad_bias[o] += gb;
            for (std::size_t i = 0; i < in_; ++i) {
                const double* xrow = &x.at(b, i, 0);
                double* dxrow = &dx.at(b, i, 0);
                for (std::size_t j = 0; j < k_; ++j) {
                    const std::size_t widx = (o * in_ + i) * k_ + j;
                    const double wv = w[widx];
                    const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j * d_) - pad;
                    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
                    const std::ptrdiff_t hi =
                        std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(len), static_cast<std::ptrdiff_t>(len) - shift);
                    double acc = 0.0;
                    for (std::ptrdiff_t t = lo; t < hi; ++t) {
                        acc += grow[t] * xrow[t + shift];
                        dxrow[t + shift] += wv * grow[t];
                    }
                    gw[widx] += acc;
                }
            }
        }
    }
    return dx;
}

BatchNorm1d::BatchNorm1d(std::size_t channels, double momentum, double epsilon)
    : gamma({channels}, 1.0),
      beta({channels}, 0.0),
      running_mean({channels}, 0.0),
      running_var({channels}, 1.0),
      grad_gamma({channels}),
      grad_beta({channels}),
      channels_(channels),
      momentum_(momentum),
      epsilon_(epsilon)
{
}

void BatchNorm1d::check_input(const Tensor& x) const
{
    if (x.rank() != 3 || x.dim(1) != channels_)
        throw Error(ErrorKind::Shape, "batchnorm expects [B," + std::to_string(channels_) + ",L], got " +
                                          shape_string(x.shape()));
}

void BatchNorm1d::batch_stats(const Tensor& x, std::vector<double>& mean, std::vector<double>& var) const
{
    const std::size_t batch = x.dim(0);
    const std::size_t len = x.dim(2);
    const auto n = static_cast<double>(batch * len);
    mean.assign(channels_, 0.0);
    var.assign(channels_, 0.0);
    for (std::size_t c = 0; c < channels_; ++c) {
        double s = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
            const double* row = &x.at(b, c, 0);
            for (std::size_t t = 0; t < len; ++t)
                s += row[t];
        }
        const double m = s / n;
        double ss = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
            const double* row = &x.at(b, c, 0);
            for (std::size_t t = 0; t < len; ++t)
                ss += (row[t] - m) * (row[t] - m);
        }
        mean[c] = m;
        var[c] = ss / n;
    }
}

Tensor BatchNorm1d::forward(const Tensor& x, Mode mode)
{
    if (mode == Mode::Eval)
        return forward_eval(x);
    check_input(x);
    const std::size_t batch = x.dim(0);
    const std::size_t len = x.dim(2);
    const std::size_t n = batch * len;
    if (n < 2)
        throw Error(ErrorKind::DegenerateBatch, "train-mode batch norm needs at least 2 values per channel");
    std::vector<double> mean, var;
    batch_stats(x, mean, var);
    Tensor y(x.shape());
    for (std::size_t c = 0; c < channels_; ++c) {
        const double inv_std = 1.0 / std::sqrt(var[c] + epsilon_);
        for (std::size_t b = 0; b < batch; ++b) {
            const double* row = &x.at(b, c, 0);
            double* yrow = &y.at(b, c, 0);
            for (std::size_t t = 0; t < len; ++t)
                yrow[t] = gamma[c] * (row[t] - mean[c]) * inv_std + beta[c];
        }
        const double unbiased = var[c] * static_cast<double>(n) / static_cast<double>(n - 1);
        running_mean[c] = (1.0 - momentum_) * running_mean[c] + momentum_ * mean[c];
        running_var[c] = (1.0 - momentum_) * running_var[c] + momentum_ * unbiased;
    }
    return y;
}

Tensor BatchNorm1d::forward_eval(const Tensor& x) const
{
    check_input(x);
    const std::size_t batch = x.dim(0);
    const std::size_t len = x.dim(2);
    Tensor y(x.shape());
    for (std::size_t c = 0; c < channels_; ++c) {
        const double scale = gamma[c] / std::sqrt(running_var[c] + epsilon_);
        const double shift = beta[c] - running_mean[c] * scale;
        for (std::size_t b = 0; b < batch; ++b) {
            const double* row = &x.at(b, c, 0);
            double* yrow = &y.at(b, c, 0);
            for (std::size_t t = 0; t < len; ++t)
                yrow[t] = row[t] * scale + shift;
        }
    }
    return y;
}

Tensor BatchNorm1d::backward(const Tensor& x, const Tensor& grad_out, Mode mode)
{
    check_input(x);
    if (!grad_out.same_shape(x))
        throw Error(ErrorKind::Shape, "batchnorm grad shape mismatch");
    const std::size_t batch = x.dim(0);
    const std::size_t len = x.dim(2);
    Tensor dx(x.shape());
    if (mode == Mode::Eval) {
        for (std::size_t c = 0; c < channels_; ++c) {
            const double inv_std = 1.0 / std::sqrt(running_var[c] + epsilon_);
            double gg = 0.0, gb = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
                const double* row = &x.at(b, c, 0);
                const double* grow = &grad_out.at(b, c, 0);
                double* dxrow = &dx.at(b, c, 0);
                for (std::size_t t = 0; t < len; ++t) {
                    gg += grow[t] * (row[t] - running_mean[c]) * inv_std;
                    gb += grow[t];
                    dxrow[t] = grow[t] * gamma[c] * inv_std;
                }
            }
            grad_gamma[c] += gg;
            grad_beta[c] += gb;
        }
        return dx;
    }

    std::vector<double> mean, var;
    batch_stats(x, mean, var);
    const auto n = static_cast<double>(batch * len);
    for (std::size_t c = 0; c < channels_; ++c) {
        const double inv_std = 1.0 / std::sqrt(var[c] + epsilon_);
        double sum_g = 0.0, sum_gx = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
            const double* row = &x.at(b, c, 0);
            const double* grow = &grad_out.at(b, c, 0);
            for (std::size_t t = 0; t < len; ++t) {
                sum_g += grow[t];
                sum_gx += grow[t] * (row[t] - mean[c]) * inv_std;
            }
        }
        grad_gamma[c] += sum_gx;
        grad_beta[c] += sum_g;
        const double k = gamma[c] * inv_std / n;
        for (std::size_t b = 0; b < batch; ++b) {
            const double* row = &x.at(b, c, 0);
            const double* grow = &grad_out.at(b, c, 0);
            double* dxrow = &dx.at(b, c, 0);
            for (std::size_t t = 0; t < len; ++t) {
                const double xhat = (row[t] - mean[c]) * inv_std;
                dxrow[t] = k * (n * grow[t] - sum_g - xhat * sum_gx);
            }
        }
    }
    return dx;
}

Linear::Linear(std::size_t in_features, std::size_t out_features)
    : weight({out_features, in_features}),
      bias({out_features}),
      grad_weight({out_features, in_features}),
      grad_bias({out_features}),
      in_(in_features),
      out_(out_features)
{
    if (in_ == 0 || out_ == 0)
        throw Error(ErrorKind::InvalidInput, "linear dimensions must be positive");
}

void Linear::initialize(Rng& rng)
{
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
    fill_uniform(weight, rng, bound);
    fill_uniform(bias, rng, bound);
}

Tensor Linear::forward(const Tensor& x) const
{
    if (x.rank() != 2 || x.dim(1) != in_)
        throw Error(ErrorKind::Shape, "linear expects [B," + std::to_string(in_) + "], got " + shape_string(x.shape()));
    const std::size_t batch = x.dim(0);
    Tensor y({batch, out_});
    const double* w = weight.raw();
    for (std::size_t b = 0; b < batch; ++b) {
        const double* xr = x.raw() + b * in_;
        double* yr = y.raw() + b * out_;
        for (std::size_t o = 0; o < out_; ++o) {
            const double* wr = w + o * in_;
            double acc = bias[o];
            for (std::size_t i = 0; i < in_; ++i)
                acc += wr[i] * xr[i];
            yr[o] = acc;
        }
    }
    return y;
}

Tensor Linear::backward(const Tensor& x, const Tensor& grad_out)
{
    const std::size_t batch = x.dim(0);
    if (grad_out.shape() != std::vector<std::size_t>{batch, out_})
        throw Error(ErrorKind::Shape, "linear grad shape mismatch");
    Tensor dx({batch, in_});
    const double* w = weight.raw();
    double* gw = grad_weight.raw();
    for (std::size_t b = 0; b < batch; ++b) {
        const double* xr = x.raw() + b * in_;
        const double* gr = grad_out.raw() + b * out_;
        double* dxr = dx.raw() + b * in_;
        for (std::size_t o = 0; o < out_; ++o) {
            const double g = gr[o];
            grad_bias[o] += g;
            const double* wr = w + o * in_;
            double* gwr = gw + o * in_;
            for (std::size_t i = 0; i < in_; ++i) {
                gwr[i] += g * xr[i];
                dxr[i] += g * wr[i];
            }
        }
    }
    return dx;
}

Tensor relu(const Tensor& x)
{
    Tensor y = x;
    for (double& v : y.data())
        v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& pre, const Tensor& grad_out)
{
    Tensor dx = grad_out;
    for (std::size_t i = 0; i < dx.size(); ++i)
        if (!(pre[i] > 0.0))
            dx[i] = 0.0;
    return dx;
}

}  // namespace eps
