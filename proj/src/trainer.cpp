#include "eps/trainer.hpp"

#include "eps/error.hpp"
#include "eps/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace eps {

void TrainConfig::validate() const
{
    if (epochs < 0)
        throw Error(ErrorKind::InvalidInput, "epochs must be >= 0");
    if (batch_size < 2)
        throw Error(ErrorKind::InvalidInput, "batch size must be >= 2");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw Error(ErrorKind::InvalidInput, "learning rate must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_epsilon > 0.0))
        throw Error(ErrorKind::InvalidInput, "invalid Adam constants");
}

std::string TrainConfig::digest() const
{
    char buf[512];
    std::snprintf(buf, sizeof buf, "epochs=%d;batch=%zu;lr=%.17g;b1=%.17g;b2=%.17g;eps=%.17g;seed=%llu;shuffle=%d;std=%d",
                  epochs, batch_size, learning_rate, adam_beta1, adam_beta2, adam_epsilon,
                  static_cast<unsigned long long>(seed), shuffle ? 1 : 0, standardize ? 1 : 0);
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char* p = buf; *p; ++p) {
        h ^= static_cast<unsigned char>(*p);
        h *= 0x100000001b3ULL;
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

void adam_step(std::span<const ParamRef> params, AdamState& state, const TrainConfig& config)
{
    if (state.m.size() != params.size()) {
        state.m.clear();
        state.v.clear();
        for (const auto& p : params) {
            state.m.emplace_back(p.value->shape());
            state.v.emplace_back(p.value->shape());
        }
        state.step = 0;
    }
    for (const auto& p : params)
        if (!p.grad->all_finite())
            throw Error(ErrorKind::TrainingDivergence, "non-finite gradient in " + p.name);

    state.step += 1;
    const double b1 = config.adam_beta1;
    const double b2 = config.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& value = *params[k].value;
        const Tensor& grad = *params[k].grad;
        Tensor& m = state.m[k];
        Tensor& v = state.v[k];
        if (!m.same_shape(value) || !grad.same_shape(value))
            throw Error(ErrorKind::Shape, "Adam state does not match parameter " + params[k].name);
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double g = grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            value[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
        }
    }
}

std::vector<double> Normalization::apply(std::span<const double> values) const
{
    std::vector<double> out(values.begin(), values.end());
    if (!enabled)
        return out;
    if (mean.size() != values.size() || scale.size() != values.size())
        throw Error(ErrorKind::Shape, "normalization length does not match window");
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (out[i] - mean[i]) / scale[i];
    return out;
}

Normalization fit_normalization(std::span<const VelocityWindow> windows, bool enabled)
{
    Normalization n;
    n.enabled = enabled;
    if (!enabled)
        return n;
    if (windows.empty())
        throw Error(ErrorKind::InvalidInput, "cannot fit normalization on no windows");
    n.mean.assign(kWindowLength, 0.0);
    n.scale.assign(kWindowLength, 0.0);
    const auto count = static_cast<double>(windows.size());
    for (const auto& w : windows)
        for (std::size_t i = 0; i < kWindowLength; ++i)
            n.mean[i] += w.values[i] / count;
    for (const auto& w : windows)
        for (std::size_t i = 0; i < kWindowLength; ++i)
            n.scale[i] += (w.values[i] - n.mean[i]) * (w.values[i] - n.mean[i]) / count;
    for (double& s : n.scale)
        s = std::max(std::sqrt(s), 1e-8);
    return n;
}

Tensor windows_to_batch(std::span<const VelocityWindow> windows, const Normalization& norm,
                        std::span<const std::size_t> indices)
{
    Tensor t({indices.size(), 1, kWindowLength});
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const auto row = norm.apply(windows[indices[b]].values);
        std::copy(row.begin(), row.end(), t.raw() + b * kWindowLength);
    }
    return t;
}

double evaluate_loss(const TcnAutoencoder& net, const Normalization& norm, std::span<const VelocityWindow> windows)
{
    if (windows.empty())
        throw Error(ErrorKind::InvalidInput, "no windows to evaluate");
    constexpr std::size_t chunk = 1024;
    double total = 0.0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < windows.size(); start += chunk) {
        const std::size_t end = std::min(windows.size(), start + chunk);
        idx.resize(end - start);
        std::iota(idx.begin(), idx.end(), start);
        const Tensor x = windows_to_batch(windows, norm, idx);
        total += mse_loss(net.infer(x), x) * static_cast<double>(idx.size());
    }
    return total / static_cast<double>(windows.size());
}

TrainResult train(std::span<const VelocityWindow> windows, const ArchConfig& arch, const TrainConfig& config,
                  const EpochCallback& on_epoch)
{
    config.validate();
    if (arch.seq_len != kWindowLength)
        throw Error(ErrorKind::Shape, "architecture sequence length must be " + std::to_string(kWindowLength));
    if (windows.size() < 2)
        throw Error(ErrorKind::InvalidInput, "training needs at least 2 windows");
    for (const auto& w : windows)
        if (w.label && *w.label != Label::Correct)
            throw Error(ErrorKind::InvalidInput, "training set must contain only correct selections");

    const auto started = std::chrono::steady_clock::now();
    TrainResult result{TcnAutoencoder(arch, mix_seed(config.seed, 0)), fit_normalization(windows, config.standardize), {}};
    TrainReport& report = result.report;
    report.config = config;
    report.samples = windows.size();
    report.initial_loss = evaluate_loss(result.network, result.normalization, windows);

    Rng rng(mix_seed(config.seed, 1));
    AdamState adam;
    auto params = result.network.parameters();
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.shuffle)
            rng.shuffle(order);
        double epoch_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            const Tensor x = windows_to_batch(windows, result.normalization, idx);
            const GradientTape tape = compute_gradients(result.network, x, x, Mode::Train);
            if (!std::isfinite(tape.loss)) {
                const double last = report.epoch_losses.empty() ? report.initial_loss : report.epoch_losses.back();
                throw Error(ErrorKind::TrainingDivergence,
                            "non-finite loss at epoch " + std::to_string(epoch) + " step " +
                                std::to_string(report.steps) + "; last finite epoch loss " + std::to_string(last));
            }
            adam_step(params, adam, config);
            ++report.steps;
            epoch_sum += tape.loss * static_cast<double>(idx.size());
        }
        const double mean = epoch_sum / static_cast<double>(order.size());
        report.epoch_losses.push_back(mean);
        if (on_epoch)
            on_epoch(epoch, mean);
    }

    report.final_loss = evaluate_loss(result.network, result.normalization, windows);
    report.duration_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

std::vector<std::size_t> assign_folds(std::size_t n, std::size_t folds, std::uint64_t seed, FoldStrategy strategy,
                                      std::span<const std::size_t> groups)
{
    if (folds < 2)
        throw Error(ErrorKind::InvalidInput, "need at least 2 folds");
    if (n < folds)
        throw Error(ErrorKind::InvalidInput,
                    "fewer samples (" + std::to_string(n) + ") than folds (" + std::to_string(folds) + ")");
    Rng rng(mix_seed(seed, 2));
    std::vector<std::size_t> fold_of(n);
    if (strategy == FoldStrategy::ByWindow) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        for (std::size_t pos = 0; pos < n; ++pos)
            fold_of[perm[pos]] = pos % folds;
        return fold_of;
    }
    if (groups.size() != n)
        throw Error(ErrorKind::InvalidInput, "group ids must cover every window");
    std::vector<std::size_t> ids(groups.begin(), groups.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.size() < folds)
        throw Error(ErrorKind::InvalidInput, "fewer groups than folds");
    rng.shuffle(ids);
    for (std::size_t i = 0; i < n; ++i) {
        const auto pos = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), groups[i]) - ids.begin());
        fold_of[i] = pos % folds;
    }
    return fold_of;
}

CvReport cross_validate(std::span<const VelocityWindow> windows, std::size_t folds, std::span<const CvCandidate> candidates,
                        const ArchConfig& arch, std::uint64_t split_seed, FoldStrategy strategy,
                        std::span<const std::size_t> groups)
{
    if (candidates.empty())
        throw Error(ErrorKind::InvalidInput, "no candidate configurations");
    CvReport report;
    report.fold_of = assign_folds(windows.size(), folds, split_seed, strategy, groups);

    for (const auto& cand : candidates) {
        CvResult res{cand.name, cand.config, {}, 0.0, 0.0};
        for (std::size_t f = 0; f < folds; ++f) {
            std::vector<VelocityWindow> train_set, val_set;
            for (std::size_t i = 0; i < windows.size(); ++i)
                (report.fold_of[i] == f ? val_set : train_set).push_back(windows[i]);
            const TrainResult trained = train(train_set, arch, cand.config);
            res.fold_losses.push_back(evaluate_loss(trained.network, trained.normalization, val_set));
        }
        const auto k = static_cast<double>(res.fold_losses.size());
        res.mean = std::accumulate(res.fold_losses.begin(), res.fold_losses.end(), 0.0) / k;
        double ss = 0.0;
        for (double l : res.fold_losses)
            ss += (l - res.mean) * (l - res.mean);
        res.sd = std::sqrt(ss / (k - 1.0));
        report.results.push_back(std::move(res));
    }
    for (std::size_t i = 1; i < report.results.size(); ++i)
        if (report.results[i].mean < report.results[report.best].mean)
            report.best = i;
    return report;
}

std::pair<std::vector<double>, std::size_t> aggregate_across_methods(std::span<const CvReport> per_method)
{
    if (per_method.empty())
        throw Error(ErrorKind::InvalidInput, "no reports to aggregate");
    const std::size_t n = per_method.front().results.size();
    std::vector<double> agg(n, 0.0);
    for (const auto& r : per_method) {
        if (r.results.size() != n)
            throw Error(ErrorKind::InvalidInput, "reports cover different candidate sets");
        for (std::size_t i = 0; i < n; ++i)
            agg[i] += r.results[i].mean / static_cast<double>(per_method.size());
    }
    const auto best = static_cast<std::size_t>(std::min_element(agg.begin(), agg.end()) - agg.begin());
    return {agg, best};
}

}  // namespace eps
