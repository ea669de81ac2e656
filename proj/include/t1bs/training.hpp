#ifndef T1BS_TRAINING_HPP
#define T1BS_TRAINING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "t1bs/mlp.hpp"
#include "t1bs/parallel.hpp"
#include "t1bs/rng.hpp"
#include "t1bs/signal_model.hpp"
#include "t1bs/types.hpp"

namespace t1bs {

struct TrainConfig {
    double learning_rate = 1e-4;
    std::size_t batch_size = 128;
    double dropout_rate = 0.5;
    std::size_t patience = 10;
    std::size_t max_epochs = 1000;
    std::uint64_t seed = 0;
    ParamBounds bounds = ParamBounds::defaults();
    ModelOptions opts;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;

    void validate() const
    {
        // learning_rate 0 is allowed: it gives a constant-loss landscape,
        // which the stopping-rule fixtures rely on.
        if (!(learning_rate >= 0.0)) throw ValidationError("learning_rate must be >= 0");
        if (batch_size == 0) throw ValidationError("batch_size must be positive");
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
            throw ValidationError("dropout_rate must be in [0, 1)");
        if (patience == 0) throw ValidationError("patience must be positive");
        if (max_epochs == 0) throw ValidationError("max_epochs must be positive");
        if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
            throw ValidationError("adam betas must be in [0, 1)");
        if (!(adam_epsilon > 0.0)) throw ValidationError("adam_epsilon must be positive");
        bounds.validate();
    }
};

struct TrainHistory {
    std::vector<double> epoch_loss;  // mean training loss per epoch, in order
    std::size_t stopped_epoch = 0;   // 1-based; last epoch that ran
    std::size_t best_epoch = 0;      // 1-based epoch the returned weights come from
};

class TrainingDiverged : public ComputeError {
public:
    TrainingDiverged(const std::string& message, TrainHistory history_so_far)
        : ComputeError(message), history(std::move(history_so_far))
    {
    }
    TrainHistory history;
};

struct MlpGrads {
    std::vector<RowMatrixXd> W;
    std::vector<Eigen::VectorXd> b;
};

struct AdamState {
    std::vector<RowMatrixXd> mW, vW;
    std::vector<Eigen::VectorXd> mb, vb;
    std::size_t t = 0;
};

inline AdamState make_adam_state(const MlpWeights& w)
{
    AdamState s;
    for (std::size_t l = 0; l < w.n_layers(); ++l) {
        s.mW.push_back(RowMatrixXd::Zero(w.W[l].rows(), w.W[l].cols()));
        s.vW.push_back(RowMatrixXd::Zero(w.W[l].rows(), w.W[l].cols()));
        s.mb.push_back(Eigen::VectorXd::Zero(w.b[l].size()));
        s.vb.push_back(Eigen::VectorXd::Zero(w.b[l].size()));
    }
    return s;
}

namespace detail {

template <typename T>
void adam_update_tensor(T& w, const T& g, T& m, T& v, double lr, double b1, double b2, double eps,
                        double bc1, double bc2)
{
    m = b1 * m + (1.0 - b1) * g;
    v = (b2 * v.array() + (1.0 - b2) * g.array().square()).matrix();
    w.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

}  // namespace detail

/// Standard Adam with bias correction; increments the step count once.
inline void adam_step(MlpWeights& w, const MlpGrads& g, AdamState& state, const TrainConfig& cfg)
{
    state.t += 1;
    const auto t = static_cast<double>(state.t);
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, t);
    for (std::size_t l = 0; l < w.n_layers(); ++l) {
        detail::adam_update_tensor(w.W[l], g.W[l], state.mW[l], state.vW[l], cfg.learning_rate,
                                   cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon, bc1, bc2);
        detail::adam_update_tensor(w.b[l], g.b[l], state.mb[l], state.vb[l], cfg.learning_rate,
                                   cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon, bc1, bc2);
    }
}

namespace detail {

struct BatchCache {
    std::vector<RowMatrixXd> z;  // pre-activation per hidden layer
    std::vector<RowMatrixXd> a;  // post-activation, post-dropout
    RowMatrixXd raw;
};

/// Batched forward used inside training. Row i of every product depends only
/// on row i of the input and the weights, so padding rows never perturb real
/// rows; fixed-size batches keep each row's result independent of batch
/// membership.
inline void forward_batch(const MlpWeights& w, const RowMatrixXd& X, const DropoutMasks* masks,
                          BatchCache& cache)
{
    const std::size_t n_hidden = w.n_layers() - 1;
    cache.z.resize(n_hidden);
    cache.a.resize(n_hidden);
    const RowMatrixXd* input = &X;
    for (std::size_t l = 0; l < n_hidden; ++l) {
        cache.z[l] = (*input) * w.W[l];
        cache.z[l].rowwise() += w.b[l].transpose();
        cache.a[l] = cache.z[l].unaryExpr([](double v) { return elu(v); });
        if (masks) cache.a[l].array() *= masks->layer[l].array();
        input = &cache.a[l];
    }
    cache.raw = (*input) * w.W.back();
    cache.raw.rowwise() += w.b.back().transpose();
}

inline MlpGrads backward_batch(const MlpWeights& w, const BatchCache& cache, const RowMatrixXd& X,
                               const DropoutMasks* masks, const RowMatrixXd& d_raw)
{
    const std::size_t n_hidden = w.n_layers() - 1;
    MlpGrads g;
    g.W.resize(w.n_layers());
    g.b.resize(w.n_layers());

    g.W.back() = cache.a[n_hidden - 1].transpose() * d_raw;
    g.b.back() = d_raw.colwise().sum().transpose();
    RowMatrixXd d_a = d_raw * w.W.back().transpose();

    for (std::size_t l = n_hidden; l-- > 0;) {
        RowMatrixXd d_z = std::move(d_a);
        if (masks) d_z.array() *= masks->layer[l].array();
        d_z.array() *= cache.z[l].unaryExpr([](double v) { return elu_deriv(v); }).array();
        const RowMatrixXd& input = l == 0 ? X : cache.a[l - 1];
        g.W[l] = input.transpose() * d_z;
        g.b[l] = d_z.colwise().sum().transpose();
        if (l > 0) d_a = d_z * w.W[l].transpose();
    }
    return g;
}

/// Loss term and output-layer gradient for the real rows of a (possibly
/// padded) batch. Writes per-sample squared-error sums to sse[0..k_real) and
/// fills d_raw rows; padded rows stay zero. Mean normalization uses only the
/// real rows.
inline void batch_physics(const MlpWeights& w, const BatchCache& cache, const RowMatrixXd& X,
                          std::size_t k_real, const AcquisitionProtocol& protocol,
                          const ModelOptions& opts, const ParamBounds& bounds, RowMatrixXd& d_raw,
                          std::vector<double>& sse, unsigned n_workers)
{
    const auto n_meas = static_cast<double>(protocol.size());
    const double scale = 2.0 / (static_cast<double>(k_real) * n_meas);
    d_raw.setZero(cache.raw.rows(), kNumParams);
    sse.assign(k_real, 0.0);

    parallel_for(k_real, n_workers, [&](std::size_t s) {
        const auto row = static_cast<Eigen::Index>(s);
        std::array<double, kNumParams> a{};
        for (int j = 0; j < kNumParams; ++j) a[j] = cache.raw(row, j);
        const TissueParams raw_params = TissueParams::from_array(a);
        const TissueParams clamped = clamp_params(raw_params, bounds);
        if (!clamped.all_finite()) {
            sse[s] = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        const auto gate = clamp_gate(raw_params, bounds);

        Eigen::VectorXd shat;
        RowMatrixXd J;
        predict_with_jacobian(clamped, protocol, opts, shat, J);

        Eigen::VectorXd diff(shat.size());
        double acc = 0.0;
        for (Eigen::Index m = 0; m < shat.size(); ++m) {
            const double d = shat[m] - X(row, m);
            diff[m] = d;
            acc += d * d;
        }
        sse[s] = acc;

        const Eigen::VectorXd v = J.transpose() * diff;
        for (int j = 0; j < kNumParams; ++j) d_raw(row, j) = scale * v[j] * gate[j];
    });
}

}  // namespace detail

/// Mean squared reconstruction error over batch x measurements. Uses the
/// per-sample forward path, so the value is independent of batch slicing.
inline double reconstruction_loss(const MlpWeights& w, const RowMatrixXd& batch,
                                  const AcquisitionProtocol& protocol, const ModelOptions& opts,
                                  const DropoutMasks* masks, const ParamBounds& bounds)
{
    if (batch.cols() != static_cast<Eigen::Index>(protocol.size()))
        throw ValidationError("batch width does not match protocol length");
    if (batch.rows() == 0) throw ValidationError("batch is empty");
    double total = 0.0;
    for (Eigen::Index s = 0; s < batch.rows(); ++s) {
        const Eigen::VectorXd raw =
            mlp_forward_sample(w, batch.row(s).transpose(), masks, static_cast<std::size_t>(s));
        std::array<double, kNumParams> a{};
        for (int j = 0; j < kNumParams; ++j) a[j] = raw[j];
        const TissueParams clamped = clamp_params(TissueParams::from_array(a), bounds);
        if (!clamped.all_finite()) return std::numeric_limits<double>::quiet_NaN();
        const Eigen::VectorXd shat = predict_signals(clamped, protocol, opts);
        double acc = 0.0;
        for (Eigen::Index m = 0; m < shat.size(); ++m) {
            const double d = shat[m] - batch(s, m);
            acc += d * d;
        }
        total += acc;
    }
    return total / (static_cast<double>(batch.rows()) * static_cast<double>(protocol.size()));
}

struct LossGrads {
    double loss = 0.0;
    MlpGrads grads;
};

/// Reconstruction loss and its gradient with respect to every weight and
/// bias, for one batch. The clamp contributes a 0/1 gate per output.
inline LossGrads loss_and_gradients(const MlpWeights& w, const RowMatrixXd& batch,
                                    const AcquisitionProtocol& protocol, const ModelOptions& opts,
                                    const DropoutMasks* masks, const ParamBounds& bounds,
                                    unsigned n_workers = 1)
{
    if (batch.rows() == 0) throw ValidationError("batch is empty");
    const auto k = static_cast<std::size_t>(batch.rows());
    detail::BatchCache cache;
    detail::forward_batch(w, batch, masks, cache);
    RowMatrixXd d_raw;
    std::vector<double> sse;
    detail::batch_physics(w, cache, batch, k, protocol, opts, bounds, d_raw, sse, n_workers);
    LossGrads out;
    double total = 0.0;
    for (double v : sse) total += v;
    out.loss = total / (static_cast<double>(k) * static_cast<double>(protocol.size()));
    out.grads = detail::backward_batch(w, cache, batch, masks, d_raw);
    return out;
}

struct TrainResult {
    MlpWeights weights;  // snapshot from the best epoch
    TrainHistory history;
};

/// Self-supervised training loop: shuffled minibatches, Adam, dropout, early
/// stopping on the epoch-mean training loss (strict improvement, zero
/// tolerance). Every batch is padded with zero rows to exactly batch_size so
/// a sample's forward result never depends on which batch it lands in; the
/// epoch loss is accumulated into per-voxel slots and summed in voxel order,
/// making it independent of both shuffle order and worker count.
inline TrainResult train(const SignalMatrix& signals, const AcquisitionProtocol& protocol,
                         const TrainConfig& config, unsigned n_workers = 1)
{
    config.validate();
    if (signals.n_voxels == 0) throw ValidationError("no voxels to train on");
    if (signals.n_meas != protocol.size())
        throw ValidationError("signals and protocol measurement counts differ");

    const std::size_t n = signals.n_voxels;
    const std::size_t n_meas = signals.n_meas;
    const std::size_t bs = config.batch_size;

    MlpWeights weights = init_weights(n_meas, config.seed);
    MlpWeights best = weights;
    AdamState adam = make_adam_state(weights);

    TrainHistory history;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t bad_streak = 0;

    std::vector<std::size_t> order(n);
    std::vector<double> per_voxel_sse(n);
    RowMatrixXd batch(static_cast<Eigen::Index>(bs), static_cast<Eigen::Index>(n_meas));
    RowMatrixXd d_raw;
    std::vector<double> sse;
    detail::BatchCache cache;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle_rng(config.seed, 1000000 + epoch);
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(shuffle_rng.below(i));
            std::swap(order[i - 1], order[j]);
        }
        Rng dropout_rng(config.seed, 2000000 + epoch);

        for (std::size_t start = 0; start < n; start += bs) {
            const std::size_t k_real = std::min(bs, n - start);
            batch.setZero();
            for (std::size_t r = 0; r < k_real; ++r)
                batch.row(static_cast<Eigen::Index>(r)) =
                    signals.values.row(static_cast<Eigen::Index>(order[start + r]));

            DropoutMasks masks = make_dropout_masks(bs, weights, config.dropout_rate, dropout_rng);
            detail::forward_batch(weights, batch, &masks, cache);
            detail::batch_physics(weights, cache, batch, k_real, protocol, config.opts,
                                  config.bounds, d_raw, sse, n_workers);
            for (std::size_t r = 0; r < k_real; ++r) per_voxel_sse[order[start + r]] = sse[r];

            const MlpGrads grads = detail::backward_batch(weights, cache, batch, &masks, d_raw);
            adam_step(weights, grads, adam, config);
        }

        double epoch_sse = 0.0;
        for (std::size_t v = 0; v < n; ++v) epoch_sse += per_voxel_sse[v];
        const double epoch_loss =
            epoch_sse / (static_cast<double>(n) * static_cast<double>(n_meas));
        history.epoch_loss.push_back(epoch_loss);
        history.stopped_epoch = epoch;

        if (!std::isfinite(epoch_loss))
            throw TrainingDiverged(
                "training loss became non-finite at epoch " + std::to_string(epoch), history);

        if (epoch_loss < best_loss) {
            best_loss = epoch_loss;
            history.best_epoch = epoch;
            best = weights;
            bad_streak = 0;
        } else {
            ++bad_streak;
            if (bad_streak >= config.patience) break;
        }
    }
    return {std::move(best), std::move(history)};
}

/// Forward pass with dropout disabled, clamped outputs; one row per voxel.
inline std::vector<TissueParams> infer(const MlpWeights& w, const SignalMatrix& signals,
                                       const ParamBounds& bounds, unsigned n_workers = 1)
{
    if (signals.n_meas != w.n_in())
        throw ValidationError("signal width does not match network input width");
    std::vector<TissueParams> out(signals.n_voxels);
    parallel_for(signals.n_voxels, n_workers, [&](std::size_t v) {
        const Eigen::VectorXd raw =
            mlp_forward_sample(w, signals.values.row(static_cast<Eigen::Index>(v)).transpose());
        std::array<double, kNumParams> a{};
        for (int j = 0; j < kNumParams; ++j) a[j] = raw[j];
        out[v] = clamp_params(TissueParams::from_array(a), bounds);
    });
    return out;
}

}  // namespace t1bs

#endif  // T1BS_TRAINING_HPP
