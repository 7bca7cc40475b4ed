#include "snapweight/training.hpp"

#include <cmath>
#include <numeric>

#include "snapweight/errors.hpp"
#include "snapweight/parallel.hpp"
#include "snapweight/rng.hpp"

namespace snapweight {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigInvalid("learning_rate", "must be > 0");
    if (batch_size < 1) throw ConfigInvalid("batch_size", "must be >= 1");
    if (max_epochs < 1) throw ConfigInvalid("max_epochs", "must be >= 1");
    if (hidden_width < 1) throw ConfigInvalid("hidden_width", "must be >= 1");
    if (num_layers < 1) throw ConfigInvalid("num_layers", "must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigInvalid("beta1", "must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigInvalid("beta2", "must be in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigInvalid("epsilon", "must be > 0");
    split.validate();
}

namespace {

struct Prepared {
    FeatureMatrix features;
    std::span<const double> targets;
};

std::vector<Prepared> prepare(std::span<const TrainingSample> samples, const Normalizer& norm) {
    std::vector<Prepared> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        if (static_cast<std::size_t>(s.raw.rows()) != s.targets.size())
            throw ShapeMismatch("sample has mismatched rows and targets");
        out.push_back({norm.apply(s.raw), s.targets});
    }
    return out;
}

double mean_loss(const LstmModel& model, const std::vector<Prepared>& set) {
    double sum = 0.0;
    double rows = 0.0;
    for (const auto& p : set) {
        const auto y = lstm_forward(model, p.features);
        for (std::size_t i = 0; i < y.size(); ++i) sum += (y[i] - p.targets[i]) * (y[i] - p.targets[i]);
        rows += static_cast<double>(y.size());
    }
    return rows > 0.0 ? sum / rows : 0.0;
}

void adam_step(LstmModel& model, const LstmModel& grad, AdamState& st, const TrainConfig& cfg) {
    ++st.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
    auto params = model.tensors();
    const auto grads = grad.tensors();
    std::size_t k = 0;
    for (std::size_t t = 0; t < params.size(); ++t) {
        for (std::size_t j = 0; j < params[t].size(); ++j, ++k) {
            const double g = grads[t][j];
            st.m[k] = cfg.beta1 * st.m[k] + (1.0 - cfg.beta1) * g;
            st.v[k] = cfg.beta2 * st.v[k] + (1.0 - cfg.beta2) * g * g;
            params[t][j] -= cfg.learning_rate * (st.m[k] / c1) / (std::sqrt(st.v[k] / c2) + cfg.epsilon);
        }
    }
}

void clip(LstmModel& grad, double limit) {
    if (!(limit > 0.0)) return;
    double ss = 0.0;
    for (auto t : grad.tensors())
        for (double g : t) ss += g * g;
    const double norm = std::sqrt(ss);
    if (norm <= limit) return;
    const double s = limit / norm;
    for (auto t : grad.tensors())
        for (double& g : t) g *= s;
}

}  // namespace

double evaluate_loss(const WeightPredictor& predictor, std::span<const TrainingSample> samples) {
    return mean_loss(predictor.model, prepare(samples, predictor.normalizer));
}

TrainResult train(std::span<const TrainingSample> train_set, std::span<const TrainingSample> val_set,
                  FeatureSet feature_set, const TrainConfig& cfg, const TrainResult* resume) {
    cfg.validate();
    if (train_set.empty()) throw EmptySplit("train");
    if (val_set.empty()) throw EmptySplit("validation");

    TrainResult result;
    Rng rng(derive_seed(cfg.seed, 0x7A1));
    if (resume) {
        result = *resume;
        if (result.best.feature_set != feature_set)
            throw ShapeMismatch("resumed checkpoint uses a different feature set");
        if (!result.state.rng_state.empty()) rng.restore(result.state.rng_state);
    } else {
        std::vector<Eigen::MatrixXd> blocks;
        blocks.reserve(train_set.size());
        for (const auto& s : train_set) blocks.push_back(s.raw);
        result.best.feature_set = feature_set;
        result.best.normalizer = Normalizer::fit(blocks);
        result.state.current = LstmModel::initialized(feature_width(feature_set), cfg.hidden_width,
                                                      cfg.num_layers, cfg.seed);
        result.best.model = result.state.current;
        const std::size_t np = result.state.current.parameter_count();
        result.state.adam.m.assign(np, 0.0);
        result.state.adam.v.assign(np, 0.0);
    }
    const std::size_t width = feature_width(feature_set);
    for (const auto& s : train_set)
        if (static_cast<std::size_t>(s.raw.cols()) != width)
            throw ShapeMismatch("training sample width does not match feature set");

    const auto train_prepared = prepare(train_set, result.best.normalizer);
    const auto val_prepared = prepare(val_set, result.best.normalizer);
    TrainingState& st = result.state;

    std::vector<std::size_t> order(train_prepared.size());
    std::vector<LstmGradient> grads;
    while (st.epochs_done < cfg.max_epochs && st.bad_evals <= cfg.patience) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order.begin(), order.end());

        double loss_sum = 0.0;
        double row_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - start);
            grads.assign(count, LstmGradient{});
            parallel_for(count, cfg.jobs, [&](std::size_t k) {
                const auto& p = train_prepared[order[start + k]];
                grads[k] = lstm_backward(st.current, p.features, p.targets);
            });
            double batch_rows = 0.0;
            for (std::size_t k = 0; k < count; ++k)
                batch_rows += static_cast<double>(train_prepared[order[start + k]].targets.size());
            LstmModel total = st.current.zeros_like();
            for (std::size_t k = 0; k < count; ++k) {
                const double rows = static_cast<double>(train_prepared[order[start + k]].targets.size());
                accumulate(total, grads[k].grad, rows / batch_rows);
                loss_sum += grads[k].loss * rows;
            }
            row_sum += batch_rows;
            clip(total, cfg.grad_clip);
            adam_step(st.current, total, st.adam, cfg);
        }

        ++st.epochs_done;
        const double val_loss = mean_loss(st.current, val_prepared);
        st.history.push_back({st.epochs_done, row_sum > 0.0 ? loss_sum / row_sum : 0.0, val_loss});
        if (val_loss < st.best_val) {
            st.best_val = val_loss;
            st.best_epoch = st.epochs_done;
            st.bad_evals = 0;
            result.best.model = st.current;
        } else {
            ++st.bad_evals;
        }
        st.rng_state = rng.state();
    }
    result.stopped_early = st.bad_evals > cfg.patience;
    return result;
}

}  // namespace snapweight
