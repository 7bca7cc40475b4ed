#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "snapweight/dataset.hpp"
#include "snapweight/lstm.hpp"
#include "snapweight/weighting.hpp"

namespace snapweight {

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;  ///< epochs per optimizer step
    std::size_t max_epochs = 50;
    std::size_t patience = 5;
    std::uint64_t seed = 1;
    std::size_t hidden_width = 64;
    std::size_t num_layers = 2;
    SplitFractions split;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double grad_clip = 5.0;  ///< global gradient-norm limit, <= 0 disables
    std::size_t jobs = 1;

    void validate() const;
};

/// One epoch's unnormalized feature rows and log-sigma targets.
struct TrainingSample {
    Eigen::MatrixXd raw;
    std::vector<double> targets;
};

struct LossPoint {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;
};

/// Everything needed to continue an interrupted run bit-exactly.
struct TrainingState {
    LstmModel current;
    AdamState adam;
    std::size_t epochs_done = 0;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;
    std::size_t bad_evals = 0;
    std::string rng_state;
    std::vector<LossPoint> history;
};

struct TrainResult {
    WeightPredictor best;  ///< snapshot with the lowest validation loss
    TrainingState state;
    bool stopped_early = false;
};

/// Mini-batch Adam on the mean squared log-sigma error, with early stopping on
/// validation loss. Per-epoch gradients may be computed on `cfg.jobs` threads;
/// they are reduced in a fixed order, so results do not depend on the job
/// count. Throws EmptySplit.
TrainResult train(std::span<const TrainingSample> train_set,
                  std::span<const TrainingSample> val_set, FeatureSet feature_set,
                  const TrainConfig& cfg, const TrainResult* resume = nullptr);

/// Mean squared error over all rows of the set.
double evaluate_loss(const WeightPredictor& predictor, std::span<const TrainingSample> samples);

}  // namespace snapweight
