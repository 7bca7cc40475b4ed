#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace snapweight {

/// Normalized network input: one row per measurement, in canonical order.
struct FeatureMatrix {
    Eigen::MatrixXd rows;  // N x input width

    std::size_t size() const { return static_cast<std::size_t>(rows.rows()); }
    std::size_t width() const { return static_cast<std::size_t>(rows.cols()); }
};

/// Predicted log standard deviation (log meters) per measurement.
using QualityFactors = std::vector<double>;

/// Gate blocks are stacked [input; forget; cell; output] along the rows of
/// each 4H-high parameter.
struct LstmLayer {
    Eigen::MatrixXd w_in;   // 4H x input
    Eigen::MatrixXd w_rec;  // 4H x H
    Eigen::VectorXd bias;   // 4H
};

/// Stacked LSTM with a scalar linear head applied at every step.
struct LstmModel {
    std::size_t input_width = 0;
    std::size_t hidden_width = 0;
    std::vector<LstmLayer> layers;
    Eigen::VectorXd head_w;  // H
    Eigen::VectorXd head_b;  // 1

    /// All-zero parameters of the given shape.
    static LstmModel zeros(std::size_t input_width, std::size_t hidden_width,
                           std::size_t num_layers = 2);

    /// Uniform(-1/sqrt(H), 1/sqrt(H)) weights, forget-gate bias 1, head bias 0.
    static LstmModel initialized(std::size_t input_width, std::size_t hidden_width,
                                 std::size_t num_layers, std::uint64_t seed);

    LstmModel zeros_like() const { return zeros(input_width, hidden_width, layers.size()); }

    /// Views over every parameter tensor in a fixed order.
    std::vector<std::span<double>> tensors();
    std::vector<std::span<const double>> tensors() const;
    std::size_t parameter_count() const;

    /// Throws ShapeMismatch when tensor shapes disagree with the widths.
    void check_shapes() const;
};

/// Throws ShapeMismatch when fm width differs from the model's input width.
QualityFactors lstm_forward(const LstmModel& model, const FeatureMatrix& fm);

struct LstmGradient {
    double loss = 0.0;  ///< mean squared error over unmasked rows
    LstmModel grad;
};

/// Exact BPTT gradient of mean((y - target)^2) over rows whose mask is
/// non-zero (an empty mask means every row counts).
LstmGradient lstm_backward(const LstmModel& model, const FeatureMatrix& fm,
                           std::span<const double> targets,
                           std::span<const double> mask = {});

/// Adds scale * src into dst, tensor by tensor.
void accumulate(LstmModel& dst, const LstmModel& src, double scale);

}  // namespace snapweight
