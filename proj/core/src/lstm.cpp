#include "snapweight/lstm.hpp"

#include <cmath>
#include <string>

#include "snapweight/errors.hpp"
#include "snapweight/rng.hpp"

namespace snapweight {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd sigmoid(const VectorXd& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

struct LayerTrace {
    MatrixXd input;   // in x T
    MatrixXd gates;   // 4H x T, post-activation
    MatrixXd cells;   // H x T
    MatrixXd tanh_c;  // H x T
    MatrixXd hidden;  // H x T
};

struct Trace {
    std::vector<LayerTrace> layers;
    VectorXd y;
};

void run_forward(const LstmModel& model, const MatrixXd& x0, Trace& tr) {
    const Index steps = x0.cols();
    const Index h = static_cast<Index>(model.hidden_width);
    tr.layers.clear();
    tr.layers.reserve(model.layers.size());
    MatrixXd x = x0;
    for (const auto& layer : model.layers) {
        LayerTrace lt;
        MatrixXd z = layer.w_in * x;
        z.colwise() += layer.bias;
        lt.gates.resize(4 * h, steps);
        lt.cells.resize(h, steps);
        lt.tanh_c.resize(h, steps);
        lt.hidden.resize(h, steps);
        VectorXd h_prev = VectorXd::Zero(h);
        VectorXd c_prev = VectorXd::Zero(h);
        for (Index t = 0; t < steps; ++t) {
            const VectorXd zt = z.col(t) + layer.w_rec * h_prev;
            const VectorXd i = sigmoid(zt.segment(0, h));
            const VectorXd f = sigmoid(zt.segment(h, h));
            const VectorXd g = zt.segment(2 * h, h).array().tanh().matrix();
            const VectorXd o = sigmoid(zt.segment(3 * h, h));
            const VectorXd c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
            const VectorXd tc = c.array().tanh().matrix();
            lt.gates.col(t) << i, f, g, o;
            lt.cells.col(t) = c;
            lt.tanh_c.col(t) = tc;
            lt.hidden.col(t) = o.cwiseProduct(tc);
            h_prev = lt.hidden.col(t);
            c_prev = c;
        }
        lt.input = std::move(x);
        x = lt.hidden;
        tr.layers.push_back(std::move(lt));
    }
    tr.y = (model.head_w.transpose() * x).transpose();
    tr.y.array() += model.head_b[0];
}

void check_input(const LstmModel& model, const FeatureMatrix& fm) {
    if (fm.width() != model.input_width)
        throw ShapeMismatch("feature width " + std::to_string(fm.width()) +
                            " does not match model input width " +
                            std::to_string(model.input_width));
    if (model.layers.empty()) throw ShapeMismatch("model has no layers");
}

}  // namespace

LstmModel LstmModel::zeros(std::size_t input_width, std::size_t hidden_width,
                           std::size_t num_layers) {
    LstmModel m;
    m.input_width = input_width;
    m.hidden_width = hidden_width;
    const auto h = static_cast<Index>(hidden_width);
    for (std::size_t l = 0; l < num_layers; ++l) {
        const auto in = static_cast<Index>(l == 0 ? input_width : hidden_width);
        m.layers.push_back({MatrixXd::Zero(4 * h, in), MatrixXd::Zero(4 * h, h),
                            VectorXd::Zero(4 * h)});
    }
    m.head_w = VectorXd::Zero(h);
    m.head_b = VectorXd::Zero(1);
    return m;
}

LstmModel LstmModel::initialized(std::size_t input_width, std::size_t hidden_width,
                                 std::size_t num_layers, std::uint64_t seed) {
    LstmModel m = zeros(input_width, hidden_width, num_layers);
    Rng rng(derive_seed(seed, 0x1157));
    const double k = 1.0 / std::sqrt(static_cast<double>(hidden_width));
    for (auto t : m.tensors())
        for (double& v : t) v = rng.uniform(-k, k);
    const auto h = static_cast<Index>(hidden_width);
    for (auto& layer : m.layers) {
        layer.bias.setZero();
        layer.bias.segment(h, h).setOnes();
    }
    m.head_b.setZero();
    return m;
}

std::vector<std::span<double>> LstmModel::tensors() {
    std::vector<std::span<double>> out;
    for (auto& l : layers) {
        out.emplace_back(l.w_in.data(), static_cast<std::size_t>(l.w_in.size()));
        out.emplace_back(l.w_rec.data(), static_cast<std::size_t>(l.w_rec.size()));
        out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    }
    out.emplace_back(head_w.data(), static_cast<std::size_t>(head_w.size()));
    out.emplace_back(head_b.data(), static_cast<std::size_t>(head_b.size()));
    return out;
}

std::vector<std::span<const double>> LstmModel::tensors() const {
    std::vector<std::span<const double>> out;
    for (auto t : const_cast<LstmModel*>(this)->tensors()) out.emplace_back(t.data(), t.size());
    return out;
}

std::size_t LstmModel::parameter_count() const {
    std::size_t n = 0;
    for (auto t : tensors()) n += t.size();
    return n;
}

void LstmModel::check_shapes() const {
    const auto h = static_cast<Index>(hidden_width);
    if (layers.empty()) throw ShapeMismatch("model has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto in = static_cast<Index>(l == 0 ? input_width : hidden_width);
        const auto& L = layers[l];
        if (L.w_in.rows() != 4 * h || L.w_in.cols() != in || L.w_rec.rows() != 4 * h ||
            L.w_rec.cols() != h || L.bias.size() != 4 * h)
            throw ShapeMismatch("layer " + std::to_string(l) + " has inconsistent shapes");
    }
    if (head_w.size() != h || head_b.size() != 1) throw ShapeMismatch("head has inconsistent shape");
}

QualityFactors lstm_forward(const LstmModel& model, const FeatureMatrix& fm) {
    check_input(model, fm);
    Trace tr;
    run_forward(model, fm.rows.transpose(), tr);
    return {tr.y.data(), tr.y.data() + tr.y.size()};
}

LstmGradient lstm_backward(const LstmModel& model, const FeatureMatrix& fm,
                           std::span<const double> targets, std::span<const double> mask) {
    check_input(model, fm);
    const std::size_t n = fm.size();
    if (targets.size() != n)
        throw ShapeMismatch("target count " + std::to_string(targets.size()) +
                            " does not match " + std::to_string(n) + " rows");
    if (!mask.empty() && mask.size() != n)
        throw ShapeMismatch("mask length does not match row count");

    Trace tr;
    run_forward(model, fm.rows.transpose(), tr);

    LstmGradient out{0.0, model.zeros_like()};
    const auto steps = static_cast<Index>(n);
    const auto h = static_cast<Index>(model.hidden_width);

    double weight_sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) weight_sum += mask.empty() ? 1.0 : mask[t];
    if (weight_sum <= 0.0) return out;

    VectorXd dy(steps);
    for (Index t = 0; t < steps; ++t) {
        const double m = mask.empty() ? 1.0 : mask[static_cast<std::size_t>(t)];
        const double e = tr.y[t] - targets[static_cast<std::size_t>(t)];
        out.loss += m * e * e;
        dy[t] = 2.0 * m * e / weight_sum;
    }
    out.loss /= weight_sum;

    const MatrixXd& top = tr.layers.back().hidden;
    out.grad.head_w = top * dy;
    out.grad.head_b[0] = dy.sum();
    MatrixXd dh_in = model.head_w * dy.transpose();  // H x T

    for (std::size_t li = model.layers.size(); li-- > 0;) {
        const LstmLayer& p = model.layers[li];
        const LayerTrace& lt = tr.layers[li];
        LstmLayer& g = out.grad.layers[li];

        MatrixXd dz(4 * h, steps);
        VectorXd dh_next = VectorXd::Zero(h);
        VectorXd dc_next = VectorXd::Zero(h);
        for (Index t = steps; t-- > 0;) {
            const auto i = lt.gates.col(t).segment(0, h).array();
            const auto f = lt.gates.col(t).segment(h, h).array();
            const auto gg = lt.gates.col(t).segment(2 * h, h).array();
            const auto o = lt.gates.col(t).segment(3 * h, h).array();
            const auto tc = lt.tanh_c.col(t).array();
            const Eigen::ArrayXd c_prev =
                t > 0 ? Eigen::ArrayXd(lt.cells.col(t - 1).array()) : Eigen::ArrayXd::Zero(h);

            const Eigen::ArrayXd dh = dh_in.col(t).array() + dh_next.array();
            const Eigen::ArrayXd dc = dh * o * (1.0 - tc * tc) + dc_next.array();
            dz.col(t).segment(0, h) = (dc * gg * i * (1.0 - i)).matrix();
            dz.col(t).segment(h, h) = (dc * c_prev * f * (1.0 - f)).matrix();
            dz.col(t).segment(2 * h, h) = (dc * i * (1.0 - gg * gg)).matrix();
            dz.col(t).segment(3 * h, h) = (dh * tc * o * (1.0 - o)).matrix();
            dh_next.noalias() = p.w_rec.transpose() * dz.col(t);
            dc_next = (dc * f).matrix();
        }

        MatrixXd h_prev = MatrixXd::Zero(h, steps);
        if (steps > 1) h_prev.rightCols(steps - 1) = lt.hidden.leftCols(steps - 1);
        g.w_in.noalias() = dz * lt.input.transpose();
        g.w_rec.noalias() = dz * h_prev.transpose();
        g.bias = dz.rowwise().sum();
        if (li > 0) dh_in.noalias() = p.w_in.transpose() * dz;
    }
    return out;
}

void accumulate(LstmModel& dst, const LstmModel& src, double scale) {
    auto d = dst.tensors();
    const auto s = src.tensors();
    if (d.size() != s.size()) throw ShapeMismatch("gradient structure mismatch");
    for (std::size_t k = 0; k < d.size(); ++k) {
        if (d[k].size() != s[k].size()) throw ShapeMismatch("gradient tensor size mismatch");
        for (std::size_t j = 0; j < d[k].size(); ++j) d[k][j] += scale * s[k][j];
    }
}

}  // namespace snapweight
