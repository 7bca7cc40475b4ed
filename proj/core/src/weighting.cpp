#include "snapweight/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "snapweight/errors.hpp"

namespace snapweight {

std::string_view to_string(FeatureSet s) {
    switch (s) {
        case FeatureSet::Full: return "full";
        case FeatureSet::ResidualOnly: return "residual_only";
        case FeatureSet::LabelLeak: return "label_leak";
    }
    return "unknown";
}

std::optional<FeatureSet> parse_feature_set(std::string_view s) {
    for (auto f : {FeatureSet::Full, FeatureSet::ResidualOnly, FeatureSet::LabelLeak})
        if (s == to_string(f)) return f;
    return std::nullopt;
}

std::size_t feature_width(FeatureSet s) {
    switch (s) {
        case FeatureSet::Full: return kResidualSummaryWidth + kPerLinkWidth;
        case FeatureSet::ResidualOnly: return kResidualSummaryWidth;
        case FeatureSet::LabelLeak: return kResidualSummaryWidth + kPerLinkWidth + 1;
    }
    return 0;
}

std::array<double, kResidualSummaryWidth> summarize_residual_row(const ResidualMatrix& m,
                                                                 std::size_t row) {
    std::array<double, kResidualSummaryWidth> out{};
    const std::size_t n = m.size();
    std::vector<double> v;
    v.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == row) continue;
        const double r = m.values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(i));
        v.push_back(std::clamp(r, -m.gamma, m.gamma));
    }
    if (v.empty()) return out;

    const auto count = static_cast<double>(v.size());
    double sum = 0.0, sum_abs = 0.0, over5 = 0.0, over20 = 0.0;
    for (double r : v) {
        sum += r;
        sum_abs += std::abs(r);
        if (std::abs(r) > 5.0) over5 += 1.0;
        if (std::abs(r) > 20.0) over20 += 1.0;
    }
    const double mean = sum / count;
    double ss = 0.0;
    for (double r : v) ss += (r - mean) * (r - mean);
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    const double median = v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);

    out[0] = mean;
    out[1] = v.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
    out[2] = v.front();
    out[3] = v.back();
    out[4] = median;
    out[5] = sum_abs / count;
    out[6] = over5;
    out[7] = over20;
    return out;
}

Eigen::MatrixXd raw_feature_rows(const ResidualMatrix& m, std::span<const PerLinkFeatures> links,
                                 FeatureSet set, std::span<const double> labels) {
    const std::size_t n = m.size();
    if (set != FeatureSet::ResidualOnly && links.size() != n)
        throw ShapeMismatch("per-link feature count does not match residual matrix size");
    if (set == FeatureSet::LabelLeak && labels.size() != n)
        throw ShapeMismatch("label-leak feature set needs one label per row");

    Eigen::MatrixXd rows(static_cast<Eigen::Index>(n),
                         static_cast<Eigen::Index>(feature_width(set)));
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = static_cast<Eigen::Index>(r);
        const auto s = summarize_residual_row(m, r);
        for (std::size_t k = 0; k < s.size(); ++k) rows(row, static_cast<Eigen::Index>(k)) = s[k];
        if (set == FeatureSet::ResidualOnly) continue;
        const auto& f = links[r];
        const Eigen::Index c = kResidualSummaryWidth;
        rows(row, c + 0) = f.elevation;
        rows(row, c + 1) = f.lock_time;
        rows(row, c + 2) = f.cn0;
        rows(row, c + 3) = f.cn0_mean;
        rows(row, c + 4) = f.cn0_var;
        rows(row, c + 5) = f.window_size;
        if (set == FeatureSet::LabelLeak) rows(row, c + 6) = labels[r];
    }
    return rows;
}

Normalizer Normalizer::fit(std::span<const Eigen::MatrixXd> blocks) {
    if (blocks.empty()) throw EmptySplit("normalizer input");
    const Eigen::Index width = blocks.front().cols();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(width);
    double count = 0.0;
    for (const auto& b : blocks) {
        if (b.cols() != width) throw ShapeMismatch("normalizer blocks differ in width");
        sum += b.colwise().sum().transpose();
        count += static_cast<double>(b.rows());
    }
    if (count == 0.0) throw EmptySplit("normalizer input");
    Normalizer n;
    n.mean = sum / count;
    Eigen::VectorXd ss = Eigen::VectorXd::Zero(width);
    for (const auto& b : blocks)
        ss += (b.rowwise() - n.mean.transpose()).array().square().colwise().sum().matrix().transpose();
    n.scale = (ss / count).array().sqrt().matrix();
    // Columns whose spread is round-off (the row mean of a least-squares
    // residual vector, for one) would otherwise blow noise up to unit scale.
    for (Eigen::Index k = 0; k < width; ++k)
        if (!(n.scale[k] > kMinFeatureScale)) n.scale[k] = 1.0;
    return n;
}

FeatureMatrix Normalizer::apply(const Eigen::MatrixXd& raw) const {
    if (raw.cols() != mean.size())
        throw ShapeMismatch("raw feature width does not match normalizer");
    FeatureMatrix fm;
    fm.rows = (raw.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
    return fm;
}

WeightVector weights_from_quality(std::span<const double> quality) {
    WeightVector w(quality.size());
    for (std::size_t i = 0; i < quality.size(); ++i)
        w[i] = std::clamp(std::exp(-2.0 * quality[i]), kMinWeight, kMaxWeight);
    return w;
}

QualityFactors WeightPredictor::quality(const Eigen::MatrixXd& raw_rows) const {
    return lstm_forward(model, normalizer.apply(raw_rows));
}

WeightVector WeightPredictor::weights(const Eigen::MatrixXd& raw_rows) const {
    return weights_from_quality(quality(raw_rows));
}

WeightVector predict_weights(const LstmModel& model, const FeatureMatrix& fm) {
    return weights_from_quality(lstm_forward(model, fm));
}

std::string_view to_string(LabelClock c) {
    return c == LabelClock::Median ? "median" : "equal_weight";
}

std::optional<LabelClock> parse_label_clock(std::string_view s) {
    if (s == "median") return LabelClock::Median;
    if (s == "equal_weight") return LabelClock::EqualWeight;
    return std::nullopt;
}

NavState truth_state(const Epoch& epoch, LabelClock clock) {
    if (!epoch.truth) throw MissingTruth();
    NavState s;
    s.position = *epoch.truth;
    // Geometric ranges at the fixed truth; the clock-only problem is linear.
    std::map<Constellation, std::vector<long double>> offsets;
    for (const auto& m : epoch.measurements) {
        const long double dx = static_cast<long double>(s.position.x) - m.sat_pos.x;
        const long double dy = static_cast<long double>(s.position.y) - m.sat_pos.y;
        const long double dz = static_cast<long double>(s.position.z) - m.sat_pos.z;
        offsets[m.constellation].push_back(m.pseudorange - std::sqrt(dx * dx + dy * dy + dz * dz));
    }
    for (auto& [c, v] : offsets) {
        long double est = 0.0L;
        if (clock == LabelClock::EqualWeight) {
            for (auto x : v) est += x;
            est /= static_cast<long double>(v.size());
        } else {
            std::sort(v.begin(), v.end());
            const std::size_t mid = v.size() / 2;
            est = v.size() % 2 ? v[mid] : (v[mid - 1] + v[mid]) / 2.0L;
        }
        s.clock_bias[c] = static_cast<double>(est / static_cast<long double>(kSpeedOfLight));
    }
    return s;
}

std::vector<double> make_labels(const Epoch& epoch, LabelClock clock, double eps) {
    const NavState truth = truth_state(epoch, clock);
    std::vector<double> out;
    out.reserve(epoch.size());
    for (const auto& m : epoch.measurements)
        out.push_back(std::log(std::max(std::abs(residual(truth, m)), eps)));
    return out;
}

WeightVector ground_truth_weights(const Epoch& epoch, LabelClock clock, double eps) {
    const NavState truth = truth_state(epoch, clock);
    WeightVector w;
    w.reserve(epoch.size());
    for (const auto& m : epoch.measurements) {
        const double e = std::max(std::abs(residual(truth, m)), eps);
        w.push_back(1.0 / (e * e));
    }
    return w;
}

}  // namespace snapweight
