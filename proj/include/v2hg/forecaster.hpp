#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "v2hg/errors.hpp"
#include "v2hg/time_series.hpp"

// Hybrid recurrent load forecaster: an LSTM encodes the 24 most recent hourly
// loads; its final hidden state is concatenated with calendar context for the
// same 24 hours and passed through two ReLU layers to a scalar next-hour load.

namespace v2hg {

struct ForecasterArchitecture {
    int lags = 24;
    int hidden = 50;
    int dense1 = 64;
    int dense2 = 32;
    static constexpr int context_per_lag = 3; // day_of_year, day_of_week, hour_of_day

    int context_size() const { return lags * context_per_lag; }

    int parameter_count() const {
        const int g = 4 * hidden;
        return g + g * hidden + g                            // LSTM W (input dim 1), U, b
               + dense1 * (hidden + context_size()) + dense1 // dense 1
               + dense2 * dense1 + dense2                    // dense 2
               + dense2 + 1;                                 // output
    }

    void validate() const {
        if (lags < 1 || hidden < 1 || dense1 < 1 || dense2 < 1)
            throw ValidationError("forecaster: layer sizes must be >= 1");
    }
};

struct FeatureVector {
    std::vector<double> lags;    // t-23 .. t, kWh
    std::vector<double> context; // per lag hour: day_of_year, day_of_week, hour_of_day
};

/// Min-max scaling parameters fitted on the training split.
struct Normalization {
    double load_min = 0.0, load_max = 1.0;
    std::array<double, 3> ctx_min{1.0, 0.0, 0.0};
    std::array<double, 3> ctx_max{365.0, 6.0, 23.0};

    static double range(double lo, double hi) { return hi > lo ? hi - lo : 1.0; }
    double load(double v) const { return (v - load_min) / range(load_min, load_max); }
    double load_inverse(double z) const { return z * range(load_min, load_max) + load_min; }
    double context(int i, double v) const { return (v - ctx_min[i]) / range(ctx_min[i], ctx_max[i]); }

    static Normalization fit(const std::vector<double>& loads, const std::vector<CalendarFeatures>& cal) {
        if (loads.empty()) throw ValidationError("normalization: empty training data");
        Normalization n;
        const auto [lo, hi] = std::minmax_element(loads.begin(), loads.end());
        n.load_min = *lo;
        n.load_max = *hi;
        n.ctx_min = {1e300, 1e300, 1e300};
        n.ctx_max = {-1e300, -1e300, -1e300};
        for (const auto& c : cal) {
            const std::array<double, 3> v{double(c.day_of_year), double(c.day_of_week), double(c.hour_of_day)};
            for (int i = 0; i < 3; ++i) {
                n.ctx_min[i] = std::min(n.ctx_min[i], v[i]);
                n.ctx_max[i] = std::max(n.ctx_max[i], v[i]);
            }
        }
        return n;
    }
};

struct TrainingConfig {
    int batch_size = 8;
    int epochs = 75;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-7;
    unsigned long long seed = 42;

    void validate() const {
        if (batch_size < 1) throw ValidationError("training: batch size must be >= 1");
        if (epochs < 1) throw ValidationError("training: epochs must be >= 1");
        if (!(learning_rate > 0.0)) throw ValidationError("training: learning rate must be > 0");
    }
};

struct TrainingLog {
    std::vector<double> epoch_loss; // mean squared error in normalised units
};

class ForecastModel {
public:
    ForecastModel() = default;
    ForecastModel(ForecasterArchitecture arch, Normalization norm, Eigen::VectorXd params)
        : arch_(arch), norm_(norm), params_(std::move(params)) {
        arch_.validate();
        if (params_.size() != arch_.parameter_count())
            throw ValidationError("forecaster: parameter count does not match architecture");
        if (!params_.allFinite()) throw ValidationError("forecaster: non-finite weights");
    }

    const ForecasterArchitecture& architecture() const { return arch_; }
    const Normalization& normalization() const { return norm_; }
    const Eigen::VectorXd& parameters() const { return params_; }
    Eigen::VectorXd& parameters() { return params_; }

private:
    ForecasterArchitecture arch_;
    Normalization norm_;
    Eigen::VectorXd params_;
};

namespace detail {

using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Views into the flat parameter (or gradient) vector.
template <class Vec>
struct LayerViews {
    using M = std::conditional_t<std::is_const_v<Vec>, Map<const MatrixXd>, Map<MatrixXd>>;
    using V = std::conditional_t<std::is_const_v<Vec>, Map<const VectorXd>, Map<VectorXd>>;
    M w, u;
    V b;
    M d1;
    V b1;
    M d2;
    V b2;
    M wo;
    V bo;

    LayerViews(Vec& p, const ForecasterArchitecture& a)
        : w(ptr(p, 0), 4 * a.hidden, 1), u(ptr(p, off_u(a)), 4 * a.hidden, a.hidden),
          b(ptr(p, off_b(a)), 4 * a.hidden),
          d1(ptr(p, off_d1(a)), a.dense1, a.hidden + a.context_size()), b1(ptr(p, off_b1(a)), a.dense1),
          d2(ptr(p, off_d2(a)), a.dense2, a.dense1), b2(ptr(p, off_b2(a)), a.dense2),
          wo(ptr(p, off_wo(a)), 1, a.dense2), bo(ptr(p, off_bo(a)), 1) {}

    static auto ptr(Vec& p, int off) { return p.data() + off; }
    static int off_u(const ForecasterArchitecture& a) { return 4 * a.hidden; }
    static int off_b(const ForecasterArchitecture& a) { return off_u(a) + 4 * a.hidden * a.hidden; }
    static int off_d1(const ForecasterArchitecture& a) { return off_b(a) + 4 * a.hidden; }
    static int off_b1(const ForecasterArchitecture& a) { return off_d1(a) + a.dense1 * (a.hidden + a.context_size()); }
    static int off_d2(const ForecasterArchitecture& a) { return off_b1(a) + a.dense1; }
    static int off_b2(const ForecasterArchitecture& a) { return off_d2(a) + a.dense2 * a.dense1; }
    static int off_wo(const ForecasterArchitecture& a) { return off_b2(a) + a.dense2; }
    static int off_bo(const ForecasterArchitecture& a) { return off_wo(a) + a.dense2; }
};

inline MatrixXd sigmoid(const MatrixXd& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

/// Forward pass cache for a batch (columns are samples).
struct ForwardCache {
    std::vector<MatrixXd> h, c, i, f, g, o; // h[0], c[0] are the zero initial states
    MatrixXd a0, z1, a1, z2, a2, y;
};

/// x: lags x batch (normalised loads), ctx: context_size x batch.
inline void forward(const ForecasterArchitecture& a, const LayerViews<const VectorXd>& p, const MatrixXd& x,
                    const MatrixXd& ctx, ForwardCache& fc) {
    const int hdim = a.hidden;
    const Eigen::Index batch = x.cols();
    fc.h.assign(static_cast<std::size_t>(a.lags + 1), MatrixXd::Zero(hdim, batch));
    fc.c.assign(static_cast<std::size_t>(a.lags + 1), MatrixXd::Zero(hdim, batch));
    fc.i.resize(static_cast<std::size_t>(a.lags));
    fc.f.resize(static_cast<std::size_t>(a.lags));
    fc.g.resize(static_cast<std::size_t>(a.lags));
    fc.o.resize(static_cast<std::size_t>(a.lags));
    MatrixXd z(4 * hdim, batch);
    for (int t = 0; t < a.lags; ++t) {
        const auto tt = static_cast<std::size_t>(t);
        z.noalias() = p.u * fc.h[tt];
        z += p.w * x.row(t);
        z.colwise() += p.b;
        fc.i[tt] = sigmoid(z.topRows(hdim));
        fc.f[tt] = sigmoid(z.middleRows(hdim, hdim));
        fc.g[tt] = z.middleRows(2 * hdim, hdim).array().tanh().matrix();
        fc.o[tt] = sigmoid(z.bottomRows(hdim));
        fc.c[tt + 1] = (fc.f[tt].array() * fc.c[tt].array() + fc.i[tt].array() * fc.g[tt].array()).matrix();
        fc.h[tt + 1] = (fc.o[tt].array() * fc.c[tt + 1].array().tanh()).matrix();
    }
    fc.a0.resize(hdim + a.context_size(), batch);
    fc.a0.topRows(hdim) = fc.h.back();
    fc.a0.bottomRows(a.context_size()) = ctx;
    fc.z1 = p.d1 * fc.a0;
    fc.z1.colwise() += p.b1;
    fc.a1 = fc.z1.cwiseMax(0.0);
    fc.z2 = p.d2 * fc.a1;
    fc.z2.colwise() += p.b2;
    fc.a2 = fc.z2.cwiseMax(0.0);
    fc.y = p.wo * fc.a2;
    fc.y.array() += p.bo[0];
}

/// Accumulates d(loss)/d(params) into grad given d(loss)/dy.
inline void backward(const ForecasterArchitecture& a, const LayerViews<const VectorXd>& p, const MatrixXd& x,
                     const ForwardCache& fc, const MatrixXd& dy, LayerViews<VectorXd>& gr) {
    const int hdim = a.hidden;
    gr.wo += dy * fc.a2.transpose();
    gr.bo[0] += dy.sum();
    MatrixXd dz2 = p.wo.transpose() * dy;
    dz2.array() *= (fc.z2.array() > 0.0).cast<double>();
    gr.d2 += dz2 * fc.a1.transpose();
    gr.b2 += dz2.rowwise().sum();
    MatrixXd dz1 = p.d2.transpose() * dz2;
    dz1.array() *= (fc.z1.array() > 0.0).cast<double>();
    gr.d1 += dz1 * fc.a0.transpose();
    gr.b1 += dz1.rowwise().sum();
    MatrixXd dh = (p.d1.transpose() * dz1).topRows(hdim);

    MatrixXd dc_next = MatrixXd::Zero(hdim, x.cols());
    MatrixXd dz(4 * hdim, x.cols());
    for (int t = a.lags - 1; t >= 0; --t) {
        const auto tt = static_cast<std::size_t>(t);
        const auto& i = fc.i[tt].array();
        const auto& f = fc.f[tt].array();
        const auto& g = fc.g[tt].array();
        const auto& o = fc.o[tt].array();
        const Eigen::ArrayXXd tc = fc.c[tt + 1].array().tanh();
        const Eigen::ArrayXXd dc = dc_next.array() + dh.array() * o * (1.0 - tc * tc);
        dz.topRows(hdim) = (dc * g * i * (1.0 - i)).matrix();
        dz.middleRows(hdim, hdim) = (dc * fc.c[tt].array() * f * (1.0 - f)).matrix();
        dz.middleRows(2 * hdim, hdim) = (dc * i * (1.0 - g * g)).matrix();
        dz.bottomRows(hdim) = (dh.array() * tc * o * (1.0 - o)).matrix();
        dc_next = (dc * f).matrix();
        gr.w += dz * x.row(t).transpose();
        gr.u += dz * fc.h[tt].transpose();
        gr.b += dz.rowwise().sum();
        dh = p.u.transpose() * dz;
    }
}

inline void fill_inputs(const ForecasterArchitecture& a, const Normalization& n, const FeatureVector& fv,
                        MatrixXd& x, MatrixXd& ctx, Eigen::Index col) {
    if (static_cast<int>(fv.lags.size()) != a.lags || static_cast<int>(fv.context.size()) != a.context_size())
        throw ValidationError("forecaster: feature shape mismatch");
    for (int t = 0; t < a.lags; ++t) x(t, col) = n.load(fv.lags[static_cast<std::size_t>(t)]);
    for (int j = 0; j < a.context_size(); ++j)
        ctx(j, col) = n.context(j % ForecasterArchitecture::context_per_lag, fv.context[static_cast<std::size_t>(j)]);
}

inline void append_context(std::vector<double>& ctx, const CalendarFeatures& c) {
    ctx.push_back(c.day_of_year);
    ctx.push_back(c.day_of_week);
    ctx.push_back(c.hour_of_day);
}

} // namespace detail

/// Lags t-lags+1 .. t and their calendar context.
inline FeatureVector extract_features(const HourlySeries& s, std::size_t t, int lags = 24) {
    if (t + 1 < static_cast<std::size_t>(lags) || t >= s.size())
        throw ValidationError("extract_features: need " + std::to_string(lags) + " hours of history up to t");
    FeatureVector fv;
    fv.lags.reserve(static_cast<std::size_t>(lags));
    for (std::size_t k = t + 1 - static_cast<std::size_t>(lags); k <= t; ++k) {
        if (!(s.value[k] >= 0.0)) throw ValidationError("extract_features: negative load in history");
        fv.lags.push_back(s.value[k]);
        detail::append_context(fv.context, s.calendar(k));
    }
    return fv;
}

inline double predict_one(const ForecastModel& m, const FeatureVector& fv) {
    const auto& a = m.architecture();
    Eigen::MatrixXd x(a.lags, 1), ctx(a.context_size(), 1);
    detail::fill_inputs(a, m.normalization(), fv, x, ctx, 0);
    detail::ForwardCache fc;
    detail::forward(a, detail::LayerViews<const Eigen::VectorXd>(m.parameters(), a), x, ctx, fc);
    return std::max(0.0, m.normalization().load_inverse(fc.y(0, 0)));
}

/// Recursive rollout for hours t_now+1 .. t_now+horizon; each prediction
/// feeds the lag window of the next step, the calendar follows the clock.
inline std::vector<double> predict_horizon(const ForecastModel& m, const HourlySeries& history, std::size_t t_now,
                                           int horizon) {
    if (horizon < 1) throw ValidationError("predict_horizon: horizon must be >= 1");
    const int lags = m.architecture().lags;
    FeatureVector fv = extract_features(history, t_now, lags);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(horizon));
    TimePoint clock = history.time[t_now];
    for (int k = 0; k < horizon; ++k) {
        const double y = predict_one(m, fv);
        out.push_back(y);
        clock += std::chrono::hours(1);
        fv.lags.erase(fv.lags.begin());
        fv.lags.push_back(y);
        fv.context.erase(fv.context.begin(), fv.context.begin() + ForecasterArchitecture::context_per_lag);
        detail::append_context(fv.context, calendar_at(clock));
    }
    return out;
}

/// Glorot-uniform weights, zero biases except forget-gate bias 1.
inline Eigen::VectorXd initial_parameters(const ForecasterArchitecture& a, std::mt19937_64& rng) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(a.parameter_count());
    detail::LayerViews<Eigen::VectorXd> v(p, a);
    auto glorot = [&](auto& m) {
        const double lim = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
        std::uniform_real_distribution<double> u(-lim, lim);
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
    };
    glorot(v.w);
    glorot(v.u);
    glorot(v.d1);
    glorot(v.d2);
    glorot(v.wo);
    v.b.segment(a.hidden, a.hidden).setOnes();
    return p;
}

/// Trains on every 24-lag window of the series predicting the next hour.
inline ForecastModel train(const HourlySeries& series, const TrainingConfig& cfg,
                           const ForecasterArchitecture& arch = {}, TrainingLog* log = nullptr,
                           const std::function<void(int, double)>& on_epoch = {}) {
    cfg.validate();
    arch.validate();
    const auto n_total = series.size();
    if (n_total < static_cast<std::size_t>(arch.lags + 1))
        throw ValidationError("train: series shorter than one lag window plus target");

    std::vector<CalendarFeatures> cal(n_total);
    for (std::size_t t = 0; t < n_total; ++t) cal[t] = series.calendar(t);
    const Normalization norm = Normalization::fit(series.value, cal);

    // Pre-normalised inputs for every sample.
    const std::size_t n_samples = n_total - static_cast<std::size_t>(arch.lags);
    const int ctx_n = arch.context_size();
    Eigen::MatrixXd all_x(arch.lags, static_cast<Eigen::Index>(n_samples));
    Eigen::MatrixXd all_ctx(ctx_n, static_cast<Eigen::Index>(n_samples));
    Eigen::VectorXd all_y(static_cast<Eigen::Index>(n_samples));
    for (std::size_t s = 0; s < n_samples; ++s) {
        const auto col = static_cast<Eigen::Index>(s);
        for (int k = 0; k < arch.lags; ++k) {
            const std::size_t t = s + static_cast<std::size_t>(k);
            all_x(k, col) = norm.load(series.value[t]);
            all_ctx(3 * k, col) = norm.context(0, cal[t].day_of_year);
            all_ctx(3 * k + 1, col) = norm.context(1, cal[t].day_of_week);
            all_ctx(3 * k + 2, col) = norm.context(2, cal[t].hour_of_day);
        }
        all_y[col] = norm.load(series.value[s + static_cast<std::size_t>(arch.lags)]);
    }

    std::mt19937_64 rng(cfg.seed);
    Eigen::VectorXd params = initial_parameters(arch, rng);
    Eigen::VectorXd grad(params.size()), m1 = Eigen::VectorXd::Zero(params.size()),
        m2 = Eigen::VectorXd::Zero(params.size());
    std::vector<std::size_t> order(n_samples);
    std::iota(order.begin(), order.end(), 0);
    long long step = 0;
    detail::ForwardCache fc;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n_samples; start += static_cast<std::size_t>(cfg.batch_size)) {
            const auto bsz = static_cast<Eigen::Index>(std::min<std::size_t>(cfg.batch_size, n_samples - start));
            Eigen::MatrixXd x(arch.lags, bsz), ctx(ctx_n, bsz), target(1, bsz);
            for (Eigen::Index j = 0; j < bsz; ++j) {
                const auto s = static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(j)]);
                x.col(j) = all_x.col(s);
                ctx.col(j) = all_ctx.col(s);
                target(0, j) = all_y[s];
            }
            const detail::LayerViews<const Eigen::VectorXd> pv(params, arch);
            detail::forward(arch, pv, x, ctx, fc);
            const Eigen::MatrixXd err = fc.y - target;
            loss_sum += err.squaredNorm();
            grad.setZero();
            detail::LayerViews<Eigen::VectorXd> gv(grad, arch);
            detail::backward(arch, pv, x, fc, (2.0 / static_cast<double>(bsz)) * err, gv);

            ++step;
            m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * grad;
            m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
            const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            params.array() -= cfg.learning_rate * (m1.array() / c1) / ((m2.array() / c2).sqrt() + cfg.adam_eps);
        }
        const double epoch_loss = loss_sum / static_cast<double>(n_samples);
        if (!std::isfinite(epoch_loss)) throw SolverError("train: loss diverged");
        if (log) log->epoch_loss.push_back(epoch_loss);
        if (on_epoch) on_epoch(epoch + 1, epoch_loss);
    }
    return ForecastModel(arch, norm, std::move(params));
}

} // namespace v2hg
