#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"
#include "v2hg/data_io.hpp"
#include "v2hg/forecaster.hpp"
#include "v2hg/model_io.hpp"

using namespace v2hg;

namespace {

ForecasterArchitecture tiny() {
    ForecasterArchitecture a;
    a.lags = 3;
    a.hidden = 2;
    a.dense1 = 3;
    a.dense2 = 2;
    return a;
}

ForecasterArchitecture small() {
    ForecasterArchitecture a;
    a.hidden = 8;
    a.dense1 = 16;
    a.dense2 = 8;
    return a;
}

HourlySeries sinusoid(std::size_t hours) {
    SyntheticLoadParams p;
    p.kind = SyntheticLoadKind::sinusoid;
    p.hours = hours;
    return generate_synthetic_load(p, 1);
}

double batch_loss(const ForecasterArchitecture& a, const Eigen::VectorXd& params, const Eigen::MatrixXd& x,
                  const Eigen::MatrixXd& ctx, const Eigen::MatrixXd& target) {
    detail::ForwardCache fc;
    detail::forward(a, detail::LayerViews<const Eigen::VectorXd>(params, a), x, ctx, fc);
    return (fc.y - target).squaredNorm();
}

} // namespace

TEST(Features, ConstantSeries) {
    const auto s = HourlySeries::regular(utc(2021, 5, 1), std::vector<double>(48, 0.7));
    const auto f = extract_features(s, 30);
    ASSERT_EQ(f.lags.size(), 24u);
    ASSERT_EQ(f.context.size(), 72u);
    for (double v : f.lags) EXPECT_EQ(v, 0.7);
    EXPECT_THROW(extract_features(s, 22), ValidationError);
    EXPECT_THROW(extract_features(s, 48), ValidationError);
}

TEST(Features, MidnightNewYearWrap) {
    const auto s = HourlySeries::regular(utc(2021, 12, 31), std::vector<double>(48, 1.0));
    const auto f = extract_features(s, 24); // 2022-01-01 00:00
    for (int k = 0; k < 23; ++k) {
        EXPECT_EQ(f.context[3 * k], 365);
        EXPECT_EQ(f.context[3 * k + 2], k + 1);
    }
    EXPECT_EQ(f.context[69], 1);
    EXPECT_EQ(f.context[71], 0);
}

TEST(Features, PeriodicSeriesDiffersOnlyInCalendar) {
    const auto s = sinusoid(24 * 5);
    const auto a = extract_features(s, 40), b = extract_features(s, 64);
    for (std::size_t k = 0; k < a.lags.size(); ++k) EXPECT_NEAR(a.lags[k], b.lags[k], 1e-12);
    for (std::size_t k = 0; k < 24; ++k) {
        EXPECT_EQ(a.context[3 * k + 2], b.context[3 * k + 2]);
        EXPECT_NE(a.context[3 * k], b.context[3 * k]);
    }
}

TEST(Network, BackpropMatchesFiniteDifferences) {
    const auto a = tiny();
    std::mt19937_64 rng(3);
    Eigen::VectorXd p = initial_parameters(a, rng);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] += u(rng); // move biases off zero
    Eigen::MatrixXd x(a.lags, 4), ctx(a.context_size(), 4), target(1, 4);
    for (Eigen::Index j = 0; j < 4; ++j) {
        for (int i = 0; i < a.lags; ++i) x(i, j) = u(rng) + 0.5;
        for (int i = 0; i < a.context_size(); ++i) ctx(i, j) = u(rng) + 0.5;
        target(0, j) = u(rng);
    }
    detail::ForwardCache fc;
    const detail::LayerViews<const Eigen::VectorXd> pv(p, a);
    detail::forward(a, pv, x, ctx, fc);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(p.size());
    detail::LayerViews<Eigen::VectorXd> gv(grad, a);
    detail::backward(a, pv, x, fc, 2.0 * (fc.y - target), gv);

    const double h = 1e-6;
    double diff = 0.0, scale = 1e-12;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        Eigen::VectorXd pp = p, pm = p;
        pp[i] += h;
        pm[i] -= h;
        const double fd = (batch_loss(a, pp, x, ctx, target) - batch_loss(a, pm, x, ctx, target)) / (2 * h);
        diff = std::max(diff, std::abs(fd - grad[i]));
        scale = std::max({scale, std::abs(fd), std::abs(grad[i])});
    }
    EXPECT_LT(diff / scale, 1e-5);
}

TEST(Network, NormalizationRoundTrip) {
    const auto s = sinusoid(200);
    std::vector<CalendarFeatures> cal;
    for (std::size_t i = 0; i < s.size(); ++i) cal.push_back(s.calendar(i));
    const auto n = Normalization::fit(s.value, cal);
    for (double v : s.value) EXPECT_NEAR(n.load_inverse(n.load(v)), v, 1e-9);
    EXPECT_NEAR(n.load(n.load_min), 0.0, 1e-12);
    EXPECT_NEAR(n.load(n.load_max), 1.0, 1e-12);
}

TEST(Network, NegativeOutputClampedToZero) {
    const auto a = small();
    Eigen::VectorXd p = Eigen::VectorXd::Zero(a.parameter_count());
    p[p.size() - 1] = -0.1; // output bias, normalised units
    const ForecastModel m(a, Normalization{}, p);
    const auto s = HourlySeries::regular(utc(2021, 1, 1), std::vector<double>(30, 0.5));
    EXPECT_EQ(predict_one(m, extract_features(s, 29)), 0.0);
}

TEST(Network, RolloutBaseCaseAndPrefix) {
    const auto a = small();
    std::mt19937_64 rng(8);
    const ForecastModel m(a, Normalization{}, initial_parameters(a, rng));
    const auto s = sinusoid(100);
    const auto one = predict_horizon(m, s, 50, 1);
    EXPECT_EQ(one[0], predict_one(m, extract_features(s, 50)));
    const auto twelve = predict_horizon(m, s, 50, 12);
    const auto five = predict_horizon(m, s, 50, 5);
    for (int k = 0; k < 5; ++k) EXPECT_EQ(five[k], twelve[k]);
    for (double v : twelve) EXPECT_TRUE(std::isfinite(v) && v >= 0.0);
    EXPECT_THROW(predict_horizon(m, s, 50, 0), ValidationError);
    EXPECT_THROW(predict_horizon(m, s, 10, 3), ValidationError);
}

TEST(Training, ConstantLoadIsLearnedAndDeterministic) {
    SyntheticLoadParams c;
    c.kind = SyntheticLoadKind::constant;
    c.mean_kwh = 0.9;
    c.hours = 24 * 20;
    const auto s = generate_synthetic_load(c, 1);
    TrainingConfig cfg;
    cfg.epochs = 15;
    TrainingLog log;
    const auto m = train(s, cfg, small(), &log);
    const auto roll = predict_horizon(m, s, s.size() - 1, 12);
    for (double v : roll) EXPECT_NEAR(v, 0.9, 0.045);
    const auto m2 = train(s, cfg, small());
    EXPECT_LE((m.parameters() - m2.parameters()).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_EQ(log.epoch_loss.size(), 15u);
}

TEST(Training, SinusoidLossFalls) {
    const auto s = sinusoid(24 * 20);
    TrainingConfig cfg;
    cfg.epochs = 12;
    TrainingLog log;
    train(s, cfg, small(), &log);
    EXPECT_LT(log.epoch_loss.back(), 0.5 * log.epoch_loss.front());
}

TEST(Training, RejectsBadInput) {
    TrainingConfig bad;
    bad.batch_size = 0;
    EXPECT_THROW(bad.validate(), ValidationError);
    EXPECT_THROW(train(sinusoid(10), TrainingConfig{}, small()), ValidationError);
}

TEST(ModelIo, RoundTripAndMalformed) {
    const auto a = small();
    std::mt19937_64 rng(4);
    Normalization n;
    n.load_min = 0.2;
    n.load_max = 3.1;
    const ForecastModel m(a, n, initial_parameters(a, rng));
    const auto dir = test::scratch_dir("model_io");
    save_model(m, dir / "m.json");
    const auto r = load_model(dir / "m.json");
    EXPECT_EQ(r.architecture().hidden, a.hidden);
    EXPECT_EQ(r.normalization().load_max, 3.1);
    EXPECT_EQ(r.parameters(), m.parameters());

    auto j = model_to_json(m);
    j["parameters"].erase(0);
    EXPECT_THROW(model_from_json(j), ValidationError);
    auto k = model_to_json(m);
    k.erase("normalization");
    EXPECT_THROW(model_from_json(k), ValidationError);
    auto v = model_to_json(m);
    v["version"] = 99;
    EXPECT_THROW(model_from_json(v), ValidationError);
    EXPECT_THROW(load_model(dir / "absent.json"), ValidationError);
}
