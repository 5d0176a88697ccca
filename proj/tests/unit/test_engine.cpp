#include <gtest/gtest.h>

#include <map>

#include "test_support.hpp"
#include "v2hg/config.hpp"
#include "v2hg/engine.hpp"
#include "v2hg/predictors.hpp"

using namespace v2hg;

namespace {

struct Base {
    RunConfig config;
    RunData data;
};

const Base& base() {
    static const Base b = [] {
        Base x;
        x.config = load_run_config(std::filesystem::path(V2HG_DATA_DIR) / ".." / "configs" / "default.ini");
        x.data = load_run_data(x.config);
        return x;
    }();
    return b;
}

SimulationConfig sim(Scenario s, double gamma = 1.0, PredictorKind p = PredictorKind::oracle) {
    return make_simulation(base().config, base().data, CellSpec{s, gamma, 0.0, 0.0, std::nullopt}, nullptr, p);
}

struct Runs {
    SimulationConfig cfg_a, cfg_b;
    YearlyMetrics a, b;
};

const Runs& runs() {
    static const Runs r = [] {
        Runs x;
        x.cfg_a = sim(Scenario::A);
        x.cfg_b = sim(Scenario::B);
        x.a = run_year(x.cfg_a);
        x.b = run_year(x.cfg_b);
        return x;
    }();
    return r;
}

int parking_sessions(const YearlyMetrics& m) {
    int n = 0;
    for (std::size_t i = 0; i < m.ledger.size(); ++i)
        if (!m.ledger[i].driving && (i == 0 || m.ledger[i - 1].driving)) ++n;
    return n;
}

} // namespace

TEST(Trips, BoundsAndMeans) {
    const auto s = generate_trips(10000, 17);
    double dist = 0.0;
    for (const auto& t : s.trips) {
        const int pick = t.pickup_hour - 24 * t.day;
        EXPECT_GE(pick, 6);
        EXPECT_LE(pick, 10);
        EXPECT_GE(t.driving_hours(), 1);
        EXPECT_LE(t.arrival_hour - 24 * t.day, 23);
        EXPECT_GE(t.distance_km, 30.0);
        EXPECT_LE(t.distance_km, 40.0);
        dist += t.distance_km;
    }
    EXPECT_NEAR(dist / 10000.0, 35.0, 0.5);
    // durations stay within [7, 11] h whenever the return does not hit 23:00
    for (const auto& t : s.trips) {
        if (t.arrival_hour - 24 * t.day == 23) continue;
        EXPECT_GE(t.driving_hours(), 7);
        EXPECT_LE(t.driving_hours(), 11);
    }
    const auto again = generate_trips(50, 17);
    for (int d = 0; d < 50; ++d) EXPECT_EQ(again.trips[d].distance_km, s.trips[d].distance_km);
}

TEST(Trips, InvalidParamsRejected) {
    TripParams p;
    p.distance_km.sd = 0.0;
    EXPECT_THROW(generate_trips(1, 1, p), ValidationError);
    EXPECT_THROW(generate_trips(0, 1), ValidationError);
}

TEST(Engine, DrivingHours) {
    const auto& r = runs();
    const auto trips = generate_trips(365, r.cfg_a.seed, r.cfg_a.trips);
    const double range = r.cfg_a.spec.driving_range_km;
    EXPECT_NEAR(35.0 / 9.0 / 514.0, 0.00756, 1e-5);
    for (const auto& t : trips.trips) {
        const double dsoc = t.distance_km / t.driving_hours() / range;
        for (int h = t.pickup_hour; h < t.arrival_hour; ++h) {
            const auto& row = r.a.ledger[h];
            ASSERT_TRUE(row.driving);
            EXPECT_EQ(row.e_g2v + row.e_v2g + row.e_v2h, 0.0);
            EXPECT_EQ(row.e_g2h, row.hl_actual);
            const double prev = r.a.ledger[h - 1].soc;
            EXPECT_NEAR(prev - row.soc, dsoc, 1e-12);
        }
    }
}

TEST(Engine, PerfectPredictorSolvesOncePerSession) {
    const auto& r = runs();
    EXPECT_EQ(r.a.solver_failures, 0);
    EXPECT_EQ(r.a.optimizations, parking_sessions(r.a));
    EXPECT_EQ(parking_sessions(r.a), 366);
}

TEST(Engine, AlwaysWrongPredictorSolvesEveryParkedHour) {
    auto cfg = sim(Scenario::A);
    cfg.predictor = make_offset_predictor(cfg.load_kwh, 0.3);
    const auto m = run_year(cfg);
    int parked = 0;
    for (const auto& row : m.ledger) parked += row.driving ? 0 : 1;
    EXPECT_EQ(m.optimizations, parked);
    const auto audit = audit_ledger(cfg, m);
    EXPECT_LE(audit.max_energy_violation(), 1e-6);
}

TEST(Engine, GoalReachedWhenChargerAllows) {
    const auto& r = runs();
    const auto trips = generate_trips(365, r.cfg_a.seed, r.cfg_a.trips);
    const double eb = r.cfg_a.spec.capacity_kwh, emax = r.cfg_a.spec.max_hourly_energy_kwh;
    int arrival = 0, checked = 0;
    for (const auto& t : trips.trips) {
        const double soc_arrival = arrival == 0 ? r.cfg_a.initial_soc : r.a.ledger[arrival - 1].soc;
        if ((t.pickup_hour - arrival) * emax / eb >= 0.8 - soc_arrival) {
            EXPECT_GE(r.a.ledger[t.pickup_hour - 1].soc, 0.8 - 1e-6) << "day " << t.day;
            EXPECT_GE(r.b.ledger[t.pickup_hour - 1].soc, 0.8 - 1e-6) << "day " << t.day;
            ++checked;
        }
        arrival = t.arrival_hour;
    }
    EXPECT_GT(checked, 300);
}

TEST(Engine, ScenarioBIsUnidirectional) {
    const auto& r = runs();
    for (const auto& row : r.b.ledger) {
        ASSERT_EQ(row.e_v2g, 0.0);
        ASSERT_EQ(row.e_v2h, 0.0);
    }
    EXPECT_EQ(r.b.e_batt, r.b.e_g2v + r.b.e_drive);
    EXPECT_GT(r.a.e_batt, r.b.e_batt);
    EXPECT_LE(r.a.fc, r.b.fc);
}

TEST(Engine, AuditAndIdentities) {
    const auto& r = runs();
    for (const auto* pair : {&r.a, &r.b}) {
        const auto& cfg = pair == &r.a ? r.cfg_a : r.cfg_b;
        const auto audit = audit_ledger(cfg, *pair);
        EXPECT_LE(audit.max_energy_violation(), 1e-6);
        EXPECT_LE(audit.soc_recursion, 1e-9);
        EXPECT_LE(audit.cost_sum_eur, 1e-6);
        EXPECT_LE(audit.fc_identity_eur, 1e-6);
        EXPECT_LE(audit.bd_identity_pct, 1e-9);
        EXPECT_GE(pair->e_batt, pair->e_drive);
    }
}

// Replays the ledger flows through the battery model and the tariff.
TEST(Engine, LedgerReplayReproducesCosts) {
    const auto& r = runs();
    const auto& cfg = r.cfg_a;
    DegradationState st;
    st.age_hours = cfg.initial_age_hours;
    double soc = cfg.initial_soc, ec = 0.0;
    const double per_pct = battery_cost(1.0, net_value(cfg.economics, cfg.spec), cfg.spec.eol_fraction);
    for (const auto& row : r.a.ledger) {
        const auto step = total_degradation_step(st, cfg.temperature_k, soc, row.soc, row.e_g2v,
                                                 row.e_v2g + row.e_v2h + row.e_drive, 1.0, cfg.spec, *cfg.params,
                                                 cfg.constants);
        ASSERT_NEAR(step.total_pct, row.bd_increment, 1e-12 + 1e-9 * row.bd_increment) << "hour " << row.hour;
        ASSERT_NEAR(row.bc, step.total_pct * per_pct, 1e-9);
        ASSERT_NEAR(row.ec, (row.e_g2v + row.e_g2h) * cfg.prices[row.hour] - row.e_v2g * cfg.gamma * cfg.prices[row.hour],
                    1e-12);
        ec += row.ec;
        st = step.state;
        soc = row.soc;
    }
    EXPECT_NEAR(st.total_pct(), r.a.bd, 1e-9);
    EXPECT_NEAR(ec, r.a.ec, 1e-6);
}

TEST(Engine, Deterministic) {
    const auto again = run_year(runs().cfg_a);
    EXPECT_EQ(again.fc, runs().a.fc);
    EXPECT_EQ(again.bd, runs().a.bd);
    EXPECT_EQ(again.e_batt, runs().a.e_batt);
}

TEST(Engine, RejectsWrongLength) {
    auto cfg = sim(Scenario::B);
    cfg.prices.pop_back();
    EXPECT_THROW(run_year(cfg), ValidationError);
}

TEST(Predictors, PersistenceAndOracle) {
    std::vector<double> load(72);
    for (std::size_t i = 0; i < load.size(); ++i) load[i] = static_cast<double>(i);
    const auto oracle = make_oracle_predictor(load);
    EXPECT_EQ(oracle(10, 3), (std::vector<double>{11, 12, 13}));
    const auto pers = make_persistence_predictor(load);
    const auto p = pers(30, 2); // hours 31, 32 take hours 7, 8
    EXPECT_EQ(p, (std::vector<double>{7, 8}));
    const auto far = pers(30, 30); // hour 60 is still ahead of t - 24, so it steps back twice to 12
    EXPECT_EQ(far[29], 12.0);
}
