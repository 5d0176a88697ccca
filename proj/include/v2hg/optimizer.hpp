#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "v2hg/autodiff.hpp"
#include "v2hg/battery_model.hpp"
#include "v2hg/errors.hpp"
#include "v2hg/interior_point.hpp"

// Per-window nonlinear program: energy cost + battery cost + slack penalty
// under charger, SoC, goal, load-balance and grid limits.

namespace v2hg {

struct TariffSeries {
    std::vector<double> buy_price_eur_per_kwh;
    double price_ratio = 1.0;

    std::size_t size() const { return buy_price_eur_per_kwh.size(); }

    void validate() const {
        if (!(price_ratio >= 0.0 && price_ratio <= 1.0))
            throw ValidationError("tariff: price ratio must lie in [0,1]");
        for (double p : buy_price_eur_per_kwh)
            if (!std::isfinite(p)) throw ValidationError("tariff: non-finite price");
    }
};

/// Battery state and parameters a window is priced against.
struct DegradationContext {
    DegradationState state;
    VehicleBatterySpec spec;
    BatteryEconomics economics;
    std::shared_ptr<const DegradationParams> params;
    PhysicalConstants constants;
    double temperature_k = 288.15;

    double cost_per_pct() const {
        return battery_cost(1.0, net_value(economics, spec), spec.eol_fraction);
    }
};

struct OptimizationWindow {
    int start_hour = 0;
    std::vector<double> prices;             // EUR/kWh
    double price_ratio = 1.0;
    std::vector<double> predicted_load_kwh; // HL per hour
    double soc_initial = 0.6;
    std::vector<double> soc_goal;           // per hour, 0 = no goal
    std::vector<double> grid_limit_kwh;     // empty or +inf = unbounded
    bool v2g_enabled = true;
    bool v2h_enabled = true;
    DegradationContext degradation;

    int horizon_hours() const { return static_cast<int>(prices.size()); }

    double grid_limit(int k) const {
        return grid_limit_kwh.empty() ? std::numeric_limits<double>::infinity()
                                      : grid_limit_kwh[static_cast<std::size_t>(k)];
    }

    void validate() const {
        const std::size_t h = prices.size();
        if (h < 1) throw ValidationError("window: horizon must be >= 1");
        if (predicted_load_kwh.size() != h || soc_goal.size() != h ||
            (!grid_limit_kwh.empty() && grid_limit_kwh.size() != h))
            throw ValidationError("window: series lengths differ from horizon");
        if (!(soc_initial >= 0.0 && soc_initial <= 1.0))
            throw ValidationError("window: initial SoC outside [0,1]");
        if (!(price_ratio >= 0.0 && price_ratio <= 1.0))
            throw ValidationError("window: price ratio outside [0,1]");
        for (std::size_t k = 0; k < h; ++k) {
            if (!std::isfinite(prices[k])) throw ValidationError("window: non-finite price");
            if (!(predicted_load_kwh[k] >= 0.0) || !std::isfinite(predicted_load_kwh[k]))
                throw ValidationError("window: load must be finite and >= 0");
            if (!(soc_goal[k] >= 0.0 && soc_goal[k] <= 1.0))
                throw ValidationError("window: SoC goal outside [0,1]");
            if (!grid_limit_kwh.empty() && !(grid_limit_kwh[k] >= 0.0))
                throw ValidationError("window: grid limit must be >= 0");
        }
        if (!degradation.params) throw ValidationError("window: missing degradation parameters");
        degradation.spec.validate();
        degradation.economics.validate();
    }
};

struct FlowSchedule {
    std::vector<double> e_g2v, e_g2h, e_v2g, e_v2h;
    std::vector<double> slack; // SoC fraction
    std::vector<double> soc;   // after each hour

    static FlowSchedule zeros(int h) {
        const auto n = static_cast<std::size_t>(h);
        return {std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
                std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
    }
    int horizon() const { return static_cast<int>(e_g2v.size()); }
};

struct SolverConfig {
    double kkt_tolerance = 1e-8;
    int max_iterations = 300;
    double slack_penalty_eur_per_pp = 10.0;
    bool warm_start = true;
    double gate_smoothing_eps = 0.01;
    double curve_smoothing = 0.005; // knot rounding of the OCV / anode tables, SoC fraction
    bool degradation_denominator_freeze = true;
    double throughput_floor_ah = 10.0;
    double feasibility_tolerance = 1e-6;

    void validate() const {
        if (!(kkt_tolerance > 0.0)) throw ValidationError("solver: tolerance must be > 0");
        if (!(slack_penalty_eur_per_pp > 0.0)) throw ValidationError("solver: slack penalty must be > 0");
        if (!(gate_smoothing_eps > 0.0)) throw ValidationError("solver: gate smoothing must be > 0");
        if (!(curve_smoothing >= 0.0)) throw ValidationError("solver: curve smoothing must be >= 0");
        if (max_iterations < 1) throw ValidationError("solver: max iterations must be >= 1");
        if (!(throughput_floor_ah > 0.0)) throw ValidationError("solver: throughput floor must be > 0");
    }
};

struct ConstraintViolations {
    double nonnegativity = 0.0;   // flows and slack >= 0
    double charge_limit = 0.0;    // g2v <= E_max
    double discharge_limit = 0.0; // v2g + v2h <= E_max
    double soc_bounds = 0.0;
    double soc_recursion = 0.0;
    double goal = 0.0;
    double load_balance = 0.0;
    double grid_limit = 0.0;
    double disabled_flow = 0.0;   // nonzero V2G/V2H where disabled

    double max() const {
        return std::max({nonnegativity, charge_limit, discharge_limit, soc_bounds, soc_recursion, goal,
                         load_balance, grid_limit, disabled_flow});
    }
};

struct SolveReport {
    double objective_value = 0.0;
    double energy_cost = 0.0;
    double battery_cost = 0.0;
    double slack_cost = 0.0;
    double slack_total = 0.0; // SoC fraction
    double degradation_pct = 0.0;
    int iterations = 0;
    bool converged = false;
    double max_constraint_violation = 0.0;
    ConstraintViolations violations;
    std::string status;
};

template <typename S>
S energy_cost(const S& e_g2v, const S& e_g2h, const S& e_v2g, double price, double gamma) {
    return (e_g2v + e_g2h) * price - e_v2g * (gamma * price);
}

namespace detail {

inline FrozenDenominators frozen_for_hour(const DegradationState& s, int k, const SolverConfig& cfg) {
    FrozenDenominators f;
    const double advance = cfg.degradation_denominator_freeze ? 1.0 : static_cast<double>(k + 1);
    f.age_hours = std::max(s.age_hours + advance, 1.0);
    f.q_tot_ah = std::max(s.q_tot_ah, cfg.throughput_floor_ah);
    f.q_ch_ah = std::max(s.q_ch_ah, cfg.throughput_floor_ah);
    return f;
}

/// Energy cost + battery cost of hour k (no slack term).
template <typename S>
S hour_cost(const OptimizationWindow& w, int k, const FrozenDenominators& frozen, const GateOptions& gate,
            const S& soc_prev, const S& soc_now, const S& g2v, const S& v2g, const S& v2h) {
    const auto kk = static_cast<std::size_t>(k);
    const double p = w.prices[kk];
    const S g2h = w.predicted_load_kwh[kk] - v2h;
    const S ec = energy_cost<S>(g2v, g2h, v2g, p, w.price_ratio);
    const auto& dc = w.degradation;
    const auto inc = degradation_increments<S>(dc.state, dc.temperature_k, soc_prev, soc_now, g2v, v2g + v2h,
                                               1.0, dc.spec, *dc.params, dc.constants, gate, &frozen);
    return ec + inc.total() * dc.cost_per_pct();
}

} // namespace detail

/// The window NLP in reduced variables x = (g2v, v2g, v2h, slack_pp) per hour,
/// with g2h eliminated through the load balance. SoC is an affine function of
/// cumulative net charge, which the curvature assembly exploits.
class WindowModel {
public:
    enum class Kind { g2v, v2g, v2h, slack };

    WindowModel(const OptimizationWindow& w, const SolverConfig& cfg, double relax_kwh = 0.0)
        : w_(w), cfg_(cfg) {
        w_.validate();
        cfg_.validate();
        h_ = w_.horizon_hours();
        eb_ = w_.degradation.spec.capacity_kwh;
        emax_ = w_.degradation.spec.max_hourly_energy_kwh;
        gate_ = GateOptions{true, cfg_.gate_smoothing_eps, cfg_.curve_smoothing};
        idx_.assign(static_cast<std::size_t>(h_), {-1, -1, -1, -1});
        for (int k = 0; k < h_; ++k) {
            frozen_.push_back(detail::frozen_for_hour(w_.degradation.state, k, cfg_));
            const double hl = load(k);
            add_var(k, Kind::g2v, 1.0);
            if (w_.v2g_enabled) add_var(k, Kind::v2g, -1.0);
            if (w_.v2h_enabled && hl > 0.0) add_var(k, Kind::v2h, -1.0);
            if (goal(k) > 0.0) add_var(k, Kind::slack, 0.0);
        }
        const double s0 = w_.soc_initial;
        for (int k = 0; k < h_; ++k) {
            const auto& id = idx_[static_cast<std::size_t>(k)];
            add_row(-1, 0.0, {{id[0], -1.0}}, 0.0);
            add_row(-1, 0.0, {{id[0], 1.0}}, emax_);
            if (id[1] >= 0) add_row(-1, 0.0, {{id[1], -1.0}}, 0.0);
            if (id[2] >= 0) {
                add_row(-1, 0.0, {{id[2], -1.0}}, 0.0);
                add_row(-1, 0.0, {{id[2], 1.0}}, load(k));
            }
            if (id[1] >= 0 && id[2] >= 0) add_row(-1, 0.0, {{id[1], 1.0}, {id[2], 1.0}}, emax_);
            else if (id[1] >= 0) add_row(-1, 0.0, {{id[1], 1.0}}, emax_);
            else if (id[2] >= 0 && load(k) > emax_) add_row(-1, 0.0, {{id[2], 1.0}}, emax_);
            add_row(k, -1.0, {}, s0 * eb_);
            add_row(k, 1.0, {}, (1.0 - s0) * eb_);
            if (id[3] >= 0) {
                add_row(-1, 0.0, {{id[3], -1.0}}, 0.0);
                add_row(-1, 0.0, {{id[3], 1.0}}, 100.0 * goal(k) + 1.0);
                add_row(k, -1.0, {{id[3], -eb_ / 100.0}}, (s0 - goal(k)) * eb_);
            }
            const double g = w_.grid_limit(k);
            if (std::isfinite(g)) {
                std::vector<std::pair<int, double>> t{{id[0], 1.0}};
                if (id[2] >= 0) t.push_back({id[2], -1.0});
                add_row(-1, 0.0, std::move(t), g - load(k));
            }
        }
        for (auto& r : rows_) r.rhs += relax_kwh;
    }

    int num_vars() const { return static_cast<int>(vars_.size()); }
    int num_constraints() const { return static_cast<int>(rows_.size()); }
    int horizon() const { return h_; }
    const OptimizationWindow& window() const { return w_; }
    int index(int hour, Kind kind) const { return idx_[static_cast<std::size_t>(hour)][static_cast<int>(kind)]; }

    // -- objective -------------------------------------------------------

    double value(const Eigen::VectorXd& x) const {
        const auto cn = cumulative_net(x);
        double total = 0.0;
        for (int k = 0; k < h_; ++k) {
            const auto& id = idx_[static_cast<std::size_t>(k)];
            total += detail::hour_cost<double>(w_, k, frozen_[static_cast<std::size_t>(k)], gate_,
                                               soc_of(k == 0 ? 0.0 : cn[k - 1]), soc_of(cn[k]), at(x, id[0]),
                                               at(x, id[1]), at(x, id[2]));
            if (id[3] >= 0) total += cfg_.slack_penalty_eur_per_pp * x[id[3]];
        }
        return total;
    }

    void gradient(const Eigen::VectorXd& x, Eigen::VectorXd& g) const {
        using D = Dual<double, 5>;
        g.setZero(num_vars());
        std::vector<double> c(static_cast<std::size_t>(h_), 0.0);
        const auto cn = cumulative_net(x);
        for (int k = 0; k < h_; ++k) {
            const auto& id = idx_[static_cast<std::size_t>(k)];
            const std::array<double, 5> in = {k == 0 ? 0.0 : cn[k - 1], cn[k], at(x, id[0]), at(x, id[1]),
                                              at(x, id[2])};
            std::array<D, 5> v;
            for (int i = 0; i < 5; ++i) v[i] = make_variable<5>(in[i], i);
            const D f = detail::hour_cost<D>(w_, k, frozen_[static_cast<std::size_t>(k)], gate_, soc_of(v[0]),
                                             soc_of(v[1]), v[2], v[3], v[4]);
            if (k > 0) c[k - 1] += f.d[0];
            c[k] += f.d[1];
            for (int i = 0; i < 3; ++i)
                if (id[i] >= 0) g[id[i]] += f.d[2 + i];
            if (id[3] >= 0) g[id[3]] += cfg_.slack_penalty_eur_per_pp;
        }
        add_soc_transpose(c, g);
    }

    void hessian(const Eigen::VectorXd& x, Eigen::MatrixXd& m) const {
        using H = Hyper<5>;
        m.setZero(num_vars(), num_vars());
        Curvature cv(h_);
        const auto cn = cumulative_net(x);
        for (int k = 0; k < h_; ++k) {
            const auto& id = idx_[static_cast<std::size_t>(k)];
            const std::array<double, 5> in = {k == 0 ? 0.0 : cn[k - 1], cn[k], at(x, id[0]), at(x, id[1]),
                                              at(x, id[2])};
            std::array<H, 5> v;
            for (int i = 0; i < 5; ++i) v[i] = make_hyper_variable<5>(in[i], i);
            const H f = detail::hour_cost<H>(w_, k, frozen_[static_cast<std::size_t>(k)], gate_, soc_of(v[0]),
                                             soc_of(v[1]), v[2], v[3], v[4]);
            // slot -> (soc hour or -1, var or -1)
            const std::array<int, 5> soc_slot = {k - 1, k, -1, -1, -1};
            const std::array<int, 5> var_slot = {-1, -1, id[0], id[1], id[2]};
            for (int i = 0; i < 5; ++i) {
                for (int j = 0; j < 5; ++j) {
                    const double hij = f.d[i].d[j];
                    if (hij == 0.0) continue;
                    if (soc_slot[i] >= 0 && soc_slot[j] >= 0) {
                        cv.d(soc_slot[i], soc_slot[j]) += hij;
                    } else if (var_slot[i] >= 0 && var_slot[j] >= 0) {
                        m(var_slot[i], var_slot[j]) += hij;
                    } else if (soc_slot[i] >= 0 && var_slot[j] >= 0) {
                        cv.cross.push_back({soc_slot[i], var_slot[j], hij});
                    }
                }
            }
        }
        finalize(cv, m);
    }

    // -- linear constraints A x <= b -------------------------------------

    void slack(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
        multiply(x, out);
        for (std::size_t r = 0; r < rows_.size(); ++r) out[static_cast<Eigen::Index>(r)] = rows_[r].rhs - out[static_cast<Eigen::Index>(r)];
    }

    void multiply(const Eigen::VectorXd& dx, Eigen::VectorXd& out) const {
        const auto cn = cumulative_net(dx);
        out.resize(num_constraints());
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            const auto& row = rows_[r];
            double v = row.soc_hour >= 0 ? row.soc_coeff * cn[row.soc_hour] : 0.0;
            for (const auto& [j, a] : row.terms) v += a * dx[j];
            out[static_cast<Eigen::Index>(r)] = v;
        }
    }

    void multiply_transpose(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
        out.setZero(num_vars());
        std::vector<double> c(static_cast<std::size_t>(h_), 0.0);
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            const auto& row = rows_[r];
            const double vr = v[static_cast<Eigen::Index>(r)];
            if (row.soc_hour >= 0) c[row.soc_hour] += vr * row.soc_coeff;
            for (const auto& [j, a] : row.terms) out[j] += vr * a;
        }
        add_soc_transpose(c, out);
    }

    void add_gram(const Eigen::VectorXd& sigma, Eigen::MatrixXd& m) const {
        Curvature cv(h_);
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            const auto& row = rows_[r];
            const double s = sigma[static_cast<Eigen::Index>(r)];
            if (row.soc_hour >= 0) {
                cv.d(row.soc_hour, row.soc_hour) += s * row.soc_coeff * row.soc_coeff;
                for (const auto& [j, a] : row.terms) cv.cross.push_back({row.soc_hour, j, s * row.soc_coeff * a});
            }
            for (const auto& [i, a] : row.terms)
                for (const auto& [j, b] : row.terms) m(i, j) += s * a * b;
        }
        finalize(cv, m);
    }

    // -- conversions -----------------------------------------------------

    Eigen::VectorXd from_schedule(const FlowSchedule& s) const {
        if (s.horizon() != h_) throw ValidationError("schedule horizon differs from window");
        Eigen::VectorXd x(num_vars());
        for (const auto& v : vars_) {
            const auto k = static_cast<std::size_t>(v.hour);
            switch (v.kind) {
            case Kind::g2v: x[v.pos] = s.e_g2v[k]; break;
            case Kind::v2g: x[v.pos] = s.e_v2g[k]; break;
            case Kind::v2h: x[v.pos] = s.e_v2h[k]; break;
            case Kind::slack: x[v.pos] = 100.0 * s.slack[k]; break;
            }
        }
        return x;
    }

    FlowSchedule to_schedule(const Eigen::VectorXd& x) const {
        FlowSchedule s = FlowSchedule::zeros(h_);
        double soc = w_.soc_initial;
        for (int k = 0; k < h_; ++k) {
            const auto& id = idx_[static_cast<std::size_t>(k)];
            const auto kk = static_cast<std::size_t>(k);
            s.e_g2v[kk] = std::max(0.0, at(x, id[0]));
            s.e_v2g[kk] = std::max(0.0, at(x, id[1]));
            s.e_v2h[kk] = std::clamp(at(x, id[2]), 0.0, load(k));
            s.e_g2h[kk] = load(k) - s.e_v2h[kk];
            s.slack[kk] = std::max(0.0, at(x, id[3])) / 100.0;
            soc += (s.e_g2v[kk] - s.e_v2g[kk] - s.e_v2h[kk]) / eb_;
            s.soc[kk] = soc;
        }
        return s;
    }

    /// Heuristic strictly interior point: drift SoC toward one half with
    /// small two-way flows, slack just above what the goal needs.
    Eigen::VectorXd central_point() const {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(num_vars());
        double soc = w_.soc_initial;
        for (int k = 0; k < h_; ++k) {
            const auto& id = idx_[static_cast<std::size_t>(k)];
            const bool has_out = id[1] >= 0 || id[2] >= 0;
            double g2v = 0.0, out = 0.0;
            if (has_out) {
                const double net = std::clamp(0.5 * (0.5 - soc) * eb_, -0.3 * emax_, 0.3 * emax_);
                g2v = std::max(net, 0.0) + 0.1 * emax_;
                out = g2v - net;
            } else {
                g2v = std::min(0.3 * emax_, 0.25 * (1.0 - soc) * eb_);
            }
            x[id[0]] = g2v;
            if (id[1] >= 0 && id[2] >= 0) {
                const double v2h = std::min(0.5 * out, 0.5 * load(k));
                x[id[2]] = v2h;
                x[id[1]] = out - v2h;
            } else if (id[1] >= 0) {
                x[id[1]] = out;
            } else if (id[2] >= 0) {
                x[id[2]] = out;
            }
            soc += (g2v - out) / eb_;
            if (id[3] >= 0) x[id[3]] = std::max(0.0, (goal(k) - soc) * 100.0) + 0.5;
        }
        return x;
    }

    /// Random strictly feasible point on a segment from an interior point.
    template <class Rng>
    Eigen::VectorXd random_interior_point(const Eigen::VectorXd& interior, Rng& rng) const {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Eigen::VectorXd target(num_vars());
        for (const auto& v : vars_) {
            const double hi = v.kind == Kind::slack ? 100.0 * goal(v.hour) : v.kind == Kind::v2h ? std::min(load(v.hour), emax_) : emax_;
            target[v.pos] = u(rng) * hi;
        }
        const Eigen::VectorXd dir = target - interior;
        Eigen::VectorXd w0, adir;
        slack(interior, w0);
        multiply(dir, adir);
        const double tmax = ipm::detail::fraction_to_boundary(w0, -adir, 1.0);
        return interior + (0.9 * u(rng) * tmax) * dir;
    }

private:
    struct Var {
        int hour;
        Kind kind;
        double u; // effect on cumulative net charge (kWh)
        int pos;
    };
    struct Row {
        int soc_hour;     // -1: no cumulative-net term
        double soc_coeff; // multiplies cumulative net charge up to soc_hour
        std::vector<std::pair<int, double>> terms;
        double rhs;
    };
    struct Cross {
        int soc_hour;
        int var;
        double c;
    };
    struct Curvature {
        explicit Curvature(int h) : dm(Eigen::MatrixXd::Zero(h, h)) {}
        double& d(int a, int b) { return dm(a, b); }
        Eigen::MatrixXd dm;
        std::vector<Cross> cross;
    };

    void add_var(int k, Kind kind, double u) {
        const int pos = static_cast<int>(vars_.size());
        vars_.push_back({k, kind, u, pos});
        idx_[static_cast<std::size_t>(k)][static_cast<int>(kind)] = pos;
    }
    void add_row(int soc_hour, double soc_coeff, std::vector<std::pair<int, double>> terms, double rhs) {
        rows_.push_back({soc_hour, soc_coeff, std::move(terms), rhs});
    }

    double load(int k) const { return w_.predicted_load_kwh[static_cast<std::size_t>(k)]; }
    double goal(int k) const { return w_.soc_goal[static_cast<std::size_t>(k)]; }
    static double at(const Eigen::VectorXd& x, int i) { return i >= 0 ? x[i] : 0.0; }

    template <typename S>
    S soc_of(const S& cn) const {
        return w_.soc_initial + cn / eb_;
    }

    std::vector<double> cumulative_net(const Eigen::VectorXd& x) const {
        std::vector<double> cn(static_cast<std::size_t>(h_), 0.0);
        for (const auto& v : vars_) cn[static_cast<std::size_t>(v.hour)] += v.u * x[v.pos];
        for (int k = 1; k < h_; ++k) cn[k] += cn[k - 1];
        return cn;
    }

    // out += S' c, where row a of S maps x to cumulative net charge after hour a.
    void add_soc_transpose(std::vector<double> c, Eigen::VectorXd& out) const {
        for (int k = h_ - 2; k >= 0; --k) c[k] += c[k + 1];
        for (const auto& v : vars_)
            if (v.u != 0.0) out[v.pos] += v.u * c[static_cast<std::size_t>(v.hour)];
    }

    // m += S' D S + cross terms.
    void finalize(const Curvature& cv, Eigen::MatrixXd& m) const {
        Eigen::MatrixXd p = cv.dm;
        for (int i = h_ - 1; i >= 0; --i)
            for (int j = h_ - 1; j >= 0; --j) {
                if (i + 1 < h_) p(i, j) += p(i + 1, j);
                if (j + 1 < h_) p(i, j) += p(i, j + 1);
                if (i + 1 < h_ && j + 1 < h_) p(i, j) -= p(i + 1, j + 1);
            }
        for (const auto& a : vars_) {
            if (a.u == 0.0) continue;
            for (const auto& b : vars_) {
                if (b.u == 0.0) continue;
                m(a.pos, b.pos) += a.u * b.u * p(a.hour, b.hour);
            }
        }
        for (const auto& cr : cv.cross) {
            for (const auto& b : vars_) {
                if (b.u == 0.0 || b.hour > cr.soc_hour) continue;
                m(b.pos, cr.var) += cr.c * b.u;
                m(cr.var, b.pos) += cr.c * b.u;
            }
        }
    }

    OptimizationWindow w_;
    SolverConfig cfg_;
    int h_ = 0;
    double eb_ = 0.0;
    double emax_ = 0.0;
    GateOptions gate_;
    std::vector<Var> vars_;
    std::vector<Row> rows_;
    std::vector<std::array<int, 4>> idx_;
    std::vector<FrozenDenominators> frozen_;
};

/// Recomputes the objective with the exact gate and audits every constraint.
inline SolveReport evaluate_objective(const OptimizationWindow& w, const FlowSchedule& s, const SolverConfig& cfg) {
    w.validate();
    const int h = w.horizon_hours();
    const auto n = static_cast<std::size_t>(h);
    if (s.e_g2v.size() != n || s.e_g2h.size() != n || s.e_v2g.size() != n || s.e_v2h.size() != n ||
        s.slack.size() != n || s.soc.size() != n)
        throw ValidationError("evaluate_objective: schedule length differs from window horizon");

    const auto& dc = w.degradation;
    const double eb = dc.spec.capacity_kwh;
    const double emax = dc.spec.max_hourly_energy_kwh;
    SolveReport r;
    ConstraintViolations& v = r.violations;
    double soc_prev = w.soc_initial;
    for (std::size_t k = 0; k < n; ++k) {
        const double g2v = s.e_g2v[k], g2h = s.e_g2h[k], v2g = s.e_v2g[k], v2h = s.e_v2h[k];
        const double sl = s.slack[k], soc = s.soc[k];
        const double hl = w.predicted_load_kwh[k];
        v.nonnegativity = std::max({v.nonnegativity, -g2v, -g2h, -v2g, -v2h, -sl});
        v.charge_limit = std::max(v.charge_limit, g2v - emax);
        v.discharge_limit = std::max(v.discharge_limit, v2g + v2h - emax);
        v.soc_bounds = std::max({v.soc_bounds, -soc, soc - 1.0});
        v.soc_recursion = std::max(v.soc_recursion, std::abs(soc - (soc_prev + (g2v - v2g - v2h) / eb)));
        v.goal = std::max(v.goal, w.soc_goal[k] - soc - sl);
        v.load_balance = std::max(v.load_balance, std::abs(g2h + v2h - hl));
        const double g = w.grid_limit(static_cast<int>(k));
        if (std::isfinite(g)) v.grid_limit = std::max(v.grid_limit, g2v + g2h - g);
        if (!w.v2g_enabled) v.disabled_flow = std::max(v.disabled_flow, std::abs(v2g));
        if (!w.v2h_enabled) v.disabled_flow = std::max(v.disabled_flow, std::abs(v2h));

        const double ec = energy_cost(g2v, g2h, v2g, w.prices[k], w.price_ratio);
        const auto frozen = detail::frozen_for_hour(dc.state, static_cast<int>(k), cfg);
        const auto inc = degradation_increments<double>(
            dc.state, dc.temperature_k, std::clamp(soc_prev, 0.0, 1.0), std::clamp(soc, 0.0, 1.0),
            std::max(g2v, 0.0), std::max(v2g, 0.0) + std::max(v2h, 0.0), 1.0, dc.spec, *dc.params, dc.constants,
            GateOptions{}, &frozen);
        r.energy_cost += ec;
        r.degradation_pct += inc.total();
        r.battery_cost += inc.total() * dc.cost_per_pct();
        r.slack_total += std::max(sl, 0.0);
        r.slack_cost += cfg.slack_penalty_eur_per_pp * 100.0 * std::max(sl, 0.0);
        soc_prev = soc;
    }
    r.objective_value = r.energy_cost + r.battery_cost + r.slack_cost;
    r.max_constraint_violation = v.max();
    r.converged = r.max_constraint_violation <= cfg.feasibility_tolerance;
    r.status = "evaluated";
    return r;
}

namespace detail {

inline std::pair<FlowSchedule, SolveReport> solve_model(const OptimizationWindow& window, const SolverConfig& cfg,
                                                        const FlowSchedule* warm) {
    // Relaxation keeps SoC within the model's 1e-9 domain slop when no strict interior exists.
    constexpr double relax_kwh = 1e-8;
    std::unique_ptr<WindowModel> model = std::make_unique<WindowModel>(window, cfg);
    Eigen::VectorXd x0 = model->central_point();
    Eigen::VectorXd w;
    model->slack(x0, w);
    const bool center_ok = w.size() == 0 || w.minCoeff() > 0.0;

    if (cfg.warm_start && warm && warm->horizon() == model->horizon() && center_ok) {
        Eigen::VectorXd xw = 0.95 * model->from_schedule(*warm) + 0.05 * x0;
        model->slack(xw, w);
        if (w.size() == 0 || w.minCoeff() > 0.0) x0 = xw;
    }
    if (!center_ok) {
        auto [xi, margin] = ipm::find_interior(*model, x0, 1e-6);
        if (margin > 0.0) {
            x0 = xi;
        } else {
            model = std::make_unique<WindowModel>(window, cfg, relax_kwh);
            auto [xr, mr] = ipm::find_interior(*model, x0, 1e-9);
            if (!(mr > 0.0)) {
                SolveReport rep;
                rep.status = "no_interior";
                return {model->to_schedule(xr), rep};
            }
            x0 = xr;
        }
    }

    ipm::Options opt;
    opt.tolerance = cfg.kkt_tolerance;
    opt.max_iterations = cfg.max_iterations;
    const auto res = ipm::minimize(*model, x0, opt);
    FlowSchedule sched = model->to_schedule(res.x);
    SolveReport rep = evaluate_objective(window, sched, cfg);
    rep.iterations = res.iterations;
    rep.converged = res.converged() && rep.max_constraint_violation <= cfg.feasibility_tolerance;
    rep.status = ipm::to_string(res.status);
    return {std::move(sched), rep};
}

} // namespace detail

/// Solves the bidirectional window. On non-convergence the last iterate is
/// returned with converged = false.
inline std::pair<FlowSchedule, SolveReport> solve_window(const OptimizationWindow& window, const SolverConfig& cfg,
                                                         const FlowSchedule* warm = nullptr) {
    return detail::solve_model(window, cfg, warm);
}

/// Same window with V2G and V2H fixed at zero.
inline std::pair<FlowSchedule, SolveReport> solve_window_unidirectional(const OptimizationWindow& window,
                                                                        const SolverConfig& cfg,
                                                                        const FlowSchedule* warm = nullptr) {
    OptimizationWindow w = window;
    w.v2g_enabled = false;
    w.v2h_enabled = false;
    return detail::solve_model(w, cfg, warm);
}

/// Schedule that charges from the grid as early as needed to reach each goal
/// and supplies the home from the grid. Used as a fallback and as a reference.
inline FlowSchedule goal_charging_schedule(const OptimizationWindow& w) {
    const int h = w.horizon_hours();
    const double eb = w.degradation.spec.capacity_kwh;
    const double emax = w.degradation.spec.max_hourly_energy_kwh;
    FlowSchedule s = FlowSchedule::zeros(h);
    double soc = w.soc_initial;
    for (int k = 0; k < h; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        double target = 0.0;
        int deadline = -1;
        for (int j = k; j < h; ++j) {
            if (w.soc_goal[static_cast<std::size_t>(j)] > soc + 1e-12 &&
                w.soc_goal[static_cast<std::size_t>(j)] > target) {
                target = w.soc_goal[static_cast<std::size_t>(j)];
                deadline = j;
            }
        }
        double g2v = 0.0;
        if (deadline >= 0) {
            const double missing = (target - soc) * eb;
            const int hours_left = deadline - k + 1;
            // Charge late: only what cannot be deferred to later hours.
            const double deferrable = emax * (hours_left - 1);
            g2v = std::clamp(missing - deferrable, 0.0, emax);
        }
        g2v = std::min(g2v, (1.0 - soc) * eb);
        const double g = w.grid_limit(k);
        if (std::isfinite(g)) g2v = std::clamp(g - w.predicted_load_kwh[kk], 0.0, g2v);
        s.e_g2v[kk] = g2v;
        s.e_g2h[kk] = w.predicted_load_kwh[kk];
        soc += g2v / eb;
        s.soc[kk] = soc;
        s.slack[kk] = std::max(0.0, w.soc_goal[kk] - soc);
    }
    return s;
}

} // namespace v2hg
