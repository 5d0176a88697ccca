#pragma once

#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "v2hg/battery_model.hpp"
#include "v2hg/errors.hpp"
#include "v2hg/optimizer.hpp"

namespace v2hg {

struct OracleResult {
    FlowSchedule schedule;
    double objective = 0.0;
    long long evaluated = 0;
};

/// Exhaustive search over flows on a kWh grid, evaluated with the exact gate.
///
/// Hours are independent given the battery energy level, so the search runs
/// as dynamic programming over the set of reachable energy levels. For a
/// given total discharge, supplying the home before selling is never worse
/// (the home saves p per kWh, selling earns gamma*p <= p, degradation only
/// sees the total), so V2H is set by the load split.
inline OracleResult brute_force_oracle(const OptimizationWindow& w, double grid_step_kwh,
                                       const SolverConfig& cfg = {}) {
    w.validate();
    const int h = w.horizon_hours();
    const auto& dc = w.degradation;
    const double eb = dc.spec.capacity_kwh;
    const double emax = dc.spec.max_hourly_energy_kwh;
    if (!(grid_step_kwh > 0.0)) throw DomainError("oracle: grid step must be > 0");
    if (h > 4 || emax / grid_step_kwh > 23.0 + 1e-9)
        throw DomainError("oracle: window too large for exhaustive search (horizon <= 4, E_max/step <= 23)");

    const int steps = static_cast<int>(std::floor(emax / grid_step_kwh + 1e-9));
    std::vector<double> grid;
    for (int i = 0; i <= steps; ++i) grid.push_back(i * grid_step_kwh);

    struct Node {
        double cost;
        long long parent;
        double energy;
        double g2v, v2g, v2h, slack;
    };
    auto key = [](double e) { return std::llround(e * 1e9); };
    std::vector<std::map<long long, Node>> stage(static_cast<std::size_t>(h + 1));
    const double e0 = w.soc_initial * eb;
    stage[0][key(e0)] = Node{0.0, 0, e0, 0, 0, 0, 0};
    const double per_pct = dc.cost_per_pct();
    OracleResult out;

    for (int k = 0; k < h; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const double hl = w.predicted_load_kwh[kk];
        const double price = w.prices[kk];
        const double goal = w.soc_goal[kk];
        const double glim = w.grid_limit(k);
        const auto frozen = detail::frozen_for_hour(dc.state, k, cfg);

        std::vector<double> outs{0.0};
        if (w.v2g_enabled || w.v2h_enabled) {
            const double cap = w.v2g_enabled ? emax : std::min(hl, emax);
            outs.clear();
            for (double g : grid)
                if (g <= cap + 1e-12) outs.push_back(g);
            if (w.v2h_enabled && hl < cap && std::abs(std::round(hl / grid_step_kwh) * grid_step_kwh - hl) > 1e-12)
                outs.push_back(hl);
            if (!w.v2g_enabled && std::abs(outs.back() - cap) > 1e-12) outs.push_back(cap);
        }

        for (const auto& [pkey, node] : stage[kk]) {
            const double soc_prev = node.energy / eb;
            for (double g2v : grid) {
                for (double e_out : outs) {
                    const double v2h = w.v2h_enabled ? std::min(e_out, hl) : 0.0;
                    const double v2g = e_out - v2h;
                    if (!w.v2g_enabled && v2g > 1e-12) continue;
                    const double g2h = hl - v2h;
                    if (g2v + g2h > glim + 1e-12) continue;
                    const double e_new = node.energy + g2v - e_out;
                    if (e_new < -1e-9 || e_new > eb + 1e-9) continue;
                    const double soc_now = std::clamp(e_new / eb, 0.0, 1.0);

                    const double ec = (g2v + g2h) * price - w.price_ratio * price * v2g;
                    const auto inc = degradation_increments<double>(
                        dc.state, dc.temperature_k, std::clamp(soc_prev, 0.0, 1.0), soc_now, g2v, e_out, 1.0,
                        dc.spec, *dc.params, dc.constants, GateOptions{}, &frozen);
                    const double slack_pp = goal > 0.0 ? std::max(0.0, (goal - soc_now) * 100.0) : 0.0;
                    const double cost =
                        node.cost + ec + inc.total() * per_pct + cfg.slack_penalty_eur_per_pp * slack_pp;
                    ++out.evaluated;

                    auto& next = stage[kk + 1];
                    const long long nk = key(e_new);
                    auto it = next.find(nk);
                    if (it == next.end() || cost < it->second.cost)
                        next[nk] = Node{cost, pkey, e_new, g2v, v2g, v2h, slack_pp / 100.0};
                }
            }
        }
        if (stage[kk + 1].empty()) throw SolverError("oracle: no feasible discrete schedule");
    }

    auto best = stage[static_cast<std::size_t>(h)].begin();
    for (auto it = best; it != stage[static_cast<std::size_t>(h)].end(); ++it)
        if (it->second.cost < best->second.cost) best = it;

    out.objective = best->second.cost;
    out.schedule = FlowSchedule::zeros(h);
    long long cur = best->first;
    for (int k = h; k >= 1; --k) {
        const Node& n = stage[static_cast<std::size_t>(k)].at(cur);
        const auto kk = static_cast<std::size_t>(k - 1);
        out.schedule.e_g2v[kk] = n.g2v;
        out.schedule.e_v2g[kk] = n.v2g;
        out.schedule.e_v2h[kk] = n.v2h;
        out.schedule.e_g2h[kk] = w.predicted_load_kwh[kk] - n.v2h;
        out.schedule.slack[kk] = n.slack;
        out.schedule.soc[kk] = n.energy / eb;
        cur = n.parent;
    }
    return out;
}

} // namespace v2hg
