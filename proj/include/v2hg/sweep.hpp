#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "v2hg/config.hpp"
#include "v2hg/engine.hpp"
#include "v2hg/errors.hpp"

namespace v2hg {

struct SweepGrid {
    std::vector<double> gammas{0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<double> capacities_kwh{41.0, 61.5, 82.0, 102.5};
    std::vector<double> load_multipliers{1.0, 4.0, 8.0};

    void validate() const {
        if (gammas.empty() || capacities_kwh.empty() || load_multipliers.empty())
            throw ValidationError("sweep: every value list must be nonempty");
        for (double g : gammas)
            if (!(g >= 0.0 && g <= 1.0)) throw ValidationError("sweep: gamma outside [0,1]");
        for (double c : capacities_kwh)
            if (!(c > 0.0)) throw ValidationError("sweep: capacity must be > 0");
        for (double m : load_multipliers)
            if (!(m > 0.0)) throw ValidationError("sweep: load multiplier must be > 0");
    }
};

struct SweepRow {
    double gamma = 0.0;
    double capacity_kwh = 0.0;
    double load_multiplier = 0.0;
    double fc_a = 0.0, fc_b = 0.0;
    double bd_a = 0.0, bd_b = 0.0;
    double e_v2g_a = 0.0, e_v2h_a = 0.0;
    int failures_a = 0, failures_b = 0;

    double gain() const { return fc_b - fc_a; }
};

/// Runs `jobs` on up to `threads` workers; the first exception is rethrown.
inline void parallel_for(std::size_t jobs, unsigned threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(jobs, 1))));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = jobs;
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Scenario A for every (gamma, capacity, multiplier) cell and Scenario B once
/// per (capacity, multiplier), since B never trades and is independent of gamma.
inline std::vector<SweepRow> run_sweep(const SweepGrid& grid,
                                       const std::function<SimulationConfig(const CellSpec&)>& make,
                                       unsigned threads = default_threads(),
                                       const std::function<YearlyMetrics(const SimulationConfig&)>& runner = run_year) {
    grid.validate();
    struct Job {
        CellSpec cell;
        YearlyMetrics result;
    };
    std::vector<Job> jobs;
    for (double cap : grid.capacities_kwh)
        for (double mult : grid.load_multipliers) {
            jobs.push_back({CellSpec{Scenario::B, 1.0, cap, mult, std::nullopt}, {}});
            for (double g : grid.gammas) jobs.push_back({CellSpec{Scenario::A, g, cap, mult, std::nullopt}, {}});
        }
    parallel_for(jobs.size(), threads, [&](std::size_t i) {
        auto r = runner(make(jobs[i].cell));
        r.ledger.clear();
        r.ledger.shrink_to_fit();
        jobs[i].result = std::move(r);
    });

    std::map<std::pair<double, double>, const YearlyMetrics*> b_runs;
    for (const auto& j : jobs)
        if (j.cell.scenario == Scenario::B) b_runs[{j.cell.capacity_kwh, j.cell.load_multiplier}] = &j.result;
    std::vector<SweepRow> rows;
    for (const auto& j : jobs) {
        if (j.cell.scenario != Scenario::A) continue;
        const YearlyMetrics& b = *b_runs.at({j.cell.capacity_kwh, j.cell.load_multiplier});
        SweepRow r;
        r.gamma = j.cell.gamma;
        r.capacity_kwh = j.cell.capacity_kwh;
        r.load_multiplier = j.cell.load_multiplier;
        r.fc_a = j.result.fc;
        r.fc_b = b.fc;
        r.bd_a = j.result.bd;
        r.bd_b = b.bd;
        r.e_v2g_a = j.result.e_v2g;
        r.e_v2h_a = j.result.e_v2h;
        r.failures_a = j.result.solver_failures;
        r.failures_b = b.solver_failures;
        rows.push_back(r);
    }
    return rows;
}

} // namespace v2hg
