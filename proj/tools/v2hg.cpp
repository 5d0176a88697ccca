// v2hg command-line front end: simulate, train, sweep, verify, report.

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "v2hg/v2hg.hpp"

namespace fs = std::filesystem;
using namespace v2hg;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitNumerical = 2;

struct CommonOptions {
    std::string config;
    std::string out = "out";
    std::optional<unsigned long long> seed;
    std::string model;
    bool no_forecast = false;
};

void print_warnings(const Warnings& w) {
    for (const auto& s : w) std::cerr << "warning: " << s << '\n';
}

std::shared_ptr<const ForecastModel> model_for(const RunConfig& c, const CommonOptions& o) {
    if (o.no_forecast || c.predictor != PredictorKind::lstm) return nullptr;
    const fs::path p = o.model.empty() ? c.model_file : fs::path(o.model);
    if (p.empty()) throw ConfigError("predictor 'lstm' needs forecaster.model_file or --model");
    if (!fs::exists(p))
        throw ConfigError("model file " + p.string() + " not found (run 'v2hg train' first or pass --no-forecast)");
    return std::make_shared<const ForecastModel>(load_model(p));
}

std::optional<PredictorKind> predictor_for(const CommonOptions& o) {
    if (o.no_forecast) return PredictorKind::oracle;
    return std::nullopt;
}

int cmd_simulate(const CommonOptions& o, const std::string& scenario, std::optional<double> gamma,
                 std::optional<double> capacity, std::optional<double> multiplier) {
    RunConfig c = load_run_config(o.config);
    if (!scenario.empty()) c.scenario = parse_scenario_choice(scenario);
    const RunData d = load_run_data(c);
    print_warnings(d.warnings);
    const auto model = model_for(c, o);

    CellSpec cell;
    cell.gamma = gamma.value_or(c.gamma);
    if (!(cell.gamma >= 0.0 && cell.gamma <= 1.0)) throw ConfigError("--gamma must lie in [0,1]");
    cell.capacity_kwh = capacity.value_or(0.0);
    cell.load_multiplier = multiplier.value_or(0.0);
    cell.seed = o.seed;

    std::vector<Scenario> runs;
    if (c.scenario.a) runs.push_back(Scenario::A);
    if (c.scenario.b) runs.push_back(Scenario::B);
    const bool both = runs.size() == 2;
    fs::create_directories(o.out);

    print_metrics_header(std::cout);
    std::vector<YearlyMetrics> results;
    int failures_over = 0;
    for (Scenario s : runs) {
        cell.scenario = s;
        auto m = run_year(make_simulation(c, d, cell, model, predictor_for(o)));
        const fs::path dir = both ? fs::path(o.out) / to_string(s) : fs::path(o.out);
        fs::create_directories(dir);
        auto j = metrics_to_json(m);
        j["predictor"] = s == Scenario::B ? "none" : to_string(predictor_for(o).value_or(c.predictor));
        j["seed"] = cell.seed.value_or(c.seed);
        write_json(dir / "metrics.json", j);
        write_ledger_csv(dir / "ledger.csv", m.ledger);
        print_metrics_row(std::cout, to_string(s), m);
        for (const auto& e : m.events) std::cerr << "event (" << to_string(s) << "): " << e << '\n';
        if (m.solver_failures > c.max_solver_failures) ++failures_over;
        results.push_back(std::move(m));
    }
    if (both) {
        std::cout << std::fixed << std::setprecision(2) << "economic gain FC_B - FC_A = "
                  << results[1].fc - results[0].fc << " EUR\n";
    }
    if (failures_over) {
        std::cerr << "error: solver failures above max_solver_failures_count (" << c.max_solver_failures << ")\n";
        return kExitNumerical;
    }
    return 0;
}

int cmd_train(const CommonOptions& o) {
    RunConfig c = load_run_config(o.config);
    if (o.seed) c.training.seed = *o.seed;
    const RunData d = load_run_data(c);
    print_warnings(d.warnings);
    const fs::path out_model = o.model.empty() ? c.model_file : fs::path(o.model);
    if (out_model.empty()) throw ConfigError("no model output path (forecaster.model_file or --model)");

    const HourlySeries train_series = d.loads.train();
    std::cout << "training on " << train_series.size() << " hours (" << d.loads.series.size() - 1
              << " series), " << c.training.epochs << " epochs\n";
    TrainingLog log;
    const auto model = train(train_series, c.training, c.architecture, &log, [](int epoch, double loss) {
        std::cout << "epoch " << std::setw(3) << epoch << "  loss " << std::setprecision(6) << loss << '\n';
    });
    if (out_model.has_parent_path()) fs::create_directories(out_model.parent_path());
    save_model(model, out_model);

    // 12-hour rollouts from every 24th hour of the test year.
    const HourlySeries test = d.loads.series.back();
    double ape = 0.0;
    int count = 0;
    for (std::size_t t = 24; t + 12 < test.size(); t += 24) {
        const auto p = predict_horizon(model, test, t, 12);
        for (int k = 0; k < 12; ++k) {
            const double a = test.value[t + 1 + static_cast<std::size_t>(k)];
            if (a > 1e-9) {
                ape += std::abs(p[static_cast<std::size_t>(k)] - a) / a;
                ++count;
            }
        }
    }
    std::cout << "saved " << out_model.string() << "\n"
              << "test-year 12 h rollout MAPE " << std::setprecision(4) << (count ? 100.0 * ape / count : 0.0)
              << " %\n";
    return 0;
}

int cmd_sweep(const CommonOptions& o, SweepGrid grid, unsigned threads) {
    const RunConfig c = load_run_config(o.config);
    const RunData d = load_run_data(c);
    print_warnings(d.warnings);
    const auto model = model_for(c, o);
    const auto predictor = predictor_for(o);
    const auto seed = o.seed;
    auto rows = run_sweep(
        grid,
        [&](const CellSpec& cell) {
            CellSpec s = cell;
            s.seed = seed;
            return make_simulation(c, d, s, model, predictor);
        },
        threads);
    fs::create_directories(o.out);
    write_sweep_csv(fs::path(o.out) / "sweep.csv", rows);
    write_sweep_csv(std::cout, rows);
    for (const auto& r : rows)
        if (r.failures_a > c.max_solver_failures || r.failures_b > c.max_solver_failures) {
            std::cerr << "error: solver failures above max_solver_failures_count in at least one cell\n";
            return kExitNumerical;
        }
    return 0;
}

int cmd_verify(const CommonOptions& o, int oracle_cases, int gradient_points, double tolerance,
               double gradient_tolerance) {
    std::shared_ptr<const DegradationParams> params;
    SolverConfig solver;
    if (!o.config.empty()) {
        const RunConfig c = load_run_config(o.config);
        params = std::make_shared<const DegradationParams>(load_degradation_params(c.degradation_params_file));
        solver = c.solver;
    } else {
        params = std::make_shared<const DegradationParams>(load_degradation_params(default_degradation_params_path()));
    }
    const unsigned long long seed = o.seed.value_or(1);
    const auto oracle = run_oracle_suite(oracle_cases, seed, params, tolerance, 0.05, solver);
    const auto grad = run_gradient_suite(gradient_points, seed + 1, params, gradient_tolerance, solver);
    fs::create_directories(o.out);
    write_json(fs::path(o.out) / "verify_report.json", verify_report_json(oracle, grad));
    for (const auto& c : oracle.cases)
        if (!c.pass)
            std::cout << "oracle case " << c.id << " FAILED: solver " << c.solver_objective << " oracle "
                      << c.oracle_objective << " (" << c.status << ")\n";
    for (const auto& c : grad.cases)
        if (!c.pass) std::cout << "gradient point " << c.id << " FAILED: relative error " << c.worst() << '\n';
    std::cout << "oracle equivalence: " << oracle.cases.size() - oracle.failures() << "/" << oracle.cases.size()
              << " passed in " << std::setprecision(3) << oracle.runtime_s << " s\n"
              << "gradient checks:    " << grad.cases.size() - grad.failures() << "/" << grad.cases.size()
              << " passed, worst relative error " << grad.worst() << '\n';
    return oracle.passed() && grad.passed() ? 0 : kExitNumerical;
}

int cmd_report(const std::string& ledger, const std::string& out) {
    const auto rows = read_ledger_csv(ledger);
    const auto months = summarize_by_month(rows);
    write_monthly_csv(std::cout, months);
    if (!out.empty()) {
        fs::create_directories(out);
        std::ofstream f(fs::path(out) / "summary.csv");
        if (!f) throw ValidationError("cannot write summary.csv");
        write_monthly_csv(f, months);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vehicle-to-home/grid scheduling with battery degradation"};
    app.require_subcommand(1);
    CommonOptions o;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", o.config, "Config file (INI)");
        if (config_required) opt->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "Output directory")->capture_default_str();
        sub->add_option("--seed", o.seed, "RNG seed override");
    };

    std::string scenario;
    std::optional<double> gamma, capacity, multiplier;
    auto* sim = app.add_subcommand("simulate", "Simulate one year");
    add_common(sim, true);
    sim->add_option("--scenario", scenario, "A, B or both")->check(CLI::IsMember({"A", "B", "both"}));
    sim->add_option("--gamma", gamma, "Sell/buy price ratio");
    sim->add_option("--model", o.model, "Trained forecaster (JSON)");
    sim->add_option("--capacity-kwh", capacity, "Battery capacity override");
    sim->add_option("--load-multiplier", multiplier, "Household load multiplier override");
    sim->add_flag("--no-forecast", o.no_forecast, "Use the actual load as the prediction");

    auto* tr = app.add_subcommand("train", "Train the load forecaster");
    add_common(tr, true);
    tr->add_option("--model", o.model, "Output model path (default: forecaster.model_file)");

    SweepGrid grid;
    unsigned threads = default_threads();
    auto* sw = app.add_subcommand("sweep", "Gamma x capacity x load-multiplier grid");
    add_common(sw, true);
    sw->add_option("--gammas", grid.gammas, "Gamma values")->delimiter(',')->capture_default_str();
    sw->add_option("--capacities", grid.capacities_kwh, "Capacities in kWh")->delimiter(',')->capture_default_str();
    sw->add_option("--multipliers", grid.load_multipliers, "Load multipliers")->delimiter(',')->capture_default_str();
    sw->add_option("--model", o.model, "Trained forecaster (JSON)");
    sw->add_flag("--no-forecast", o.no_forecast, "Use the actual load as the prediction");
    sw->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    int oracle_cases = 50, gradient_points = 100;
    double tolerance = 1e-3, gradient_tolerance = 1e-5;
    auto* ver = app.add_subcommand("verify", "Oracle-equivalence and gradient checks");
    add_common(ver, false);
    ver->add_option("--oracle-cases", oracle_cases, "Random oracle windows")->check(CLI::PositiveNumber)
        ->capture_default_str();
    ver->add_option("--gradient-points", gradient_points, "Random gradient points")->check(CLI::PositiveNumber)
        ->capture_default_str();
    ver->add_option("--tolerance", tolerance, "Allowed excess of solver over oracle objective (EUR)")
        ->capture_default_str();
    ver->add_option("--gradient-tolerance", gradient_tolerance, "Relative gradient error bound")
        ->capture_default_str();

    std::string ledger, report_out;
    auto* rep = app.add_subcommand("report", "Monthly summary of a ledger CSV");
    rep->add_option("ledger", ledger, "ledger.csv from simulate")->required()->check(CLI::ExistingFile);
    rep->add_option("--out", report_out, "Directory for summary.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (*sim) return cmd_simulate(o, scenario, gamma, capacity, multiplier);
        if (*tr) return cmd_train(o);
        if (*sw) return cmd_sweep(o, grid, threads);
        if (*ver) return cmd_verify(o, oracle_cases, gradient_points, tolerance, gradient_tolerance);
        if (*rep) return cmd_report(ledger, report_out);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const SolverError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const SimulationFault& e) {
        std::cerr << "simulation fault: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const DomainError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return 0;
}
