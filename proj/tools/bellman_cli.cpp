// Command-line front end: simulate / filter / smooth / estimate / check over
// CSV data and JSON configs.
//
// Exit codes: 0 success, 1 failed check, 2 config error, 3 I/O error,
// 4 numeric failure while filtering (message carries the time index).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bellman/check.hpp"
#include "bellman/config.hpp"
#include "bellman/csv.hpp"
#include "bellman/estimation.hpp"
#include "bellman/oracle.hpp"
#include "bellman/smoother.hpp"

namespace {

using namespace bellman;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

std::vector<std::string> state_headers(const std::string& prefix, int d) {
    std::vector<std::string> h;
    for (int i = 1; i <= d; ++i) h.push_back(prefix + "_" + std::to_string(i));
    return h;
}

std::vector<std::string> matrix_headers(const std::string& prefix, int d) {
    std::vector<std::string> h;
    for (int i = 1; i <= d; ++i)
        for (int j = 1; j <= d; ++j)
            h.push_back(prefix + "_" + std::to_string(i) + "_" + std::to_string(j));
    return h;
}

void append_vector(std::vector<double>& row, const Vector& v) {
    for (int i = 0; i < v.size(); ++i) row.push_back(v(i));
}

void append_matrix_row_major(std::vector<double>& row, const Matrix& m) {
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
}

int cmd_simulate(const std::string& config_path, const std::string& out_path) {
    const RunConfig cfg = load_config(config_path);
    if (!cfg.simulation) throw ConfigError("missing key \"simulation\" in config root");
    const StateTransition trans = build_transition(cfg.model);
    const auto model = build_observation(cfg.model);

    const oracle::SimulationRun run = oracle::simulate(trans, *model, cfg.simulation->n,
                                                       cfg.simulation->x0_true,
                                                       cfg.simulation->seed);

    CsvTable table;
    table.header.push_back("t");
    for (const auto& h : state_headers("x_true", trans.state_dim())) table.header.push_back(h);
    for (const auto& h : state_headers("y", model->obs_dim())) table.header.push_back(h);
    for (std::size_t i = 0; i < run.states.size(); ++i) {
        std::vector<double> row{static_cast<double>(i + 1)};
        append_vector(row, run.states[i]);
        append_vector(row, run.observations[i]);
        table.rows.push_back(std::move(row));
    }
    write_csv(out_path, table);

    std::cout << "seed=" << cfg.simulation->seed << " n=" << cfg.simulation->n
              << " state_dim=" << trans.state_dim() << " obs_dim=" << model->obs_dim() << "\n";
    return kExitOk;
}

FilterOutput run_configured_filter(const RunConfig& cfg, const std::string& data_path,
                                   bool force_newton, const StateTransition& trans,
                                   const ObservationModel& model) {
    const CsvTable table = read_csv(data_path);
    const std::vector<Vector> data = extract_observations(table, model.obs_dim());
    return run_filter(data, trans, model, cfg.filter,
                      force_newton ? UpdatePath::ForceOptimizer : UpdatePath::Auto);
}

int cmd_filter(const std::string& config_path, const std::string& data_path,
               const std::string& out_path, bool force_newton) {
    const RunConfig cfg = load_config(config_path);
    const StateTransition trans = build_transition(cfg.model);
    const auto model = build_observation(cfg.model);
    const FilterOutput out = run_configured_filter(cfg, data_path, force_newton, trans, *model);

    const int d = trans.state_dim();
    CsvTable table;
    table.header.push_back("t");
    for (const auto& h : state_headers("x_pred", d)) table.header.push_back(h);
    for (const auto& h : state_headers("x_filt", d)) table.header.push_back(h);
    for (const auto& h : matrix_headers("P_pred", d)) table.header.push_back(h);
    for (const auto& h : matrix_headers("P_filt", d)) table.header.push_back(h);
    table.header.push_back("ll_term");
    table.header.push_back("inner_iters");
    for (const FilterStep& step : out.steps) {
        std::vector<double> row{static_cast<double>(step.t)};
        append_vector(row, step.x_pred);
        append_vector(row, step.x_filt);
        append_matrix_row_major(row, step.P_pred.mat());
        append_matrix_row_major(row, step.P_filt.mat());
        row.push_back(step.ll_term);
        row.push_back(static_cast<double>(step.inner_iters));
        table.rows.push_back(std::move(row));
    }
    write_csv(out_path, table);

    std::printf("objective=%.15g\n", out.objective);
    return kExitOk;
}

int cmd_smooth(const std::string& config_path, const std::string& data_path,
               const std::string& out_path, bool force_newton) {
    const RunConfig cfg = load_config(config_path);
    const StateTransition trans = build_transition(cfg.model);
    const auto model = build_observation(cfg.model);
    const FilterOutput filt = run_configured_filter(cfg, data_path, force_newton, trans, *model);

    const int d = trans.state_dim();
    CsvTable table;
    table.header.push_back("t");
    for (const auto& h : state_headers("x_smooth", d)) table.header.push_back(h);
    for (const auto& h : matrix_headers("P_smooth", d)) table.header.push_back(h);
    if (!filt.steps.empty()) {
        for (const SmootherStep& step : run_smoother(filt, trans)) {
            std::vector<double> row{static_cast<double>(step.t)};
            append_vector(row, step.x_smooth);
            append_matrix_row_major(row, step.P_smooth.mat());
            table.rows.push_back(std::move(row));
        }
    }
    write_csv(out_path, table);
    return kExitOk;
}

int cmd_estimate(const std::string& config_path, const std::string& data_path,
                 const std::string& out_path) {
    const RunConfig cfg = load_config(config_path);
    if (!cfg.estimation) throw ConfigError("missing key \"estimation\" in config root");
    const auto model = build_observation(cfg.model);

    EstimationProblem prob;
    prob.params = cfg.estimation->params;
    prob.base = cfg.model;
    prob.filter_cfg = cfg.filter;
    prob.optimizer = cfg.estimation->optimizer;
    const CsvTable table = read_csv(data_path);
    prob.data = extract_observations(table, model->obs_dim());

    const EstimationResult result = estimate(prob);

    nlohmann::ordered_json out;
    out["psi_hat"] = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < prob.params.size(); ++i)
        out["psi_hat"][prob.params[i].name] = result.psi_hat(static_cast<int>(i));
    out["objective"] = result.objective;
    out["evals"] = result.evals;
    out["converged"] = result.converged;

    std::ofstream file(out_path, std::ios::binary);
    if (!file) throw IoError("cannot open " + out_path + " for writing");
    file << out.dump(2) << "\n";
    if (!file) throw IoError("write to " + out_path + " failed");

    std::cout << "objective=" << format_double(result.objective) << " evals=" << result.evals
              << " converged=" << (result.converged ? "true" : "false") << "\n";
    return kExitOk;
}

int cmd_check(const std::string& config_path) {
    const RunConfig cfg = load_config(config_path);
    bool all_pass = true;
    for (const CheckResult& r : run_checks(cfg)) {
        if (r.pass) {
            std::cout << "PASS " << r.name << "\n";
        } else {
            std::cout << "FAIL " << r.name << ": " << r.detail << "\n";
            all_pass = false;
        }
    }
    return all_pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bellman filter, smoother and hyperparameter estimation for "
                 "state-space models with linear-Gaussian dynamics"};
    app.require_subcommand(1);

    std::string config_path, data_path, out_path;
    bool force_newton = false;

    auto add_common = [&](CLI::App* sub, bool needs_data, bool needs_out) {
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        if (needs_data) sub->add_option("--data", data_path, "input data CSV")->required();
        if (needs_out) sub->add_option("--out", out_path, "output path")->required();
    };

    CLI::App* simulate = app.add_subcommand("simulate", "draw states and observations");
    add_common(simulate, false, true);
    CLI::App* filter = app.add_subcommand("filter", "run the forward filter");
    add_common(filter, true, true);
    filter->add_flag("--force-newton", force_newton,
                     "route Gaussian models through the mode search instead of the closed form");
    CLI::App* smooth = app.add_subcommand("smooth", "run the filter and backward smoother");
    add_common(smooth, true, true);
    smooth->add_flag("--force-newton", force_newton,
                     "route Gaussian models through the mode search instead of the closed form");
    CLI::App* est = app.add_subcommand("estimate", "maximize the filter objective over psi");
    add_common(est, true, true);
    CLI::App* check = app.add_subcommand("check", "run the built-in invariant suite");
    add_common(check, false, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(config_path, out_path);
        if (filter->parsed()) return cmd_filter(config_path, data_path, out_path, force_newton);
        if (smooth->parsed()) return cmd_smooth(config_path, data_path, out_path, force_newton);
        if (est->parsed()) return cmd_estimate(config_path, data_path, out_path);
        if (check->parsed()) return cmd_check(config_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const FilterError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const Error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitConfig;
}
