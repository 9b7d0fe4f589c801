// algopricing: command-line front end for the pricing simulations.
//
// Exit codes: 0 success, 2 configuration or validation error, 3 runtime or
// numerical failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "algopricing/config_io.hpp"
#include "algopricing/errors.hpp"
#include "algopricing/harness.hpp"
#include "algopricing/results_io.hpp"
#include "algopricing/svg_plot.hpp"

namespace fs = std::filesystem;
using namespace algopricing;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonOptions {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicas;
    bool dry_run = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "experiment configuration (JSON)");
    cmd->add_option("--out", o.out, "output directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "master seed (overrides the config)");
    cmd->add_option("--replicas", o.replicas, "number of replicas (overrides the config)");
    cmd->add_flag("--dry-run", o.dry_run, "validate and print the effective configuration only");
}

// Built-in configuration when --config is absent: the symmetric duopoly with
// a thinned training record.
ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.record.stride = 1000;
    cfg.record.tail = 1000;
    return cfg;
}

ExperimentConfig resolve(const CommonOptions& o, ExperimentConfig base) {
    ExperimentConfig cfg = o.config.empty() ? std::move(base) : load_config(o.config);
    if (o.seed) {
        cfg.seed = *o.seed;
    }
    if (o.replicas) {
        cfg.replicas = *o.replicas;
    }
    return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

void write_run_outputs(const fs::path& dir, const ExperimentConfig& cfg,
                       const std::vector<RunRecord>& records) {
    std::ostringstream csv;
    write_results_csv(csv, records);
    write_file(dir / "results.csv", csv.str());
    write_file(dir / "summary.txt", summary_text(cfg, records));
    write_file(dir / "effective_config.json", emit_config(cfg) + "\n");
}

// Prints the configuration and stops when --dry-run is set.
bool dry_run(const CommonOptions& o, const ExperimentConfig& cfg) {
    cfg.validate();
    if (o.dry_run) {
        std::cout << emit_config(cfg) << "\n";
    }
    return o.dry_run;
}

std::vector<RunRecord> read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path);
    }
    return read_results_csv(in);
}

// solve-eq ------------------------------------------------------------------

struct SolveOptions {
    std::size_t agents = 2;
    double mu = 0.25;
    double a0 = 0.0;
    double quality = 2.0;
    double cost = 1.0;
    double xi = 0.1;
    std::size_t grid_size = 15;
    std::string out;
};

int cmd_solve(const SolveOptions& o) {
    const MarketParams params = MarketParams::symmetric(o.agents, o.mu, o.a0, o.quality, o.cost);
    params.validate();
    const double pn = nash_price(params);
    const double pm = monopoly_price(params);
    const PriceGrid grid = build_grid(params, o.xi, o.grid_size);
    std::ostringstream s;
    s << "agents " << o.agents << "\n"
      << "p_nash " << format_number(pn) << "\n"
      << "p_monopoly " << format_number(pm) << "\n"
      << "profit_nash " << format_number(symmetric_profit(params, pn)) << "\n"
      << "profit_monopoly " << format_number(symmetric_profit(params, pm)) << "\n"
      << "markup_nash " << format_number((pn - o.cost) / o.cost) << "\n"
      << "grid";
    for (double p : grid.points) {
        s << " " << format_number(p);
    }
    s << "\n";
    std::cout << s.str();
    if (!o.out.empty()) {
        write_file(o.out, s.str());
    }
    return 0;
}

// run -----------------------------------------------------------------------

int cmd_run(const CommonOptions& o) {
    const ExperimentConfig cfg = resolve(o, default_config());
    if (dry_run(o, cfg)) {
        return 0;
    }
    const auto records = run_experiment(cfg);
    write_run_outputs(o.out, cfg, records);
    std::cout << summary_text(cfg, records);
    return 0;
}

// plot ----------------------------------------------------------------------

struct PlotOptions {
    std::string input;
    std::string kind;
    std::string config;
    std::string out = "plot.svg";
};

int cmd_plot(const PlotOptions& o) {
    const auto kind = parse_plot_kind(o.kind);
    if (!kind) {
        throw ConfigError("unknown plot kind '" + o.kind + "'");
    }
    const ExperimentConfig cfg = o.config.empty() ? default_config() : load_config(o.config);
    std::string svg;
    if (*kind == PlotKind::sweep_bars) {
        std::ifstream in(o.input);
        if (!in) {
            throw ConfigError("cannot open " + o.input);
        }
        SweepResult sweep = read_sweep_csv(in);
        if (cfg.environment.kind == Environment::Kind::market) {
            const MarketParams& m = cfg.environment.market;
            sweep.pi_nash = symmetric_profit(m, nash_price(m));
            sweep.pi_monopoly = symmetric_profit(m, monopoly_price(m));
        }
        svg = render_svg(sweep_chart(sweep));
    } else {
        const auto records = read_records(o.input);
        switch (*kind) {
        case PlotKind::reward_trajectory:
            svg = render_svg(reward_trajectory_chart(records, cfg));
            break;
        case PlotKind::price_response:
            svg = render_svg(price_response_chart(records, cfg));
            break;
        default:
            svg = render_svg(dual_buffer_chart(records, cfg));
            break;
        }
    }
    write_file(o.out, svg);
    return 0;
}

// sweep ---------------------------------------------------------------------

struct SweepOptions {
    std::vector<double> betas{1e-5, 2e-5, 5e-5, 1e-4};
    std::size_t agent = 1;
};

int cmd_sweep(const CommonOptions& o, const SweepOptions& s) {
    ExperimentConfig base = default_config();
    base.evaluation.periods = 1000;
    const ExperimentConfig cfg = resolve(o, base);
    if (s.agent >= cfg.agents.size()) {
        throw ConfigError("--agent " + std::to_string(s.agent) + " is not in the configuration");
    }
    for (double b : s.betas) {
        ExperimentConfig c = cfg;
        c.agents[s.agent].hp.beta = b;
        c.validate();
    }
    if (dry_run(o, cfg)) {
        return 0;
    }
    const SweepResult sweep = sweep_exploration(cfg, s.betas, s.agent);
    std::ostringstream csv;
    write_sweep_csv(csv, sweep);
    const fs::path dir = o.out;
    write_file(dir / "sweep.csv", csv.str());
    write_file(dir / "sweep.svg", render_svg(sweep_chart(sweep)));
    write_file(dir / "effective_config.json", emit_config(cfg) + "\n");
    std::ostringstream txt;
    txt << "beta agent mean_profit median_profit\n";
    for (const SweepRow& row : sweep.rows) {
        for (std::size_t i = 0; i < row.mean_profit.size(); ++i) {
            txt << format_number(row.beta) << " " << i << " " << format_number(row.mean_profit[i])
                << " " << format_number(row.median_profit[i]) << "\n";
        }
    }
    write_file(dir / "summary.txt", txt.str());
    std::cout << txt.str();
    return 0;
}

// respond -------------------------------------------------------------------

struct RespondOptions {
    std::string preset = "cut";
    std::uint64_t shock_start = 10;
    std::uint64_t hold = 1;
    std::uint64_t periods = 50;
};

// Evaluation-phase interventions of the response presets: agent 0 is forced,
// agent 1 responds.
std::vector<Intervention> response_preset(const RespondOptions& r, const ExperimentConfig& cfg) {
    Intervention first;
    first.agent = 0;
    first.phase = Phase::evaluation;
    first.start = r.shock_start;
    if (r.preset == "cut") {
        first.force.kind = ForcedAction::Kind::best_response;
        return {first};
    }
    if (r.preset == "nash_permanent") {
        first.force.kind = ForcedAction::Kind::nash_above;
        first.permanent = true;
        return {first};
    }
    if (r.preset == "raise" || r.preset == "raise_hold") {
        if (cfg.environment.kind != Environment::Kind::market) {
            throw ConfigError("preset '" + r.preset + "' needs a market configuration");
        }
        first.force.kind = ForcedAction::Kind::price;
        first.force.price = monopoly_price(cfg.environment.market);
        if (r.preset == "raise") {
            return {first};
        }
        first.length = r.hold;
        Intervention held;
        held.agent = 1;
        held.phase = Phase::evaluation;
        held.start = r.shock_start;
        held.length = r.hold;
        held.force.kind = ForcedAction::Kind::hold;
        return {first, held};
    }
    throw ConfigError("unknown preset '" + r.preset +
                      "' (expected cut, raise, raise_hold or nash_permanent)");
}

int cmd_respond(const CommonOptions& o, const RespondOptions& r) {
    ExperimentConfig cfg = resolve(o, default_config());
    if (o.config.empty() && !o.replicas) {
        cfg.replicas = 20;
    }
    if (cfg.evaluation.periods == 0) {
        cfg.evaluation.periods = r.periods;
    }
    cfg.interventions = response_preset(r, cfg);
    if (dry_run(o, cfg)) {
        return 0;
    }
    const auto records = run_experiment(cfg);
    write_run_outputs(o.out, cfg, records);
    write_file(fs::path(o.out) / "price_response.svg",
               render_svg(price_response_chart(records, cfg)));
    std::cout << summary_text(cfg, records);
    return 0;
}

// dual-buffer ---------------------------------------------------------------

struct DualOptions {
    std::string preset = "stationary";
    std::string snapshot;
    bool compare = false;
};

// Incumbent/newcomer scenario: a dual-buffer newcomer with a ten-period memory
// takes seat 1 of a pretrained tabular duopoly.
ExperimentConfig dual_buffer_default() {
    ExperimentConfig cfg;
    cfg.replicas = 5;
    cfg.convergence.stability = 25000;
    cfg.newcomer.enabled = true;
    cfg.newcomer.observe_epsilon = 0.1;
    cfg.newcomer.pretrain_updates = 20000;
    cfg.newcomer.online_periods = 12000;
    AgentSpec& nc = cfg.agents[1];
    nc.kind = AgentKind::dual_buffer;
    nc.hp.memory_len = 10;
    nc.hp.gamma = 0.9;
    nc.hp.beta = 1e-3;
    nc.dqn.target_sync = 100;
    return cfg;
}

// Incumbent fixed at the grid price nearest the monopoly price, the other
// seats at their best response to it.
MarketSnapshot scripted_snapshot(const ExperimentConfig& cfg) {
    const Environment env = cfg.environment.build();
    const PriceGrid& grid = *env.grid();
    JointAction joint(env.n_agents(), 0);
    joint[cfg.newcomer.incumbent] = grid.nearest(grid.p_monopoly);
    for (std::size_t i = 0; i < joint.size(); ++i) {
        if (i != cfg.newcomer.incumbent) {
            joint[i] = best_response(env, joint, i);
        }
    }
    return constant_policy_snapshot(env, joint);
}

int cmd_dual(const CommonOptions& o, const DualOptions& d) {
    ExperimentConfig cfg = resolve(o, dual_buffer_default());
    const bool scripted = d.preset == "scripted";
    if (d.preset == "shock" || scripted) {
        if (!cfg.newcomer.shock_start) {
            cfg.newcomer.shock_start = cfg.newcomer.online_periods / 2;
            cfg.newcomer.shock_length = cfg.newcomer.online_periods / 4;
        }
    } else if (d.preset != "stationary") {
        throw ConfigError("unknown preset '" + d.preset +
                          "' (expected stationary, shock or scripted)");
    }
    if (!d.snapshot.empty()) {
        cfg.newcomer.incumbent_snapshot = d.snapshot;
    }
    const fs::path dir = o.out;
    if (scripted && d.snapshot.empty()) {
        cfg.newcomer.incumbent_snapshot = (dir / "scripted_snapshot.txt").string();
    }
    if (cfg.newcomer.incumbent_snapshot.empty()) {
        cfg.newcomer.incumbent_snapshot = (dir / "incumbent_snapshot.txt").string();
    }
    // A missing snapshot is pretrained first.
    const bool pretrain = !fs::exists(cfg.newcomer.incumbent_snapshot);
    // The snapshot file does not exist yet when it is about to be pretrained.
    ExperimentConfig check = cfg;
    if (pretrain) {
        check.newcomer.incumbent_snapshot = "pretrained";
    }
    check.validate();
    if (o.dry_run) {
        std::cout << emit_config(cfg) << "\n";
        return 0;
    }
    if (pretrain && scripted) {
        fs::create_directories(fs::path(cfg.newcomer.incumbent_snapshot).parent_path());
        scripted_snapshot(cfg).save(cfg.newcomer.incumbent_snapshot);
    } else if (pretrain) {
        ExperimentConfig market = cfg;
        market.newcomer = NewcomerSpec{};
        for (AgentSpec& a : market.agents) {
            a = AgentSpec{};
        }
        fs::create_directories(dir);
        const fs::path snap = cfg.newcomer.incumbent_snapshot;
        if (snap.has_parent_path()) {
            fs::create_directories(snap.parent_path());
        }
        pretrain_market(market, 0).save(cfg.newcomer.incumbent_snapshot);
    }
    const auto warm = run_experiment(cfg);
    write_run_outputs(dir, cfg, warm);
    write_file(dir / "dual_buffer_timeline.svg", render_svg(dual_buffer_chart(warm, cfg)));
    std::cout << summary_text(cfg, warm);
    if (d.compare) {
        ExperimentConfig cold_cfg = cfg;
        cold_cfg.newcomer.warm_start = false;
        const auto cold = run_experiment(cold_cfg);
        const fs::path cold_dir = dir / "cold";
        write_run_outputs(cold_dir, cold_cfg, cold);
        write_file(cold_dir / "dual_buffer_timeline.svg",
                   render_svg(dual_buffer_chart(cold, cold_cfg)));
        const std::size_t seat = cfg.newcomer.newcomer;
        const std::uint64_t tail = cfg.newcomer.online_periods / 4;
        std::ostringstream txt;
        txt << "replica warm_t95 cold_t95\n";
        auto show = [](std::optional<std::uint64_t> t) {
            return t ? std::to_string(*t) : std::string("never");
        };
        for (std::size_t r = 0; r < warm.size(); ++r) {
            txt << r << " " << show(periods_to_fraction(warm[r], seat, 500, 0.95, tail)) << " "
                << show(periods_to_fraction(cold[r], seat, 500, 0.95, tail)) << "\n";
        }
        write_file(dir / "comparison.txt", txt.str());
        std::cout << txt.str();
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Algorithmic pricing simulations with tabular and deep Q-learning agents"};
    app.require_subcommand(1);

    SolveOptions solve;
    auto* solve_cmd = app.add_subcommand("solve-eq", "symmetric Nash and monopoly prices");
    solve_cmd->add_option("--agents", solve.agents, "number of firms")->capture_default_str();
    solve_cmd->add_option("--mu", solve.mu, "product differentiation")->capture_default_str();
    solve_cmd->add_option("--a0", solve.a0, "outside-good quality")->capture_default_str();
    solve_cmd->add_option("--quality", solve.quality, "product quality")->capture_default_str();
    solve_cmd->add_option("--cost", solve.cost, "marginal cost")->capture_default_str();
    solve_cmd->add_option("--xi", solve.xi, "grid extension beyond the equilibria")
        ->capture_default_str();
    solve_cmd->add_option("--grid-size", solve.grid_size, "number of grid prices")
        ->capture_default_str();
    solve_cmd->add_option("--out", solve.out, "also write the result to this file");

    CommonOptions run_opts;
    auto* run_cmd = app.add_subcommand("run", "run an experiment configuration");
    add_common(run_cmd, run_opts);

    PlotOptions plot;
    auto* plot_cmd = app.add_subcommand("plot", "render an SVG chart from result files");
    plot_cmd->add_option("--input", plot.input, "results.csv (or sweep.csv)")->required();
    plot_cmd->add_option("--kind", plot.kind,
                         "reward-trajectory, price-response, sweep-bars or dual-buffer-timeline")
        ->required();
    plot_cmd->add_option("--config", plot.config, "configuration that produced the input");
    plot_cmd->add_option("--out", plot.out, "SVG file")->capture_default_str();

    CommonOptions sweep_opts;
    SweepOptions sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "exploration-decay sweep for one agent");
    add_common(sweep_cmd, sweep_opts);
    sweep_cmd->add_option("--betas", sweep.betas, "decay rates to try")->delimiter(',');
    sweep_cmd->add_option("--agent", sweep.agent, "agent whose decay varies")
        ->capture_default_str();

    CommonOptions respond_opts;
    RespondOptions respond;
    auto* respond_cmd = app.add_subcommand("respond", "response to a forced deviation");
    add_common(respond_cmd, respond_opts);
    respond_cmd->add_option("--preset", respond.preset, "cut, raise, raise_hold or nash_permanent")
        ->capture_default_str();
    respond_cmd->add_option("--shock-start", respond.shock_start, "evaluation period of the shock")
        ->capture_default_str();
    respond_cmd->add_option("--hold", respond.hold, "periods the other agent holds (raise_hold)")
        ->capture_default_str();
    respond_cmd->add_option("--periods", respond.periods,
                            "evaluation periods when the config has none")
        ->capture_default_str();

    CommonOptions dual_opts;
    DualOptions dual;
    auto* dual_cmd = app.add_subcommand("dual-buffer", "incumbent/newcomer scenario");
    add_common(dual_cmd, dual_opts);
    dual_cmd->add_option("--preset", dual.preset, "stationary, shock or scripted")->capture_default_str();
    dual_cmd->add_option("--snapshot", dual.snapshot,
                         "pretrained incumbent tables (pretrained into --out when absent)");
    dual_cmd->add_flag("--compare", dual.compare, "also run a cold-started newcomer");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*solve_cmd) return cmd_solve(solve);
        if (*run_cmd) return cmd_run(run_opts);
        if (*plot_cmd) return cmd_plot(plot);
        if (*sweep_cmd) return cmd_sweep(sweep_opts, sweep);
        if (*respond_cmd) return cmd_respond(respond_opts, respond);
        if (*dual_cmd) return cmd_dual(dual_opts, dual);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParameterError& e) {
        std::cerr << "invalid parameter: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DomainError& e) {
        std::cerr << "invalid parameter: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
