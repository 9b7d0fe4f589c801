#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "algopricing/config_io.hpp"
#include "algopricing/errors.hpp"
#include "algopricing/results_io.hpp"
#include "algopricing/svg_plot.hpp"

using namespace algopricing;

namespace {

ExperimentConfig tiny_market() {
    ExperimentConfig cfg;
    cfg.horizon = 3000;
    cfg.replicas = 2;
    cfg.seed = 9;
    cfg.convergence.enabled = false;
    cfg.evaluation.periods = 30;
    for (auto& a : cfg.agents) {
        a.hp.beta = 1e-3;
    }
    return cfg;
}

ExperimentConfig tiny_pd() {
    ExperimentConfig cfg;
    cfg.environment.kind = Environment::Kind::matrix_game;
    cfg.horizon = 2000;
    cfg.replicas = 2;
    cfg.convergence.enabled = false;
    cfg.summary_window = 500;
    return cfg;
}

std::string csv_of(const std::vector<RunRecord>& recs) {
    std::ostringstream out;
    write_results_csv(out, recs);
    return out.str();
}

std::string config_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(ConfigIo, RoundTripIsExact) {
    ExperimentConfig cfg = tiny_market();
    cfg.agents[1].kind = AgentKind::dual_buffer;
    cfg.agents[1].dqn.hidden = {32, 16};
    cfg.agents[0].reward.opponent_weight = 0.25;
    Intervention iv;
    iv.agent = 1;
    iv.start = 3;
    iv.length = 2;
    iv.force.kind = ForcedAction::Kind::shift;
    iv.force.shift = -2;
    cfg.interventions = {iv};
    cfg.newcomer.shock_start = 10;
    cfg.newcomer.shock_length = 5;
    cfg.environment.market = MarketParams::symmetric(2, 0.3, 0.1, 2.5, 1.25);
    const std::string text = emit_config(cfg);
    const ExperimentConfig back = parse_config(text);
    EXPECT_EQ(back, cfg);
    EXPECT_EQ(emit_config(back), text);
    EXPECT_EQ(parse_config(emit_config(tiny_pd())), tiny_pd());
}

TEST(ConfigIo, EmptyObjectGivesDefaults) {
    EXPECT_EQ(parse_config(R"({"schema_version": 1})"), ExperimentConfig{});
}

TEST(ConfigIo, ErrorsNameTheOffendingValue) {
    EXPECT_NE(config_error(R"({"schema_version": 1, "horizon": 10, "horizn": 5})").find("/horizn"), std::string::npos);
    EXPECT_NE(config_error(R"({"schema_version": 1, "agents": [{}, {"hyperparams": {"alpha": "fast"}}]})").find("/agents/1/hyperparams/alpha"),
              std::string::npos);
    EXPECT_NE(config_error(R"({"schema_version": 1, "agents": [{"kind": "oracle"}, {}]})").find("/agents/0/kind"),
              std::string::npos);
    EXPECT_FALSE(config_error("{\"horizon\": ").empty());
    EXPECT_FALSE(config_error("[]").empty());
    EXPECT_THROW(load_config("/nonexistent/dir/config.json"), ConfigError);
}

TEST(ResultsIo, NumberFormat) {
    EXPECT_EQ(format_number(NAN), "");
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(1.47292666003062), "1.47292666");
    EXPECT_EQ(std::stod(format_number(0.222926660030623)), 0.22292666);
}

TEST(ResultsIo, CsvHeaderAndEmptyPOnline) {
    const auto recs = run_experiment(tiny_market());
    const std::string csv = csv_of(recs);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, kResultsHeader);
    std::getline(in, line);
    EXPECT_EQ(line.back(), ','); // p_online empty for tabular agents
    std::size_t lines = 2;
    while (std::getline(in, line)) {
        ++lines;
    }
    EXPECT_EQ(lines, 1 + 2 * (recs[0].rows() + recs[1].rows()));
}

TEST(ResultsIo, CsvRoundTripAndSummaryReproduction) {
    for (const ExperimentConfig& cfg : {tiny_market(), tiny_pd()}) {
        const auto recs = run_experiment(cfg);
        std::istringstream in(csv_of(recs));
        const auto back = read_results_csv(in);
        ASSERT_EQ(back.size(), recs.size());
        EXPECT_EQ(csv_of(back), csv_of(recs));
        for (std::size_t r = 0; r < recs.size(); ++r) {
            EXPECT_EQ(back[r].periods, recs[r].periods);
            EXPECT_EQ(back[r].actions, recs[r].actions);
            const auto a = summarize(recs[r], cfg.summary_window);
            const auto b = summarize(back[r], cfg.summary_window);
            for (std::size_t i = 0; i < a.agents.size(); ++i) {
                EXPECT_NEAR(a.agents[i].mean_reward, b.agents[i].mean_reward, 1e-9);
                EXPECT_EQ(a.agents[i].final_action, b.agents[i].final_action);
            }
        }
    }
}

TEST(ResultsIo, MalformedCsvIsRejected) {
    std::istringstream bad_header("replica,period\n0,0\n");
    EXPECT_THROW(read_results_csv(bad_header), ConfigError);
    std::istringstream bad_field(std::string(kResultsHeader) + "\n0,0,0,x,1,1,0,\n");
    EXPECT_THROW(read_results_csv(bad_field), ConfigError);
}

TEST(ResultsIo, SweepCsvRoundTrip) {
    SweepResult s;
    s.rows.push_back({1e-5, {{0.3, 0.31}, {0.28, 0.29}}, {}, {}});
    s.rows.push_back({1e-4, {{0.25, 0.27}, {0.24, 0.26}}, {}, {}});
    std::ostringstream out;
    write_sweep_csv(out, s);
    std::istringstream in(out.str());
    const SweepResult back = read_sweep_csv(in);
    ASSERT_EQ(back.rows.size(), 2u);
    EXPECT_EQ(back.rows[1].beta, 1e-4);
    EXPECT_EQ(back.rows[0].profits, s.rows[0].profits);
    EXPECT_NEAR(back.rows[0].mean_profit[1], 0.30, 1e-12);
    EXPECT_NEAR(back.rows[1].median_profit[0], 0.245, 1e-12);
}

TEST(ResultsIo, SummaryIsDeterministic) {
    const ExperimentConfig cfg = tiny_market();
    const auto recs = run_experiment(cfg);
    const std::string text = summary_text(cfg, recs);
    EXPECT_EQ(text, summary_text(cfg, run_experiment(cfg)));
    EXPECT_NE(text.find("replicas: 2"), std::string::npos);
}

TEST(Plots, KindNames) {
    EXPECT_EQ(parse_plot_kind("reward-trajectory"), PlotKind::reward_trajectory);
    EXPECT_EQ(parse_plot_kind("price-response"), PlotKind::price_response);
    EXPECT_EQ(parse_plot_kind("sweep-bars"), PlotKind::sweep_bars);
    EXPECT_EQ(parse_plot_kind("dual-buffer-timeline"), PlotKind::dual_buffer_timeline);
    EXPECT_FALSE(parse_plot_kind("histogram").has_value());
}

TEST(Plots, SvgIsDeterministic) {
    const ExperimentConfig cfg = tiny_market();
    const std::string a = render_svg(reward_trajectory_chart(run_experiment(cfg), cfg));
    const std::string b = render_svg(reward_trajectory_chart(run_experiment(cfg), cfg));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.rfind("<svg", 0), 0u);
    EXPECT_NE(a.find("viewBox=\"0 0 800 480\""), std::string::npos);
    EXPECT_EQ(a.find("nan"), std::string::npos);
}

TEST(Plots, MatrixGameReferenceLines) {
    const ExperimentConfig cfg = tiny_pd();
    const LineChart chart = reward_trajectory_chart(run_experiment(cfg), cfg);
    ASSERT_EQ(chart.references.size(), 2u);
    EXPECT_EQ(chart.references[0].y, -2.0);
    EXPECT_EQ(chart.references[1].y, -1.0);
    EXPECT_NE(render_svg(chart).find("stroke-dasharray"), std::string::npos);
}

TEST(Plots, MarketReferenceLinesAndShadedBand) {
    ExperimentConfig cfg = tiny_market();
    Intervention iv;
    iv.start = 10;
    iv.force.kind = ForcedAction::Kind::best_response;
    cfg.interventions = {iv};
    const auto recs = run_experiment(cfg);
    const LineChart traj = reward_trajectory_chart(recs, cfg);
    ASSERT_EQ(traj.references.size(), 2u);
    EXPECT_NEAR(traj.references[0].y, 0.22292666, 1e-7);
    EXPECT_NEAR(traj.references[1].y, 0.33749046, 1e-7);

    const LineChart resp = price_response_chart(recs, cfg);
    ASSERT_EQ(resp.bands.size(), 1u);
    EXPECT_EQ(resp.bands[0].x0, -0.5);
    EXPECT_EQ(resp.bands[0].x1, 0.5);
    EXPECT_NEAR(resp.references[0].y, 1.47292666, 1e-7);
    EXPECT_NE(render_svg(resp).find("fill-opacity"), std::string::npos);

    EXPECT_THROW(price_response_chart(recs, tiny_pd()), ConfigError);
}

TEST(Plots, SweepBarsCoverEveryBeta) {
    SweepResult s;
    s.rows.push_back({1e-5, {{0.3, 0.31}}, {0.3, 0.31}, {0.3, 0.31}});
    s.rows.push_back({1e-4, {{0.25, 0.27}}, {0.25, 0.27}, {0.25, 0.27}});
    s.pi_nash = 0.2229;
    s.pi_monopoly = 0.3375;
    const BarChart chart = sweep_chart(s);
    EXPECT_EQ(chart.groups.size(), 2u);
    EXPECT_EQ(chart.values[1][1], 0.27);
    EXPECT_EQ(chart.references.size(), 2u);
    EXPECT_EQ(render_svg(chart), render_svg(sweep_chart(s)));
}
