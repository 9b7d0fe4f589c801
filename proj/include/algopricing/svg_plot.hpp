#pragma once

// Static SVG charts of experiment output. Output depends only on the inputs:
// fixed 800x480 viewport, fixed number formatting, no timestamps.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "algopricing/harness.hpp"

namespace algopricing {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool secondary = false; // plotted against the right-hand [0, 1] axis
};

struct ReferenceLine {
    double y = 0.0;
    std::string label;
};

struct Band {
    double x0 = 0.0;
    double x1 = 0.0;
    std::string label;
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::string secondary_label; // right axis, shown when a series uses it
    std::vector<Series> series;
    std::vector<ReferenceLine> references;
    std::vector<Band> bands;
};

struct BarChart {
    std::string title;
    std::string y_label;
    std::vector<std::string> groups;        // one cluster per group
    std::vector<std::string> bar_labels;    // one bar per label inside each cluster
    std::vector<std::vector<double>> values; // [group][bar]
    std::vector<ReferenceLine> references;
};

std::string render_svg(const LineChart& chart);
std::string render_svg(const BarChart& chart);

enum class PlotKind { reward_trajectory, price_response, sweep_bars, dual_buffer_timeline };

// Parses "reward-trajectory", "price-response", "sweep-bars", "dual-buffer-timeline".
std::optional<PlotKind> parse_plot_kind(const std::string& name);

// Per-agent mean payoff over replicas, averaged into at most `bins` bins,
// with Nash/monopoly profit (market) or mutual defection/cooperation (matrix
// game) reference lines taken from `cfg`.
LineChart reward_trajectory_chart(std::span<const RunRecord> records, const ExperimentConfig& cfg,
                                  std::size_t bins = 400);
// Median price per agent over the evaluation periods, with the forced
// evaluation windows of `cfg` shaded. Time is relative to the first window.
LineChart price_response_chart(std::span<const RunRecord> records, const ExperimentConfig& cfg);
// Mean post-convergence profit per agent for each beta.
BarChart sweep_chart(const SweepResult& sweep);
// Median newcomer/incumbent prices and the newcomer's online-sampling
// probability over the online phase, with the shock window shaded.
LineChart dual_buffer_chart(std::span<const RunRecord> records, const ExperimentConfig& cfg,
                            std::size_t bins = 400);

} // namespace algopricing
