#include "algopricing/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "algopricing/errors.hpp"

namespace algopricing {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 60.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 90.0;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void finish(double pad_frac) {
        if (!(lo <= hi)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = (hi - lo) * pad_frac;
        lo -= pad;
        hi += pad;
    }
};

class Canvas {
public:
    Canvas() {
        out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
             << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight
             << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
             << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
             << "\" fill=\"white\"/>\n";
    }

    void text(double x, double y, const std::string& s, const char* anchor = "middle",
              int size = 12, double rotate = 0.0) {
        out_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" text-anchor=\"" << anchor
             << "\" font-size=\"" << size << "\"";
        if (rotate != 0.0) {
            out_ << " transform=\"rotate(" << fmt(rotate) << " " << fmt(x) << " " << fmt(y)
                 << ")\"";
        }
        out_ << ">" << escape(s) << "</text>\n";
    }

    void line(double x0, double y0, double x1, double y1, const std::string& color,
              double width = 1.0, bool dashed = false) {
        out_ << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x1)
             << "\" y2=\"" << fmt(y1) << "\" stroke=\"" << color << "\" stroke-width=\""
             << fmt(width) << "\"" << (dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill,
              double opacity = 1.0) {
        out_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w)
             << "\" height=\"" << fmt(h) << "\" fill=\"" << fill << "\"";
        if (opacity < 1.0) {
            out_ << " fill-opacity=\"" << fmt(opacity) << "\"";
        }
        out_ << "/>\n";
    }

    // Polyline; non-finite points split the line into segments.
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color) {
        std::string seg;
        auto flush = [&] {
            if (!seg.empty()) {
                out_ << "<polyline fill=\"none\" stroke=\"" << color
                     << "\" stroke-width=\"1.5\" points=\"" << seg << "\"/>\n";
                seg.clear();
            }
        };
        for (const auto& [x, y] : pts) {
            if (!std::isfinite(x) || !std::isfinite(y)) {
                flush();
                continue;
            }
            seg += (seg.empty() ? "" : " ") + fmt(x) + "," + fmt(y);
        }
        flush();
    }

    std::string finish() {
        out_ << "</svg>\n";
        return out_.str();
    }

private:
    std::ostringstream out_;
};

double plot_x(double v, const Range& r) {
    return kLeft + (v - r.lo) / (r.hi - r.lo) * (kWidth - kLeft - kRight);
}

double plot_y(double v, const Range& r) {
    return kTop + (r.hi - v) / (r.hi - r.lo) * (kHeight - kTop - kBottom);
}

void axes(Canvas& c, const Range& xr, const Range& yr, const std::string& x_label,
          const std::string& y_label, bool x_ticks = true) {
    const double x0 = kLeft;
    const double x1 = kWidth - kRight;
    const double y0 = kHeight - kBottom;
    const double y1 = kTop;
    c.line(x0, y0, x1, y0, "black");
    c.line(x0, y0, x0, y1, "black");
    for (int i = 0; i <= 5; ++i) {
        const double fy = yr.lo + (yr.hi - yr.lo) * i / 5.0;
        const double py = plot_y(fy, yr);
        c.line(x0 - 4, py, x0, py, "black");
        c.line(x0, py, x1, py, "#e5e5e5");
        c.text(x0 - 6, py + 4, tick_label(fy), "end", 10);
        if (x_ticks) {
            const double fx = xr.lo + (xr.hi - xr.lo) * i / 5.0;
            const double px = plot_x(fx, xr);
            c.line(px, y0, px, y0 + 4, "black");
            c.text(px, y0 + 16, tick_label(fx), "middle", 10);
        }
    }
    c.text((x0 + x1) / 2, y0 + 34, x_label);
    c.text(18, (y0 + y1) / 2, y_label, "middle", 12, -90.0);
}

void legend(Canvas& c, const std::vector<std::pair<std::string, std::string>>& items) {
    double x = kLeft;
    const double y = kHeight - 30;
    for (const auto& [label, color] : items) {
        const bool dashed = color.rfind("dash:", 0) == 0;
        const std::string col = dashed ? color.substr(5) : color;
        c.line(x, y - 4, x + 22, y - 4, col, 2.0, dashed);
        c.text(x + 26, y, label, "start", 11);
        x += 32 + 7.0 * static_cast<double>(label.size());
        if (x > kWidth - 150) {
            break;
        }
    }
}

const char* reference_color(std::size_t i) { return i == 0 ? "#555555" : "#999999"; }

} // namespace

std::string render_svg(const LineChart& chart) {
    Range xr;
    Range yr;
    bool has_secondary = false;
    for (const Series& s : chart.series) {
        for (double x : s.x) {
            xr.add(x);
        }
        if (s.secondary) {
            has_secondary = true;
            continue;
        }
        for (double y : s.y) {
            yr.add(y);
        }
    }
    for (const ReferenceLine& r : chart.references) {
        yr.add(r.y);
    }
    for (const Band& b : chart.bands) {
        xr.add(b.x0);
        xr.add(b.x1);
    }
    xr.finish(0.0);
    yr.finish(0.05);
    const Range unit{-0.02, 1.02};

    Canvas c;
    c.text(kWidth / 2, 22, chart.title, "middle", 14);
    for (const Band& b : chart.bands) {
        const double px0 = plot_x(b.x0, xr);
        const double px1 = plot_x(b.x1, xr);
        c.rect(px0, kTop, std::max(px1 - px0, 1.0), kHeight - kTop - kBottom, "#d62728", 0.18);
        if (!b.label.empty()) {
            c.text(px0 + 3, kTop + 12, b.label, "start", 10);
        }
    }
    axes(c, xr, yr, chart.x_label, chart.y_label);
    if (has_secondary) {
        const double x1 = kWidth - kRight;
        c.line(x1, kHeight - kBottom, x1, kTop, "black");
        for (int i = 0; i <= 5; ++i) {
            const double v = i / 5.0;
            const double py = plot_y(v, unit);
            c.line(x1, py, x1 + 4, py, "black");
            c.text(x1 + 6, py + 4, tick_label(v), "start", 10);
        }
        c.text(kWidth - 14, (kHeight - kBottom + kTop) / 2, chart.secondary_label, "middle", 12,
               90.0);
    }
    std::vector<std::pair<std::string, std::string>> items;
    for (std::size_t i = 0; i < chart.references.size(); ++i) {
        const ReferenceLine& r = chart.references[i];
        const double py = plot_y(r.y, yr);
        c.line(kLeft, py, kWidth - kRight, py, reference_color(i), 1.2, true);
        c.text(kWidth - kRight - 4, py - 4, r.label, "end", 10);
    }
    for (std::size_t i = 0; i < chart.series.size(); ++i) {
        const Series& s = chart.series[i];
        const std::string color = kPalette[i % std::size(kPalette)];
        std::vector<std::pair<double, double>> pts;
        for (std::size_t j = 0; j < std::min(s.x.size(), s.y.size()); ++j) {
            pts.emplace_back(plot_x(s.x[j], xr), plot_y(s.y[j], s.secondary ? unit : yr));
        }
        c.polyline(pts, color);
        items.emplace_back(s.label, color);
    }
    legend(c, items);
    return c.finish();
}

std::string render_svg(const BarChart& chart) {
    Range yr;
    yr.add(0.0);
    for (const auto& g : chart.values) {
        for (double v : g) {
            yr.add(v);
        }
    }
    for (const ReferenceLine& r : chart.references) {
        yr.add(r.y);
    }
    yr.finish(0.05);
    yr.lo = std::min(yr.lo, 0.0);
    const Range xr{0.0, std::max<double>(1.0, static_cast<double>(chart.groups.size()))};

    Canvas c;
    c.text(kWidth / 2, 22, chart.title, "middle", 14);
    axes(c, xr, yr, "", chart.y_label, false);
    const double group_w = (kWidth - kLeft - kRight) / xr.hi;
    const std::size_t bars = std::max<std::size_t>(chart.bar_labels.size(), 1);
    const double bar_w = group_w * 0.7 / static_cast<double>(bars);
    for (std::size_t g = 0; g < chart.groups.size(); ++g) {
        const double gx = kLeft + group_w * static_cast<double>(g) + group_w * 0.15;
        for (std::size_t b = 0; b < chart.values[g].size(); ++b) {
            const double v = chart.values[g][b];
            if (!std::isfinite(v)) {
                continue;
            }
            const double top = plot_y(std::max(v, 0.0), yr);
            const double base = plot_y(std::min(v, 0.0), yr);
            c.rect(gx + bar_w * static_cast<double>(b), top, bar_w * 0.92, base - top,
                   kPalette[b % std::size(kPalette)]);
        }
        c.text(kLeft + group_w * (static_cast<double>(g) + 0.5), kHeight - kBottom + 16,
               chart.groups[g], "middle", 10);
    }
    for (std::size_t i = 0; i < chart.references.size(); ++i) {
        const ReferenceLine& r = chart.references[i];
        const double py = plot_y(r.y, yr);
        c.line(kLeft, py, kWidth - kRight, py, reference_color(i), 1.2, true);
        c.text(kWidth - kRight - 4, py - 4, r.label, "end", 10);
    }
    std::vector<std::pair<std::string, std::string>> items;
    for (std::size_t b = 0; b < chart.bar_labels.size(); ++b) {
        items.emplace_back(chart.bar_labels[b], kPalette[b % std::size(kPalette)]);
    }
    legend(c, items);
    return c.finish();
}

std::optional<PlotKind> parse_plot_kind(const std::string& name) {
    if (name == "reward-trajectory") return PlotKind::reward_trajectory;
    if (name == "price-response") return PlotKind::price_response;
    if (name == "sweep-bars") return PlotKind::sweep_bars;
    if (name == "dual-buffer-timeline") return PlotKind::dual_buffer_timeline;
    return std::nullopt;
}

namespace {

std::vector<ReferenceLine> profit_references(const ExperimentConfig& cfg) {
    if (cfg.environment.kind == Environment::Kind::market) {
        const MarketParams& m = cfg.environment.market;
        return {{symmetric_profit(m, nash_price(m)), "Nash profit"},
                {symmetric_profit(m, monopoly_price(m)), "monopoly profit"}};
    }
    const PayoffMatrix& p = cfg.environment.payoffs;
    return {{p.defection, "mutual defection"}, {p.cooperation, "mutual cooperation"}};
}

std::vector<ReferenceLine> price_references(const ExperimentConfig& cfg) {
    if (cfg.environment.kind != Environment::Kind::market) {
        throw ConfigError("price plots need a market configuration");
    }
    const MarketParams& m = cfg.environment.market;
    return {{nash_price(m), "Nash price"}, {monopoly_price(m), "monopoly price"}};
}

std::size_t agent_count(std::span<const RunRecord> records) {
    std::size_t k = 0;
    for (const auto& r : records) {
        k = std::max(k, r.n_agents);
    }
    return k;
}

double median(std::vector<double> v) {
    v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }),
            v.end());
    if (v.empty()) {
        return kNaN;
    }
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Mean of `value(record, row, agent)` per agent in equal-width period bins over
// rows with period in [first, last].
template <typename F>
std::vector<Series> binned(std::span<const RunRecord> records, std::uint64_t first,
                           std::uint64_t last, std::size_t bins, std::size_t k, F value,
                           double x_offset) {
    const double span = static_cast<double>(last - first + 1);
    const std::size_t n = std::max<std::size_t>(1, std::min<std::size_t>(bins, last - first + 1));
    std::vector<std::vector<double>> sum(k, std::vector<double>(n, 0.0));
    std::vector<std::vector<double>> cnt(k, std::vector<double>(n, 0.0));
    for (const RunRecord& rec : records) {
        for (std::size_t r = 0; r < rec.rows(); ++r) {
            const std::uint64_t p = rec.periods[r];
            if (p < first || p > last) {
                continue;
            }
            const auto b = std::min<std::size_t>(
                n - 1, static_cast<std::size_t>(static_cast<double>(p - first) / span *
                                                static_cast<double>(n)));
            for (std::size_t i = 0; i < rec.n_agents; ++i) {
                const double v = value(rec, r, i);
                if (std::isfinite(v)) {
                    sum[i][b] += v;
                    cnt[i][b] += 1.0;
                }
            }
        }
    }
    std::vector<Series> out(k);
    for (std::size_t i = 0; i < k; ++i) {
        out[i].label = "agent " + std::to_string(i);
        for (std::size_t b = 0; b < n; ++b) {
            out[i].x.push_back(x_offset + static_cast<double>(first) +
                               (static_cast<double>(b) + 0.5) * span / static_cast<double>(n));
            out[i].y.push_back(cnt[i][b] > 0 ? sum[i][b] / cnt[i][b] : kNaN);
        }
    }
    return out;
}

} // namespace

LineChart reward_trajectory_chart(std::span<const RunRecord> records, const ExperimentConfig& cfg,
                                  std::size_t bins) {
    LineChart chart;
    chart.title = "Mean reward per period";
    chart.x_label = "period";
    chart.y_label = "reward";
    chart.references = profit_references(cfg);
    std::uint64_t last = 0;
    bool any = false;
    for (const auto& r : records) {
        if (r.rows() > 0) {
            last = std::max(last, r.periods.back());
            any = true;
        }
    }
    if (any) {
        chart.series = binned(
            records, 0, last, bins, agent_count(records),
            [](const RunRecord& rec, std::size_t row, std::size_t i) {
                return rec.rewards[rec.at(row, i)];
            },
            0.0);
    }
    return chart;
}

LineChart price_response_chart(std::span<const RunRecord> records, const ExperimentConfig& cfg) {
    const std::uint64_t periods = cfg.evaluation.periods;
    if (periods == 0) {
        throw ConfigError("price-response plots need evaluation periods in the config");
    }
    LineChart chart;
    chart.title = "Price response";
    chart.y_label = "price";
    chart.references = price_references(cfg);
    std::optional<std::uint64_t> origin;
    for (const Intervention& iv : cfg.interventions) {
        if (iv.phase == Phase::evaluation) {
            origin = origin ? std::min(*origin, iv.start) : iv.start;
        }
    }
    const double shift = origin ? static_cast<double>(*origin) : 0.0;
    chart.x_label = origin ? "periods after intervention" : "evaluation period";
    for (const Intervention& iv : cfg.interventions) {
        if (iv.phase != Phase::evaluation) {
            continue;
        }
        const double end = iv.permanent ? static_cast<double>(periods)
                                        : static_cast<double>(iv.start + iv.length);
        chart.bands.push_back({static_cast<double>(iv.start) - shift - 0.5, end - shift - 0.5,
                               "agent " + std::to_string(iv.agent) + " forced"});
    }
    const std::size_t k = agent_count(records);
    chart.series.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        chart.series[i].label = "agent " + std::to_string(i) + " (median)";
        for (std::uint64_t t = 0; t < periods; ++t) {
            std::vector<double> prices;
            for (const RunRecord& rec : records) {
                if (rec.rows() < periods || i >= rec.n_agents) {
                    continue;
                }
                const std::size_t row = rec.rows() - periods + t;
                prices.push_back(rec.prices[rec.at(row, i)]);
            }
            chart.series[i].x.push_back(static_cast<double>(t) - shift);
            chart.series[i].y.push_back(median(prices));
        }
    }
    return chart;
}

BarChart sweep_chart(const SweepResult& sweep) {
    BarChart chart;
    chart.title = "Post-convergence mean profit by exploration decay";
    chart.y_label = "profit";
    std::size_t k = 0;
    for (const SweepRow& row : sweep.rows) {
        k = std::max(k, row.mean_profit.size());
        chart.groups.push_back("beta = " + tick_label(row.beta));
        chart.values.push_back(row.mean_profit);
    }
    for (std::size_t i = 0; i < k; ++i) {
        chart.bar_labels.push_back("agent " + std::to_string(i));
    }
    if (sweep.pi_monopoly > sweep.pi_nash) {
        chart.references = {{sweep.pi_nash, "Nash profit"},
                            {sweep.pi_monopoly, "monopoly profit"}};
    }
    return chart;
}

LineChart dual_buffer_chart(std::span<const RunRecord> records, const ExperimentConfig& cfg,
                            std::size_t bins) {
    const NewcomerSpec& nc = cfg.newcomer;
    LineChart chart;
    chart.title = "Newcomer against the incumbent";
    chart.x_label = "online period";
    chart.y_label = "price";
    chart.secondary_label = "p_online";
    chart.references = price_references(cfg);
    const std::uint64_t online_start = nc.warm_start ? nc.offline_periods : 0;
    const std::uint64_t last = online_start + std::max<std::uint64_t>(nc.online_periods, 1) - 1;
    const std::size_t k = std::max<std::size_t>(agent_count(records), 2);
    auto prices = binned(
        records, online_start, last, bins, k,
        [](const RunRecord& rec, std::size_t row, std::size_t i) {
            return rec.prices[rec.at(row, i)];
        },
        -static_cast<double>(online_start));
    auto p_on = binned(
        records, online_start, last, bins, k,
        [](const RunRecord& rec, std::size_t row, std::size_t i) {
            return rec.p_online[rec.at(row, i)];
        },
        -static_cast<double>(online_start));
    if (nc.incumbent < prices.size()) {
        prices[nc.incumbent].label = "incumbent price";
        chart.series.push_back(prices[nc.incumbent]);
    }
    if (nc.newcomer < prices.size()) {
        prices[nc.newcomer].label = "newcomer price";
        chart.series.push_back(prices[nc.newcomer]);
        p_on[nc.newcomer].label = "newcomer p_online";
        p_on[nc.newcomer].secondary = true;
        chart.series.push_back(p_on[nc.newcomer]);
    }
    if (nc.shock_start) {
        chart.bands.push_back({static_cast<double>(*nc.shock_start),
                               static_cast<double>(*nc.shock_start + nc.shock_length),
                               "incumbent near Nash"});
    }
    return chart;
}

} // namespace algopricing
