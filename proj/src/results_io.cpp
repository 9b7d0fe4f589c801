#include "algopricing/results_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "algopricing/config_io.hpp"
#include "algopricing/errors.hpp"

namespace algopricing {

std::string format_number(double value) {
    if (std::isnan(value)) {
        return {};
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

void write_results_csv(std::ostream& out, std::span<const RunRecord> records) {
    out << kResultsHeader << '\n';
    std::string line;
    for (const RunRecord& rec : records) {
        for (std::size_t r = 0; r < rec.rows(); ++r) {
            for (std::size_t i = 0; i < rec.n_agents; ++i) {
                const std::size_t at = rec.at(r, i);
                line.clear();
                line += std::to_string(rec.replica);
                line += ',';
                line += std::to_string(rec.periods[r]);
                line += ',';
                line += std::to_string(i);
                line += ',';
                line += std::to_string(rec.actions[at]);
                line += ',';
                line += format_number(rec.prices[at]);
                line += ',';
                line += format_number(rec.rewards[at]);
                line += ',';
                line += format_number(rec.epsilons[at]);
                line += ',';
                line += format_number(rec.p_online[at]);
                line += '\n';
                out << line;
            }
        }
    }
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) {
            return fields;
        }
        start = comma + 1;
    }
}

[[noreturn]] void bad_field(std::size_t line_no, const std::string& what) {
    throw ConfigError("CSV line " + std::to_string(line_no) + ": " + what);
}

std::uint64_t parse_uint(const std::string& s, std::size_t line_no, const char* column) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
        bad_field(line_no, std::string(column) + " is not a non-negative integer");
    }
    return std::stoull(s);
}

double parse_real(const std::string& s, std::size_t line_no, const char* column,
                  bool allow_empty) {
    if (s.empty()) {
        if (!allow_empty) {
            bad_field(line_no, std::string(column) + " is empty");
        }
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        bad_field(line_no, std::string(column) + " is not a number");
    }
    if (used != s.size()) {
        bad_field(line_no, std::string(column) + " is not a number");
    }
    return v;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
}

double median_of(std::vector<double> v) {
    if (v.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

std::vector<RunRecord> read_results_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError("CSV is empty (expected header '" + std::string(kResultsHeader) + "')");
    }
    strip_cr(line);
    if (line != kResultsHeader) {
        throw ConfigError("CSV header mismatch: expected '" + std::string(kResultsHeader) +
                          "', got '" + line + "'");
    }
    std::vector<RunRecord> records;
    std::size_t line_no = 1;
    std::size_t next_agent = 0; // agent expected on the next row of the current period
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) {
            continue;
        }
        const auto f = split(line);
        if (f.size() != 8) {
            bad_field(line_no, "expected 8 columns, got " + std::to_string(f.size()));
        }
        const auto replica = static_cast<std::size_t>(parse_uint(f[0], line_no, "replica"));
        const std::uint64_t period = parse_uint(f[1], line_no, "period");
        const auto agent = static_cast<std::size_t>(parse_uint(f[2], line_no, "agent"));

        const bool new_replica = records.empty() || records.back().replica != replica;
        if (new_replica || agent == 0) {
            // A new period starts; the previous one must be complete.
            if (!records.empty() && records.back().periods.size() == 1 && next_agent > 0) {
                records.back().n_agents = next_agent;
            }
            if (!records.empty() && next_agent != records.back().n_agents) {
                bad_field(line_no, "previous period lists " + std::to_string(next_agent) +
                                       " of " + std::to_string(records.back().n_agents) +
                                       " agents");
            }
            if (agent != 0) {
                bad_field(line_no, "a period must start with agent 0");
            }
            if (new_replica) {
                records.emplace_back();
                records.back().replica = replica;
            } else if (period <= records.back().periods.back()) {
                bad_field(line_no, "periods must increase within a replica");
            }
            records.back().periods.push_back(period);
            next_agent = 0;
        }
        RunRecord& rec = records.back();
        if (period != rec.periods.back() || agent != next_agent) {
            bad_field(line_no, "agents must be listed 0..K-1 within each period");
        }
        if (rec.periods.size() > 1 && agent >= rec.n_agents) {
            bad_field(line_no, "agent id exceeds the agent count of the replica");
        }
        rec.actions.push_back(static_cast<std::size_t>(parse_uint(f[3], line_no, "action")));
        rec.prices.push_back(parse_real(f[4], line_no, "price", true));
        rec.rewards.push_back(parse_real(f[5], line_no, "reward", false));
        rec.epsilons.push_back(parse_real(f[6], line_no, "epsilon", false));
        rec.p_online.push_back(parse_real(f[7], line_no, "p_online", true));
        ++next_agent;
    }
    if (!records.empty()) {
        RunRecord& last = records.back();
        if (last.periods.size() == 1) {
            last.n_agents = next_agent;
        }
        if (next_agent != last.n_agents) {
            throw ConfigError("CSV ends inside a period of replica " +
                              std::to_string(last.replica));
        }
    }
    return records;
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
    out << kSweepHeader << '\n';
    for (const SweepRow& row : sweep.rows) {
        for (std::size_t r = 0; r < row.profits.size(); ++r) {
            for (std::size_t i = 0; i < row.profits[r].size(); ++i) {
                out << format_number(row.beta) << ',' << r << ',' << i << ','
                    << format_number(row.profits[r][i]) << '\n';
            }
        }
    }
}

SweepResult read_sweep_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError("sweep CSV is empty");
    }
    strip_cr(line);
    if (line != kSweepHeader) {
        throw ConfigError("sweep CSV header mismatch: expected '" + std::string(kSweepHeader) +
                          "', got '" + line + "'");
    }
    SweepResult sweep;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) {
            continue;
        }
        const auto f = split(line);
        if (f.size() != 4) {
            bad_field(line_no, "expected 4 columns, got " + std::to_string(f.size()));
        }
        const double beta = parse_real(f[0], line_no, "beta", false);
        const auto replica = static_cast<std::size_t>(parse_uint(f[1], line_no, "replica"));
        const auto agent = static_cast<std::size_t>(parse_uint(f[2], line_no, "agent"));
        const double profit = parse_real(f[3], line_no, "profit", true);
        if (sweep.rows.empty() || sweep.rows.back().beta != beta) {
            sweep.rows.emplace_back();
            sweep.rows.back().beta = beta;
        }
        SweepRow& row = sweep.rows.back();
        if (replica >= row.profits.size()) {
            row.profits.resize(replica + 1);
        }
        if (agent >= row.profits[replica].size()) {
            row.profits[replica].resize(agent + 1, std::numeric_limits<double>::quiet_NaN());
        }
        row.profits[replica][agent] = profit;
    }
    for (SweepRow& row : sweep.rows) {
        std::size_t k = 0;
        for (const auto& p : row.profits) {
            k = std::max(k, p.size());
        }
        for (std::size_t i = 0; i < k; ++i) {
            std::vector<double> v;
            for (const auto& p : row.profits) {
                if (i < p.size()) {
                    v.push_back(p[i]);
                }
            }
            row.mean_profit.push_back(mean_of(v));
            row.median_profit.push_back(median_of(v));
        }
    }
    return sweep;
}

std::string summary_text(const ExperimentConfig& cfg, std::span<const RunRecord> records) {
    std::ostringstream out;
    const bool market = cfg.environment.kind == Environment::Kind::market;
    double pi_nash = 0.0;
    double pi_monopoly = 0.0;
    out << "environment: " << to_string(cfg.environment.kind);
    if (market) {
        const MarketParams& m = cfg.environment.market;
        const double p_n = nash_price(m);
        const double p_m = monopoly_price(m);
        pi_nash = symmetric_profit(m, p_n);
        pi_monopoly = symmetric_profit(m, p_m);
        out << " (" << m.n_agents << " agents)\n"
            << "p_nash: " << format_number(p_n) << "\n"
            << "p_monopoly: " << format_number(p_m) << "\n"
            << "pi_nash: " << format_number(pi_nash) << "\n"
            << "pi_monopoly: " << format_number(pi_monopoly) << "\n";
    } else {
        const PayoffMatrix& p = cfg.environment.payoffs;
        out << "\nmutual defection payoff: " << format_number(p.defection) << "\n"
            << "mutual cooperation payoff: " << format_number(p.cooperation) << "\n";
    }
    out << "replicas: " << records.size() << "\n"
        << "seed: " << cfg.seed << "\n"
        << "final window: " << cfg.summary_window << " recorded periods\n\n";

    out << "replica,agent,converged_at,executed_periods,mean_reward,profit_gain,final_price\n";
    const std::size_t k = cfg.agents.size();
    std::vector<std::vector<double>> rewards(k);
    std::vector<std::vector<double>> gains(k);
    std::size_t converged = 0;
    for (const RunRecord& rec : records) {
        const RunSummary s = summarize(rec, cfg.summary_window);
        converged += rec.convergence_period.has_value();
        for (std::size_t i = 0; i < s.agents.size(); ++i) {
            const AgentSummary& a = s.agents[i];
            double gain = std::numeric_limits<double>::quiet_NaN();
            if (market && std::isfinite(a.mean_reward)) {
                gain = profit_gain(a.mean_reward, pi_nash, pi_monopoly).delta;
            }
            if (i < k) {
                rewards[i].push_back(a.mean_reward);
                gains[i].push_back(gain);
            }
            out << rec.replica << ',' << i << ','
                << (rec.convergence_period ? std::to_string(*rec.convergence_period) : "never")
                << ',' << rec.executed_periods << ',' << format_number(a.mean_reward) << ','
                << format_number(gain) << ',' << format_number(a.final_price) << '\n';
        }
    }
    out << "\nagent,mean_reward_mean,mean_reward_median,profit_gain_mean,profit_gain_median\n";
    for (std::size_t i = 0; i < k; ++i) {
        out << i << ',' << format_number(mean_of(rewards[i])) << ','
            << format_number(median_of(rewards[i])) << ',' << format_number(mean_of(gains[i]))
            << ',' << format_number(median_of(gains[i])) << '\n';
    }
    out << "\nconverged replicas: " << converged << "/" << records.size() << "\n";
    return out.str();
}

} // namespace algopricing
