#pragma once

// Results files: the per-period CSV, the sweep CSV and the plain-text summary.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "algopricing/harness.hpp"

namespace algopricing {

inline constexpr const char* kResultsHeader =
    "replica,period,agent,action,price,reward,epsilon,p_online";
inline constexpr const char* kSweepHeader = "beta,replica,agent,profit";

// 9 significant digits; NaN becomes an empty field.
std::string format_number(double value);

// One row per (replica, recorded period, agent).
void write_results_csv(std::ostream& out, std::span<const RunRecord> records);
// Inverse of write_results_csv for the recorded columns. Throws ConfigError
// naming the line on a header or field mismatch.
std::vector<RunRecord> read_results_csv(std::istream& in);

void write_sweep_csv(std::ostream& out, const SweepResult& sweep);
// Rebuilds the per-replica profits and their per-agent means and medians.
SweepResult read_sweep_csv(std::istream& in);

// Human-readable summary: per replica and agent the mean reward over the final
// window, profit gain for markets, convergence period and final price.
std::string summary_text(const ExperimentConfig& cfg, std::span<const RunRecord> records);

} // namespace algopricing
