#pragma once

// Declarative experiment runner: Monte-Carlo replicas of repeated games with
// convergence detection, scripted interventions, exploration sweeps and the
// incumbent/newcomer scenario.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "algopricing/agent.hpp"
#include "algopricing/dqn_agent.hpp"
#include "algopricing/environment.hpp"
#include "algopricing/kernels.hpp"
#include "algopricing/reward.hpp"

namespace algopricing {

struct EnvironmentSpec {
    Environment::Kind kind = Environment::Kind::market;
    MarketParams market;
    double xi = 0.1;
    std::size_t grid_size = 15;
    PayoffMatrix payoffs;

    Environment build() const;
    friend bool operator==(const EnvironmentSpec&, const EnvironmentSpec&) = default;
};

enum class AgentKind { tabular, dqn, dual_buffer, fixed };
enum class QInit { uniform, reward_bounds };
enum class FixedPolicy { constant, tit_for_tat };

struct AgentSpec {
    AgentKind kind = AgentKind::tabular;
    AgentHyperparams hp;
    // uniform: U(q_init_low, q_init_high). reward_bounds: the same draw mapped
    // affinely from [0, 1] onto [r_min, r_max] / (1 - gamma).
    QInit q_init = QInit::reward_bounds;
    DqnConfig dqn;
    DualBufferConfig dual;
    RewardSpec reward;
    FixedPolicy policy = FixedPolicy::constant;
    std::size_t action = 0;  // constant policy action
    std::string snapshot;    // optional warm start (Q-table or value network)

    friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

struct ConvergenceRule {
    bool enabled = true;
    std::uint64_t stability = 25000; // periods without any greedy change
    bool stop_early = true;

    friend bool operator==(const ConvergenceRule&, const ConvergenceRule&) = default;
};

enum class Phase { train, evaluation };

struct ForcedAction {
    enum class Kind {
        action,        // fixed action index
        price,         // nearest grid point to a price
        nash_above,    // smallest grid price strictly above the Nash price
        best_response, // one-period best response to the others' proposals
        hold,          // the agent's own action just before the window
        shift,         // `shift` grid steps from the action just before the window
    };
    Kind kind = Kind::action;
    std::size_t action = 0;
    double price = 0.0;
    long shift = 0;

    friend bool operator==(const ForcedAction&, const ForcedAction&) = default;
};

struct Intervention {
    std::size_t agent = 0;
    Phase phase = Phase::evaluation;
    std::uint64_t start = 0;   // first forced period, counted within the phase
    std::uint64_t length = 1;  // ignored when permanent
    bool permanent = false;    // forced until the end of the phase
    ForcedAction force;

    bool covers(std::uint64_t t) const {
        return t >= start && (permanent || t - start < length);
    }
    friend bool operator==(const Intervention&, const Intervention&) = default;
};

class InterventionSchedule {
public:
    InterventionSchedule() = default;
    // Throws ConfigError on an invalid agent id, a zero-length window or two
    // windows forcing the same agent in overlapping periods.
    InterventionSchedule(std::vector<Intervention> items, std::size_t n_agents);

    // Throws ConfigError when a window of `phase` starts at or after `length`.
    void validate_horizon(Phase phase, std::uint64_t length) const;

    bool empty() const { return items_.empty(); }
    const std::vector<Intervention>& items() const { return items_; }
    // Index of the intervention forcing `agent` at period t of `phase`.
    std::optional<std::size_t> active(std::size_t agent, Phase phase, std::uint64_t t) const;

private:
    std::vector<Intervention> items_;
};

struct InterventionContext {
    const Environment* env = nullptr;
    // Action each intervention's agent played just before its window opened.
    std::span<const std::optional<std::size_t>> reference;
};

// Action of `agent` maximizing its stage payoff against the other entries of
// `joint`; ties go to the lowest index.
std::size_t best_response(const Environment& env, std::span<const std::size_t> joint,
                          std::size_t agent);

// Effective joint action: forced entries replace the proposed ones.
JointAction apply_interventions(const InterventionSchedule& schedule, Phase phase,
                                std::uint64_t t, std::span<const std::size_t> proposed,
                                const InterventionContext& ctx);

struct RecordSpec {
    std::uint64_t stride = 1; // keep every stride-th training period
    std::uint64_t tail = 0;   // plus every one of the last `tail` training periods

    friend bool operator==(const RecordSpec&, const RecordSpec&) = default;
};

struct EvaluationSpec {
    std::uint64_t periods = 0; // greedy periods after training
    bool learning = true;      // agents keep updating from what is played

    friend bool operator==(const EvaluationSpec&, const EvaluationSpec&) = default;
};

// Incumbent/newcomer scenario: a pretrained tabular duopoly is observed for
// offline_periods, then the newcomer takes over one seat and learns online.
struct NewcomerSpec {
    bool enabled = false;
    std::size_t incumbent = 0;
    std::size_t newcomer = 1;
    std::string incumbent_snapshot;    // tables of the pretrained duopoly
    std::uint64_t offline_periods = 4000;
    double observe_epsilon = 0.0;      // exploration of the frozen partner while observed
    std::uint64_t pretrain_updates = 0;
    std::uint64_t online_periods = 20000;
    bool warm_start = true;            // false: no offline phase (cold start)
    // Observed offline periods count as elapsed periods of the newcomer's
    // exploration schedule.
    bool offline_advances_epsilon = true;
    bool incumbent_learns = false;
    // Incumbent forced to the grid point just above the Nash price during
    // [shock_start, shock_start + shock_length) of the online phase.
    std::optional<std::uint64_t> shock_start;
    std::uint64_t shock_length = 0;

    friend bool operator==(const NewcomerSpec&, const NewcomerSpec&) = default;
};

struct ExperimentConfig {
    int schema_version = 1;
    EnvironmentSpec environment;
    std::vector<AgentSpec> agents{AgentSpec{}, AgentSpec{}};
    std::uint64_t horizon = 2000000;
    std::size_t replicas = 1;
    std::uint64_t seed = 0;
    ConvergenceRule convergence;
    std::vector<Intervention> interventions;
    EvaluationSpec evaluation;
    RecordSpec record;
    std::uint64_t summary_window = 1000;
    NewcomerSpec newcomer;

    // Throws ConfigError describing the first problem found.
    void validate() const;
    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct RunRecord {
    std::size_t replica = 0;
    std::uint64_t seed = 0;
    std::size_t n_agents = 0;
    std::vector<std::uint64_t> periods;  // recorded period numbers, ascending
    // Row-major (recorded period x agent):
    std::vector<std::size_t> actions;
    std::vector<double> prices;          // NaN for matrix games
    std::vector<double> rewards;         // environment payoff before shaping
    std::vector<double> epsilons;
    std::vector<double> p_online;        // NaN when not applicable
    std::uint64_t executed_periods = 0;  // training periods actually run
    std::optional<std::uint64_t> convergence_period;
    std::uint64_t evaluation_start = 0;  // first evaluation period number
    std::uint64_t online_start = 0;      // newcomer scenario: first online period
    // Greedy action per encoded state for tabular agents at the end of training.
    std::vector<std::vector<std::size_t>> final_policy;

    std::size_t rows() const { return periods.size(); }
    std::size_t at(std::size_t row, std::size_t agent) const { return row * n_agents + agent; }
    // Field-wise equality in which NaN entries match NaN entries.
    friend bool operator==(const RunRecord& a, const RunRecord& b);
};

// Builds agent `index` of `spec` for `env`; `rng` drives initialization.
std::unique_ptr<Agent> make_agent(const AgentSpec& spec, std::size_t index, const Environment& env,
                                  Rng& rng);

struct PeriodOutcome {
    JointAction proposed;
    JointAction effective;
    std::vector<double> payoffs;
};

// One replica in progress: environment, agents, memory and random streams.
class Session {
public:
    // Per-seat hook applied to the effective action before payoffs.
    using ActionFilter = std::function<std::size_t(std::size_t seat, std::size_t action)>;

    // `memory_len` 0 sizes the memory for the longest agent memory.
    Session(const Environment& env, std::vector<std::unique_ptr<Agent>> agents,
            std::vector<RewardSpec> rewards, std::uint64_t seed, std::size_t memory_len = 0);

    // Uniformly random joint actions until the memory is full.
    void warm_up();
    // Interventions applied by step(); nullptr clears them. Not owned.
    void set_schedule(const InterventionSchedule* schedule);
    // One period: propose, apply interventions, pay out, learn.
    const PeriodOutcome& step(bool explore, bool learn, Phase phase = Phase::train,
                              std::uint64_t phase_period = 0);
    const PeriodOutcome& step_with(bool explore, bool learn, Phase phase,
                                   std::uint64_t phase_period, const ActionFilter& filter);

    const MemoryState& memory() const { return memory_; }
    std::size_t n_agents() const { return agents_.size(); }
    Agent& agent(std::size_t i) { return *agents_[i]; }
    const Agent& agent(std::size_t i) const { return *agents_[i]; }
    // Swaps in a new agent for seat i and returns the old one.
    std::unique_ptr<Agent> replace_agent(std::size_t i, std::unique_ptr<Agent> agent);
    void set_reward(std::size_t i, const RewardSpec& spec) { rewards_[i] = spec; }
    // Whether the last step learned and changed any agent's greedy policy.
    bool any_greedy_changed() const;
    const Environment& environment() const { return *env_; }
    Rng& env_rng() { return env_rng_; }

private:
    const Environment* env_;
    std::vector<std::unique_ptr<Agent>> agents_;
    std::vector<RewardSpec> rewards_;
    MemoryState memory_;
    MemoryState prev_;
    Rng env_rng_;
    std::vector<Rng> agent_rngs_;
    const InterventionSchedule* schedule_ = nullptr;
    std::vector<std::optional<std::size_t>> references_;
    JointAction proposed_;
    std::vector<double> payoffs_;
    PeriodOutcome last_;
    bool learned_ = false;
};

// Periods since the last greedy-policy change of any agent.
class ConvergenceTracker {
public:
    explicit ConvergenceTracker(const ConvergenceRule& rule) : rule_(rule) {}

    // Feed one period; returns the convergence period (number of periods
    // executed) the first time the streak reaches rule.stability.
    std::optional<std::uint64_t> update(bool greedy_changed);
    std::optional<std::uint64_t> converged_at() const { return converged_; }
    std::uint64_t streak() const { return streak_; }

private:
    ConvergenceRule rule_;
    std::uint64_t periods_ = 0;
    std::uint64_t streak_ = 0;
    std::optional<std::uint64_t> converged_;
};

// Convergence period of a finished sequence of per-period "greedy changed" flags.
std::optional<std::uint64_t> detect_convergence(std::span<const bool> greedy_changed,
                                                const ConvergenceRule& rule);

// Runs one replica of a (non-newcomer) configuration. `agents_out`, when given,
// receives the agents at the end of the run.
RunRecord run_replica(const ExperimentConfig& cfg, const Environment& env, std::size_t replica,
                      std::vector<std::unique_ptr<Agent>>* agents_out = nullptr);

// Every replica of `cfg`; replicas run concurrently under Execution::parallel
// and produce the same records as Execution::serial.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg,
                                      Execution exec = Execution::parallel);

struct AgentSummary {
    double mean_reward = 0.0;    // over the final summary window of recorded rows
    std::size_t final_action = 0;
    double final_price = 0.0;    // NaN for matrix games
};

struct RunSummary {
    std::vector<AgentSummary> agents;
};

// Statistics computed only from the recorded rows (and so reproducible from CSV).
RunSummary summarize(const RunRecord& record, std::uint64_t window);

// Mean payoff of `agent` over the evaluation rows, or over the final `window`
// rows when the run has no evaluation phase.
double post_convergence_profit(const RunRecord& record, std::size_t agent, std::uint64_t window);

// Online periods (counted from record.online_start) until the trailing
// `window`-period mean payoff of `agent` first reaches `fraction` of its mean
// over the last `final_window` rows. Needs every period recorded.
std::optional<std::uint64_t> periods_to_fraction(const RunRecord& record, std::size_t agent,
                                                 std::uint64_t window, double fraction,
                                                 std::uint64_t final_window);

struct ProfitGainMetric {
    double delta = 0.0;
};

// (profit - pi_nash) / (pi_monopoly - pi_nash). Throws ParameterError when the
// two benchmarks coincide.
ProfitGainMetric profit_gain(double mean_profit, double pi_nash, double pi_monopoly);
ProfitGainMetric profit_gain(double mean_profit, const MarketParams& params);
// Market-average variant over several agents' profits.
ProfitGainMetric profit_gain(std::span<const double> mean_profits, const MarketParams& params);

struct SweepRow {
    double beta = 0.0;
    // Post-convergence mean profit per replica, [replica][agent].
    std::vector<std::vector<double>> profits;
    std::vector<double> mean_profit;    // per agent
    std::vector<double> median_profit;  // per agent
};

struct SweepResult {
    std::vector<SweepRow> rows;
    double pi_nash = 0.0;
    double pi_monopoly = 0.0;
};

// Re-runs `base` with agent `agent`'s beta set to each value.
SweepResult sweep_exploration(const ExperimentConfig& base, std::span<const double> betas,
                              std::size_t agent = 1, Execution exec = Execution::parallel);

// Q-tables of a pretrained market, one per agent.
struct MarketSnapshot {
    std::vector<QTable> tables;

    void save(const std::string& path) const;
    static MarketSnapshot load(const std::string& path);
};

// Scripted market: seat i always plays actions[i] (memory-1 tables whose only
// non-zero entry per state is that action).
MarketSnapshot constant_policy_snapshot(const Environment& env,
                                        std::span<const std::size_t> actions);

// Trains the tabular agents of `cfg` (replica `replica`) and returns their tables.
MarketSnapshot pretrain_market(const ExperimentConfig& cfg, std::size_t replica = 0);

// Incumbent/newcomer scenario for one replica. Throws ConfigError when the
// snapshot is missing or does not fit the environment.
RunRecord incumbent_newcomer(const ExperimentConfig& cfg, const MarketSnapshot& snapshot,
                             std::size_t replica);

} // namespace algopricing
