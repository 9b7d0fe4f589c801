#include "algopricing/harness.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "algopricing/errors.hpp"

namespace algopricing {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string agent_label(std::size_t i) { return "agents[" + std::to_string(i) + "]"; }

// Smallest and largest (shaped) payoff of `agent` over all joint actions.
std::pair<double, double> reward_bounds(const Environment& env, const RewardSpec& reward,
                                        std::size_t agent) {
    const std::size_t k = env.n_agents();
    const std::size_t n = env.n_actions();
    double joint_count = std::pow(static_cast<double>(n), static_cast<double>(k));
    if (joint_count > static_cast<double>(1u << 22)) {
        throw UnsupportedError("reward bounds need an enumerable joint action space");
    }
    JointAction joint(k, 0);
    std::vector<double> pay(k);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (;;) {
        env.payoffs(joint, pay);
        const double r = shape_reward_for(reward, pay, agent);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
        std::size_t d = 0;
        while (d < k && ++joint[d] == n) {
            joint[d++] = 0;
        }
        if (d == k) {
            break;
        }
    }
    return {lo, hi};
}

} // namespace

Environment EnvironmentSpec::build() const {
    if (kind == Environment::Kind::matrix_game) {
        return Environment::prisoners_dilemma(payoffs);
    }
    market.validate();
    return Environment::market(market, build_grid(market, xi, grid_size));
}

// ---------------------------------------------------------------------------
// Interventions

InterventionSchedule::InterventionSchedule(std::vector<Intervention> items, std::size_t n_agents)
    : items_(std::move(items)) {
    for (std::size_t i = 0; i < items_.size(); ++i) {
        const Intervention& a = items_[i];
        const std::string where = "interventions[" + std::to_string(i) + "]";
        if (a.agent >= n_agents) {
            throw ConfigError(where + ".agent: " + std::to_string(a.agent) +
                              " is not a valid agent id (market has " + std::to_string(n_agents) +
                              " agents)");
        }
        if (!a.permanent && a.length == 0) {
            throw ConfigError(where + ".length: must be at least 1");
        }
        for (std::size_t j = 0; j < i; ++j) {
            const Intervention& b = items_[j];
            if (a.agent != b.agent || a.phase != b.phase) {
                continue;
            }
            const std::uint64_t a_end = a.permanent ? UINT64_MAX : a.start + a.length;
            const std::uint64_t b_end = b.permanent ? UINT64_MAX : b.start + b.length;
            if (a.start < b_end && b.start < a_end) {
                throw ConfigError(where + ": overlaps interventions[" + std::to_string(j) +
                                  "] for agent " + std::to_string(a.agent));
            }
        }
    }
}

void InterventionSchedule::validate_horizon(Phase phase, std::uint64_t length) const {
    for (std::size_t i = 0; i < items_.size(); ++i) {
        const Intervention& a = items_[i];
        if (a.phase != phase) {
            continue;
        }
        const std::string where = "interventions[" + std::to_string(i) + "]";
        if (a.start >= length) {
            throw ConfigError(where + ".start: period " + std::to_string(a.start) +
                              " is outside the phase (" + std::to_string(length) + " periods)");
        }
        if (!a.permanent && a.start + a.length > length) {
            throw ConfigError(where + ".length: window ends after the phase (" +
                              std::to_string(length) + " periods)");
        }
    }
}

std::optional<std::size_t> InterventionSchedule::active(std::size_t agent, Phase phase,
                                                        std::uint64_t t) const {
    for (std::size_t i = 0; i < items_.size(); ++i) {
        if (items_[i].agent == agent && items_[i].phase == phase && items_[i].covers(t)) {
            return i;
        }
    }
    return std::nullopt;
}

std::size_t best_response(const Environment& env, std::span<const std::size_t> joint,
                          std::size_t agent) {
    if (joint.size() != env.n_agents() || agent >= joint.size()) {
        throw ParameterError("best_response: joint action does not match the environment");
    }
    JointAction trial(joint.begin(), joint.end());
    std::vector<double> pay(trial.size());
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t a = 0; a < env.n_actions(); ++a) {
        trial[agent] = a;
        env.payoffs(trial, pay);
        if (pay[agent] > best) {
            best = pay[agent];
            arg = a;
        }
    }
    return arg;
}

JointAction apply_interventions(const InterventionSchedule& schedule, Phase phase,
                                std::uint64_t t, std::span<const std::size_t> proposed,
                                const InterventionContext& ctx) {
    JointAction effective(proposed.begin(), proposed.end());
    if (schedule.empty()) {
        return effective;
    }
    const auto& items = schedule.items();
    for (std::size_t agent = 0; agent < effective.size(); ++agent) {
        const auto idx = schedule.active(agent, phase, t);
        if (!idx) {
            continue;
        }
        const ForcedAction& f = items[*idx].force;
        const std::size_t n = ctx.env ? ctx.env->n_actions() : 0;
        // Falls back to the proposal when no reference was captured.
        std::size_t ref = proposed[agent];
        if (*idx < ctx.reference.size() && ctx.reference[*idx]) {
            ref = *ctx.reference[*idx];
        }
        std::size_t forced = proposed[agent];
        switch (f.kind) {
        case ForcedAction::Kind::action:
            forced = f.action;
            break;
        case ForcedAction::Kind::price:
        case ForcedAction::Kind::nash_above: {
            const PriceGrid* grid = ctx.env ? ctx.env->grid() : nullptr;
            if (!grid) {
                throw ConfigError("price interventions need a market environment");
            }
            if (f.kind == ForcedAction::Kind::price) {
                forced = grid->nearest(f.price);
            } else {
                forced = std::min(grid->first_above(grid->p_nash), grid->size() - 1);
            }
            break;
        }
        case ForcedAction::Kind::best_response:
            if (!ctx.env) {
                throw ConfigError("best-response interventions need an environment");
            }
            forced = best_response(*ctx.env, proposed, agent);
            break;
        case ForcedAction::Kind::hold:
            forced = ref;
            break;
        case ForcedAction::Kind::shift: {
            const long base = static_cast<long>(ref);
            const long top = static_cast<long>(n) - 1;
            forced = static_cast<std::size_t>(std::clamp(base + f.shift, 0L, top));
            break;
        }
        }
        if (ctx.env && forced >= n) {
            throw ConfigError("forced action " + std::to_string(forced) + " is outside the " +
                              std::to_string(n) + " available actions");
        }
        effective[agent] = forced;
    }
    return effective;
}

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
    if (schema_version != 1) {
        throw ConfigError("schema_version: unsupported version " + std::to_string(schema_version));
    }
    if (replicas == 0) {
        throw ConfigError("replicas: must be at least 1");
    }
    Environment env = [&] {
        try {
            return environment.build();
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(std::string("environment: ") + e.what());
        }
    }();
    if (agents.size() != env.n_agents()) {
        throw ConfigError("agents: environment has " + std::to_string(env.n_agents()) +
                          " agents but " + std::to_string(agents.size()) + " are configured");
    }
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const AgentSpec& a = agents[i];
        const std::string where = agent_label(i);
        try {
            a.hp.validate();
            a.reward.validate();
            if (a.kind == AgentKind::dqn || a.kind == AgentKind::dual_buffer) {
                a.dqn.validate();
            }
            if (a.kind == AgentKind::dual_buffer) {
                a.dual.validate();
            }
        } catch (const std::exception& e) {
            throw ConfigError(where + ": " + e.what());
        }
        if (a.kind == AgentKind::tabular) {
            try {
                (void)state_count(env.n_agents(), a.hp.memory_len, env.n_actions());
            } catch (const std::exception&) {
                throw ConfigError(where + ".memory_len: Q-table too large");
            }
            const double states = std::pow(static_cast<double>(env.n_actions()),
                                           static_cast<double>(env.n_agents() * a.hp.memory_len));
            if (states * static_cast<double>(env.n_actions()) > 1e9) {
                throw ConfigError(where + ".memory_len: Q-table of " + std::to_string(states) +
                                  " states does not fit in memory");
            }
        }
        if (a.kind == AgentKind::fixed) {
            if (a.policy == FixedPolicy::tit_for_tat &&
                (env.kind() != Environment::Kind::matrix_game || env.n_agents() != 2)) {
                throw ConfigError(where + ".policy: tit_for_tat needs the two-player matrix game");
            }
            if (a.policy == FixedPolicy::constant && a.action >= env.n_actions()) {
                throw ConfigError(where + ".action: " + std::to_string(a.action) +
                                  " is outside the " + std::to_string(env.n_actions()) +
                                  " available actions");
            }
        }
    }
    if (record.stride == 0) {
        throw ConfigError("record.stride: must be at least 1");
    }
    if (convergence.enabled && convergence.stability == 0) {
        throw ConfigError("convergence.stability: must be at least 1");
    }
    InterventionSchedule schedule(interventions, env.n_agents());
    for (const Intervention& iv : interventions) {
        const bool needs_market = iv.force.kind == ForcedAction::Kind::price ||
                                  iv.force.kind == ForcedAction::Kind::nash_above;
        if (needs_market && env.kind() != Environment::Kind::market) {
            throw ConfigError("interventions: price targets need a market environment");
        }
        if (iv.force.kind == ForcedAction::Kind::action && iv.force.action >= env.n_actions()) {
            throw ConfigError("interventions: forced action " + std::to_string(iv.force.action) +
                              " is outside the " + std::to_string(env.n_actions()) +
                              " available actions");
        }
    }
    if (newcomer.enabled) {
        const NewcomerSpec& nc = newcomer;
        if (env.kind() != Environment::Kind::market) {
            throw ConfigError("newcomer: the scenario needs a market environment");
        }
        if (nc.incumbent >= env.n_agents() || nc.newcomer >= env.n_agents() ||
            nc.incumbent == nc.newcomer) {
            throw ConfigError("newcomer: incumbent and newcomer must be distinct valid agent ids");
        }
        if (nc.incumbent_snapshot.empty()) {
            throw ConfigError("newcomer.incumbent_snapshot: a pretrained snapshot is required");
        }
        const AgentSpec& spec = agents[nc.newcomer];
        if (spec.kind != AgentKind::dual_buffer && spec.kind != AgentKind::dqn) {
            throw ConfigError(agent_label(nc.newcomer) +
                              ".kind: the newcomer must be a dqn or dual_buffer agent");
        }
        if (nc.warm_start && spec.kind != AgentKind::dual_buffer) {
            throw ConfigError("newcomer.warm_start: needs a dual_buffer newcomer");
        }
        if (nc.warm_start && nc.offline_periods == 0) {
            throw ConfigError("newcomer.offline_periods: a warm start needs observations");
        }
        if (nc.observe_epsilon < 0.0 || nc.observe_epsilon > 1.0) {
            throw ConfigError("newcomer.observe_epsilon: must lie in [0, 1]");
        }
        if (nc.shock_start) {
            if (nc.shock_length == 0 || *nc.shock_start + nc.shock_length > nc.online_periods) {
                throw ConfigError("newcomer.shock: window must lie inside the online phase");
            }
        }
        for (std::size_t i = 0; i < agents.size(); ++i) {
            if (i != nc.newcomer && agents[i].kind != AgentKind::tabular) {
                throw ConfigError(agent_label(i) + ".kind: incumbent seats must be tabular");
            }
        }
        if (!interventions.empty()) {
            throw ConfigError("interventions: not supported in the newcomer scenario, use "
                              "newcomer.shock_start");
        }
    } else {
        schedule.validate_horizon(Phase::train, horizon);
        schedule.validate_horizon(Phase::evaluation, evaluation.periods);
    }
}

// ---------------------------------------------------------------------------
// Agents and sessions

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, std::size_t index, const Environment& env,
                                  Rng& rng) {
    const std::size_t k = env.n_agents();
    const std::size_t n = env.n_actions();
    switch (spec.kind) {
    case AgentKind::tabular: {
        auto agent = std::make_unique<TabularAgent>(index, k, n, spec.hp);
        if (!spec.snapshot.empty()) {
            try {
                agent->set_table(QTable::load(spec.snapshot));
            } catch (const std::exception& e) {
                throw ConfigError(agent_label(index) + ".snapshot: " + e.what());
            }
            return agent;
        }
        double lo = spec.hp.q_init_low;
        double hi = spec.hp.q_init_high;
        if (spec.q_init == QInit::reward_bounds) {
            const auto [r_min, r_max] = reward_bounds(env, spec.reward, index);
            const double scale = 1.0 / (1.0 - spec.hp.gamma);
            lo = (r_min + spec.hp.q_init_low * (r_max - r_min)) * scale;
            hi = (r_min + spec.hp.q_init_high * (r_max - r_min)) * scale;
        }
        agent->table().fill_uniform(lo, hi, rng);
        return agent;
    }
    case AgentKind::dqn:
    case AgentKind::dual_buffer: {
        std::unique_ptr<DqnAgent> agent;
        if (spec.kind == AgentKind::dqn) {
            agent = std::make_unique<DqnAgent>(index, k, env.feature_levels(), spec.hp, spec.dqn,
                                               rng);
        } else {
            agent = std::make_unique<DualBufferAgent>(index, k, env.feature_levels(), spec.hp,
                                                      spec.dqn, spec.dual, rng);
        }
        if (!spec.snapshot.empty()) {
            try {
                agent->set_net(ValueNet::load(spec.snapshot));
            } catch (const std::exception& e) {
                throw ConfigError(agent_label(index) + ".snapshot: " + e.what());
            }
        }
        return agent;
    }
    case AgentKind::fixed: {
        if (spec.policy == FixedPolicy::tit_for_tat) {
            return std::make_unique<StationaryPolicyAgent>(
                StationaryPolicyAgent::tit_for_tat(index, n));
        }
        const auto states = static_cast<std::size_t>(state_count(k, 1, n));
        return std::make_unique<StationaryPolicyAgent>(
            StationaryPolicyAgent::constant(states, spec.action));
    }
    }
    throw ConfigError(agent_label(index) + ".kind: unknown agent kind");
}

namespace {

std::size_t max_memory(const std::vector<std::unique_ptr<Agent>>& agents) {
    std::size_t len = 1;
    for (const auto& a : agents) {
        len = std::max(len, a->memory_len());
    }
    return len;
}

} // namespace

Session::Session(const Environment& env, std::vector<std::unique_ptr<Agent>> agents,
                 std::vector<RewardSpec> rewards, std::uint64_t seed, std::size_t memory_len)
    : env_(&env), agents_(std::move(agents)), rewards_(std::move(rewards)),
      memory_(env.n_agents(), std::max(memory_len, max_memory(agents_)), env.n_actions()),
      env_rng_(seed) {
    if (agents_.size() != env.n_agents() || rewards_.size() != env.n_agents()) {
        throw ConfigError("session needs one agent and one reward spec per market seat");
    }
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        agent_rngs_.emplace_back(derive_seed(seed, i + 1, 1));
    }
    prev_ = memory_;
    proposed_.resize(env.n_agents());
    payoffs_.resize(env.n_agents());
}

std::unique_ptr<Agent> Session::replace_agent(std::size_t i, std::unique_ptr<Agent> agent) {
    if (agent->memory_len() > memory_.memory_len()) {
        throw ConfigError("replacement agent remembers more periods than the session");
    }
    std::swap(agents_[i], agent);
    return agent;
}

void Session::warm_up() {
    JointAction joint(env_->n_agents());
    while (!memory_.full()) {
        for (auto& a : joint) {
            a = uniform_index(env_rng_, env_->n_actions());
        }
        memory_.push(joint);
    }
}

void Session::set_schedule(const InterventionSchedule* schedule) {
    schedule_ = schedule;
    references_.assign(schedule ? schedule->items().size() : 0, std::nullopt);
}

const PeriodOutcome& Session::step(bool explore, bool learn, Phase phase,
                                   std::uint64_t phase_period) {
    return step_with(explore, learn, phase, phase_period, ActionFilter{});
}

const PeriodOutcome& Session::step_with(bool explore, bool learn, Phase phase,
                                        std::uint64_t phase_period, const ActionFilter& filter) {
    const std::size_t k = agents_.size();
    for (std::size_t i = 0; i < k; ++i) {
        proposed_[i] = agents_[i]->act(memory_, agent_rngs_[i], explore);
    }
    last_.proposed = proposed_;
    if (schedule_ && !schedule_->empty()) {
        const auto& items = schedule_->items();
        for (std::size_t j = 0; j < items.size(); ++j) {
            if (items[j].phase == phase && items[j].start == phase_period) {
                references_[j] = memory_.filled() > 0
                                     ? std::optional<std::size_t>(memory_.action(0, items[j].agent))
                                     : std::nullopt;
            }
        }
        InterventionContext ctx{env_, references_};
        last_.effective = apply_interventions(*schedule_, phase, phase_period, proposed_, ctx);
    } else {
        last_.effective = proposed_;
    }
    if (filter) {
        for (std::size_t i = 0; i < k; ++i) {
            last_.effective[i] = filter(i, last_.effective[i]);
        }
    }
    env_->payoffs(last_.effective, payoffs_);
    last_.payoffs = payoffs_;
    prev_ = memory_;
    memory_.push(last_.effective);
    learned_ = learn;
    for (std::size_t i = 0; i < k; ++i) {
        agents_[i]->record_profit(payoffs_[i]);
        if (learn) {
            const double r = shape_reward_for(rewards_[i], payoffs_, i);
            agents_[i]->learn(prev_, last_.effective, r, memory_, agent_rngs_[i]);
        }
    }
    return last_;
}

bool Session::any_greedy_changed() const {
    if (!learned_) {
        return false;
    }
    for (const auto& a : agents_) {
        if (a->greedy_changed()) {
            return true;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Convergence

std::optional<std::uint64_t> ConvergenceTracker::update(bool greedy_changed) {
    ++periods_;
    streak_ = greedy_changed ? 0 : streak_ + 1;
    if (!converged_ && rule_.enabled && streak_ >= rule_.stability) {
        converged_ = periods_;
        return converged_;
    }
    return std::nullopt;
}

std::optional<std::uint64_t> detect_convergence(std::span<const bool> greedy_changed,
                                                const ConvergenceRule& rule) {
    ConvergenceTracker tracker(rule);
    for (bool changed : greedy_changed) {
        if (auto t = tracker.update(changed)) {
            return t;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Recording

namespace {

class Recorder {
public:
    Recorder(RunRecord& record, const Environment& env, const RecordSpec& spec)
        : rec_(record), env_(env), spec_(spec), k_(env.n_agents()) {}

    // Training period: kept when on the stride, otherwise parked in the tail.
    void train(std::uint64_t t, const PeriodOutcome& out, const Session& s) {
        if (t % spec_.stride == 0) {
            append(t, out, s);
            return;
        }
        if (spec_.tail == 0) {
            return;
        }
        Row row{t, {}, {}, {}, {}};
        fill(row, out, s);
        tail_.push_back(std::move(row));
        if (tail_.size() > spec_.tail) {
            tail_.pop_front();
        }
    }

    // Training is over; merge the parked tail rows that are within `tail`
    // periods of the last one.
    void finish_training(std::uint64_t executed) {
        const std::uint64_t first = executed > spec_.tail ? executed - spec_.tail : 0;
        std::vector<Row> keep;
        for (auto& row : tail_) {
            if (row.period >= first) {
                keep.push_back(std::move(row));
            }
        }
        tail_.clear();
        if (keep.empty()) {
            return;
        }
        // Strided rows are already in order; interleave the tail rows.
        std::vector<Row> merged;
        std::size_t start = rec_.rows();
        while (start > 0 && rec_.periods[start - 1] > keep.front().period) {
            --start;
        }
        for (std::size_t r = start; r < rec_.rows(); ++r) {
            merged.push_back(take(r));
        }
        for (auto& row : keep) {
            merged.push_back(std::move(row));
        }
        std::sort(merged.begin(), merged.end(),
                  [](const Row& a, const Row& b) { return a.period < b.period; });
        truncate(start);
        for (const Row& row : merged) {
            push(row);
        }
    }

    void append(std::uint64_t t, const PeriodOutcome& out, const Session& s) {
        Row row{t, {}, {}, {}, {}};
        fill(row, out, s);
        push(row);
    }

private:
    struct Row {
        std::uint64_t period;
        std::vector<std::size_t> actions;
        std::vector<double> rewards;
        std::vector<double> eps;
        std::vector<double> p_online;
    };

    void fill(Row& row, const PeriodOutcome& out, const Session& s) const {
        row.actions = out.effective;
        row.rewards = out.payoffs;
        row.eps.resize(k_);
        row.p_online.resize(k_);
        for (std::size_t i = 0; i < k_; ++i) {
            row.eps[i] = s.agent(i).last_epsilon();
            row.p_online[i] = s.agent(i).p_online().value_or(kNaN);
        }
    }

    void push(const Row& row) {
        rec_.periods.push_back(row.period);
        for (std::size_t i = 0; i < k_; ++i) {
            rec_.actions.push_back(row.actions[i]);
            rec_.prices.push_back(env_.price(row.actions[i]).value_or(kNaN));
            rec_.rewards.push_back(row.rewards[i]);
            rec_.epsilons.push_back(row.eps[i]);
            rec_.p_online.push_back(row.p_online[i]);
        }
    }

    Row take(std::size_t r) const {
        Row row{rec_.periods[r], {}, {}, {}, {}};
        for (std::size_t i = 0; i < k_; ++i) {
            const std::size_t at = r * k_ + i;
            row.actions.push_back(rec_.actions[at]);
            row.rewards.push_back(rec_.rewards[at]);
            row.eps.push_back(rec_.epsilons[at]);
            row.p_online.push_back(rec_.p_online[at]);
        }
        return row;
    }

    void truncate(std::size_t rows) {
        rec_.periods.resize(rows);
        rec_.actions.resize(rows * k_);
        rec_.prices.resize(rows * k_);
        rec_.rewards.resize(rows * k_);
        rec_.epsilons.resize(rows * k_);
        rec_.p_online.resize(rows * k_);
    }

    RunRecord& rec_;
    const Environment& env_;
    RecordSpec spec_;
    std::size_t k_;
    std::deque<Row> tail_;
};

std::vector<std::unique_ptr<Agent>> build_agents(const ExperimentConfig& cfg,
                                                 const Environment& env, std::size_t replica) {
    std::vector<std::unique_ptr<Agent>> agents;
    for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
        Rng init(derive_seed(cfg.seed, replica, 1000 + i));
        agents.push_back(make_agent(cfg.agents[i], i, env, init));
    }
    return agents;
}

std::vector<RewardSpec> reward_specs(const ExperimentConfig& cfg) {
    std::vector<RewardSpec> rewards;
    for (const auto& a : cfg.agents) {
        rewards.push_back(a.reward);
    }
    return rewards;
}

void snapshot_policies(RunRecord& rec, const Session& session) {
    rec.final_policy.assign(session.n_agents(), {});
    for (std::size_t i = 0; i < session.n_agents(); ++i) {
        if (const auto* tab = dynamic_cast<const TabularAgent*>(&session.agent(i))) {
            rec.final_policy[i] = tab->greedy_policy();
        }
    }
}

} // namespace

RunRecord run_replica(const ExperimentConfig& cfg, const Environment& env, std::size_t replica,
                      std::vector<std::unique_ptr<Agent>>* agents_out) {
    RunRecord rec;
    rec.replica = replica;
    rec.seed = derive_seed(cfg.seed, replica, 0);
    rec.n_agents = env.n_agents();

    const InterventionSchedule schedule(cfg.interventions, env.n_agents());
    Session session(env, build_agents(cfg, env, replica), reward_specs(cfg), rec.seed);
    session.set_schedule(&schedule);
    session.warm_up();

    Recorder recorder(rec, env, cfg.record);
    ConvergenceTracker tracker(cfg.convergence);
    std::uint64_t t = 0;
    for (; t < cfg.horizon; ++t) {
        const PeriodOutcome& out = session.step(true, true, Phase::train, t);
        recorder.train(t, out, session);
        if (tracker.update(session.any_greedy_changed()) && cfg.convergence.stop_early) {
            ++t;
            break;
        }
    }
    rec.executed_periods = t;
    rec.convergence_period = tracker.converged_at();
    recorder.finish_training(t);
    snapshot_policies(rec, session);

    rec.evaluation_start = t;
    for (std::uint64_t e = 0; e < cfg.evaluation.periods; ++e) {
        const PeriodOutcome& out = session.step(false, cfg.evaluation.learning, Phase::evaluation, e);
        recorder.append(t + e, out, session);
    }
    if (agents_out) {
        agents_out->clear();
        for (std::size_t i = 0; i < session.n_agents(); ++i) {
            agents_out->push_back(session.agent(i).clone());
        }
    }
    return rec;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, Execution exec) {
    cfg.validate();
    const Environment env = cfg.environment.build();
    std::optional<MarketSnapshot> snapshot;
    if (cfg.newcomer.enabled) {
        try {
            snapshot = MarketSnapshot::load(cfg.newcomer.incumbent_snapshot);
        } catch (const std::exception& e) {
            throw ConfigError("newcomer.incumbent_snapshot: " + std::string(e.what()));
        }
        if (snapshot->tables.size() != env.n_agents()) {
            throw ConfigError("newcomer.incumbent_snapshot: holds " +
                              std::to_string(snapshot->tables.size()) + " tables for " +
                              std::to_string(env.n_agents()) + " agents");
        }
    }
    std::vector<RunRecord> records(cfg.replicas);
    kernels::for_each_index(
        cfg.replicas,
        [&](std::size_t r) {
            try {
                records[r] = snapshot ? incumbent_newcomer(cfg, *snapshot, r)
                                      : run_replica(cfg, env, r);
            } catch (const NumericalError& e) {
                throw NumericalError("replica " + std::to_string(r) + ": " + e.what());
            }
        },
        exec);
    return records;
}

namespace {

bool same_values(const std::vector<double>& a, const std::vector<double>& b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](double x, double y) {
        return x == y || (std::isnan(x) && std::isnan(y));
    });
}

} // namespace

bool operator==(const RunRecord& a, const RunRecord& b) {
    return a.replica == b.replica && a.seed == b.seed && a.n_agents == b.n_agents &&
           a.periods == b.periods && a.actions == b.actions && same_values(a.prices, b.prices) &&
           same_values(a.rewards, b.rewards) && same_values(a.epsilons, b.epsilons) &&
           same_values(a.p_online, b.p_online) && a.executed_periods == b.executed_periods &&
           a.convergence_period == b.convergence_period &&
           a.evaluation_start == b.evaluation_start && a.online_start == b.online_start &&
           a.final_policy == b.final_policy;
}

// ---------------------------------------------------------------------------
// Summaries and metrics

RunSummary summarize(const RunRecord& record, std::uint64_t window) {
    RunSummary summary;
    summary.agents.resize(record.n_agents);
    const std::size_t rows = record.rows();
    if (rows == 0) {
        for (auto& a : summary.agents) {
            a.mean_reward = kNaN;
            a.final_price = kNaN;
        }
        return summary;
    }
    const std::size_t w = static_cast<std::size_t>(std::min<std::uint64_t>(window, rows));
    const std::size_t first = rows - std::max<std::size_t>(w, 1);
    for (std::size_t i = 0; i < record.n_agents; ++i) {
        double sum = 0.0;
        for (std::size_t r = first; r < rows; ++r) {
            sum += record.rewards[record.at(r, i)];
        }
        summary.agents[i].mean_reward = sum / static_cast<double>(rows - first);
        summary.agents[i].final_action = record.actions[record.at(rows - 1, i)];
        summary.agents[i].final_price = record.prices[record.at(rows - 1, i)];
    }
    return summary;
}

double post_convergence_profit(const RunRecord& record, std::size_t agent, std::uint64_t window) {
    const std::size_t rows = record.rows();
    std::size_t first = rows;
    while (first > 0 && record.periods[first - 1] >= record.evaluation_start) {
        --first;
    }
    if (first == rows) {
        // No evaluation rows: use the final window of training rows.
        first = rows - static_cast<std::size_t>(std::min<std::uint64_t>(window, rows));
    }
    if (first == rows) {
        return kNaN;
    }
    double sum = 0.0;
    for (std::size_t r = first; r < rows; ++r) {
        sum += record.rewards[record.at(r, agent)];
    }
    return sum / static_cast<double>(rows - first);
}

std::optional<std::uint64_t> periods_to_fraction(const RunRecord& record, std::size_t agent,
                                                 std::uint64_t window, double fraction,
                                                 std::uint64_t final_window) {
    if (agent >= record.n_agents || window == 0 || final_window == 0) {
        throw ParameterError("periods_to_fraction: bad agent or empty window");
    }
    std::size_t first = 0;
    while (first < record.rows() && record.periods[first] < record.online_start) {
        ++first;
    }
    const std::size_t n = record.rows() - first;
    if (n < std::max(window, final_window)) {
        return std::nullopt;
    }
    for (std::size_t r = first + 1; r < record.rows(); ++r) {
        if (record.periods[r] != record.periods[r - 1] + 1) {
            throw ParameterError("periods_to_fraction needs every online period recorded");
        }
    }
    double target = 0.0;
    for (std::size_t r = record.rows() - final_window; r < record.rows(); ++r) {
        target += record.rewards[record.at(r, agent)];
    }
    target = fraction * target / static_cast<double>(final_window);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += record.rewards[record.at(first + i, agent)];
        if (i >= window) {
            sum -= record.rewards[record.at(first + i - window, agent)];
        }
        if (i + 1 >= window && sum / static_cast<double>(window) >= target) {
            return i + 1;
        }
    }
    return std::nullopt;
}

ProfitGainMetric profit_gain(double mean_profit, double pi_nash, double pi_monopoly) {
    const double span = pi_monopoly - pi_nash;
    if (!(std::abs(span) > 1e-12 * std::max(1.0, std::abs(pi_nash)))) {
        throw ParameterError("profit gain is undefined when monopoly and Nash profits coincide");
    }
    return {(mean_profit - pi_nash) / span};
}

ProfitGainMetric profit_gain(double mean_profit, const MarketParams& params) {
    return profit_gain(mean_profit, symmetric_profit(params, nash_price(params)),
                       symmetric_profit(params, monopoly_price(params)));
}

ProfitGainMetric profit_gain(std::span<const double> mean_profits, const MarketParams& params) {
    if (mean_profits.empty()) {
        throw ParameterError("profit gain needs at least one profit");
    }
    const double mean = std::accumulate(mean_profits.begin(), mean_profits.end(), 0.0) /
                        static_cast<double>(mean_profits.size());
    return profit_gain(mean, params);
}

// ---------------------------------------------------------------------------
// Sweep

namespace {

double median(std::vector<double> v) {
    if (v.empty()) {
        return kNaN;
    }
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

} // namespace

SweepResult sweep_exploration(const ExperimentConfig& base, std::span<const double> betas,
                              std::size_t agent, Execution exec) {
    if (agent >= base.agents.size()) {
        throw ConfigError("sweep: agent " + std::to_string(agent) + " does not exist");
    }
    SweepResult result;
    if (base.environment.kind == Environment::Kind::market) {
        const MarketParams& m = base.environment.market;
        result.pi_nash = symmetric_profit(m, nash_price(m));
        result.pi_monopoly = symmetric_profit(m, monopoly_price(m));
    }
    for (double beta : betas) {
        ExperimentConfig cfg = base;
        cfg.agents[agent].hp.beta = beta;
        const auto records = run_experiment(cfg, exec);
        SweepRow row;
        row.beta = beta;
        const std::size_t k = cfg.agents.size();
        std::vector<std::vector<double>> per_agent(k);
        for (const auto& rec : records) {
            std::vector<double> p(k);
            for (std::size_t i = 0; i < k; ++i) {
                p[i] = post_convergence_profit(rec, i, cfg.summary_window);
                per_agent[i].push_back(p[i]);
            }
            row.profits.push_back(std::move(p));
        }
        for (std::size_t i = 0; i < k; ++i) {
            const auto& v = per_agent[i];
            row.mean_profit.push_back(v.empty() ? kNaN
                                                : std::accumulate(v.begin(), v.end(), 0.0) /
                                                      static_cast<double>(v.size()));
            row.median_profit.push_back(median(v));
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Incumbent and newcomer

void MarketSnapshot::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write snapshot " + path);
    }
    out << "algopricing-market " << 1 << "\n" << tables.size() << "\n";
    for (const auto& t : tables) {
        t.save(out);
    }
    if (!out) {
        throw ConfigError("failed writing snapshot " + path);
    }
}

MarketSnapshot MarketSnapshot::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open snapshot " + path);
    }
    std::string tag;
    int version = 0;
    std::size_t count = 0;
    if (!(in >> tag >> version >> count) || tag != "algopricing-market" || version != 1) {
        throw ConfigError(path + ": not a market snapshot");
    }
    MarketSnapshot snap;
    for (std::size_t i = 0; i < count; ++i) {
        snap.tables.push_back(QTable::load(in));
    }
    return snap;
}

MarketSnapshot constant_policy_snapshot(const Environment& env,
                                        std::span<const std::size_t> actions) {
    if (actions.size() != env.n_agents()) {
        throw ConfigError("scripted market needs one action per seat");
    }
    MarketSnapshot snap;
    for (std::size_t a : actions) {
        if (a >= env.n_actions()) {
            throw ConfigError("scripted action " + std::to_string(a) + " is outside the " +
                              std::to_string(env.n_actions()) + " available actions");
        }
        QTable table = QTable::for_memory(env.n_agents(), 1, env.n_actions());
        for (std::size_t s = 0; s < table.n_states(); ++s) {
            table.at(s, a) = 1.0;
        }
        snap.tables.push_back(std::move(table));
    }
    return snap;
}

MarketSnapshot pretrain_market(const ExperimentConfig& cfg, std::size_t replica) {
    ExperimentConfig pre = cfg;
    pre.newcomer.enabled = false;
    pre.evaluation.periods = 0;
    pre.record.stride = std::max<std::uint64_t>(pre.horizon, 1);
    pre.record.tail = 0;
    for (std::size_t i = 0; i < pre.agents.size(); ++i) {
        if (pre.agents[i].kind != AgentKind::tabular) {
            throw ConfigError(agent_label(i) + ".kind: pretraining needs tabular agents");
        }
    }
    pre.validate();
    const Environment env = pre.environment.build();
    std::vector<std::unique_ptr<Agent>> agents;
    run_replica(pre, env, replica, &agents);
    MarketSnapshot snap;
    for (const auto& a : agents) {
        snap.tables.push_back(dynamic_cast<const TabularAgent&>(*a).table());
    }
    return snap;
}

RunRecord incumbent_newcomer(const ExperimentConfig& cfg, const MarketSnapshot& snapshot,
                             std::size_t replica) {
    const NewcomerSpec& nc = cfg.newcomer;
    const Environment env = cfg.environment.build();
    const std::size_t k = env.n_agents();
    if (snapshot.tables.size() != k) {
        throw ConfigError("newcomer.incumbent_snapshot: holds " +
                          std::to_string(snapshot.tables.size()) + " tables for " +
                          std::to_string(k) + " agents");
    }

    RunRecord rec;
    rec.replica = replica;
    rec.seed = derive_seed(cfg.seed, replica, 0);
    rec.n_agents = k;

    // Every seat starts as the frozen pretrained market.
    std::vector<std::unique_ptr<Agent>> seats;
    for (std::size_t i = 0; i < k; ++i) {
        AgentHyperparams hp = cfg.agents[i].hp;
        if (i == nc.newcomer) {
            hp = cfg.agents[nc.incumbent].hp;
        }
        auto agent = std::make_unique<TabularAgent>(i, k, env.n_actions(), hp);
        try {
            agent->set_table(snapshot.tables[i]);
        } catch (const std::exception& e) {
            throw ConfigError("newcomer.incumbent_snapshot: " + std::string(e.what()));
        }
        agent->freeze();
        seats.push_back(std::move(agent));
    }

    const AgentSpec& spec = cfg.agents[nc.newcomer];
    Rng init(derive_seed(cfg.seed, replica, 1000 + nc.newcomer));
    std::unique_ptr<DqnAgent> newcomer;
    DualBufferAgent* dual = nullptr;
    if (nc.warm_start) {
        auto d = std::make_unique<DualBufferAgent>(nc.newcomer, k, env.feature_levels(), spec.hp,
                                                   spec.dqn, spec.dual, init);
        dual = d.get();
        newcomer = std::move(d);
    } else {
        newcomer = std::make_unique<DqnAgent>(nc.newcomer, k, env.feature_levels(), spec.hp,
                                              spec.dqn, init);
    }

    Session session(env, std::move(seats), reward_specs(cfg), rec.seed, newcomer->memory_len());
    session.warm_up();

    Recorder recorder(rec, env, cfg.record);
    std::uint64_t t = 0;
    if (nc.warm_start) {
        Rng& noise = session.env_rng();
        for (std::uint64_t o = 0; o < nc.offline_periods; ++o, ++t) {
            const MemoryState before = session.memory();
            const PeriodOutcome& out = session.step_with(
                false, false, Phase::train, o, [&](std::size_t seat, std::size_t proposed) {
                    if (seat == nc.newcomer && nc.observe_epsilon > 0.0 &&
                        uniform01(noise) < nc.observe_epsilon) {
                        return uniform_index(noise, env.n_actions());
                    }
                    return proposed;
                });
            const double shaped = shape_reward_for(spec.reward, out.payoffs, nc.newcomer);
            dual->observe_offline(before, out.effective[nc.newcomer], shaped,
                                  out.payoffs[nc.newcomer], session.memory());
            recorder.train(t, out, session);
        }
        dual->pretrain(static_cast<std::size_t>(nc.pretrain_updates), session.env_rng());
        dual->begin_online();
        if (nc.offline_advances_epsilon) {
            dual->advance_exploration(nc.offline_periods);
        }
    }
    rec.online_start = t;

    session.replace_agent(nc.newcomer, std::move(newcomer));
    if (nc.incumbent_learns) {
        if (auto* inc = dynamic_cast<TabularAgent*>(&session.agent(nc.incumbent))) {
            inc->freeze(false);
        }
    }
    std::vector<Intervention> shock;
    if (nc.shock_start) {
        Intervention iv;
        iv.agent = nc.incumbent;
        iv.phase = Phase::train;
        iv.start = *nc.shock_start;
        iv.length = nc.shock_length;
        iv.force.kind = ForcedAction::Kind::nash_above;
        shock.push_back(iv);
    }
    const InterventionSchedule schedule(shock, k);
    session.set_schedule(&schedule);
    for (std::uint64_t o = 0; o < nc.online_periods; ++o, ++t) {
        const PeriodOutcome& out = session.step(true, true, Phase::train, o);
        recorder.train(t, out, session);
    }
    rec.executed_periods = t;
    recorder.finish_training(t);
    rec.evaluation_start = t;
    snapshot_policies(rec, session);
    return rec;
}

} // namespace algopricing
