#include "algopricing/config_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "algopricing/errors.hpp"

namespace algopricing {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string pointer) : j_(j), ptr_(std::move(pointer)) {
        if (!j_.is_object()) {
            fail(ptr_, "expected an object");
        }
    }

    [[noreturn]] static void fail(const std::string& ptr, const std::string& what) {
        throw ConfigError((ptr.empty() ? std::string("/") : ptr) + ": " + what);
    }

    std::string at(const std::string& key) const { return ptr_ + "/" + key; }

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) {
                fail(at(key), "expected a number");
            }
            out = v->get<double>();
        }
    }

    template <typename U>
    void unsigned_int(const std::string& key, U& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_unsigned()) {
                fail(at(key), "expected a non-negative integer");
            }
            out = static_cast<U>(v->get<std::uint64_t>());
        }
    }

    void integer(const std::string& key, int& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) {
                fail(at(key), "expected an integer");
            }
            out = v->get<int>();
        }
    }

    void integer(const std::string& key, long& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) {
                fail(at(key), "expected an integer");
            }
            out = v->get<long>();
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) {
                fail(at(key), "expected true or false");
            }
            out = v->get<bool>();
        }
    }

    void string(const std::string& key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) {
                fail(at(key), "expected a string");
            }
            out = v->get<std::string>();
        }
    }

    template <typename E>
    void choice(const std::string& key, E& out,
                std::initializer_list<std::pair<const char*, E>> options) {
        const json* v = find(key);
        if (!v) {
            return;
        }
        std::string names;
        if (v->is_string()) {
            for (const auto& [name, value] : options) {
                if (*v == name) {
                    out = value;
                    return;
                }
            }
        }
        for (const auto& [name, value] : options) {
            names += names.empty() ? "" : ", ";
            names += name;
        }
        fail(at(key), "expected one of: " + names);
    }

    void numbers(const std::string& key, std::vector<double>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) {
                fail(at(key), "expected an array of numbers");
            }
            out.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                if (!(*v)[i].is_number()) {
                    fail(at(key) + "/" + std::to_string(i), "expected a number");
                }
                out.push_back((*v)[i].get<double>());
            }
        }
    }

    void sizes(const std::string& key, std::vector<std::size_t>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) {
                fail(at(key), "expected an array of integers");
            }
            out.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                if (!(*v)[i].is_number_unsigned()) {
                    fail(at(key) + "/" + std::to_string(i), "expected a non-negative integer");
                }
                out.push_back((*v)[i].get<std::size_t>());
            }
        }
    }

    // Sub-object reader, or nullopt when the key is absent.
    std::optional<ObjectReader> object(const std::string& key) {
        if (const json* v = find(key)) {
            return ObjectReader(*v, at(key));
        }
        return std::nullopt;
    }

    // Call after reading every known key.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) {
                fail(at(it.key()), "unknown key");
            }
        }
    }

private:
    const json& j_;
    std::string ptr_;
    std::set<std::string> seen_;
};

const std::initializer_list<std::pair<const char*, AgentKind>> kAgentKinds{
    {"tabular", AgentKind::tabular},
    {"dqn", AgentKind::dqn},
    {"dual_buffer", AgentKind::dual_buffer},
    {"fixed", AgentKind::fixed},
};

const std::initializer_list<std::pair<const char*, Environment::Kind>> kEnvKinds{
    {"market", Environment::Kind::market},
    {"prisoners_dilemma", Environment::Kind::matrix_game},
};

const std::initializer_list<std::pair<const char*, ForcedAction::Kind>> kForceKinds{
    {"action", ForcedAction::Kind::action},
    {"price", ForcedAction::Kind::price},
    {"nash_above", ForcedAction::Kind::nash_above},
    {"best_response", ForcedAction::Kind::best_response},
    {"hold", ForcedAction::Kind::hold},
    {"shift", ForcedAction::Kind::shift},
};

const std::initializer_list<std::pair<const char*, QInit>> kQInits{
    {"uniform", QInit::uniform},
    {"reward_bounds", QInit::reward_bounds},
};

const std::initializer_list<std::pair<const char*, FixedPolicy>> kPolicies{
    {"constant", FixedPolicy::constant},
    {"tit_for_tat", FixedPolicy::tit_for_tat},
};

const std::initializer_list<std::pair<const char*, Optimizer::Kind>> kOptimizers{
    {"adam", Optimizer::Kind::adam},
    {"sgd", Optimizer::Kind::sgd},
};

const std::initializer_list<std::pair<const char*, Phase>> kPhases{
    {"train", Phase::train},
    {"evaluation", Phase::evaluation},
};

template <typename E>
const char* name_of(E value, std::initializer_list<std::pair<const char*, E>> options) {
    for (const auto& [name, v] : options) {
        if (v == value) {
            return name;
        }
    }
    return "?";
}

void read_environment(ObjectReader r, EnvironmentSpec& env) {
    r.choice("kind", env.kind, kEnvKinds);
    if (auto m = r.object("market")) {
        std::size_t n = env.market.n_agents;
        m->unsigned_int("n_agents", n);
        if (n != env.market.n_agents) {
            env.market = MarketParams::symmetric(n, env.market.mu, env.market.a0);
        }
        m->number("mu", env.market.mu);
        m->number("a0", env.market.a0);
        m->numbers("quality", env.market.quality);
        m->numbers("marginal_cost", env.market.marginal_cost);
        m->finish();
    }
    if (auto g = r.object("grid")) {
        g->number("xi", env.xi);
        g->unsigned_int("size", env.grid_size);
        g->finish();
    }
    if (auto p = r.object("payoffs")) {
        p->number("temptation", env.payoffs.temptation);
        p->number("cooperation", env.payoffs.cooperation);
        p->number("defection", env.payoffs.defection);
        p->number("loss", env.payoffs.loss);
        p->finish();
    }
    r.finish();
}

void read_agent(ObjectReader r, AgentSpec& a) {
    r.choice("kind", a.kind, kAgentKinds);
    if (auto h = r.object("hyperparams")) {
        h->number("alpha", a.hp.alpha);
        h->number("gamma", a.hp.gamma);
        h->number("beta", a.hp.beta);
        h->number("q_init_low", a.hp.q_init_low);
        h->number("q_init_high", a.hp.q_init_high);
        h->unsigned_int("memory_len", a.hp.memory_len);
        h->finish();
    }
    r.choice("q_init", a.q_init, kQInits);
    if (auto w = r.object("reward")) {
        w->number("opponent_weight", a.reward.opponent_weight);
        w->finish();
    }
    if (auto d = r.object("dqn")) {
        d->sizes("hidden", a.dqn.hidden);
        d->number("learning_rate", a.dqn.learning_rate);
        d->choice("optimizer", a.dqn.optimizer, kOptimizers);
        d->unsigned_int("batch_size", a.dqn.batch_size);
        d->unsigned_int("replay_capacity", a.dqn.replay_capacity);
        d->unsigned_int("target_sync", a.dqn.target_sync);
        d->unsigned_int("train_start", a.dqn.train_start);
        d->finish();
    }
    if (auto d = r.object("dual_buffer")) {
        d->unsigned_int("offline_capacity", a.dual.offline_capacity);
        d->unsigned_int("online_capacity", a.dual.online_capacity);
        d->number("offline_weight", a.dual.offline_weight);
        d->unsigned_int("rolling_window", a.dual.rolling_window);
        d->number("profit_threshold_frac", a.dual.profit_threshold_frac);
        d->number("p_online_low", a.dual.p_online_low);
        d->number("p_online_high", a.dual.p_online_high);
        d->finish();
    }
    r.choice("policy", a.policy, kPolicies);
    r.unsigned_int("action", a.action);
    r.string("snapshot", a.snapshot);
    r.finish();
}

void read_intervention(ObjectReader r, Intervention& iv) {
    r.unsigned_int("agent", iv.agent);
    r.choice("phase", iv.phase, kPhases);
    r.unsigned_int("start", iv.start);
    r.unsigned_int("length", iv.length);
    r.boolean("permanent", iv.permanent);
    if (auto f = r.object("force")) {
        f->choice("kind", iv.force.kind, kForceKinds);
        f->unsigned_int("action", iv.force.action);
        f->number("price", iv.force.price);
        f->integer("shift", iv.force.shift);
        f->finish();
    }
    r.finish();
}

void read_newcomer(ObjectReader r, NewcomerSpec& nc) {
    r.boolean("enabled", nc.enabled);
    r.unsigned_int("incumbent", nc.incumbent);
    r.unsigned_int("newcomer", nc.newcomer);
    r.string("incumbent_snapshot", nc.incumbent_snapshot);
    r.unsigned_int("offline_periods", nc.offline_periods);
    r.number("observe_epsilon", nc.observe_epsilon);
    r.unsigned_int("pretrain_updates", nc.pretrain_updates);
    r.unsigned_int("online_periods", nc.online_periods);
    r.boolean("warm_start", nc.warm_start);
    r.boolean("offline_advances_epsilon", nc.offline_advances_epsilon);
    r.boolean("incumbent_learns", nc.incumbent_learns);
    if (const json* v = r.find("shock_start")) {
        if (v->is_null()) {
            nc.shock_start.reset();
        } else if (v->is_number_unsigned()) {
            nc.shock_start = v->get<std::uint64_t>();
        } else {
            ObjectReader::fail(r.at("shock_start"), "expected a non-negative integer or null");
        }
    }
    r.unsigned_int("shock_length", nc.shock_length);
    r.finish();
}

} // namespace

const char* to_string(AgentKind kind) { return name_of(kind, kAgentKinds); }
const char* to_string(Environment::Kind kind) { return name_of(kind, kEnvKinds); }
const char* to_string(ForcedAction::Kind kind) { return name_of(kind, kForceKinds); }

ExperimentConfig config_from_json(const json& doc) {
    ExperimentConfig cfg;
    ObjectReader r(doc, "");
    if (!r.find("schema_version")) {
        ObjectReader::fail("/schema_version", "missing (this build reads version 1)");
    }
    r.integer("schema_version", cfg.schema_version);
    if (cfg.schema_version != 1) {
        ObjectReader::fail("/schema_version", "unsupported version " +
                                                  std::to_string(cfg.schema_version));
    }
    if (auto e = r.object("environment")) {
        read_environment(*e, cfg.environment);
    }
    if (const json* agents = r.find("agents")) {
        if (!agents->is_array()) {
            ObjectReader::fail("/agents", "expected an array of agent objects");
        }
        cfg.agents.assign(agents->size(), AgentSpec{});
        for (std::size_t i = 0; i < agents->size(); ++i) {
            read_agent(ObjectReader((*agents)[i], "/agents/" + std::to_string(i)), cfg.agents[i]);
        }
    } else {
        const std::size_t k = cfg.environment.kind == Environment::Kind::market
                                  ? cfg.environment.market.n_agents
                                  : 2;
        cfg.agents.assign(k, AgentSpec{});
    }
    r.unsigned_int("horizon", cfg.horizon);
    r.unsigned_int("replicas", cfg.replicas);
    r.unsigned_int("seed", cfg.seed);
    if (auto c = r.object("convergence")) {
        c->boolean("enabled", cfg.convergence.enabled);
        c->unsigned_int("stability", cfg.convergence.stability);
        c->boolean("stop_early", cfg.convergence.stop_early);
        c->finish();
    }
    if (const json* list = r.find("interventions")) {
        if (!list->is_array()) {
            ObjectReader::fail("/interventions", "expected an array");
        }
        for (std::size_t i = 0; i < list->size(); ++i) {
            Intervention iv;
            read_intervention(ObjectReader((*list)[i], "/interventions/" + std::to_string(i)), iv);
            cfg.interventions.push_back(iv);
        }
    }
    if (auto e = r.object("evaluation")) {
        e->unsigned_int("periods", cfg.evaluation.periods);
        e->boolean("learning", cfg.evaluation.learning);
        e->finish();
    }
    if (auto rec = r.object("record")) {
        rec->unsigned_int("stride", cfg.record.stride);
        rec->unsigned_int("tail", cfg.record.tail);
        rec->finish();
    }
    r.unsigned_int("summary_window", cfg.summary_window);
    if (auto n = r.object("newcomer")) {
        read_newcomer(*n, cfg.newcomer);
    }
    r.finish();
    return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
    json doc;
    doc["schema_version"] = cfg.schema_version;
    const EnvironmentSpec& e = cfg.environment;
    doc["environment"] = {
        {"kind", to_string(e.kind)},
        {"market",
         {{"n_agents", e.market.n_agents},
          {"mu", e.market.mu},
          {"a0", e.market.a0},
          {"quality", e.market.quality},
          {"marginal_cost", e.market.marginal_cost}}},
        {"grid", {{"xi", e.xi}, {"size", e.grid_size}}},
        {"payoffs",
         {{"temptation", e.payoffs.temptation},
          {"cooperation", e.payoffs.cooperation},
          {"defection", e.payoffs.defection},
          {"loss", e.payoffs.loss}}},
    };
    json agents = json::array();
    for (const AgentSpec& a : cfg.agents) {
        agents.push_back({
            {"kind", to_string(a.kind)},
            {"hyperparams",
             {{"alpha", a.hp.alpha},
              {"gamma", a.hp.gamma},
              {"beta", a.hp.beta},
              {"q_init_low", a.hp.q_init_low},
              {"q_init_high", a.hp.q_init_high},
              {"memory_len", a.hp.memory_len}}},
            {"q_init", name_of(a.q_init, kQInits)},
            {"reward", {{"opponent_weight", a.reward.opponent_weight}}},
            {"dqn",
             {{"hidden", a.dqn.hidden},
              {"learning_rate", a.dqn.learning_rate},
              {"optimizer", name_of(a.dqn.optimizer, kOptimizers)},
              {"batch_size", a.dqn.batch_size},
              {"replay_capacity", a.dqn.replay_capacity},
              {"target_sync", a.dqn.target_sync},
              {"train_start", a.dqn.train_start}}},
            {"dual_buffer",
             {{"offline_capacity", a.dual.offline_capacity},
              {"online_capacity", a.dual.online_capacity},
              {"offline_weight", a.dual.offline_weight},
              {"rolling_window", a.dual.rolling_window},
              {"profit_threshold_frac", a.dual.profit_threshold_frac},
              {"p_online_low", a.dual.p_online_low},
              {"p_online_high", a.dual.p_online_high}}},
            {"policy", name_of(a.policy, kPolicies)},
            {"action", a.action},
            {"snapshot", a.snapshot},
        });
    }
    doc["agents"] = agents;
    doc["horizon"] = cfg.horizon;
    doc["replicas"] = cfg.replicas;
    doc["seed"] = cfg.seed;
    doc["convergence"] = {{"enabled", cfg.convergence.enabled},
                          {"stability", cfg.convergence.stability},
                          {"stop_early", cfg.convergence.stop_early}};
    json ivs = json::array();
    for (const Intervention& iv : cfg.interventions) {
        ivs.push_back({
            {"agent", iv.agent},
            {"phase", name_of(iv.phase, kPhases)},
            {"start", iv.start},
            {"length", iv.length},
            {"permanent", iv.permanent},
            {"force",
             {{"kind", to_string(iv.force.kind)},
              {"action", iv.force.action},
              {"price", iv.force.price},
              {"shift", iv.force.shift}}},
        });
    }
    doc["interventions"] = ivs;
    doc["evaluation"] = {{"periods", cfg.evaluation.periods},
                         {"learning", cfg.evaluation.learning}};
    doc["record"] = {{"stride", cfg.record.stride}, {"tail", cfg.record.tail}};
    doc["summary_window"] = cfg.summary_window;
    const NewcomerSpec& nc = cfg.newcomer;
    doc["newcomer"] = {
        {"enabled", nc.enabled},
        {"incumbent", nc.incumbent},
        {"newcomer", nc.newcomer},
        {"incumbent_snapshot", nc.incumbent_snapshot},
        {"offline_periods", nc.offline_periods},
        {"observe_epsilon", nc.observe_epsilon},
        {"pretrain_updates", nc.pretrain_updates},
        {"online_periods", nc.online_periods},
        {"warm_start", nc.warm_start},
        {"offline_advances_epsilon", nc.offline_advances_epsilon},
        {"incumbent_learns", nc.incumbent_learns},
        {"shock_start", nc.shock_start ? json(*nc.shock_start) : json(nullptr)},
        {"shock_length", nc.shock_length},
    };
    return doc;
}

ExperimentConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config is not valid JSON (byte " + std::to_string(e.byte) + ")");
    }
    return config_from_json(doc);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return parse_config(text.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string emit_config(const ExperimentConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

} // namespace algopricing
