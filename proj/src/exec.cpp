#include "pga/exec.hpp"

#include <sstream>

#include "pga/semantics.hpp"
#include "pga/transform.hpp"

namespace pga {

std::pair<Rng, std::uint64_t> rng_next(Rng r) {
    r.state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = r.state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return {r, z ^ (z >> 31)};
}

BernoulliCut bernoulli_cut(const Rational& q) {
    BernoulliCut c;
    BigInt scaled = (q.num() << 64) / q.den();  // floor(q * 2^64), q in [0,1]
    if (scaled >= (BigInt(1) << 64)) {
        c.always = true;
        return c;
    }
    if (scaled < 0) scaled = 0;
    c.cut = static_cast<std::uint64_t>(scaled);
    return c;
}

std::pair<Rng, bool> bernoulli(Rng r, const Rational& q) {
    BernoulliCut c = bernoulli_cut(q);
    auto [next, draw] = rng_next(r);
    if (c.always) return {next, true};
    return {next, draw < c.cut};
}

ServiceRegistry ServiceRegistry::constant_true() {
    ServiceRegistry reg;
    reg.fallback = Constant{true};
    return reg;
}

namespace {

std::string trim_copy(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

ServiceRegistry parse_registry_file(const std::string& text) {
    ServiceRegistry reg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim_copy(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw PassError("registry line " + std::to_string(lineno) + ": expected 'focus = service'");
        std::string key = trim_copy(line.substr(0, eq));
        std::string value = trim_copy(line.substr(eq + 1));
        ServiceRegistry::Service service;
        if (value.rfind("constant", 0) == 0) {
            std::string arg = trim_copy(value.substr(8));
            if (arg != "true" && arg != "false")
                throw PassError("registry line " + std::to_string(lineno) + ": constant needs true|false");
            service = ServiceRegistry::Constant{arg == "true"};
        } else if (value == "single") {
            service = ServiceRegistry::RandomSingle{};
        } else if (value.rfind("random", 0) == 0) {
            Rational q = parse_rational_literal(value.substr(6));
            if (q < Rational(0) || q > Rational(1))
                throw PassError("registry line " + std::to_string(lineno) + ": probability outside [0,1]");
            service = ServiceRegistry::RandomPerQ{q};
        } else if (value.rfind("script", 0) == 0) {
            ServiceRegistry::Scripted sc;
            std::istringstream args(value.substr(6));
            std::string tok;
            bool saw_replies = false;
            while (args >> tok) {
                if (tok == "repeat") {
                    sc.repeat = true;
                    continue;
                }
                if (tok == "inaction") {
                    sc.repeat = false;
                    continue;
                }
                std::istringstream reps(tok);
                std::string r;
                while (std::getline(reps, r, ',')) {
                    r = trim_copy(r);
                    if (r == "T" || r == "t" || r == "true")
                        sc.replies.push_back(true);
                    else if (r == "F" || r == "f" || r == "false")
                        sc.replies.push_back(false);
                    else
                        throw PassError("registry line " + std::to_string(lineno) +
                                        ": bad scripted reply '" + r + "'");
                    saw_replies = true;
                }
            }
            if (!saw_replies)
                throw PassError("registry line " + std::to_string(lineno) + ": script needs replies");
            service = std::move(sc);
        } else {
            throw PassError("registry line " + std::to_string(lineno) + ": unknown service '" + value +
                            "'");
        }
        if (key == "*")
            reg.fallback = std::move(service);
        else
            reg.services[key] = std::move(service);
    }
    return reg;
}

ServiceRegistry with_random_services(ServiceRegistry reg, const InstructionSequence& s) {
    auto consider = [&](const Instruction& ins) {
        const BasicAction* act = nullptr;
        if (const auto* i = std::get_if<Plain>(&ins.node)) act = &i->action;
        if (const auto* i = std::get_if<PosTest>(&ins.node)) act = &i->action;
        if (const auto* i = std::get_if<NegTest>(&ins.node)) act = &i->action;
        if (!act || !is_random_service_action(*act)) return;
        if (act->focus == "random") {
            reg.services.emplace("random", ServiceRegistry::RandomSingle{});
            return;
        }
        auto q = service_probability(*act);
        if (q) reg.services.emplace(act->focus, ServiceRegistry::RandomPerQ{mkprob(*q)});
    };
    for (const auto& i : s.prefix) consider(i);
    for (const auto& i : s.period) consider(i);
    return reg;
}

namespace {

struct Machine {
    const InstructionSequence& s;
    const ServiceRegistry& reg;
    Rng rng;
    RunResult res;
    std::map<std::string, std::size_t> script_cursor;

    bool flip(const Rational& q) {
        auto [next, reply] = bernoulli(rng, q);
        rng = next;
        return reply;
    }

    // Reply of the designated service, or nothing when the instruction cannot
    // be processed (missing service, wrong method, exhausted script).
    std::optional<bool> query(const BasicAction& a) {
        const std::string& key = a.focus.empty() ? a.method : a.focus;
        const ServiceRegistry::Service* svc = nullptr;
        auto it = reg.services.find(key);
        if (it != reg.services.end())
            svc = &it->second;
        else if (reg.fallback)
            svc = &*reg.fallback;
        if (!svc) {
            res.diagnostic = "no service for focus '" + key + "'";
            return std::nullopt;
        }
        if (const auto* c = std::get_if<ServiceRegistry::Constant>(svc)) return c->reply;
        if (const auto* r = std::get_if<ServiceRegistry::RandomPerQ>(svc)) {
            if (a.method != "get") {
                res.diagnostic = "service '" + key + "' cannot process method '" + a.method + "'";
                return std::nullopt;
            }
            return flip(r->q);
        }
        if (std::holds_alternative<ServiceRegistry::RandomSingle>(*svc)) {
            auto q = service_probability(a);
            if (!q) {
                res.diagnostic = "service '" + key + "' cannot process method '" + a.method + "'";
                return std::nullopt;
            }
            return flip(mkprob(*q));
        }
        const auto& sc = std::get<ServiceRegistry::Scripted>(*svc);
        std::size_t& cur = script_cursor[key];
        if (cur >= sc.replies.size()) {
            if (!sc.repeat) {
                res.diagnostic = "scripted service '" + key + "' exhausted";
                return std::nullopt;
            }
            cur = 0;
        }
        return sc.replies[cur++];
    }
};

}  // namespace

RunResult run_program(const InstructionSequence& s, const ServiceRegistry& reg, std::uint64_t seed,
                      std::uint64_t max_steps) {
    const std::size_t m = s.prefix.size();
    const std::size_t c = s.period.size();
    Machine mc{s, reg, Rng{seed}, {}, {}};
    unsigned __int128 pos = 0;

    auto normalize_pos = [&](unsigned __int128 p) -> unsigned __int128 {
        if (c > 0 && p >= m) return m + static_cast<std::size_t>((p - m) % c);
        return p;
    };

    while (mc.res.steps < max_steps) {
        if (pos >= m + c) {  // past the finite end: nothing to execute
            mc.res.outcome = RunResult::Inaction;
            return mc.res;
        }
        std::size_t at = static_cast<std::size_t>(pos);
        const Instruction& ins = at < m ? s.prefix[at] : s.period[at - m];

        unsigned __int128 next = pos + 1;
        if (const auto* i = std::get_if<Plain>(&ins.node)) {
            auto reply = mc.query(i->action);
            if (!reply) {
                mc.res.outcome = RunResult::Inaction;
                return mc.res;
            }
            ++mc.res.steps;
            mc.res.trace.emplace_back(i->action, *reply);
        } else if (const auto* i = std::get_if<PosTest>(&ins.node)) {
            auto reply = mc.query(i->action);
            if (!reply) {
                mc.res.outcome = RunResult::Inaction;
                return mc.res;
            }
            ++mc.res.steps;
            mc.res.trace.emplace_back(i->action, *reply);
            next = pos + (*reply ? 1 : 2);
        } else if (const auto* i = std::get_if<NegTest>(&ins.node)) {
            auto reply = mc.query(i->action);
            if (!reply) {
                mc.res.outcome = RunResult::Inaction;
                return mc.res;
            }
            ++mc.res.steps;
            mc.res.trace.emplace_back(i->action, *reply);
            next = pos + (*reply ? 2 : 1);
        } else if (const auto* i = std::get_if<Jump>(&ins.node)) {
            ++mc.res.steps;
            if (i->dist == 0) {
                mc.res.outcome = RunResult::Inaction;
                return mc.res;
            }
            next = pos + i->dist;
        } else if (std::holds_alternative<Halt>(ins.node)) {
            ++mc.res.steps;
            mc.res.outcome = RunResult::Terminated;
            return mc.res;
        } else if (const auto* i = std::get_if<PrbPlain>(&ins.node)) {
            ++mc.res.steps;
            mc.flip(prob_of(i->q));  // reply drawn and discarded
        } else if (const auto* i = std::get_if<PrbPos>(&ins.node)) {
            ++mc.res.steps;
            next = pos + (mc.flip(prob_of(i->q)) ? 1 : 2);
        } else if (const auto* i = std::get_if<PrbNeg>(&ins.node)) {
            ++mc.res.steps;
            next = pos + (mc.flip(prob_of(i->q)) ? 2 : 1);
        } else if (const auto* i = std::get_if<JumpH>(&ins.node)) {
            ++mc.res.steps;
            if (i->k == 0) {
                mc.res.outcome = RunResult::Inaction;
                return mc.res;
            }
            auto [nrng, draw] = rng_next(mc.rng);
            mc.rng = nrng;
            std::uint64_t j =
                static_cast<std::uint64_t>((static_cast<unsigned __int128>(draw) * i->k) >> 64) + 1;
            next = pos + j;
        } else if (const auto* i = std::get_if<JumpG>(&ins.node)) {
            ++mc.res.steps;
            Rational q = prob_of(i->q);
            bool landed = false;
            for (std::uint64_t j = 1; j <= i->k; ++j) {
                if (mc.flip(q)) {
                    next = pos + j;
                    landed = true;
                    break;
                }
            }
            if (!landed) {
                mc.res.outcome = RunResult::Inaction;
                return mc.res;
            }
        } else if (const auto* i = std::get_if<JumpGU>(&ins.node)) {
            ++mc.res.steps;
            Rational q = prob_of(i->q);
            if (q.is_zero() || i->step == 0) {
                mc.res.outcome = RunResult::Inaction;
                return mc.res;
            }
            unsigned __int128 hop = i->step;
            while (!mc.flip(q)) hop += i->step;  // terminates almost surely, q > 0
            next = pos + hop;
        } else {
            throw PassError("simulator input must be unit-free");
        }
        pos = normalize_pos(next);
    }
    mc.res.outcome = RunResult::StepLimit;
    return mc.res;
}

FrequencyTable sample_many(const InstructionSequence& s, const ServiceRegistry& reg,
                           std::uint64_t seed, std::uint64_t n, std::uint64_t max_steps) {
    FrequencyTable table;
    for (std::uint64_t i = 0; i < n; ++i) {
        RunResult r = run_program(s, reg, seed + i, max_steps);
        std::vector<std::string> labels;
        labels.reserve(r.trace.size());
        for (const auto& [action, reply] : r.trace) labels.push_back(action.label());
        ++table[{std::move(labels), r.outcome}];
    }
    return table;
}

}  // namespace pga
