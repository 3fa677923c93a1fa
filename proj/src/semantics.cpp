#include "pga/semantics.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <sstream>
#include <tuple>

namespace pga {

namespace {

using Dist = std::vector<std::pair<std::uint32_t, Rational>>;
using FlowMap = std::map<std::uint32_t, Rational>;

const Dist* chance_dist(const ReactivePts::Node& n) {
    const auto* c = std::get_if<ReactivePts::ChanceNode>(&n);
    return c ? &c->dist : nullptr;
}

// Strongly connected components of the subgraph induced by `transparent`
// states, emitted sinks-first (Tarjan's order), which is the evaluation
// order the flow solver needs.
std::vector<std::vector<std::uint32_t>> transparent_sccs(const ReactivePts& p,
                                                         const std::vector<bool>& transparent) {
    const std::size_t n = p.nodes.size();
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::uint32_t> stack;
    std::vector<std::vector<std::uint32_t>> out;
    int counter = 0;

    struct Frame {
        std::uint32_t v;
        std::size_t edge = 0;
    };
    for (std::uint32_t s = 0; s < n; ++s) {
        if (!transparent[s] || index[s] != -1) continue;
        std::vector<Frame> call{{s, 0}};
        index[s] = low[s] = counter++;
        stack.push_back(s);
        on_stack[s] = true;
        while (!call.empty()) {
            Frame& f = call.back();
            const Dist& d = *chance_dist(p.nodes[f.v]);
            if (f.edge < d.size()) {
                std::uint32_t w = d[f.edge++].first;
                if (!transparent[w]) continue;
                if (index[w] == -1) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
            } else {
                std::uint32_t v = f.v;
                call.pop_back();
                if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
                if (low[v] == index[v]) {
                    std::vector<std::uint32_t> comp;
                    for (;;) {
                        std::uint32_t w = stack.back();
                        stack.pop_back();
                        on_stack[w] = false;
                        comp.push_back(w);
                        if (w == v) break;
                    }
                    out.push_back(std::move(comp));
                }
            }
        }
    }
    return out;
}

void prune_zeros(FlowMap& m) {
    for (auto it = m.begin(); it != m.end();) {
        if (it->second.is_zero())
            it = m.erase(it);
        else
            ++it;
    }
}

// For every transparent state, the exact distribution over the opaque states
// its transparent chains reach; missing mass never leaves the chains.
std::vector<FlowMap> flow_through(const ReactivePts& p, const std::vector<bool>& transparent) {
    std::vector<FlowMap> flow(p.nodes.size());
    for (const auto& comp : transparent_sccs(p, transparent)) {
        const std::size_t k = comp.size();
        std::map<std::uint32_t, std::size_t> pos;
        for (std::size_t i = 0; i < k; ++i) pos[comp[i]] = i;

        std::vector<std::vector<Rational>> a(k, std::vector<Rational>(k, Rational(0)));
        std::vector<FlowMap> c(k);
        bool mass_escapes = false;
        for (std::size_t i = 0; i < k; ++i) {
            for (const auto& [t, m] : *chance_dist(p.nodes[comp[i]])) {
                if (transparent[t]) {
                    auto it = pos.find(t);
                    if (it != pos.end()) {
                        a[i][it->second] += m;
                        continue;
                    }
                    mass_escapes = true;
                    for (const auto& [o, mo] : flow[t]) c[i][o] += m * mo;
                } else {
                    mass_escapes = true;
                    c[i][t] += m;
                }
            }
        }
        if (!mass_escapes) continue;  // closed component: everything diverges

        // Gauss-Jordan on (I - a) x = c with map-valued right-hand sides.
        std::vector<std::vector<Rational>> mtx(k, std::vector<Rational>(k, Rational(0)));
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) mtx[i][j] = (i == j ? Rational(1) : Rational(0)) - a[i][j];
        for (std::size_t col = 0; col < k; ++col) {
            std::size_t piv = col;
            while (piv < k && mtx[piv][col].is_zero()) ++piv;
            if (piv == k) throw std::logic_error("singular flow system");
            std::swap(mtx[piv], mtx[col]);
            std::swap(c[piv], c[col]);
            Rational inv = minv(mtx[col][col]);
            for (std::size_t j = col; j < k; ++j) mtx[col][j] *= inv;
            for (auto& [o, m] : c[col]) m *= inv;
            for (std::size_t r = 0; r < k; ++r) {
                if (r == col || mtx[r][col].is_zero()) continue;
                Rational f = mtx[r][col];
                for (std::size_t j = col; j < k; ++j) mtx[r][j] -= f * mtx[col][j];
                for (const auto& [o, m] : c[col]) c[r][o] -= f * m;
            }
        }
        for (std::size_t i = 0; i < k; ++i) {
            prune_zeros(c[i]);
            flow[comp[i]] = std::move(c[i]);
        }
    }
    return flow;
}

// Distribution over opaque states reached from `state` (which may itself be
// opaque); the deficit of the returned map is divergence inside chains.
FlowMap flow_of(std::uint32_t state, const std::vector<bool>& transparent,
                const std::vector<FlowMap>& flow) {
    if (transparent[state]) return flow[state];
    FlowMap m;
    m.emplace(state, Rational(1));
    return m;
}

std::vector<bool> invisible_mask(const ReactivePts& p) {
    std::vector<bool> mask(p.nodes.size(), false);
    for (std::size_t i = 0; i < p.nodes.size(); ++i) {
        const auto* c = std::get_if<ReactivePts::ChanceNode>(&p.nodes[i]);
        mask[i] = c && !c->label;
    }
    return mask;
}

std::vector<bool> resolved_mask(const ReactivePts& p) {
    std::vector<bool> mask(p.nodes.size(), false);
    for (std::size_t i = 0; i < p.nodes.size(); ++i) {
        if (std::holds_alternative<ReactivePts::ActionNode>(p.nodes[i]))
            throw PassError("analysis requires an environment-resolved system");
        mask[i] = std::holds_alternative<ReactivePts::ChanceNode>(p.nodes[i]);
    }
    return mask;
}

Rational sum_where(const FlowMap& m, const ReactivePts& p, bool terminated) {
    Rational total(0);
    for (const auto& [t, mass] : m) {
        bool is_term = std::holds_alternative<ReactivePts::TerminatedNode>(p.nodes[t]);
        if (is_term == terminated &&
            (is_term || std::holds_alternative<ReactivePts::InactionNode>(p.nodes[t])))
            total += mass;
    }
    return total;
}

}  // namespace

// ---- construction -----------------------------------------------------------

ReactivePts build_pts(const InstructionSequence& s) {
    const std::size_t m = s.prefix.size();
    const std::size_t c = s.period.size();
    const std::size_t positions = m + c;
    if (positions == 0) throw PassError("empty instruction sequence");

    ReactivePts p;
    p.position_count = positions;
    p.nodes.resize(positions + 1);
    const std::uint32_t inact = static_cast<std::uint32_t>(positions);
    p.nodes[inact] = ReactivePts::InactionNode{};
    p.initial = 0;

    auto succ = [&](std::size_t pos, const BigInt& d) -> std::uint32_t {
        BigInt t = BigInt(pos) + d;
        if (t < BigInt(m)) return static_cast<std::uint32_t>(t);
        if (c == 0) return inact;
        BigInt slot = (t - m) % BigInt(c);
        return static_cast<std::uint32_t>(BigInt(m) + slot);
    };
    auto instr_at = [&](std::size_t pos) -> const Instruction& {
        return pos < m ? s.prefix[pos] : s.period[pos - m];
    };

    for (std::size_t pos = 0; pos < positions; ++pos) {
        const Instruction& ins = instr_at(pos);
        auto chance = [&](std::vector<std::pair<std::uint32_t, Rational>> dist) {
            // merge duplicate targets, drop zero masses
            std::map<std::uint32_t, Rational> merged;
            for (auto& [t, q] : dist)
                if (!q.is_zero()) merged[t] += q;
            ReactivePts::ChanceNode node;
            for (auto& [t, q] : merged)
                if (!q.is_zero()) node.dist.emplace_back(t, q);
            p.nodes[pos] = std::move(node);
        };

        if (const auto* i = std::get_if<Plain>(&ins.node)) {
            std::uint32_t nxt = succ(pos, 1);
            p.nodes[pos] = ReactivePts::ActionNode{i->action, nxt, nxt};
        } else if (const auto* i = std::get_if<PosTest>(&ins.node)) {
            p.nodes[pos] = ReactivePts::ActionNode{i->action, succ(pos, 1), succ(pos, 2)};
        } else if (const auto* i = std::get_if<NegTest>(&ins.node)) {
            p.nodes[pos] = ReactivePts::ActionNode{i->action, succ(pos, 2), succ(pos, 1)};
        } else if (const auto* i = std::get_if<Jump>(&ins.node)) {
            chance({{i->dist == 0 ? inact : succ(pos, i->dist), Rational(1)}});
        } else if (std::holds_alternative<Halt>(ins.node)) {
            p.nodes[pos] = ReactivePts::TerminatedNode{};
        } else if (std::holds_alternative<PrbPlain>(ins.node)) {
            chance({{succ(pos, 1), Rational(1)}});
        } else if (const auto* i = std::get_if<PrbPos>(&ins.node)) {
            Rational q = prob_of(i->q);
            chance({{succ(pos, 1), q}, {succ(pos, 2), Rational(1) - q}});
        } else if (const auto* i = std::get_if<PrbNeg>(&ins.node)) {
            Rational q = prob_of(i->q);
            chance({{succ(pos, 2), q}, {succ(pos, 1), Rational(1) - q}});
        } else if (const auto* i = std::get_if<JumpH>(&ins.node)) {
            if (i->k == 0) {
                chance({{inact, Rational(1)}});
            } else {
                std::vector<std::pair<std::uint32_t, Rational>> d;
                Rational share(BigInt(1), BigInt(i->k));
                for (std::uint64_t j = 1; j <= i->k; ++j) d.emplace_back(succ(pos, j), share);
                chance(std::move(d));
            }
        } else if (const auto* i = std::get_if<JumpG>(&ins.node)) {
            Rational q = prob_of(i->q);
            Rational miss = Rational(1) - q;
            std::vector<std::pair<std::uint32_t, Rational>> d;
            Rational running(1);
            for (std::uint64_t j = 1; j <= i->k; ++j) {
                d.emplace_back(succ(pos, j), q * running);
                running *= miss;
            }
            d.emplace_back(inact, running);  // residual (1-q)^k
            chance(std::move(d));
        } else if (const auto* i = std::get_if<JumpGU>(&ins.node)) {
            Rational q = prob_of(i->q);
            if (q.is_zero() || i->step == 0) {
                chance({{inact, Rational(1)}});
            } else if (q == Rational(1)) {
                chance({{succ(pos, i->step), Rational(1)}});
            } else {
                Rational miss = Rational(1) - q;
                std::vector<std::pair<std::uint32_t, Rational>> d;
                BigInt step(i->step);
                std::uint64_t j = 1;
                Rational running(1);  // (1-q)^(j-1)
                // targets still inside the finite prefix, enumerated one by one
                while (BigInt(pos) + step * j < BigInt(m)) {
                    d.emplace_back(succ(pos, step * j), q * running);
                    running *= miss;
                    ++j;
                }
                if (c == 0) {
                    d.emplace_back(inact, running);  // everything beyond the end
                } else {
                    // Landing sites cycle through period slots with period
                    // c/gcd(step,c); each class collects a geometric series.
                    std::uint64_t cyc = s.period.size() / std::gcd(i->step % s.period.size() == 0
                                                                       ? s.period.size()
                                                                       : i->step % s.period.size(),
                                                                   s.period.size());
                    Rational ratio = pow_nat(miss, cyc);
                    Rational scale = minv(Rational(1) - ratio);
                    for (std::uint64_t t = 0; t < cyc; ++t) {
                        d.emplace_back(succ(pos, step * (j + t)), q * running * scale);
                        running *= miss;
                    }
                }
                chance(std::move(d));
            }
        } else {
            throw PassError("unit instruction in semantics input; eliminate units first");
        }
    }
    return p;
}

ReactivePts apply_environment(const ReactivePts& p, const Environment& e) {
    ReactivePts out = p;
    for (auto& node : out.nodes) {
        const auto* act = std::get_if<ReactivePts::ActionNode>(&node);
        if (!act) continue;
        const Environment::Model& model = e.lookup(act->label);
        ReactivePts::ChanceNode resolved;
        resolved.label = act->label;
        switch (model.kind) {
            case Environment::Model::AlwaysTrue:
                resolved.dist.emplace_back(act->on_true, Rational(1));
                break;
            case Environment::Model::AlwaysFalse:
                resolved.dist.emplace_back(act->on_false, Rational(1));
                break;
            case Environment::Model::Bernoulli: {
                if (act->on_true == act->on_false) {
                    resolved.dist.emplace_back(act->on_true, Rational(1));
                } else {
                    Rational q = model.q;
                    if (!q.is_zero()) resolved.dist.emplace_back(act->on_true, q);
                    Rational rest = Rational(1) - q;
                    if (!rest.is_zero()) resolved.dist.emplace_back(act->on_false, rest);
                }
                break;
            }
        }
        node = std::move(resolved);
    }
    return out;
}

// ---- analyses ---------------------------------------------------------------

Absorption absorption(const ReactivePts& applied) {
    std::vector<bool> transparent = resolved_mask(applied);
    auto flow = flow_through(applied, transparent);
    FlowMap from_init = flow_of(applied.initial, transparent, flow);
    Absorption a{Rational(0), Rational(0), Rational(0)};
    a.terminated = sum_where(from_init, applied, true);
    a.inaction = sum_where(from_init, applied, false);
    a.divergence = Rational(1) - a.terminated - a.inaction;
    return a;
}

std::optional<Rational> expected_visits(const ReactivePts& applied, const std::vector<bool>& mark) {
    Absorption a = absorption(applied);
    if (!a.divergence.is_zero()) return std::nullopt;

    // reachable transient states
    std::vector<bool> transparent = resolved_mask(applied);
    std::vector<bool> reach(applied.nodes.size(), false);
    std::vector<std::uint32_t> todo;
    if (transparent[applied.initial]) {
        reach[applied.initial] = true;
        todo.push_back(applied.initial);
    }
    while (!todo.empty()) {
        std::uint32_t v = todo.back();
        todo.pop_back();
        for (const auto& [t, m] : *chance_dist(applied.nodes[v])) {
            if (transparent[t] && !reach[t]) {
                reach[t] = true;
                todo.push_back(t);
            }
        }
    }

    // y_s = [s marked] + sum p * y_t, solved component by component
    std::vector<Rational> y(applied.nodes.size(), Rational(0));
    for (const auto& comp : transparent_sccs(applied, reach)) {
        const std::size_t k = comp.size();
        std::map<std::uint32_t, std::size_t> pos;
        for (std::size_t i = 0; i < k; ++i) pos[comp[i]] = i;
        std::vector<std::vector<Rational>> mtx(k, std::vector<Rational>(k, Rational(0)));
        std::vector<Rational> rhs(k, Rational(0));
        for (std::size_t i = 0; i < k; ++i) {
            std::uint32_t sv = comp[i];
            if (sv < mark.size() && mark[sv]) rhs[i] += Rational(1);
            mtx[i][i] += Rational(1);
            for (const auto& [t, m] : *chance_dist(applied.nodes[sv])) {
                auto it = pos.find(t);
                if (it != pos.end())
                    mtx[i][it->second] -= m;
                else if (reach[t])
                    rhs[i] += m * y[t];
            }
        }
        for (std::size_t col = 0; col < k; ++col) {
            std::size_t piv = col;
            while (piv < k && mtx[piv][col].is_zero()) ++piv;
            if (piv == k) throw std::logic_error("singular visit system");
            std::swap(mtx[piv], mtx[col]);
            std::swap(rhs[piv], rhs[col]);
            Rational inv = minv(mtx[col][col]);
            for (std::size_t j = col; j < k; ++j) mtx[col][j] *= inv;
            rhs[col] *= inv;
            for (std::size_t r = 0; r < k; ++r) {
                if (r == col || mtx[r][col].is_zero()) continue;
                Rational f = mtx[r][col];
                for (std::size_t j = col; j < k; ++j) mtx[r][j] -= f * mtx[col][j];
                rhs[r] -= f * rhs[col];
            }
        }
        for (std::size_t i = 0; i < k; ++i) y[comp[i]] = rhs[i];
    }
    if (!transparent[applied.initial]) return Rational(0);
    return y[applied.initial];
}

std::optional<Rational> expected_steps(const ReactivePts& applied) {
    std::vector<bool> mark(applied.nodes.size(), false);
    for (std::size_t i = 0; i < applied.nodes.size(); ++i)
        mark[i] = std::holds_alternative<ReactivePts::ChanceNode>(applied.nodes[i]);
    auto visits = expected_visits(applied, mark);
    if (!visits) return std::nullopt;
    // entering a halt position executes that instruction
    return *visits + absorption(applied).terminated;
}

std::vector<bool> mark_probabilistic_positions(const InstructionSequence& s,
                                               std::size_t state_count) {
    std::vector<bool> mark(state_count, false);
    std::size_t pos = 0;
    auto consider = [&](const Instruction& ins) {
        if (std::holds_alternative<PrbPlain>(ins.node) || std::holds_alternative<PrbPos>(ins.node) ||
            std::holds_alternative<PrbNeg>(ins.node))
            mark[pos] = true;
        ++pos;
    };
    for (const auto& i : s.prefix) consider(i);
    for (const auto& i : s.period) consider(i);
    return mark;
}

TraceDistribution trace_distribution(const ReactivePts& p, const Environment& e, std::size_t depth,
                                     const LabelHider& hide) {
    ReactivePts applied = apply_environment(p, e);
    std::vector<bool> transparent(applied.nodes.size(), false);
    for (std::size_t i = 0; i < applied.nodes.size(); ++i) {
        const auto* c = std::get_if<ReactivePts::ChanceNode>(&applied.nodes[i]);
        transparent[i] = c && (!c->label || (hide && hide(*c->label)));
    }
    auto flow = flow_through(applied, transparent);

    TraceDistribution out;
    using Frontier = std::map<std::vector<BasicAction>, FlowMap>;
    Frontier frontier;

    auto deposit = [&](const std::vector<BasicAction>& labels, std::uint32_t state, Rational mass,
                       Frontier& dst) {
        if (mass.is_zero()) return;
        if (std::holds_alternative<ReactivePts::TerminatedNode>(applied.nodes[state]))
            out[Trace{labels, TraceEnd::Terminated}] += mass;
        else if (std::holds_alternative<ReactivePts::InactionNode>(applied.nodes[state]))
            out[Trace{labels, TraceEnd::Inaction}] += mass;
        else
            dst[labels][state] += mass;
    };
    auto spread = [&](const std::vector<BasicAction>& labels, std::uint32_t from, Rational mass,
                      Frontier& dst) {
        FlowMap f = flow_of(from, transparent, flow);
        Rational seen(0);
        for (const auto& [t, m] : f) {
            deposit(labels, t, mass * m, dst);
            seen += m;
        }
        Rational lost = Rational(1) - seen;
        if (!lost.is_zero()) out[Trace{labels, TraceEnd::Open}] += mass * lost;
    };

    spread({}, applied.initial, Rational(1), frontier);
    for (std::size_t level = 0; level < depth; ++level) {
        Frontier next;
        for (auto& [labels, states] : frontier) {
            for (auto& [sid, mass] : states) {
                const auto& node = std::get<ReactivePts::ChanceNode>(applied.nodes[sid]);
                std::vector<BasicAction> extended = labels;
                extended.push_back(*node.label);
                for (const auto& [t, m] : node.dist) spread(extended, t, mass * m, next);
            }
        }
        frontier = std::move(next);
    }
    for (auto& [labels, states] : frontier) {
        Rational total(0);
        for (auto& [sid, mass] : states) total += mass;
        if (!total.is_zero()) out[Trace{labels, TraceEnd::Open}] += total;
    }
    return out;
}

std::string trace_to_string(const Trace& t) {
    std::string s;
    for (const auto& a : t.labels) {
        if (!s.empty()) s += ";";
        s += a.label();
    }
    std::string marker = t.end == TraceEnd::Terminated ? "!" : t.end == TraceEnd::Inaction ? "D" : "...";
    if (s.empty()) return marker;
    return s + ";" + marker;
}

std::string trace_distribution_to_string(const TraceDistribution& d) {
    std::ostringstream os;
    for (const auto& [trace, mass] : d)
        os << trace_to_string(trace) << " : " << mass.str() << " (" << mass.approx() << ")\n";
    return os.str();
}

// ---- bisimulation -----------------------------------------------------------

namespace {

struct CombinedView {
    // visible states of both systems mapped into one index space; three fixed
    // classes for termination, inaction and divergence
    static constexpr int kTerminated = 0;
    static constexpr int kInaction = 1;
    static constexpr int kDivergence = 2;

    std::vector<std::pair<int, std::uint32_t>> visible;        // (system, state)
    std::map<std::pair<int, std::uint32_t>, std::size_t> ids;  // -> index into visible
};

using ClassDist = std::map<std::size_t, Rational>;  // visible index + 3 sentinels

}  // namespace

BisimResult bisimilar(const ReactivePts& a, const ReactivePts& b) {
    const ReactivePts* sys[2] = {&a, &b};
    std::vector<bool> transparent[2] = {invisible_mask(a), invisible_mask(b)};
    std::vector<FlowMap> flow[2] = {flow_through(a, transparent[0]),
                                    flow_through(b, transparent[1])};

    CombinedView view;
    for (int sdx = 0; sdx < 2; ++sdx) {
        for (std::uint32_t i = 0; i < sys[sdx]->nodes.size(); ++i) {
            const auto& node = sys[sdx]->nodes[i];
            bool vis = std::holds_alternative<ReactivePts::ActionNode>(node);
            if (const auto* cn = std::get_if<ReactivePts::ChanceNode>(&node)) vis = cn->label.has_value();
            if (vis) {
                view.ids[{sdx, i}] = view.visible.size();
                view.visible.emplace_back(sdx, i);
            }
        }
    }
    const std::size_t v = view.visible.size();
    // sentinel indices appended after visible states
    const std::size_t id_term = v, id_inact = v + 1, id_div = v + 2;

    auto expand = [&](int sdx, std::uint32_t from) {
        ClassDist d;
        FlowMap f = flow_of(from, transparent[sdx], flow[sdx]);
        Rational seen(0);
        for (const auto& [t, m] : f) {
            seen += m;
            const auto& node = sys[sdx]->nodes[t];
            if (std::holds_alternative<ReactivePts::TerminatedNode>(node))
                d[id_term] += m;
            else if (std::holds_alternative<ReactivePts::InactionNode>(node))
                d[id_inact] += m;
            else
                d[view.ids.at({sdx, t})] += m;
        }
        Rational lost = Rational(1) - seen;
        if (!lost.is_zero()) d[id_div] += lost;
        return d;
    };

    // per visible state: label plus the flattened distribution of each reply
    std::vector<BasicAction> label(v);
    std::vector<ClassDist> dist_true(v), dist_false(v);
    for (std::size_t i = 0; i < v; ++i) {
        auto [sdx, state] = view.visible[i];
        const auto& node = sys[sdx]->nodes[state];
        if (const auto* act = std::get_if<ReactivePts::ActionNode>(&node)) {
            label[i] = act->label;
            dist_true[i] = expand(sdx, act->on_true);
            dist_false[i] = expand(sdx, act->on_false);
        } else {
            const auto& cn = std::get<ReactivePts::ChanceNode>(node);
            label[i] = *cn.label;
            ClassDist d;
            for (const auto& [t, m] : cn.dist) {
                for (const auto& [cls, mm] : expand(sdx, t)) d[cls] += m * mm;
            }
            dist_true[i] = d;
            dist_false[i] = std::move(d);
        }
    }

    // partition refinement; blocks 0..2 are the fixed sentinel classes
    std::vector<int> block(v + 3);
    block[id_term] = 0;
    block[id_inact] = 1;
    block[id_div] = 2;
    {
        std::map<std::string, int> by_label;
        for (std::size_t i = 0; i < v; ++i) {
            auto [it, fresh] = by_label.emplace(label[i].label(), static_cast<int>(by_label.size()) + 3);
            block[i] = it->second;
        }
    }
    auto aggregate = [&](const ClassDist& d) {
        std::map<int, Rational> agg;
        for (const auto& [cls, m] : d) agg[block[cls]] += m;
        std::vector<std::pair<int, Rational>> out(agg.begin(), agg.end());
        return out;
    };
    for (;;) {
        using Sig = std::tuple<int, std::vector<std::pair<int, Rational>>,
                               std::vector<std::pair<int, Rational>>>;
        std::map<Sig, int> fresh;
        std::vector<int> next(v + 3);
        next[id_term] = 0;
        next[id_inact] = 1;
        next[id_div] = 2;
        for (std::size_t i = 0; i < v; ++i) {
            Sig sig{block[i], aggregate(dist_true[i]), aggregate(dist_false[i])};
            auto [it, inserted] = fresh.emplace(std::move(sig), static_cast<int>(fresh.size()) + 3);
            next[i] = it->second;
        }
        bool stable = true;
        for (std::size_t i = 0; i < v && stable; ++i) stable = next[i] == block[i];
        block.swap(next);
        if (stable) break;
    }

    auto initial_by_block = [&](int sdx) {
        std::map<int, Rational> agg;
        for (const auto& [cls, m] : expand(sdx, sys[sdx]->initial)) agg[block[cls]] += m;
        return agg;
    };
    std::map<int, Rational> left = initial_by_block(0), right = initial_by_block(1);
    if (left == right) return {true, ""};

    // describe the first class whose initial mass differs
    auto describe = [&](int blk) -> std::string {
        if (blk == 0) return "termination";
        if (blk == 1) return "inaction";
        if (blk == 2) return "divergence";
        for (std::size_t i = 0; i < v; ++i)
            if (block[i] == blk) return "class of action '" + label[i].label() + "'";
        return "class #" + std::to_string(blk);
    };
    std::set<int> keys;
    for (const auto& [k2, m] : left) keys.insert(k2);
    for (const auto& [k2, m] : right) keys.insert(k2);
    for (int k2 : keys) {
        Rational lm = left.count(k2) ? left.at(k2) : Rational(0);
        Rational rm = right.count(k2) ? right.at(k2) : Rational(0);
        if (lm != rm) {
            return {false, "initial distributions differ on " + describe(k2) + ": left " + lm.str() +
                               ", right " + rm.str()};
        }
    }
    return {false, "initial distributions differ"};
}

bool equivalent_under(const InstructionSequence& a, const InstructionSequence& b,
                      const Environment& e, std::size_t depth, const LabelHider& hide_a,
                      const LabelHider& hide_b) {
    TraceDistribution da = trace_distribution(build_pts(a), e, depth, hide_a);
    TraceDistribution db = trace_distribution(build_pts(b), e, depth, hide_b);
    return da == db;
}

// ---- environments and service conventions -----------------------------------

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::optional<Rational> rational_in_parens(const std::string& name, const std::string& stem) {
    if (name.size() <= stem.size() + 2) return std::nullopt;
    if (name.compare(0, stem.size(), stem) != 0) return std::nullopt;
    if (name[stem.size()] != '(' || name.back() != ')') return std::nullopt;
    return parse_rational_literal(name.substr(stem.size() + 1, name.size() - stem.size() - 2));
}

}  // namespace

Rational parse_rational_literal(const std::string& text) {
    std::string t = trim(text);
    std::size_t slash = t.find('/');
    std::string ns = slash == std::string::npos ? t : trim(t.substr(0, slash));
    std::string ds = slash == std::string::npos ? "1" : trim(t.substr(slash + 1));
    auto valid = [](const std::string& x, bool allow_sign) {
        if (x.empty()) return false;
        std::size_t i = allow_sign && (x[0] == '-' || x[0] == '+') ? 1 : 0;
        if (i == x.size()) return false;
        for (; i < x.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(x[i]))) return false;
        return true;
    };
    if (!valid(ns, true) || !valid(ds, false))
        throw PassError("malformed rational literal '" + text + "'");
    return Rational(BigInt(ns), BigInt(ds));
}

bool is_random_service_action(const BasicAction& a) {
    return a.focus == "random" || a.focus.rfind("random(", 0) == 0;
}

std::optional<Rational> service_probability(const BasicAction& a) {
    if (auto q = rational_in_parens(a.focus, "random")) {
        if (a.method == "get") return q;
        return std::nullopt;
    }
    if (a.focus == "random") return rational_in_parens(a.method, "get");
    return std::nullopt;
}

Environment with_service_models(Environment base, const InstructionSequence& s) {
    auto consider = [&](const Instruction& ins) {
        const BasicAction* act = nullptr;
        if (const auto* i = std::get_if<Plain>(&ins.node)) act = &i->action;
        if (const auto* i = std::get_if<PosTest>(&ins.node)) act = &i->action;
        if (const auto* i = std::get_if<NegTest>(&ins.node)) act = &i->action;
        if (!act) return;
        auto q = service_probability(*act);
        if (!q) return;
        base.overrides.emplace(*act, Environment::Model{Environment::Model::Bernoulli, mkprob(*q)});
    };
    for (const auto& i : s.prefix) consider(i);
    for (const auto& i : s.period) consider(i);
    return base;
}

Environment parse_environment_file(const std::string& text) {
    Environment env;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw PassError("environment line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));

        Environment::Model model;
        if (value == "true") {
            model.kind = Environment::Model::AlwaysTrue;
        } else if (value == "false") {
            model.kind = Environment::Model::AlwaysFalse;
        } else if (value.rfind("bernoulli", 0) == 0) {
            model.kind = Environment::Model::Bernoulli;
            model.q = parse_rational_literal(value.substr(9));
            if (model.q < Rational(0) || model.q > Rational(1))
                throw PassError("environment line " + std::to_string(lineno) +
                                ": bernoulli parameter outside [0,1]");
        } else {
            throw PassError("environment line " + std::to_string(lineno) + ": unknown reply model '" +
                            value + "'");
        }

        if (key == "default") {
            env.fallback = model;
            continue;
        }
        TermPtr t;
        try {
            t = parse(key);
        } catch (const ParseError& pe) {
            throw PassError("environment line " + std::to_string(lineno) + ": bad action key: " +
                            pe.what());
        }
        const auto* instr = std::get_if<Term::Instr>(&t->node);
        const Plain* plain = instr ? std::get_if<Plain>(&instr->ins.node) : nullptr;
        if (!plain)
            throw PassError("environment line " + std::to_string(lineno) +
                            ": key must be a basic action");
        env.overrides[plain->action] = model;
    }
    return env;
}

}  // namespace pga
