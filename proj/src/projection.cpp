#include "pga/projection.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

#include "pga/parser.hpp"

namespace pga {

namespace {

const Instruction& instr_at(const InstructionSequence& s, std::size_t pos) {
    return pos < s.prefix.size() ? s.prefix[pos] : s.period[pos - s.prefix.size()];
}

template <typename Pred>
bool any_instruction(const InstructionSequence& s, Pred pred) {
    for (const auto& i : s.prefix)
        if (pred(i)) return true;
    for (const auto& i : s.period)
        if (pred(i)) return true;
    return false;
}

void reject_units(const InstructionSequence& s, const char* pass) {
    if (any_instruction(s, [](const Instruction& i) { return std::holds_alternative<UnitInstr>(i.node); }))
        throw PassError(std::string(pass) + ": unit instructions must be eliminated first");
}

std::uint64_t checked_u64(const BigInt& v, const char* what) {
    if (v < 0 || v > std::numeric_limits<std::uint64_t>::max())
        throw PassError(std::string(what) + " out of range");
    return static_cast<std::uint64_t>(v);
}

PassReport make_report(const std::string& name, std::size_t in, std::size_t out, std::size_t gadgets) {
    return PassReport{name, in, out, gadgets};
}

// ---- uniform-width block transform -------------------------------------------

struct Slot {
    enum Kind { Lit, JmpBlocks } kind = Lit;
    Instruction lit{Jump{0}};
    std::uint64_t blocks = 0;  // target is `blocks` blocks ahead
    std::uint64_t slot = 0;    // slot offset inside the target block
};

Slot lit(Instruction ins) {
    Slot s;
    s.kind = Slot::Lit;
    s.lit = std::move(ins);
    return s;
}

Slot jmp_blocks(std::uint64_t blocks, std::uint64_t slot = 0) {
    Slot s;
    s.kind = Slot::JmpBlocks;
    s.blocks = blocks;
    s.slot = slot;
    return s;
}

using ContentFn = std::function<std::vector<Slot>(const Instruction&, std::size_t block, bool in_period)>;

InstructionSequence blockify(const InstructionSequence& in, std::uint64_t width,
                             const ContentFn& content) {
    const std::size_t m = in.prefix.size();
    const std::size_t c = in.period.size();
    InstructionSequence out;
    for (std::size_t b = 0; b < m + c; ++b) {
        std::vector<Slot> slots = content(instr_at(in, b), b, b >= m);
        if (slots.size() > width) throw std::logic_error("block content exceeds width");
        slots.resize(width, lit(Instruction{Jump{0}}));
        auto& dest = b < m ? out.prefix : out.period;
        for (std::size_t s = 0; s < slots.size(); ++s) {
            Slot& sl = slots[s];
            if (sl.kind == Slot::Lit) {
                dest.push_back(std::move(sl.lit));
                continue;
            }
            if (c == 0 && b + sl.blocks >= m) {  // jump past the finite end
                dest.push_back(Instruction{Jump{0}});
                continue;
            }
            BigInt off = BigInt(sl.blocks) * width + sl.slot - s;
            dest.push_back(Instruction{Jump{checked_u64(off, "relocated jump")}});
        }
    }
    return out;
}

std::vector<Slot> default_content(const Instruction& ins, const char* pass) {
    if (std::holds_alternative<Halt>(ins.node)) return {lit(ins)};
    if (const auto* j = std::get_if<Jump>(&ins.node)) {
        if (j->dist == 0) return {lit(ins)};
        return {jmp_blocks(j->dist)};
    }
    if (std::holds_alternative<UnitInstr>(ins.node))
        throw PassError(std::string(pass) + ": unit instructions must be eliminated first");
    // basic actions and prb forms: run, then step or skip a whole block
    return {lit(ins), jmp_blocks(1), jmp_blocks(2)};
}

// ---- bounded probabilistic jumps ----------------------------------------------

std::size_t bounded_gadget_size(const Instruction& ins) {
    if (const auto* h = std::get_if<JumpH>(&ins.node)) return h->k <= 1 ? 1 : 3 * (h->k - 1);
    if (const auto* g = std::get_if<JumpG>(&ins.node)) return g->k == 0 ? 1 : 3 * g->k;
    if (std::holds_alternative<Halt>(ins.node) || std::holds_alternative<Jump>(ins.node)) return 1;
    return 3;
}

}  // namespace

PassResult eliminate_bounded_jumps(const InstructionSequence& s) {
    reject_units(s, "jumps-bounded");
    auto is_bounded = [](const Instruction& i) {
        return std::holds_alternative<JumpH>(i.node) || std::holds_alternative<JumpG>(i.node);
    };
    if (!any_instruction(s, is_bounded)) {
        InstructionSequence out = canonicalize(s);
        return {out, make_report("jumps-bounded", s.size(), out.size(), 0)};
    }

    std::uint64_t width = 3;
    std::size_t gadgets = 0;
    auto scan = [&](const Instruction& i) {
        width = std::max<std::uint64_t>(width, bounded_gadget_size(i));
        if (std::holds_alternative<JumpH>(i.node) || std::holds_alternative<JumpG>(i.node)) ++gadgets;
        return false;
    };
    any_instruction(s, scan);

    auto content = [&](const Instruction& ins, std::size_t, bool) -> std::vector<Slot> {
        if (const auto* h = std::get_if<JumpH>(&ins.node)) {
            if (h->k == 0) return {lit(Instruction{Jump{0}})};
            if (h->k == 1) return {jmp_blocks(1)};
            // k-1 tests with probabilities 1/k, 1/(k-1), ..., 1/2: target j is
            // picked at stage j with overall mass exactly 1/k
            std::vector<Slot> slots;
            for (std::uint64_t i = 1; i + 1 <= h->k; ++i) {
                slots.push_back(lit(Instruction{PrbPos{Rational(BigInt(1), BigInt(h->k - i + 1))}}));
                slots.push_back(jmp_blocks(i));
                if (i + 1 < h->k)
                    slots.push_back(lit(Instruction{Jump{1}}));  // next test in this block
                else
                    slots.push_back(jmp_blocks(h->k));
            }
            return slots;
        }
        if (const auto* g = std::get_if<JumpG>(&ins.node)) {
            if (g->k == 0) return {lit(Instruction{Jump{0}})};
            Rational q = prob_of(g->q);
            std::vector<Slot> slots;
            for (std::uint64_t i = 1; i <= g->k; ++i) {
                slots.push_back(lit(Instruction{PrbPos{q}}));
                slots.push_back(jmp_blocks(i));
                if (i < g->k)
                    slots.push_back(lit(Instruction{Jump{1}}));
                else
                    slots.push_back(lit(Instruction{Jump{0}}));  // residual mass: inaction
            }
            return slots;
        }
        if (const auto* gu = std::get_if<JumpGU>(&ins.node)) {
            // keep the unbounded jump; its landing grid scales with the width
            BigInt scaled = BigInt(gu->step) * width;
            return {lit(Instruction{JumpGU{gu->q, checked_u64(scaled, "scaled #GU distance")}})};
        }
        return default_content(ins, "jumps-bounded");
    };

    InstructionSequence out = canonicalize(blockify(s, width, content));
    return {out, make_report("jumps-bounded", s.size(), out.size(), gadgets)};
}

PassResult eliminate_unbounded_jumps(const InstructionSequence& s) {
    reject_units(s, "jumps-unbounded");
    auto is_gu = [](const Instruction& i) { return std::holds_alternative<JumpGU>(i.node); };
    if (!any_instruction(s, is_gu)) {
        InstructionSequence out = canonicalize(s);
        return {out, make_report("jumps-unbounded", s.size(), out.size(), 0)};
    }

    const std::size_t m = s.prefix.size();
    const std::size_t c = s.period.size();

    // one ladder per occurrence; every landing site must fall in the period
    std::map<std::size_t, std::size_t> ladder_of;  // position -> ladder index
    std::vector<Rational> ladder_q;
    std::vector<std::uint64_t> ladder_step;
    std::uint64_t max_table = 2;
    for (std::size_t pos = 0; pos < m + c; ++pos) {
        const Instruction& ins = instr_at(s, pos);
        if (const auto* h = std::get_if<JumpH>(&ins.node))
            max_table = std::max(max_table, h->k);
        if (const auto* g = std::get_if<JumpG>(&ins.node))
            max_table = std::max(max_table, g->k);
        const auto* gu = std::get_if<JumpGU>(&ins.node);
        if (!gu) continue;
        Rational q = prob_of(gu->q);
        if (q.is_zero()) continue;  // lands nowhere: becomes #0, needs no ladder
        if (gu->step == 0) throw PassError("jumps-unbounded: #GU with distance 0");
        if (c == 0)
            throw PassError("jumps-unbounded: #GU in a finite sequence has no period to land in");
        if (pos < m && pos + gu->step < m)
            throw PassError("jumps-unbounded: #GU at position " + std::to_string(pos) +
                            " can land in the prefix");
        ladder_of[pos] = ladder_q.size();
        ladder_q.push_back(q);
        ladder_step.push_back(gu->step);
    }

    const std::uint64_t station_base = 1 + max_table;
    const std::uint64_t width = station_base + 3 * ladder_q.size();
    const std::size_t gadget_count = [&] {
        std::size_t n = 0;
        auto count = [&](const Instruction& i) {
            if (std::holds_alternative<JumpGU>(i.node)) ++n;
            return false;
        };
        any_instruction(s, count);
        return n;
    }();

    auto content = [&](const Instruction& ins, std::size_t block, bool in_period) -> std::vector<Slot> {
        std::vector<Slot> slots;
        if (const auto* h = std::get_if<JumpH>(&ins.node)) {
            if (h->k == 0) {
                slots.push_back(lit(Instruction{Jump{0}}));
            } else {
                slots.push_back(lit(ins));  // its targets are the table slots below
                for (std::uint64_t j = 1; j <= h->k; ++j) slots.push_back(jmp_blocks(j));
            }
        } else if (const auto* g = std::get_if<JumpG>(&ins.node)) {
            if (g->k == 0) {
                slots.push_back(lit(Instruction{Jump{0}}));
            } else {
                slots.push_back(lit(ins));
                for (std::uint64_t j = 1; j <= g->k; ++j) slots.push_back(jmp_blocks(j));
            }
        } else if (const auto* gu = std::get_if<JumpGU>(&ins.node)) {
            Rational q = prob_of(gu->q);
            if (q.is_zero()) {
                slots.push_back(lit(Instruction{Jump{0}}));
            } else if (q == Rational(1)) {
                slots.push_back(jmp_blocks(gu->step));
            } else {
                std::size_t g2 = ladder_of.at(block);
                slots.push_back(lit(Instruction{PrbPos{q}}));
                slots.push_back(jmp_blocks(gu->step, 0));
                slots.push_back(jmp_blocks(gu->step, station_base + 3 * g2));
            }
        } else {
            slots = default_content(ins, "jumps-unbounded");
        }
        if (in_period) {
            slots.resize(station_base, lit(Instruction{Jump{0}}));
            for (std::size_t g2 = 0; g2 < ladder_q.size(); ++g2) {
                // landing test: land l blocks ahead or forward to the next test
                slots.push_back(lit(Instruction{PrbPos{ladder_q[g2]}}));
                slots.push_back(jmp_blocks(ladder_step[g2], 0));
                slots.push_back(jmp_blocks(ladder_step[g2], station_base + 3 * g2));
            }
        }
        return slots;
    };

    InstructionSequence out = canonicalize(blockify(s, width, content));
    return {out, make_report("jumps-unbounded", s.size(), out.size(), gadget_count)};
}

// ---- fair-coin realization ----------------------------------------------------

namespace {

// Binary expansion of q in (0,1): preperiod bits then repeating bits.
std::pair<std::vector<int>, std::vector<int>> binary_expansion(const Rational& q) {
    std::map<BigInt, std::size_t> seen;
    std::vector<int> bits;
    BigInt r = q.num();
    for (;;) {
        auto it = seen.find(r);
        if (it != seen.end()) {
            std::vector<int> pre(bits.begin(), bits.begin() + static_cast<std::ptrdiff_t>(it->second));
            std::vector<int> per(bits.begin() + static_cast<std::ptrdiff_t>(it->second), bits.end());
            return {pre, per};
        }
        seen.emplace(r, bits.size());
        r *= 2;
        if (r >= q.den()) {
            bits.push_back(1);
            r -= q.den();
        } else {
            bits.push_back(0);
        }
    }
}

}  // namespace

PassResult realize_prb_fair(const InstructionSequence& s) {
    reject_units(s, "fair-coin");
    if (any_instruction(s, [](const Instruction& i) {
            return std::holds_alternative<JumpH>(i.node) || std::holds_alternative<JumpG>(i.node) ||
                   std::holds_alternative<JumpGU>(i.node);
        }))
        throw PassError("fair-coin: probabilistic jumps must be eliminated first");

    const Rational half(BigInt(1), BigInt(2));

    // In-place degenerate cases; collect the tests that need a real gadget.
    InstructionSequence base = s;
    struct Gadget {
        std::size_t pos;
        bool negated;
        Rational q;
    };
    std::vector<Gadget> gadgets;
    std::size_t swapped = 0;
    auto simplify = [&](Instruction& ins, std::size_t pos) {
        if (const auto* p = std::get_if<PrbPlain>(&ins.node)) {
            if (p->q && prob_of(p->q) != half) ++swapped;
            ins = Instruction{PrbPlain{}};  // reply never steers control
            return;
        }
        bool neg = std::holds_alternative<PrbNeg>(ins.node);
        ProbArg arg;
        if (const auto* p = std::get_if<PrbPos>(&ins.node))
            arg = p->q;
        else if (const auto* p = std::get_if<PrbNeg>(&ins.node))
            arg = p->q;
        else
            return;
        Rational q = prob_of(arg);
        if (q == half) {
            if (arg) ++swapped;
            ins = neg ? Instruction{PrbNeg{}} : Instruction{PrbPos{}};
            return;
        }
        if (q.is_zero() || q == Rational(1)) {
            bool proceed = (q == Rational(1)) != neg;  // outcome True steers +tests to the next slot
            ins = Instruction{Jump{proceed ? std::uint64_t{1} : std::uint64_t{2}}};
            ++swapped;
            return;
        }
        gadgets.push_back({pos, neg, q});
    };
    for (std::size_t i = 0; i < base.prefix.size(); ++i) simplify(base.prefix[i], i);
    for (std::size_t i = 0; i < base.period.size(); ++i)
        simplify(base.period[i], base.prefix.size() + i);

    if (gadgets.empty()) {
        InstructionSequence out = canonicalize(base);
        return {out, make_report("fair-coin", s.size(), out.size(), swapped)};
    }

    // Rebuild as one period: relocated body, a two-slot boundary that either
    // restarts the old period or deadlocks a finite program, then the coin
    // gadgets whose expansion loops wrap through the period.
    const std::size_t m = base.prefix.size();
    const std::size_t c = base.period.size();
    const std::size_t boundary = m + c;
    std::vector<std::size_t> gadget_start(gadgets.size());
    std::size_t total = boundary + 2;
    for (std::size_t g = 0; g < gadgets.size(); ++g) {
        auto [pre, per] = binary_expansion(gadgets[g].q);
        gadget_start[g] = total;
        total += 3 * (pre.size() + per.size());
    }
    const std::size_t wlen = total;

    auto wrap_off = [&](std::size_t from, std::size_t to) -> std::uint64_t {
        std::size_t d = (to + wlen - from) % wlen;
        return d == 0 ? wlen : d;
    };
    // Original successor position `steps` after pos, as a slot of the new period.
    auto target_of = [&](std::size_t pos, std::size_t steps) -> std::size_t {
        std::size_t t = pos + steps;
        if (t < m) return t;
        if (c == 0) return boundary;  // past the finite end: the #0 slot
        return m + (t - m) % c;
    };

    std::vector<Instruction> w;
    w.reserve(wlen);
    std::map<std::size_t, std::size_t> gadget_at;  // position -> gadget index
    for (std::size_t g = 0; g < gadgets.size(); ++g) gadget_at[gadgets[g].pos] = g;

    for (std::size_t pos = 0; pos < boundary; ++pos) {
        auto it = gadget_at.find(pos);
        if (it != gadget_at.end()) {
            w.push_back(Instruction{Jump{wrap_off(pos, gadget_start[it->second])}});
            continue;
        }
        const Instruction& ins = instr_at(base, pos);
        if (const auto* j = std::get_if<Jump>(&ins.node); j && j->dist > 0) {
            std::size_t tgt = target_of(pos, j->dist);
            if (tgt == pos + j->dist && tgt < m) {
                w.push_back(ins);  // stays within the prefix part, unchanged
            } else {
                w.push_back(Instruction{Jump{wrap_off(pos, tgt)}});
            }
            continue;
        }
        w.push_back(ins);
    }
    // boundary slots: fall-through and skip targets for the last body slots
    if (c > 0) {
        w.push_back(Instruction{Jump{wrap_off(boundary, m)}});
        w.push_back(Instruction{Jump{wrap_off(boundary + 1, m + 1 % std::max<std::size_t>(c, 1))}});
    } else {
        w.push_back(Instruction{Jump{0}});
        w.push_back(Instruction{Jump{0}});
    }

    for (std::size_t g = 0; g < gadgets.size(); ++g) {
        auto [pre, per] = binary_expansion(gadgets[g].q);
        std::vector<int> all(pre);
        all.insert(all.end(), per.begin(), per.end());
        const std::size_t units = all.size();
        const std::size_t start = gadget_start[g];
        const std::size_t loop_entry = start + 3 * pre.size();
        // outcome True proceeds to the instruction after the test, outcome
        // False skips it; a negative test swaps the two routes
        std::size_t true_exit = target_of(gadgets[g].pos, gadgets[g].negated ? 2 : 1);
        std::size_t false_exit = target_of(gadgets[g].pos, gadgets[g].negated ? 1 : 2);
        for (std::size_t u = 0; u < units; ++u) {
            std::size_t upos = start + 3 * u;
            std::size_t cont = u + 1 < units ? upos + 3 : loop_entry;
            std::size_t exit = all[u] == 1 ? true_exit : false_exit;
            w.push_back(Instruction{PrbPos{}});
            w.push_back(Instruction{Jump{wrap_off(upos + 1, cont)}});
            w.push_back(Instruction{Jump{wrap_off(upos + 2, exit)}});
        }
    }

    InstructionSequence out = canonicalize(InstructionSequence{{}, std::move(w)});
    return {out, make_report("fair-coin", s.size(), out.size(), gadgets.size() + swapped)};
}

// ---- service calls ------------------------------------------------------------

PassResult to_service_calls(const InstructionSequence& s, ServiceStyle style) {
    reject_units(s, "services");
    if (any_instruction(s, [](const Instruction& i) {
            return std::holds_alternative<JumpH>(i.node) || std::holds_alternative<JumpG>(i.node) ||
                   std::holds_alternative<JumpGU>(i.node);
        }))
        throw PassError("services: probabilistic jumps must be eliminated first");

    std::size_t replaced = 0;
    auto servicize = [&](const ProbArg& q) {
        ++replaced;
        Rational v = prob_of(q);
        if (style == ServiceStyle::PerQService) return BasicAction{"random(" + v.str() + ")", "get"};
        return BasicAction{"random", "get(" + v.str() + ")"};
    };
    InstructionSequence out = s;
    auto rewrite = [&](Instruction& ins) {
        if (const auto* p = std::get_if<PrbPlain>(&ins.node))
            ins = Instruction{Plain{servicize(p->q)}};
        else if (const auto* p = std::get_if<PrbPos>(&ins.node))
            ins = Instruction{PosTest{servicize(p->q)}};
        else if (const auto* p = std::get_if<PrbNeg>(&ins.node))
            ins = Instruction{NegTest{servicize(p->q)}};
    };
    for (auto& i : out.prefix) rewrite(i);
    for (auto& i : out.period) rewrite(i);
    out = canonicalize(out);
    return {out, make_report("services", s.size(), out.size(), replaced)};
}

// ---- pipeline -----------------------------------------------------------------

const std::vector<std::string>& available_passes() {
    static const std::vector<std::string> names{"desugar",        "units",       "normalize",
                                                "jumps-unbounded", "jumps-bounded", "fair-coin",
                                                "services"};
    return names;
}

ProjectionOptions ProjectionOptions::defaults() {
    ProjectionOptions o;
    o.passes = {"desugar", "units", "normalize", "jumps-unbounded", "jumps-bounded", "services"};
    return o;
}

std::string to_string(const PassReport& r) {
    return r.name + ": in=" + std::to_string(r.input_size) + " out=" + std::to_string(r.output_size) +
           " gadgets=" + std::to_string(r.gadget_count);
}

std::pair<InstructionSequence, std::vector<PassReport>> project_full(const Term& t,
                                                                     const ProjectionOptions& opts) {
    // validate: known names, each at most once, pipeline order respected
    {
        std::size_t cursor = 0;
        for (const auto& name : opts.passes) {
            const auto& all = available_passes();
            auto it = std::find(all.begin() + static_cast<std::ptrdiff_t>(cursor), all.end(), name);
            if (it == all.end()) {
                if (std::find(all.begin(), all.end(), name) != all.end())
                    throw PassError("pass '" + name + "' out of order or repeated");
                throw PassError("unknown pass '" + name + "'");
            }
            cursor = static_cast<std::size_t>(it - all.begin()) + 1;
        }
    }
    auto enabled = [&](const char* name) {
        return std::find(opts.passes.begin(), opts.passes.end(), name) != opts.passes.end();
    };

    std::vector<PassReport> reports;
    TermPtr cur = std::make_shared<Term>(t);
    if (enabled("desugar")) {
        std::size_t in = term_instruction_count(*cur);
        std::size_t n = 0;
        std::function<void(const Term&)> count = [&](const Term& x) {
            if (const auto* cc = std::get_if<Term::Concat>(&x.node)) {
                count(*cc->lhs);
                count(*cc->rhs);
            } else if (const auto* rr = std::get_if<Term::Rep>(&x.node)) {
                count(*rr->body);
            } else if (const auto* pc = std::get_if<Term::PrChoice>(&x.node)) {
                ++n;
                count(*pc->lhs);
                count(*pc->rhs);
            }
        };
        count(*cur);
        cur = desugar_prchoice(*cur);
        reports.push_back(make_report("desugar", in, term_instruction_count(*cur), n));
    }
    if (enabled("units")) {
        std::size_t in = term_instruction_count(*cur);
        std::size_t n = 0;
        std::function<void(const Term&)> count = [&](const Term& x) {
            if (const auto* ii = std::get_if<Term::Instr>(&x.node)) {
                std::function<void(const Instruction&)> ci = [&](const Instruction& ins) {
                    if (const auto* u = std::get_if<UnitInstr>(&ins.node)) {
                        ++n;
                        for (const auto& bi : u->body) ci(bi);
                    }
                };
                ci(ii->ins);
            } else if (const auto* cc = std::get_if<Term::Concat>(&x.node)) {
                count(*cc->lhs);
                count(*cc->rhs);
            } else if (const auto* rr = std::get_if<Term::Rep>(&x.node)) {
                count(*rr->body);
            }
        };
        count(*cur);
        cur = eliminate_units(*cur);
        reports.push_back(make_report("units", in, term_instruction_count(*cur), n));
    }

    InstructionSequence seq = normalize(*cur);
    if (enabled("normalize"))
        reports.push_back(make_report("normalize", term_instruction_count(*cur), seq.size(), 0));

    if (enabled("jumps-unbounded")) {
        PassResult r = eliminate_unbounded_jumps(seq);
        seq = std::move(r.seq);
        reports.push_back(r.report);
    }
    if (enabled("jumps-bounded")) {
        PassResult r = eliminate_bounded_jumps(seq);
        seq = std::move(r.seq);
        reports.push_back(r.report);
    }
    if (enabled("fair-coin")) {
        PassResult r = realize_prb_fair(seq);
        seq = std::move(r.seq);
        reports.push_back(r.report);
    }
    if (enabled("services")) {
        PassResult r = to_service_calls(seq, opts.service_style);
        seq = std::move(r.seq);
        reports.push_back(r.report);
    }
    return {seq, reports};
}

TermPtr build_random_assignment(const std::string& x, std::uint64_t k) {
    if (k == 0) throw PassError("random assignment needs at least one value");
    std::vector<Instruction> items;
    items.push_back(Instruction{JumpH{k}});
    for (std::uint64_t i = 1; i <= k; ++i) {
        std::vector<Instruction> body;
        body.push_back(Instruction{Plain{BasicAction{x, "set_" + std::to_string(i)}}});
        body.push_back(Instruction{Jump{k - i + 1}});
        items.push_back(Instruction{UnitInstr{std::move(body)}});
    }
    return term_from_list(items);
}

}  // namespace pga
