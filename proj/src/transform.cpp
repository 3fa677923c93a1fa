#include "pga/transform.hpp"

#include <algorithm>
#include <limits>
#include <utility>
#include <vector>

#include "pga/parser.hpp"

namespace pga {

namespace {

struct NormalForm {
    std::vector<Instruction> prefix;
    std::vector<Instruction> period;
};

void check_instruction(const Instruction& ins, bool allow_units) {
    if (!allow_units && std::holds_alternative<UnitInstr>(ins.node))
        throw PassError("unit instruction present; eliminate units first");
}

NormalForm structural_norm(const Term& t, bool allow_units) {
    if (const auto* i = std::get_if<Term::Instr>(&t.node)) {
        check_instruction(i->ins, allow_units);
        return {{i->ins}, {}};
    }
    if (const auto* c = std::get_if<Term::Concat>(&t.node)) {
        NormalForm a = structural_norm(*c->lhs, allow_units);
        if (!a.period.empty()) return a;  // X*;Y = X*
        NormalForm b = structural_norm(*c->rhs, allow_units);
        a.prefix.insert(a.prefix.end(), b.prefix.begin(), b.prefix.end());
        a.period = std::move(b.period);
        return a;
    }
    if (const auto* r = std::get_if<Term::Rep>(&t.node)) {
        NormalForm a = structural_norm(*r->body, allow_units);
        if (!a.period.empty()) return a;  // (P;Q*)* streams as P;Q*
        return {{}, std::move(a.prefix)};
    }
    throw PassError("probabilistic choice present; desugar first");
}

void canonicalize_lists(std::vector<Instruction>& prefix, std::vector<Instruction>& period) {
    if (period.empty()) return;
    // repetition-minimal period: reduce to the primitive root
    for (std::size_t d = 1; d <= period.size() / 2; ++d) {
        if (period.size() % d != 0) continue;
        bool root = true;
        for (std::size_t i = d; i < period.size() && root; ++i)
            root = period[i] == period[i - d];
        if (root) {
            period.resize(d);
            break;
        }
    }
    // absorb the prefix tail into period rotations
    while (!prefix.empty() && prefix.back() == period.back()) {
        prefix.pop_back();
        period.insert(period.begin(), period.back());
        period.pop_back();
    }
}

// ---- unit elimination -------------------------------------------------------

std::size_t flat_width(const Instruction& ins) {
    if (const auto* u = std::get_if<UnitInstr>(&ins.node)) {
        std::size_t w = 0;
        for (const auto& b : u->body) w += flat_width(b);
        return w;
    }
    return 1;
}

// The item stream: top items 0..mp-1 form the prefix, the rest the period.
struct ItemStream {
    std::vector<Instruction> items;
    std::size_t mp = 0;
};

const std::vector<Instruction>* list_at(const ItemStream& s, const std::vector<std::size_t>& path,
                                        std::size_t depth) {
    const std::vector<Instruction>* cur = &s.items;
    for (std::size_t k = 0; k < depth; ++k)
        cur = &std::get<UnitInstr>((*cur)[path[k]].node).body;
    return cur;
}

// Flat offset a jump of d at `path` must get so it reaches the position its
// item-level counting reached: each later item at the jump's level (then
// outward) counts once, contributing its flat width; the top level wraps
// through the period; past a finite end each missing instruction counts one.
BigInt walk_offset(const ItemStream& s, const std::vector<std::size_t>& path, std::uint64_t d) {
    BigInt newoff = 1;
    std::uint64_t rem = d;
    for (std::size_t depth = path.size(); depth-- > 1;) {
        const auto& list = *list_at(s, path, depth);
        for (std::size_t j = path[depth] + 1; j < list.size(); ++j) {
            if (rem == 1) return newoff;
            --rem;
            newoff += flat_width(list[j]);
        }
    }
    const auto& top = s.items;
    std::size_t n = top.size();
    std::size_t period_items = n - s.mp;
    std::size_t j = path[0] + 1;
    BigInt flat_period = 0;
    for (std::size_t t = s.mp; t < n; ++t) flat_period += flat_width(top[t]);
    for (;;) {
        if (j == n) {
            if (period_items == 0) return newoff + (rem - 1);
            std::uint64_t cycles = (rem - 1) / period_items;
            rem -= cycles * period_items;
            newoff += BigInt(cycles) * flat_period;
            j = s.mp;
        }
        if (rem == 1) return newoff;
        --rem;
        newoff += flat_width(top[j]);
        ++j;
    }
}

bool needs_forwarding(const ItemStream& s, const std::vector<std::size_t>& path,
                      const Instruction& ins) {
    auto misplaced = [&](std::uint64_t d) { return walk_offset(s, path, d) != d; };
    if (std::holds_alternative<PosTest>(ins.node) || std::holds_alternative<NegTest>(ins.node) ||
        std::holds_alternative<PrbPos>(ins.node) || std::holds_alternative<PrbNeg>(ins.node))
        return misplaced(2);
    if (const auto* h = std::get_if<JumpH>(&ins.node)) {
        for (std::uint64_t t = 1; t <= h->k; ++t)
            if (misplaced(t)) return true;
        return false;
    }
    if (const auto* g = std::get_if<JumpG>(&ins.node)) {
        for (std::uint64_t t = 1; t <= g->k; ++t)
            if (misplaced(t)) return true;
        return false;
    }
    return false;
}

Instruction forwarding_wrap(const Instruction& ins) {
    std::vector<Instruction> body{ins};
    std::uint64_t slots = 2;
    std::uint64_t dist = 2;
    if (const auto* h = std::get_if<JumpH>(&ins.node)) slots = dist = h->k;
    if (const auto* g = std::get_if<JumpG>(&ins.node)) slots = dist = g->k;
    for (std::uint64_t t = 0; t < slots; ++t) body.push_back(Instruction{Jump{dist}});
    return Instruction{UnitInstr{std::move(body)}};
}

// One instruction per call; restart after each rewrite since widths change.
bool wrap_one(ItemStream& s, std::vector<Instruction>& list, std::vector<std::size_t>& path) {
    for (std::size_t i = 0; i < list.size(); ++i) {
        path.push_back(i);
        if (auto* u = std::get_if<UnitInstr>(&list[i].node)) {
            if (wrap_one(s, u->body, path)) return true;
        } else if (needs_forwarding(s, path, list[i])) {
            list[i] = forwarding_wrap(list[i]);
            path.pop_back();
            return true;
        }
        path.pop_back();
    }
    return false;
}

bool contains_gu(const std::vector<Instruction>& list) {
    for (const auto& ins : list) {
        if (std::holds_alternative<JumpGU>(ins.node)) return true;
        if (const auto* u = std::get_if<UnitInstr>(&ins.node))
            if (contains_gu(u->body)) return true;
    }
    return false;
}

bool has_wide_unit(const std::vector<Instruction>& list) {
    for (const auto& ins : list) {
        if (const auto* u = std::get_if<UnitInstr>(&ins.node)) {
            if (flat_width(ins) > 1 || has_wide_unit(u->body)) return true;
        }
    }
    return false;
}

std::uint64_t offset_to_u64(const BigInt& off) {
    if (off > std::numeric_limits<std::uint64_t>::max())
        throw PassError("relocated jump offset out of range");
    return static_cast<std::uint64_t>(off);
}

void flatten_into(const ItemStream& s, const std::vector<Instruction>& list,
                  std::vector<std::size_t>& path, std::vector<Instruction>& out) {
    for (std::size_t i = 0; i < list.size(); ++i) {
        path.push_back(i);
        if (const auto* u = std::get_if<UnitInstr>(&list[i].node)) {
            flatten_into(s, u->body, path, out);
        } else if (const auto* j = std::get_if<Jump>(&list[i].node); j && j->dist > 0) {
            out.push_back(Instruction{Jump{offset_to_u64(walk_offset(s, path, j->dist))}});
        } else {
            out.push_back(list[i]);
        }
        path.pop_back();
    }
}

}  // namespace

InstructionSequence normalize(const Term& t) {
    NormalForm nf = structural_norm(t, /*allow_units=*/false);
    canonicalize_lists(nf.prefix, nf.period);
    return InstructionSequence{std::move(nf.prefix), std::move(nf.period)};
}

InstructionSequence canonicalize(InstructionSequence s) {
    canonicalize_lists(s.prefix, s.period);
    return s;
}

TermPtr desugar_prchoice(const Term& t) {
    if (const auto* i = std::get_if<Term::Instr>(&t.node)) return mk_instr(i->ins);
    if (const auto* c = std::get_if<Term::Concat>(&t.node))
        return mk_concat(desugar_prchoice(*c->lhs), desugar_prchoice(*c->rhs));
    if (const auto* r = std::get_if<Term::Rep>(&t.node)) return mk_rep(desugar_prchoice(*r->body));
    const auto& ch = std::get<Term::PrChoice>(t.node);
    TermPtr dl = desugar_prchoice(*ch.lhs);
    TermPtr dr = desugar_prchoice(*ch.rhs);
    auto left = term_to_instruction_list(*dl);
    auto right = term_to_instruction_list(*dr);
    if (!left || !right) throw PassError("repetition is not allowed inside a choice branch");
    left->push_back(Instruction{Jump{2}});
    return mk_concat(mk_instr(Instruction{PrbPos{ch.p}}),
                     mk_concat(mk_instr(Instruction{UnitInstr{std::move(*left)}}),
                               mk_instr(Instruction{UnitInstr{std::move(*right)}})));
}

TermPtr eliminate_units(const Term& t) {
    NormalForm nf = structural_norm(t, /*allow_units=*/true);
    canonicalize_lists(nf.prefix, nf.period);
    ItemStream s;
    s.mp = nf.prefix.size();
    s.items = std::move(nf.prefix);
    s.items.insert(s.items.end(), nf.period.begin(), nf.period.end());
    // wrap until every hardwired target lands where its item counting did
    for (;;) {
        std::vector<std::size_t> path;
        if (!wrap_one(s, s.items, path)) break;
    }
    if (contains_gu(s.items) && has_wide_unit(s.items))
        throw PassError(
            "unbounded probabilistic jumps cannot be relocated across multi-instruction units");
    InstructionSequence out;
    {
        std::vector<std::size_t> path;
        std::vector<Instruction> flat;
        flatten_into(s, s.items, path, flat);
        // split at the flat boundary of the item prefix
        std::size_t cut = 0;
        for (std::size_t i = 0; i < s.mp; ++i) cut += flat_width(s.items[i]);
        out.prefix.assign(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(cut));
        out.period.assign(flat.begin() + static_cast<std::ptrdiff_t>(cut), flat.end());
    }
    TermPtr result = to_term(out);
    if (!result) throw PassError("empty program");
    return result;
}

}  // namespace pga
