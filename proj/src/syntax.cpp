#include "pga/syntax.hpp"

#include <sstream>

namespace pga {

bool operator==(const UnitInstr& a, const UnitInstr& b) { return a.body == b.body; }
bool operator==(const Instruction& a, const Instruction& b) { return a.node == b.node; }

TermPtr mk_instr(Instruction ins) {
    auto t = std::make_shared<Term>();
    t->node = Term::Instr{std::move(ins)};
    return t;
}

TermPtr mk_concat(TermPtr lhs, TermPtr rhs) {
    auto t = std::make_shared<Term>();
    t->node = Term::Concat{std::move(lhs), std::move(rhs)};
    return t;
}

TermPtr mk_rep(TermPtr body) {
    auto t = std::make_shared<Term>();
    t->node = Term::Rep{std::move(body)};
    return t;
}

TermPtr mk_prchoice(Rational p, TermPtr lhs, TermPtr rhs) {
    auto t = std::make_shared<Term>();
    t->node = Term::PrChoice{std::move(p), std::move(lhs), std::move(rhs)};
    return t;
}

TermPtr term_from_list(const std::vector<Instruction>& instrs) {
    TermPtr t;
    for (auto it = instrs.rbegin(); it != instrs.rend(); ++it) {
        TermPtr cur = mk_instr(*it);
        t = t ? mk_concat(cur, t) : cur;
    }
    return t;
}

bool term_equal(const Term& a, const Term& b) {
    if (a.node.index() != b.node.index()) return false;
    if (const auto* ia = std::get_if<Term::Instr>(&a.node)) {
        return ia->ins == std::get<Term::Instr>(b.node).ins;
    }
    if (const auto* ca = std::get_if<Term::Concat>(&a.node)) {
        const auto& cb = std::get<Term::Concat>(b.node);
        return term_equal(*ca->lhs, *cb.lhs) && term_equal(*ca->rhs, *cb.rhs);
    }
    if (const auto* ra = std::get_if<Term::Rep>(&a.node)) {
        return term_equal(*ra->body, *std::get<Term::Rep>(b.node).body);
    }
    const auto& pa = std::get<Term::PrChoice>(a.node);
    const auto& pb = std::get<Term::PrChoice>(b.node);
    return pa.p == pb.p && term_equal(*pa.lhs, *pb.lhs) && term_equal(*pa.rhs, *pb.rhs);
}

std::vector<Instruction> expand(const InstructionSequence& s, std::size_t n) {
    std::vector<Instruction> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n && i < s.prefix.size(); ++i) out.push_back(s.prefix[i]);
    if (!s.period.empty()) {
        std::size_t i = out.size();
        while (out.size() < n) {
            out.push_back(s.period[(i - s.prefix.size()) % s.period.size()]);
            ++i;
        }
    }
    return out;
}

TermPtr to_term(const InstructionSequence& s) {
    TermPtr pfx = term_from_list(s.prefix);
    TermPtr per = s.period.empty() ? nullptr : mk_rep(term_from_list(s.period));
    if (pfx && per) return mk_concat(std::move(pfx), std::move(per));
    return pfx ? pfx : per;
}

namespace {

std::string print_prob_arg(const ProbArg& q) { return q ? "(" + q->str() + ")" : ""; }

std::string print_brace_arg(const ProbArg& q) { return q ? "{" + q->str() + "}" : "{}"; }

struct InstrPrinter {
    std::string operator()(const Plain& i) const { return i.action.label(); }
    std::string operator()(const PosTest& i) const { return "+" + i.action.label(); }
    std::string operator()(const NegTest& i) const { return "-" + i.action.label(); }
    std::string operator()(const Jump& i) const { return "#" + std::to_string(i.dist); }
    std::string operator()(const Halt&) const { return "!"; }
    std::string operator()(const PrbPlain& i) const { return "prb" + print_prob_arg(i.q); }
    std::string operator()(const PrbPos& i) const { return "+prb" + print_prob_arg(i.q); }
    std::string operator()(const PrbNeg& i) const { return "-prb" + print_prob_arg(i.q); }
    std::string operator()(const JumpH& i) const { return "#H{" + std::to_string(i.k) + "}"; }
    std::string operator()(const JumpG& i) const {
        return "#G" + print_brace_arg(i.q) + "{" + std::to_string(i.k) + "}";
    }
    std::string operator()(const JumpGU& i) const {
        return "#GU" + print_brace_arg(i.q) + "{" + std::to_string(i.step) + "}";
    }
    std::string operator()(const UnitInstr& i) const {
        std::string out = "[";
        for (std::size_t k = 0; k < i.body.size(); ++k) {
            if (k) out += ";";
            out += print_instruction(i.body[k]);
        }
        return out + "]";
    }
};

}  // namespace

std::string print_instruction(const Instruction& ins) { return std::visit(InstrPrinter{}, ins.node); }

std::string print_term(const Term& t) {
    struct V {
        std::string operator()(const Term::Instr& n) const { return print_instruction(n.ins); }
        std::string operator()(const Term::Concat& n) const {
            // Concatenation parses right-associated; a concat on the left is
            // parenthesized so printing round-trips structurally.
            std::string l = print_term(*n.lhs);
            if (std::holds_alternative<Term::Concat>(n.lhs->node)) l = "(" + l + ")";
            return l + ";" + print_term(*n.rhs);
        }
        std::string operator()(const Term::Rep& n) const { return "(" + print_term(*n.body) + ")*"; }
        std::string operator()(const Term::PrChoice& n) const {
            return "{" + print_term(*n.lhs) + "}+_(" + n.p.str() + "){" + print_term(*n.rhs) + "}";
        }
    };
    return std::visit(V{}, t.node);
}

std::string print_sequence(const InstructionSequence& s) {
    auto t = to_term(s);
    return t ? print_term(*t) : std::string();
}

std::size_t instruction_count(const Instruction& ins) {
    if (const auto* u = std::get_if<UnitInstr>(&ins.node)) {
        std::size_t n = 0;
        for (const auto& b : u->body) n += instruction_count(b);
        return n;
    }
    return 1;
}

std::size_t term_instruction_count(const Term& t) {
    struct V {
        std::size_t operator()(const Term::Instr& n) const { return instruction_count(n.ins); }
        std::size_t operator()(const Term::Concat& n) const {
            return term_instruction_count(*n.lhs) + term_instruction_count(*n.rhs);
        }
        std::size_t operator()(const Term::Rep& n) const { return term_instruction_count(*n.body); }
        std::size_t operator()(const Term::PrChoice& n) const {
            return 1 + term_instruction_count(*n.lhs) + term_instruction_count(*n.rhs);
        }
    };
    return std::visit(V{}, t.node);
}

}  // namespace pga
