#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pga/rational.hpp"

namespace pga {

// Basic instruction f.m: focus names the service, method is the instruction
// proper. A bare action `a` has an empty focus. Foci and methods may carry a
// parenthesized rational argument (`random(2/3).get`, `random.get(2/3)`), the
// shape service-call projection emits.
struct BasicAction {
    std::string focus;   // "" when absent
    std::string method;

    std::string label() const { return focus.empty() ? method : focus + "." + method; }
    bool operator==(const BasicAction&) const = default;
    bool operator<(const BasicAction& o) const {
        return focus != o.focus ? focus < o.focus : method < o.method;
    }
};

struct Instruction;

// A missing probability argument is the bare form (prb, #G{}{k}, #GU{}{l});
// it prints bare and elaborates to 1/2 everywhere a value is needed.
using ProbArg = std::optional<Rational>;

struct Plain    { BasicAction action;                  bool operator==(const Plain&) const = default; };
struct PosTest  { BasicAction action;                  bool operator==(const PosTest&) const = default; };
struct NegTest  { BasicAction action;                  bool operator==(const NegTest&) const = default; };
struct Jump     { std::uint64_t dist = 0;              bool operator==(const Jump&) const = default; };
struct Halt     {                                      bool operator==(const Halt&) const = default; };
struct PrbPlain { ProbArg q;                           bool operator==(const PrbPlain&) const = default; };
struct PrbPos   { ProbArg q;                           bool operator==(const PrbPos&) const = default; };
struct PrbNeg   { ProbArg q;                           bool operator==(const PrbNeg&) const = default; };
struct JumpH    { std::uint64_t k = 0;                 bool operator==(const JumpH&) const = default; };
struct JumpG    { ProbArg q; std::uint64_t k = 0;      bool operator==(const JumpG&) const = default; };
struct JumpGU   { ProbArg q; std::uint64_t step = 0;   bool operator==(const JumpGU&) const = default; };
struct UnitInstr {
    std::vector<Instruction> body;  // nonempty, repetition-free by construction
    friend bool operator==(const UnitInstr&, const UnitInstr&);
};

struct Instruction {
    std::variant<Plain, PosTest, NegTest, Jump, Halt, PrbPlain, PrbPos, PrbNeg,
                 JumpH, JumpG, JumpGU, UnitInstr>
        node;

    friend bool operator==(const Instruction&, const Instruction&);
};

// Elaborated probability of a prb-style argument (bare form = 1/2), clamped.
inline Rational prob_of(const ProbArg& q) {
    return mkprob(q ? *q : Rational(BigInt(1), BigInt(2)));
}

// Syntax tree: instructions under concatenation and repetition, plus the
// probabilistic-choice sugar {P}+_(p){Q} that desugars to a prb test over
// unit instructions.
struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
    struct Instr { Instruction ins; };
    struct Concat { TermPtr lhs, rhs; };
    struct Rep { TermPtr body; };
    struct PrChoice { Rational p; TermPtr lhs, rhs; };
    std::variant<Instr, Concat, Rep, PrChoice> node;
};

TermPtr mk_instr(Instruction ins);
TermPtr mk_concat(TermPtr lhs, TermPtr rhs);
TermPtr mk_rep(TermPtr body);
TermPtr mk_prchoice(Rational p, TermPtr lhs, TermPtr rhs);
TermPtr term_from_list(const std::vector<Instruction>& instrs);

bool term_equal(const Term& a, const Term& b);

// First canonical form: finite prefix plus optional repeating period.
// Canonical instances are unit-free, the period is repetition-minimal and the
// prefix minimal under rotation absorption; `normalize` (transform.hpp)
// establishes those invariants.
struct InstructionSequence {
    std::vector<Instruction> prefix;
    std::vector<Instruction> period;

    std::size_t size() const { return prefix.size() + period.size(); }
    friend bool operator==(const InstructionSequence& a, const InstructionSequence& b) {
        return a.prefix == b.prefix && a.period == b.period;
    }
};

// First n instructions of the denoted stream (fewer if the stream is finite).
std::vector<Instruction> expand(const InstructionSequence& s, std::size_t n);

TermPtr to_term(const InstructionSequence& s);

std::string print_instruction(const Instruction& ins);
std::string print_term(const Term& t);
std::string print_sequence(const InstructionSequence& s);

// Primitive-instruction count of a term: units count their payload; a choice
// counts one for the operator plus both branches.
std::size_t term_instruction_count(const Term& t);
std::size_t instruction_count(const Instruction& ins);

}  // namespace pga
