#include "pga/parser.hpp"

#include <cctype>
#include <limits>

namespace pga {

namespace {

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

class Cursor {
public:
    explicit Cursor(std::string_view text) : text_(text) {}

    void skip_layout() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    bool at_end() {
        skip_layout();
        return pos_ >= text_.size();
    }

    char peek() {
        skip_layout();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    // Lookahead past the current token start without consuming layout rules.
    char peek_raw_at(std::size_t off) {
        skip_layout();
        return pos_ + off < text_.size() ? text_[pos_ + off] : '\0';
    }

    bool eat(char c) {
        if (peek() != c) return false;
        advance();
        return true;
    }

    void expect(char c, const std::string& what) {
        if (!eat(c)) fail("expected '" + std::string(1, c) + "' " + what);
    }

    bool eat_word(std::string_view w) {
        skip_layout();
        if (text_.substr(pos_).substr(0, w.size()) != w) return false;
        for (std::size_t i = 0; i < w.size(); ++i) advance();
        return true;
    }

    std::string ident() {
        skip_layout();
        std::string out;
        while (pos_ < text_.size() && is_ident_char(text_[pos_])) {
            out += text_[pos_];
            advance();
        }
        if (out.empty()) fail("expected an identifier");
        return out;
    }

    std::uint64_t natural_literal() {
        skip_layout();
        if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
            fail("expected a decimal natural");
        BigInt v = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            v = v * 10 + (text_[pos_] - '0');
            advance();
        }
        if (v > std::numeric_limits<std::uint64_t>::max()) fail("natural literal out of range");
        return static_cast<std::uint64_t>(v);
    }

    [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, line_, col_); }

private:
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

class Parser {
public:
    explicit Parser(std::string_view text) : cur_(text) {}

    TermPtr parse_program() {
        TermPtr t = parse_term();
        if (!cur_.at_end()) cur_.fail("unexpected trailing input");
        return t;
    }

    MeadowExprPtr parse_expr_program() {
        MeadowExprPtr e = parse_expr();
        if (!cur_.at_end()) cur_.fail("unexpected trailing input");
        return e;
    }

private:
    // term := factor (';' term)?   -- right-associated
    TermPtr parse_term() {
        TermPtr lhs = parse_factor();
        if (cur_.eat(';')) return mk_concat(std::move(lhs), parse_term());
        return lhs;
    }

    TermPtr parse_factor() {
        TermPtr t = parse_primary();
        while (cur_.eat('*')) t = mk_rep(std::move(t));
        return t;
    }

    TermPtr parse_primary() {
        char c = cur_.peek();
        if (c == '(') {
            cur_.expect('(', "");
            TermPtr t = parse_term();
            cur_.expect(')', "to close '('");
            return t;
        }
        if (c == '{') return parse_choice();
        if (c == '[') return mk_instr(parse_unit());
        return mk_instr(parse_instruction());
    }

    // {P}+_(p){Q}
    TermPtr parse_choice() {
        cur_.expect('{', "");
        TermPtr lhs = parse_term();
        require_choice_branch(*lhs);
        cur_.expect('}', "to close choice branch");
        if (!cur_.eat_word("+_")) cur_.fail("expected '+_' after choice branch");
        cur_.expect('(', "before choice probability");
        Rational p = eval(*parse_expr());
        cur_.expect(')', "after choice probability");
        cur_.expect('{', "before second choice branch");
        TermPtr rhs = parse_term();
        require_choice_branch(*rhs);
        cur_.expect('}', "to close choice branch");
        return mk_prchoice(std::move(p), std::move(lhs), std::move(rhs));
    }

    void require_choice_branch(const Term& t) {
        if (!term_to_instruction_list(t))
            cur_.fail("repetition and nested choice braces are not allowed inside a choice branch");
    }

    Instruction parse_unit() {
        cur_.expect('[', "");
        TermPtr body = parse_term();
        cur_.expect(']', "to close unit instruction");
        auto list = term_to_instruction_list(*body);
        if (!list) cur_.fail("repetition is not allowed inside a unit instruction");
        return Instruction{UnitInstr{std::move(*list)}};
    }

    Instruction parse_instruction() {
        char c = cur_.peek();
        if (c == '!') {
            cur_.expect('!', "");
            return Instruction{Halt{}};
        }
        if (c == '#') {
            cur_.expect('#', "");
            return parse_jump();
        }
        if (c == '+' || c == '-') {
            bool positive = c == '+';
            cur_.eat(c);
            return parse_basic(positive ? Polarity::Pos : Polarity::Neg);
        }
        if (is_ident_char(c)) return parse_basic(Polarity::None);
        cur_.fail("expected an instruction");
    }

    enum class Polarity { None, Pos, Neg };

    Instruction parse_basic(Polarity pol) {
        std::string name = cur_.ident();
        if (name == "prb") {
            ProbArg q;
            if (cur_.peek() == '(') {
                cur_.expect('(', "");
                q = eval(*parse_expr());
                cur_.expect(')', "after prb argument");
            }
            switch (pol) {
                case Polarity::None: return Instruction{PrbPlain{std::move(q)}};
                case Polarity::Pos: return Instruction{PrbPos{std::move(q)}};
                case Polarity::Neg: return Instruction{PrbNeg{std::move(q)}};
            }
        }
        std::string first = name + parse_name_arg();
        BasicAction action;
        if (cur_.eat('.')) {
            action.focus = first;
            action.method = cur_.ident() + parse_name_arg();
        } else {
            if (first != name)
                cur_.fail("a parenthesized argument on a focus requires a '.method'");
            action.method = first;
        }
        switch (pol) {
            case Polarity::None: return Instruction{Plain{std::move(action)}};
            case Polarity::Pos: return Instruction{PosTest{std::move(action)}};
            case Polarity::Neg: return Instruction{NegTest{std::move(action)}};
        }
        cur_.fail("unreachable");
    }

    // Optional rational argument attached to a focus or method name; the value
    // is re-rendered canonically so equal arguments compare equal as strings.
    std::string parse_name_arg() {
        if (cur_.peek() != '(') return "";
        cur_.expect('(', "");
        Rational q = eval(*parse_expr());
        cur_.expect(')', "after name argument");
        return "(" + q.str() + ")";
    }

    Instruction parse_jump() {
        char c = cur_.peek();
        if (c == 'H' || c == 'G') {
            std::string kind;
            while (cur_.peek() == 'H' || cur_.peek() == 'G' || cur_.peek() == 'U')
                kind += cur_.peek(), cur_.eat(cur_.peek());
            if (kind == "H") {
                cur_.expect('{', "after #H");
                std::uint64_t k = parse_natural_arg();
                cur_.expect('}', "after #H argument");
                return Instruction{JumpH{k}};
            }
            if (kind == "G" || kind == "GU") {
                cur_.expect('{', "after jump kind");
                ProbArg q;
                if (cur_.peek() != '}') q = eval(*parse_expr());
                cur_.expect('}', "after probability argument");
                cur_.expect('{', "before jump distance");
                std::uint64_t n = parse_natural_arg();
                cur_.expect('}', "after jump distance");
                if (kind == "G") return Instruction{JumpG{std::move(q), n}};
                return Instruction{JumpGU{std::move(q), n}};
            }
            cur_.fail("unknown probabilistic jump kind '#" + kind + "'");
        }
        if (c == '(') {
            cur_.expect('(', "");
            Rational v = eval(*parse_expr());
            cur_.expect(')', "after jump expression");
            return Instruction{Jump{to_natural(v)}};
        }
        return Instruction{Jump{cur_.natural_literal()}};
    }

    std::uint64_t parse_natural_arg() {
        Rational v = eval(*parse_expr());
        return to_natural(v);
    }

    std::uint64_t to_natural(const Rational& v) {
        auto n = as_natural(v);
        if (!n) cur_.fail("argument " + v.str() + " is not a natural number");
        if (*n > std::numeric_limits<std::uint64_t>::max()) cur_.fail("natural argument out of range");
        return static_cast<std::uint64_t>(*n);
    }

    // Meadow expression grammar: + - * / ^ sgn(e) integer literals, totals.
    MeadowExprPtr parse_expr() {
        MeadowExprPtr lhs = parse_expr_mul();
        for (;;) {
            if (cur_.peek() == '+' && cur_.peek_raw_at(1) != '_') {
                cur_.eat('+');
                lhs = mk_add(std::move(lhs), parse_expr_mul());
            } else if (cur_.eat('-')) {
                lhs = mk_sub(std::move(lhs), parse_expr_mul());
            } else {
                return lhs;
            }
        }
    }

    MeadowExprPtr parse_expr_mul() {
        MeadowExprPtr lhs = parse_expr_unary();
        for (;;) {
            if (cur_.eat('*')) {
                lhs = mk_mul(std::move(lhs), parse_expr_unary());
            } else if (cur_.eat('/')) {
                lhs = mk_div(std::move(lhs), parse_expr_unary());
            } else {
                return lhs;
            }
        }
    }

    MeadowExprPtr parse_expr_unary() {
        if (cur_.eat('-')) return mk_neg(parse_expr_unary());
        return parse_expr_postfix();
    }

    MeadowExprPtr parse_expr_postfix() {
        MeadowExprPtr e = parse_expr_atom();
        while (cur_.eat('^')) e = mk_pow(std::move(e), cur_.natural_literal());
        return e;
    }

    MeadowExprPtr parse_expr_atom() {
        char c = cur_.peek();
        if (c == '(') {
            cur_.expect('(', "");
            MeadowExprPtr e = parse_expr();
            cur_.expect(')', "to close '('");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            BigInt v = 0;
            while (std::isdigit(static_cast<unsigned char>(cur_.peek()))) {
                v = v * 10 + (cur_.peek() - '0');
                cur_.eat(cur_.peek());
            }
            return mk_numeral(std::move(v));
        }
        if (is_ident_char(c)) {
            std::string name = cur_.ident();
            if (name == "sgn") {
                cur_.expect('(', "after sgn");
                MeadowExprPtr e = parse_expr();
                cur_.expect(')', "to close sgn");
                return mk_signum(std::move(e));
            }
            cur_.fail("unknown function '" + name + "' in expression");
        }
        cur_.fail("expected an expression");
    }

    Cursor cur_;
};

}  // namespace

TermPtr parse(std::string_view text) { return Parser(text).parse_program(); }

MeadowExprPtr parse_meadow(std::string_view text) { return Parser(text).parse_expr_program(); }

std::optional<std::vector<Instruction>> term_to_instruction_list(const Term& t) {
    std::vector<Instruction> out;
    bool ok = true;
    auto walk = [&](auto&& self, const Term& n) -> void {
        if (!ok) return;
        if (const auto* i = std::get_if<Term::Instr>(&n.node)) {
            out.push_back(i->ins);
        } else if (const auto* c = std::get_if<Term::Concat>(&n.node)) {
            self(self, *c->lhs);
            self(self, *c->rhs);
        } else {
            ok = false;  // Rep or PrChoice
        }
    };
    walk(walk, t);
    if (!ok) return std::nullopt;
    return out;
}

}  // namespace pga
