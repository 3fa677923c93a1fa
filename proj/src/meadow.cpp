#include "pga/meadow.hpp"

namespace pga {

namespace {
template <typename T>
MeadowExprPtr wrap(T node) {
    auto e = std::make_shared<MeadowExpr>();
    e->node = std::move(node);
    return e;
}
}  // namespace

MeadowExprPtr mk_zero() { return wrap(MeadowExpr::Zero{}); }
MeadowExprPtr mk_one() { return wrap(MeadowExpr::One{}); }
MeadowExprPtr mk_add(MeadowExprPtr a, MeadowExprPtr b) { return wrap(MeadowExpr::Add{std::move(a), std::move(b)}); }
MeadowExprPtr mk_mul(MeadowExprPtr a, MeadowExprPtr b) { return wrap(MeadowExpr::Mul{std::move(a), std::move(b)}); }
MeadowExprPtr mk_neg(MeadowExprPtr a) { return wrap(MeadowExpr::Neg{std::move(a)}); }
MeadowExprPtr mk_inv(MeadowExprPtr a) { return wrap(MeadowExpr::Inv{std::move(a)}); }
MeadowExprPtr mk_signum(MeadowExprPtr a) { return wrap(MeadowExpr::Signum{std::move(a)}); }
MeadowExprPtr mk_sub(MeadowExprPtr a, MeadowExprPtr b) { return wrap(MeadowExpr::Sub{std::move(a), std::move(b)}); }
MeadowExprPtr mk_div(MeadowExprPtr a, MeadowExprPtr b) { return wrap(MeadowExpr::Div{std::move(a), std::move(b)}); }
MeadowExprPtr mk_numeral(BigInt n) { return wrap(MeadowExpr::Numeral{std::move(n)}); }
MeadowExprPtr mk_pow(MeadowExprPtr base, std::uint64_t exp) { return wrap(MeadowExpr::PowNat{std::move(base), exp}); }

Rational eval(const MeadowExpr& e) {
    struct V {
        Rational operator()(const MeadowExpr::Zero&) const { return Rational(0); }
        Rational operator()(const MeadowExpr::One&) const { return Rational(1); }
        Rational operator()(const MeadowExpr::Add& n) const { return eval(*n.lhs) + eval(*n.rhs); }
        Rational operator()(const MeadowExpr::Mul& n) const { return eval(*n.lhs) * eval(*n.rhs); }
        Rational operator()(const MeadowExpr::Neg& n) const { return -eval(*n.arg); }
        Rational operator()(const MeadowExpr::Inv& n) const { return minv(eval(*n.arg)); }
        Rational operator()(const MeadowExpr::Signum& n) const { return signum(eval(*n.arg)); }
        Rational operator()(const MeadowExpr::Sub& n) const { return eval(*n.lhs) - eval(*n.rhs); }
        Rational operator()(const MeadowExpr::Div& n) const { return eval(*n.lhs) * minv(eval(*n.rhs)); }
        Rational operator()(const MeadowExpr::Numeral& n) const { return Rational(n.n); }
        Rational operator()(const MeadowExpr::PowNat& n) const { return pow_nat(eval(*n.base), n.exp); }
    };
    return std::visit(V{}, e.node);
}

}  // namespace pga
