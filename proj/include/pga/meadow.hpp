#pragma once

#include <cstdint>
#include <memory>
#include <variant>

#include "pga/rational.hpp"

namespace pga {

// Expression over the signed cancellation meadow signature, plus the usual
// derived forms (subtraction, division, numerals, natural-exponent powers).
// Expressions are evaluated eagerly to Rational; there is no symbolic theory.
struct MeadowExpr;
using MeadowExprPtr = std::shared_ptr<const MeadowExpr>;

struct MeadowExpr {
    struct Zero {};
    struct One {};
    struct Add { MeadowExprPtr lhs, rhs; };
    struct Mul { MeadowExprPtr lhs, rhs; };
    struct Neg { MeadowExprPtr arg; };
    struct Inv { MeadowExprPtr arg; };      // total: inverse of zero is zero
    struct Signum { MeadowExprPtr arg; };
    struct Sub { MeadowExprPtr lhs, rhs; };
    struct Div { MeadowExprPtr lhs, rhs; };
    struct Numeral { BigInt n; };           // n >= 0
    struct PowNat { MeadowExprPtr base; std::uint64_t exp; };

    std::variant<Zero, One, Add, Mul, Neg, Inv, Signum, Sub, Div, Numeral, PowNat> node;
};

MeadowExprPtr mk_zero();
MeadowExprPtr mk_one();
MeadowExprPtr mk_add(MeadowExprPtr a, MeadowExprPtr b);
MeadowExprPtr mk_mul(MeadowExprPtr a, MeadowExprPtr b);
MeadowExprPtr mk_neg(MeadowExprPtr a);
MeadowExprPtr mk_inv(MeadowExprPtr a);
MeadowExprPtr mk_signum(MeadowExprPtr a);
MeadowExprPtr mk_sub(MeadowExprPtr a, MeadowExprPtr b);
MeadowExprPtr mk_div(MeadowExprPtr a, MeadowExprPtr b);
MeadowExprPtr mk_numeral(BigInt n);
MeadowExprPtr mk_pow(MeadowExprPtr base, std::uint64_t exp);

// Total evaluation; division through the total inverse, signum in {-1,0,1}.
Rational eval(const MeadowExpr& e);

}  // namespace pga
