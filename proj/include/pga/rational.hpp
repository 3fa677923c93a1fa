#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>

namespace pga {

using BigInt = boost::multiprecision::cpp_int;

// Exact rational in lowest terms, denominator always >= 1. Equal values have
// identical representations, so operator== is plain field comparison.
class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(long long n) : num_(n), den_(1) {}           // NOLINT(google-explicit-constructor)
    Rational(const BigInt& n) : num_(n), den_(1) {}       // NOLINT(google-explicit-constructor)
    Rational(BigInt n, BigInt d) : num_(std::move(n)), den_(std::move(d)) { normalize(); }

    static Rational zero() { return Rational(0); }
    static Rational one() { return Rational(1); }

    const BigInt& num() const { return num_; }
    const BigInt& den() const { return den_; }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.num_, a.den_ * b.den_);
    }
    friend Rational operator-(const Rational& a) {
        Rational r;
        r.num_ = -a.num_;
        r.den_ = a.den_;
        return r;
    }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return a.num_ * b.den_ < b.num_ * a.den_;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

    bool is_zero() const { return num_ == 0; }

    std::string str() const {
        std::string s = num_.str();
        if (den_ != 1) s += "/" + den_.str();
        return s;
    }

    // Six-decimal approximation, advisory only; all decisions use exact values.
    std::string approx() const;

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

private:
    void normalize() {
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        if (den_ == 0) den_ = 1;  // never constructed this way by meadow ops (inverse is total)
        BigInt g = boost::multiprecision::gcd(num_ < 0 ? BigInt(-num_) : num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
        if (num_ == 0) den_ = 1;
    }

    BigInt num_;
    BigInt den_;
};

// Meadow operations: the multiplicative inverse is total with 0^-1 = 0.
inline Rational minv(const Rational& x) {
    if (x.is_zero()) return Rational::zero();
    return Rational(x.den(), x.num());
}

inline Rational signum(const Rational& x) {
    if (x.num() > 0) return Rational(1);
    if (x.num() < 0) return Rational(-1);
    return Rational(0);
}

inline Rational rat_min(const Rational& a, const Rational& b) { return a <= b ? a : b; }
inline Rational rat_max(const Rational& a, const Rational& b) { return a >= b ? a : b; }

// max(0, min(1, q)): clamp applied to every probability argument.
inline Rational mkprob(const Rational& q) {
    return rat_max(Rational(0), rat_min(Rational(1), q));
}

inline Rational numeral(std::uint64_t n) { return Rational(BigInt(n)); }

// q equals the numeral of some natural n -> n, otherwise nothing.
inline std::optional<BigInt> as_natural(const Rational& q) {
    if (q.den() != 1 || q.num() < 0) return std::nullopt;
    return q.num();
}

inline Rational pow_nat(const Rational& x, std::uint64_t n) {
    Rational r(1);
    Rational b = x;
    while (n > 0) {
        if (n & 1) r *= b;
        b *= b;
        n >>= 1;
    }
    return r;
}

inline std::string Rational::approx() const {
    // Round-half-away (sign-symmetric) at six decimals.
    BigInt scaled = num_ * 1000000;
    BigInt q = scaled / den_;
    BigInt r = scaled % den_;
    if (r < 0) r = -r;
    if (2 * r >= den_) q += (num_ < 0 ? -1 : 1);
    bool neg = q < 0;
    if (neg) q = -q;
    std::string digits = q.str();
    if (digits.size() <= 6) digits.insert(0, 7 - digits.size(), '0');
    digits.insert(digits.size() - 6, ".");
    return (neg ? "-" : "") + digits;
}

}  // namespace pga
