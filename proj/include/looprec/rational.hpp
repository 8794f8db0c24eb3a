#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>

#include "ring.hpp"

namespace looprec {

// Arbitrary-precision rational, stored canonically (lowest terms, positive denominator).
// Thin wrapper over GMP's mpq_class so that generic template code sees plain value
// semantics instead of gmpxx expression templates.
class Rational {
public:
    Rational() : v_(0) {}
    Rational(long n) : v_(n) {}
    Rational(long n, long d) : v_(n, d) { v_.canonicalize(); }
    explicit Rational(const mpq_class& q) : v_(q) { v_.canonicalize(); }
    explicit Rational(const mpz_class& n) : v_(n) {}

    // Parses "p", "p/q", or a decimal like "-0.125".
    static Rational parse(const std::string& s) {
        auto dot = s.find('.');
        if (dot == std::string::npos) {
            mpq_class q(s, 10);
            q.canonicalize();
            return Rational(q);
        }
        std::string digits = s.substr(0, dot) + s.substr(dot + 1);
        mpz_class num(digits, 10);
        mpz_class den(1);
        for (size_t i = dot + 1; i < s.size(); ++i) den *= 10;
        mpq_class q(num, den);
        q.canonicalize();
        return Rational(q);
    }

    Rational operator+(const Rational& o) const { return Rational(mpq_class(v_ + o.v_)); }
    Rational operator-(const Rational& o) const { return Rational(mpq_class(v_ - o.v_)); }
    Rational operator*(const Rational& o) const { return Rational(mpq_class(v_ * o.v_)); }
    Rational operator/(const Rational& o) const {
        if (o.is_zero()) throw calc_error("DivisionByZero", "rational division by zero");
        return Rational(mpq_class(v_ / o.v_));
    }
    Rational operator-() const { return Rational(mpq_class(-v_)); }
    Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
    Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
    Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }

    bool operator==(const Rational& o) const { return v_ == o.v_; }
    bool operator!=(const Rational& o) const { return v_ != o.v_; }
    bool operator<(const Rational& o) const { return v_ < o.v_; }
    bool operator>(const Rational& o) const { return v_ > o.v_; }

    bool is_zero() const { return v_ == 0; }
    int sign() const { return sgn(v_); }

    std::string str() const { return v_.get_str(); }

    std::optional<Rational> try_sqrt() const {
        if (sgn(v_) < 0) return std::nullopt;
        if (v_ == 0) return Rational(0);
        mpz_class n = v_.get_num(), d = v_.get_den();
        if (!mpz_perfect_square_p(n.get_mpz_t()) || !mpz_perfect_square_p(d.get_mpz_t()))
            return std::nullopt;
        mpz_class rn, rd;
        mpz_sqrt(rn.get_mpz_t(), n.get_mpz_t());
        mpz_sqrt(rd.get_mpz_t(), d.get_mpz_t());
        return Rational(mpq_class(rn, rd));
    }

    const mpq_class& raw() const { return v_; }
    double to_double() const { return v_.get_d(); }

private:
    mpq_class v_;
};

inline Rational operator*(long a, const Rational& b) { return Rational(a) * b; }

} // namespace looprec
