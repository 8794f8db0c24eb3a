#pragma once

#include <string>

#include "polynomial.hpp"
#include "series.hpp"

namespace looprec {

// Rational function num/den over a field R, reduced by gcd on construction.
template <class R>
class RationalFunction {
public:
    RationalFunction() : num_(), den_(1) {}
    RationalFunction(long n) : num_(n), den_(1) {}
    RationalFunction(const R& r) : num_(r), den_(1) {}
    RationalFunction(const Polynomial<R>& p) : num_(p), den_(1) {}
    RationalFunction(Polynomial<R> num, Polynomial<R> den)
        : num_(std::move(num)), den_(std::move(den)) {
        if (den_.is_zero()) throw calc_error("DivisionByZero", "zero denominator");
        reduce();
    }

    static RationalFunction x() { return RationalFunction(Polynomial<R>::x()); }

    const Polynomial<R>& num() const { return num_; }
    const Polynomial<R>& den() const { return den_; }
    bool is_zero() const { return num_.is_zero(); }
    bool is_polynomial() const { return den_.degree() == 0; }

    RationalFunction operator+(const RationalFunction& o) const {
        return RationalFunction(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
    }
    RationalFunction operator-(const RationalFunction& o) const { return *this + (-o); }
    RationalFunction operator-() const {
        RationalFunction r;
        r.num_ = -num_;
        r.den_ = den_;
        return r;
    }
    RationalFunction operator*(const RationalFunction& o) const {
        return RationalFunction(num_ * o.num_, den_ * o.den_);
    }
    RationalFunction operator/(const RationalFunction& o) const {
        if (o.is_zero()) throw calc_error("DivisionByZero", "rational-function division by zero");
        return RationalFunction(num_ * o.den_, den_ * o.num_);
    }
    bool operator==(const RationalFunction& o) const {
        return (num_ * o.den_ - o.num_ * den_).is_zero();
    }
    bool operator!=(const RationalFunction& o) const { return !(*this == o); }

    RationalFunction derivative() const {
        return RationalFunction(num_.derivative() * den_ - num_ * den_.derivative(),
                                den_ * den_);
    }

    template <class T>
    T eval(const T& x) const {
        return num_.template eval<T>(x) / den_.template eval<T>(x);
    }
    R eval_r(const R& x) const {
        R d = den_.eval_r(x);
        if (d.is_zero()) throw calc_error("DivisionByZero", "evaluation at a pole");
        return num_.eval_r(x) / d;
    }

    // Substitute x -> g(x).
    RationalFunction compose(const RationalFunction& g) const {
        RationalFunction acc(0);
        const auto& nc = num_.coeffs();
        for (int k = (int)nc.size() - 1; k >= 0; --k)
            acc = acc * g + RationalFunction(nc[k]);
        RationalFunction accd(0);
        const auto& dc = den_.coeffs();
        for (int k = (int)dc.size() - 1; k >= 0; --k)
            accd = accd * g + RationalFunction(dc[k]);
        return acc / accd;
    }

    // Laurent expansion around x = a in the local variable t = x - a, truncated at `order`.
    Series<R> laurent_at(const R& a, int order) const {
        Polynomial<R> shift = Polynomial<R>::x() + Polynomial<R>(a);
        Polynomial<R> n = num_.compose(shift), d = den_.compose(shift);
        Series<R> ns(0, n.coeffs(), Series<R>::EXACT);
        Series<R> ds(0, d.coeffs(), Series<R>::EXACT);
        if (ns.is_zero()) return Series<R>(0, {}, order);
        return (ns * ds.inverse(order + std::max(0, -ns.valuation() + ds.valuation()) + 4))
            .truncate(order);
    }

    // Expansion at infinity in the local variable t = 1/x.
    Series<R> at_infinity(int order) const {
        auto rev = [](const Polynomial<R>& p) {
            auto c = p.coeffs();
            std::vector<R> r(c.rbegin(), c.rend());
            return Series<R>(0, std::move(r), Series<R>::EXACT);
        };
        if (num_.is_zero()) return Series<R>(0, {}, order);
        Series<R> n = rev(num_).shift(-num_.degree());
        Series<R> d = rev(den_).shift(-den_.degree());
        // the product with n (valuation -deg num) must still be known to `order`
        return (n * d.inverse(order + num_.degree() + 4)).truncate(order);
    }

    // Coefficient of 1/(x-a): exact residue (0 at regular points).
    R residue_at(const R& a) const { return laurent_at(a, 0).at_or_zero(-1); }
    // Residue "at infinity" with the orientation that makes 1/x have residue +1
    // (i.e. the coefficient of x^{-1} in the expansion at infinity).
    R residue_at_infinity() const { return at_infinity(2).at_or_zero(1); }

    std::string str(const std::string& var = "x") const {
        if (is_polynomial() && den_.at(0) == R(1)) return num_.str(var);
        return "(" + num_.str(var) + ")/(" + den_.str(var) + ")";
    }

private:
    Polynomial<R> num_, den_;

    void reduce() {
        if (num_.is_zero()) {
            den_ = Polynomial<R>(1);
            return;
        }
        Polynomial<R> g = Polynomial<R>::gcd(num_, den_);
        if (g.degree() > 0) {
            num_ = num_.divmod(g).first;
            den_ = den_.divmod(g).first;
        }
        // normalize: monic denominator
        R lead = den_.lead();
        if (!(lead == R(1))) {
            R inv = R(1) / lead;
            num_ = num_ * inv;
            den_ = den_ * inv;
        }
    }
};

template <class R>
RationalFunction<R> operator*(const R& s, const RationalFunction<R>& f) {
    return RationalFunction<R>(s) * f;
}

// Residue primitive: coefficient of (x - point)^{-1}, exact in exact rings.
template <class R>
R laurent_residue(const RationalFunction<R>& f, const R& point) {
    return f.residue_at(point);
}

} // namespace looprec
