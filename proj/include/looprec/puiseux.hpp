#pragma once

#include <optional>

#include "polynomial.hpp"
#include "series.hpp"

namespace looprec {

// Ramified truncated series: sum_k c_k t^{k/e} with e in {1,2}, t the local variable.
// The underlying Series stores the coefficient of t^{k/e} at integer exponent k.
// `at_infinity` flags that t = 1/x (so t^{k/e} reads x^{-k/e}); otherwise t = x - center.
template <class R>
class Puiseux {
public:
    Puiseux() : e_(1) {}
    Puiseux(int e, Series<R> s, bool at_infinity = false)
        : e_(e), s_(std::move(s)), at_inf_(at_infinity) {
        if (e != 1 && e != 2) throw calc_error("InvalidSpec", "ramification index must be 1 or 2");
    }

    int ramification() const { return e_; }
    bool at_infinity() const { return at_inf_; }
    const Series<R>& series() const { return s_; }
    bool is_zero() const { return s_.is_zero(); }

    // Coefficient of t^{num/den}; zero unless den divides e.
    R coeff(int num, int den = 1) const {
        if (e_ % den != 0) return R(0);
        return s_.at_or_zero(num * (e_ / den));
    }

    Puiseux operator+(const Puiseux& o) const { return binop(o, [](auto& a, auto& b) { return a + b; }); }
    Puiseux operator-(const Puiseux& o) const { return binop(o, [](auto& a, auto& b) { return a - b; }); }
    Puiseux operator*(const Puiseux& o) const { return binop(o, [](auto& a, auto& b) { return a * b; }); }
    Puiseux operator/(const Puiseux& o) const { return binop(o, [](auto& a, auto& b) { return a / b; }); }
    bool operator==(const Puiseux& o) const { return (*this - o).is_zero(); }

    // Re-express with ramification 2 (exponents doubled underneath).
    Puiseux lift() const {
        if (e_ == 2) return *this;
        return Puiseux(2, stretch2(s_), at_inf_);
    }

    std::string str() const {
        std::string s = s_.str();
        if (e_ == 2) s += "  [exponents in halves]";
        if (at_inf_) s += "  [t = 1/x]";
        return s;
    }

private:
    int e_;
    Series<R> s_;
    bool at_inf_ = false;

    static Series<R> stretch2(const Series<R>& s) {
        const auto& c = s.coeff_data();
        std::vector<R> out;
        out.reserve(2 * c.size());
        for (size_t i = 0; i < c.size(); ++i) {
            out.push_back(c[i]);
            if (i + 1 < c.size()) out.push_back(R(0));
        }
        int ord = s.order() >= Series<R>::EXACT ? Series<R>::EXACT : 2 * s.order();
        return Series<R>(2 * s.low(), std::move(out), ord, s.var_name());
    }

    template <class F>
    Puiseux binop(const Puiseux& o, F&& f) const {
        if (at_inf_ != o.at_inf_ && !s_.is_zero() && !o.s_.is_zero())
            throw calc_error("InvalidSpec", "mixing finite-point and infinity expansions");
        if (e_ == o.e_) return Puiseux(e_, f(s_, o.s_), at_inf_ || o.at_inf_);
        Series<R> a = e_ == 1 ? stretch2(s_) : s_;
        Series<R> b = o.e_ == 1 ? stretch2(o.s_) : o.s_;
        return Puiseux(2, f(a, b), at_inf_ || o.at_inf_);
    }
};

// sqrt of sigma expanded around a finite center (t = x - center) or infinity (t = 1/x),
// to the requested order in t^{1/e}. Branch: leading coefficient is the principal root of
// sigma's leading coefficient (so at infinity, sqrt(sigma) ~ +x^{deg/2} for monic sigma).
template <class R>
Puiseux<R> sqrt_series(const Polynomial<R>& sigma,
                       std::optional<std::type_identity_t<R>> center, int order) {
    if (sigma.is_zero()) throw calc_error("InvalidSpec", "sqrt of the zero polynomial");
    bool at_inf = !center.has_value();
    Series<R> f;
    if (at_inf) {
        const auto& c = sigma.coeffs();
        std::vector<R> rev(c.rbegin(), c.rend());
        f = Series<R>(-sigma.degree(), std::move(rev), Series<R>::EXACT);
    } else {
        Polynomial<R> shifted = sigma.compose(Polynomial<R>::x() + Polynomial<R>(*center));
        f = Series<R>(0, shifted.coeffs(), Series<R>::EXACT);
        if (!f.is_zero() && f.valuation() >= 2)
            throw calc_error("MultipleRoot", "sigma has a multiple root at the center");
    }
    int e = (f.valuation() % 2 == 0) ? 1 : 2;
    if (e == 2) {
        // exponents k become 2k so that the square root lives at integer exponents
        const auto& c = f.coeff_data();
        std::vector<R> out;
        for (size_t i = 0; i < c.size(); ++i) {
            out.push_back(c[i]);
            if (i + 1 < c.size()) out.push_back(R(0));
        }
        f = Series<R>(2 * f.valuation(), std::move(out), Series<R>::EXACT);
    }
    int target = e * order;
    Series<R> trunc(f.low(), f.coeff_data(), std::max(target * 2 + std::abs(f.low()) + 4,
                                                      f.low() + (int)f.coeff_data().size()),
                    f.var_name());
    auto root = trunc.try_sqrt();
    if (!root)
        throw calc_error("PrecisionLoss", "no square root with coefficients in this ring");
    return Puiseux<R>(e, root->truncate(target), at_inf);
}

} // namespace looprec
